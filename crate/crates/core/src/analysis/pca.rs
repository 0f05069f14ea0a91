use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::sha256_hex;

/// Fitted principal axes. `components` rows are orthonormal and ordered by
/// decreasing explained variance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
}

impl PcaModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    /// SHA-256 over the components written row by row with 17 significant
    /// digits.
    pub fn components_digest(&self) -> String {
        let text: String = self
            .components
            .iter()
            .map(|row| {
                row.iter()
                    .map(|v| format!("{v:.16e}"))
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect::<Vec<_>>()
            .join("\n");
        sha256_hex(text.as_bytes())
    }

    /// Inverse of [`pca_project`] for the retained components.
    pub fn reconstruct(&self, projected: &[Vec<f64>]) -> Vec<Vec<f64>> {
        projected
            .iter()
            .map(|y| {
                let mut x = self.mean.clone();
                for (coef, comp) in y.iter().zip(&self.components) {
                    for (xi, ci) in x.iter_mut().zip(comp) {
                        *xi += coef * ci;
                    }
                }
                x
            })
            .collect()
    }
}

fn check_rows(x: &[Vec<f64>], dim: usize) -> Result<()> {
    match x.iter().find(|r| r.len() != dim) {
        Some(r) => Err(Error::DimensionMismatch {
            expected: dim,
            actual: r.len(),
        }),
        None => Ok(()),
    }
}

/// Fits `k` principal components by SVD of the mean-centred data.
///
/// Explained variance is `s² / (N - 1)`. Each component is flipped so its
/// largest-magnitude entry is positive (first such index on ties).
pub fn pca_fit(x: &[Vec<f64>], k: usize) -> Result<PcaModel> {
    let n = x.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let dim = x[0].len();
    check_rows(x, dim)?;
    if k == 0 || k > n.min(dim) {
        return Err(Error::Parameter {
            name: "k",
            reason: format!("must be in 1..={}, got {k}", n.min(dim)),
        });
    }
    let mean: Vec<f64> = (0..dim)
        .map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();
    let centred: Vec<Vec<f64>> = (0..dim)
        .map(|j| x.iter().map(|r| r[j] - mean[j]).collect())
        .collect();
    let (singular, right) = jacobi_svd(centred);

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| singular[b].total_cmp(&singular[a]).then(a.cmp(&b)));

    let mut components = Vec::with_capacity(k);
    let mut explained_variance = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let mut row = right[idx].clone();
        let pivot = row
            .iter()
            .enumerate()
            .fold(0, |best, (i, v)| if v.abs() > row[best].abs() { i } else { best });
        if row[pivot] < 0.0 {
            row.iter_mut().for_each(|v| *v = -*v);
        }
        components.push(row);
        let s = singular[idx];
        explained_variance.push(s * s / (n - 1) as f64);
    }
    Ok(PcaModel {
        mean,
        components,
        explained_variance,
    })
}

/// One-sided Jacobi (Hestenes) SVD. Takes the matrix as a list of columns
/// and returns the singular values with the matching right singular
/// vectors, both indexed by column, unsorted.
///
/// Column pairs are rotated until every pair is orthogonal to working
/// precision; the column norms are then the singular values and the
/// accumulated rotation holds the right singular vectors.
fn jacobi_svd(mut cols: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    const MAX_SWEEPS: usize = 100;
    let d = cols.len();
    let mut v: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..d {
            for q in p + 1..d {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for m in [&mut cols, &mut v] {
                    let (left, right) = m.split_at_mut(q);
                    for (a, b) in left[p].iter_mut().zip(right[0].iter_mut()) {
                        let (x, y) = (*a, *b);
                        *a = c * x - s * y;
                        *b = s * x + c * y;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let singular = cols.iter().map(|c| dot(c, c).sqrt()).collect();
    (singular, v)
}

/// `(X - mean) · componentsᵀ`.
pub fn pca_project(m: &PcaModel, x: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    check_rows(x, m.dim())?;
    Ok(x.iter()
        .map(|row| {
            m.components
                .iter()
                .map(|c| {
                    row.iter()
                        .zip(&m.mean)
                        .zip(c)
                        .map(|((v, mu), ci)| (v - mu) * ci)
                        .sum()
                })
                .collect()
        })
        .collect())
}
