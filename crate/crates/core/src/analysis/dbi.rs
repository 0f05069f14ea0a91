use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};

/// Points with one class label each.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPoints {
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<String>,
}

impl LabeledPoints {
    pub fn new(points: Vec<Vec<f64>>, labels: Vec<String>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        if points.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                actual: labels.len(),
            });
        }
        let dim = points[0].len();
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: p.len(),
            });
        }
        Ok(Self { points, labels })
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    /// Point indices per label, labels in sorted order.
    pub fn groups(&self) -> BTreeMap<&str, Vec<usize>> {
        let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, l) in self.labels.iter().enumerate() {
            groups.entry(l.as_str()).or_default().push(i);
        }
        groups
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterStats {
    pub label: String,
    pub size: usize,
    pub centroid: Vec<f64>,
    /// Mean Euclidean distance of members to the centroid.
    pub scatter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DbiReport {
    pub grouping: String,
    #[serde(rename = "K")]
    pub k: usize,
    pub clusters: Vec<ClusterStats>,
    /// `distances[i][j]` is the centroid distance between clusters `i`, `j`.
    pub distances: Vec<Vec<f64>>,
    pub dbi: f64,
}

impl DbiReport {
    /// Recomputes the index from the stored scatters and distances.
    pub fn recompute(&self) -> f64 {
        dbi_from_parts(&self.clusters, &self.distances)
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn dbi_from_parts(clusters: &[ClusterStats], distances: &[Vec<f64>]) -> f64 {
    let k = clusters.len();
    let total: f64 = (0..k)
        .map(|i| {
            (0..k)
                .filter(|&j| j != i)
                .map(|j| (clusters[i].scatter + clusters[j].scatter) / distances[i][j])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .sum();
    total / k as f64
}

/// Davies-Bouldin index of the labelled clusters; lower is better separated.
///
/// Clusters are ordered by label.
pub fn davies_bouldin(p: &LabeledPoints, grouping: &str) -> Result<DbiReport> {
    let groups = p.groups();
    if groups.len() < 2 {
        return Err(Error::TooFewClusters(groups.len()));
    }
    let dim = p.dim();
    let clusters: Vec<ClusterStats> = groups
        .iter()
        .map(|(label, idx)| {
            let mut centroid = vec![0.0; dim];
            for &i in idx {
                for (c, v) in centroid.iter_mut().zip(&p.points[i]) {
                    *c += v;
                }
            }
            centroid.iter_mut().for_each(|c| *c /= idx.len() as f64);
            let scatter = idx
                .iter()
                .map(|&i| euclidean(&p.points[i], &centroid))
                .sum::<f64>()
                / idx.len() as f64;
            ClusterStats {
                label: label.to_string(),
                size: idx.len(),
                centroid,
                scatter,
            }
        })
        .collect();

    let k = clusters.len();
    let mut distances = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let d = euclidean(&clusters[i].centroid, &clusters[j].centroid);
            if d == 0.0 {
                return Err(Error::DegenerateClusters(
                    clusters[i].label.clone(),
                    clusters[j].label.clone(),
                ));
            }
            distances[i][j] = d;
            distances[j][i] = d;
        }
    }
    let dbi = dbi_from_parts(&clusters, &distances);
    Ok(DbiReport {
        grouping: grouping.to_string(),
        k,
        clusters,
        distances,
        dbi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(points: &[(f64, f64)], labels: &[&str]) -> LabeledPoints {
        LabeledPoints::new(
            points.iter().map(|&(x, y)| vec![x, y]).collect(),
            labels.iter().map(|s| s.to_string()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn hand_example() {
        let p = lp(
            &[(0.0, 0.0), (0.0, 2.0), (10.0, 0.0), (10.0, 2.0)],
            &["a", "a", "b", "b"],
        );
        let r = davies_bouldin(&p, "t").unwrap();
        assert_eq!(r.clusters[0].scatter, 1.0);
        assert_eq!(r.distances[0][1], 10.0);
        assert!((r.dbi - 0.2).abs() <= 1e-12);
        assert_eq!(r.recompute(), r.dbi);
    }

    #[test]
    fn point_clusters_score_zero() {
        let p = lp(&[(1.0, 1.0), (1.0, 1.0), (5.0, 2.0)], &["x", "x", "y"]);
        assert_eq!(davies_bouldin(&p, "t").unwrap().dbi, 0.0);
    }

    #[test]
    fn errors() {
        let p = lp(&[(0.0, 0.0), (1.0, 0.0)], &["a", "a"]);
        assert!(matches!(davies_bouldin(&p, "t"), Err(Error::TooFewClusters(1))));
        let p = lp(
            &[(0.0, 0.0), (2.0, 0.0), (1.0, 1.0), (1.0, -1.0)],
            &["a", "a", "b", "b"],
        );
        match davies_bouldin(&p, "t") {
            Err(Error::DegenerateClusters(a, b)) => assert_eq!((a.as_str(), b.as_str()), ("a", "b")),
            other => panic!("{other:?}"),
        }
        assert!(LabeledPoints::new(vec![], vec![]).is_err());
        assert!(LabeledPoints::new(vec![vec![0.0]], vec![]).is_err());
    }

    #[test]
    fn three_clusters_take_worst_partner() {
        // Clusters at 0, 4 and 100 on a line, each with scatter 1.
        let p = lp(
            &[(-1.0, 0.0), (1.0, 0.0), (3.0, 0.0), (5.0, 0.0), (99.0, 0.0), (101.0, 0.0)],
            &["a", "a", "b", "b", "c", "c"],
        );
        let r = davies_bouldin(&p, "t").unwrap();
        let expected = (2.0 / 4.0 + 2.0 / 4.0 + 2.0 / 96.0) / 3.0;
        assert!((r.dbi - expected).abs() < 1e-15);
    }
}
