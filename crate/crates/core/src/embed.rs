//! Fixed-weight two-layer graph convolution with mean-pooling readout.
//!
//! Every node starts with the scalar feature 1. Each layer computes
//! `relu(Â · H · W)` with `Â = D̃^{-1/2} (A + I) D̃^{-1/2}`, and the graph
//! embedding is the mean of the final node features. Weights are never
//! trained; they are drawn once from a seeded ChaCha8 stream.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SkeletonGraph;
use crate::io::write_atomic;

pub const HIDDEN: usize = 32;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    fn glorot(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = (6.0 / (rows + cols) as f64).sqrt();
        let data = (0..rows * cols)
            .map(|_| bound * (2.0 * rng.random::<f64>() - 1.0))
            .collect();
        Self { rows, cols, data }
    }
}

/// Layer weights: `w1` is 1×32, `w2` is 32×32. Optional biases are zero
/// unless the caller sets them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GcnWeights {
    pub seed: u64,
    #[serde(rename = "W1")]
    pub w1: Matrix,
    #[serde(rename = "W2")]
    pub w2: Matrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias: Option<(Vec<f64>, Vec<f64>)>,
}

impl GcnWeights {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("weights serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let w: Self = serde_json::from_str(text)
            .map_err(|e| Error::parse("<weights>", "weights json", e.to_string()))?;
        w.validate()?;
        Ok(w)
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json().as_bytes())
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::parse(path, "weights json", e.to_string()))
    }

    fn validate(&self) -> Result<()> {
        let shape_ok = |m: &Matrix, r, c| m.rows == r && m.cols == c && m.data.len() == r * c;
        if !shape_ok(&self.w1, 1, HIDDEN) || !shape_ok(&self.w2, HIDDEN, HIDDEN) {
            return Err(Error::Invalid("weights must be 1x32 and 32x32".into()));
        }
        if let Some((b1, b2)) = &self.bias {
            if b1.len() != HIDDEN || b2.len() != HIDDEN {
                return Err(Error::Invalid("biases must have 32 entries".into()));
            }
        }
        let all = self.w1.data.iter().chain(&self.w2.data);
        if all.clone().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("weights must be finite".into()));
        }
        Ok(())
    }
}

/// Glorot-uniform weights, `U(-a, a)` with `a = sqrt(6 / (fan_in + fan_out))`,
/// drawn row-major from `ChaCha8Rng::seed_from_u64(seed)`: all of `w1`
/// first, then `w2`.
pub fn init_weights(seed: u64) -> GcnWeights {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w1 = Matrix::glorot(1, HIDDEN, &mut rng);
    let w2 = Matrix::glorot(HIDDEN, HIDDEN, &mut rng);
    GcnWeights {
        seed,
        w1,
        w2,
        bias: None,
    }
}

/// Symmetric normalized adjacency with self-loops, stored as CSR.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl NormalizedAdjacency {
    pub fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[span.clone()].binary_search(&c) {
            Ok(i) => self.values[span.start + i],
            Err(_) => 0.0,
        }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|r| self.values[self.row_ptr[r]..self.row_ptr[r + 1]].iter().sum())
            .collect()
    }

    pub fn to_dense(&self) -> Matrix {
        let n = self.dim();
        let mut m = Matrix::zeros(n, n);
        for r in 0..n {
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                m.data[r * n + self.col_idx[i]] = self.values[i];
            }
        }
        m
    }

    /// `Â · x` for a row-major `n × cols` feature matrix.
    fn propagate(&self, x: &[f64], cols: usize) -> Vec<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n * cols];
        for r in 0..n {
            let dst = &mut out[r * cols..(r + 1) * cols];
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                let w = self.values[i];
                let src = &x[self.col_idx[i] * cols..(self.col_idx[i] + 1) * cols];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += w * s;
                }
            }
        }
        out
    }
}

pub fn normalized_adjacency(g: &SkeletonGraph) -> Result<NormalizedAdjacency> {
    if g.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let adj = g.adjacency();
    let inv_sqrt: Vec<f64> = adj
        .iter()
        .map(|nb| 1.0 / ((nb.len() + 1) as f64).sqrt())
        .collect();
    let mut row_ptr = vec![0];
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    for (r, nb) in adj.iter().enumerate() {
        let mut cols: Vec<usize> = nb.iter().copied().chain(std::iter::once(r)).collect();
        cols.sort_unstable();
        for c in cols {
            col_idx.push(c);
            values.push(inv_sqrt[r] * inv_sqrt[c]);
        }
        row_ptr.push(col_idx.len());
    }
    Ok(NormalizedAdjacency {
        row_ptr,
        col_idx,
        values,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub graph_id: String,
    pub values: [f64; HIDDEN],
}

/// `relu(h · w + b)` for row-major `h` (`n × w.rows`).
fn dense_layer(h: &[f64], w: &Matrix, bias: Option<&[f64]>) -> Vec<f64> {
    let n = h.len() / w.rows;
    let mut out = vec![0.0; n * w.cols];
    for r in 0..n {
        let dst = &mut out[r * w.cols..(r + 1) * w.cols];
        if let Some(b) = bias {
            dst.copy_from_slice(b);
        }
        for k in 0..w.rows {
            let a = h[r * w.rows + k];
            for (d, wv) in dst.iter_mut().zip(w.row(k)) {
                *d += a * wv;
            }
        }
        for d in dst.iter_mut() {
            *d = d.max(0.0);
        }
    }
    out
}

/// Embeds `g` with the given weights. Pooling sums rows in ascending node id
/// order before dividing by the node count.
pub fn embed(g: &SkeletonGraph, w: &GcnWeights, graph_id: impl Into<String>) -> Result<Embedding> {
    let a_hat = normalized_adjacency(g)?;
    let n = a_hat.dim();
    let (b1, b2) = match &w.bias {
        Some((b1, b2)) => (Some(b1.as_slice()), Some(b2.as_slice())),
        None => (None, None),
    };
    let x = vec![1.0; n];
    let h1 = dense_layer(&a_hat.propagate(&x, 1), &w.w1, b1);
    let h2 = dense_layer(&a_hat.propagate(&h1, HIDDEN), &w.w2, b2);
    let mut values = [0.0; HIDDEN];
    for row in h2.chunks_exact(HIDDEN) {
        for (acc, v) in values.iter_mut().zip(row) {
            *acc += v;
        }
    }
    for v in &mut values {
        *v /= n as f64;
    }
    Ok(Embedding {
        graph_id: graph_id.into(),
        values,
    })
}

/// Column header of the embedding CSV.
pub fn csv_header() -> String {
    std::iter::once("graph_id".to_string())
        .chain((0..HIDDEN).map(|i| format!("e{i:02}")))
        .collect::<Vec<_>>()
        .join(",")
}

/// Serializes embeddings sorted by `graph_id`, each value with 17
/// significant digits so it parses back to the same `f64`.
pub fn embeddings_to_csv(embeddings: &[Embedding]) -> String {
    let mut sorted: Vec<&Embedding> = embeddings.iter().collect();
    sorted.sort_by(|a, b| a.graph_id.cmp(&b.graph_id));
    let mut out = csv_header();
    out.push('\n');
    for e in sorted {
        out.push_str(&e.graph_id);
        for v in &e.values {
            out.push_str(&format!(",{v:.16e}"));
        }
        out.push('\n');
    }
    out
}

pub fn embeddings_from_csv(path: &Path, text: &str) -> Result<Vec<Embedding>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::parse(path, "embedding csv", e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.join(",") != csv_header() {
        return Err(Error::parse(path, "embedding csv", "unexpected header"));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::parse(path, "embedding csv", e.to_string()))?;
        let mut values = [0.0; HIDDEN];
        for (slot, field) in values.iter_mut().zip(record.iter().skip(1)) {
            *slot = field
                .parse()
                .map_err(|_| Error::parse(path, "embedding csv", format!("bad number `{field}`")))?;
        }
        out.push(Embedding {
            graph_id: record[0].to_string(),
            values,
        });
    }
    Ok(out)
}

pub fn load_embeddings(path: &Path) -> Result<Vec<Embedding>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    embeddings_from_csv(path, &text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Node;

    fn path_graph(n: usize) -> SkeletonGraph {
        let nodes = (0..n)
            .map(|id| Node {
                id,
                coord: (0, id),
                degree: if n == 1 { 0 } else if id == 0 || id + 1 == n { 1 } else { 2 },
            })
            .collect();
        let edges = (1..n).map(|i| (i - 1, i)).collect();
        SkeletonGraph::from_parts((1, n), nodes, edges).unwrap()
    }

    #[test]
    fn weights_are_deterministic_and_bounded() {
        let a = init_weights(7);
        assert_eq!(a, init_weights(7));
        let bound1 = (6.0f64 / 33.0).sqrt();
        assert!(a.w1.data.iter().all(|v| v.abs() <= bound1));
        let bound2 = (6.0f64 / 64.0).sqrt();
        assert!(a.w2.data.iter().all(|v| v.abs() <= bound2));
        for s in 0..10u64 {
            assert_ne!(init_weights(s).w1, init_weights(s + 100).w1);
        }
    }

    #[test]
    fn weights_json_roundtrip_is_exact() {
        let w = init_weights(42);
        let text = w.to_json();
        assert!(text.contains("\"W1\"") && text.contains("\"seed\":42"));
        assert_eq!(GcnWeights::from_json(&text).unwrap(), w);
    }

    #[test]
    fn adjacency_small_cases() {
        let a = normalized_adjacency(&path_graph(1)).unwrap();
        assert_eq!(a.to_dense().data, vec![1.0]);
        let a = normalized_adjacency(&path_graph(2)).unwrap();
        for v in a.to_dense().data {
            assert!((v - 0.5).abs() < 1e-15);
        }
        assert!(matches!(
            normalized_adjacency(&path_graph(0)),
            Err(Error::EmptyGraph)
        ));
    }

    #[test]
    fn single_node_closed_form() {
        let w = init_weights(3);
        let e = embed(&path_graph(1), &w, "g").unwrap();
        for j in 0..HIDDEN {
            let mut acc = 0.0;
            for k in 0..HIDDEN {
                acc += w.w1.get(0, k).max(0.0) * w.w2.get(k, j);
            }
            assert!((e.values[j] - acc.max(0.0)).abs() <= 1e-12);
        }
    }

    #[test]
    fn bias_flag_shifts_output() {
        let mut w = init_weights(3);
        let base = embed(&path_graph(4), &w, "g").unwrap();
        w.bias = Some((vec![0.0; HIDDEN], vec![10.0; HIDDEN]));
        let biased = embed(&path_graph(4), &w, "g").unwrap();
        assert!(biased.values.iter().zip(&base.values).all(|(b, a)| b > a));
    }

    #[test]
    fn csv_roundtrip_is_bit_exact_and_sorted() {
        let w = init_weights(1);
        let embs = vec![
            embed(&path_graph(5), &w, "b").unwrap(),
            embed(&path_graph(3), &w, "a").unwrap(),
        ];
        let text = embeddings_to_csv(&embs);
        assert!(text.starts_with("graph_id,e00,e01,"));
        assert!(text.lines().next().unwrap().ends_with(",e31"));
        let back = embeddings_from_csv(Path::new("x.csv"), &text).unwrap();
        assert_eq!(back[0], embs[1]);
        assert_eq!(back[1], embs[0]);
    }
}
