//! Test-only oracles. Nothing here calls into the code paths they check.
#![allow(dead_code)]

use std::collections::VecDeque;

use skelgraph::embed::GcnWeights;
use skelgraph::graph::SkeletonGraph;
use skelgraph::imaging::BinaryImage;

/// Zhang-Suen written straight from the published rule table, on a padded
/// boolean grid. Mirrors `tests/oracles/zhang_suen.py`.
pub fn zhang_suen_oracle(img: &BinaryImage) -> BinaryImage {
    let (h, w) = (img.height(), img.width());
    let mut g = vec![vec![false; w + 2]; h + 2];
    for y in 0..h {
        for x in 0..w {
            g[y + 1][x + 1] = img.get(y, x) == 1;
        }
    }
    loop {
        let mut changed = false;
        for step in 0..2 {
            let mut kill = Vec::new();
            for y in 1..=h {
                for x in 1..=w {
                    if !g[y][x] {
                        continue;
                    }
                    let p2 = g[y - 1][x] as u8;
                    let p3 = g[y - 1][x + 1] as u8;
                    let p4 = g[y][x + 1] as u8;
                    let p5 = g[y + 1][x + 1] as u8;
                    let p6 = g[y + 1][x] as u8;
                    let p7 = g[y + 1][x - 1] as u8;
                    let p8 = g[y][x - 1] as u8;
                    let p9 = g[y - 1][x - 1] as u8;
                    let seq = [p2, p3, p4, p5, p6, p7, p8, p9, p2];
                    let b = p2 + p3 + p4 + p5 + p6 + p7 + p8 + p9;
                    let a = seq.windows(2).filter(|s| s[0] == 0 && s[1] == 1).count();
                    let (c, d) = if step == 0 {
                        (p2 * p4 * p6, p4 * p6 * p8)
                    } else {
                        (p2 * p4 * p8, p2 * p6 * p8)
                    };
                    if (2..=6).contains(&b) && a == 1 && c == 0 && d == 0 {
                        kill.push((y, x));
                    }
                }
            }
            changed |= !kill.is_empty();
            for (y, x) in kill {
                g[y][x] = false;
            }
        }
        if !changed {
            break;
        }
    }
    let data = (1..=h)
        .flat_map(|y| (1..=w).map(move |x| (y, x)))
        .map(|(y, x)| g[y][x] as u8)
        .collect();
    BinaryImage::new(w, h, data).unwrap()
}

/// Number of 8-connected foreground components (BFS).
pub fn components_8(img: &BinaryImage) -> usize {
    let (h, w) = (img.height(), img.width());
    let mut seen = vec![false; h * w];
    let mut count = 0;
    for start in 0..h * w {
        if seen[start] || img.data()[start] == 0 {
            continue;
        }
        count += 1;
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            let (y, x) = ((i / w) as isize, (i % w) as isize);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (ny, nx) = (y + dy, x + dx);
                    if ny < 0 || nx < 0 || ny >= h as isize || nx >= w as isize {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if !seen[j] && img.data()[j] == 1 {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
    }
    count
}

fn canvas(h: usize, w: usize, inside: impl Fn(f64, f64) -> bool) -> BinaryImage {
    let data = (0..h * w)
        .map(|i| inside((i / w) as f64, (i % w) as f64) as u8)
        .collect();
    BinaryImage::new(w, h, data).unwrap()
}

fn seg_dist(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let t = (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
    ((p.0 - a.0 - t * dx).powi(2) + (p.1 - a.1 - t * dy).powi(2)).sqrt()
}

/// Named synthetic shapes at least 3 px thick, all within 64×64.
pub fn shape_corpus() -> Vec<(String, BinaryImage)> {
    let mut out = Vec::new();
    // Axis-aligned bars.
    for (i, &(len, thick)) in [(10, 3), (20, 3), (30, 4), (40, 5), (25, 6), (50, 8), (15, 7)]
        .iter()
        .enumerate()
    {
        out.push((
            format!("hbar{i}"),
            canvas(thick + 4, len + 4, |y, x| {
                (2.0..(thick + 2) as f64).contains(&y) && (2.0..(len + 2) as f64).contains(&x)
            }),
        ));
        out.push((
            format!("vbar{i}"),
            canvas(len + 4, thick + 4, |y, x| {
                (2.0..(len + 2) as f64).contains(&y) && (2.0..(thick + 2) as f64).contains(&x)
            }),
        ));
    }
    // Oblique thick strokes.
    for (i, &(angle, half)) in [(15.0f64, 1.6), (30.0, 2.0), (45.0, 2.0), (60.0, 2.5), (75.0, 1.8), (120.0, 3.0), (150.0, 2.2), (100.0, 3.5)]
        .iter()
        .enumerate()
    {
        let t = angle.to_radians();
        let c = (31.5, 31.5);
        let a = (c.0 - 24.0 * t.sin(), c.1 - 24.0 * t.cos());
        let b = (c.0 + 24.0 * t.sin(), c.1 + 24.0 * t.cos());
        out.push((format!("stroke{i}"), canvas(64, 64, |y, x| seg_dist((y, x), a, b) <= half)));
    }
    // Rings.
    for (i, &(r_out, r_in)) in [(10.0f64, 6.5), (14.0, 10.0), (20.0, 15.0), (28.0, 22.0), (12.0, 8.5), (25.0, 21.5)]
        .iter()
        .enumerate()
    {
        let c = r_out + 2.0;
        let n = (2.0 * c + 1.0) as usize;
        out.push((
            format!("ring{i}"),
            canvas(n, n, |y, x| {
                let d = ((y - c).powi(2) + (x - c).powi(2)).sqrt();
                d <= r_out && d >= r_in
            }),
        ));
    }
    // Crosses (plus signs) and X shapes.
    for (i, &(arm, thick)) in [(10usize, 3usize), (14, 4), (20, 5), (25, 3), (18, 6), (28, 7)]
        .iter()
        .enumerate()
    {
        let n = 2 * arm + 5;
        let c = (n / 2) as f64;
        let half = thick as f64 / 2.0;
        out.push((
            format!("plus{i}"),
            canvas(n, n, |y, x| {
                let in_h = (y - c).abs() < half && (x - c).abs() <= arm as f64;
                let in_v = (x - c).abs() < half && (y - c).abs() <= arm as f64;
                in_h || in_v
            }),
        ));
        let r = arm as f64 * 0.8;
        out.push((
            format!("xcross{i}"),
            canvas(n, n, |y, x| {
                seg_dist((y, x), (c - r, c - r), (c + r, c + r)) <= half
                    || seg_dist((y, x), (c - r, c + r), (c + r, c - r)) <= half
            }),
        ));
    }
    // Disks and ellipses.
    for (i, &(ry, rx)) in [(3.0f64, 3.0f64), (5.0, 5.0), (8.0, 8.0), (12.0, 5.0), (6.0, 15.0), (20.0, 20.0), (4.0, 10.0), (15.0, 9.0)]
        .iter()
        .enumerate()
    {
        let (h, w) = ((2.0 * ry + 5.0) as usize, (2.0 * rx + 5.0) as usize);
        let (cy, cx) = ((h / 2) as f64, (w / 2) as f64);
        out.push((
            format!("blob{i}"),
            canvas(h, w, |y, x| ((y - cy) / ry).powi(2) + ((x - cx) / rx).powi(2) <= 1.0),
        ));
    }
    // L, T and multi-part shapes.
    out.push((
        "ell".into(),
        canvas(40, 40, |y, x| {
            ((5.0..35.0).contains(&y) && (5.0..10.0).contains(&x))
                || ((30.0..35.0).contains(&y) && (5.0..35.0).contains(&x))
        }),
    ));
    out.push((
        "tee".into(),
        canvas(40, 40, |y, x| {
            ((5.0..9.0).contains(&y) && (4.0..36.0).contains(&x))
                || ((5.0..36.0).contains(&y) && (18.0..22.0).contains(&x))
        }),
    ));
    out.push((
        "two_blobs".into(),
        canvas(30, 60, |y, x| {
            (y - 15.0).powi(2) + (x - 12.0).powi(2) <= 64.0
                || (y - 15.0).powi(2) + (x - 45.0).powi(2) <= 81.0
        }),
    ));
    out.push((
        "dumbbell".into(),
        canvas(30, 60, |y, x| {
            (y - 15.0).powi(2) + (x - 10.0).powi(2) <= 49.0
                || (y - 15.0).powi(2) + (x - 49.0).powi(2) <= 49.0
                || ((13.0..17.0).contains(&y) && (10.0..50.0).contains(&x))
        }),
    ));
    out.push((
        "frame".into(),
        canvas(50, 50, |y, x| {
            let inside_outer = (3.0..47.0).contains(&y) && (3.0..47.0).contains(&x);
            let inside_inner = (8.0..42.0).contains(&y) && (8.0..42.0).contains(&x);
            inside_outer && !inside_inner
        }),
    ));
    out.push((
        "grid".into(),
        canvas(64, 64, |y, x| {
            let on_line = |v: f64| (v as usize % 16) < 4;
            (on_line(y) || on_line(x)) && (2.0..62.0).contains(&y) && (2.0..62.0).contains(&x)
        }),
    ));
    out
}

pub type Dense = Vec<Vec<f64>>;

fn matmul(a: &Dense, b: &Dense) -> Dense {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for (l, brow) in b.iter().enumerate().take(k) {
            for j in 0..m {
                out[i][j] += a[i][l] * brow[j];
            }
        }
    }
    out
}

/// Â built densely from the edge list.
pub fn dense_normalized_adjacency(g: &SkeletonGraph) -> Dense {
    let n = g.node_count();
    let mut a = vec![vec![0.0; n]; n];
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for &(u, v) in g.edges() {
        a[u][v] = 1.0;
        a[v][u] = 1.0;
    }
    let deg: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
    for i in 0..n {
        for j in 0..n {
            a[i][j] /= (deg[i] * deg[j]).sqrt();
        }
    }
    a
}

/// Brute-force dense forward pass: relu(Â relu(Â X W1) W2), mean over rows.
pub fn dense_embed(g: &SkeletonGraph, w: &GcnWeights) -> Vec<f64> {
    let a = dense_normalized_adjacency(g);
    let n = a.len();
    let x: Dense = vec![vec![1.0]; n];
    let w1: Dense = (0..w.w1.rows).map(|r| w.w1.row(r).to_vec()).collect();
    let w2: Dense = (0..w.w2.rows).map(|r| w.w2.row(r).to_vec()).collect();
    let relu = |m: Dense| -> Dense {
        m.into_iter()
            .map(|r| r.into_iter().map(|v| v.max(0.0)).collect())
            .collect()
    };
    let h1 = relu(matmul(&matmul(&a, &x), &w1));
    let h2 = relu(matmul(&matmul(&a, &h1), &w2));
    (0..h2[0].len())
        .map(|j| h2.iter().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect()
}
