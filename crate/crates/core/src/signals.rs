//! Synthetic test signals: piecewise-smooth and piecewise-constant.

use std::collections::VecDeque;

use rand::Rng;

use crate::chebyshev::fit_fn;
use crate::error::{invalid, Result};
use crate::graph::SparseGraph;
use crate::laplacian::Laplacian;
use crate::linalg::mean;
use crate::rng;

/// Splits the vertices into `pieces` regions grown by simultaneous BFS from
/// random seed vertices. Returns the region label of every vertex.
pub fn bfs_partition(g: &SparseGraph, pieces: usize, seed: u64) -> Result<Vec<usize>> {
    let n = g.n_vertices();
    if pieces == 0 || pieces > n {
        return invalid(format!("cannot split {n} vertices into {pieces} regions"));
    }
    let mut rng = rng::stream(seed, 1);
    let mut seeds: Vec<usize> = Vec::with_capacity(pieces);
    while seeds.len() < pieces {
        let v = rng.random_range(0..n);
        if !seeds.contains(&v) {
            seeds.push(v);
        }
    }
    let mut label = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for (c, &s) in seeds.iter().enumerate() {
        label[s] = c;
        queue.push_back(s);
    }
    while let Some(v) = queue.pop_front() {
        for (w, _) in g.neighbors(v) {
            if label[w] == usize::MAX {
                label[w] = label[v];
                queue.push_back(w);
            }
        }
    }
    // vertices in components without a seed join region 0
    for l in label.iter_mut().filter(|l| **l == usize::MAX) {
        *l = 0;
    }
    Ok(label)
}

/// Random constant level per region, levels drawn uniformly from `[-2, 2]`.
pub fn piecewise_constant(g: &SparseGraph, pieces: usize, seed: u64) -> Result<Vec<f64>> {
    let label = bfs_partition(g, pieces, seed)?;
    let mut rng = rng::stream(seed, 2);
    let levels: Vec<f64> = (0..pieces).map(|_| rng.random_range(-2.0..2.0)).collect();
    Ok(label.iter().map(|&c| levels[c]).collect())
}

/// Smooth lowpass field plus a jump between regions.
///
/// The smooth part is white noise passed through `exp(-20 lambda / lambda_bar)`
/// and scaled to unit standard deviation; each region adds its own constant
/// offset, so the signal is discontinuous across region boundaries.
pub fn piecewise_smooth(l: &Laplacian, pieces: usize, seed: u64) -> Result<Vec<f64>> {
    let n = l.n();
    let offsets = piecewise_constant(l.graph(), pieces, seed)?;
    let lb = l.lambda_max_bound();
    let heat = fit_fn(|x| (-20.0 * x / lb).exp(), 60, lb, false)?;
    let mut rng = rng::stream(seed, 3);
    let noise = rng::gaussian(&mut rng, n);
    let smooth = heat.apply(l, &noise)?;
    let m = mean(&smooth);
    let sd = (smooth.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64).sqrt();
    let sd = if sd > 0.0 { sd } else { 1.0 };
    Ok(smooth
        .iter()
        .zip(&offsets)
        .map(|(s, o)| (s - m) / sd + o)
        .collect())
}

/// `f - mean(f)`
pub fn mean_normalize(f: &[f64]) -> Vec<f64> {
    let m = mean(f);
    f.iter().map(|v| v - m).collect()
}
