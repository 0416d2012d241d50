//! Undirected weighted graphs in compressed sparse row form.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Undirected weighted graph stored as a symmetric CSR adjacency matrix.
///
/// Both triangle halves are stored, column indices are sorted within each
/// row, weights are strictly positive and there are no self-loops.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseGraph {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    weights: Vec<f64>,
}

impl SparseGraph {
    /// Builds a graph from undirected edges, each listed once in either
    /// orientation. Duplicate edges are an error; self-loops are dropped.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut triplets = Vec::new();
        for (a, b, w) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) out of range for {n} vertices"
                )));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) has non-positive weight {w}"
                )));
            }
            if a == b {
                log::warn!("dropping self-loop at vertex {a}");
                continue;
            }
            triplets.push((a, b, w));
            triplets.push((b, a, w));
        }
        triplets.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
        for pair in triplets.windows(2) {
            if pair[0].0 == pair[1].0 && pair[0].1 == pair[1].1 {
                return Err(Error::InvalidGraph(format!(
                    "duplicate edge ({}, {})",
                    pair[0].0, pair[0].1
                )));
            }
        }
        let mut row_ptr = vec![0usize; n + 1];
        for &(a, _, _) in &triplets {
            row_ptr[a + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let col_idx = triplets.iter().map(|t| t.1).collect();
        let weights = triplets.iter().map(|t| t.2).collect();
        Ok(Self { n, row_ptr, col_idx, weights })
    }

    /// Builds a graph from raw CSR arrays, validating every invariant.
    pub fn from_csr(
        n: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        if row_ptr.len() != n + 1 || row_ptr[0] != 0 || row_ptr[n] != col_idx.len() {
            return Err(Error::InvalidGraph("malformed row pointer".into()));
        }
        if col_idx.len() != weights.len() {
            return Err(Error::InvalidGraph("column/weight length mismatch".into()));
        }
        let g = Self { n, row_ptr, col_idx, weights };
        for i in 0..n {
            if g.row_ptr[i] > g.row_ptr[i + 1] {
                return Err(Error::InvalidGraph("row pointer not monotone".into()));
            }
            let cols = &g.col_idx[g.row_ptr[i]..g.row_ptr[i + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidGraph(format!("row {i} columns not strictly sorted")));
            }
            for (j, w) in g.neighbors(i) {
                if j >= n {
                    return Err(Error::InvalidGraph(format!("column {j} out of range")));
                }
                if j == i {
                    return Err(Error::InvalidGraph(format!("self-loop at {i}")));
                }
                if !(w > 0.0) || !w.is_finite() {
                    return Err(Error::InvalidGraph(format!("non-positive weight at ({i}, {j})")));
                }
                match g.weight(j, i) {
                    Some(back) if back == w => {}
                    _ => {
                        return Err(Error::InvalidGraph(format!(
                            "adjacency not symmetric at ({i}, {j})"
                        )))
                    }
                }
            }
        }
        Ok(g)
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    /// Number of undirected edges.
    pub fn n_edges(&self) -> usize {
        self.col_idx.len() / 2
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.weights[range].iter().copied())
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        let cols = &self.col_idx[range.clone()];
        cols.binary_search(&j).ok().map(|k| self.weights[range.start + k])
    }

    /// Undirected edges with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            self.neighbors(i)
                .filter(move |&(j, _)| j > i)
                .map(move |(j, w)| (i, j, w))
        })
    }

    /// Weighted degrees.
    pub fn degrees(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.neighbors(i).map(|(_, w)| w).sum()).collect()
    }

    /// Hop distances from `src`; `usize::MAX` marks unreachable vertices.
    pub fn bfs_distances(&self, src: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n];
        let mut queue = VecDeque::new();
        dist[src] = 0;
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            for (v, _) in self.neighbors(u) {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Connected component label per vertex, labels in order of discovery.
    pub fn components(&self) -> Vec<usize> {
        let mut label = vec![usize::MAX; self.n];
        let mut next = 0;
        for s in 0..self.n {
            if label[s] != usize::MAX {
                continue;
            }
            let mut queue = VecDeque::from([s]);
            label[s] = next;
            while let Some(u) = queue.pop_front() {
                for (v, _) in self.neighbors(u) {
                    if label[v] == usize::MAX {
                        label[v] = next;
                        queue.push_back(v);
                    }
                }
            }
            next += 1;
        }
        label
    }

    pub fn is_connected(&self) -> bool {
        self.n == 0 || self.components().iter().all(|&c| c == 0)
    }

    /// Logs a warning when the graph is disconnected; spectral methods still
    /// run, the zero eigenvalue just has multiplicity above one.
    pub fn warn_if_disconnected(&self) {
        if !self.is_connected() {
            let k = self.components().into_iter().max().map_or(0, |m| m + 1);
            log::warn!("graph has {k} connected components; proceeding");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p3() -> SparseGraph {
        SparseGraph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap()
    }

    #[test]
    fn csr_layout_stores_both_halves() {
        let g = p3();
        assert_eq!(g.row_ptr(), &[0, 1, 3, 4]);
        assert_eq!(g.col_idx(), &[1, 0, 2, 1]);
        assert_eq!(g.n_edges(), 2);
        assert_eq!(g.degrees(), vec![1.0, 2.0, 1.0]);
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(SparseGraph::from_edges(2, [(0, 1, 0.0)]).is_err());
        assert!(SparseGraph::from_edges(2, [(0, 2, 1.0)]).is_err());
        assert!(SparseGraph::from_edges(2, [(0, 1, 1.0), (1, 0, 1.0)]).is_err());
    }

    #[test]
    fn from_csr_checks_symmetry() {
        let bad = SparseGraph::from_csr(2, vec![0, 1, 2], vec![1, 0], vec![1.0, 2.0]);
        assert!(bad.is_err());
        let ok = SparseGraph::from_csr(2, vec![0, 1, 2], vec![1, 0], vec![2.0, 2.0]);
        assert!(ok.is_ok());
    }

    #[test]
    fn bfs_and_components() {
        let g = SparseGraph::from_edges(5, [(0, 1, 1.0), (1, 2, 1.0), (3, 4, 1.0)]).unwrap();
        assert_eq!(g.bfs_distances(0)[..3], [0, 1, 2]);
        assert_eq!(g.bfs_distances(0)[3], usize::MAX);
        assert!(!g.is_connected());
        assert_eq!(g.components(), vec![0, 0, 0, 1, 1]);
        assert!(p3().is_connected());
    }
}
