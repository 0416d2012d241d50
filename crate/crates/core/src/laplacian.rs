//! Graph Laplacians, spectral range estimates and the Laplacian quadratic form.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Error, Result};
use crate::graph::SparseGraph;
use crate::linalg::{axpy, dot, norm};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LaplacianKind {
    /// `L = D - W`
    #[default]
    Combinatorial,
    /// `D^{-1/2} (D - W) D^{-1/2}`
    Normalized,
}

/// Inflation applied to the largest Lanczos Ritz value so that the result
/// bounds the spectrum from above with high probability.
pub const LANCZOS_INFLATION: f64 = 1.01;

/// Sparse symmetric Laplacian with a recorded upper bound on its spectrum.
#[derive(Debug, Clone)]
pub struct Laplacian {
    kind: LaplacianKind,
    graph: SparseGraph,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    lambda_max_bound: f64,
}

impl Laplacian {
    pub fn kind(&self) -> LaplacianKind {
        self.kind
    }

    pub fn graph(&self) -> &SparseGraph {
        &self.graph
    }

    pub fn n(&self) -> usize {
        self.graph.n_vertices()
    }

    /// Upper bound `lambda_bar >= lambda_max` used for every spectral map.
    pub fn lambda_max_bound(&self) -> f64 {
        self.lambda_max_bound
    }

    /// Replaces the recorded spectral bound, e.g. with a Lanczos estimate.
    pub fn with_lambda_max_bound(mut self, bound: f64) -> Result<Self> {
        if !(bound > 0.0) || !bound.is_finite() {
            return invalid(format!("lambda_max bound must be positive, got {bound}"));
        }
        self.lambda_max_bound = bound;
        Ok(self)
    }

    /// Tightens the recorded bound with a Lanczos estimate, keeping the
    /// smaller of the two.
    pub fn refine_lambda_max(self, steps: usize, seed: u64) -> Result<Self> {
        let est = lanczos_lambda_max(&self, steps, seed)?;
        let bound = self.lambda_max_bound.min(est);
        self.with_lambda_max_bound(bound)
    }

    /// `y = L x`
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        self.apply_into(x, &mut y);
        y
    }

    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yi = acc;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n())
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .find(|&k| self.col_idx[k] == i)
                    .map_or(0.0, |k| self.values[k])
            })
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.col_idx[k])] = self.values[k];
            }
        }
        m
    }

    /// Unit-norm vector spanning the null space of a connected graph's
    /// Laplacian: constant for the combinatorial kind, `sqrt(d)` for the
    /// normalized kind.
    pub fn null_vector(&self) -> Vec<f64> {
        let v: Vec<f64> = match self.kind {
            LaplacianKind::Combinatorial => vec![1.0; self.n()],
            LaplacianKind::Normalized => self.graph.degrees().iter().map(|d| d.sqrt()).collect(),
        };
        let nv = norm(&v);
        if nv == 0.0 {
            return v;
        }
        v.iter().map(|x| x / nv).collect()
    }
}

/// Builds the requested Laplacian and records the edge-degree upper bound.
pub fn build_laplacian(g: &SparseGraph, kind: LaplacianKind) -> Result<Laplacian> {
    let n = g.n_vertices();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    g.warn_if_disconnected();
    let deg = g.degrees();
    let inv_sqrt: Vec<f64> = deg
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect();

    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(g.col_idx().len() + n);
    let mut values = Vec::with_capacity(g.col_idx().len() + n);
    row_ptr.push(0);
    for i in 0..n {
        let diag = match kind {
            LaplacianKind::Combinatorial => deg[i],
            LaplacianKind::Normalized => {
                if deg[i] > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        };
        let mut placed = false;
        for (j, w) in g.neighbors(i) {
            if !placed && j > i {
                col_idx.push(i);
                values.push(diag);
                placed = true;
            }
            col_idx.push(j);
            values.push(match kind {
                LaplacianKind::Combinatorial => -w,
                LaplacianKind::Normalized => -w * inv_sqrt[i] * inv_sqrt[j],
            });
        }
        if !placed {
            col_idx.push(i);
            values.push(diag);
        }
        row_ptr.push(col_idx.len());
    }
    let mut lap = Laplacian {
        kind,
        graph: g.clone(),
        row_ptr,
        col_idx,
        values,
        lambda_max_bound: 0.0,
    };
    let bound = lambda_max_upper_bound(&lap);
    // An edgeless graph has L = 0; any positive interval works for it.
    lap.lambda_max_bound = if bound > 0.0 { bound } else { 1.0 };
    Ok(lap)
}

/// Largest `d(m) + d(n)` over edges for the combinatorial Laplacian, 2 for
/// the normalized one.
pub fn lambda_max_upper_bound(l: &Laplacian) -> f64 {
    match l.kind {
        LaplacianKind::Normalized => 2.0,
        LaplacianKind::Combinatorial => {
            let deg = l.graph.degrees();
            l.graph
                .edges()
                .map(|(a, b, _)| deg[a] + deg[b])
                .fold(0.0, f64::max)
        }
    }
}

/// Largest Ritz value of a `steps`-dimensional Lanczos run from a seeded
/// Gaussian start, inflated by [`LANCZOS_INFLATION`].
///
/// Uses full reorthogonalization; on breakdown returns the best Ritz value
/// found so far.
pub fn lanczos_lambda_max(l: &Laplacian, steps: usize, seed: u64) -> Result<f64> {
    if steps < 2 {
        return invalid("lanczos needs at least 2 steps");
    }
    let n = l.n();
    let steps = steps.min(n);
    let mut rng = rng::stream(seed, 0);
    let mut v = rng::gaussian(&mut rng, n);
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);

    let mut basis: Vec<Vec<f64>> = vec![v];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let scale = l.lambda_max_bound.max(1.0);

    for k in 0..steps {
        let mut w = l.apply(&basis[k]);
        let a = dot(&w, &basis[k]);
        alpha.push(a);
        axpy(-a, &basis[k], &mut w);
        if k > 0 {
            axpy(-beta[k - 1], &basis[k - 1], &mut w);
        }
        for _ in 0..2 {
            for q in &basis {
                let c = dot(&w, q);
                axpy(-c, q, &mut w);
            }
        }
        let b = norm(&w);
        if k + 1 == steps || b <= 1e-12 * scale {
            break;
        }
        beta.push(b);
        w.iter_mut().for_each(|x| *x /= b);
        basis.push(w);
    }

    let m = alpha.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let ritz = SymmetricEigen::new(t).eigenvalues;
    let top = ritz.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(top * LANCZOS_INFLATION)
}

/// `f^T L f`; for the combinatorial kind this is summed edge by edge as
/// `sum W_mn (f(m) - f(n))^2`, which is nonnegative by construction.
pub fn quadratic_form(l: &Laplacian, f: &[f64]) -> Result<f64> {
    check_len(l.n(), f.len())?;
    Ok(match l.kind {
        LaplacianKind::Combinatorial => l
            .graph
            .edges()
            .map(|(a, b, w)| w * (f[a] - f[b]).powi(2))
            .sum(),
        LaplacianKind::Normalized => {
            let deg = l.graph.degrees();
            let s: Vec<f64> = deg
                .iter()
                .zip(f)
                .map(|(&d, &x)| if d > 0.0 { x / d.sqrt() } else { 0.0 })
                .collect();
            l.graph
                .edges()
                .map(|(a, b, w)| w * (s[a] - s[b]).powi(2))
                .sum()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;

    fn dense_lmax(l: &Laplacian) -> f64 {
        SymmetricEigen::new(l.to_dense())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn p3_combinatorial_matrix() {
        let l = build_laplacian(&generators::path(3), LaplacianKind::Combinatorial).unwrap();
        let d = l.to_dense();
        let expect = [[1.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(d[(i, j)], expect[i][j]);
            }
        }
    }

    #[test]
    fn single_weighted_edge() {
        let g = SparseGraph::from_edges(2, [(0, 1, 2.0)]).unwrap();
        let d = build_laplacian(&g, LaplacianKind::Combinatorial).unwrap().to_dense();
        assert_eq!(d.as_slice(), &[2.0, -2.0, -2.0, 2.0]);
    }

    #[test]
    fn c4_normalized_matches_dense_oracle() {
        let g = generators::cycle(4);
        let l = build_laplacian(&g, LaplacianKind::Normalized).unwrap().to_dense();
        // dense D^{-1/2} (D - W) D^{-1/2}
        let comb = build_laplacian(&g, LaplacianKind::Combinatorial).unwrap().to_dense();
        let dinv = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            4,
            g.degrees().iter().map(|d| 1.0 / d.sqrt()),
        ));
        let oracle = &dinv * comb * &dinv;
        for i in 0..4 {
            assert!((l[(i, i)] - 1.0).abs() < 1e-15);
            for j in 0..4 {
                assert!((l[(i, j)] - oracle[(i, j)]).abs() < 1e-15);
            }
        }
        assert!((l[(0, 1)] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn empty_graph_errors() {
        let g = SparseGraph::from_edges(0, []).unwrap();
        assert!(matches!(
            build_laplacian(&g, LaplacianKind::Combinatorial),
            Err(Error::EmptyGraph)
        ));
    }

    #[test]
    fn upper_bound_examples() {
        let cases = [
            (generators::path(3), 3.0, 3.0),
            (generators::cycle(4), 4.0, 4.0),
            (generators::complete(3), 4.0, 3.0),
        ];
        for (g, bound, exact) in cases {
            let l = build_laplacian(&g, LaplacianKind::Combinatorial).unwrap();
            assert_eq!(lambda_max_upper_bound(&l), bound);
            assert!((dense_lmax(&l) - exact).abs() < 1e-12);
        }
        let ln = build_laplacian(&generators::path(3), LaplacianKind::Normalized).unwrap();
        assert_eq!(lambda_max_upper_bound(&ln), 2.0);
    }

    #[test]
    fn bound_dominates_on_random_graphs() {
        for seed in 0..20 {
            let n = 20 + 9 * seed as usize;
            let g = generators::erdos_renyi(n, 0.1, seed);
            let l = build_laplacian(&g, LaplacianKind::Combinatorial).unwrap();
            assert!(l.lambda_max_bound() >= dense_lmax(&l) - 1e-9);
            let ln = build_laplacian(&g, LaplacianKind::Normalized).unwrap();
            let top = dense_lmax(&ln);
            assert!(top <= 2.0 + 1e-10);
        }
    }

    #[test]
    fn lanczos_examples() {
        let l = build_laplacian(&generators::path(3), LaplacianKind::Combinatorial).unwrap();
        let v = lanczos_lambda_max(&l, 3, 7).unwrap();
        assert!((v - 3.03).abs() < 1e-10, "{v}");

        let k3 = build_laplacian(&generators::complete(3), LaplacianKind::Combinatorial).unwrap();
        for seed in 0..10 {
            assert!(lanczos_lambda_max(&k3, 2, seed).unwrap() >= 3.0);
        }

        let g = generators::erdos_renyi(40, 0.2, 3);
        let l = build_laplacian(&g, LaplacianKind::Combinatorial).unwrap();
        let v = lanczos_lambda_max(&l, 40, 1).unwrap();
        assert!((v - 1.01 * dense_lmax(&l)).abs() < 1e-8);
        assert_eq!(v, lanczos_lambda_max(&l, 40, 1).unwrap());
        assert!(lanczos_lambda_max(&l, 1, 0).is_err());
    }

    #[test]
    fn quadratic_form_examples() {
        let l = build_laplacian(&generators::path(3), LaplacianKind::Combinatorial).unwrap();
        assert_eq!(quadratic_form(&l, &[2.0, 2.0, 2.0]).unwrap(), 0.0);
        assert_eq!(quadratic_form(&l, &[1.0, 0.0, 0.0]).unwrap(), 1.0);
        assert!(quadratic_form(&l, &[1.0]).is_err());

        let eig = SymmetricEigen::new(l.to_dense());
        for k in 0..3 {
            let u: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
            let q = quadratic_form(&l, &u).unwrap();
            assert!((q - eig.eigenvalues[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn quadratic_form_matches_dense_for_normalized() {
        let g = generators::erdos_renyi(30, 0.2, 11);
        let l = build_laplacian(&g, LaplacianKind::Normalized).unwrap();
        let f: Vec<f64> = (0..30).map(|i| (i as f64 * 0.37).sin()).collect();
        let lf = l.apply(&f);
        let q = quadratic_form(&l, &f).unwrap();
        assert!((q - dot(&f, &lf)).abs() < 1e-10);
    }
}
