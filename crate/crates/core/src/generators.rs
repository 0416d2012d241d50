//! Synthetic graphs used in tests, examples and the `generate` subcommand.

use rand::Rng;

use crate::graph::SparseGraph;
use crate::rng;

/// A graph together with planar vertex coordinates.
#[derive(Debug, Clone)]
pub struct Embedded {
    pub graph: SparseGraph,
    pub coords: Vec<[f64; 2]>,
}

pub fn path(n: usize) -> SparseGraph {
    SparseGraph::from_edges(n, (1..n).map(|i| (i - 1, i, 1.0))).expect("valid path")
}

pub fn cycle(n: usize) -> SparseGraph {
    assert!(n >= 3, "cycle needs at least 3 vertices");
    SparseGraph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n, 1.0))).expect("valid cycle")
}

pub fn complete(n: usize) -> SparseGraph {
    let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j, 1.0)));
    SparseGraph::from_edges(n, edges).expect("valid complete graph")
}

/// Star with center vertex 0.
pub fn star(n: usize) -> SparseGraph {
    SparseGraph::from_edges(n, (1..n).map(|i| (0, i, 1.0))).expect("valid star")
}

/// `rows x cols` 4-neighbour lattice, vertex `r * cols + c`.
pub fn grid(rows: usize, cols: usize) -> Embedded {
    let idx = |r: usize, c: usize| r * cols + c;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((idx(r, c), idx(r, c + 1), 1.0));
            }
            if r + 1 < rows {
                edges.push((idx(r, c), idx(r + 1, c), 1.0));
            }
        }
    }
    let coords = (0..rows * cols)
        .map(|v| [(v % cols) as f64, (v / cols) as f64])
        .collect();
    Embedded {
        graph: SparseGraph::from_edges(rows * cols, edges).expect("valid grid"),
        coords,
    }
}

/// Erdős–Rényi `G(n, p)` with unit weights.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> SparseGraph {
    let mut rng = rng::stream(seed, 0);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                edges.push((i, j, 1.0));
            }
        }
    }
    SparseGraph::from_edges(n, edges).expect("valid G(n,p)")
}

/// Random sensor network: uniform points in the unit square joined to their
/// `k` nearest neighbours (symmetrized), Gaussian weights
/// `exp(-d^2 / (2 theta^2))` with `theta` the mean k-NN distance. Components
/// are stitched together through their closest point pairs so the result is
/// always connected.
pub fn sensor(n: usize, k: usize, seed: u64) -> Embedded {
    assert!(n >= 2 && k >= 1, "sensor graph needs n >= 2 and k >= 1");
    let k = k.min(n - 1);
    let mut rng = rng::stream(seed, 0);
    let coords: Vec<[f64; 2]> = (0..n)
        .map(|_| [rng.random::<f64>(), rng.random::<f64>()])
        .collect();
    let dist = |a: usize, b: usize| {
        let dx = coords[a][0] - coords[b][0];
        let dy = coords[a][1] - coords[b][1];
        (dx * dx + dy * dy).sqrt()
    };

    let mut pairs = std::collections::BTreeMap::new();
    let mut knn_total = 0.0;
    for i in 0..n {
        let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        order.sort_by(|&a, &b| dist(i, a).total_cmp(&dist(i, b)).then(a.cmp(&b)));
        for &j in &order[..k] {
            knn_total += dist(i, j);
            pairs.insert((i.min(j), i.max(j)), dist(i, j));
        }
    }
    let theta = knn_total / (n * k) as f64;
    let weight = |d: f64| (-d * d / (2.0 * theta * theta)).exp().max(1e-12);

    loop {
        let g = SparseGraph::from_edges(n, pairs.iter().map(|(&(a, b), &d)| (a, b, weight(d))))
            .expect("valid sensor graph");
        let label = g.components();
        if label.iter().all(|&c| c == 0) {
            return Embedded { graph: g, coords };
        }
        let mut best = (f64::INFINITY, 0, 0);
        for a in (0..n).filter(|&a| label[a] == 0) {
            for b in (0..n).filter(|&b| label[b] != 0) {
                let d = dist(a, b);
                if d < best.0 {
                    best = (d, a, b);
                }
            }
        }
        pairs.insert((best.1.min(best.2), best.1.max(best.2)), best.0);
    }
}

/// Disjoint cliques of `size` vertices chained by weak links of weight
/// `link`. The spectrum has eigenvalue clusters of very high multiplicity.
pub fn clique_chain(n_cliques: usize, size: usize, link: f64) -> SparseGraph {
    clique_union(&vec![size; n_cliques], link)
}

/// Cliques of the given sizes, consecutive ones joined by one edge of weight
/// `link`. A clique of size `s` contributes an eigenvalue cluster near `s`.
pub fn clique_union(sizes: &[usize], link: f64) -> SparseGraph {
    let mut edges = Vec::new();
    let mut base = 0;
    for (c, &size) in sizes.iter().enumerate() {
        for i in 0..size {
            for j in i + 1..size {
                edges.push((base + i, base + j, 1.0));
            }
        }
        if c + 1 < sizes.len() && size > 0 {
            edges.push((base + size - 1, base + size, link));
        }
        base += size;
    }
    SparseGraph::from_edges(base, edges).expect("valid clique union")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_generators() {
        assert_eq!(path(5).n_edges(), 4);
        assert_eq!(cycle(4).n_edges(), 4);
        assert_eq!(complete(4).n_edges(), 6);
        assert_eq!(star(5).degrees()[0], 4.0);
        assert_eq!(grid(3, 4).graph.n_edges(), 3 * 3 + 2 * 4);
        assert!(clique_chain(3, 4, 0.01).is_connected());
    }

    #[test]
    fn sensor_is_connected_and_deterministic() {
        let a = sensor(500, 6, 42);
        assert!(a.graph.is_connected());
        let b = sensor(500, 6, 42);
        assert_eq!(a.graph, b.graph);
        let c = sensor(500, 6, 43);
        assert_ne!(a.graph, c.graph);
    }

    #[test]
    fn erdos_renyi_density() {
        let g = erdos_renyi(200, 0.2, 1);
        let expected = 0.2 * 200.0 * 199.0 / 2.0;
        assert!((g.n_edges() as f64 - expected).abs() < 0.1 * expected);
    }
}
