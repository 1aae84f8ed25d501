//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use graphtomo::PatchGraph;
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

pub fn random_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn random_points(
    rng: &mut ChaCha8Rng,
    count: usize,
    dim: usize,
    integer: bool,
) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| {
            (0..dim)
                .map(|_| {
                    if integer {
                        rng.random_range(0..4) as f64
                    } else {
                        rng.random_range(-1.0..1.0)
                    }
                })
                .collect()
        })
        .collect()
}

/// Erdős–Rényi graph with random weights and at least one edge.
pub fn random_graph(rng: &mut ChaCha8Rng, nodes: usize) -> PatchGraph {
    let mut edges = Vec::new();
    let density = rng.random_range(0.05..0.5);
    for i in 0..nodes {
        for j in i + 1..nodes {
            if rng.random_bool(density) {
                edges.push((i, j, rng.random_range(0.01..1.0)));
            }
        }
    }
    if edges.is_empty() {
        edges.push((0, 1, 0.5));
    }
    PatchGraph::from_edges(nodes, &edges).unwrap()
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Full sort per node, first K, then union over both directions. Also
/// returns the mean directed neighbour distance.
pub fn knn_union_oracle(points: &[Vec<f64>], k: usize) -> (BTreeSet<(usize, usize)>, f64) {
    let n = points.len();
    let mut set = BTreeSet::new();
    let mut dist_total = 0.0;
    for i in 0..n {
        let mut all: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (sq_dist(&points[i], &points[j]), j))
            .collect();
        all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        for &(d2, j) in all.iter().take(k) {
            set.insert((i.min(j), i.max(j)));
            dist_total += d2.sqrt();
        }
    }
    (set, dist_total / (n * k) as f64)
}

pub fn dense_gradient(g: &PatchGraph) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(g.edge_count().max(1), g.node_count());
    for (row, e) in g.edges().iter().enumerate() {
        let s = e.weight.sqrt();
        m[(row, e.i)] = -s;
        m[(row, e.j)] = s;
    }
    m
}

pub fn largest_singular_value(g: &PatchGraph) -> f64 {
    dense_gradient(g)
        .singular_values()
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// `‖z − b‖² + γ Σ_{i<j} √W_ij |z_j − z_i|` from a dense weight table.
pub fn oracle_objective(b: &[f64], z: &[f64], w: &[Vec<f64>], gamma: f64) -> f64 {
    let n = b.len();
    let mut f: f64 = z.iter().zip(b).map(|(a, c)| (a - c).powi(2)).sum();
    for i in 0..n {
        for j in i + 1..n {
            f += gamma * w[i][j].sqrt() * (z[j] - z[i]).abs();
        }
    }
    f
}

/// Exhaustive grid search, refined around the incumbent until the spacing
/// is below 1e-6. The minimizer lies inside `[min b, max b]ⁿ`.
pub fn grid_search(b: &[f64], w: &[Vec<f64>], gamma: f64) -> f64 {
    let n = b.len();
    let lo = b.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = b.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let points = 41usize;
    let mut centre = vec![(lo + hi) / 2.0; n];
    let mut half = (hi - lo) / 2.0 + 1e-9;
    let mut best = f64::INFINITY;
    while half > 1e-6 {
        let step = 2.0 * half / (points - 1) as f64;
        let mut best_z = centre.clone();
        let total = points.pow(n as u32);
        let mut z = vec![0.0; n];
        for idx in 0..total {
            let mut rest = idx;
            for (d, zd) in z.iter_mut().enumerate() {
                *zd = centre[d] - half + step * (rest % points) as f64;
                rest /= points;
            }
            let f = oracle_objective(b, &z, w, gamma);
            if f < best {
                best = f;
                best_z.copy_from_slice(&z);
            }
        }
        centre = best_z;
        half = 4.0 * step;
    }
    best
}

/// 2- or 3-node denoising instance: data, dense weights, graph, γ.
#[allow(clippy::needless_range_loop)]
pub fn micro_instance(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<Vec<f64>>, PatchGraph, f64) {
    let n = rng.random_range(2..=3);
    let b: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let mut w = vec![vec![0.0; n]; n];
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if edges.is_empty() || rng.random_bool(0.7) {
                let wij = rng.random_range(0.1..1.0);
                w[i][j] = wij;
                w[j][i] = wij;
                edges.push((i, j, wij));
            }
        }
    }
    let g = PatchGraph::from_edges(n, &edges).unwrap();
    let gamma = rng.random_range(0.05..3.0);
    (b, w, g, gamma)
}

pub fn matvec(rows: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    rows.iter().map(|r| dot(r, x)).collect()
}

/// Diagonally dominant square system with its exact solution.
pub fn random_system(rng: &mut ChaCha8Rng, n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        n as f64 + 1.0
                    } else {
                        rng.random_range(-1.0..1.0)
                    }
                })
                .collect()
        })
        .collect();
    let x: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
    (rows, x)
}
