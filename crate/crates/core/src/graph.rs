//! Patch similarity graph over sinogram pixels.
//!
//! Every pixel becomes a node whose feature vector is the `l × l` patch
//! centred on it. Each node is linked to its `K` nearest neighbours in patch
//! space, the directed K-NN relation is symmetrized by union, and edges get
//! the Gaussian weight `exp(-‖s_i - s_j‖² / σ²)`.
//!
//! The graph gradient lives on undirected edges: for a stored edge `(i, j)`
//! with `i < j`, `(∇z)_e = √W_ij · (z_j - z_i)`. The divergence is its exact
//! adjoint, so `⟨∇z, u⟩ = ⟨z, ∇*u⟩`.

use std::sync::OnceLock;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::noise::gaussian_vector;
use crate::projector::Sinogram;

const POWER_ITER_TOL: f64 = 1e-8;
const POWER_ITER_MAX: usize = 10_000;
const POWER_ITER_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaRule {
    /// Mean Euclidean distance over all directed K-NN pairs.
    AverageKnnDistance,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchConfig {
    /// Odd patch side `l`.
    pub patch_side: usize,
    /// Neighbours per node.
    pub k: usize,
    pub sigma_rule: SigmaRule,
}

impl Default for PatchConfig {
    fn default() -> Self {
        PatchConfig {
            patch_side: 3,
            k: 10,
            sigma_rule: SigmaRule::AverageKnnDistance,
        }
    }
}

impl PatchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.patch_side == 0 || self.patch_side.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "patch side must be odd and positive, got {}",
                self.patch_side
            )));
        }
        if self.k == 0 {
            return Err(Error::invalid("K must be at least 1"));
        }
        if let SigmaRule::Fixed(s) = self.sigma_rule {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::invalid(format!(
                    "fixed sigma must be positive, got {s}"
                )));
            }
        }
        Ok(())
    }
}

/// Equal-length feature vectors stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchSet {
    dim: usize,
    data: Vec<f64>,
}

impl PatchSet {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if dim == 0 {
            return Err(Error::invalid(
                "patch set needs at least one non-empty vector",
            ));
        }
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::invalid("all patches must have the same length"));
        }
        Ok(PatchSet {
            dim,
            data: rows.concat(),
        })
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    fn dist_sq(&self, i: usize, j: usize) -> f64 {
        self.get(i)
            .iter()
            .zip(self.get(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

/// One patch per sinogram pixel, in the sinogram's storage order (node
/// `k·p + r` is ray `r` at angle `k`). Each patch is the `l × l` window
/// centred on the pixel, read row-major over (ray, angle) with borders
/// replicated.
pub fn extract_patches(s: &Sinogram, cfg: &PatchConfig) -> Result<PatchSet> {
    cfg.validate()?;
    let (p, q) = (s.p(), s.q());
    let l = cfg.patch_side;
    if l > 2 * p.min(q) - 1 {
        return Err(Error::invalid(format!(
            "patch side {l} too large for a {p}x{q} sinogram"
        )));
    }
    let h = (l / 2) as isize;
    let mut data = Vec::with_capacity(p * q * l * l);
    for angle in 0..q {
        for ray in 0..p {
            for dr in -h..=h {
                let rr = (ray as isize + dr).clamp(0, p as isize - 1) as usize;
                for dc in -h..=h {
                    let cc = (angle as isize + dc).clamp(0, q as isize - 1) as usize;
                    data.push(s.get(rr, cc));
                }
            }
        }
    }
    Ok(PatchSet { dim: l * l, data })
}

/// Undirected edge with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

#[derive(Debug)]
pub struct PatchGraph {
    node_count: usize,
    edges: Vec<Edge>,
    sqrt_weights: Vec<f64>,
    degree: Vec<f64>,
    sigma: f64,
    tau: OnceLock<f64>,
}

impl Clone for PatchGraph {
    fn clone(&self) -> Self {
        let tau = OnceLock::new();
        if let Some(&t) = self.tau.get() {
            let _ = tau.set(t);
        }
        PatchGraph {
            node_count: self.node_count,
            edges: self.edges.clone(),
            sqrt_weights: self.sqrt_weights.clone(),
            degree: self.degree.clone(),
            sigma: self.sigma,
            tau,
        }
    }
}

impl PatchGraph {
    /// Graph from an explicit undirected edge list. Endpoints are reordered
    /// so that `i < j`; self loops, duplicates and invalid weights are
    /// rejected.
    pub fn from_edges(node_count: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        Self::assemble(node_count, edges.iter().copied(), 1.0)
    }

    fn assemble(
        node_count: usize,
        edges: impl Iterator<Item = (usize, usize, f64)>,
        sigma: f64,
    ) -> Result<Self> {
        let mut list = Vec::new();
        for (a, b, w) in edges {
            if a == b {
                return Err(Error::invalid(format!("self loop at node {a}")));
            }
            if a >= node_count || b >= node_count {
                return Err(Error::invalid(format!(
                    "edge ({a}, {b}) out of range for {node_count} nodes"
                )));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::invalid(format!(
                    "edge weight {w} must be finite and >= 0"
                )));
            }
            list.push(Edge {
                i: a.min(b),
                j: a.max(b),
                weight: w,
            });
        }
        list.sort_by_key(|e| (e.i, e.j));
        if list
            .windows(2)
            .any(|w| (w[0].i, w[0].j) == (w[1].i, w[1].j))
        {
            return Err(Error::invalid("duplicate edge"));
        }
        let mut degree = vec![0.0; node_count];
        for e in &list {
            degree[e.i] += e.weight;
            degree[e.j] += e.weight;
        }
        let sqrt_weights = list.iter().map(|e| e.weight.sqrt()).collect();
        Ok(PatchGraph {
            node_count,
            edges: list,
            sqrt_weights,
            degree,
            sigma,
            tau: OnceLock::new(),
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges sorted by `(i, j)`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn degree(&self) -> &[f64] {
        &self.degree
    }

    pub fn max_degree(&self) -> f64 {
        self.degree.iter().copied().fold(0.0, f64::max)
    }

    /// Kernel bandwidth used for the weights (1.0 for hand-built graphs).
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `W_ij`, zero when the nodes are not adjacent.
    pub fn weight(&self, a: usize, b: usize) -> f64 {
        let key = (a.min(b), a.max(b));
        self.edges
            .binary_search_by_key(&key, |e| (e.i, e.j))
            .map_or(0.0, |k| self.edges[k].weight)
    }

    /// `∇z`, one value per stored edge.
    pub fn gradient(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check_nodes(z.len())?;
        let mut out = vec![0.0; self.edges.len()];
        self.gradient_into(z, &mut out);
        Ok(out)
    }

    /// `∇*u`, one value per node.
    pub fn divergence(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.edges.len() {
            return Err(Error::invalid(format!(
                "edge signal has length {}, graph has {} edges",
                u.len(),
                self.edges.len()
            )));
        }
        let mut out = vec![0.0; self.node_count];
        self.divergence_into(u, &mut out);
        Ok(out)
    }

    pub(crate) fn gradient_into(&self, z: &[f64], out: &mut [f64]) {
        for ((o, e), sw) in out.iter_mut().zip(&self.edges).zip(&self.sqrt_weights) {
            *o = sw * (z[e.j] - z[e.i]);
        }
    }

    pub(crate) fn divergence_into(&self, u: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for ((&ue, e), sw) in u.iter().zip(&self.edges).zip(&self.sqrt_weights) {
            let flow = sw * ue;
            out[e.i] -= flow;
            out[e.j] += flow;
        }
    }

    /// Graph total variation `‖∇z‖₁`, each unordered pair counted once.
    pub fn total_variation(&self, z: &[f64]) -> Result<f64> {
        self.check_nodes(z.len())?;
        Ok(self
            .edges
            .iter()
            .zip(&self.sqrt_weights)
            .map(|(e, sw)| sw * (z[e.j] - z[e.i]).abs())
            .sum())
    }

    /// `‖∇‖₂`, the largest singular value of the gradient, by power
    /// iteration on `∇*∇`. Computed once and cached.
    pub fn spectral_norm(&self) -> f64 {
        *self.tau.get_or_init(|| self.power_iteration())
    }

    fn power_iteration(&self) -> f64 {
        if self.edges.is_empty() {
            return 0.0;
        }
        let mut v = gaussian_vector(self.node_count, POWER_ITER_SEED);
        normalize(&mut v);
        let mut grad = vec![0.0; self.edges.len()];
        let mut lv = vec![0.0; self.node_count];
        let mut lambda = 0.0;
        for _ in 0..POWER_ITER_MAX {
            self.gradient_into(&v, &mut grad);
            self.divergence_into(&grad, &mut lv);
            // ∇*∇ is positive semidefinite; the Rayleigh quotient is ‖∇v‖².
            let rayleigh: f64 = grad.iter().map(|g| g * g).sum();
            let norm = lv.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            for (vi, li) in v.iter_mut().zip(&lv) {
                *vi = li / norm;
            }
            let converged = (rayleigh - lambda).abs() <= POWER_ITER_TOL * rayleigh;
            lambda = rayleigh;
            if converged {
                break;
            }
        }
        lambda.sqrt()
    }

    fn check_nodes(&self, len: usize) -> Result<()> {
        if len != self.node_count {
            return Err(Error::invalid(format!(
                "graph signal has length {len}, graph has {} nodes",
                self.node_count
            )));
        }
        Ok(())
    }
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

/// The `k` nearest neighbours of every node as `(neighbour, squared distance)`,
/// ordered by distance then index. Exhaustive search.
pub fn knn(patches: &PatchSet, k: usize) -> Vec<Vec<(usize, f64)>> {
    let n = patches.len();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut cand: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (patches.dist_sq(i, j), j))
                .collect();
            let by_dist =
                |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            if k < cand.len() {
                cand.select_nth_unstable_by(k - 1, by_dist);
                cand.truncate(k);
            }
            cand.sort_by(by_dist);
            cand.into_iter().map(|(d, j)| (j, d)).collect()
        })
        .collect()
}

/// Build the symmetrized K-NN patch graph.
pub fn build_graph(patches: &PatchSet, cfg: &PatchConfig) -> Result<PatchGraph> {
    cfg.validate()?;
    let n = patches.len();
    if n < cfg.k + 1 {
        return Err(Error::invalid(format!(
            "need at least K+1 = {} patches, got {n}",
            cfg.k + 1
        )));
    }
    let neighbours = knn(patches, cfg.k);

    let sigma = match cfg.sigma_rule {
        SigmaRule::Fixed(s) => s,
        SigmaRule::AverageKnnDistance => {
            let total: f64 = neighbours
                .iter()
                .flat_map(|list| list.iter().map(|&(_, d2)| d2.sqrt()))
                .sum();
            let mean = total / (n * cfg.k) as f64;
            if mean > 0.0 {
                mean
            } else {
                1.0
            }
        }
    };

    let mut pairs: Vec<(usize, usize, f64)> = neighbours
        .iter()
        .enumerate()
        .flat_map(|(i, list)| list.iter().map(move |&(j, d2)| (i.min(j), i.max(j), d2)))
        .collect();
    pairs.sort_by_key(|&(i, j, _)| (i, j));
    pairs.dedup_by_key(|&mut (i, j, _)| (i, j));

    let inv_sigma_sq = 1.0 / (sigma * sigma);
    PatchGraph::assemble(
        n,
        pairs
            .into_iter()
            .map(|(i, j, d2)| (i, j, (-d2 * inv_sigma_sq).exp())),
        sigma,
    )
}
