//! Gaussian corruption of sinograms at a prescribed relative noise level.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::projector::Sinogram;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// Target `‖e‖₂ / ‖s‖₂`.
    pub relative_level: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(relative_level: f64, seed: u64) -> Result<Self> {
        if !(relative_level.is_finite() && relative_level >= 0.0) {
            return Err(Error::invalid(format!(
                "relative noise level must be a finite nonnegative number, got {relative_level}"
            )));
        }
        Ok(NoiseSpec {
            relative_level,
            seed,
        })
    }
}

/// Standard normal draws from the seeded generator used for noise.
pub(crate) fn gaussian_vector(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Return `s + e` with `e` an i.i.d. Gaussian vector rescaled so that
/// `‖e‖₂ = η‖s‖₂` exactly.
pub fn add_noise(s: &Sinogram, spec: &NoiseSpec) -> Sinogram {
    let eta = spec.relative_level;
    let signal_norm = s.norm();
    if eta == 0.0 || signal_norm == 0.0 {
        return s.clone();
    }
    let g = gaussian_vector(s.values().len(), spec.seed);
    let g_norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    let scale = eta * signal_norm / g_norm;
    let values = s
        .values()
        .iter()
        .zip(&g)
        .map(|(v, e)| v + scale * e)
        .collect();
    Sinogram::new(s.p(), s.q(), values).expect("finite input plus finite noise")
}
