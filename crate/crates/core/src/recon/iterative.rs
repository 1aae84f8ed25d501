//! Row-action solvers: Kaczmarz (ART) and Cimmino (SIRT).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::metrics::ErrorCurve;
use crate::noise::gaussian_vector;
use crate::sparse::CsrMatrix;

/// Iterates above this norm are treated as divergence.
const DIVERGENCE_NORM: f64 = 1e12;

/// Called with the current iterate after every sweep/iteration; the returned
/// value is appended to the error curve.
pub type Tracker<'a> = &'a mut dyn FnMut(&[f64]) -> f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RowOrder {
    #[default]
    Sequential,
    /// Fresh permutation every sweep.
    Randomized(u64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArtConfig {
    /// Relaxation, strictly inside `(0, 2)`.
    pub lambda: f64,
    pub sweeps: usize,
    pub row_order: RowOrder,
}

impl Default for ArtConfig {
    fn default() -> Self {
        ArtConfig {
            lambda: 0.25,
            sweeps: 50,
            row_order: RowOrder::Sequential,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SirtConfig {
    pub lambda: f64,
    pub iterations: usize,
}

impl Default for SirtConfig {
    fn default() -> Self {
        SirtConfig {
            lambda: 1.0,
            iterations: 200,
        }
    }
}

impl SirtConfig {
    /// Relaxation `1.9 / ρ(T)` where `T = (1/m) Σ a_i a_iᵀ / ‖a_i‖²`, just
    /// under the stability limit `2 / ρ(T)`.
    pub fn with_auto_lambda(a: &CsrMatrix, iterations: usize) -> Self {
        SirtConfig {
            lambda: 1.9 / cimmino_spectral_radius(a),
            iterations,
        }
    }
}

fn check_system(a: &CsrMatrix, b: &[f64], x0: &[f64]) -> Result<()> {
    if b.len() != a.rows() {
        return Err(Error::invalid(format!(
            "data has length {}, operator has {} rows",
            b.len(),
            a.rows()
        )));
    }
    if x0.len() != a.cols() {
        return Err(Error::invalid(format!(
            "initial guess has length {}, operator has {} columns",
            x0.len(),
            a.cols()
        )));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("data must be finite"));
    }
    Ok(())
}

/// Kaczmarz sweeps `x ← x + λ (b_i − ⟨a_i, x⟩)/‖a_i‖² a_i`; empty rows are
/// skipped.
pub fn art(
    a: &CsrMatrix,
    b: &[f64],
    cfg: &ArtConfig,
    x0: &[f64],
    mut tracker: Option<Tracker<'_>>,
) -> Result<(Vec<f64>, ErrorCurve)> {
    check_system(a, b, x0)?;
    if !(cfg.lambda > 0.0 && cfg.lambda < 2.0) {
        return Err(Error::invalid(format!(
            "ART relaxation must lie in (0, 2), got {}",
            cfg.lambda
        )));
    }
    if cfg.sweeps == 0 {
        return Err(Error::invalid("ART needs at least one sweep"));
    }
    let norms = a.row_norms_sq();
    let mut order: Vec<usize> = (0..a.rows()).filter(|&i| norms[i] > 0.0).collect();
    let mut rng = match cfg.row_order {
        RowOrder::Randomized(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        RowOrder::Sequential => None,
    };
    let mut x = x0.to_vec();
    let mut curve = ErrorCurve::new("ART");
    for _ in 0..cfg.sweeps {
        if let Some(rng) = rng.as_mut() {
            order.shuffle(rng);
        }
        for &i in &order {
            let step = cfg.lambda * (b[i] - a.row_dot(i, &x)) / norms[i];
            let (cols, w) = a.row(i);
            for (&j, &aij) in cols.iter().zip(w) {
                x[j] += step * aij;
            }
        }
        check_finite(&x)?;
        if let Some(t) = tracker.as_mut() {
            curve.values.push(t(&x));
        }
    }
    Ok((x, curve))
}

/// Cimmino iterations
/// `x ← x + (λ/m) Σ_i (b_i − ⟨a_i, x⟩)/‖a_i‖² a_i` with unit row weights;
/// `m` counts the non-empty rows only.
pub fn sirt(
    a: &CsrMatrix,
    b: &[f64],
    cfg: &SirtConfig,
    x0: &[f64],
    mut tracker: Option<Tracker<'_>>,
) -> Result<(Vec<f64>, ErrorCurve)> {
    check_system(a, b, x0)?;
    if !(cfg.lambda.is_finite() && cfg.lambda > 0.0) {
        return Err(Error::invalid(format!(
            "SIRT relaxation must be positive, got {}",
            cfg.lambda
        )));
    }
    if cfg.iterations == 0 {
        return Err(Error::invalid("SIRT needs at least one iteration"));
    }
    let norms = a.row_norms_sq();
    let active: Vec<usize> = (0..a.rows()).filter(|&i| norms[i] > 0.0).collect();
    let m = active.len().max(1) as f64;
    let mut x = x0.to_vec();
    let mut residual = vec![0.0; a.rows()];
    let mut curve = ErrorCurve::new("SIRT");
    for _ in 0..cfg.iterations {
        for &i in &active {
            residual[i] = (b[i] - a.row_dot(i, &x)) / norms[i];
        }
        let update = a.apply_transpose(&residual)?;
        let scale = cfg.lambda / m;
        for (xj, uj) in x.iter_mut().zip(&update) {
            *xj += scale * uj;
        }
        check_finite(&x)?;
        if let Some(t) = tracker.as_mut() {
            curve.values.push(t(&x));
        }
    }
    Ok((x, curve))
}

fn check_finite(x: &[f64]) -> Result<()> {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !norm.is_finite() || norm > DIVERGENCE_NORM {
        return Err(Error::Divergence(format!(
            "iterate norm {norm:e} exceeds {DIVERGENCE_NORM:e}"
        )));
    }
    Ok(())
}

/// Largest eigenvalue of `T = (1/m) Σ a_i a_iᵀ / ‖a_i‖²` by power iteration.
pub fn cimmino_spectral_radius(a: &CsrMatrix) -> f64 {
    let norms = a.row_norms_sq();
    let m = norms.iter().filter(|&&v| v > 0.0).count().max(1) as f64;
    let mut v = gaussian_vector(a.cols(), 0xc1_33);
    let mut rho = 0.0;
    for _ in 0..1000 {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        let av = a.apply(&v).expect("length matches");
        let weighted: Vec<f64> = av
            .iter()
            .zip(norms)
            .map(|(y, &n2)| if n2 > 0.0 { y / n2 } else { 0.0 })
            .collect();
        let tv: Vec<f64> = a
            .apply_transpose(&weighted)
            .expect("length matches")
            .into_iter()
            .map(|x| x / m)
            .collect();
        let next: f64 = tv.iter().zip(&v).map(|(a, b)| a * b).sum();
        v = tv;
        let done = (next - rho).abs() <= 1e-10 * next;
        rho = next;
        if done {
            break;
        }
    }
    rho
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projector::{build_projector, Geometry};
    use crate::Error;

    #[test]
    fn rejects_bad_configs() {
        let g = Geometry::full_coverage(4, 6, 3).unwrap();
        let a = build_projector(&g);
        let b = vec![0.0; 18];
        let x0 = [0.0; 16];
        for lambda in [0.0, 2.0, -1.0] {
            let cfg = ArtConfig {
                lambda,
                ..ArtConfig::default()
            };
            assert!(art(&a, &b, &cfg, &x0, None).is_err());
        }
        assert!(art(&a, &b[..17], &ArtConfig::default(), &x0, None).is_err());
        assert!(art(&a, &b, &ArtConfig::default(), &[0.0; 9], None).is_err());
        let bad = SirtConfig {
            lambda: 0.0,
            iterations: 5,
        };
        assert!(sirt(&a, &b, &bad, &x0, None).is_err());
    }

    #[test]
    fn sirt_divergence_is_reported() {
        let g = Geometry::full_coverage(8, 12, 6).unwrap();
        let a = build_projector(&g);
        let b: Vec<f64> = (0..a.rows()).map(|i| (i % 7) as f64).collect();
        let cfg = SirtConfig {
            lambda: 50.0 / cimmino_spectral_radius(&a),
            iterations: 500,
        };
        assert!(matches!(
            sirt(&a, &b, &cfg, &[0.0; 64], None),
            Err(Error::Divergence(_))
        ));
    }

    #[test]
    fn randomized_order_is_seeded() {
        let g = Geometry::full_coverage(8, 12, 6).unwrap();
        let a = build_projector(&g);
        let b: Vec<f64> = (0..a.rows()).map(|i| (i % 5) as f64).collect();
        let cfg = ArtConfig {
            lambda: 0.5,
            sweeps: 3,
            row_order: RowOrder::Randomized(9),
        };
        let (x1, _) = art(&a, &b, &cfg, &[0.0; 64], None).unwrap();
        let (x2, _) = art(&a, &b, &cfg, &[0.0; 64], None).unwrap();
        assert_eq!(x1, x2);
    }
}
