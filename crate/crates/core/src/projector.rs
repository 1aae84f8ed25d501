//! Parallel-beam geometry and the sparse projection matrix.
//!
//! The image occupies the square `[-n/2, n/2]²` in pixel units with `y`
//! pointing up (row 0 is the top row). For angle `θ` the detector axis is
//! `(cos θ, sin θ)` and rays travel along `(-sin θ, cos θ)`, so ray `r`
//! collects the line integral over `{x cos θ + y sin θ = t_r}`. Row `k·p + r`
//! of the matrix belongs to ray `r` at angle `k`, which matches the
//! column-major layout of [`Sinogram`].

use std::ops::Deref;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::sparse::CsrMatrix;

/// Intersections shorter than this are treated as grazing contacts.
const MIN_SEGMENT: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    n: usize,
    p: usize,
    q: usize,
    angles: Vec<f64>,
    detector_span: f64,
}

impl Geometry {
    /// `q` equally spaced angles over `[0°, 180°)`, `p` rays spread evenly over
    /// `detector_span` pixel units and centred on the image.
    pub fn new(n: usize, p: usize, q: usize, detector_span: f64) -> Result<Self> {
        if n == 0 || p == 0 || q == 0 {
            return Err(Error::invalid(format!(
                "geometry needs n, p, q >= 1 (got n={n}, p={p}, q={q})"
            )));
        }
        if !detector_span.is_finite() || detector_span < n as f64 {
            return Err(Error::invalid(format!(
                "detector span {detector_span} must be at least the image side {n}"
            )));
        }
        let angles = (0..q).map(|k| 180.0 * k as f64 / q as f64).collect();
        Ok(Geometry {
            n,
            p,
            q,
            angles,
            detector_span,
        })
    }

    /// Detector span `n√2`, so every ray family covers the image diagonal.
    pub fn full_coverage(n: usize, p: usize, q: usize) -> Result<Self> {
        Self::new(n, p, q, n as f64 * std::f64::consts::SQRT_2)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Angles in degrees.
    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn detector_span(&self) -> f64 {
        self.detector_span
    }

    /// Distance between neighbouring rays.
    pub fn ray_spacing(&self) -> f64 {
        self.detector_span / self.p as f64
    }

    /// Signed detector coordinate of ray `r`.
    pub fn ray_offset(&self, r: usize) -> f64 {
        (r as f64 + 0.5) * self.ray_spacing() - 0.5 * self.detector_span
    }

    pub fn rows(&self) -> usize {
        self.p * self.q
    }

    pub fn cols(&self) -> usize {
        self.n * self.n
    }
}

/// Sinogram stored column by column: `values[k * p + r]` is ray `r` at angle `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    p: usize,
    q: usize,
    values: Vec<f64>,
}

impl Sinogram {
    pub fn new(p: usize, q: usize, values: Vec<f64>) -> Result<Self> {
        if p == 0 || q == 0 {
            return Err(Error::invalid("sinogram dimensions must be positive"));
        }
        if values.len() != p * q {
            return Err(Error::invalid(format!(
                "sinogram {p}x{q} needs {} values, got {}",
                p * q,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("sinogram values must be finite"));
        }
        Ok(Sinogram { p, q, values })
    }

    pub fn zeros(p: usize, q: usize) -> Self {
        Sinogram {
            p,
            q,
            values: vec![0.0; p * q],
        }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, ray: usize, angle: usize) -> f64 {
        self.values[angle * self.p + ray]
    }

    /// Detector profile at one angle.
    pub fn column(&self, angle: usize) -> &[f64] {
        &self.values[angle * self.p..(angle + 1) * self.p]
    }

    /// Same-shaped sinogram with new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Sinogram::new(self.p, self.q, values)
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Sparse `pq × n²` matrix of ray/pixel intersection lengths together with
/// the geometry it was traced for.
#[derive(Debug, Clone)]
pub struct ProjectionOperator {
    geometry: Geometry,
    matrix: CsrMatrix,
}

impl ProjectionOperator {
    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }
}

impl Deref for ProjectionOperator {
    type Target = CsrMatrix;

    fn deref(&self) -> &CsrMatrix {
        &self.matrix
    }
}

/// Intersection segments of one ray with the pixel grid, as `(pixel, length)`
/// sorted by pixel index.
fn trace_ray(n: usize, theta_deg: f64, offset: f64) -> Vec<(usize, f64)> {
    let (sin, cos) = theta_deg.to_radians().sin_cos();
    let half = n as f64 / 2.0;
    // Point on the ray closest to the origin, and the unit direction.
    let origin = (offset * cos, offset * sin);
    let dir = (-sin, cos);

    // Clip the parameter range to the image square (slab method).
    let mut s_lo = f64::NEG_INFINITY;
    let mut s_hi = f64::INFINITY;
    for (o, d) in [(origin.0, dir.0), (origin.1, dir.1)] {
        if d.abs() < 1e-15 {
            if o <= -half || o >= half {
                return Vec::new();
            }
        } else {
            let a = (-half - o) / d;
            let b = (half - o) / d;
            s_lo = s_lo.max(a.min(b));
            s_hi = s_hi.min(a.max(b));
        }
    }
    if s_hi - s_lo <= MIN_SEGMENT {
        return Vec::new();
    }

    let mut crossings = vec![s_lo, s_hi];
    for (o, d) in [(origin.0, dir.0), (origin.1, dir.1)] {
        if d.abs() < 1e-15 {
            continue;
        }
        for k in 1..n {
            let s = (k as f64 - half - o) / d;
            if s > s_lo && s < s_hi {
                crossings.push(s);
            }
        }
    }
    crossings.sort_by(f64::total_cmp);

    let mut segments: Vec<(usize, f64)> = Vec::with_capacity(crossings.len());
    for pair in crossings.windows(2) {
        let len = pair[1] - pair[0];
        if len <= MIN_SEGMENT {
            continue;
        }
        let mid = 0.5 * (pair[0] + pair[1]);
        let x = origin.0 + mid * dir.0;
        let y = origin.1 + mid * dir.1;
        let col = ((x + half).floor() as isize).clamp(0, n as isize - 1) as usize;
        let from_bottom = ((y + half).floor() as isize).clamp(0, n as isize - 1) as usize;
        let row = n - 1 - from_bottom;
        segments.push((row * n + col, len));
    }
    segments.sort_by_key(|&(j, _)| j);
    // A cell is entered at most once by a straight line, but merge just in case
    // floating point splits one crossing in two.
    segments.dedup_by(|b, a| {
        if a.0 == b.0 {
            a.1 += b.1;
            true
        } else {
            false
        }
    });
    segments
}

/// Build the projection matrix for `geometry` by exact ray tracing.
/// Rays that miss the image produce empty rows, which are kept.
pub fn build_projector(geometry: &Geometry) -> ProjectionOperator {
    let n = geometry.n();
    let rows = geometry
        .angles()
        .iter()
        .flat_map(|&theta| (0..geometry.p()).map(move |r| (theta, r)))
        .map(|(theta, r)| trace_ray(n, theta, geometry.ray_offset(r)))
        .collect();
    let matrix =
        CsrMatrix::from_rows(geometry.cols(), rows).expect("traced rows are sorted and in range");
    ProjectionOperator {
        geometry: geometry.clone(),
        matrix,
    }
}

/// `A·x` as a sinogram.
pub fn forward_project(a: &ProjectionOperator, x: &Image) -> Result<Sinogram> {
    if x.n() * x.n() != a.cols() {
        return Err(Error::invalid(format!(
            "image side {} does not match operator built for side {}",
            x.n(),
            a.geometry().n()
        )));
    }
    let values = a.apply(x.pixels())?;
    Ok(Sinogram {
        p: a.geometry().p(),
        q: a.geometry().q(),
        values,
    })
}

/// `Aᵀ·s` as an image.
pub fn back_project(a: &ProjectionOperator, s: &Sinogram) -> Result<Image> {
    if s.p() * s.q() != a.rows() {
        return Err(Error::invalid(format!(
            "sinogram {}x{} does not match operator with {} rows",
            s.p(),
            s.q(),
            a.rows()
        )));
    }
    let pixels = a.apply_transpose(s.values())?;
    Image::new(a.geometry().n(), pixels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    #[test]
    fn geometry_validation() {
        assert!(Geometry::new(0, 1, 1, 1.0).is_err());
        assert!(Geometry::new(4, 0, 1, 4.0).is_err());
        assert!(Geometry::new(4, 1, 0, 4.0).is_err());
        assert!(Geometry::new(4, 3, 2, 3.9).is_err());
        let g = Geometry::new(4, 3, 4, 4.0).unwrap();
        assert_eq!(g.angles(), &[0.0, 45.0, 90.0, 135.0]);
        assert_eq!(g.rows(), 12);
        assert_eq!(g.cols(), 16);
    }

    #[test]
    fn horizontal_ray_through_top_row() {
        // q = 2 gives angles 0° and 90°; at 90° rays are horizontal and the
        // ray with offset +0.5 runs through the middle of the top row.
        let g = Geometry::new(2, 2, 2, 2.0).unwrap();
        assert_eq!(g.ray_offset(1), 0.5);
        let a = build_projector(&g);
        let (cols, w) = a.row(2 + 1);
        assert_eq!(cols, &[0, 1]);
        for &v in w {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn diagonal_ray_through_center() {
        let g = Geometry::new(2, 1, 4, 2.0).unwrap();
        let a = build_projector(&g);
        // angle index 1 is 45°
        let (cols, w) = a.row(1);
        assert_eq!(cols.len(), 2);
        // x cos45 + y sin45 = 0 runs through the top-left and bottom-right cells.
        assert_eq!(cols, &[0, 3]);
        for &v in w {
            assert!((v - SQRT_2).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_rows_are_kept() {
        let g = Geometry::full_coverage(64, 95, 36).unwrap();
        let a = build_projector(&g);
        assert_eq!(a.rows(), 3420);
        assert_eq!(a.cols(), 4096);
        // outermost rays at 0° pass outside the square
        assert_eq!(a.row(0).0.len(), 0);
        assert_eq!(a.row_norms_sq()[0], 0.0);
    }

    #[test]
    fn weight_and_row_bounds() {
        for (n, p, q) in [(8, 13, 7), (64, 95, 36), (5, 9, 5)] {
            let g = Geometry::full_coverage(n, p, q).unwrap();
            let a = build_projector(&g);
            for i in 0..a.rows() {
                let (cols, w) = a.row(i);
                assert!(cols.len() <= 2 * n);
                assert!(cols.windows(2).all(|c| c[0] < c[1]));
                for &v in w {
                    assert!(v > 0.0 && v <= n as f64 * SQRT_2 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let g = Geometry::full_coverage(8, 11, 4).unwrap();
        let a = build_projector(&g);
        assert!(forward_project(&a, &Image::zeros(7)).is_err());
        assert!(back_project(&a, &Sinogram::zeros(11, 5)).is_err());
    }

    #[test]
    fn zero_in_zero_out() {
        let g = Geometry::full_coverage(8, 11, 4).unwrap();
        let a = build_projector(&g);
        let s = forward_project(&a, &Image::zeros(8)).unwrap();
        assert!(s.values().iter().all(|&v| v == 0.0));
        let x = back_project(&a, &Sinogram::zeros(11, 4)).unwrap();
        assert!(x.pixels().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn impulse_gives_matrix_column() {
        let g = Geometry::full_coverage(8, 11, 6).unwrap();
        let a = build_projector(&g);
        let j = 27;
        let mut px = vec![0.0; 64];
        px[j] = 1.0;
        let s = forward_project(&a, &Image::new(8, px).unwrap()).unwrap();
        for i in 0..a.rows() {
            let (cols, w) = a.row(i);
            let expected = cols.iter().position(|&c| c == j).map_or(0.0, |k| w[k]);
            assert_eq!(s.values()[i], expected);
        }
    }

    #[test]
    fn single_ray_backprojects_to_its_cells() {
        let g = Geometry::full_coverage(8, 11, 6).unwrap();
        let a = build_projector(&g);
        let i = 2 * 11 + 5;
        let mut y = vec![0.0; a.rows()];
        y[i] = 1.0;
        let img = back_project(&a, &Sinogram::new(11, 6, y).unwrap()).unwrap();
        let support: Vec<usize> = img
            .pixels()
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(j, _)| j)
            .collect();
        assert_eq!(support, a.row(i).0);
    }
}
