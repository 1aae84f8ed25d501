//! Test images: the modified Shepp-Logan head phantom plus four phantoms in
//! a standard tomography test gallery (smooth, binary, grains, four phases).
//!
//! All phantoms are defined on normalized coordinates, so the same seed gives
//! the same picture at any resolution, and every phantom is rescaled so that
//! its maximum is 1.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::image::Image;

/// Smallest supported side length.
pub const MIN_SIDE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhantomKind {
    SheppLogan,
    Smooth,
    Binary,
    Grains,
    FourPhases,
}

impl PhantomKind {
    pub const ALL: [PhantomKind; 5] = [
        PhantomKind::SheppLogan,
        PhantomKind::Smooth,
        PhantomKind::Binary,
        PhantomKind::Grains,
        PhantomKind::FourPhases,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PhantomKind::SheppLogan => "shepp-logan",
            PhantomKind::Smooth => "smooth",
            PhantomKind::Binary => "binary",
            PhantomKind::Grains => "grains",
            PhantomKind::FourPhases => "fourphases",
        }
    }
}

impl fmt::Display for PhantomKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PhantomKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        match key.as_str() {
            "shepplogan" | "sheppl" | "sl" => Ok(PhantomKind::SheppLogan),
            "smooth" => Ok(PhantomKind::Smooth),
            "binary" => Ok(PhantomKind::Binary),
            "grains" => Ok(PhantomKind::Grains),
            "fourphases" => Ok(PhantomKind::FourPhases),
            _ => Err(Error::invalid(format!("unknown phantom kind `{s}`"))),
        }
    }
}

/// Ellipse in the unit square `[-1, 1]²`.
#[derive(Debug, Clone, Copy)]
struct Ellipse {
    intensity: f64,
    semi_x: f64,
    semi_y: f64,
    cx: f64,
    cy: f64,
    angle_deg: f64,
}

impl Ellipse {
    const fn new(
        intensity: f64,
        semi_x: f64,
        semi_y: f64,
        cx: f64,
        cy: f64,
        angle_deg: f64,
    ) -> Self {
        Ellipse {
            intensity,
            semi_x,
            semi_y,
            cx,
            cy,
            angle_deg,
        }
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        let (sin, cos) = self.angle_deg.to_radians().sin_cos();
        let dx = x - self.cx;
        let dy = y - self.cy;
        let u = dx * cos + dy * sin;
        let v = -dx * sin + dy * cos;
        (u / self.semi_x).powi(2) + (v / self.semi_y).powi(2) <= 1.0
    }
}

/// Modified Shepp-Logan table (Toft's contrast-enhanced intensities).
const MODIFIED_SHEPP_LOGAN: [Ellipse; 10] = [
    Ellipse::new(1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    Ellipse::new(-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    Ellipse::new(-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
    Ellipse::new(-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
    Ellipse::new(0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    Ellipse::new(0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    Ellipse::new(0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    Ellipse::new(0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    Ellipse::new(0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
    Ellipse::new(0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
];

/// Gaussian bump `amplitude * exp(-(u-cu)²/su² - (v-cv)²/sv²)` in `[0, 1]²`
/// coordinates (`u` down the rows, `v` across the columns).
#[derive(Debug, Clone, Copy)]
pub(crate) struct Bump {
    pub amplitude: f64,
    pub cu: f64,
    pub cv: f64,
    pub su: f64,
    pub sv: f64,
}

impl Bump {
    pub(crate) fn eval(&self, u: f64, v: f64) -> f64 {
        let du = (u - self.cu) / self.su;
        let dv = (v - self.cv) / self.sv;
        self.amplitude * (-(du * du) - dv * dv).exp()
    }
}

/// The four bumps of the smooth phantom.
pub(crate) const SMOOTH_BUMPS: [Bump; 4] = [
    Bump {
        amplitude: 1.0,
        cu: 0.6,
        cv: 0.6,
        su: 0.3,
        sv: 0.25,
    },
    Bump {
        amplitude: 0.5,
        cu: 0.5,
        cv: 0.3,
        su: 0.3,
        sv: 0.25,
    },
    Bump {
        amplitude: 0.7,
        cu: 0.2,
        cv: 0.7,
        su: 0.3,
        sv: 0.25,
    },
    Bump {
        amplitude: 0.9,
        cu: 0.8,
        cv: 0.2,
        su: 0.3,
        sv: 0.25,
    },
];

/// Pixel-centre coordinates in `[-1, 1]²` with `y` pointing up.
fn centered_coords(n: usize, row: usize, col: usize) -> (f64, f64) {
    let nf = n as f64;
    let x = (2 * col + 1) as f64 / nf - 1.0;
    let y = 1.0 - (2 * row + 1) as f64 / nf;
    (x, y)
}

/// Pixel-centre coordinates in `[0, 1]²`, `(row, col)` order.
fn unit_coords(n: usize, row: usize, col: usize) -> (f64, f64) {
    let nf = n as f64;
    ((row as f64 + 0.5) / nf, (col as f64 + 0.5) / nf)
}

fn rasterize(n: usize, f: impl Fn(usize, usize) -> f64) -> Vec<f64> {
    let mut pixels = Vec::with_capacity(n * n);
    for row in 0..n {
        for col in 0..n {
            pixels.push(f(row, col));
        }
    }
    pixels
}

fn normalize_max(pixels: &mut [f64]) {
    let max = pixels.iter().copied().fold(0.0_f64, f64::max);
    if max > 0.0 {
        for v in pixels.iter_mut() {
            *v /= max;
        }
    }
}

/// Sub-samples per pixel side when rasterizing ellipses.
const SUPERSAMPLE: usize = 4;

fn shepp_logan(n: usize) -> Vec<f64> {
    let fine = n * SUPERSAMPLE;
    let weight = 1.0 / (SUPERSAMPLE * SUPERSAMPLE) as f64;
    rasterize(n, |row, col| {
        let mut v = 0.0;
        for sr in 0..SUPERSAMPLE {
            for sc in 0..SUPERSAMPLE {
                let (x, y) = centered_coords(fine, row * SUPERSAMPLE + sr, col * SUPERSAMPLE + sc);
                let sample: f64 = MODIFIED_SHEPP_LOGAN
                    .iter()
                    .filter(|e| e.contains(x, y))
                    .map(|e| e.intensity)
                    .sum();
                v += sample;
            }
        }
        v *= weight;
        // 1 - 0.8 - 0.2 rounds to a tiny negative number.
        if v < 1e-12 {
            0.0
        } else {
            v
        }
    })
}

fn smooth(n: usize) -> Vec<f64> {
    rasterize(n, |row, col| {
        let (u, v) = unit_coords(n, row, col);
        SMOOTH_BUMPS.iter().map(|b| b.eval(u, v)).sum()
    })
}

fn random_bumps(rng: &mut ChaCha8Rng, count: usize, signed: bool, width: (f64, f64)) -> Vec<Bump> {
    (0..count)
        .map(|_| {
            let amplitude = if signed {
                rng.random_range(-1.0..1.0)
            } else {
                rng.random_range(0.5..1.0)
            };
            let s = rng.random_range(width.0..width.1);
            Bump {
                amplitude,
                cu: rng.random_range(0.15..0.85),
                cv: rng.random_range(0.15..0.85),
                su: s,
                sv: s * rng.random_range(0.7..1.4),
            }
        })
        .collect()
}

/// Value at the given fraction of the sorted pixel values.
fn quantile(pixels: &[f64], fraction: f64) -> f64 {
    let mut sorted = pixels.to_vec();
    sorted.sort_by(f64::total_cmp);
    let idx = ((sorted.len() as f64 * fraction) as usize).min(sorted.len() - 1);
    sorted[idx]
}

fn binary(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bumps = random_bumps(&mut rng, 14, false, (0.05, 0.12));
    let field = rasterize(n, |row, col| {
        let (u, v) = unit_coords(n, row, col);
        bumps.iter().map(|b| b.eval(u, v)).sum()
    });
    let threshold = quantile(&field, 0.7);
    field
        .iter()
        .map(|&v| if v >= threshold { 1.0 } else { 0.0 })
        .collect()
}

fn grains(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = 24;
    let sites: Vec<(f64, f64, f64)> = (0..count)
        .map(|_| {
            (
                rng.random_range(0.0..1.0),
                rng.random_range(0.0..1.0),
                rng.random_range(0.1..1.0),
            )
        })
        .collect();
    rasterize(n, |row, col| {
        let (u, v) = unit_coords(n, row, col);
        let mut best = (f64::INFINITY, 0.0);
        for &(su, sv, intensity) in &sites {
            let d = (u - su).powi(2) + (v - sv).powi(2);
            if d < best.0 {
                best = (d, intensity);
            }
        }
        best.1
    })
}

fn four_phases(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bumps = random_bumps(&mut rng, 30, true, (0.06, 0.16));
    let field = rasterize(n, |row, col| {
        let (u, v) = unit_coords(n, row, col);
        bumps.iter().map(|b| b.eval(u, v)).sum()
    });
    let cuts = [
        quantile(&field, 0.25),
        quantile(&field, 0.5),
        quantile(&field, 0.75),
    ];
    field
        .iter()
        .map(|&v| cuts.iter().filter(|&&c| v >= c).count() as f64 / 3.0)
        .collect()
}

/// Generate a phantom of side `n`. `seed` only affects the random kinds
/// (binary, grains, four phases).
pub fn generate_phantom(kind: PhantomKind, n: usize, seed: u64) -> Result<Image> {
    if n < MIN_SIDE {
        return Err(Error::invalid(format!(
            "phantom side must be at least {MIN_SIDE}, got {n}"
        )));
    }
    let mut pixels = match kind {
        PhantomKind::SheppLogan => shepp_logan(n),
        PhantomKind::Smooth => smooth(n),
        PhantomKind::Binary => binary(n, seed),
        PhantomKind::Grains => grains(n, seed),
        PhantomKind::FourPhases => four_phases(n, seed),
    };
    normalize_max(&mut pixels);
    Image::new(n, pixels)
}
