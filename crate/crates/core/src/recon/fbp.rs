use std::f64::consts::PI;
use std::str::FromStr;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::projector::{Geometry, Sinogram};

/// Ramp filter variant (apodization window applied to `|ω|`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Filter {
    #[default]
    RamLak,
    SheppLogan,
    Cosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    #[default]
    Linear,
    Nearest,
}

impl FromStr for Filter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "ramlak" | "ramp" => Ok(Filter::RamLak),
            "shepplogan" => Ok(Filter::SheppLogan),
            "cosine" => Ok(Filter::Cosine),
            _ => Err(Error::invalid(format!("unknown filter `{s}`"))),
        }
    }
}

impl FromStr for Interpolation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(Interpolation::Linear),
            "nearest" => Ok(Interpolation::Nearest),
            _ => Err(Error::invalid(format!("unknown interpolation `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FbpConfig {
    pub filter: Filter,
    pub interpolation: Interpolation,
}

/// Frequency response of the band-limited ramp on `len` samples of spacing `d`.
///
/// The ramp is built from its spatial kernel (`1/4d²` at zero,
/// `-1/(πkd)²` at odd `k`) rather than sampled as `|ω|` directly, which keeps
/// the DC term correct.
fn filter_response(filter: Filter, len: usize, d: f64) -> Vec<Complex64> {
    let mut kernel = vec![Complex64::new(0.0, 0.0); len];
    kernel[0].re = 1.0 / (4.0 * d * d);
    for k in 1..=len / 2 {
        if k % 2 == 1 {
            let v = -1.0 / (PI * PI * (k * k) as f64 * d * d);
            kernel[k].re = v;
            kernel[len - k].re = v;
        }
    }
    FftPlanner::new().plan_fft_forward(len).process(&mut kernel);
    for (m, h) in kernel.iter_mut().enumerate() {
        // signed frequency in cycles per sample, in [-1/2, 1/2)
        let f = if m <= len / 2 {
            m as f64 / len as f64
        } else {
            m as f64 / len as f64 - 1.0
        };
        let window = match filter {
            Filter::RamLak => 1.0,
            Filter::SheppLogan => {
                if f == 0.0 {
                    1.0
                } else {
                    (PI * f).sin() / (PI * f)
                }
            }
            Filter::Cosine => (PI * f).cos(),
        };
        // The kernel is real and even, so its spectrum is real.
        *h = Complex64::new(h.re * window, 0.0);
    }
    kernel
}

/// Filtered back-projection.
pub fn fbp(s: &Sinogram, geometry: &Geometry, cfg: &FbpConfig) -> Result<Image> {
    let (p, q, n) = (geometry.p(), geometry.q(), geometry.n());
    if s.p() != p || s.q() != q {
        return Err(Error::invalid(format!(
            "sinogram {}x{} does not match geometry {p}x{q}",
            s.p(),
            s.q()
        )));
    }
    let d = geometry.ray_spacing();
    let len = (2 * p).next_power_of_two();
    let response = filter_response(cfg.filter, len, d);

    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(len);
    let inverse = planner.plan_fft_inverse(len);
    let mut filtered = vec![0.0; p * q];
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for k in 0..q {
        buf.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        for (c, &v) in buf.iter_mut().zip(s.column(k)) {
            c.re = v;
        }
        forward.process(&mut buf);
        for (c, h) in buf.iter_mut().zip(&response) {
            *c *= h;
        }
        inverse.process(&mut buf);
        // rustfft leaves the inverse unnormalized; d is the convolution measure.
        let scale = d / len as f64;
        for (out, c) in filtered[k * p..(k + 1) * p].iter_mut().zip(&buf) {
            *out = c.re * scale;
        }
    }

    let half = n as f64 / 2.0;
    let span_half = 0.5 * geometry.detector_span();
    let trig: Vec<(f64, f64)> = geometry
        .angles()
        .iter()
        .map(|a| a.to_radians().sin_cos())
        .collect();
    let mut pixels = vec![0.0; n * n];
    for row in 0..n {
        let y = half - row as f64 - 0.5;
        for col in 0..n {
            let x = col as f64 + 0.5 - half;
            let mut acc = 0.0;
            for (k, &(sin, cos)) in trig.iter().enumerate() {
                let t = x * cos + y * sin;
                // fractional ray index: ray r sits at (r + 0.5)·d − span/2
                let u = (t + span_half) / d - 0.5;
                let profile = &filtered[k * p..(k + 1) * p];
                acc += match cfg.interpolation {
                    Interpolation::Nearest => {
                        let r = u.round();
                        if r >= 0.0 && r <= (p - 1) as f64 {
                            profile[r as usize]
                        } else {
                            0.0
                        }
                    }
                    Interpolation::Linear => {
                        let r0 = u.floor();
                        let frac = u - r0;
                        let at = |r: f64| {
                            if r >= 0.0 && r <= (p - 1) as f64 {
                                profile[r as usize]
                            } else {
                                0.0
                            }
                        };
                        (1.0 - frac) * at(r0) + frac * at(r0 + 1.0)
                    }
                };
            }
            pixels[row * n + col] = acc * PI / q as f64;
        }
    }
    Image::new(n, pixels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_sinogram() {
        let g = Geometry::full_coverage(16, 23, 12).unwrap();
        let img = fbp(&Sinogram::zeros(23, 12), &g, &FbpConfig::default()).unwrap();
        assert!(img.pixels().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn shape_mismatch() {
        let g = Geometry::full_coverage(16, 23, 12).unwrap();
        assert!(fbp(&Sinogram::zeros(23, 11), &g, &FbpConfig::default()).is_err());
    }

    #[test]
    fn windows_attenuate_high_frequencies() {
        let ram = filter_response(Filter::RamLak, 64, 1.0);
        let sl = filter_response(Filter::SheppLogan, 64, 1.0);
        let cos = filter_response(Filter::Cosine, 64, 1.0);
        // DC of the band-limited ramp is small but positive, Nyquist is 1/2d.
        assert!(ram[0].re > 0.0 && ram[0].re < 0.01);
        assert!((ram[32].re - 0.5).abs() < 1e-2);
        assert!(sl[32].re < ram[32].re && cos[32].re.abs() < 1e-12);
        for m in 1..32 {
            assert!(ram[m].re > ram[m - 1].re);
        }
    }

    #[test]
    fn parse_names() {
        assert_eq!("ram-lak".parse::<Filter>().unwrap(), Filter::RamLak);
        assert_eq!("Shepp_Logan".parse::<Filter>().unwrap(), Filter::SheppLogan);
        assert_eq!(
            "nearest".parse::<Interpolation>().unwrap(),
            Interpolation::Nearest
        );
        assert!("hann".parse::<Filter>().is_err());
    }
}
