use crate::error::{Error, Result};

/// Square grayscale raster, row-major, row 0 at the top.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    n: usize,
    pixels: Vec<f64>,
}

impl Image {
    pub fn new(n: usize, pixels: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("image side must be positive"));
        }
        if pixels.len() != n * n {
            return Err(Error::invalid(format!(
                "image of side {n} needs {} pixels, got {}",
                n * n,
                pixels.len()
            )));
        }
        if pixels.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("image pixels must be finite"));
        }
        Ok(Image { n, pixels })
    }

    pub fn zeros(n: usize) -> Self {
        Image {
            n,
            pixels: vec![0.0; n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [f64] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.n + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.pixels[row * self.n..(row + 1) * self.n]
    }

    pub fn max_value(&self) -> f64 {
        self.pixels
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.pixels.iter().copied().fold(f64::INFINITY, f64::min)
    }
}
