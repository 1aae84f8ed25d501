//! Reconstruction error measures, error curves and line profiles.

use crate::error::{Error, Result};
use crate::image::Image;

/// Per-iteration reconstruction error of one method.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ErrorCurve {
    pub values: Vec<f64>,
    pub method_label: String,
}

impl ErrorCurve {
    pub fn new(method_label: impl Into<String>) -> Self {
        ErrorCurve {
            values: Vec::new(),
            method_label: method_label.into(),
        }
    }

    pub fn last(&self) -> Option<f64> {
        self.values.last().copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntensityProfile {
    pub row_index: usize,
    pub values: Vec<f64>,
}

fn check_same(x: &Image, x_true: &Image) -> Result<()> {
    if x.n() != x_true.n() {
        return Err(Error::invalid(format!(
            "image sides differ: {} vs {}",
            x.n(),
            x_true.n()
        )));
    }
    Ok(())
}

/// Unnormalized Euclidean distance `‖x − x_true‖₂`.
pub fn l2_error(x: &Image, x_true: &Image) -> Result<f64> {
    check_same(x, x_true)?;
    Ok(l2_distance(x.pixels(), x_true.pixels()))
}

/// `‖x − x_true‖₂ / ‖x_true‖₂`.
pub fn relative_l2_error(x: &Image, x_true: &Image) -> Result<f64> {
    check_same(x, x_true)?;
    let norm = l2_distance(x_true.pixels(), &vec![0.0; x_true.pixels().len()]);
    if norm == 0.0 {
        return Err(Error::invalid(
            "relative error against an all-zero reference",
        ));
    }
    Ok(l2_distance(x.pixels(), x_true.pixels()) / norm)
}

pub(crate) fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Row `row` of the image, left to right.
pub fn profile(x: &Image, row: usize) -> Result<IntensityProfile> {
    if row >= x.n() {
        return Err(Error::invalid(format!(
            "profile row {row} out of range for side {}",
            x.n()
        )));
    }
    Ok(IntensityProfile {
        row_index: row,
        values: x.row(row).to_vec(),
    })
}

/// `(iteration, value)` of the smallest error; ties go to the earliest.
pub fn min_error(curve: &ErrorCurve) -> Result<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (k, &v) in curve.values.iter().enumerate() {
        if best.is_none_or(|(_, b)| v < b) {
            best = Some((k, v));
        }
    }
    best.ok_or_else(|| Error::invalid("min_error of an empty curve"))
}
