use crate::error::{Error, Result};

/// Compressed sparse row matrix with cached squared row norms.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    row_norms_sq: Vec<f64>,
}

impl CsrMatrix {
    /// Rows given as `(column, value)` lists sorted by column.
    pub fn from_rows(cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut row_norms_sq = Vec::with_capacity(rows.len());
        row_ptr.push(0);
        for row in rows {
            if row.windows(2).any(|w| w[0].0 >= w[1].0) {
                return Err(Error::invalid("row entries must have increasing columns"));
            }
            let mut norm_sq = 0.0;
            for (j, v) in row {
                if j >= cols {
                    return Err(Error::invalid(format!("column {j} out of range ({cols})")));
                }
                if !v.is_finite() {
                    return Err(Error::invalid("matrix entries must be finite"));
                }
                col_idx.push(j);
                values.push(v);
                norm_sq += v * v;
            }
            row_norms_sq.push(norm_sq);
            row_ptr.push(col_idx.len());
        }
        Ok(CsrMatrix {
            cols,
            row_ptr,
            col_idx,
            values,
            row_norms_sq,
        })
    }

    /// Dense row-major input; exact zeros are dropped.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("ragged dense matrix"));
        }
        let sparse = rows
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .map(|(j, &v)| (j, v))
                    .collect()
            })
            .collect();
        Self::from_rows(cols, sparse)
    }

    pub fn rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[range.clone()], &self.values[range])
    }

    pub fn row_norms_sq(&self) -> &[f64] {
        &self.row_norms_sq
    }

    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let (cols, w) = self.row(i);
        cols.iter().zip(w).map(|(&j, &a)| a * x[j]).sum()
    }

    /// `A·x`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::invalid(format!(
                "matrix has {} columns, vector has length {}",
                self.cols,
                x.len()
            )));
        }
        Ok((0..self.rows()).map(|i| self.row_dot(i, x)).collect())
    }

    /// `Aᵀ·y`.
    pub fn apply_transpose(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.rows() {
            return Err(Error::invalid(format!(
                "matrix has {} rows, vector has length {}",
                self.rows(),
                y.len()
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (i, &yi) in y.iter().enumerate() {
            if yi == 0.0 {
                continue;
            }
            let (cols, w) = self.row(i);
            for (&j, &a) in cols.iter().zip(w) {
                out[j] += a * yi;
            }
        }
        Ok(out)
    }
}
