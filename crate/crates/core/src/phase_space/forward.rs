use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{ContextSet, LatentGrid, OutcomeBinning};
use crate::{Error, Result};

/// Column-compressed `(J K) x N` forward matrix.
///
/// Column `i` holds the readout response of latent point `i`: within each
/// context block its entries form a probability vector over the `K`
/// outcomes. Row indices are sorted within each column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardMatrix {
    contexts: usize,
    outcomes: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<u32>,
    values: Vec<f64>,
}

/// One sparse column.
#[derive(Debug, Clone, Copy)]
pub struct Column<'a> {
    pub rows: &'a [u32],
    pub values: &'a [f64],
}

impl Column<'_> {
    pub fn dot(&self, x: &[f64]) -> f64 {
        self.rows
            .iter()
            .zip(self.values)
            .map(|(&r, &v)| v * x[r as usize])
            .sum()
    }

    pub fn dot_column(&self, other: &Column<'_>) -> f64 {
        let (mut a, mut b, mut acc) = (0, 0, 0.0);
        while a < self.rows.len() && b < other.rows.len() {
            match self.rows[a].cmp(&other.rows[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.values[a] * other.values[b];
                    a += 1;
                    b += 1;
                }
            }
        }
        acc
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

impl ForwardMatrix {
    /// Assemble from sparse columns of `(row, value)` pairs. Rows are sorted
    /// and exact zeros dropped.
    pub fn from_columns(contexts: usize, outcomes: usize, columns: Vec<Vec<(u32, f64)>>) -> Result<Self> {
        if contexts == 0 || outcomes == 0 {
            return Err(Error::config("forward matrix needs at least one context and outcome"));
        }
        let rows = contexts * outcomes;
        if rows > u32::MAX as usize {
            return Err(Error::config("too many rows"));
        }
        let mut col_ptr = Vec::with_capacity(columns.len() + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for (i, mut col) in columns.into_iter().enumerate() {
            col.sort_by_key(|&(r, _)| r);
            for w in col.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(Error::Format(format!("duplicate row {} in column {i}", w[0].0)));
                }
            }
            for (r, v) in col {
                if r as usize >= rows {
                    return Err(Error::DimensionMismatch {
                        expected: rows,
                        got: r as usize + 1,
                    });
                }
                if !v.is_finite() {
                    return Err(Error::Format(format!("non-finite entry in column {i}")));
                }
                if v != 0.0 {
                    row_idx.push(r);
                    values.push(v);
                }
            }
            col_ptr.push(row_idx.len());
        }
        Ok(Self {
            contexts,
            outcomes,
            col_ptr,
            row_idx,
            values,
        })
    }

    /// Dense column-major data of shape `(J K) x N`.
    pub fn from_dense(contexts: usize, outcomes: usize, n_columns: usize, data: &[f64]) -> Result<Self> {
        let rows = contexts * outcomes;
        Error::check_dim(rows * n_columns, data.len())?;
        let columns = data
            .chunks(rows.max(1))
            .map(|c| {
                c.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(r, &v)| (r as u32, v))
                    .collect()
            })
            .collect();
        Self::from_columns(contexts, outcomes, columns)
    }

    pub(crate) fn from_raw_parts(
        contexts: usize,
        outcomes: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<u32>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let ok = !col_ptr.is_empty()
            && col_ptr[0] == 0
            && col_ptr.windows(2).all(|w| w[0] <= w[1])
            && *col_ptr.last().unwrap() == row_idx.len()
            && row_idx.len() == values.len();
        if !ok {
            return Err(Error::Format("inconsistent sparse matrix layout".into()));
        }
        let columns = (0..col_ptr.len() - 1)
            .map(|i| (col_ptr[i]..col_ptr[i + 1]).map(|p| (row_idx[p], values[p])).collect())
            .collect();
        Self::from_columns(contexts, outcomes, columns)
    }

    pub fn contexts(&self) -> usize {
        self.contexts
    }

    pub fn outcomes(&self) -> usize {
        self.outcomes
    }

    /// `J K`
    pub fn rows(&self) -> usize {
        self.contexts * self.outcomes
    }

    /// `N`
    pub fn cols(&self) -> usize {
        self.col_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn column(&self, i: usize) -> Column<'_> {
        let range = self.col_ptr[i]..self.col_ptr[i + 1];
        Column {
            rows: &self.row_idx[range.clone()],
            values: &self.values[range],
        }
    }

    pub fn column_dense(&self, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.rows()];
        let col = self.column(i);
        for (&r, &v) in col.rows.iter().zip(col.values) {
            out[r as usize] = v;
        }
        out
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let c = self.column(col);
        match c.rows.binary_search(&(row as u32)) {
            Ok(p) => c.values[p],
            Err(_) => 0.0,
        }
    }

    pub(crate) fn raw_parts(&self) -> (&[usize], &[u32], &[f64]) {
        (&self.col_ptr, &self.row_idx, &self.values)
    }

    /// `A w`
    pub fn apply(&self, w: &[f64]) -> Result<Vec<f64>> {
        Error::check_dim(self.cols(), w.len())?;
        let mut out = vec![0.0; self.rows()];
        for (i, &wi) in w.iter().enumerate() {
            if wi == 0.0 {
                continue;
            }
            let col = self.column(i);
            for (&r, &v) in col.rows.iter().zip(col.values) {
                out[r as usize] += v * wi;
            }
        }
        Ok(out)
    }

    /// `A^T x`, one entry per column.
    pub fn apply_transpose(&self, x: &[f64]) -> Result<Vec<f64>> {
        Error::check_dim(self.rows(), x.len())?;
        Ok((0..self.cols()).map(|i| self.column(i).dot(x)).collect())
    }

    /// Largest deviation of any column's context-block sum from one.
    pub fn block_sum_deviation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let mut sums = vec![0.0; self.contexts];
        for i in 0..self.cols() {
            sums.iter_mut().for_each(|s| *s = 0.0);
            let col = self.column(i);
            for (&r, &v) in col.rows.iter().zip(col.values) {
                sums[r as usize / self.outcomes] += v;
            }
            for s in &sums {
                worst = worst.max((s - 1.0).abs());
            }
        }
        worst
    }

    /// Whether every entry lies in `[0, 1]`.
    pub fn entries_in_unit_interval(&self) -> bool {
        self.values.iter().all(|v| (0.0..=1.0).contains(v))
    }
}

/// Indicator forward matrix: latent point `i` under context `j` lands in
/// the bin containing `zeta_i cos theta_j + eta_i sin theta_j`.
pub fn build_forward_matrix(
    grid: &LatentGrid,
    contexts: &ContextSet,
    binning: &OutcomeBinning,
) -> Result<ForwardMatrix> {
    let k = binning.len();
    let dirs: Vec<(f64, f64)> = (0..contexts.len()).map(|j| contexts.direction(j)).collect();
    let columns = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let (zeta, eta) = grid.point(i);
            dirs.iter()
                .enumerate()
                .map(|(j, &(c, s))| {
                    let y = zeta * c + eta * s;
                    let bin = binning.bin_of(y).ok_or(Error::ProjectionOutOfRange {
                        point: i,
                        context: j,
                        y,
                        y_max: binning.y_max(),
                    })?;
                    Ok(((j * k + bin) as u32, 1.0))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    ForwardMatrix::from_columns(contexts.len(), k, columns)
}
