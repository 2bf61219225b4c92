use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mat::{DenseMat, DenseVec};

/// Any densified result larger than this many elements is refused unless
/// the caller passes an explicit budget.
pub const DEFAULT_DENSIFY_BUDGET: usize = 1 << 24;

/// Sparse matrix stored per row as `(column, value)` pairs.
///
/// Invariants, enforced at construction:
/// - columns within a row are strictly increasing and all `< cols`
/// - no row holds more than `max_row_nnz` entries
/// - every value is finite
///
/// The per-row layout fixes the reduction order of [`BandedMatrix::matvec`]:
/// each output entry is a left-to-right fold over ascending columns, so
/// results are bit-identical across runs and across the row-parallel
/// variant.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    rows: usize,
    cols: usize,
    max_row_nnz: usize,
    row_entries: Vec<Vec<(usize, f64)>>,
}

impl BandedMatrix {
    pub fn from_rows(
        rows: usize,
        cols: usize,
        max_row_nnz: usize,
        row_entries: Vec<Vec<(usize, f64)>>,
    ) -> Result<Self> {
        if row_entries.len() != rows {
            return Err(Error::LengthMismatch {
                op: "BandedMatrix::from_rows",
                expected: rows,
                got: row_entries.len(),
            });
        }
        for (r, row) in row_entries.iter().enumerate() {
            if row.len() > max_row_nnz {
                return Err(Error::InvalidSpec(format!(
                    "row {r} has {} entries, declared bound is {max_row_nnz}",
                    row.len()
                )));
            }
            let mut prev: Option<usize> = None;
            for &(c, v) in row {
                if c >= cols {
                    return Err(Error::InvalidSpec(format!(
                        "row {r} references column {c}, matrix has {cols} columns"
                    )));
                }
                if prev.is_some_and(|p| p >= c) {
                    return Err(Error::InvalidSpec(format!(
                        "row {r} columns are not strictly increasing at column {c}"
                    )));
                }
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        op: "BandedMatrix::from_rows",
                        index: c,
                    });
                }
                prev = Some(c);
            }
        }
        Ok(Self {
            rows,
            cols,
            max_row_nnz,
            row_entries,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn max_row_nnz(&self) -> usize {
        self.max_row_nnz
    }

    /// Total stored entries. One multiply-add per entry is exactly the
    /// work a matvec performs.
    pub fn nnz(&self) -> usize {
        self.row_entries.iter().map(Vec::len).sum()
    }

    pub fn row_entries(&self, r: usize) -> &[(usize, f64)] {
        &self.row_entries[r]
    }

    /// Stored value at `(r, c)`, or 0 for a structural zero.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        match self.row_entries[r].binary_search_by_key(&c, |e| e.0) {
            Ok(i) => self.row_entries[r][i].1,
            Err(_) => 0.0,
        }
    }

    /// Adds `delta` to the k-th stored value (row-major entry order).
    /// Exists for negative-control checks that confirm the verification
    /// suites actually see single-coefficient corruption.
    pub fn perturb_entry(&mut self, k: usize, delta: f64) {
        let mut seen = 0;
        for row in &mut self.row_entries {
            if k < seen + row.len() {
                row[k - seen].1 += delta;
                return;
            }
            seen += row.len();
        }
        panic!("perturb_entry: index {k} out of {seen} stored entries");
    }

    fn row_dot(row: &[(usize, f64)], x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for &(c, v) in row {
            acc += v * x[c];
        }
        acc
    }

    /// `self * x`, one sequential ascending-column fold per row.
    pub fn matvec(&self, x: &DenseVec) -> Result<DenseVec> {
        if x.len() != self.cols {
            return Err(Error::LengthMismatch {
                op: "BandedMatrix::matvec",
                expected: self.cols,
                got: x.len(),
            });
        }
        let xs = x.as_slice();
        let out = self
            .row_entries
            .iter()
            .map(|row| Self::row_dot(row, xs))
            .collect();
        Ok(DenseVec::from_raw(out))
    }

    /// Row-parallel `self * x`. Per-row folds are unchanged, so the
    /// result is bit-identical to [`BandedMatrix::matvec`].
    pub fn matvec_parallel(&self, x: &DenseVec) -> Result<DenseVec> {
        if x.len() != self.cols {
            return Err(Error::LengthMismatch {
                op: "BandedMatrix::matvec_parallel",
                expected: self.cols,
                got: x.len(),
            });
        }
        let xs = x.as_slice();
        let out = self
            .row_entries
            .par_iter()
            .map(|row| Self::row_dot(row, xs))
            .collect();
        Ok(DenseVec::from_raw(out))
    }

    /// `self^T * v` by scattering rows in ascending order. Accumulation
    /// order per output column is therefore fixed by construction.
    pub fn matvec_transpose(&self, v: &DenseVec) -> Result<DenseVec> {
        if v.len() != self.rows {
            return Err(Error::LengthMismatch {
                op: "BandedMatrix::matvec_transpose",
                expected: self.rows,
                got: v.len(),
            });
        }
        let mut out = vec![0.0; self.cols];
        for (r, row) in self.row_entries.iter().enumerate() {
            let vr = v[r];
            for &(c, val) in row {
                out[c] += val * vr;
            }
        }
        Ok(DenseVec::from_raw(out))
    }

    pub fn densify(&self) -> Result<DenseMat> {
        self.densify_with_budget(DEFAULT_DENSIFY_BUDGET)
    }

    pub fn densify_with_budget(&self, budget: usize) -> Result<DenseMat> {
        check_budget(self.rows, self.cols, budget)?;
        let mut out = DenseMat::zeros(self.rows, self.cols);
        for (r, row) in self.row_entries.iter().enumerate() {
            for &(c, v) in row {
                out.set(r, c, v);
            }
        }
        Ok(out)
    }

    /// Stored entries as `(row, col, value)` triples in row-major order.
    pub fn to_coords(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for (r, row) in self.row_entries.iter().enumerate() {
            for &(c, v) in row {
                out.push((r, c, v));
            }
        }
        out
    }

    /// Rebuilds a banded matrix from coordinate triples. The declared
    /// per-row bound becomes the widest row encountered.
    pub fn from_coords(rows: usize, cols: usize, coords: &[(usize, usize, f64)]) -> Result<Self> {
        let mut row_entries: Vec<Vec<(usize, f64)>> = vec![Vec::new(); rows];
        for &(r, c, v) in coords {
            if r >= rows {
                return Err(Error::InvalidSpec(format!(
                    "coordinate row {r} out of bounds for {rows} rows"
                )));
            }
            row_entries[r].push((c, v));
        }
        for row in &mut row_entries {
            row.sort_by_key(|e| e.0);
        }
        let widest = row_entries.iter().map(Vec::len).max().unwrap_or(0);
        Self::from_rows(rows, cols, widest, row_entries)
    }
}

pub(crate) fn check_budget(rows: usize, cols: usize, budget: usize) -> Result<()> {
    let elements = rows.checked_mul(cols).unwrap_or(usize::MAX);
    if elements > budget {
        return Err(Error::BudgetExceeded {
            rows,
            cols,
            elements,
            budget,
        });
    }
    Ok(())
}
