use crate::error::{Error, Result};
use crate::mat::banded::check_budget;
use crate::mat::{DenseMat, DenseVec, DEFAULT_DENSIFY_BUDGET};

/// Sparse bilinear form acting on the implicit lift `x (x) x`.
///
/// Entry `(m, i, j, v)` contributes `v * x[i] * x[j]` to output `m`.
/// Triples `(m, i, j)` are unique and kept sorted; [`LiftedAttnMatrix::apply`]
/// walks them in that order, so evaluation is deterministic and never
/// materializes the `in_dim^2` lifted vector.
///
/// Viewed as a matrix it has `out_dim` rows and `in_dim^2` columns, with
/// `(i, j)` flattened to column `i * in_dim + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedAttnMatrix {
    out_dim: usize,
    in_dim: usize,
    entries: Vec<(usize, usize, usize, f64)>,
}

impl LiftedAttnMatrix {
    pub fn new(
        out_dim: usize,
        in_dim: usize,
        mut entries: Vec<(usize, usize, usize, f64)>,
    ) -> Result<Self> {
        for &(m, i, j, v) in &entries {
            if m >= out_dim || i >= in_dim || j >= in_dim {
                return Err(Error::InvalidSpec(format!(
                    "lifted entry ({m}, {i}, {j}) out of bounds for {out_dim} outputs, {in_dim} inputs"
                )));
            }
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    op: "LiftedAttnMatrix::new",
                    index: m,
                });
            }
        }
        entries.sort_by_key(|&(m, i, j, _)| (m, i, j));
        for pair in entries.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if (a.0, a.1, a.2) == (b.0, b.1, b.2) {
                return Err(Error::InvalidSpec(format!(
                    "duplicate lifted entry ({}, {}, {})",
                    a.0, a.1, a.2
                )));
            }
        }
        Ok(Self {
            out_dim,
            in_dim,
            entries,
        })
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    /// Lifted column count, `in_dim^2`.
    pub fn lifted_cols(&self) -> usize {
        self.in_dim * self.in_dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize, usize, f64)] {
        &self.entries
    }

    /// `y[m] = sum v * x[i] * x[j]` over stored entries, in stored order.
    pub fn apply(&self, x: &DenseVec) -> Result<DenseVec> {
        if x.len() != self.in_dim {
            return Err(Error::LengthMismatch {
                op: "LiftedAttnMatrix::apply",
                expected: self.in_dim,
                got: x.len(),
            });
        }
        let xs = x.as_slice();
        let mut out = vec![0.0; self.out_dim];
        for &(m, i, j, v) in &self.entries {
            out[m] += v * xs[i] * xs[j];
        }
        Ok(DenseVec::from_raw(out))
    }

    /// Jacobian of [`LiftedAttnMatrix::apply`] at `x`:
    /// `J[m, p] = sum_{i=p} v * x[j] + sum_{j=p} v * x[i]`.
    pub fn jacobian(&self, x: &DenseVec) -> Result<DenseMat> {
        if x.len() != self.in_dim {
            return Err(Error::LengthMismatch {
                op: "LiftedAttnMatrix::jacobian",
                expected: self.in_dim,
                got: x.len(),
            });
        }
        let xs = x.as_slice();
        let mut out = DenseMat::zeros(self.out_dim, self.in_dim);
        for &(m, i, j, v) in &self.entries {
            let vi = out.get(m, i) + v * xs[j];
            out.set(m, i, vi);
            let vj = out.get(m, j) + v * xs[i];
            out.set(m, j, vj);
        }
        Ok(out)
    }

    /// Dense `out_dim x in_dim^2` matrix over the flattened lift.
    pub fn densify(&self) -> Result<DenseMat> {
        self.densify_with_budget(DEFAULT_DENSIFY_BUDGET)
    }

    pub fn densify_with_budget(&self, budget: usize) -> Result<DenseMat> {
        check_budget(self.out_dim, self.lifted_cols(), budget)?;
        let mut out = DenseMat::zeros(self.out_dim, self.lifted_cols());
        for &(m, i, j, v) in &self.entries {
            out.set(m, i * self.in_dim + j, v);
        }
        Ok(out)
    }

    /// Entries as `(row, flattened lift column, value)` triples.
    pub fn to_coords(&self) -> Vec<(usize, usize, f64)> {
        self.entries
            .iter()
            .map(|&(m, i, j, v)| (m, i * self.in_dim + j, v))
            .collect()
    }

    pub fn from_coords(
        out_dim: usize,
        in_dim: usize,
        coords: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let entries = coords
            .iter()
            .map(|&(m, c, v)| {
                if c >= in_dim * in_dim {
                    Err(Error::InvalidSpec(format!(
                        "lifted column {c} out of bounds for in_dim {in_dim}"
                    )))
                } else {
                    Ok((m, c / in_dim, c % in_dim, v))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(out_dim, in_dim, entries)
    }

    /// Adds `delta` to the k-th stored value.
    pub fn perturb_entry(&mut self, k: usize, delta: f64) {
        self.entries[k].3 += delta;
    }
}
