use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mat::banded::check_budget;
use crate::mat::{DenseMat, DenseVec, DEFAULT_DENSIFY_BUDGET};

/// Block lower-triangular matrix: `t_steps` block rows, block row `t`
/// holding dense blocks for block columns `0..=t` only.
///
/// Every block is `block_rows x block_cols`. The full matrix is
/// `(t_steps * block_rows) x (t_steps * block_cols)`; block columns
/// above the diagonal are structural zeros, which is what makes the
/// stacked map strictly causal.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockLowerTriangular {
    t_steps: usize,
    block_rows: usize,
    block_cols: usize,
    blocks: Vec<Vec<DenseMat>>,
}

impl BlockLowerTriangular {
    pub fn new(
        t_steps: usize,
        block_rows: usize,
        block_cols: usize,
        blocks: Vec<Vec<DenseMat>>,
    ) -> Result<Self> {
        if blocks.len() != t_steps {
            return Err(Error::LengthMismatch {
                op: "BlockLowerTriangular::new",
                expected: t_steps,
                got: blocks.len(),
            });
        }
        for (t, row) in blocks.iter().enumerate() {
            if row.len() != t + 1 {
                return Err(Error::LengthMismatch {
                    op: "BlockLowerTriangular::new",
                    expected: t + 1,
                    got: row.len(),
                });
            }
            for b in row {
                if b.rows() != block_rows || b.cols() != block_cols {
                    return Err(Error::ShapeMismatch {
                        op: "BlockLowerTriangular::new",
                        a_rows: block_rows,
                        a_cols: block_cols,
                        b_rows: b.rows(),
                        b_cols: b.cols(),
                    });
                }
            }
        }
        Ok(Self {
            t_steps,
            block_rows,
            block_cols,
            blocks,
        })
    }

    pub fn t_steps(&self) -> usize {
        self.t_steps
    }

    pub fn block_rows(&self) -> usize {
        self.block_rows
    }

    pub fn block_cols(&self) -> usize {
        self.block_cols
    }

    pub fn rows(&self) -> usize {
        self.t_steps * self.block_rows
    }

    pub fn cols(&self) -> usize {
        self.t_steps * self.block_cols
    }

    pub fn block(&self, t: usize, j: usize) -> &DenseMat {
        &self.blocks[t][j]
    }

    /// Stored scalar count: t_steps*(t_steps+1)/2 * block_rows * block_cols.
    pub fn element_count(&self) -> usize {
        self.t_steps * (self.t_steps + 1) / 2 * self.block_rows * self.block_cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (t, a) = (r / self.block_rows, r % self.block_rows);
        let (j, b) = (c / self.block_cols, c % self.block_cols);
        if j > t {
            0.0
        } else {
            self.blocks[t][j].get(a, b)
        }
    }

    fn segment_out(&self, t: usize, xs: &[f64]) -> Vec<f64> {
        let d = self.block_cols;
        let mut seg = vec![0.0; self.block_rows];
        for (j, block) in self.blocks[t].iter().enumerate() {
            let xj = &xs[j * d..(j + 1) * d];
            for (m, out) in seg.iter_mut().enumerate() {
                let row = block.row(m);
                let mut acc = 0.0;
                for (w, x) in row.iter().zip(xj) {
                    acc += w * x;
                }
                *out += acc;
            }
        }
        seg
    }

    /// `self * x` for `x` of length `t_steps * block_cols`. Each output
    /// row accumulates block products in ascending block-column order,
    /// each block product in ascending column order.
    pub fn matvec(&self, x: &DenseVec) -> Result<DenseVec> {
        if x.len() != self.cols() {
            return Err(Error::LengthMismatch {
                op: "BlockLowerTriangular::matvec",
                expected: self.cols(),
                got: x.len(),
            });
        }
        let xs = x.as_slice();
        let mut out = Vec::with_capacity(self.rows());
        for t in 0..self.t_steps {
            out.extend(self.segment_out(t, xs));
        }
        Ok(DenseVec::from_raw(out))
    }

    /// Block-row-parallel variant; per-row arithmetic is unchanged so the
    /// output is bit-identical to [`BlockLowerTriangular::matvec`].
    pub fn matvec_parallel(&self, x: &DenseVec) -> Result<DenseVec> {
        if x.len() != self.cols() {
            return Err(Error::LengthMismatch {
                op: "BlockLowerTriangular::matvec_parallel",
                expected: self.cols(),
                got: x.len(),
            });
        }
        let xs = x.as_slice();
        let segs: Vec<Vec<f64>> = (0..self.t_steps)
            .into_par_iter()
            .map(|t| self.segment_out(t, xs))
            .collect();
        Ok(DenseVec::from_raw(segs.concat()))
    }

    pub fn densify(&self) -> Result<DenseMat> {
        self.densify_with_budget(DEFAULT_DENSIFY_BUDGET)
    }

    pub fn densify_with_budget(&self, budget: usize) -> Result<DenseMat> {
        check_budget(self.rows(), self.cols(), budget)?;
        let mut out = DenseMat::zeros(self.rows(), self.cols());
        for (r, c, v) in self.to_coords() {
            out.set(r, c, v);
        }
        Ok(out)
    }

    /// Stored entries as `(row, col, value)` triples of the densified
    /// matrix, row-major. Structural zeros (including exact zeros inside
    /// stored blocks) are kept out only when the block is absent, so the
    /// coordinate list always covers the full lower block triangle.
    pub fn to_coords(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.element_count());
        for t in 0..self.t_steps {
            for a in 0..self.block_rows {
                let r = t * self.block_rows + a;
                for (j, block) in self.blocks[t].iter().enumerate() {
                    for b in 0..self.block_cols {
                        out.push((r, j * self.block_cols + b, block.get(a, b)));
                    }
                }
            }
        }
        out
    }

    /// Rebuilds from coordinate triples given the block geometry.
    /// Coordinates above the block diagonal are rejected.
    pub fn from_coords(
        t_steps: usize,
        block_rows: usize,
        block_cols: usize,
        coords: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut blocks: Vec<Vec<DenseMat>> = (0..t_steps)
            .map(|t| vec![DenseMat::zeros(block_rows, block_cols); t + 1])
            .collect();
        for &(r, c, v) in coords {
            if r >= t_steps * block_rows || c >= t_steps * block_cols {
                return Err(Error::InvalidSpec(format!(
                    "coordinate ({r}, {c}) out of bounds"
                )));
            }
            let (t, a) = (r / block_rows, r % block_rows);
            let (j, b) = (c / block_cols, c % block_cols);
            if j > t {
                return Err(Error::InvalidSpec(format!(
                    "coordinate ({r}, {c}) lies above the block diagonal"
                )));
            }
            blocks[t][j].set(a, b, v);
        }
        Self::new(t_steps, block_rows, block_cols, blocks)
    }

    /// Adds `delta` to the k-th stored scalar in `to_coords` order.
    pub fn perturb_entry(&mut self, k: usize, delta: f64) {
        let coords = self.to_coords();
        let (r, c, _) = coords[k];
        let (t, a) = (r / self.block_rows, r % self.block_rows);
        let (j, b) = (c / self.block_cols, c % self.block_cols);
        let old = self.blocks[t][j].get(a, b);
        self.blocks[t][j].set(a, b, old + delta);
    }
}
