//! Self-attention in two structured forms.
//!
//! The softmax itself stays nonlinear; what this module makes explicit
//! is everything around it:
//!
//! - [`AttnTensor`]: for a fixed input `X`, the output `Z = A (X W_v)`
//!   collapses into a third-order tensor `T[k, i, c] = A[k, i] * (X W_v)[i, c]`
//!   whose contraction over the attended index `i` reproduces `Z`
//!   exactly at the assembly input. The tensor is data-dependent by
//!   construction; re-evaluating it on a different input is meaningless
//!   and tested as such.
//! - [`build_w_sa`]: with the attention weights frozen into projection
//!   matrices (no softmax), each output is the bilinear form
//!   `y_m = sum_{i,j} W_v[m,j] W_k[j,i] W_q[m,i] x_i x_j`, a sparse
//!   matrix over the implicit lift `x (x) x`. Optional patch groups
//!   restrict `(i, j)` pairs to the same patch.

use crate::error::{Error, Result};
use crate::mat::{dense_matmul, DenseMat, DenseVec, LiftedAttnMatrix};

/// Projection weights for softmax attention over `seq_len` rows of
/// dimension `dim`.
#[derive(Debug, Clone)]
pub struct AttnSpec {
    pub seq_len: usize,
    pub dim: usize,
    pub w_q: DenseMat,
    pub w_k: DenseMat,
    pub w_v: DenseMat,
}

impl AttnSpec {
    pub fn validate(&self) -> Result<()> {
        if self.seq_len == 0 || self.dim == 0 {
            return Err(Error::InvalidSpec(format!(
                "degenerate attention shape: seq_len {}, dim {}",
                self.seq_len, self.dim
            )));
        }
        for (name, w) in [("w_q", &self.w_q), ("w_k", &self.w_k), ("w_v", &self.w_v)] {
            if w.rows() != self.dim || w.cols() != self.dim {
                return Err(Error::InvalidSpec(format!(
                    "{name} is {}x{}, expected {dim}x{dim}",
                    w.rows(),
                    w.cols(),
                    dim = self.dim
                )));
            }
        }
        Ok(())
    }
}

fn check_input(spec: &AttnSpec, x: &DenseMat) -> Result<()> {
    spec.validate()?;
    if x.rows() != spec.seq_len || x.cols() != spec.dim {
        return Err(Error::ShapeMismatch {
            op: "attention input",
            a_rows: spec.seq_len,
            a_cols: spec.dim,
            b_rows: x.rows(),
            b_cols: x.cols(),
        });
    }
    Ok(())
}

/// Row-wise softmax with max subtraction. Rows sum to 1 up to rounding.
fn softmax_rows(scores: &DenseMat) -> DenseMat {
    let mut out = DenseMat::zeros(scores.rows(), scores.cols());
    for r in 0..scores.rows() {
        let row = scores.row(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for (c, &s) in row.iter().enumerate() {
            let e = (s - max).exp();
            out.set(r, c, e);
            sum += e;
        }
        for c in 0..scores.cols() {
            out.set(r, c, out.get(r, c) / sum);
        }
    }
    out
}

/// Attention weights `A = softmax(Q K^T / sqrt(d))` and the value
/// projection `X W_v`, the two factors everything downstream reuses.
pub fn attention_parts(spec: &AttnSpec, x: &DenseMat) -> Result<(DenseMat, DenseMat)> {
    check_input(spec, x)?;
    let q = dense_matmul(x, &spec.w_q)?;
    let k = dense_matmul(x, &spec.w_k)?;
    let v = dense_matmul(x, &spec.w_v)?;
    let mut scores = dense_matmul(&q, &k.transpose())?;
    let scale = 1.0 / (spec.dim as f64).sqrt();
    for s in scores.as_mut_slice() {
        *s *= scale;
    }
    Ok((softmax_rows(&scores), v))
}

/// Reference softmax attention: `Z = softmax(Q K^T / sqrt(d)) (X W_v)`.
pub fn oracle_attention(spec: &AttnSpec, x: &DenseMat) -> Result<DenseMat> {
    let (a, v) = attention_parts(spec, x)?;
    dense_matmul(&a, &v)
}

/// Third-order collapse of one attention application. Entry `[k, i, c]`
/// is the contribution of attended row `i` to output row `k`, feature
/// `c`: the attention weight times the value-projected input row.
#[derive(Debug, Clone, PartialEq)]
pub struct AttnTensor {
    seq_len: usize,
    dim: usize,
    /// `[k, i, c]` at `(k * seq_len + i) * dim + c`.
    values: Vec<f64>,
}

impl AttnTensor {
    pub fn seq_len(&self) -> usize {
        self.seq_len
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, k: usize, i: usize, c: usize) -> f64 {
        self.values[(k * self.seq_len + i) * self.dim + c]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Adds `delta` to the flat entry `k`. Negative-control hook.
    pub fn perturb_entry(&mut self, k: usize, delta: f64) {
        self.values[k] += delta;
    }

    /// Contracts over the attended index: `Z[k, c] = sum_i T[k, i, c]`,
    /// ascending `i`. At the assembly input this reproduces
    /// [`oracle_attention`] exactly.
    pub fn contract(&self) -> DenseMat {
        let mut out = DenseMat::zeros(self.seq_len, self.dim);
        for k in 0..self.seq_len {
            for c in 0..self.dim {
                let mut acc = 0.0;
                for i in 0..self.seq_len {
                    acc += self.get(k, i, c);
                }
                out.set(k, c, acc);
            }
        }
        out
    }
}

/// Assembles the attention tensor for the specific input `x`.
pub fn assemble_t_att(spec: &AttnSpec, x: &DenseMat) -> Result<AttnTensor> {
    let (a, v) = attention_parts(spec, x)?;
    let n = spec.seq_len;
    let d = spec.dim;
    let mut values = Vec::with_capacity(n * n * d);
    for k in 0..n {
        for i in 0..n {
            let w = a.get(k, i);
            for c in 0..d {
                values.push(w * v.get(i, c));
            }
        }
    }
    Ok(AttnTensor {
        seq_len: n,
        dim: d,
        values,
    })
}

/// Frozen-weight attention surrogate acting on a single vector.
/// `w_q` and `w_v` are `out_dim x seq_len`, `w_k` is `seq_len x seq_len`.
#[derive(Debug, Clone)]
pub struct LiftedSpec {
    pub out_dim: usize,
    pub seq_len: usize,
    pub w_q: DenseMat,
    pub w_k: DenseMat,
    pub w_v: DenseMat,
    /// Partition of `0..seq_len`; `(i, j)` pairs from different groups
    /// contribute nothing. `None` keeps every pair.
    pub patch_groups: Option<Vec<Vec<usize>>>,
}

impl LiftedSpec {
    pub fn validate(&self) -> Result<()> {
        if self.out_dim == 0 || self.seq_len == 0 {
            return Err(Error::InvalidSpec(format!(
                "degenerate lifted shape: out_dim {}, seq_len {}",
                self.out_dim, self.seq_len
            )));
        }
        let shapes = [
            ("w_q", &self.w_q, self.out_dim, self.seq_len),
            ("w_k", &self.w_k, self.seq_len, self.seq_len),
            ("w_v", &self.w_v, self.out_dim, self.seq_len),
        ];
        for (name, w, rows, cols) in shapes {
            if w.rows() != rows || w.cols() != cols {
                return Err(Error::InvalidSpec(format!(
                    "{name} is {}x{}, expected {rows}x{cols}",
                    w.rows(),
                    w.cols()
                )));
            }
        }
        if let Some(groups) = &self.patch_groups {
            let mut seen = vec![false; self.seq_len];
            for g in groups {
                for &i in g {
                    if i >= self.seq_len {
                        return Err(Error::InvalidSpec(format!(
                            "patch index {i} out of range for seq_len {}",
                            self.seq_len
                        )));
                    }
                    if seen[i] {
                        return Err(Error::InvalidSpec(format!(
                            "patch index {i} appears in more than one group"
                        )));
                    }
                    seen[i] = true;
                }
            }
            if let Some(missing) = seen.iter().position(|&s| !s) {
                return Err(Error::InvalidSpec(format!(
                    "patch groups do not cover index {missing}"
                )));
            }
        }
        Ok(())
    }

    /// Group id per sequence index, or `None` when unpartitioned.
    fn patch_of(&self) -> Option<Vec<usize>> {
        self.patch_groups.as_ref().map(|groups| {
            let mut of = vec![0; self.seq_len];
            for (gid, g) in groups.iter().enumerate() {
                for &i in g {
                    of[i] = gid;
                }
            }
            of
        })
    }
}

/// Builds the sparse bilinear matrix with entries
/// `(m, i, j) -> W_v[m, j] * W_k[j, i] * W_q[m, i]`, keeping only pairs
/// inside one patch group. Products that are exactly zero are omitted;
/// with dense random projections and no patches the entry count is
/// `out_dim * seq_len^2`.
pub fn build_w_sa(spec: &LiftedSpec) -> Result<LiftedAttnMatrix> {
    spec.validate()?;
    let patch = spec.patch_of();
    let mut entries = Vec::new();
    for m in 0..spec.out_dim {
        for i in 0..spec.seq_len {
            for j in 0..spec.seq_len {
                if let Some(p) = &patch {
                    if p[i] != p[j] {
                        continue;
                    }
                }
                let v = spec.w_v.get(m, j) * spec.w_k.get(j, i) * spec.w_q.get(m, i);
                if v != 0.0 {
                    entries.push((m, i, j, v));
                }
            }
        }
    }
    LiftedAttnMatrix::new(spec.out_dim, spec.seq_len, entries)
}

/// Evaluates the bilinear form without materializing the lift.
pub fn lifted_apply(w: &LiftedAttnMatrix, x: &DenseVec) -> Result<DenseVec> {
    w.apply(x)
}

/// Brute-force triple sum `y_m = sum_{i,j} W_v[m,j] W_k[j,i] W_q[m,i] x_i x_j`,
/// written independently of the sparse representation.
pub fn oracle_lifted(spec: &LiftedSpec, x: &DenseVec) -> Result<DenseVec> {
    spec.validate()?;
    if x.len() != spec.seq_len {
        return Err(Error::LengthMismatch {
            op: "oracle_lifted",
            expected: spec.seq_len,
            got: x.len(),
        });
    }
    let patch = spec.patch_of();
    let mut out = vec![0.0; spec.out_dim];
    for m in 0..spec.out_dim {
        let mut acc = 0.0;
        for i in 0..spec.seq_len {
            for j in 0..spec.seq_len {
                if let Some(p) = &patch {
                    if p[i] != p[j] {
                        continue;
                    }
                }
                acc += spec.w_v.get(m, j) * spec.w_k.get(j, i) * spec.w_q.get(m, i) * x[i] * x[j];
            }
        }
        out[m] = acc;
    }
    Ok(DenseVec::from_raw(out))
}
