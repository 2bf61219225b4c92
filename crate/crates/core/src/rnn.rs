//! Linear recurrence as one block lower-triangular matrix.
//!
//! For `h_t = U x_t + V h_{t-1}` with `h_0 = 0`, stacking all hidden
//! states gives `h = W x` where block `(t, j)` of `W` is `V^{t-j} U`.
//! Powers are materialized by repeated left-multiplication, so every
//! block on one diagonal is built by the exact same float operations
//! and the chain identity `block(t, j) = V * block(t-1, j)` holds bit
//! for bit.
//!
//! The matrix form covers the activation-free recurrence only; the
//! stepwise oracle also supports tanh to make the difference observable.

use crate::error::{Error, Result};
use crate::mat::{dense_matmul, BlockLowerTriangular, DenseMat, DenseVec};
use crate::data::SeriesMatrix;
use crate::Activation;

/// Geometry and weights of one linear recurrence.
#[derive(Debug, Clone)]
pub struct RnnSpec {
    pub t_steps: usize,
    pub in_dim: usize,
    pub hid_dim: usize,
    /// Input map `U`, `hid_dim x in_dim`.
    pub w_xh: DenseMat,
    /// State map `V`, `hid_dim x hid_dim`.
    pub w_hh: DenseMat,
}

impl RnnSpec {
    pub fn validate(&self) -> Result<()> {
        if self.t_steps == 0 {
            return Err(Error::InvalidSpec("t_steps must be at least 1".into()));
        }
        if self.in_dim == 0 || self.hid_dim == 0 {
            return Err(Error::InvalidSpec(format!(
                "degenerate dims: in_dim {}, hid_dim {}",
                self.in_dim, self.hid_dim
            )));
        }
        if self.w_xh.rows() != self.hid_dim || self.w_xh.cols() != self.in_dim {
            return Err(Error::ShapeMismatch {
                op: "RnnSpec w_xh",
                a_rows: self.hid_dim,
                a_cols: self.in_dim,
                b_rows: self.w_xh.rows(),
                b_cols: self.w_xh.cols(),
            });
        }
        if self.w_hh.rows() != self.hid_dim || self.w_hh.cols() != self.hid_dim {
            return Err(Error::ShapeMismatch {
                op: "RnnSpec w_hh",
                a_rows: self.hid_dim,
                a_cols: self.hid_dim,
                b_rows: self.w_hh.rows(),
                b_cols: self.w_hh.cols(),
            });
        }
        Ok(())
    }
}

/// Builds the stacked recurrence matrix: block `(t, j) = V^{t-j} U`.
pub fn build_wrnn(spec: &RnnSpec) -> Result<BlockLowerTriangular> {
    spec.validate()?;
    let mut blocks: Vec<Vec<DenseMat>> = Vec::with_capacity(spec.t_steps);
    for t in 0..spec.t_steps {
        let mut row = Vec::with_capacity(t + 1);
        for j in 0..t {
            // left-multiply the block one diagonal up: V * V^{t-1-j} U
            row.push(dense_matmul(&spec.w_hh, &blocks[t - 1][j])?);
        }
        row.push(spec.w_xh.clone());
        blocks.push(row);
    }
    BlockLowerTriangular::new(spec.t_steps, spec.hid_dim, spec.in_dim, blocks)
}

/// Applies the stacked matrix to a flattened input sequence
/// (`t_steps * in_dim` values, time-major). Output stacks all hidden
/// states the same way.
pub fn rnn_forward_matrix(w: &BlockLowerTriangular, x: &DenseVec) -> Result<DenseVec> {
    w.matvec(x)
}

/// Stepwise reference recurrence `h_t = act(U x_t + V h_{t-1})`,
/// `h_0 = 0`. Returns hidden states as rows of a `t_steps x hid_dim`
/// matrix.
pub fn oracle_rnn(spec: &RnnSpec, x: &SeriesMatrix, act: Activation) -> Result<DenseMat> {
    spec.validate()?;
    if x.t_steps() != spec.t_steps || x.features() != spec.in_dim {
        return Err(Error::ShapeMismatch {
            op: "oracle_rnn input",
            a_rows: spec.t_steps,
            a_cols: spec.in_dim,
            b_rows: x.t_steps(),
            b_cols: x.features(),
        });
    }
    let m = spec.hid_dim;
    let mut h_prev = vec![0.0; m];
    let mut out = DenseMat::zeros(spec.t_steps, m);
    for t in 0..spec.t_steps {
        let xt = x.step(t);
        for i in 0..m {
            let mut acc = 0.0;
            for (w, v) in spec.w_xh.row(i).iter().zip(xt) {
                acc += w * v;
            }
            for (w, v) in spec.w_hh.row(i).iter().zip(&h_prev) {
                acc += w * v;
            }
            out.set(t, i, act.apply(acc));
        }
        h_prev.copy_from_slice(out.row(t));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn random_spec(t: usize, d: usize, m: usize, seed: u64) -> RnnSpec {
        let mut r = rng::seeded(seed);
        RnnSpec {
            t_steps: t,
            in_dim: d,
            hid_dim: m,
            w_xh: rng::random_mat(&mut r, m, d, 0.5),
            w_hh: rng::random_mat(&mut r, m, m, 0.5),
        }
    }

    fn random_series(t: usize, d: usize, seed: u64) -> SeriesMatrix {
        let mut r = rng::seeded(seed);
        SeriesMatrix::new(t, d, (0..t * d).map(|_| rng::uniform(&mut r, 1.0)).collect()).unwrap()
    }

    #[test]
    fn scalar_counting_example() {
        // U = V = 1, inputs all ones: h = (1, 2, 3)
        let spec = RnnSpec {
            t_steps: 3,
            in_dim: 1,
            hid_dim: 1,
            w_xh: DenseMat::from_rows(&[vec![1.0]]).unwrap(),
            w_hh: DenseMat::from_rows(&[vec![1.0]]).unwrap(),
        };
        let x = SeriesMatrix::constant(3, 1, 1.0);
        let h = oracle_rnn(&spec, &x, Activation::None).unwrap();
        assert_eq!(h.as_slice(), &[1.0, 2.0, 3.0]);
        let w = build_wrnn(&spec).unwrap();
        let stacked = rnn_forward_matrix(&w, &x.flatten()).unwrap();
        assert_eq!(stacked.as_slice(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn two_step_densified_layout() {
        let u = DenseMat::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let v = DenseMat::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let spec = RnnSpec {
            t_steps: 2,
            in_dim: 2,
            hid_dim: 2,
            w_xh: u,
            w_hh: v,
        };
        let dense = build_wrnn(&spec).unwrap().densify().unwrap();
        // [[ U  0 ]
        //  [ VU U ]]  with VU = [[3, 4], [1, 2]]
        let want = DenseMat::from_rows(&[
            vec![1.0, 2.0, 0.0, 0.0],
            vec![3.0, 4.0, 0.0, 0.0],
            vec![3.0, 4.0, 1.0, 2.0],
            vec![1.0, 2.0, 3.0, 4.0],
        ])
        .unwrap();
        assert_eq!(dense, want);
    }

    #[test]
    fn matrix_path_matches_stepwise_oracle() {
        for (t, d, m, seed) in [(1, 1, 1, 1), (4, 2, 3, 2), (8, 5, 5, 3), (8, 3, 4, 4)] {
            let spec = random_spec(t, d, m, seed);
            let x = random_series(t, d, 100 + seed);
            let w = build_wrnn(&spec).unwrap();
            let stacked = rnn_forward_matrix(&w, &x.flatten()).unwrap();
            let stepwise = oracle_rnn(&spec, &x, Activation::None).unwrap();
            let flat = DenseVec::new(stepwise.as_slice().to_vec()).unwrap();
            assert!(stacked.max_abs_diff(&flat) <= 1e-10);
        }
    }

    #[test]
    fn power_chain_is_bit_exact() {
        let spec = random_spec(6, 2, 3, 9);
        let w = build_wrnn(&spec).unwrap();
        for t in 1..6 {
            for j in 0..t {
                let recomputed = dense_matmul(&spec.w_hh, w.block(t - 1, j)).unwrap();
                assert_eq!(w.block(t, j), &recomputed, "block ({t}, {j})");
            }
        }
        // blocks along one diagonal are the same matrix, bit for bit
        for t in 1..6 {
            for j in 1..=t {
                assert_eq!(w.block(t, j), w.block(t - 1, j - 1));
            }
        }
    }

    #[test]
    fn tanh_breaks_the_matrix_equality() {
        let spec = random_spec(5, 2, 3, 12);
        let x = random_series(5, 2, 13);
        let w = build_wrnn(&spec).unwrap();
        let stacked = rnn_forward_matrix(&w, &x.flatten()).unwrap();
        let tanh = oracle_rnn(&spec, &x, Activation::Tanh).unwrap();
        let flat = DenseVec::new(tanh.as_slice().to_vec()).unwrap();
        assert!(
            stacked.max_abs_diff(&flat) > 1e-6,
            "tanh recurrence should not match the linear matrix"
        );
    }

    #[test]
    fn zero_steps_rejected() {
        let spec = RnnSpec {
            t_steps: 0,
            in_dim: 1,
            hid_dim: 1,
            w_xh: DenseMat::zeros(1, 1),
            w_hh: DenseMat::zeros(1, 1),
        };
        assert!(build_wrnn(&spec).is_err());
    }

    #[test]
    fn weight_shape_mismatches_rejected() {
        let mut spec = random_spec(2, 3, 2, 5);
        spec.w_xh = DenseMat::zeros(2, 2);
        assert!(build_wrnn(&spec).is_err());
        let mut spec = random_spec(2, 3, 2, 5);
        spec.w_hh = DenseMat::zeros(3, 2);
        assert!(build_wrnn(&spec).is_err());
    }

    #[test]
    fn forward_rejects_wrong_length() {
        let spec = random_spec(3, 2, 2, 6);
        let w = build_wrnn(&spec).unwrap();
        let err = rnn_forward_matrix(&w, &DenseVec::zeros(5)).unwrap_err();
        assert!(err.to_string().contains("expected length 6"), "{err}");
    }
}
