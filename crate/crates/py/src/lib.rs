//! Python bindings for the structured-matrix layers.
//!
//! Everything crosses the boundary as plain lists of floats: images and
//! weights come in as `list[list[float]]`, sequences as flat
//! `list[float]`, and results go back the same way. Each function runs
//! the *matrix* formulation (banded, block-lower-triangular, or lifted
//! bilinear), so a Python caller can compare it against their own loops.
//!
//! Build with `cargo build --release -p matiso-py`, then rename
//! `libmatiso_py.so` to `matiso_py.so` somewhere on `sys.path`
//! (`python/smoke_test.py` automates this).

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use matiso::attn::{assemble_t_att, build_w_sa, lifted_apply, AttnSpec, LiftedSpec};
use matiso::check::{run_suite, CheckOptions};
use matiso::conv::{build_wconv, build_wpool, conv_forward, ConvMode, ConvSpec};
use matiso::mat::{DenseMat, DenseVec};
use matiso::rnn::{build_wrnn, rnn_forward_matrix, RnnSpec};
use matiso::Activation;

fn bad(e: matiso::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_mat(rows: Vec<Vec<f64>>) -> PyResult<DenseMat> {
    DenseMat::from_rows(&rows).map_err(bad)
}

fn to_rows(flat: &[f64], rows: usize, cols: usize) -> Vec<Vec<f64>> {
    flat.chunks(cols).take(rows).map(<[f64]>::to_vec).collect()
}

/// Valid-placement cross-correlation of `image` with a square `kernel`,
/// computed by building the banded matrix and applying it to the
/// flattened image. Returns the output grid row by row.
#[pyfunction]
#[pyo3(signature = (image, kernel, stride = 1))]
fn conv2d(image: Vec<Vec<f64>>, kernel: Vec<Vec<f64>>, stride: usize) -> PyResult<Vec<Vec<f64>>> {
    let image = to_mat(image)?;
    let kernel = to_mat(kernel)?;
    let spec = ConvSpec {
        img_h: image.rows(),
        img_w: image.cols(),
        kernel,
        stride,
        mode: ConvMode::Valid2d,
        tied: true,
    };
    let w = build_wconv(&spec).map_err(bad)?;
    let x = DenseVec::new(image.as_slice().to_vec()).map_err(bad)?;
    let y = conv_forward(&w, &x, Activation::None).map_err(bad)?;
    let (out_h, out_w) = spec.out_shape();
    Ok(to_rows(y.as_slice(), out_h, out_w))
}

/// Non-overlapping `p x p` average pooling via the pooling matrix.
#[pyfunction]
fn avg_pool2d(image: Vec<Vec<f64>>, p: usize) -> PyResult<Vec<Vec<f64>>> {
    let image = to_mat(image)?;
    let (h, w) = (image.rows(), image.cols());
    let pool = build_wpool(h, w, p).map_err(bad)?;
    let x = DenseVec::new(image.as_slice().to_vec()).map_err(bad)?;
    let y = pool.matvec(&x).map_err(bad)?;
    Ok(to_rows(y.as_slice(), h / p, w / p))
}

/// Hidden states of the linear recurrence `h_t = U x_t + V h_{t-1}`
/// (`h_0 = 0`), computed in one shot by the stacked
/// block-lower-triangular matrix. `xs` holds one input row per step;
/// the result holds one hidden state per step.
#[pyfunction]
fn rnn_states(
    w_xh: Vec<Vec<f64>>,
    w_hh: Vec<Vec<f64>>,
    xs: Vec<Vec<f64>>,
) -> PyResult<Vec<Vec<f64>>> {
    let w_xh = to_mat(w_xh)?;
    let w_hh = to_mat(w_hh)?;
    let t_steps = xs.len();
    let hid_dim = w_xh.rows();
    let spec = RnnSpec {
        t_steps,
        in_dim: w_xh.cols(),
        hid_dim,
        w_xh,
        w_hh,
    };
    let w = build_wrnn(&spec).map_err(bad)?;
    let flat: Vec<f64> = xs.into_iter().flatten().collect();
    let x = DenseVec::new(flat).map_err(bad)?;
    let h = rnn_forward_matrix(&w, &x).map_err(bad)?;
    Ok(to_rows(h.as_slice(), t_steps, hid_dim))
}

/// Softmax attention output, computed by assembling the third-order
/// tensor at `x` and contracting it. `x` holds one sequence row per
/// step; `w_q`, `w_k`, `w_v` are `dim x dim`.
#[pyfunction]
fn attention(
    x: Vec<Vec<f64>>,
    w_q: Vec<Vec<f64>>,
    w_k: Vec<Vec<f64>>,
    w_v: Vec<Vec<f64>>,
) -> PyResult<Vec<Vec<f64>>> {
    let x = to_mat(x)?;
    let spec = AttnSpec {
        seq_len: x.rows(),
        dim: x.cols(),
        w_q: to_mat(w_q)?,
        w_k: to_mat(w_k)?,
        w_v: to_mat(w_v)?,
    };
    let tensor = assemble_t_att(&spec, &x).map_err(bad)?;
    let z = tensor.contract();
    Ok(to_rows(z.as_slice(), z.rows(), z.cols()))
}

/// Linearized self-attention as one sparse matrix on the lifted input:
/// `y_m = sum_{i,j} W_v[m, j] * W_k[j, i] * W_q[m, i] * x_i * x_j`.
/// `w_q` and `w_v` are `out_dim x len(x)`; `w_k` is square.
#[pyfunction]
fn lifted_attention(
    x: Vec<f64>,
    w_q: Vec<Vec<f64>>,
    w_k: Vec<Vec<f64>>,
    w_v: Vec<Vec<f64>>,
) -> PyResult<Vec<f64>> {
    let w_q = to_mat(w_q)?;
    let spec = LiftedSpec {
        out_dim: w_q.rows(),
        seq_len: x.len(),
        w_q,
        w_k: to_mat(w_k)?,
        w_v: to_mat(w_v)?,
        patch_groups: None,
    };
    let w = build_w_sa(&spec).map_err(bad)?;
    let x = DenseVec::new(x).map_err(bad)?;
    Ok(lifted_apply(&w, &x).map_err(bad)?.into_vec())
}

/// Runs one verification suite (`"conv"`, `"pool"`, `"rnn"`, `"attn"`
/// or `"all"`) and returns one
/// `(suite, trials, seed, max_abs_err, tolerance, passed)` tuple per
/// report.
#[pyfunction]
#[pyo3(signature = (suite = "all", trials = 25, seed = 0))]
fn verify(
    suite: &str,
    trials: usize,
    seed: u64,
) -> PyResult<Vec<(String, usize, u64, f64, f64, bool)>> {
    let reports = run_suite(
        suite,
        &CheckOptions {
            trials,
            seed,
            ..CheckOptions::default()
        },
    )
    .map_err(bad)?;
    Ok(reports
        .into_iter()
        .map(|r| (r.suite, r.trials, r.seed, r.max_abs_err, r.tolerance, r.passed))
        .collect())
}

#[pymodule]
fn matiso_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(conv2d, m)?)?;
    m.add_function(wrap_pyfunction!(avg_pool2d, m)?)?;
    m.add_function(wrap_pyfunction!(rnn_states, m)?)?;
    m.add_function(wrap_pyfunction!(attention, m)?)?;
    m.add_function(wrap_pyfunction!(lifted_attention, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    // The #[pyfunction] wrappers are ordinary Rust functions over plain
    // types, so everything except module registration is testable
    // without an interpreter.

    #[test]
    fn conv2d_matches_a_hand_worked_window() {
        let image = vec![
            vec![1.0, 2.0, 3.0],
            vec![4.0, 5.0, 6.0],
            vec![7.0, 8.0, 9.0],
        ];
        let kernel = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let out = conv2d(image, kernel, 1).unwrap();
        assert_eq!(out, vec![vec![6.0, 8.0], vec![12.0, 14.0]]);
    }

    #[test]
    fn avg_pool2d_averages_each_window() {
        let image = vec![vec![1.0, 3.0], vec![5.0, 7.0]];
        assert_eq!(avg_pool2d(image, 2).unwrap(), vec![vec![4.0]]);
    }

    #[test]
    fn rnn_states_unrolls_the_recurrence() {
        // U = [[1]], V = [[2]]: h1 = 1, h2 = 2*1 + 2 = 4, h3 = 2*4 + 3 = 11.
        let states = rnn_states(
            vec![vec![1.0]],
            vec![vec![2.0]],
            vec![vec![1.0], vec![2.0], vec![3.0]],
        )
        .unwrap();
        assert_eq!(states, vec![vec![1.0], vec![4.0], vec![11.0]]);
    }

    #[test]
    fn lifted_attention_with_identity_weights_squares_the_input() {
        let eye = |n: usize| -> Vec<Vec<f64>> {
            (0..n)
                .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
                .collect()
        };
        let y = lifted_attention(vec![2.0, -3.0, 0.5], eye(3), eye(3), eye(3)).unwrap();
        assert_eq!(y, vec![4.0, 9.0, 0.25]);
    }

    #[test]
    fn ragged_input_is_rejected() {
        let ragged = vec![vec![1.0, 2.0], vec![3.0]];
        assert!(conv2d(ragged, vec![vec![1.0]], 1).is_err());
    }

    #[test]
    fn verify_reports_pass_for_every_suite() {
        let rows = verify("all", 5, 0).unwrap();
        let names: Vec<&str> = rows.iter().map(|r| r.0.as_str()).collect();
        assert_eq!(names, ["conv", "pool", "rnn", "attn_tensor", "attn_lifted"]);
        assert!(rows.iter().all(|r| r.5));
    }

    #[test]
    fn the_module_is_importable_from_an_embedded_interpreter() {
        pyo3::append_to_inittab!(matiso_py);
        Python::initialize();
        Python::attach(|py| {
            let module = py.import("matiso_py").expect("module imports");
            let pooled: Vec<Vec<f64>> = module
                .getattr("avg_pool2d")
                .unwrap()
                .call1((vec![vec![1.0, 3.0], vec![5.0, 7.0]], 2))
                .unwrap()
                .extract()
                .unwrap();
            assert_eq!(pooled, vec![vec![4.0]]);
        });
    }
}
