//! Randomized equivalence suites: each suite rebuilds a structured
//! matrix from a random spec, runs it against the direct reference
//! implementation, and reports the worst absolute error over all trials.
//!
//! Trials are derived independently from `(seed, trial index)`, so a
//! fixed seed reproduces identical reports run after run.

use crate::attn::{
    assemble_t_att, build_w_sa, lifted_apply, oracle_attention, oracle_lifted, AttnSpec,
    LiftedSpec,
};
use crate::conv::{build_wconv, build_wpool, oracle_avg_pool, oracle_conv2d, ConvMode, ConvSpec};
use crate::error::{Error, Result};
use crate::mat::{BandedMatrix, BlockLowerTriangular, DenseMat, DenseVec, LiftedAttnMatrix};
use crate::rnn::{build_wrnn, oracle_rnn, rnn_forward_matrix, RnnSpec};
use crate::rng::{self, SeededRng};
use crate::Activation;

pub const CONV_TOL: f64 = 1e-13;
pub const POOL_TOL: f64 = 1e-13;
pub const RNN_TOL: f64 = 1e-10;
pub const ATTN_TENSOR_TOL: f64 = 1e-10;
pub const ATTN_LIFTED_TOL: f64 = 1e-12;

pub const LINEAR_GRAD_BOUND: f64 = 1e-6;
pub const BILINEAR_GRAD_BOUND: f64 = 1e-5;
pub const DEFAULT_FD_STEP: f64 = 1e-5;
pub const DEFAULT_GRAD_PROBES: usize = 10;

/// Shared knobs of the check suites.
#[derive(Debug, Clone, Copy)]
pub struct CheckOptions {
    pub trials: usize,
    pub seed: u64,
    /// Overrides the suite's default tolerance when set.
    pub tol: Option<f64>,
    /// Added to one stored coefficient of every built object before
    /// checking. Zero in normal operation; the negative controls set it
    /// to confirm the suites detect single-entry corruption.
    pub perturb: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            trials: 200,
            seed: 0,
            tol: None,
            perturb: 0.0,
        }
    }
}

/// Outcome of one suite run. `passed` holds iff
/// `max_abs_err <= tolerance`.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub suite: String,
    pub trials: usize,
    pub seed: u64,
    pub max_abs_err: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckReport {
    fn build(suite: &str, opts: &CheckOptions, default_tol: f64, max_abs_err: f64) -> Self {
        let tolerance = opts.tol.unwrap_or(default_tol);
        Self {
            suite: suite.to_string(),
            trials: opts.trials,
            seed: opts.seed,
            max_abs_err,
            tolerance,
            passed: max_abs_err <= tolerance,
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:e},{:e},{}",
            self.suite, self.trials, self.seed, self.max_abs_err, self.tolerance, self.passed
        )
    }
}

pub const REPORT_CSV_HEADER: &str = "suite,trials,seed,max_abs_err,tolerance,passed";

pub fn reports_to_csv(reports: &[CheckReport]) -> String {
    let mut out = String::from(REPORT_CSV_HEADER);
    for r in reports {
        out.push('\n');
        out.push_str(&r.csv_row());
    }
    out.push('\n');
    out
}

fn trial_rng(seed: u64, trial: usize) -> SeededRng {
    rng::seeded(rng::mix(seed, trial as u64))
}

fn range(r: &mut SeededRng, lo: usize, hi: usize) -> usize {
    use rand::Rng;
    r.random_range(lo..=hi)
}

/// Random valid 2-D convolutions against the nested-loop oracle.
/// Shapes: images up to 12x12, kernels up to 4x4, strides up to 2.
pub fn check_conv_iso(opts: &CheckOptions) -> Result<CheckReport> {
    let mut worst = 0.0f64;
    for trial in 0..opts.trials {
        let mut r = trial_rng(opts.seed, trial);
        let rr = range(&mut r, 1, 4);
        let m = range(&mut r, rr, 12);
        let n = range(&mut r, rr, 12);
        let s = range(&mut r, 1, 2);
        let spec = ConvSpec {
            img_h: m,
            img_w: n,
            kernel: rng::random_mat(&mut r, rr, rr, 1.0),
            stride: s,
            mode: ConvMode::Valid2d,
            tied: true,
        };
        let image = rng::random_mat(&mut r, m, n, 1.0);
        let mut w = build_wconv(&spec)?;
        if opts.perturb != 0.0 {
            w.perturb_entry(0, opts.perturb);
        }
        let got = w.matvec(&DenseVec::from_raw(image.as_slice().to_vec()))?;
        let want = oracle_conv2d(&image, &spec.kernel, s)?;
        let err = got.max_abs_diff(&DenseVec::from_raw(want.as_slice().to_vec()));
        worst = worst.max(err);
    }
    Ok(CheckReport::build("conv", opts, CONV_TOL, worst))
}

/// Random average pooling against the window-mean oracle.
pub fn check_pool_iso(opts: &CheckOptions) -> Result<CheckReport> {
    let mut worst = 0.0f64;
    for trial in 0..opts.trials {
        let mut r = trial_rng(opts.seed, trial);
        let p = [1, 2, 4][range(&mut r, 0, 2)];
        let m = p * range(&mut r, 1, 12 / p);
        let n = p * range(&mut r, 1, 12 / p);
        let image = rng::random_mat(&mut r, m, n, 1.0);
        let mut w = build_wpool(m, n, p)?;
        if opts.perturb != 0.0 {
            w.perturb_entry(0, opts.perturb);
        }
        let got = w.matvec(&DenseVec::from_raw(image.as_slice().to_vec()))?;
        let want = oracle_avg_pool(&image, p)?;
        let err = got.max_abs_diff(&DenseVec::from_raw(want.as_slice().to_vec()));
        worst = worst.max(err);
    }
    Ok(CheckReport::build("pool", opts, POOL_TOL, worst))
}

/// Random linear recurrences, stacked matrix against the stepwise
/// oracle. Weights are drawn from [-0.5, 0.5], which keeps the state
/// map's norm near one so errors do not blow up over 8 steps.
pub fn check_rnn_iso(opts: &CheckOptions) -> Result<CheckReport> {
    let mut worst = 0.0f64;
    for trial in 0..opts.trials {
        let mut r = trial_rng(opts.seed, trial);
        let t = range(&mut r, 1, 8);
        let d = range(&mut r, 1, 5);
        let m = range(&mut r, 1, 5);
        let spec = RnnSpec {
            t_steps: t,
            in_dim: d,
            hid_dim: m,
            w_xh: rng::random_mat(&mut r, m, d, 0.5),
            w_hh: rng::random_mat(&mut r, m, m, 0.5),
        };
        let x = crate::data::SeriesMatrix::new(
            t,
            d,
            (0..t * d).map(|_| rng::uniform(&mut r, 1.0)).collect(),
        )?;
        let mut w = build_wrnn(&spec)?;
        if opts.perturb != 0.0 {
            w.perturb_entry(0, opts.perturb);
        }
        let got = rnn_forward_matrix(&w, &x.flatten())?;
        let want = oracle_rnn(&spec, &x, Activation::None)?;
        let err = got.max_abs_diff(&DenseVec::from_raw(want.as_slice().to_vec()));
        worst = worst.max(err);
    }
    Ok(CheckReport::build("rnn", opts, RNN_TOL, worst))
}

/// Attention checks, reported as two sub-suites: `attn_tensor`
/// (contraction vs the softmax oracle) and `attn_lifted` (sparse
/// bilinear form vs the triple sum; every other trial uses patches).
pub fn check_attn_iso(opts: &CheckOptions) -> Result<Vec<CheckReport>> {
    let mut worst_tensor = 0.0f64;
    let mut worst_lifted = 0.0f64;
    for trial in 0..opts.trials {
        let mut r = trial_rng(opts.seed, trial);

        let n = range(&mut r, 1, 6);
        let d = range(&mut r, 1, 4);
        let spec = AttnSpec {
            seq_len: n,
            dim: d,
            w_q: rng::random_mat(&mut r, d, d, 0.5),
            w_k: rng::random_mat(&mut r, d, d, 0.5),
            w_v: rng::random_mat(&mut r, d, d, 0.5),
        };
        let x = rng::random_mat(&mut r, n, d, 1.0);
        let mut t = assemble_t_att(&spec, &x)?;
        if opts.perturb != 0.0 {
            t.perturb_entry(0, opts.perturb);
        }
        let z = oracle_attention(&spec, &x)?;
        worst_tensor = worst_tensor.max(t.contract().max_abs_diff(&z));

        let m_out = range(&mut r, 1, 6);
        let n_seq = range(&mut r, 2, 6);
        let patch_groups = if trial % 2 == 1 {
            let split = range(&mut r, 1, n_seq - 1);
            Some(vec![(0..split).collect(), (split..n_seq).collect()])
        } else {
            None
        };
        let lspec = LiftedSpec {
            out_dim: m_out,
            seq_len: n_seq,
            w_q: rng::random_mat(&mut r, m_out, n_seq, 0.5),
            w_k: rng::random_mat(&mut r, n_seq, n_seq, 0.5),
            w_v: rng::random_mat(&mut r, m_out, n_seq, 0.5),
            patch_groups,
        };
        let xv = rng::random_vec(&mut r, n_seq, 1.0);
        let mut w = build_w_sa(&lspec)?;
        if opts.perturb != 0.0 {
            w.perturb_entry(0, opts.perturb);
        }
        let fast = lifted_apply(&w, &xv)?;
        let slow = oracle_lifted(&lspec, &xv)?;
        worst_lifted = worst_lifted.max(fast.max_abs_diff(&slow));
    }
    Ok(vec![
        CheckReport::build("attn_tensor", opts, ATTN_TENSOR_TOL, worst_tensor),
        CheckReport::build("attn_lifted", opts, ATTN_LIFTED_TOL, worst_lifted),
    ])
}

/// Runs the named suite ("conv", "pool", "rnn", "attn" or "all") and
/// returns one report per (sub)suite.
pub fn run_suite(name: &str, opts: &CheckOptions) -> Result<Vec<CheckReport>> {
    match name {
        "conv" => Ok(vec![check_conv_iso(opts)?]),
        "pool" => Ok(vec![check_pool_iso(opts)?]),
        "rnn" => Ok(vec![check_rnn_iso(opts)?]),
        "attn" => check_attn_iso(opts),
        "all" => {
            let mut out = vec![
                check_conv_iso(opts)?,
                check_pool_iso(opts)?,
                check_rnn_iso(opts)?,
            ];
            out.extend(check_attn_iso(opts)?);
            Ok(out)
        }
        other => Err(Error::InvalidSpec(format!("unknown suite {other:?}"))),
    }
}

/// A map that can be multiplied against a vector; the linear gradient
/// check works on any of them.
pub trait LinearMap {
    fn map_in_dim(&self) -> usize;
    fn map_out_dim(&self) -> usize;
    fn apply_map(&self, x: &DenseVec) -> Result<DenseVec>;
}

impl LinearMap for BandedMatrix {
    fn map_in_dim(&self) -> usize {
        self.cols()
    }
    fn map_out_dim(&self) -> usize {
        self.rows()
    }
    fn apply_map(&self, x: &DenseVec) -> Result<DenseVec> {
        self.matvec(x)
    }
}

impl LinearMap for BlockLowerTriangular {
    fn map_in_dim(&self) -> usize {
        self.cols()
    }
    fn map_out_dim(&self) -> usize {
        self.rows()
    }
    fn apply_map(&self, x: &DenseVec) -> Result<DenseVec> {
        self.matvec(x)
    }
}

impl LinearMap for DenseMat {
    fn map_in_dim(&self) -> usize {
        self.cols()
    }
    fn map_out_dim(&self) -> usize {
        self.rows()
    }
    fn apply_map(&self, x: &DenseVec) -> Result<DenseVec> {
        self.matvec(x)
    }
}

/// Outcome of a finite-difference gradient comparison.
/// `passed` holds iff `max_rel_err <= bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradReport {
    pub op: String,
    pub probes: usize,
    pub fd_step: f64,
    pub max_rel_err: f64,
    pub bound: f64,
    pub passed: bool,
}

fn rel_err(fd: &DenseVec, analytic: &DenseVec) -> f64 {
    let scale = analytic
        .as_slice()
        .iter()
        .fold(1.0f64, |m, v| m.max(v.abs()));
    fd.max_abs_diff(analytic) / scale
}

/// Central-difference check of a linear map's action: for random probe
/// directions `v`, `(f(x + h v) - f(x - h v)) / (2 h)` must match
/// `f(v)`. Central differences are exact for linear maps at any step
/// size, so the bound only absorbs rounding.
pub fn grad_check_linear(
    map: &dyn LinearMap,
    x: &DenseVec,
    fd_step: f64,
    probes: usize,
    seed: u64,
    op: &str,
) -> Result<GradReport> {
    if x.len() != map.map_in_dim() {
        return Err(Error::LengthMismatch {
            op: "grad_check_linear",
            expected: map.map_in_dim(),
            got: x.len(),
        });
    }
    let mut r = rng::seeded(rng::mix(seed, 0x11ea));
    let mut worst = 0.0f64;
    for _ in 0..probes {
        let v = rng::random_vec(&mut r, x.len(), 1.0);
        let mut plus = x.clone();
        let mut minus = x.clone();
        for i in 0..x.len() {
            plus[i] += fd_step * v[i];
            minus[i] -= fd_step * v[i];
        }
        let f_plus = map.apply_map(&plus)?;
        let f_minus = map.apply_map(&minus)?;
        let mut fd = Vec::with_capacity(f_plus.len());
        for i in 0..f_plus.len() {
            fd.push((f_plus[i] - f_minus[i]) / (2.0 * fd_step));
        }
        let analytic = map.apply_map(&v)?;
        worst = worst.max(rel_err(&DenseVec::from_raw(fd), &analytic));
    }
    Ok(GradReport {
        op: op.to_string(),
        probes,
        fd_step,
        max_rel_err: worst,
        bound: LINEAR_GRAD_BOUND,
        passed: worst <= LINEAR_GRAD_BOUND,
    })
}

/// Central-difference check of the bilinear form's Jacobian action:
/// `(f(x + h v) - f(x - h v)) / (2 h)` against `J(x) v`. Central
/// differences are exact for quadratics too; the looser bound absorbs
/// the cancellation noise of the larger intermediate values.
pub fn grad_check_bilinear(
    w: &LiftedAttnMatrix,
    x: &DenseVec,
    fd_step: f64,
    probes: usize,
    seed: u64,
) -> Result<GradReport> {
    if x.len() != w.in_dim() {
        return Err(Error::LengthMismatch {
            op: "grad_check_bilinear",
            expected: w.in_dim(),
            got: x.len(),
        });
    }
    let mut r = rng::seeded(rng::mix(seed, 0xb111));
    let jac = w.jacobian(x)?;
    let mut worst = 0.0f64;
    for _ in 0..probes {
        let v = rng::random_vec(&mut r, x.len(), 1.0);
        let mut plus = x.clone();
        let mut minus = x.clone();
        for i in 0..x.len() {
            plus[i] += fd_step * v[i];
            minus[i] -= fd_step * v[i];
        }
        let f_plus = w.apply(&plus)?;
        let f_minus = w.apply(&minus)?;
        let mut fd = Vec::with_capacity(f_plus.len());
        for i in 0..f_plus.len() {
            fd.push((f_plus[i] - f_minus[i]) / (2.0 * fd_step));
        }
        let analytic = jac.matvec(&v)?;
        worst = worst.max(rel_err(&DenseVec::from_raw(fd), &analytic));
    }
    Ok(GradReport {
        op: "lifted_apply".to_string(),
        probes,
        fd_step,
        max_rel_err: worst,
        bound: BILINEAR_GRAD_BOUND,
        passed: worst <= BILINEAR_GRAD_BOUND,
    })
}
