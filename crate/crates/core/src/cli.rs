//! Command-line front end: `verify`, `train`, `bench`, `dump`.
//!
//! stdout carries only the machine-readable CSV of each subcommand;
//! the resolved configuration and all diagnostics go to stderr.
//! Exit codes: 0 when everything passed or succeeded, 1 on a check
//! failure or runtime error, 2 on a usage error.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::attn::{build_w_sa, LiftedSpec};
use crate::bench::{bench_attn, bench_conv, bench_rnn, results_to_csv, BenchResult};
use crate::check::{reports_to_csv, run_suite, CheckOptions};
use crate::conv::{build_wconv, build_wpool, ConvMode, ConvSpec};
use crate::data::{load_series_csv, synth_ar1};
use crate::error::Result;
use crate::mat::market::write_coords;
use crate::rnn::{build_wrnn, RnnSpec};
use crate::rng;
use crate::train::{
    load_mnist_dir, synth_mnist_data, train_mnist, train_series, ConvPath, MnistConfig,
    SeriesConfig, TrainReport,
};

#[derive(Parser, Debug)]
#[command(
    name = "matiso",
    version,
    about = "structured-matrix forms of convolution, pooling, recurrence and attention"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum SuiteArg {
    Conv,
    Pool,
    Rnn,
    Attn,
    All,
}

impl SuiteArg {
    fn as_str(self) -> &'static str {
        match self {
            SuiteArg::Conv => "conv",
            SuiteArg::Pool => "pool",
            SuiteArg::Rnn => "rnn",
            SuiteArg::Attn => "attn",
            SuiteArg::All => "all",
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum TaskArg {
    Mnist,
    Series,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum BenchOpArg {
    Conv,
    Rnn,
    Attn,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum LayerArg {
    Conv,
    Pool,
    Rnn,
    Attn,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Run randomized equivalence suites; one CSV row per suite
    Verify {
        #[arg(long, value_enum, default_value_t = SuiteArg::All)]
        suite: SuiteArg,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Overrides the suite's default tolerance
        #[arg(long)]
        tol: Option<f64>,
        /// Adds this to one stored coefficient per built object — a
        /// negative control that must make the suite fail
        #[arg(long, default_value_t = 0.0)]
        perturb: f64,
    },
    /// Train the digit or series model; per-epoch CSV on stdout
    Train {
        #[arg(long, value_enum)]
        task: TaskArg,
        /// Directory holding the IDX corpus (mnist) or series.csv
        /// (series); synthetic data is generated when omitted
        #[arg(long)]
        data_dir: Option<PathBuf>,
        /// Training samples used; 0 means the whole split
        #[arg(long, default_value_t = 2000)]
        subset: usize,
        #[arg(long, default_value_t = 10)]
        epochs: usize,
        #[arg(long, default_value_t = 1e-3)]
        lr: f64,
        #[arg(long, default_value_t = 64)]
        batch: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Series window length
        #[arg(long, default_value_t = 24)]
        w: usize,
        /// Series forecast horizon
        #[arg(long, default_value_t = 1)]
        h: usize,
    },
    /// Time structured vs densified vs direct implementations
    Bench {
        #[arg(long, value_enum)]
        op: BenchOpArg,
        /// Comma-separated size list (image side / steps / sequence
        /// length); each op has its own default
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        #[arg(long, default_value_t = 10)]
        repeats: usize,
        /// Additionally time the row-parallel variants
        #[arg(long)]
        parallel: bool,
    },
    /// Write one structured matrix to a Matrix Market file
    Dump {
        #[arg(long, value_enum)]
        layer: LayerArg,
        /// Image height (conv, pool)
        #[arg(long, default_value_t = 8)]
        m: usize,
        /// Image width (conv, pool)
        #[arg(long, default_value_t = 8)]
        n: usize,
        /// Kernel side (conv)
        #[arg(long, default_value_t = 3)]
        r: usize,
        /// Stride (conv)
        #[arg(long, default_value_t = 1)]
        s: usize,
        /// Pooling window (pool)
        #[arg(long, default_value_t = 2)]
        p: usize,
        /// Steps (rnn)
        #[arg(long, default_value_t = 4)]
        t: usize,
        /// Input dimension (rnn)
        #[arg(long, default_value_t = 3)]
        d: usize,
        /// Hidden dimension (rnn)
        #[arg(long, default_value_t = 4)]
        hid: usize,
        /// Sequence length (attn)
        #[arg(long, default_value_t = 4)]
        seq: usize,
        /// Output dimension (attn)
        #[arg(long, default_value_t = 4)]
        out_dim: usize,
        /// Seed for the randomly drawn weights
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parses and dispatches; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    eprintln!("config: {:?}", cli.cmd);
    match dispatch(cli.cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<i32> {
    match cmd {
        Cmd::Verify {
            suite,
            trials,
            seed,
            tol,
            perturb,
        } => {
            let opts = CheckOptions {
                trials,
                seed,
                tol,
                perturb,
            };
            let reports = run_suite(suite.as_str(), &opts)?;
            print!("{}", reports_to_csv(&reports));
            Ok(if reports.iter().all(|r| r.passed) { 0 } else { 1 })
        }
        Cmd::Train {
            task,
            data_dir,
            subset,
            epochs,
            lr,
            batch,
            seed,
            w,
            h,
        } => {
            let report = match task {
                TaskArg::Mnist => {
                    let (data, cfg_subset) = match &data_dir {
                        Some(dir) => (load_mnist_dir(dir)?, subset),
                        None => {
                            let train_count = if subset == 0 { 2000 } else { subset };
                            let eval_count = (train_count / 4).max(1);
                            (synth_mnist_data(train_count, eval_count, seed), 0)
                        }
                    };
                    let cfg = MnistConfig {
                        subset: cfg_subset,
                        epochs,
                        lr,
                        batch,
                        seed,
                        conv_path: ConvPath::Matrix,
                    };
                    train_mnist(&data, &cfg)?
                }
                TaskArg::Series => {
                    let series = match &data_dir {
                        Some(dir) => load_series_csv(&dir.join("series.csv"), false)?,
                        None => synth_ar1(2048, 0.8, 0.25, seed),
                    };
                    let cfg = SeriesConfig {
                        window: w,
                        horizon: h,
                        hid_dim: 8,
                        epochs,
                        lr,
                        batch,
                        seed,
                    };
                    train_series(&series, &cfg)?
                }
            };
            log_train_diagnostics(&report);
            print!("{}", report.to_csv());
            Ok(0)
        }
        Cmd::Bench {
            op,
            sizes,
            repeats,
            parallel,
        } => {
            let sizes = sizes.unwrap_or_else(|| match op {
                BenchOpArg::Conv => vec![8, 16, 24],
                BenchOpArg::Rnn => vec![4, 8, 16],
                BenchOpArg::Attn => vec![4, 8, 12],
            });
            let results = match op {
                BenchOpArg::Conv => bench_conv(&sizes, repeats, parallel)?,
                BenchOpArg::Rnn => bench_rnn(&sizes, repeats, parallel)?,
                BenchOpArg::Attn => bench_attn(&sizes, repeats, parallel)?,
            };
            log_monotonicity(&results);
            print!("{}", results_to_csv(&results));
            Ok(0)
        }
        Cmd::Dump {
            layer,
            m,
            n,
            r,
            s,
            p,
            t,
            d,
            hid,
            seq,
            out_dim,
            seed,
            out,
        } => {
            let (rows, cols, coords) = match layer {
                LayerArg::Conv => {
                    let spec = ConvSpec {
                        img_h: m,
                        img_w: n,
                        kernel: rng::random_mat(&mut rng::seeded(rng::mix(seed, 0xc0)), r, r, 1.0),
                        stride: s,
                        mode: ConvMode::Valid2d,
                        tied: true,
                    };
                    let band = build_wconv(&spec)?;
                    (band.rows(), band.cols(), band.to_coords())
                }
                LayerArg::Pool => {
                    let band = build_wpool(m, n, p)?;
                    (band.rows(), band.cols(), band.to_coords())
                }
                LayerArg::Rnn => {
                    let mut rr = rng::seeded(rng::mix(seed, 0x51));
                    let spec = RnnSpec {
                        t_steps: t,
                        in_dim: d,
                        hid_dim: hid,
                        w_xh: rng::random_mat(&mut rr, hid, d, 0.5),
                        w_hh: rng::random_mat(&mut rr, hid, hid, 0.5),
                    };
                    let block = build_wrnn(&spec)?;
                    (block.rows(), block.cols(), block.to_coords())
                }
                LayerArg::Attn => {
                    let mut rr = rng::seeded(rng::mix(seed, 0xa7));
                    let spec = LiftedSpec {
                        out_dim,
                        seq_len: seq,
                        w_q: rng::random_mat(&mut rr, out_dim, seq, 0.5),
                        w_k: rng::random_mat(&mut rr, seq, seq, 0.5),
                        w_v: rng::random_mat(&mut rr, out_dim, seq, 0.5),
                        patch_groups: None,
                    };
                    let lifted = build_w_sa(&spec)?;
                    (lifted.out_dim(), lifted.lifted_cols(), lifted.to_coords())
                }
            };
            write_coords(&out, rows, cols, &coords)?;
            eprintln!(
                "wrote {} entries ({rows}x{cols}) to {}",
                coords.len(),
                out.display()
            );
            Ok(0)
        }
    }
}

fn log_train_diagnostics(report: &TrainReport) {
    for g in &report.preflight {
        eprintln!(
            "preflight {}: rel err {:e} (bound {:e}, {} probes) -> {}",
            g.op,
            g.max_rel_err,
            g.bound,
            g.probes,
            if g.passed { "ok" } else { "FAILED" }
        );
    }
    if let Some(baseline) = report.baseline_metric {
        let improvement = if baseline > 0.0 {
            1.0 - report.final_metric / baseline
        } else {
            0.0
        };
        eprintln!(
            "persistence baseline MSE {:e}; improvement {:.1}%",
            baseline,
            improvement * 100.0
        );
    }
}

fn log_monotonicity(results: &[BenchResult]) {
    // purely informational: flag runs where a larger instance of the
    // same op timed faster than a smaller one (noise, cache effects)
    let mut last: Option<(&str, u128)> = None;
    for r in results {
        if let Some((op, ns)) = last {
            if op == r.op && r.median_ns < ns {
                eprintln!(
                    "note: {} at {} ran faster than the previous size",
                    r.op, r.size
                );
            }
        }
        last = Some((r.op.as_str(), r.median_ns));
    }
}
