//! Micro-benchmarks of structured application against densified
//! multiplication and the nested-loop references, on identical inputs.
//!
//! Two guards run before any clock starts: every compared
//! implementation must agree within [`BENCH_EQ_TOL`] on the benchmark
//! input, and the structural work counters must match their closed
//! forms (`P*r^2` stored values for a convolution band, `T(T+1)/2*M*d`
//! for the recurrence blocks, `M*N^2` for a dense lifted form).
//! Timings are medians over warm repeats — a discarded warmup call
//! precedes the measured ones.

use std::time::Instant;

use crate::attn::{build_w_sa, oracle_lifted, LiftedSpec};
use crate::conv::{build_wconv, oracle_conv2d, ConvMode, ConvSpec};
use crate::error::{Error, Result};
use crate::mat::DenseVec;
use crate::rnn::{build_wrnn, oracle_rnn, RnnSpec};
use crate::rng;
use crate::Activation;

pub const BENCH_EQ_TOL: f64 = 1e-12;
pub const MIN_REPEATS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub op: String,
    pub size: String,
    pub repeats: usize,
    pub median_ns: u128,
    /// Full applications of the operator per second.
    pub ops_per_sec: f64,
}

pub const BENCH_CSV_HEADER: &str = "op,size,repeats,median_ns,ops_per_sec";

pub fn results_to_csv(results: &[BenchResult]) -> String {
    let mut out = String::from(BENCH_CSV_HEADER);
    for r in results {
        out.push('\n');
        out.push_str(&format!(
            "{},{},{},{},{:e}",
            r.op, r.size, r.repeats, r.median_ns, r.ops_per_sec
        ));
    }
    out.push('\n');
    out
}

fn check_repeats(repeats: usize) -> Result<()> {
    if repeats < MIN_REPEATS {
        return Err(Error::InvalidSpec(format!(
            "repeats {repeats} below the minimum of {MIN_REPEATS}"
        )));
    }
    Ok(())
}

fn median_ns(repeats: usize, mut f: impl FnMut()) -> u128 {
    f(); // warmup, discarded
    let mut times: Vec<u128> = (0..repeats)
        .map(|_| {
            let t0 = Instant::now();
            f();
            t0.elapsed().as_nanos()
        })
        .collect();
    times.sort_unstable();
    let mid = times.len() / 2;
    if times.len() % 2 == 1 {
        times[mid]
    } else {
        (times[mid - 1] + times[mid]) / 2
    }
}

fn gate(a: &DenseVec, b: &DenseVec, what: &str) -> Result<()> {
    let diff = a.max_abs_diff(b);
    if diff > BENCH_EQ_TOL {
        return Err(Error::InvalidSpec(format!(
            "benchmark equality gate failed for {what}: outputs differ by {diff:e}"
        )));
    }
    Ok(())
}

fn record(results: &mut Vec<BenchResult>, op: &str, size: &str, repeats: usize, f: impl FnMut()) {
    let ns = median_ns(repeats, f).max(1);
    results.push(BenchResult {
        op: op.to_string(),
        size: size.to_string(),
        repeats,
        median_ns: ns,
        ops_per_sec: 1e9 / ns as f64,
    });
}

/// 3x3 kernel, stride 1 convolutions over square images of the given
/// side lengths.
pub fn bench_conv(sizes: &[usize], repeats: usize, parallel: bool) -> Result<Vec<BenchResult>> {
    check_repeats(repeats)?;
    let mut results = Vec::new();
    for &side in sizes {
        let mut r = rng::seeded(rng::mix(0xbc0, side as u64));
        let spec = ConvSpec {
            img_h: side,
            img_w: side,
            kernel: rng::random_mat(&mut r, 3, 3, 1.0),
            stride: 1,
            mode: ConvMode::Valid2d,
            tied: true,
        };
        let image = rng::random_mat(&mut r, side, side, 1.0);
        let x = DenseVec::new(image.as_slice().to_vec())?;
        let band = build_wconv(&spec)?;
        let dense = band.densify()?;
        assert_eq!(
            band.nnz(),
            band.rows() * spec.kernel_size() * spec.kernel_size(),
            "band stores exactly P*r^2 values"
        );

        let y_band = band.matvec(&x)?;
        let y_dense = dense.matvec(&x)?;
        let y_oracle = DenseVec::new(oracle_conv2d(&image, &spec.kernel, 1)?.as_slice().to_vec())?;
        gate(&y_band, &y_dense, "conv banded vs densified")?;
        gate(&y_band, &y_oracle, "conv banded vs oracle")?;

        let size = format!("{side}x{side}");
        record(&mut results, "conv_banded", &size, repeats, || {
            let _ = band.matvec(&x);
        });
        record(&mut results, "conv_dense", &size, repeats, || {
            let _ = dense.matvec(&x);
        });
        record(&mut results, "conv_oracle", &size, repeats, || {
            let _ = oracle_conv2d(&image, &spec.kernel, 1);
        });
        if parallel {
            let y_par = band.matvec_parallel(&x)?;
            gate(&y_band, &y_par, "conv banded vs row-parallel")?;
            record(&mut results, "conv_banded_par", &size, repeats, || {
                let _ = band.matvec_parallel(&x);
            });
        }
    }
    Ok(results)
}

/// Linear recurrences with 8 input and 8 hidden dimensions, unrolled
/// over the given step counts.
pub fn bench_rnn(sizes: &[usize], repeats: usize, parallel: bool) -> Result<Vec<BenchResult>> {
    check_repeats(repeats)?;
    let dim = 8usize;
    let mut results = Vec::new();
    for &t_steps in sizes {
        let mut r = rng::seeded(rng::mix(0x4a2, t_steps as u64));
        let spec = RnnSpec {
            t_steps,
            in_dim: dim,
            hid_dim: dim,
            w_xh: rng::random_mat(&mut r, dim, dim, 0.5),
            w_hh: rng::random_mat(&mut r, dim, dim, 0.25),
        };
        let series = crate::data::SeriesMatrix::new(
            t_steps,
            dim,
            (0..t_steps * dim)
                .map(|_| rng::uniform(&mut r, 1.0))
                .collect(),
        )?;
        let x = series.flatten();
        let block = build_wrnn(&spec)?;
        let dense = block.densify()?;
        assert_eq!(
            block.element_count(),
            t_steps * (t_steps + 1) / 2 * dim * dim,
            "blocks hold exactly T(T+1)/2*M*d values"
        );

        let y_block = block.matvec(&x)?;
        let y_dense = dense.matvec(&x)?;
        let y_oracle = DenseVec::new(
            oracle_rnn(&spec, &series, Activation::None)?
                .as_slice()
                .to_vec(),
        )?;
        gate(&y_block, &y_dense, "rnn block vs densified")?;
        gate(&y_block, &y_oracle, "rnn block vs stepwise")?;

        let size = format!("T{t_steps}");
        record(&mut results, "rnn_block", &size, repeats, || {
            let _ = block.matvec(&x);
        });
        record(&mut results, "rnn_dense", &size, repeats, || {
            let _ = dense.matvec(&x);
        });
        record(&mut results, "rnn_oracle", &size, repeats, || {
            let _ = oracle_rnn(&spec, &series, Activation::None);
        });
        if parallel {
            let y_par = block.matvec_parallel(&x)?;
            gate(&y_block, &y_par, "rnn block vs row-parallel")?;
            record(&mut results, "rnn_block_par", &size, repeats, || {
                let _ = block.matvec_parallel(&x);
            });
        }
    }
    Ok(results)
}

/// Frozen-projection attention per sequence length: the sparse
/// bilinear form applied straight to `x` versus a materialized
/// `x (x) x` lift multiplied by the densified matrix, versus the
/// triple-sum reference. The `parallel` flag is accepted for a uniform
/// call shape but has no effect here — this application is a single
/// pass over the stored entries.
pub fn bench_attn(sizes: &[usize], repeats: usize, _parallel: bool) -> Result<Vec<BenchResult>> {
    check_repeats(repeats)?;
    let mut results = Vec::new();
    for &n in sizes {
        let mut r = rng::seeded(rng::mix(0xa77, n as u64));
        let spec = LiftedSpec {
            out_dim: n,
            seq_len: n,
            w_q: rng::random_mat(&mut r, n, n, 0.5),
            w_k: rng::random_mat(&mut r, n, n, 0.5),
            w_v: rng::random_mat(&mut r, n, n, 0.5),
            patch_groups: None,
        };
        let x = rng::random_vec(&mut r, n, 1.0);
        let lifted = build_w_sa(&spec)?;
        let dense = lifted.densify()?;
        assert_eq!(
            lifted.nnz(),
            n * n * n,
            "dense projections fill all M*N^2 slots"
        );

        let materialize = || -> Result<DenseVec> {
            let mut lift = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    lift.push(x[i] * x[j]);
                }
            }
            dense.matvec(&DenseVec::from_raw(lift))
        };
        let y_lifted = lifted.apply(&x)?;
        let y_materialized = materialize()?;
        let y_oracle = oracle_lifted(&spec, &x)?;
        gate(&y_lifted, &y_materialized, "attn lifted vs materialized")?;
        gate(&y_lifted, &y_oracle, "attn lifted vs triple sum")?;

        let size = format!("N{n}");
        record(&mut results, "attn_lifted", &size, repeats, || {
            let _ = lifted.apply(&x);
        });
        record(&mut results, "attn_materialized", &size, repeats, || {
            let _ = materialize();
        });
        record(&mut results, "attn_oracle", &size, repeats, || {
            let _ = oracle_lifted(&spec, &x);
        });
    }
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn too_few_repeats_rejected() {
        assert!(bench_conv(&[8], 2, false).is_err());
        assert!(bench_rnn(&[4], 0, false).is_err());
        assert!(bench_attn(&[4], 1, false).is_err());
    }

    #[test]
    fn conv_bench_produces_three_rows_per_size() {
        let results = bench_conv(&[6, 8], 3, false).unwrap();
        assert_eq!(results.len(), 6);
        assert!(results.iter().all(|r| r.median_ns >= 1));
        assert!(results.iter().all(|r| r.ops_per_sec > 0.0));
        assert_eq!(results[0].op, "conv_banded");
        assert_eq!(results[0].size, "6x6");
    }

    #[test]
    fn parallel_flag_adds_a_separate_row() {
        let results = bench_rnn(&[4], 3, true).unwrap();
        assert!(results.iter().any(|r| r.op == "rnn_block_par"));
        let serial = bench_rnn(&[4], 3, false).unwrap();
        assert!(serial.iter().all(|r| r.op != "rnn_block_par"));
    }

    #[test]
    fn attn_bench_covers_all_three_paths() {
        let results = bench_attn(&[3, 5], 3, false).unwrap();
        let ops: Vec<&str> = results.iter().map(|r| r.op.as_str()).collect();
        assert!(ops.contains(&"attn_lifted"));
        assert!(ops.contains(&"attn_materialized"));
        assert!(ops.contains(&"attn_oracle"));
    }

    #[test]
    fn csv_schema_and_row_shape() {
        let results = bench_conv(&[6], 3, false).unwrap();
        let csv = results_to_csv(&results);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), BENCH_CSV_HEADER);
        let row = lines.next().unwrap();
        assert_eq!(row.split(',').count(), 5);
        assert!(row.starts_with("conv_banded,6x6,3,"));
    }
}
