//! Digit classification through the banded convolution matrix:
//! conv(5x5, tied, stride 1) -> relu -> 2x2 average pool -> dense
//! softmax readout, cross-entropy loss, manual backward pass.
//!
//! The convolution and pooling stages can run either through the
//! structured matrices or through the direct nested-loop references
//! ([`ConvPath`]); with identical seeds the two variants follow the
//! same training trajectory step for step, because they realize the
//! same linear maps.

use std::path::Path;

use crate::check::GradReport;
use crate::conv::{build_wconv, build_wpool, oracle_avg_pool, oracle_conv2d, ConvMode, ConvSpec};
use crate::data::{flatten_image, load_idx_images, load_idx_labels, synth_digits, ImageGrid};
use crate::error::{Error, Result};
use crate::mat::{BandedMatrix, DenseMat, DenseVec};
use crate::rng;
use crate::train::{
    preflight_grad_check, shuffled_indices, Adam, AdamConfig, EpochRow, TrainReport,
};

pub const IMG_SIDE: usize = 28;
pub const KERNEL_SIDE: usize = 5;
pub const CONV_SIDE: usize = IMG_SIDE - KERNEL_SIDE + 1;
pub const POOL_P: usize = 2;
pub const POOLED_SIDE: usize = CONV_SIDE / POOL_P;
pub const FEATURES: usize = POOLED_SIDE * POOLED_SIDE;
pub const CLASSES: usize = 10;

pub const TRAIN_IMAGES_FILE: &str = "train-images-idx3-ubyte";
pub const TRAIN_LABELS_FILE: &str = "train-labels-idx1-ubyte";
pub const EVAL_IMAGES_FILE: &str = "t10k-images-idx3-ubyte";
pub const EVAL_LABELS_FILE: &str = "t10k-labels-idx1-ubyte";

/// Which implementation carries the convolution and pooling stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvPath {
    /// Banded matrices, rebuilt from the kernel after each update.
    Matrix,
    /// Nested-loop sliding-window references.
    Direct,
}

#[derive(Debug, Clone)]
pub struct MnistConfig {
    /// Training images used (first `subset` of the split); 0 means all.
    pub subset: usize,
    pub epochs: usize,
    pub lr: f64,
    pub batch: usize,
    pub seed: u64,
    pub conv_path: ConvPath,
}

impl Default for MnistConfig {
    fn default() -> Self {
        Self {
            subset: 2000,
            epochs: 10,
            lr: 1e-3,
            batch: 64,
            seed: 0,
            conv_path: ConvPath::Matrix,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MnistData {
    pub train_images: Vec<ImageGrid>,
    pub train_labels: Vec<u8>,
    pub eval_images: Vec<ImageGrid>,
    pub eval_labels: Vec<u8>,
}

impl MnistData {
    fn validate(&self) -> Result<()> {
        if self.train_images.is_empty() || self.eval_images.is_empty() {
            return Err(Error::InvalidSpec("empty image split".to_string()));
        }
        if self.train_images.len() != self.train_labels.len()
            || self.eval_images.len() != self.eval_labels.len()
        {
            return Err(Error::InvalidSpec(
                "image and label counts differ".to_string(),
            ));
        }
        for img in self.train_images.iter().chain(&self.eval_images) {
            if img.height() != IMG_SIDE || img.width() != IMG_SIDE || img.channels() != 1 {
                return Err(Error::InvalidSpec(format!(
                    "expected {IMG_SIDE}x{IMG_SIDE} grayscale images, got {}x{}x{}",
                    img.height(),
                    img.width(),
                    img.channels()
                )));
            }
        }
        if let Some(l) = self
            .train_labels
            .iter()
            .chain(&self.eval_labels)
            .find(|&&l| l as usize >= CLASSES)
        {
            return Err(Error::InvalidSpec(format!(
                "label {l} outside 0..{CLASSES}"
            )));
        }
        Ok(())
    }
}

/// Loads the four standard IDX files from `dir`, rejecting with the
/// full path when one is missing.
pub fn load_mnist_dir(dir: &Path) -> Result<MnistData> {
    let file = |name: &str| -> Result<std::path::PathBuf> {
        let path = dir.join(name);
        if !path.is_file() {
            return Err(Error::InvalidSpec(format!(
                "missing data file: {}",
                path.display()
            )));
        }
        Ok(path)
    };
    let data = MnistData {
        train_images: load_idx_images(&file(TRAIN_IMAGES_FILE)?)?,
        train_labels: load_idx_labels(&file(TRAIN_LABELS_FILE)?)?,
        eval_images: load_idx_images(&file(EVAL_IMAGES_FILE)?)?,
        eval_labels: load_idx_labels(&file(EVAL_LABELS_FILE)?)?,
    };
    data.validate()?;
    Ok(data)
}

/// In-memory synthetic corpus, quantized through the same byte
/// round-trip the IDX files apply, so it matches a written-then-loaded
/// corpus exactly.
pub fn synth_mnist_data(train_count: usize, eval_count: usize, seed: u64) -> MnistData {
    let quantize = |images: Vec<ImageGrid>| -> Vec<ImageGrid> {
        images
            .into_iter()
            .map(|img| {
                let mut q = ImageGrid::zeros(img.height(), img.width());
                for r in 0..img.height() {
                    for c in 0..img.width() {
                        let byte = (img.get(0, r, c) * 255.0).round().clamp(0.0, 255.0) as u8;
                        q.set(0, r, c, byte as f64 / 255.0);
                    }
                }
                q
            })
            .collect()
    };
    let (train_images, train_labels) = synth_digits(train_count, seed);
    let (eval_images, eval_labels) = synth_digits(eval_count, rng::mix(seed, 0xe7a1));
    MnistData {
        train_images: quantize(train_images),
        train_labels,
        eval_images: quantize(eval_images),
        eval_labels,
    }
}

#[derive(Debug, Clone)]
struct Params {
    kernel: Vec<f64>,
    dense_w: Vec<f64>,
    dense_b: Vec<f64>,
}

impl Params {
    fn init(seed: u64) -> Self {
        let mut r = rng::seeded(rng::mix(seed, 0x1417));
        let kscale = 1.0 / (KERNEL_SIDE as f64);
        let wscale = 1.0 / (FEATURES as f64).sqrt();
        Self {
            kernel: (0..KERNEL_SIDE * KERNEL_SIDE)
                .map(|_| rng::uniform(&mut r, kscale))
                .collect(),
            dense_w: (0..CLASSES * FEATURES)
                .map(|_| rng::uniform(&mut r, wscale))
                .collect(),
            dense_b: vec![0.0; CLASSES],
        }
    }
}

#[derive(Debug, Clone)]
struct Grads {
    kernel: Vec<f64>,
    dense_w: Vec<f64>,
    dense_b: Vec<f64>,
}

impl Grads {
    fn zeros() -> Self {
        Self {
            kernel: vec![0.0; KERNEL_SIDE * KERNEL_SIDE],
            dense_w: vec![0.0; CLASSES * FEATURES],
            dense_b: vec![0.0; CLASSES],
        }
    }

    fn scale(&mut self, factor: f64) {
        for g in self
            .kernel
            .iter_mut()
            .chain(&mut self.dense_w)
            .chain(&mut self.dense_b)
        {
            *g *= factor;
        }
    }
}

fn conv_spec(kernel: &[f64]) -> ConvSpec {
    ConvSpec {
        img_h: IMG_SIDE,
        img_w: IMG_SIDE,
        kernel: DenseMat::from_raw(KERNEL_SIDE, KERNEL_SIDE, kernel.to_vec()),
        stride: 1,
        mode: ConvMode::Valid2d,
        tied: true,
    }
}

struct Fwd {
    x: DenseVec,
    z1: DenseVec,
    z2: DenseVec,
    probs: Vec<f64>,
}

/// One batch's worth of frozen parameters: the band is rebuilt here
/// whenever the kernel has changed.
struct Pipeline<'a> {
    path: ConvPath,
    band: Option<BandedMatrix>,
    kernel: DenseMat,
    pool: &'a BandedMatrix,
    dense_w: &'a [f64],
    dense_b: &'a [f64],
}

impl<'a> Pipeline<'a> {
    fn new(params: &'a Params, pool: &'a BandedMatrix, path: ConvPath) -> Result<Self> {
        let spec = conv_spec(&params.kernel);
        let band = match path {
            ConvPath::Matrix => Some(build_wconv(&spec)?),
            ConvPath::Direct => None,
        };
        Ok(Self {
            path,
            band,
            kernel: spec.kernel,
            pool,
            dense_w: &params.dense_w,
            dense_b: &params.dense_b,
        })
    }

    fn forward(&self, img: &ImageGrid) -> Result<Fwd> {
        let x = flatten_image(img, 0)?;
        let z1 = match (self.path, &self.band) {
            (ConvPath::Matrix, Some(band)) => band.matvec(&x)?,
            _ => {
                let out = oracle_conv2d(&img.channel_mat(0)?, &self.kernel, 1)?;
                DenseVec::from_raw(out.as_slice().to_vec())
            }
        };
        let a1 = DenseVec::from_raw(
            z1.as_slice()
                .iter()
                .map(|&v| if v > 0.0 { v } else { 0.0 })
                .collect(),
        );
        let z2 = match (self.path, &self.band) {
            (ConvPath::Matrix, _) => self.pool.matvec(&a1)?,
            _ => {
                let grid = DenseMat::from_raw(CONV_SIDE, CONV_SIDE, a1.as_slice().to_vec());
                let out = oracle_avg_pool(&grid, POOL_P)?;
                DenseVec::from_raw(out.as_slice().to_vec())
            }
        };
        let mut logits = vec![0.0f64; CLASSES];
        for c in 0..CLASSES {
            let row = &self.dense_w[c * FEATURES..(c + 1) * FEATURES];
            let mut acc = self.dense_b[c];
            for f in 0..FEATURES {
                acc += row[f] * z2[f];
            }
            logits[c] = acc;
        }
        let probs = softmax(&logits);
        Ok(Fwd { x, z1, z2, probs })
    }

    fn sample_loss(&self, img: &ImageGrid, label: u8) -> Result<f64> {
        let fwd = self.forward(img)?;
        Ok(-fwd.probs[label as usize].ln())
    }

    fn backward(&self, fwd: &Fwd, label: u8, g: &mut Grads) -> Result<()> {
        let mut dlogits = fwd.probs.clone();
        dlogits[label as usize] -= 1.0;
        for c in 0..CLASSES {
            g.dense_b[c] += dlogits[c];
            let row = &mut g.dense_w[c * FEATURES..(c + 1) * FEATURES];
            for f in 0..FEATURES {
                row[f] += dlogits[c] * fwd.z2[f];
            }
        }
        let mut dz2 = vec![0.0f64; FEATURES];
        for c in 0..CLASSES {
            let row = &self.dense_w[c * FEATURES..(c + 1) * FEATURES];
            for f in 0..FEATURES {
                dz2[f] += row[f] * dlogits[c];
            }
        }
        let da1 = match (self.path, &self.band) {
            (ConvPath::Matrix, _) => self.pool.matvec_transpose(&DenseVec::from_raw(dz2))?,
            _ => {
                let mut v = vec![0.0f64; CONV_SIDE * CONV_SIDE];
                let weight = 1.0 / (POOL_P * POOL_P) as f64;
                for (u, row) in v.chunks_mut(CONV_SIDE).enumerate() {
                    for (w, slot) in row.iter_mut().enumerate() {
                        *slot = dz2[(u / POOL_P) * POOLED_SIDE + w / POOL_P] * weight;
                    }
                }
                DenseVec::from_raw(v)
            }
        };
        // relu gate on the pre-activation
        let mut dz1 = vec![0.0f64; CONV_SIDE * CONV_SIDE];
        for p in 0..dz1.len() {
            if fwd.z1[p] > 0.0 {
                dz1[p] = da1[p];
            }
        }
        // tied kernel: every output row shares the same 25 parameters,
        // so the per-row gradients dz1[p] * x[col] all sum into one
        // accumulator, in the same (row, slot) order on both paths
        match (self.path, &self.band) {
            (ConvPath::Matrix, Some(band)) => {
                for p in 0..band.rows() {
                    for (slot, &(col, _)) in band.row_entries(p).iter().enumerate() {
                        g.kernel[slot] += dz1[p] * fwd.x[col];
                    }
                }
            }
            _ => {
                for ou in 0..CONV_SIDE {
                    for ov in 0..CONV_SIDE {
                        let gp = dz1[ou * CONV_SIDE + ov];
                        let mut slot = 0;
                        for a in 0..KERNEL_SIDE {
                            for b in 0..KERNEL_SIDE {
                                g.kernel[slot] += gp * fwd.x[(ou + a) * IMG_SIDE + (ov + b)];
                                slot += 1;
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let exps: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn batch_mean_loss(
    params: &Params,
    pool: &BandedMatrix,
    path: ConvPath,
    images: &[ImageGrid],
    labels: &[u8],
    idx: &[usize],
) -> Result<f64> {
    let pipe = Pipeline::new(params, pool, path)?;
    let mut total = 0.0;
    for &i in idx {
        total += pipe.sample_loss(&images[i], labels[i])?;
    }
    Ok(total / idx.len() as f64)
}

fn batch_loss_and_grads(
    params: &Params,
    pool: &BandedMatrix,
    path: ConvPath,
    images: &[ImageGrid],
    labels: &[u8],
    idx: &[usize],
) -> Result<(f64, Grads)> {
    let pipe = Pipeline::new(params, pool, path)?;
    let mut grads = Grads::zeros();
    let mut total = 0.0;
    for &i in idx {
        let fwd = pipe.forward(&images[i])?;
        total -= fwd.probs[labels[i] as usize].ln();
        pipe.backward(&fwd, labels[i], &mut grads)?;
    }
    grads.scale(1.0 / idx.len() as f64);
    Ok((total / idx.len() as f64, grads))
}

fn evaluate(
    params: &Params,
    pool: &BandedMatrix,
    path: ConvPath,
    images: &[ImageGrid],
    labels: &[u8],
) -> Result<f64> {
    let pipe = Pipeline::new(params, pool, path)?;
    let mut correct = 0usize;
    for (img, &label) in images.iter().zip(labels) {
        let fwd = pipe.forward(img)?;
        let mut best = 0usize;
        for c in 1..CLASSES {
            if fwd.probs[c] > fwd.probs[best] {
                best = c;
            }
        }
        if best == label as usize {
            correct += 1;
        }
    }
    Ok(correct as f64 / images.len() as f64)
}

fn preflight(
    params: &Params,
    pool: &BandedMatrix,
    cfg: &MnistConfig,
    images: &[ImageGrid],
    labels: &[u8],
    probe_idx: &[usize],
) -> Result<Vec<GradReport>> {
    let (_, grads) = batch_loss_and_grads(params, pool, cfg.conv_path, images, labels, probe_idx)?;
    let tensors: [(&str, &[f64], &[f64]); 3] = [
        ("mnist_kernel", &params.kernel, &grads.kernel),
        ("mnist_dense_w", &params.dense_w, &grads.dense_w),
        ("mnist_dense_b", &params.dense_b, &grads.dense_b),
    ];
    let mut reports = Vec::with_capacity(tensors.len());
    for (name, base, grad) in tensors {
        let report = preflight_grad_check(name, base, grad, cfg.seed, |candidate| {
            let mut probe = params.clone();
            match name {
                "mnist_kernel" => probe.kernel = candidate.to_vec(),
                "mnist_dense_w" => probe.dense_w = candidate.to_vec(),
                _ => probe.dense_b = candidate.to_vec(),
            }
            batch_mean_loss(&probe, pool, cfg.conv_path, images, labels, probe_idx)
        })?;
        if !report.passed {
            return Err(Error::InvalidSpec(format!(
                "gradient preflight failed for {}: rel err {:e} > {:e}",
                report.op, report.max_rel_err, report.bound
            )));
        }
        reports.push(report);
    }
    Ok(reports)
}

pub fn train_mnist(data: &MnistData, cfg: &MnistConfig) -> Result<TrainReport> {
    run(data, cfg).map(|(report, _)| report)
}

fn run(data: &MnistData, cfg: &MnistConfig) -> Result<(TrainReport, Params)> {
    data.validate()?;
    if cfg.batch == 0 {
        return Err(Error::InvalidSpec("batch size must be positive".to_string()));
    }
    if cfg.subset > data.train_images.len() {
        return Err(Error::InvalidSpec(format!(
            "subset {} exceeds the {} available training images",
            cfg.subset,
            data.train_images.len()
        )));
    }
    let n = if cfg.subset == 0 {
        data.train_images.len()
    } else {
        cfg.subset
    };
    let images = &data.train_images;
    let labels = &data.train_labels;
    let pool = build_wpool(CONV_SIDE, CONV_SIDE, POOL_P)?;
    let mut params = Params::init(cfg.seed);

    let probe_idx: Vec<usize> = (0..n.min(8)).collect();
    let reports = preflight(&params, &pool, cfg, images, labels, &probe_idx)?;

    let mut adam = Adam::new(AdamConfig {
        lr: cfg.lr,
        ..AdamConfig::default()
    });
    let mut step_losses = Vec::new();
    let mut epochs = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        let order = shuffled_indices(n, rng::mix(cfg.seed, epoch as u64));
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch) {
            let (loss, grads) =
                batch_loss_and_grads(&params, &pool, cfg.conv_path, images, labels, chunk)?;
            if !loss.is_finite() {
                return Err(Error::Diverged {
                    what: "loss",
                    param: "mnist".to_string(),
                    step: adam.step_count() + 1,
                });
            }
            step_losses.push(loss);
            loss_sum += loss;
            batches += 1;
            adam.begin_step();
            adam.update("kernel", &mut params.kernel, &grads.kernel)?;
            adam.update("dense_w", &mut params.dense_w, &grads.dense_w)?;
            adam.update("dense_b", &mut params.dense_b, &grads.dense_b)?;
        }
        let acc = evaluate(
            &params,
            &pool,
            cfg.conv_path,
            &data.eval_images,
            &data.eval_labels,
        )?;
        epochs.push(EpochRow {
            epoch,
            train_loss: loss_sum / batches as f64,
            eval_metric: acc,
        });
    }

    let final_metric = match epochs.last() {
        Some(row) => row.eval_metric,
        None => evaluate(
            &params,
            &pool,
            cfg.conv_path,
            &data.eval_images,
            &data.eval_labels,
        )?,
    };
    let mut epochs_to_best = 0;
    let mut best = f64::NEG_INFINITY;
    for row in &epochs {
        if row.eval_metric > best {
            best = row.eval_metric;
            epochs_to_best = row.epoch;
        }
    }
    let report = TrainReport {
        epochs,
        final_metric,
        epochs_to_best,
        baseline_metric: None,
        step_losses,
        preflight: reports,
    };
    Ok((report, params))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_data() -> MnistData {
        synth_mnist_data(60, 20, 11)
    }

    fn small_cfg() -> MnistConfig {
        MnistConfig {
            subset: 0,
            epochs: 1,
            lr: 1e-3,
            batch: 20,
            seed: 5,
            conv_path: ConvPath::Matrix,
        }
    }

    #[test]
    fn tied_gradient_matches_untied_finite_differences() {
        // loss = sum_p c_p * relu((W x)_p) on an 8x8 image with a 3x3
        // kernel. The untied oracle stores an independent weight copy
        // per output row, differentiates each by central differences,
        // and sums the per-row gradients; tying must equal that sum.
        let mut r = rng::seeded(31);
        let spec = ConvSpec {
            img_h: 8,
            img_w: 8,
            kernel: rng::random_mat(&mut r, 3, 3, 0.5),
            stride: 1,
            mode: ConvMode::Valid2d,
            tied: true,
        };
        let band = build_wconv(&spec).unwrap();
        let x = rng::random_vec(&mut r, 64, 1.0);
        let c = rng::random_vec(&mut r, band.rows(), 1.0);

        // tied analytic gradient, same chain as training backward
        let z = band.matvec(&x).unwrap();
        let mut tied = vec![0.0f64; 9];
        for p in 0..band.rows() {
            let dz = if z[p] > 0.0 { c[p] } else { 0.0 };
            for (slot, &(col, _)) in band.row_entries(p).iter().enumerate() {
                tied[slot] += dz * x[col];
            }
        }

        // untied oracle: weights[p][slot], all initialized to the kernel
        let untied_loss = |weights: &Vec<Vec<f64>>| -> f64 {
            let mut total = 0.0;
            for p in 0..band.rows() {
                let mut acc = 0.0;
                for (slot, &(col, _)) in band.row_entries(p).iter().enumerate() {
                    acc += weights[p][slot] * x[col];
                }
                total += c[p] * acc.max(0.0);
            }
            total
        };
        let base: Vec<Vec<f64>> = (0..band.rows())
            .map(|_| spec.kernel.as_slice().to_vec())
            .collect();
        let h = 1e-6;
        let mut untied_sum = vec![0.0f64; 9];
        for p in 0..band.rows() {
            for slot in 0..9 {
                let mut plus = base.clone();
                plus[p][slot] += h;
                let mut minus = base.clone();
                minus[p][slot] -= h;
                untied_sum[slot] += (untied_loss(&plus) - untied_loss(&minus)) / (2.0 * h);
            }
        }
        for slot in 0..9 {
            assert!(
                (tied[slot] - untied_sum[slot]).abs() < 1e-6,
                "slot {slot}: tied {} untied {}",
                tied[slot],
                untied_sum[slot]
            );
        }
    }

    #[test]
    fn zero_lr_leaves_parameters_untouched() {
        let data = small_data();
        let frozen = Params::init(5);
        let cfg = MnistConfig {
            lr: 0.0,
            ..small_cfg()
        };
        let (report, params) = run(&data, &cfg).unwrap();
        assert_eq!(params.kernel, frozen.kernel);
        assert_eq!(params.dense_w, frozen.dense_w);
        assert_eq!(params.dense_b, frozen.dense_b);
        assert_eq!(report.epochs.len(), 1);
    }

    #[test]
    fn matrix_and_direct_paths_share_the_loss_trajectory() {
        let data = small_data();
        let matrix = train_mnist(&data, &small_cfg()).unwrap();
        let direct = train_mnist(
            &data,
            &MnistConfig {
                conv_path: ConvPath::Direct,
                ..small_cfg()
            },
        )
        .unwrap();
        assert_eq!(matrix.step_losses.len(), direct.step_losses.len());
        assert!(!matrix.step_losses.is_empty());
        for (a, b) in matrix.step_losses.iter().zip(&direct.step_losses) {
            assert!((a - b).abs() <= 1e-9, "losses diverged: {a} vs {b}");
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let data = small_data();
        let a = train_mnist(&data, &small_cfg()).unwrap();
        let b = train_mnist(&data, &small_cfg()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_epochs_reports_initial_accuracy_with_empty_loss_list() {
        let data = small_data();
        let cfg = MnistConfig {
            epochs: 0,
            ..small_cfg()
        };
        let report = train_mnist(&data, &cfg).unwrap();
        assert!(report.epochs.is_empty());
        assert!(report.step_losses.is_empty());
        assert_eq!(report.epochs_to_best, 0);
        assert!((0.0..=1.0).contains(&report.final_metric));
        assert_eq!(report.preflight.len(), 3);
        assert!(report.preflight.iter().all(|r| r.passed));
    }

    #[test]
    fn missing_data_file_reports_its_path() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_mnist_dir(dir.path()).unwrap_err().to_string();
        assert!(err.contains(TRAIN_IMAGES_FILE), "{err}");
        assert!(err.contains(dir.path().to_str().unwrap()), "{err}");
    }

    #[test]
    fn oversized_subset_rejected() {
        let data = small_data();
        let cfg = MnistConfig {
            subset: 1000,
            ..small_cfg()
        };
        assert!(train_mnist(&data, &cfg).is_err());
    }

    #[test]
    fn synthetic_corpus_round_trips_through_idx_files() {
        let dir = tempfile::tempdir().unwrap();
        crate::data::write_synth_corpus(dir.path(), 30, 10, 11).unwrap();
        let loaded = load_mnist_dir(dir.path()).unwrap();
        let direct = synth_mnist_data(30, 10, 11);
        assert_eq!(loaded.train_images, direct.train_images);
        assert_eq!(loaded.train_labels, direct.train_labels);
        assert_eq!(loaded.eval_images, direct.eval_images);
        assert_eq!(loaded.eval_labels, direct.eval_labels);
    }

    #[test]
    fn training_reduces_the_loss_on_a_small_corpus() {
        let data = small_data();
        let cfg = MnistConfig {
            epochs: 6,
            lr: 5e-3,
            ..small_cfg()
        };
        let report = train_mnist(&data, &cfg).unwrap();
        let first = report.epochs.first().unwrap().train_loss;
        let last = report.epochs.last().unwrap().train_loss;
        assert!(last < first, "loss did not drop: {first} -> {last}");
    }
}
