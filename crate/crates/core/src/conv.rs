//! Convolution and average pooling as banded matrices over flattened
//! images, together with direct nested-loop reference implementations.
//!
//! Convolution here means cross-correlation: the kernel slides without
//! flipping, `Y[u, v] = sum_{i, j} k[i, j] * X[u + i, v + j]`.
//!
//! Two band layouts are supported:
//!
//! - `Valid2d`: one row per in-bounds 2-D placement, stepping by the
//!   stride along both axes. This is the layout every equivalence claim
//!   and the trainer use.
//! - `FlatScan`: one row per 1-D offset of the flattened image,
//!   `P = floor((L - max N0) / s) + 1` rows with offset set
//!   `N0 = {i * img_w + j}`. Placements whose window crosses the row
//!   boundary of the image are kept (they read wrapped pixels), and an
//!   offset landing past the end of the vector is treated as zero and
//!   omitted from the band. It is a well-defined linear map, kept for
//!   comparison against the valid layout, whose rows it contains as a
//!   subset.

use crate::error::{Error, Result};
use crate::mat::{BandedMatrix, DenseMat, DenseVec};
use crate::Activation;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvMode {
    FlatScan,
    Valid2d,
}

/// Geometry and weights of one convolution layer.
#[derive(Debug, Clone)]
pub struct ConvSpec {
    pub img_h: usize,
    pub img_w: usize,
    pub kernel: DenseMat,
    pub stride: usize,
    pub mode: ConvMode,
    /// When true, all rows of the band share the `r^2` kernel values as
    /// one parameter set; gradients must then be aggregated across rows.
    /// When false, each row's copies are independent parameters.
    pub tied: bool,
}

impl ConvSpec {
    pub fn validate(&self) -> Result<()> {
        let r = self.kernel.rows();
        if r == 0 || self.kernel.cols() != r {
            return Err(Error::InvalidSpec(format!(
                "kernel must be square and non-empty, got {}x{}",
                self.kernel.rows(),
                self.kernel.cols()
            )));
        }
        if r > self.img_h.min(self.img_w) {
            return Err(Error::InvalidSpec(format!(
                "kernel size {r} exceeds image {}x{}",
                self.img_h, self.img_w
            )));
        }
        if self.stride == 0 {
            return Err(Error::InvalidSpec("stride must be at least 1".into()));
        }
        Ok(())
    }

    pub fn kernel_size(&self) -> usize {
        self.kernel.rows()
    }

    /// Flattened input length.
    pub fn input_len(&self) -> usize {
        self.img_h * self.img_w
    }

    /// Output grid of the valid 2-D layout.
    pub fn out_shape(&self) -> (usize, usize) {
        let r = self.kernel_size();
        (
            (self.img_h - r) / self.stride + 1,
            (self.img_w - r) / self.stride + 1,
        )
    }
}

/// Direct cross-correlation with valid placements. The window sum
/// deliberately accumulates in the opposite offset order from the
/// band's ascending columns, so agreement with the matrix path is a
/// statement about the values, never an artifact of shared rounding.
pub fn oracle_conv2d(image: &DenseMat, kernel: &DenseMat, stride: usize) -> Result<DenseMat> {
    let r = kernel.rows();
    if r == 0 || kernel.cols() != r {
        return Err(Error::InvalidSpec(format!(
            "kernel must be square and non-empty, got {}x{}",
            kernel.rows(),
            kernel.cols()
        )));
    }
    if stride == 0 {
        return Err(Error::InvalidSpec("stride must be at least 1".into()));
    }
    if r > image.rows().min(image.cols()) {
        return Err(Error::InvalidSpec(format!(
            "kernel size {r} exceeds image {}x{}",
            image.rows(),
            image.cols()
        )));
    }
    let out_h = (image.rows() - r) / stride + 1;
    let out_w = (image.cols() - r) / stride + 1;
    let mut out = DenseMat::zeros(out_h, out_w);
    for ou in 0..out_h {
        for ov in 0..out_w {
            let (u, v) = (ou * stride, ov * stride);
            let mut acc = 0.0;
            for i in (0..r).rev() {
                for j in (0..r).rev() {
                    acc += kernel.get(i, j) * image.get(u + i, v + j);
                }
            }
            out.set(ou, ov, acc);
        }
    }
    Ok(out)
}

/// Direct non-overlapping p x p mean pooling.
pub fn oracle_avg_pool(image: &DenseMat, p: usize) -> Result<DenseMat> {
    if p == 0 {
        return Err(Error::InvalidSpec("pool size must be at least 1".into()));
    }
    if image.rows() % p != 0 || image.cols() % p != 0 {
        return Err(Error::InvalidSpec(format!(
            "image {}x{} not divisible by pool size {p}",
            image.rows(),
            image.cols()
        )));
    }
    let (oh, ow) = (image.rows() / p, image.cols() / p);
    let inv = 1.0 / (p * p) as f64;
    let mut out = DenseMat::zeros(oh, ow);
    for qr in 0..oh {
        for qc in 0..ow {
            let mut acc = 0.0;
            for a in 0..p {
                for b in 0..p {
                    acc += image.get(qr * p + a, qc * p + b);
                }
            }
            out.set(qr, qc, acc * inv);
        }
    }
    Ok(out)
}

/// Row-major offset set `N0 = {i * img_w + j : 0 <= i, j < r}`, ascending.
fn offsets(img_w: usize, r: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(r * r);
    for i in 0..r {
        for j in 0..r {
            out.push(i * img_w + j);
        }
    }
    out
}

/// Builds the banded convolution matrix for `spec`. Row values are the
/// kernel entries, row-major; see the module docs for the two layouts.
pub fn build_wconv(spec: &ConvSpec) -> Result<BandedMatrix> {
    spec.validate()?;
    let r = spec.kernel_size();
    let l = spec.input_len();
    let kvals: Vec<f64> = spec.kernel.as_slice().to_vec();
    let offs = offsets(spec.img_w, r);
    let mut row_entries = Vec::new();
    match spec.mode {
        ConvMode::FlatScan => {
            let max_off = *offs.last().expect("kernel is non-empty");
            let p_rows = (l - max_off) / spec.stride + 1;
            for p in 0..p_rows {
                let base = p * spec.stride;
                let row: Vec<(usize, f64)> = offs
                    .iter()
                    .zip(&kvals)
                    .filter(|&(&x, _)| base + x < l)
                    .map(|(&x, &v)| (base + x, v))
                    .collect();
                row_entries.push(row);
            }
        }
        ConvMode::Valid2d => {
            let (out_h, out_w) = spec.out_shape();
            for ou in 0..out_h {
                for ov in 0..out_w {
                    let base = ou * spec.stride * spec.img_w + ov * spec.stride;
                    let row = offs
                        .iter()
                        .zip(&kvals)
                        .map(|(&x, &v)| (base + x, v))
                        .collect();
                    row_entries.push(row);
                }
            }
        }
    }
    BandedMatrix::from_rows(row_entries.len(), l, r * r, row_entries)
}

/// Builds the pooling matrix: `(img_h / p * img_w / p)` rows, each
/// holding `p^2` entries of `1 / p^2` over one non-overlapping window,
/// windows enumerated row-major over the pooled grid.
pub fn build_wpool(img_h: usize, img_w: usize, p: usize) -> Result<BandedMatrix> {
    if p == 0 {
        return Err(Error::InvalidSpec("pool size must be at least 1".into()));
    }
    if img_h % p != 0 || img_w % p != 0 {
        return Err(Error::InvalidSpec(format!(
            "image {img_h}x{img_w} not divisible by pool size {p}"
        )));
    }
    let (oh, ow) = (img_h / p, img_w / p);
    let inv = 1.0 / (p * p) as f64;
    let mut row_entries = Vec::with_capacity(oh * ow);
    for qr in 0..oh {
        for qc in 0..ow {
            let mut row = Vec::with_capacity(p * p);
            for a in 0..p {
                for b in 0..p {
                    row.push(((qr * p + a) * img_w + qc * p + b, inv));
                }
            }
            row_entries.push(row);
        }
    }
    BandedMatrix::from_rows(oh * ow, img_h * img_w, p * p, row_entries)
}

/// Band matvec followed by an elementwise activation.
pub fn conv_forward(w: &BandedMatrix, x: &DenseVec, act: Activation) -> Result<DenseVec> {
    let mut y = w.matvec(x)?;
    for v in y.as_mut_slice() {
        *v = act.apply(*v);
    }
    Ok(y)
}

/// Recovers the shared kernel from a tied band built by [`build_wconv`].
/// Rejects untied specs, structural mismatches, and any row whose stored
/// values disagree with the shared kernel (the copies are duplicated
/// verbatim at build time, so comparison is exact).
pub fn extract_kernel(w: &BandedMatrix, spec: &ConvSpec) -> Result<DenseMat> {
    spec.validate()?;
    if !spec.tied {
        return Err(Error::InvalidSpec(
            "extract_kernel requires a tied convolution".into(),
        ));
    }
    let r = spec.kernel_size();
    let reference = build_wconv(spec)?;
    if w.rows() != reference.rows() || w.cols() != reference.cols() {
        return Err(Error::InvalidSpec(format!(
            "band is {}x{}, spec builds {}x{}",
            w.rows(),
            w.cols(),
            reference.rows(),
            reference.cols()
        )));
    }

    // Row 0 always carries all r^2 offsets in range; it defines the kernel.
    let first = w.row_entries(0);
    if first.len() != r * r {
        return Err(Error::InvalidSpec(format!(
            "row 0 holds {} entries, expected {}",
            first.len(),
            r * r
        )));
    }
    let kernel_vals: Vec<f64> = first.iter().map(|&(_, v)| v).collect();

    for row in 0..w.rows() {
        let got = w.row_entries(row);
        let want = reference.row_entries(row);
        if got.len() != want.len() {
            return Err(Error::InvalidSpec(format!(
                "row {row} holds {} entries, expected {}",
                got.len(),
                want.len()
            )));
        }
        for (slot, (&(gc, gv), &(wc, _))) in got.iter().zip(want).enumerate() {
            if gc != wc {
                return Err(Error::InvalidSpec(format!(
                    "row {row} slot {slot} sits at column {gc}, expected {wc}"
                )));
            }
            // Map this row's slot back to its kernel offset index. In
            // Valid2d every row is full, so slot == offset index; in
            // FlatScan trailing offsets may be dropped, but only
            // from the end, so the prefix alignment still holds.
            if gv != kernel_vals[slot] {
                return Err(Error::InvalidSpec(format!(
                    "row {row} slot {slot} value {gv} breaks tying (kernel has {})",
                    kernel_vals[slot]
                )));
            }
        }
    }
    DenseMat::new(r, r, kernel_vals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{flatten_image, unflatten_image, ImageGrid};
    use crate::rng;

    fn spec(m: usize, n: usize, kernel: DenseMat, s: usize, mode: ConvMode) -> ConvSpec {
        ConvSpec {
            img_h: m,
            img_w: n,
            kernel,
            stride: s,
            mode,
            tied: true,
        }
    }

    fn k2() -> DenseMat {
        DenseMat::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap()
    }

    fn img3() -> DenseMat {
        DenseMat::from_rows(&[
            vec![1.0, 2.0, 3.0],
            vec![4.0, 5.0, 6.0],
            vec![7.0, 8.0, 9.0],
        ])
        .unwrap()
    }

    fn flatten(m: &DenseMat) -> DenseVec {
        DenseVec::new(m.as_slice().to_vec()).unwrap()
    }

    #[test]
    fn valid2d_frozen_example() {
        let w = build_wconv(&spec(3, 3, k2(), 1, ConvMode::Valid2d)).unwrap();
        assert_eq!((w.rows(), w.cols()), (4, 9));
        assert_eq!(w.nnz(), 16);
        let y = w.matvec(&flatten(&img3())).unwrap();
        assert_eq!(y.as_slice(), &[37.0, 47.0, 67.0, 77.0]);
    }

    #[test]
    fn flat_scan_row_count_and_tail_row() {
        let w = build_wconv(&spec(3, 3, k2(), 1, ConvMode::FlatScan)).unwrap();
        // L = 9, max N0 = 4, P = (9 - 4) / 1 + 1 = 6
        assert_eq!((w.rows(), w.cols()), (6, 9));
        // offsets {0, 1, 3, 4}; at p = 5 the last offset lands at 9,
        // one past the end, and is dropped
        let tail: Vec<usize> = w.row_entries(5).iter().map(|e| e.0).collect();
        assert_eq!(tail, vec![5, 6, 8]);
        for p in 0..5 {
            let cols: Vec<usize> = w.row_entries(p).iter().map(|e| e.0).collect();
            assert_eq!(cols, vec![p, p + 1, p + 3, p + 4]);
        }
    }

    #[test]
    fn valid2d_rows_are_a_subset_of_flat_scan_rows() {
        let mut r = rng::seeded(40);
        for (m, n, rr, s) in [(3, 3, 2, 1), (5, 4, 3, 1), (6, 6, 2, 2)] {
            let kernel = rng::random_mat(&mut r, rr, rr, 1.0);
            let lit = build_wconv(&spec(m, n, kernel.clone(), s, ConvMode::FlatScan)).unwrap();
            let val = build_wconv(&spec(m, n, kernel, s, ConvMode::Valid2d)).unwrap();
            let mut vrow = 0;
            for u in (0..=(m - rr)).step_by(s) {
                for v in (0..=(n - rr)).step_by(s) {
                    let p = (u * n + v) / s;
                    assert_eq!(
                        val.row_entries(vrow),
                        lit.row_entries(p),
                        "2-D placement ({u}, {v}) should equal flat offset {p}"
                    );
                    vrow += 1;
                }
            }
        }
    }

    #[test]
    fn band_matches_direct_oracle_across_shapes() {
        let mut r = rng::seeded(41);
        for (m, n, rr, s) in [(3, 3, 2, 1), (8, 8, 3, 1), (9, 7, 3, 2), (12, 12, 4, 2)] {
            let kernel = rng::random_mat(&mut r, rr, rr, 1.0);
            let image = rng::random_mat(&mut r, m, n, 1.0);
            let w = build_wconv(&spec(m, n, kernel.clone(), s, ConvMode::Valid2d)).unwrap();
            let via_band = w.matvec(&flatten(&image)).unwrap();
            let direct = oracle_conv2d(&image, &kernel, s).unwrap();
            let direct_flat = flatten(&direct);
            assert!(via_band.max_abs_diff(&direct_flat) <= 1e-13);
        }
    }

    #[test]
    fn pool_single_window_mean() {
        let image = DenseMat::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let w = build_wpool(2, 2, 2).unwrap();
        let y = w.matvec(&flatten(&image)).unwrap();
        assert_eq!(y.as_slice(), &[2.5]);
        assert_eq!(oracle_avg_pool(&image, 2).unwrap().get(0, 0), 2.5);
    }

    #[test]
    fn pool_4x4_structure() {
        let w = build_wpool(4, 4, 2).unwrap();
        assert_eq!((w.rows(), w.cols()), (4, 16));
        for q in 0..4 {
            let row = w.row_entries(q);
            assert_eq!(row.len(), 4);
            let sum: f64 = row.iter().map(|e| e.1).sum();
            assert_eq!(sum, 1.0);
            for &(_, v) in row {
                assert_eq!(v, 0.25);
            }
        }
        // window of pooled cell (0, 1) covers columns 2, 3, 6, 7
        let cols: Vec<usize> = w.row_entries(1).iter().map(|e| e.0).collect();
        assert_eq!(cols, vec![2, 3, 6, 7]);
    }

    #[test]
    fn pool_band_matches_oracle() {
        let mut r = rng::seeded(42);
        for (m, n, p) in [(4, 4, 2), (8, 12, 4), (6, 6, 1), (6, 9, 3)] {
            let image = rng::random_mat(&mut r, m, n, 1.0);
            let w = build_wpool(m, n, p).unwrap();
            let via_band = w.matvec(&flatten(&image)).unwrap();
            let direct = flatten(&oracle_avg_pool(&image, p).unwrap());
            assert!(via_band.max_abs_diff(&direct) <= 1e-13);
        }
    }

    #[test]
    fn pool_rejects_indivisible_shapes() {
        assert!(build_wpool(5, 4, 2).is_err());
        assert!(build_wpool(4, 4, 0).is_err());
    }

    #[test]
    fn forward_applies_relu() {
        let kernel = DenseMat::from_rows(&[vec![-1.0]]).unwrap();
        let w = build_wconv(&spec(1, 2, kernel, 1, ConvMode::Valid2d)).unwrap();
        let x = DenseVec::new(vec![3.0, -2.0]).unwrap();
        let y = conv_forward(&w, &x, Activation::Relu).unwrap();
        assert_eq!(y.as_slice(), &[0.0, 2.0]);
        let lin = conv_forward(&w, &x, Activation::None).unwrap();
        assert_eq!(lin.as_slice(), &[-3.0, 2.0]);
    }

    #[test]
    fn kernel_round_trip_both_modes() {
        for mode in [ConvMode::Valid2d, ConvMode::FlatScan] {
            let s = spec(5, 6, k2(), 1, mode);
            let w = build_wconv(&s).unwrap();
            let k = extract_kernel(&w, &s).unwrap();
            assert_eq!(k, k2());
        }
    }

    #[test]
    fn extraction_rejects_broken_tying() {
        let s = spec(4, 4, k2(), 1, ConvMode::Valid2d);
        let mut w = build_wconv(&s).unwrap();
        w.perturb_entry(7, 1e-9);
        let err = extract_kernel(&w, &s).unwrap_err();
        assert!(err.to_string().contains("tying"), "{err}");

        let untied = ConvSpec { tied: false, ..s };
        let w2 = build_wconv(&untied).unwrap();
        assert!(extract_kernel(&w2, &untied).is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(spec(3, 3, k2(), 0, ConvMode::Valid2d).validate().is_err());
        let big = DenseMat::zeros(4, 4);
        assert!(spec(3, 3, big, 1, ConvMode::Valid2d).validate().is_err());
        let rect = DenseMat::zeros(2, 3);
        assert!(spec(4, 4, rect, 1, ConvMode::Valid2d).validate().is_err());
    }

    #[test]
    fn image_flattening_matches_band_convention() {
        // running a flattened ImageGrid through the band equals running
        // its channel matrix through the oracle
        let mut r = rng::seeded(43);
        let img = ImageGrid::new(
            6,
            5,
            1,
            (0..30).map(|_| rng::uniform(&mut r, 0.5) + 0.5).collect(),
        )
        .unwrap();
        let kernel = rng::random_mat(&mut r, 3, 3, 1.0);
        let s = spec(6, 5, kernel.clone(), 1, ConvMode::Valid2d);
        let w = build_wconv(&s).unwrap();
        let y = w.matvec(&flatten_image(&img, 0).unwrap()).unwrap();
        let direct = oracle_conv2d(&img.channel_mat(0).unwrap(), &kernel, 1).unwrap();
        assert!(y.max_abs_diff(&flatten(&direct)) <= 1e-13);
        // and unflattening the output recovers the 2-D grid
        let grid = unflatten_image(&y, 4, 3).unwrap();
        assert_eq!(grid.get(0, 2, 1), y[2 * 3 + 1]);
    }
}
