//! Input adapters: images, time series and token embeddings, plus the
//! flattening conventions that connect them to the structured operators.
//!
//! Flattening is always row-major. Multi-channel images flatten one
//! channel at a time; time series stack step vectors in time order.

mod csv;
mod idx;
mod synth;

pub use csv::load_series_csv;
pub use idx::{load_idx_images, load_idx_labels, write_idx_images, write_idx_labels};
pub use synth::{synth_ar1, synth_digits, write_synth_corpus};

use crate::error::{Error, Result};
use crate::mat::{DenseMat, DenseVec};
use crate::rng;

/// Grayscale (1 channel) or RGB (3 channel) image with `f64` pixels.
/// Storage is channel-major; within a channel, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    height: usize,
    width: usize,
    channels: usize,
    pixels: Vec<f64>,
}

impl ImageGrid {
    pub fn new(height: usize, width: usize, channels: usize, pixels: Vec<f64>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidSpec(format!(
                "images have 1 or 3 channels, got {channels}"
            )));
        }
        if pixels.len() != channels * height * width {
            return Err(Error::LengthMismatch {
                op: "ImageGrid::new",
                expected: channels * height * width,
                got: pixels.len(),
            });
        }
        for (index, p) in pixels.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::NonFinite {
                    op: "ImageGrid::new",
                    index,
                });
            }
        }
        Ok(Self {
            height,
            width,
            channels,
            pixels,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            channels: 1,
            pixels: vec![0.0; height * width],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn get(&self, channel: usize, r: usize, c: usize) -> f64 {
        self.pixels[(channel * self.height + r) * self.width + c]
    }

    pub fn set(&mut self, channel: usize, r: usize, c: usize, v: f64) {
        self.pixels[(channel * self.height + r) * self.width + c] = v;
    }

    /// One channel viewed as a height x width dense matrix.
    pub fn channel_mat(&self, channel: usize) -> Result<DenseMat> {
        if channel >= self.channels {
            return Err(Error::InvalidSpec(format!(
                "channel {channel} out of range, image has {}",
                self.channels
            )));
        }
        let base = channel * self.height * self.width;
        Ok(DenseMat::from_raw(
            self.height,
            self.width,
            self.pixels[base..base + self.height * self.width].to_vec(),
        ))
    }
}

/// Row-major flattening of one channel: pixel `(r, c)` lands at `r * width + c`.
pub fn flatten_image(img: &ImageGrid, channel: usize) -> Result<DenseVec> {
    if channel >= img.channels {
        return Err(Error::InvalidSpec(format!(
            "channel {channel} out of range, image has {}",
            img.channels
        )));
    }
    let base = channel * img.height * img.width;
    Ok(DenseVec::from_raw(
        img.pixels[base..base + img.height * img.width].to_vec(),
    ))
}

/// Inverse of [`flatten_image`] for a single channel. Round-tripping is
/// exact: no arithmetic touches the pixels.
pub fn unflatten_image(v: &DenseVec, height: usize, width: usize) -> Result<ImageGrid> {
    if v.len() != height * width {
        return Err(Error::LengthMismatch {
            op: "unflatten_image",
            expected: height * width,
            got: v.len(),
        });
    }
    ImageGrid::new(height, width, 1, v.as_slice().to_vec())
}

/// Time series: `t_steps` rows of `features` values each, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesMatrix {
    t_steps: usize,
    features: usize,
    values: Vec<f64>,
}

impl SeriesMatrix {
    pub fn new(t_steps: usize, features: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != t_steps * features {
            return Err(Error::LengthMismatch {
                op: "SeriesMatrix::new",
                expected: t_steps * features,
                got: values.len(),
            });
        }
        for (index, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    op: "SeriesMatrix::new",
                    index,
                });
            }
        }
        Ok(Self {
            t_steps,
            features,
            values,
        })
    }

    pub fn constant(t_steps: usize, features: usize, value: f64) -> Self {
        Self {
            t_steps,
            features,
            values: vec![value; t_steps * features],
        }
    }

    pub fn t_steps(&self) -> usize {
        self.t_steps
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn get(&self, t: usize, f: usize) -> f64 {
        self.values[t * self.features + f]
    }

    pub fn step(&self, t: usize) -> &[f64] {
        &self.values[t * self.features..(t + 1) * self.features]
    }

    /// All steps stacked into one vector, time-major.
    pub fn flatten(&self) -> DenseVec {
        DenseVec::from_raw(self.values.clone())
    }

    pub fn rows(&self, range: std::ops::Range<usize>) -> SeriesMatrix {
        SeriesMatrix {
            t_steps: range.len(),
            features: self.features,
            values: self.values[range.start * self.features..range.end * self.features].to_vec(),
        }
    }
}

/// Token sequence embedded as a dense `tokens x dim` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenEmbedMatrix {
    mat: DenseMat,
}

impl TokenEmbedMatrix {
    pub fn as_mat(&self) -> &DenseMat {
        &self.mat
    }

    pub fn rows(&self) -> usize {
        self.mat.rows()
    }

    pub fn dim(&self) -> usize {
        self.mat.cols()
    }
}

/// Embeds each token id as `dim` values drawn uniformly from
/// `[-0.1, 0.1]`, keyed only by `(seed, token)`. Equal ids therefore get
/// identical rows, and the table never has to exist up front.
pub fn embed_tokens(tokens: &[u64], dim: usize, seed: u64) -> Result<TokenEmbedMatrix> {
    if dim == 0 {
        return Err(Error::InvalidSpec("embedding dim must be positive".into()));
    }
    let mut values = Vec::with_capacity(tokens.len() * dim);
    for &token in tokens {
        let mut r = rng::seeded(rng::mix(seed, token));
        for _ in 0..dim {
            values.push(rng::uniform(&mut r, 0.1));
        }
    }
    Ok(TokenEmbedMatrix {
        mat: DenseMat::from_raw(tokens.len(), dim, values),
    })
}

/// Splits a series into `(window, target)` pairs: pair `i` holds rows
/// `[i, i+w)` and the target row `i + w + h - 1`. Requires
/// `t_steps >= w + h`, which yields `t_steps - w - h + 1` pairs.
pub fn sliding_windows(
    s: &SeriesMatrix,
    w: usize,
    h: usize,
) -> Result<Vec<(SeriesMatrix, DenseVec)>> {
    if w == 0 || h == 0 {
        return Err(Error::InvalidSpec(format!(
            "window {w} and horizon {h} must be positive"
        )));
    }
    if s.t_steps < w + h {
        return Err(Error::InvalidSpec(format!(
            "series has {} steps, need at least w + h = {}",
            s.t_steps,
            w + h
        )));
    }
    let count = s.t_steps - w - h + 1;
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let window = s.rows(i..i + w);
        let target = DenseVec::from_raw(s.step(i + w + h - 1).to_vec());
        out.push((window, target));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_unflatten_is_exact() {
        let mut r = rng::seeded(2);
        let img = ImageGrid::new(
            4,
            5,
            1,
            (0..20).map(|_| rng::uniform(&mut r, 1.0)).collect(),
        )
        .unwrap();
        let flat = flatten_image(&img, 0).unwrap();
        let back = unflatten_image(&flat, 4, 5).unwrap();
        assert_eq!(back, img);
        assert_eq!(flat[1 * 5 + 3], img.get(0, 1, 3));
    }

    #[test]
    fn rgb_channels_flatten_independently() {
        let mut pixels = vec![0.0; 3 * 2 * 2];
        pixels[4] = 0.5; // channel 1, pixel (0, 0)
        let img = ImageGrid::new(2, 2, 3, pixels).unwrap();
        assert_eq!(flatten_image(&img, 0).unwrap().as_slice(), &[0.0; 4]);
        assert_eq!(flatten_image(&img, 1).unwrap()[0], 0.5);
        assert!(flatten_image(&img, 3).is_err());
    }

    #[test]
    fn two_channel_images_rejected() {
        assert!(ImageGrid::new(1, 1, 2, vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn embed_is_deterministic_and_bounded() {
        let a = embed_tokens(&[5, 9, 5], 8, 3).unwrap();
        let b = embed_tokens(&[5, 9, 5], 8, 3).unwrap();
        assert_eq!(a, b);
        // identical tokens, identical rows
        assert_eq!(a.as_mat().row(0), a.as_mat().row(2));
        assert_ne!(a.as_mat().row(0), a.as_mat().row(1));
        for v in a.as_mat().as_slice() {
            assert!(v.abs() <= 0.1);
        }
        let other_seed = embed_tokens(&[5], 8, 4).unwrap();
        assert_ne!(other_seed.as_mat().row(0), a.as_mat().row(0));
    }

    #[test]
    fn window_count_and_alignment() {
        let s = SeriesMatrix::new(5, 2, (0..10).map(f64::from).collect()).unwrap();
        let pairs = sliding_windows(&s, 3, 1).unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].0.step(0), &[0.0, 1.0]);
        assert_eq!(pairs[0].1.as_slice(), s.step(3));
        assert_eq!(pairs[1].1.as_slice(), s.step(4));
    }

    #[test]
    fn too_short_series_rejected() {
        let s = SeriesMatrix::constant(4, 1, 0.0);
        assert!(sliding_windows(&s, 4, 1).is_err());
        assert!(sliding_windows(&s, 3, 1).is_ok());
    }
}
