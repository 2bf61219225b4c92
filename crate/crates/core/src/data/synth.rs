//! Seeded synthetic corpora: a 10-class digit-style image set in IDX
//! format and an AR(1) series generator. Both exist so the training
//! pipelines can run hermetically; the generators are deterministic in
//! their seed.

use std::path::Path;

use crate::data::{write_idx_images, write_idx_labels, ImageGrid, SeriesMatrix};
use crate::error::Result;
use crate::rng;

/// Coarse 7x7 stroke patterns, one per class, upscaled 4x onto a 28x28
/// canvas with per-sample jitter. Classes are well separated on purpose:
/// the corpus calibrates training mechanics, not model capacity.
const TEMPLATES: [[&str; 7]; 10] = [
    [
        ".#####.", "#.....#", "#.....#", "#.....#", "#.....#", "#.....#", ".#####.",
    ],
    [
        "...#...", "..##...", "...#...", "...#...", "...#...", "...#...", "..###..",
    ],
    [
        ".#####.", "#.....#", "......#", "....##.", "..##...", ".#.....", "#######",
    ],
    [
        ".#####.", "......#", "......#", "..####.", "......#", "......#", ".#####.",
    ],
    [
        "....##.", "...#.#.", "..#..#.", ".#...#.", "#######", ".....#.", ".....#.",
    ],
    [
        "#######", "#......", "#......", "######.", "......#", "......#", "######.",
    ],
    [
        ".#####.", "#......", "#......", "######.", "#.....#", "#.....#", ".#####.",
    ],
    [
        "#######", "......#", ".....#.", "....#..", "...#...", "..#....", "..#....",
    ],
    [
        ".#####.", "#.....#", "#.....#", ".#####.", "#.....#", "#.....#", ".#####.",
    ],
    [
        ".#####.", "#.....#", "#.....#", ".######", "......#", "......#", ".#####.",
    ],
];

const CANVAS: usize = 28;
const SCALE: usize = 4; // 7 * 4 = 28

fn render(class: usize, r: &mut rng::SeededRng) -> ImageGrid {
    let template = &TEMPLATES[class];
    let dy = (rng::uniform(r, 1.0) * 2.5) as isize; // jitter in [-2, 2]
    let dx = (rng::uniform(r, 1.0) * 2.5) as isize;
    let intensity = 0.75 + rng::uniform(r, 0.125) + 0.125; // [0.75, 1.0]
    let mut img = ImageGrid::zeros(CANVAS, CANVAS);
    for (tr, line) in template.iter().enumerate() {
        for (tc, ch) in line.bytes().enumerate() {
            if ch != b'#' {
                continue;
            }
            for a in 0..SCALE {
                for b in 0..SCALE {
                    let rr = (tr * SCALE + a) as isize + dy;
                    let cc = (tc * SCALE + b) as isize + dx;
                    if (0..CANVAS as isize).contains(&rr) && (0..CANVAS as isize).contains(&cc) {
                        img.set(0, rr as usize, cc as usize, intensity);
                    }
                }
            }
        }
    }
    for rr in 0..CANVAS {
        for cc in 0..CANVAS {
            let noisy = (img.get(0, rr, cc) + rng::uniform(r, 0.08)).clamp(0.0, 1.0);
            img.set(0, rr, cc, noisy);
        }
    }
    img
}

/// Generates `count` labeled images, classes cycling 0..10.
pub fn synth_digits(count: usize, seed: u64) -> (Vec<ImageGrid>, Vec<u8>) {
    let mut r = rng::seeded(rng::mix(seed, 0x5d1f));
    let mut images = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    for i in 0..count {
        let class = i % 10;
        images.push(render(class, &mut r));
        labels.push(class as u8);
    }
    (images, labels)
}

/// Writes a train/eval corpus under `dir` using the standard MNIST file
/// names, so `train --task mnist --data-dir <dir>` finds it unchanged.
pub fn write_synth_corpus(
    dir: &Path,
    train_count: usize,
    eval_count: usize,
    seed: u64,
) -> Result<()> {
    let (train_images, train_labels) = synth_digits(train_count, seed);
    let (eval_images, eval_labels) = synth_digits(eval_count, rng::mix(seed, 0xe7a1));
    write_idx_images(&dir.join("train-images-idx3-ubyte"), &train_images)?;
    write_idx_labels(&dir.join("train-labels-idx1-ubyte"), &train_labels)?;
    write_idx_images(&dir.join("t10k-images-idx3-ubyte"), &eval_images)?;
    write_idx_labels(&dir.join("t10k-labels-idx1-ubyte"), &eval_labels)?;
    Ok(())
}

/// First-order autoregressive series: `s_t = coeff * s_{t-1} + e_t` with
/// `e_t` uniform on `[-noise, noise]`, `s_0 = 0`, single feature.
pub fn synth_ar1(len: usize, coeff: f64, noise: f64, seed: u64) -> SeriesMatrix {
    let mut r = rng::seeded(rng::mix(seed, 0xa21));
    let mut values = Vec::with_capacity(len);
    let mut s = 0.0;
    for _ in 0..len {
        s = coeff * s + rng::uniform(&mut r, noise);
        values.push(s);
    }
    SeriesMatrix::new(len, 1, values).expect("AR(1) stream is finite by construction")
}
