//! IDX file reading and writing (the MNIST container format).
//!
//! Images use magic 0x00000803 (unsigned byte, 3 dimensions), labels
//! 0x00000801. All integers are big-endian. Pixels are scaled to
//! `[0, 1]` on load by dividing by 255.

use std::path::Path;

use crate::data::ImageGrid;
use crate::error::{Error, Result};

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;

struct Cursor<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    offset: usize,
}

impl<'a> Cursor<'a> {
    fn fail(&self, detail: String) -> Error {
        Error::IdxFormat {
            path: self.path.display().to_string(),
            detail,
            offset: self.offset as u64,
        }
    }

    fn read_u32(&mut self) -> Result<u32> {
        let end = self.offset + 4;
        if end > self.bytes.len() {
            return Err(self.fail("file truncated inside a u32 field".into()));
        }
        let v = u32::from_be_bytes(self.bytes[self.offset..end].try_into().unwrap());
        self.offset = end;
        Ok(v)
    }

    fn read_bytes(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.offset + n;
        if end > self.bytes.len() {
            return Err(self.fail(format!(
                "file truncated: wanted {n} bytes, {} remain",
                self.bytes.len() - self.offset
            )));
        }
        let s = &self.bytes[self.offset..end];
        self.offset = end;
        Ok(s)
    }

    fn expect_end(&self) -> Result<()> {
        if self.offset != self.bytes.len() {
            return Err(self.fail(format!(
                "{} trailing bytes after the declared payload",
                self.bytes.len() - self.offset
            )));
        }
        Ok(())
    }
}

/// Loads an IDX image file as grayscale [`ImageGrid`]s.
pub fn load_idx_images(path: &Path) -> Result<Vec<ImageGrid>> {
    let bytes = std::fs::read(path)?;
    let mut cur = Cursor {
        path,
        bytes: &bytes,
        offset: 0,
    };
    let magic = cur.read_u32()?;
    if magic != IMAGE_MAGIC {
        return Err(cur.fail(format!(
            "bad magic {magic:#010x}, expected {IMAGE_MAGIC:#010x}"
        )));
    }
    let count = cur.read_u32()? as usize;
    let height = cur.read_u32()? as usize;
    let width = cur.read_u32()? as usize;
    if height == 0 || width == 0 {
        return Err(cur.fail(format!("degenerate image shape {height}x{width}")));
    }
    let mut images = Vec::with_capacity(count);
    for _ in 0..count {
        let raw = cur.read_bytes(height * width)?;
        let pixels = raw.iter().map(|&b| f64::from(b) / 255.0).collect();
        images.push(ImageGrid::new(height, width, 1, pixels)?);
    }
    cur.expect_end()?;
    Ok(images)
}

/// Loads an IDX label file.
pub fn load_idx_labels(path: &Path) -> Result<Vec<u8>> {
    let bytes = std::fs::read(path)?;
    let mut cur = Cursor {
        path,
        bytes: &bytes,
        offset: 0,
    };
    let magic = cur.read_u32()?;
    if magic != LABEL_MAGIC {
        return Err(cur.fail(format!(
            "bad magic {magic:#010x}, expected {LABEL_MAGIC:#010x}"
        )));
    }
    let count = cur.read_u32()? as usize;
    let labels = cur.read_bytes(count)?.to_vec();
    cur.expect_end()?;
    Ok(labels)
}

/// Writes grayscale images in IDX format, quantizing pixels to bytes.
/// All images must share one shape.
pub fn write_idx_images(path: &Path, images: &[ImageGrid]) -> Result<()> {
    let (h, w) = match images.first() {
        Some(img) => (img.height(), img.width()),
        None => return Err(Error::InvalidSpec("no images to write".into())),
    };
    let mut out = Vec::with_capacity(16 + images.len() * h * w);
    out.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
    out.extend_from_slice(&(images.len() as u32).to_be_bytes());
    out.extend_from_slice(&(h as u32).to_be_bytes());
    out.extend_from_slice(&(w as u32).to_be_bytes());
    for img in images {
        if img.height() != h || img.width() != w || img.channels() != 1 {
            return Err(Error::InvalidSpec(format!(
                "image shape {}x{}x{} differs from first image {h}x{w}x1",
                img.height(),
                img.width(),
                img.channels()
            )));
        }
        for r in 0..h {
            for c in 0..w {
                let q = (img.get(0, r, c) * 255.0).round().clamp(0.0, 255.0);
                out.push(q as u8);
            }
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn write_idx_labels(path: &Path, labels: &[u8]) -> Result<()> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    std::fs::write(path, out)?;
    Ok(())
}
