//! IDX image files (the MNIST distribution format) and the PCA instance built
//! from them.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::PcaProblem;
use crate::error::{Error, Result};
use crate::matops::DenseMatrix;

/// Magic number of an unsigned-byte, three-dimensional IDX file.
pub const IDX_IMAGE_MAGIC: u32 = 0x0000_0803;

/// Images as stored on disk: `count` images of `rows × cols` bytes each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

impl IdxImages {
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 16 {
            return Err(Error::Format(format!(
                "IDX header needs 16 bytes, file has {}",
                bytes.len()
            )));
        }
        let word = |i: usize| u32::from_be_bytes(bytes[4 * i..4 * i + 4].try_into().unwrap());
        let magic = word(0);
        if magic != IDX_IMAGE_MAGIC {
            return Err(Error::Format(format!(
                "bad IDX magic {magic:#010x}, expected {IDX_IMAGE_MAGIC:#010x}"
            )));
        }
        let (count, rows, cols) = (word(1) as usize, word(2) as usize, word(3) as usize);
        let expected = count * rows * cols;
        let body = &bytes[16..];
        if body.len() != expected {
            return Err(Error::Format(format!(
                "IDX body has {} bytes, header promises {count}x{rows}x{cols} = {expected}",
                body.len()
            )));
        }
        Ok(IdxImages {
            count,
            rows,
            cols,
            pixels: body.to_vec(),
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&bytes)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.pixels.len());
        for word in [
            IDX_IMAGE_MAGIC,
            self.count as u32,
            self.rows as u32,
            self.cols as u32,
        ] {
            out.extend_from_slice(&word.to_be_bytes());
        }
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn pixels_per_image(&self) -> usize {
        self.rows * self.cols
    }
}

/// Flattens images to rows scaled by 1/255, shuffles them with a ChaCha8
/// stream from `seed`, and cuts them into `n` equal blocks.
pub fn partition_rows(images: &IdxImages, n: usize, seed: u64) -> Result<Vec<DenseMatrix>> {
    if n == 0 || !images.count.is_multiple_of(n) {
        return Err(Error::Parameter(format!(
            "{} images cannot be split evenly across n = {n} agents",
            images.count
        )));
    }
    let width = images.pixels_per_image();
    let mut order: Vec<usize> = (0..images.count).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let per_agent = images.count / n;
    Ok(order
        .chunks(per_agent)
        .map(|chunk| {
            let mut data = Vec::with_capacity(chunk.len() * width);
            for &img in chunk {
                data.extend(
                    images.pixels[img * width..(img + 1) * width]
                        .iter()
                        .map(|&p| p as f64 / 255.0),
                );
            }
            DenseMatrix::from_row_slice(chunk.len(), width, &data)
        })
        .collect())
}

/// PCA on an IDX image file. The step scale is `1 / count` (i.e. `α = β̂/60000`
/// on the MNIST training set).
pub fn load_mnist_pca(path: &Path, n: usize, r: usize, seed: u64) -> Result<PcaProblem> {
    let images = IdxImages::read(path)?;
    let blocks = partition_rows(&images, n, seed)?;
    PcaProblem::from_blocks(&blocks, r, 1.0 / images.count as f64)
}
