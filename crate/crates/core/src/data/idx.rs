// Copyright 2026 The lupi-meta Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! IDX containers as used by MNIST: a big-endian header (magic, then one
//! `u32` per dimension) followed by unsigned bytes.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Tensor2D;

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdxImageSet {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    /// `count * rows * cols` bytes, image by image, row-major.
    pub pixels: Vec<u8>,
}

impl IdxImageSet {
    pub fn image_len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn image(&self, i: usize) -> &[u8] {
        let len = self.image_len();
        &self.pixels[i * len..(i + 1) * len]
    }

    /// All images as `count x (rows * cols)`, scaled to `[0, 1]`.
    pub fn to_tensor(&self) -> Tensor2D {
        let idx: Vec<usize> = (0..self.count).collect();
        self.select_to_tensor(&idx)
    }

    /// The given images, in order, scaled to `[0, 1]`.
    pub fn select_to_tensor(&self, indices: &[usize]) -> Tensor2D {
        let len = self.image_len();
        let mut data = Vec::with_capacity(indices.len() * len);
        for &i in indices {
            data.extend(self.image(i).iter().map(|&b| f64::from(b) / 255.0));
        }
        Tensor2D::from_vec(indices.len(), len, data).expect("sizes agree by construction")
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn header(bytes: &[u8], path: &Path, fields: usize) -> Result<Vec<u32>> {
    if bytes.len() < 4 * fields {
        return Err(Error::Format {
            path: path.into(),
            message: format!(
                "file is {} bytes, shorter than its {}-byte header",
                bytes.len(),
                4 * fields
            ),
        });
    }
    Ok(bytes[..4 * fields]
        .chunks_exact(4)
        .map(|c| u32::from_be_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

fn check_magic(path: &Path, found: u32, expected: u32) -> Result<()> {
    if found != expected {
        return Err(Error::Format {
            path: path.into(),
            message: format!("bad magic number {found} (expected {expected})"),
        });
    }
    Ok(())
}

pub fn parse_idx_images(bytes: &[u8], path: &Path) -> Result<IdxImageSet> {
    // the magic is checked before the rest of the header is required
    let magic = header(bytes, path, 1)?[0];
    check_magic(path, magic, IMAGE_MAGIC)?;
    let h = header(bytes, path, 4)?;
    let (count, rows, cols) = (h[1] as usize, h[2] as usize, h[3] as usize);
    let declared = count * rows * cols;
    let payload = &bytes[16..];
    if payload.len() != declared {
        return Err(Error::Length {
            path: path.into(),
            declared,
            found: payload.len(),
        });
    }
    Ok(IdxImageSet {
        count,
        rows,
        cols,
        pixels: payload.to_vec(),
    })
}

pub fn parse_idx_labels(bytes: &[u8], path: &Path) -> Result<Vec<u8>> {
    let magic = header(bytes, path, 1)?[0];
    check_magic(path, magic, LABEL_MAGIC)?;
    let h = header(bytes, path, 2)?;
    let declared = h[1] as usize;
    let payload = &bytes[8..];
    if payload.len() != declared {
        return Err(Error::Length {
            path: path.into(),
            declared,
            found: payload.len(),
        });
    }
    Ok(payload.to_vec())
}

pub fn read_idx_images(path: impl AsRef<Path>) -> Result<IdxImageSet> {
    let path = path.as_ref();
    parse_idx_images(&read_file(path)?, path)
}

pub fn read_idx_labels(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    let path = path.as_ref();
    parse_idx_labels(&read_file(path)?, path)
}

pub fn encode_idx_images(set: &IdxImageSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + set.pixels.len());
    for v in [
        IMAGE_MAGIC,
        set.count as u32,
        set.rows as u32,
        set.cols as u32,
    ] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(&set.pixels);
    out
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

pub fn write_idx_images(path: impl AsRef<Path>, set: &IdxImageSet) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_idx_images(set)).map_err(|e| Error::io(path, e))
}

pub fn write_idx_labels(path: impl AsRef<Path>, labels: &[u8]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_idx_labels(labels)).map_err(|e| Error::io(path, e))
}

/// Reads an image file and its label file: images as an `N x (rows * cols)`
/// tensor in `[0, 1]`, labels as reals, file order preserved.
pub fn load_idx(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<(Tensor2D, Vec<f64>)> {
    let images = read_idx_images(&images_path)?;
    let labels = read_idx_labels(&labels_path)?;
    if labels.len() != images.count {
        return Err(Error::Format {
            path: labels_path.as_ref().into(),
            message: format!(
                "{} labels for {} images in {}",
                labels.len(),
                images.count,
                images_path.as_ref().display()
            ),
        });
    }
    Ok((
        images.to_tensor(),
        labels.iter().map(|&l| f64::from(l)).collect(),
    ))
}

/// Average-pools each 28x28 row into 7x7 using non-overlapping 4x4 blocks.
pub fn downscale_4x4(images: &Tensor2D) -> Result<Tensor2D> {
    const SIDE: usize = 28;
    const BLOCK: usize = 4;
    const OUT: usize = SIDE / BLOCK;
    if images.cols() != SIDE * SIDE {
        return Err(Error::shape(
            "downscale_4x4",
            format!("{} columns (28x28)", SIDE * SIDE),
            images.cols(),
        ));
    }
    let mut out = Tensor2D::zeros(images.rows(), OUT * OUT);
    let norm = 1.0 / (BLOCK * BLOCK) as f64;
    for r in 0..images.rows() {
        let src = images.row(r);
        let dst = out.row_mut(r);
        for (i, row) in src.chunks_exact(SIDE).enumerate() {
            for (j, block) in row.chunks_exact(BLOCK).enumerate() {
                dst[(i / BLOCK) * OUT + j] += block.iter().sum::<f64>();
            }
        }
        dst.iter_mut().for_each(|v| *v *= norm);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("mem")
    }

    #[test]
    fn label_header_contract() {
        let bytes = encode_idx_labels(&vec![3u8; 10_000]);
        assert_eq!(parse_idx_labels(&bytes, p()).unwrap().len(), 10_000);
    }

    #[test]
    fn truncated_images_are_a_length_error() {
        let mut bytes = Vec::new();
        for v in [IMAGE_MAGIC, 5, 28, 28] {
            bytes.extend_from_slice(&v.to_be_bytes());
        }
        bytes.extend(std::iter::repeat_n(0u8, 3 * 784));
        match parse_idx_images(&bytes, p()) {
            Err(Error::Length {
                declared, found, ..
            }) => {
                assert_eq!(declared, 5 * 784);
                assert_eq!(found, 3 * 784);
            }
            other => panic!("expected a length error, got {other:?}"),
        }
    }

    #[test]
    fn wrong_magic_names_the_observed_value() {
        let bytes = encode_idx_labels(&[1, 2, 3]);
        let err = parse_idx_images(&bytes, p()).unwrap_err();
        assert!(matches!(err, Error::Format { .. }));
        assert!(err.to_string().contains("2049"), "{err}");
        assert!(parse_idx_labels(&[0, 0], p()).is_err());
    }

    #[test]
    fn zero_image_scales_to_zero_row() {
        let set = IdxImageSet {
            count: 1,
            rows: 28,
            cols: 28,
            pixels: vec![0; 784],
        };
        let t = parse_idx_images(&encode_idx_images(&set), p())
            .unwrap()
            .to_tensor();
        assert_eq!(t.shape(), (1, 784));
        assert!(t.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn downscale_constant_and_block_images() {
        let constant = Tensor2D::filled(2, 784, 0.37);
        let small = downscale_4x4(&constant).unwrap();
        assert_eq!(small.shape(), (2, 49));
        assert!(small.data().iter().all(|&v| (v - 0.37).abs() < 1e-15));

        // ones in block (row 2, col 5) of the 7x7 grid
        let mut img = Tensor2D::zeros(1, 784);
        for i in 8..12 {
            for j in 20..24 {
                img.set(0, i * 28 + j, 1.0);
            }
        }
        let small = downscale_4x4(&img).unwrap();
        for k in 0..49 {
            let expected = if k == 2 * 7 + 5 { 1.0 } else { 0.0 };
            assert_eq!(small.get(0, k), expected, "cell {k}");
        }
        assert!(downscale_4x4(&Tensor2D::zeros(1, 49)).is_err());
    }
}
