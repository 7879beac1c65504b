//! IDX (MNIST) loader: big-endian u32 header words followed by unsigned bytes.

use std::path::Path;

use ndarray::Array2;

use super::LabeledSet;
use crate::error::{Error, Result};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

fn be_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes(b.try_into().expect("4 bytes")))
        .ok_or_else(|| Error::Format {
            offset: offset as u64,
            message: "truncated header".into(),
        })
}

/// Parses in-memory IDX image and label files. Pixels are scaled by 1/255.
pub fn parse_idx(images: &[u8], labels: &[u8]) -> Result<LabeledSet> {
    let magic = be_u32(images, 0)?;
    if magic != IMAGES_MAGIC {
        return Err(Error::Format {
            offset: 0,
            message: format!("image file magic {magic:#010x}, expected {IMAGES_MAGIC:#010x}"),
        });
    }
    let n = be_u32(images, 4)? as usize;
    let rows = be_u32(images, 8)? as usize;
    let cols = be_u32(images, 12)? as usize;
    let d = rows * cols;
    let body = &images[16..];
    if body.len() < n * d {
        return Err(Error::Format {
            offset: (16 + body.len()) as u64,
            message: format!("image data truncated: need {} bytes, have {}", n * d, body.len()),
        });
    }

    let magic = be_u32(labels, 0)?;
    if magic != LABELS_MAGIC {
        return Err(Error::Format {
            offset: 0,
            message: format!("label file magic {magic:#010x}, expected {LABELS_MAGIC:#010x}"),
        });
    }
    let n_labels = be_u32(labels, 4)? as usize;
    if n_labels != n {
        return Err(Error::Format {
            offset: 4,
            message: format!("{n} images but {n_labels} labels"),
        });
    }
    let label_body = &labels[8..];
    if label_body.len() < n {
        return Err(Error::Format {
            offset: (8 + label_body.len()) as u64,
            message: format!("label data truncated: need {n} bytes"),
        });
    }

    let x = Array2::from_shape_vec((n, d), body[..n * d].iter().map(|&b| f64::from(b) / 255.0).collect())
        .expect("sized");
    let y: Vec<usize> = label_body[..n].iter().map(|&b| usize::from(b)).collect();
    let k = y.iter().max().map_or(10, |&m| (m + 1).max(10));
    LabeledSet::new(x, y, k)
}

pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<LabeledSet> {
    let read = |p: &Path| std::fs::read(p).map_err(|e| Error::io(p, e));
    parse_idx(&read(images_path.as_ref())?, &read(labels_path.as_ref())?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MnistSplit {
    Train,
    Test,
}

/// Loads the standard uncompressed MNIST file pair from `dir`.
pub fn load_mnist(dir: impl AsRef<Path>, split: MnistSplit) -> Result<LabeledSet> {
    let dir = dir.as_ref();
    let prefix = match split {
        MnistSplit::Train => "train",
        MnistSplit::Test => "t10k",
    };
    load_idx(
        dir.join(format!("{prefix}-images-idx3-ubyte")),
        dir.join(format!("{prefix}-labels-idx1-ubyte")),
    )
}
