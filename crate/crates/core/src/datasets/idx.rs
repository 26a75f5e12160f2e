use std::path::Path;

use super::{DatasetError, ImageSample};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

fn be_u32(bytes: &[u8], at: usize) -> Result<u32, DatasetError> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or(DatasetError::Truncated)
}

/// Decodes an IDX image file and its label file. Pixels are scaled by 1/255.
pub fn load_mnist_idx(images: &[u8], labels: &[u8]) -> Result<Vec<ImageSample>, DatasetError> {
    let im = be_u32(images, 0)?;
    if im != IMAGE_MAGIC {
        return Err(DatasetError::BadMagic {
            expected: IMAGE_MAGIC,
            found: im,
        });
    }
    let lm = be_u32(labels, 0)?;
    if lm != LABEL_MAGIC {
        return Err(DatasetError::BadMagic {
            expected: LABEL_MAGIC,
            found: lm,
        });
    }
    let n = be_u32(images, 4)? as usize;
    let (rows, cols) = (be_u32(images, 8)? as usize, be_u32(images, 12)? as usize);
    let nl = be_u32(labels, 4)? as usize;
    if n != nl {
        return Err(DatasetError::CountMismatch(format!("{n} images but {nl} labels")));
    }
    let px = rows * cols;
    let pixels = images.get(16..16 + n * px).ok_or(DatasetError::Truncated)?;
    let labs = labels.get(8..8 + n).ok_or(DatasetError::Truncated)?;
    Ok(pixels
        .chunks_exact(px.max(1))
        .zip(labs)
        .map(|(p, &l)| ImageSample {
            height: rows,
            width: cols,
            channels: 1,
            values: p.iter().map(|&b| b as f32 / 255.0).collect(),
            label: l as u16,
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MnistSplit {
    Train,
    Test,
}

/// Reads the standard uncompressed file names from `dir`
/// (`train-images-idx3-ubyte`, `t10k-labels-idx1-ubyte`, ...).
pub fn load_mnist_dir(dir: &Path, split: MnistSplit) -> Result<Vec<ImageSample>, DatasetError> {
    let prefix = match split {
        MnistSplit::Train => "train",
        MnistSplit::Test => "t10k",
    };
    let read = |name: String| {
        let p = dir.join(&name);
        std::fs::read(&p).map_err(|e| DatasetError::Io(format!("{}: {e}", p.display())))
    };
    let images = read(format!("{prefix}-images-idx3-ubyte"))?;
    let labels = read(format!("{prefix}-labels-idx1-ubyte"))?;
    load_mnist_idx(&images, &labels)
}

#[cfg(test)]
pub(crate) fn encode_idx(samples: &[(Vec<u8>, u8)], rows: usize, cols: usize) -> (Vec<u8>, Vec<u8>) {
    let mut im = Vec::new();
    im.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
    for d in [samples.len(), rows, cols] {
        im.extend_from_slice(&(d as u32).to_be_bytes());
    }
    let mut lb = Vec::new();
    lb.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    lb.extend_from_slice(&(samples.len() as u32).to_be_bytes());
    for (p, l) in samples {
        im.extend_from_slice(p);
        lb.push(*l);
    }
    (im, lb)
}
