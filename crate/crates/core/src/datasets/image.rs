use super::{DatasetError, ImageSample};
use crate::sdf_field::{signed_normalized_lattice, SdfError};

pub const DEFAULT_THRESHOLD: f32 = 0.5;

/// `1` where the value is at least `threshold`, else `0`.
pub fn binarize(image: &ImageSample, threshold: f32) -> ImageSample {
    image.map_values(|v| if v >= threshold { 1.0 } else { 0.0 })
}

fn is_binary(image: &ImageSample) -> bool {
    image.values.iter().all(|&v| v == 0.0 || v == 1.0)
}

/// Foreground pixels with at least one background 4-neighbour. Pixels
/// outside the image count as background.
pub fn silhouette(binary: &ImageSample) -> Result<ImageSample, DatasetError> {
    if !is_binary(binary) {
        return Err(DatasetError::NotBinary);
    }
    let (h, w) = (binary.height, binary.width);
    let on = |y: isize, x: isize| {
        y >= 0 && x >= 0 && (y as usize) < h && (x as usize) < w && binary.values[y as usize * w + x as usize] == 1.0
    };
    let mut out = binary.clone();
    for y in 0..h as isize {
        for x in 0..w as isize {
            let edge = on(y, x) && !(on(y - 1, x) && on(y + 1, x) && on(y, x - 1) && on(y, x + 1));
            out.values[y as usize * w + x as usize] = if edge { 1.0 } else { 0.0 };
        }
    }
    Ok(out)
}

/// Signed distance image of a binary mask, negative on the foreground and
/// normalized per side to `[-1, 0)` and `(0, 1]`.
pub fn sdf_image(binary: &ImageSample) -> Result<ImageSample, DatasetError> {
    if !is_binary(binary) {
        return Err(DatasetError::NotBinary);
    }
    let mask: Vec<bool> = binary.values.iter().map(|&v| v == 1.0).collect();
    let values = signed_normalized_lattice(&mask, [binary.width, binary.height, 1]).map_err(|e| match e {
        SdfError::DegenerateGrid => DatasetError::DegenerateImage,
        other => DatasetError::Sdf(other),
    })?;
    Ok(ImageSample {
        values,
        ..binary.clone()
    })
}
