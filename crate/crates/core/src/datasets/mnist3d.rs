use std::fmt;
use std::str::FromStr;

use super::image::{binarize, sdf_image, DEFAULT_THRESHOLD};
use super::{DatasetError, ImageSample, VoxelSample};
use crate::sdf_field::{signed_normalized_lattice, SdfError, SignConvention, VolumeBlock};

pub const VOLUME: usize = 32;
pub const THICKNESSES: [usize; 2] = [4, 28];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mnist3dVariant {
    Binary,
    StackedGray,
    StackedSdf,
    VolumetricSdf,
}

impl Mnist3dVariant {
    pub const ALL: [Self; 4] = [Self::Binary, Self::StackedGray, Self::StackedSdf, Self::VolumetricSdf];

    pub fn name(self) -> &'static str {
        match self {
            Self::Binary => "binary",
            Self::StackedGray => "stacked-gray",
            Self::StackedSdf => "stacked-sdf",
            Self::VolumetricSdf => "volumetric-sdf",
        }
    }

    pub fn sign(self) -> SignConvention {
        match self {
            Self::Binary | Self::StackedGray => SignConvention::Unsigned,
            Self::StackedSdf | Self::VolumetricSdf => SignConvention::NegativeInside,
        }
    }
}

impl fmt::Display for Mnist3dVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mnist3dVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| format!("unknown 3-D MNIST variant {s:?}"))
    }
}

/// Replicates a 28x28 image `thickness` times along z and centers the block
/// in a zero-padded 32^3 volume (x, y offset 2; z offset `(32 - t) / 2`).
pub fn make_3d_mnist(
    image: &ImageSample,
    thickness: usize,
    variant: Mnist3dVariant,
) -> Result<VoxelSample, DatasetError> {
    if !THICKNESSES.contains(&thickness) {
        return Err(DatasetError::BadThickness(thickness));
    }
    if image.height > VOLUME || image.width > VOLUME || image.channels != 1 {
        return Err(DatasetError::Shape(format!(
            "expected a single-channel image up to {VOLUME}x{VOLUME}, got {}x{}x{}",
            image.height, image.width, image.channels
        )));
    }
    let binary = binarize(image, DEFAULT_THRESHOLD);
    let slice = match variant {
        Mnist3dVariant::Binary | Mnist3dVariant::VolumetricSdf => binary.values,
        Mnist3dVariant::StackedGray => image.values.clone(),
        Mnist3dVariant::StackedSdf => sdf_image(&binary)?.values,
    };
    let values = stack(&slice, image.height, image.width, thickness);
    let values = if variant == Mnist3dVariant::VolumetricSdf {
        let occ: Vec<bool> = values.iter().map(|&v| v == 1.0).collect();
        signed_normalized_lattice(&occ, [VOLUME; 3]).map_err(|e| match e {
            SdfError::DegenerateGrid => DatasetError::DegenerateImage,
            other => DatasetError::Sdf(other),
        })?
    } else {
        values
    };
    Ok(VoxelSample {
        block: VolumeBlock::cubic(VOLUME, 1, values).with_sign(variant.sign()),
        label: image.label,
        source: format!("mnist3d/{}/t{thickness}", variant.name()),
    })
}

pub(crate) fn z_range(thickness: usize) -> std::ops::Range<usize> {
    let z0 = (VOLUME - thickness) / 2;
    z0..z0 + thickness
}

fn stack(slice: &[f32], h: usize, w: usize, thickness: usize) -> Vec<f32> {
    let (oy, ox) = ((VOLUME - h) / 2, (VOLUME - w) / 2);
    let mut v = vec![0.0f32; VOLUME.pow(3)];
    for z in z_range(thickness) {
        for y in 0..h {
            let row = ((z * VOLUME) + y + oy) * VOLUME + ox;
            v[row..row + w].copy_from_slice(&slice[y * w..(y + 1) * w]);
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn digit() -> ImageSample {
        let mut v = vec![0.0; 784];
        for y in 6..22 {
            for x in 12..16 {
                v[y * 28 + x] = 0.9;
            }
        }
        v[3 * 28 + 3] = 0.3;
        ImageSample {
            height: 28,
            width: 28,
            channels: 1,
            values: v,
            label: 1,
        }
    }

    fn occupied_slices(s: &VoxelSample) -> Vec<usize> {
        (0..VOLUME)
            .filter(|&z| s.block.values[z * 1024..(z + 1) * 1024].iter().any(|&v| v != 0.0))
            .collect()
    }

    #[test]
    fn thin_block_occupies_central_slices() {
        let s = make_3d_mnist(&digit(), 4, Mnist3dVariant::Binary).unwrap();
        assert_eq!(occupied_slices(&s), vec![14, 15, 16, 17]);
        assert_eq!(s.block.values.iter().filter(|&&v| v == 1.0).count(), 4 * 64);
    }

    #[test]
    fn thick_block_has_two_voxel_margin() {
        let s = make_3d_mnist(&digit(), 28, Mnist3dVariant::StackedGray).unwrap();
        assert_eq!(occupied_slices(&s), (2..30).collect::<Vec<_>>());
        // gray pixel at image (3, 3) lands at volume (5, 5, z)
        assert_eq!(s.block.values[(2 * 32 + 5) * 32 + 5], 0.3);
        let slice = |z: usize| s.block.values[z * 1024..(z + 1) * 1024].to_vec();
        assert!((3..30).all(|z| slice(z) == slice(2)));
    }

    #[test]
    fn sdf_variants() {
        let st = make_3d_mnist(&digit(), 4, Mnist3dVariant::StackedSdf).unwrap();
        assert!(st.block.values.iter().all(|v| (-1.0..=1.0).contains(v)));
        assert_eq!(st.block.values[0], 0.0);
        let vol = make_3d_mnist(&digit(), 28, Mnist3dVariant::VolumetricSdf).unwrap();
        assert!(vol.block.values.iter().all(|&v| v != 0.0 && (-1.0..=1.0).contains(&v)));
        assert_eq!(vol.block.values.iter().filter(|&&v| v < 0.0).count(), 28 * 64);
        assert_eq!(vol.block.values.iter().copied().fold(f32::MIN, f32::max), 1.0);
    }

    #[test]
    fn bad_thickness() {
        assert_eq!(
            make_3d_mnist(&digit(), 5, Mnist3dVariant::Binary).unwrap_err(),
            DatasetError::BadThickness(5)
        );
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Mnist3dVariant::ALL {
            assert_eq!(v.name().parse::<Mnist3dVariant>().unwrap(), v);
        }
    }
}
