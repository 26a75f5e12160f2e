//! MNIST loading and 2-D input variants, synthetic 3-D MNIST, the ModelNet
//! voxelization pipeline, and an on-disk dataset container.

mod container;
mod idx;
mod image;
mod mnist3d;
mod modelnet;
mod source;

pub use container::{DatasetManifest, DatasetReader, DatasetWriter, SplitReader, MANIFEST_FILE, SPLITS};
pub use idx::{load_mnist_dir, load_mnist_idx, MnistSplit, IMAGE_MAGIC, LABEL_MAGIC};
pub use image::{binarize, sdf_image, silhouette, DEFAULT_THRESHOLD};
pub use mnist3d::{make_3d_mnist, Mnist3dVariant, THICKNESSES, VOLUME};
pub use modelnet::{build_modelnet, mesh_to_block, BuildFailure, BuildReport, VoxelVariant};
pub use source::{InMemorySource, Mnist3dSource, SampleSource};

use crate::mesh_voxel::MeshError;
use crate::sdf_field::{SdfError, SignConvention, VolumeBlock};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DatasetError {
    #[error("bad magic: expected {expected:#010x}, found {found:#010x}")]
    BadMagic { expected: u32, found: u32 },
    #[error("count mismatch: {0}")]
    CountMismatch(String),
    #[error("input truncated")]
    Truncated,
    #[error("image is not binary")]
    NotBinary,
    #[error("image is all foreground or all background")]
    DegenerateImage,
    #[error("thickness {0} is not one of {THICKNESSES:?}")]
    BadThickness(usize),
    #[error("unexpected shape: {0}")]
    Shape(String),
    #[error("class directory {0} lacks a train or test split")]
    MissingSplit(String),
    #[error("no meshes found under {0}")]
    NoMeshes(String),
    #[error("bad manifest: {0}")]
    Manifest(String),
    #[error("checksum mismatch: manifest {expected}, data {found}")]
    Checksum { expected: String, found: String },
    #[error("unknown split {0}")]
    UnknownSplit(String),
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: u16, classes: usize },
    #[error(transparent)]
    Sdf(#[from] SdfError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for DatasetError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

/// A row-major image with values in `[0, 1]` (or signed for SDF images).
#[derive(Clone, Debug, PartialEq)]
pub struct ImageSample {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub values: Vec<f32>,
    pub label: u16,
}

impl ImageSample {
    pub fn map_values(&self, f: impl Fn(f32) -> f32) -> Self {
        Self {
            values: self.values.iter().copied().map(f).collect(),
            ..self.clone()
        }
    }

    /// Single-channel images become `[width, height, 1]` blocks.
    pub fn to_block(&self, sign: SignConvention) -> VolumeBlock {
        VolumeBlock {
            dims: [self.width, self.height, 1],
            channels: self.channels as u8,
            sign,
            values: self.values.clone(),
        }
    }
}

/// A volume (single or multi-channel) with its class and source file.
#[derive(Clone, Debug, PartialEq)]
pub struct VoxelSample {
    pub block: VolumeBlock,
    pub label: u16,
    pub source: String,
}

/// The 2-D MNIST input signals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ImageVariant {
    Gray,
    Binary,
    Silhouette,
    Sdf,
}

impl ImageVariant {
    pub const ALL: [Self; 4] = [Self::Gray, Self::Binary, Self::Silhouette, Self::Sdf];

    pub fn name(self) -> &'static str {
        match self {
            Self::Gray => "gray",
            Self::Binary => "binary",
            Self::Silhouette => "silhouette",
            Self::Sdf => "sdf",
        }
    }

    pub fn sign(self) -> SignConvention {
        match self {
            Self::Sdf => SignConvention::NegativeInside,
            _ => SignConvention::Unsigned,
        }
    }

    /// Converts a gray image; binarization uses [`DEFAULT_THRESHOLD`].
    pub fn apply(self, gray: &ImageSample) -> Result<ImageSample, DatasetError> {
        match self {
            Self::Gray => Ok(gray.clone()),
            Self::Binary => Ok(binarize(gray, DEFAULT_THRESHOLD)),
            Self::Silhouette => silhouette(&binarize(gray, DEFAULT_THRESHOLD)),
            Self::Sdf => sdf_image(&binarize(gray, DEFAULT_THRESHOLD)),
        }
    }
}

impl std::str::FromStr for ImageVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| format!("unknown image variant {s:?}"))
    }
}
