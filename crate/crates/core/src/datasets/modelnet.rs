use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use super::{DatasetError, DatasetManifest, DatasetWriter};
use crate::mesh_voxel::{load_off, normalize_to_unit_ball, solid_voxelize};
use crate::sdf_field::{colored_sdf, signed_normalized_sdf, SignConvention, VolumeBlock};

/// How a voxelized mesh is stored.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VoxelVariant {
    Binary,
    Sdf,
    ColoredSdf,
}

impl VoxelVariant {
    pub const ALL: [Self; 3] = [Self::Binary, Self::Sdf, Self::ColoredSdf];

    pub fn name(self) -> &'static str {
        match self {
            Self::Binary => "binary",
            Self::Sdf => "sdf",
            Self::ColoredSdf => "colored-sdf",
        }
    }

    pub fn channels(self) -> u8 {
        match self {
            Self::ColoredSdf => 3,
            _ => 1,
        }
    }

    pub fn sign(self) -> SignConvention {
        match self {
            Self::Sdf => SignConvention::NegativeInside,
            _ => SignConvention::Unsigned,
        }
    }
}

impl fmt::Display for VoxelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for VoxelVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| format!("unknown voxel variant {s:?}"))
    }
}

/// OFF bytes to a stored volume: normalize, voxelize, convert.
/// Also reports whether the mesh was watertight.
pub fn mesh_to_block(off: &[u8], resolution: usize, variant: VoxelVariant) -> Result<(VolumeBlock, bool), DatasetError> {
    let mesh = normalize_to_unit_ball(&load_off(off)?)?;
    let vox = solid_voxelize(&mesh, resolution)?;
    let block = match variant {
        VoxelVariant::Binary => VolumeBlock::cubic(resolution, 1, vox.grid.as_f32()).with_sign(SignConvention::Unsigned),
        VoxelVariant::Sdf => signed_normalized_sdf(&vox.grid)?.to_block(),
        VoxelVariant::ColoredSdf => colored_sdf(&signed_normalized_sdf(&vox.grid)?)
            .to_block()
            .with_sign(SignConvention::Unsigned),
    };
    Ok((block, vox.watertight))
}

#[derive(Clone, Debug, PartialEq)]
pub struct BuildFailure {
    pub path: PathBuf,
    pub error: String,
}

#[derive(Clone, Debug)]
pub struct BuildReport {
    pub manifest: DatasetManifest,
    pub failures: Vec<BuildFailure>,
    pub non_watertight: Vec<PathBuf>,
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>, DatasetError> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    v.sort();
    Ok(v)
}

const CHUNK: usize = 64;

/// Builds a dataset from a `class/{train,test}/*.off` tree. Classes are
/// sorted by directory name. Files that fail to load or voxelize are
/// skipped and reported.
pub fn build_modelnet(
    mesh_root: &Path,
    resolution: usize,
    variant: VoxelVariant,
    out_dir: &Path,
) -> Result<BuildReport, DatasetError> {
    let class_dirs: Vec<PathBuf> = sorted_entries(mesh_root)?.into_iter().filter(|p| p.is_dir()).collect();
    let classes: Vec<String> = class_dirs
        .iter()
        .map(|p| p.file_name().unwrap_or_default().to_string_lossy().into_owned())
        .collect();
    let mut jobs: Vec<(&str, u16, PathBuf)> = Vec::new();
    for split in ["train", "test"] {
        for (ci, cdir) in class_dirs.iter().enumerate() {
            let sdir = cdir.join(split);
            if !sdir.is_dir() {
                return Err(DatasetError::MissingSplit(classes[ci].clone()));
            }
            for f in sorted_entries(&sdir)? {
                if f.extension().is_some_and(|e| e.eq_ignore_ascii_case("off")) {
                    jobs.push((split, ci as u16, f));
                }
            }
        }
    }
    if jobs.is_empty() {
        return Err(DatasetError::NoMeshes(mesh_root.display().to_string()));
    }
    let mut writer = DatasetWriter::create(
        out_dir,
        &mesh_root
            .file_name()
            .map_or_else(|| "modelnet".to_string(), |n| n.to_string_lossy().into_owned()),
        classes,
        variant.name(),
        [resolution; 3],
        variant.channels(),
        variant.sign(),
    )?;
    let mut failures = Vec::new();
    let mut non_watertight = Vec::new();
    for chunk in jobs.chunks(CHUNK) {
        let done: Vec<Result<(VolumeBlock, bool), DatasetError>> = chunk
            .par_iter()
            .map(|(_, _, path)| {
                let bytes = std::fs::read(path)?;
                mesh_to_block(&bytes, resolution, variant)
            })
            .collect();
        for ((split, label, path), r) in chunk.iter().zip(done) {
            match r {
                Ok((block, watertight)) => {
                    if !watertight {
                        non_watertight.push(path.clone());
                    }
                    writer.append(split, &block, *label)?;
                }
                Err(e) => {
                    log::warn!("skipping {}: {e}", path.display());
                    failures.push(BuildFailure {
                        path: path.clone(),
                        error: e.to_string(),
                    });
                }
            }
        }
    }
    Ok(BuildReport {
        manifest: writer.finish()?,
        failures,
        non_watertight,
    })
}
