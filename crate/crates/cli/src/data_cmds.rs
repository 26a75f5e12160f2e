use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use voxcade::datasets::{
    build_modelnet, load_mnist_dir, make_3d_mnist, DatasetManifest, DatasetWriter, ImageSample, ImageVariant,
    Mnist3dVariant, MnistSplit, VoxelVariant, THICKNESSES, VOLUME,
};
use voxcade::sdf_field::VolumeBlock;

use crate::config::write_resolved;
use crate::error::CliError;

#[derive(Args, Debug, Serialize)]
pub struct VoxelizeArgs {
    /// Root of the mesh tree: one directory per class, each with train/ and test/.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 64)]
    pub resolution: usize,
    /// binary, sdf or colored-sdf.
    #[arg(long, default_value = "sdf")]
    pub variant: String,
    /// Output dataset directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum DatasetCommand {
    /// 28x28 images: gray, binary, silhouette or sdf.
    Mnist2d(Mnist2dArgs),
    /// 32^3 volumes made by extruding digits.
    Mnist3d(Mnist3dArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct MnistSource {
    /// Directory with the four IDX files; falls back to $VOXCADE_MNIST_DIR.
    #[arg(long)]
    pub mnist_dir: Option<PathBuf>,
    /// Training images moved to the val split (taken from the end).
    #[arg(long, default_value_t = 0)]
    pub val_count: usize,
    /// Use only the first N training images.
    #[arg(long)]
    pub limit_train: Option<usize>,
    /// Use only the first N test images.
    #[arg(long)]
    pub limit_test: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct Mnist2dArgs {
    #[arg(long, default_value = "gray")]
    pub variant: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub source: MnistSource,
}

#[derive(Args, Debug, Serialize)]
pub struct Mnist3dArgs {
    /// binary, stacked-gray, stacked-sdf or volumetric-sdf.
    #[arg(long, default_value = "volumetric-sdf")]
    pub variant: String,
    /// Extrusion depth: 4 or 28.
    #[arg(long, default_value_t = 28)]
    pub thickness: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub source: MnistSource,
}

pub fn voxelize(a: &VoxelizeArgs) -> Result<(), CliError> {
    let variant: VoxelVariant = a.variant.parse().map_err(CliError::input)?;
    if !a.input.is_dir() {
        return Err(CliError::input(format!("{} is not a directory", a.input.display())));
    }
    let report = build_modelnet(&a.input, a.resolution, variant, &a.out)?;
    let mut log = String::new();
    for f in &report.failures {
        log.push_str(&format!("{}\t{}\n", f.path.display(), f.error));
    }
    std::fs::write(a.out.join("failures.txt"), log)?;
    let open: String = report
        .non_watertight
        .iter()
        .map(|p| format!("{}\n", p.display()))
        .collect();
    std::fs::write(a.out.join("non_watertight.txt"), open)?;
    write_resolved(a, "voxelize", &a.out.join("config.txt"))?;
    print_manifest(&report.manifest);
    println!("failures: {}", report.failures.len());
    println!("non-watertight meshes: {}", report.non_watertight.len());
    Ok(())
}

fn print_manifest(m: &DatasetManifest) {
    println!("dataset {} ({}), {} classes", m.name, m.variant, m.classes.len());
    for (split, n) in &m.counts {
        println!("{split}: {n}");
    }
    println!("checksum: {}", m.checksum);
}

fn mnist_dir(src: &MnistSource) -> Result<PathBuf, CliError> {
    src.mnist_dir
        .clone()
        .or_else(|| std::env::var_os("VOXCADE_MNIST_DIR").map(PathBuf::from))
        .ok_or_else(|| CliError::input("pass --mnist-dir or set VOXCADE_MNIST_DIR"))
}

fn load_split(dir: &Path, split: MnistSplit, limit: Option<usize>) -> Result<Vec<ImageSample>, CliError> {
    let mut v = load_mnist_dir(dir, split)?;
    if let Some(n) = limit {
        v.truncate(n);
    }
    Ok(v)
}

/// Train, val and test image lists.
fn mnist_splits(src: &MnistSource) -> Result<[(&'static str, Vec<ImageSample>); 3], CliError> {
    let dir = mnist_dir(src)?;
    let mut train = load_split(&dir, MnistSplit::Train, src.limit_train)?;
    let test = load_split(&dir, MnistSplit::Test, src.limit_test)?;
    if src.val_count > train.len() {
        return Err(CliError::input(format!(
            "--val-count {} exceeds the {} training images",
            src.val_count,
            train.len()
        )));
    }
    let val = train.split_off(train.len() - src.val_count);
    Ok([("train", train), ("val", val), ("test", test)])
}

fn digit_classes() -> Vec<String> {
    (0..10).map(|d| d.to_string()).collect()
}

const CHUNK: usize = 512;

/// Converts images in parallel chunks and appends them in order.
fn write_all(
    writer: &mut DatasetWriter,
    splits: &[(&'static str, Vec<ImageSample>)],
    convert: impl Fn(&ImageSample) -> Result<VolumeBlock, CliError> + Sync,
) -> Result<(), CliError> {
    for (split, images) in splits {
        for chunk in images.chunks(CHUNK) {
            let blocks: Vec<VolumeBlock> = chunk.par_iter().map(&convert).collect::<Result<_, _>>()?;
            for (b, img) in blocks.iter().zip(chunk) {
                writer.append(split, b, img.label)?;
            }
        }
    }
    Ok(())
}

pub fn dataset(cmd: &DatasetCommand) -> Result<(), CliError> {
    match cmd {
        DatasetCommand::Mnist2d(a) => mnist2d(a),
        DatasetCommand::Mnist3d(a) => mnist3d(a),
    }
}

fn mnist2d(a: &Mnist2dArgs) -> Result<(), CliError> {
    let variant: ImageVariant = a.variant.parse().map_err(CliError::input)?;
    let splits = mnist_splits(&a.source)?;
    let mut w = DatasetWriter::create(
        &a.source.out,
        "mnist2d",
        digit_classes(),
        variant.name(),
        [28, 28, 1],
        1,
        variant.sign(),
    )?;
    write_all(&mut w, &splits, |img| Ok(variant.apply(img)?.to_block(variant.sign())))?;
    let m = w.finish()?;
    write_resolved(a, "dataset mnist2d", &a.source.out.join("config.txt"))?;
    print_manifest(&m);
    Ok(())
}

fn mnist3d(a: &Mnist3dArgs) -> Result<(), CliError> {
    let variant: Mnist3dVariant = a.variant.parse().map_err(CliError::input)?;
    if !THICKNESSES.contains(&a.thickness) {
        return Err(CliError::input(format!("--thickness must be one of {THICKNESSES:?}")));
    }
    let splits = mnist_splits(&a.source)?;
    let mut w = DatasetWriter::create(
        &a.source.out,
        &format!("mnist3d-t{}", a.thickness),
        digit_classes(),
        &variant.to_string(),
        [VOLUME; 3],
        1,
        variant.sign(),
    )?;
    write_all(&mut w, &splits, |img| Ok(make_3d_mnist(img, a.thickness, variant)?.block))?;
    let m = w.finish()?;
    write_resolved(a, "dataset mnist3d", &a.source.out.join("config.txt"))?;
    print_manifest(&m);
    Ok(())
}
