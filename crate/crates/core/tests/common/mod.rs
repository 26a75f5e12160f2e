#![allow(dead_code)]

pub mod calibration;
pub mod checks;
pub mod gradcases;

use std::path::PathBuf;

/// `$VOXCADE_MNIST_DIR`, else `data/mnist` at the workspace root, if it
/// holds the four IDX files.
pub fn mnist_dir() -> Option<PathBuf> {
    let dir = std::env::var_os("VOXCADE_MNIST_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"));
    dir.join("t10k-labels-idx1-ubyte").is_file().then_some(dir)
}
