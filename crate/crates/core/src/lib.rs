//! Signed-distance-field voxel classification with a three-stage early-exit
//! cascade: a fully connected net on 8³ SDF samples, a shallow 3D CNN, and a
//! deep 3D CNN that reuses the shallow net's convolution trunk.

pub mod cascade;
pub mod datasets;
pub mod mesh_voxel;
pub mod models;
pub mod nn;
pub mod sdf_field;
