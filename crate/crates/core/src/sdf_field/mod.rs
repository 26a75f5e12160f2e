//! Occupancy grids to normalized signed distance fields, their colored
//! three-channel form, and the binary volume block format.

mod block;
mod edt;

pub use block::{SignConvention, VolumeBlock, SDFV_MAGIC};
pub use edt::{brute_force_squared_edt, squared_edt_lattice, UNREACHABLE};

use crate::mesh_voxel::{CubicGrid, MeshError, OccupancyGrid};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SdfError {
    #[error("feature set is empty")]
    EmptyFeatureSet,
    #[error("grid is all occupied or all empty")]
    DegenerateGrid,
    #[error("grid has {got} values, expected {expected}")]
    BadGridSize { expected: usize, got: usize },
    #[error("bad volume block: {0}")]
    Format(String),
    #[error("volume block truncated")]
    Truncated,
    #[error("i/o error: {0}")]
    Io(String),
}

/// Which voxels distances are measured to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureSet {
    Occupied,
    Empty,
}

/// Squared lattice distance from every voxel to the nearest voxel of the
/// feature set, as exact integers.
pub fn squared_edt(grid: &OccupancyGrid, feature: FeatureSet) -> Result<Vec<u64>, SdfError> {
    let mask: Vec<bool> = match feature {
        FeatureSet::Occupied => grid.occupied().to_vec(),
        FeatureSet::Empty => grid.occupied().iter().map(|o| !o).collect(),
    };
    let r = grid.resolution();
    squared_edt_lattice(&mask, [r, r, r], [0, 1, 2]).ok_or(SdfError::EmptyFeatureSet)
}

/// Signed field over any lattice: empty points get `+d / max d` with `d`
/// the distance to the nearest occupied point, occupied points get
/// `-d / max d` with `d` the distance to the nearest empty point.
pub fn signed_normalized_lattice(occupied: &[bool], dims: [usize; 3]) -> Result<Vec<f32>, SdfError> {
    let empty: Vec<bool> = occupied.iter().map(|o| !o).collect();
    let to_occ = squared_edt_lattice(occupied, dims, [0, 1, 2]).ok_or(SdfError::DegenerateGrid)?;
    let to_empty = squared_edt_lattice(&empty, dims, [0, 1, 2]).ok_or(SdfError::DegenerateGrid)?;
    let max_out = (0..occupied.len())
        .filter(|&i| !occupied[i])
        .map(|i| to_occ[i])
        .max()
        .unwrap_or(0);
    let max_in = (0..occupied.len())
        .filter(|&i| occupied[i])
        .map(|i| to_empty[i])
        .max()
        .unwrap_or(0);
    let (max_out, max_in) = ((max_out as f64).sqrt(), (max_in as f64).sqrt());
    Ok((0..occupied.len())
        .map(|i| {
            if occupied[i] {
                (-(to_empty[i] as f64).sqrt() / max_in) as f32
            } else {
                ((to_occ[i] as f64).sqrt() / max_out) as f32
            }
        })
        .collect())
}

/// Per-voxel signed distance normalized to `[-1, 0)` inside and `(0, 1]`
/// outside, x-fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct SdfGrid {
    resolution: usize,
    values: Vec<f32>,
}

impl SdfGrid {
    pub fn new(resolution: usize, values: Vec<f32>) -> Result<Self, SdfError> {
        let expected = resolution.pow(3);
        if values.len() != expected {
            return Err(SdfError::BadGridSize {
                expected,
                got: values.len(),
            });
        }
        Ok(Self { resolution, values })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    pub fn sign_convention(&self) -> SignConvention {
        SignConvention::NegativeInside
    }

    /// Voxels with a negative value.
    pub fn interior(&self) -> OccupancyGrid {
        OccupancyGrid::new(self.resolution, self.values.iter().map(|&v| v < 0.0).collect()).expect("same size")
    }

    pub fn to_block(&self) -> VolumeBlock {
        VolumeBlock::cubic(self.resolution, 1, self.values.clone())
    }
}

impl CubicGrid for SdfGrid {
    type Value = f32;

    fn resolution(&self) -> usize {
        self.resolution
    }

    fn values(&self) -> &[f32] {
        &self.values
    }

    fn with_values(&self, resolution: usize, values: Vec<f32>) -> Result<Self, MeshError> {
        let (expected, got) = (resolution.pow(3), values.len());
        Self::new(resolution, values).map_err(|_| MeshError::BadGridSize { expected, got })
    }
}

pub fn signed_normalized_sdf(grid: &OccupancyGrid) -> Result<SdfGrid, SdfError> {
    let r = grid.resolution();
    SdfGrid::new(r, signed_normalized_lattice(grid.occupied(), [r, r, r])?)
}

/// Interior mask (red), rescaled magnitude (green) and exterior mask (blue).
#[derive(Clone, Debug, PartialEq)]
pub struct ColoredSdf {
    pub resolution: usize,
    pub red: Vec<f32>,
    pub green: Vec<f32>,
    pub blue: Vec<f32>,
}

impl ColoredSdf {
    /// Channels concatenated red, green, blue.
    pub fn to_block(&self) -> VolumeBlock {
        let mut v = Vec::with_capacity(3 * self.red.len());
        v.extend_from_slice(&self.red);
        v.extend_from_slice(&self.green);
        v.extend_from_slice(&self.blue);
        VolumeBlock::cubic(self.resolution, 3, v)
    }
}

/// Green is `(|s| - b) / (1 - b)` where `b` is the smallest magnitude on the
/// voxel's side of the surface, so every surface-adjacent voxel gets 0.
pub fn colored_sdf(sdf: &SdfGrid) -> ColoredSdf {
    let v = sdf.values();
    let band = |pred: fn(f32) -> bool| {
        v.iter()
            .copied()
            .filter(|&x| pred(x))
            .map(f32::abs)
            .fold(f32::INFINITY, f32::min)
    };
    let band_in = band(|x| x < 0.0);
    let band_out = band(|x| x > 0.0);
    let rescale = |m: f32, b: f32| {
        if m <= b || b >= 1.0 {
            0.0
        } else {
            ((m - b) / (1.0 - b)).clamp(0.0, 1.0)
        }
    };
    ColoredSdf {
        resolution: sdf.resolution(),
        red: v.iter().map(|&x| if x < 0.0 { 1.0 } else { 0.0 }).collect(),
        green: v
            .iter()
            .map(|&x| match x {
                x if x < 0.0 => rescale(-x, band_in),
                x if x > 0.0 => rescale(x, band_out),
                _ => 0.0,
            })
            .collect(),
        blue: v.iter().map(|&x| if x > 0.0 { 1.0 } else { 0.0 }).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube_in_9() -> OccupancyGrid {
        let mut g = OccupancyGrid::empty(9);
        for z in 3..6 {
            for y in 3..6 {
                for x in 3..6 {
                    g.set(x, y, z, true);
                }
            }
        }
        g
    }

    #[test]
    fn single_voxel_sdf() {
        let mut g = OccupancyGrid::empty(5);
        g.set(2, 2, 2, true);
        let s = signed_normalized_sdf(&g).unwrap();
        assert_eq!(s.values()[g.index(2, 2, 2)], -1.0);
        assert_eq!(s.values()[0], 1.0);
        assert_eq!(s.values()[g.index(4, 4, 4)], 1.0);
    }

    #[test]
    fn cube_center_and_corner() {
        let g = cube_in_9();
        let s = signed_normalized_sdf(&g).unwrap();
        assert_eq!(s.values()[g.index(4, 4, 4)], -1.0);
        assert_eq!(s.values()[0], 1.0);
        // face voxels are one step from empty, the center is two
        assert_eq!(s.values()[g.index(3, 4, 4)], -0.5);
    }

    #[test]
    fn sign_partition_and_complement() {
        let g = cube_in_9();
        let s = signed_normalized_sdf(&g).unwrap();
        for (v, &o) in s.values().iter().zip(g.occupied()) {
            assert_eq!(*v < 0.0, o);
            assert!((-1.0..=1.0).contains(v) && *v != 0.0);
        }
        let c = signed_normalized_sdf(&g.complement()).unwrap();
        for (a, b) in s.values().iter().zip(c.values()) {
            assert_eq!(*a, -*b);
        }
    }

    #[test]
    fn degenerate_grids() {
        assert_eq!(signed_normalized_sdf(&OccupancyGrid::empty(4)), Err(SdfError::DegenerateGrid));
        let full = OccupancyGrid::empty(4).complement();
        assert_eq!(signed_normalized_sdf(&full), Err(SdfError::DegenerateGrid));
        assert_eq!(squared_edt(&full, FeatureSet::Empty), Err(SdfError::EmptyFeatureSet));
    }

    #[test]
    fn colored_channels() {
        let g = cube_in_9();
        let s = signed_normalized_sdf(&g).unwrap();
        let c = colored_sdf(&s);
        let center = g.index(4, 4, 4);
        assert_eq!((c.red[center], c.green[center], c.blue[center]), (1.0, 1.0, 0.0));
        // surface-adjacent on both sides
        assert_eq!(c.green[g.index(3, 4, 4)], 0.0);
        assert_eq!(c.green[g.index(2, 4, 4)], 0.0);
        assert!(c.green[0] > 0.99);
        for i in 0..g.occupied().len() {
            assert_eq!(c.red[i] > 0.0, g.occupied()[i]);
            assert_eq!(c.blue[i] > 0.0, !g.occupied()[i]);
            assert!((0.0..=1.0).contains(&c.green[i]));
        }
    }

    #[test]
    fn all_exterior_field_has_no_red() {
        let s = SdfGrid::new(2, vec![0.5; 8]).unwrap();
        assert!(colored_sdf(&s).red.iter().all(|&r| r == 0.0));
    }
}
