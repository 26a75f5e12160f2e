use super::MeshError;

/// A cubic grid of per-voxel values stored x-fastest:
/// `index = x + R * (y + R * z)`.
pub trait CubicGrid: Sized {
    type Value: Copy;
    fn resolution(&self) -> usize;
    fn values(&self) -> &[Self::Value];
    /// Same kind of grid at another resolution, keeping any non-value metadata.
    fn with_values(&self, resolution: usize, values: Vec<Self::Value>) -> Result<Self, MeshError>;
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OccupancyGrid {
    resolution: usize,
    occupied: Vec<bool>,
}

impl OccupancyGrid {
    pub fn new(resolution: usize, occupied: Vec<bool>) -> Result<Self, MeshError> {
        let expected = resolution.pow(3);
        if occupied.len() != expected {
            return Err(MeshError::BadGridSize {
                expected,
                got: occupied.len(),
            });
        }
        Ok(Self { resolution, occupied })
    }

    pub fn empty(resolution: usize) -> Self {
        Self {
            resolution,
            occupied: vec![false; resolution.pow(3)],
        }
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Edge length of one voxel when the grid spans `[-1, 1]` per axis.
    pub fn voxel_pitch(&self) -> f64 {
        2.0 / self.resolution as f64
    }

    pub fn occupied(&self) -> &[bool] {
        &self.occupied
    }

    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.resolution * (y + self.resolution * z)
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> bool {
        self.occupied[self.index(x, y, z)]
    }

    pub fn set(&mut self, x: usize, y: usize, z: usize, v: bool) {
        let i = self.index(x, y, z);
        self.occupied[i] = v;
    }

    pub fn count(&self) -> usize {
        self.occupied.iter().filter(|&&o| o).count()
    }

    pub fn complement(&self) -> Self {
        Self {
            resolution: self.resolution,
            occupied: self.occupied.iter().map(|o| !o).collect(),
        }
    }

    /// Center of voxel `i` along one axis in normalized coordinates.
    pub fn center(&self, i: usize) -> f64 {
        -1.0 + (i as f64 + 0.5) * self.voxel_pitch()
    }

    pub fn as_f32(&self) -> Vec<f32> {
        self.occupied.iter().map(|&o| if o { 1.0 } else { 0.0 }).collect()
    }
}

impl CubicGrid for OccupancyGrid {
    type Value = bool;

    fn resolution(&self) -> usize {
        self.resolution
    }

    fn values(&self) -> &[bool] {
        &self.occupied
    }

    fn with_values(&self, resolution: usize, values: Vec<bool>) -> Result<Self, MeshError> {
        Self::new(resolution, values)
    }
}

/// Samples every `s`-th voxel per axis starting at `s / 2`, where
/// `s = source / target`. No averaging takes place.
pub fn downsample_equal_intervals<G: CubicGrid>(grid: &G, target: usize) -> Result<G, MeshError> {
    let src = grid.resolution();
    if target == 0 || !src.is_multiple_of(target) {
        return Err(MeshError::NotDivisible {
            source_res: src,
            target,
        });
    }
    let s = src / target;
    let off = s / 2;
    let v = grid.values();
    let mut out = Vec::with_capacity(target.pow(3));
    for z in 0..target {
        for y in 0..target {
            for x in 0..target {
                let (sx, sy, sz) = (x * s + off, y * s + off, z * s + off);
                out.push(v[sx + src * (sy + src * sz)]);
            }
        }
    }
    grid.with_values(target, out)
}
