//! Triangle meshes, unit-ball normalization, solid voxelization by ray
//! parity, and equal-interval grid downsampling.

mod grid;
mod off;
pub mod primitives;
mod voxelize;

pub use grid::{downsample_equal_intervals, CubicGrid, OccupancyGrid};
pub use off::load_off;
pub use voxelize::{solid_voxelize, Voxelized, MAX_RESOLUTION, MIN_RESOLUTION};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MeshError {
    #[error("malformed OFF header: {0}")]
    MalformedHeader(String),
    #[error("OFF body does not match declared counts: {0}")]
    CountMismatch(String),
    #[error("non-finite coordinate in vertex {0}")]
    NonFiniteCoordinate(usize),
    #[error("malformed face {index}: {reason}")]
    MalformedFace { index: usize, reason: String },
    #[error("mesh is degenerate (all vertices coincide)")]
    DegenerateMesh,
    #[error("mesh has no faces")]
    EmptyMesh,
    #[error("resolution {0} outside {MIN_RESOLUTION}..={MAX_RESOLUTION}")]
    ResolutionOutOfRange(usize),
    #[error("source resolution {source_res} is not divisible by target {target}")]
    NotDivisible { source_res: usize, target: usize },
    #[error("grid has {got} values, expected {expected}")]
    BadGridSize { expected: usize, got: usize },
}

/// Vertices in model units and triangles as vertex-index triples.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<[usize; 3]>,
}

impl TriangleMesh {
    /// Validates face indices and coordinate finiteness.
    pub fn new(vertices: Vec<[f64; 3]>, faces: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        if let Some(i) = vertices.iter().position(|v| v.iter().any(|c| !c.is_finite())) {
            return Err(MeshError::NonFiniteCoordinate(i));
        }
        for (fi, f) in faces.iter().enumerate() {
            if let Some(&bad) = f.iter().find(|&&i| i >= vertices.len()) {
                return Err(MeshError::MalformedFace {
                    index: fi,
                    reason: format!("vertex index {bad} >= vertex count {}", vertices.len()),
                });
            }
        }
        Ok(Self { vertices, faces })
    }

    /// True when every undirected edge is shared by exactly two faces.
    pub fn is_watertight(&self) -> bool {
        if self.faces.is_empty() {
            return false;
        }
        let mut edges: Vec<(usize, usize)> = self
            .faces
            .iter()
            .flat_map(|f| [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])])
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        edges.sort_unstable();
        edges.chunk_by(|a, b| a == b).all(|run| run.len() == 2)
    }

    /// Applies `f` to every vertex.
    pub fn map_vertices(&self, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        Self {
            vertices: self.vertices.iter().copied().map(f).collect(),
            faces: self.faces.clone(),
        }
    }
}

/// Translates the vertex centroid to the origin and scales so the farthest
/// vertex lies on the unit sphere.
pub fn normalize_to_unit_ball(mesh: &TriangleMesh) -> Result<TriangleMesh, MeshError> {
    if mesh.vertices.is_empty() {
        return Err(MeshError::DegenerateMesh);
    }
    let n = mesh.vertices.len() as f64;
    let mut c = [0.0; 3];
    for v in &mesh.vertices {
        for a in 0..3 {
            c[a] += v[a];
        }
    }
    c.iter_mut().for_each(|x| *x /= n);
    let centered: Vec<[f64; 3]> = mesh
        .vertices
        .iter()
        .map(|v| [v[0] - c[0], v[1] - c[1], v[2] - c[2]])
        .collect();
    let r = centered.iter().map(|v| norm(*v)).fold(0.0, f64::max);
    if !(r > 0.0) || !r.is_finite() {
        return Err(MeshError::DegenerateMesh);
    }
    Ok(TriangleMesh {
        vertices: centered.into_iter().map(|v| v.map(|x| x / r)).collect(),
        faces: mesh.faces.clone(),
    })
}

pub(crate) fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}
