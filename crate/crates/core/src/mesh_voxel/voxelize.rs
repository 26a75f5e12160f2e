use rayon::prelude::*;

use super::{MeshError, OccupancyGrid, TriangleMesh};

pub const MIN_RESOLUTION: usize = 4;
pub const MAX_RESOLUTION: usize = 512;

/// Rays closer than this to a projected triangle edge are re-cast.
const EDGE_TOLERANCE: f64 = 1e-9;
/// Jitter step relative to the voxel pitch.
const JITTER: f64 = 1e-7;
/// The z jitter is an irrational multiple of the y jitter so the shifted ray
/// cannot stay on a diagonal edge.
const JITTER_Z_RATIO: f64 = 0.754_877_666_246_692_8;
const MAX_JITTER_TRIES: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct Voxelized {
    pub grid: OccupancyGrid,
    /// False when some edge is not shared by exactly two faces; the grid is
    /// then a best-effort parity result.
    pub watertight: bool,
    /// Rows that needed a jittered ray.
    pub jittered_rows: usize,
}

struct ProjectedTriangle {
    // yz coordinates and x of each vertex
    y: [f64; 3],
    z: [f64; 3],
    x: [f64; 3],
}

enum Hit {
    Miss,
    At(f64),
    NearEdge,
}

impl ProjectedTriangle {
    fn intersect(&self, py: f64, pz: f64) -> Hit {
        let (y, z) = (self.y, self.z);
        let area = (y[1] - y[0]) * (z[2] - z[0]) - (y[2] - y[0]) * (z[1] - z[0]);
        if area.abs() < 1e-18 {
            // parallel to the ray: contributes no crossing
            return Hit::Miss;
        }
        let mut b = [0.0; 3];
        let mut near = false;
        for i in 0..3 {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            // signed area of (p, v_j, v_k), proportional to barycentric i
            let e = (y[j] - py) * (z[k] - pz) - (y[k] - py) * (z[j] - pz);
            b[i] = e / area;
            let len = ((y[k] - y[j]).powi(2) + (z[k] - z[j]).powi(2)).sqrt();
            if e.abs() <= EDGE_TOLERANCE * len {
                near = true;
            }
        }
        let slack = 1e-6;
        if b.iter().any(|&w| w < -slack) {
            return Hit::Miss;
        }
        if near {
            return Hit::NearEdge;
        }
        if b.iter().any(|&w| w <= 0.0) {
            return Hit::Miss;
        }
        Hit::At(b[0] * self.x[0] + b[1] * self.x[1] + b[2] * self.x[2])
    }
}

/// Marks a voxel occupied when an odd number of triangle crossings lies on
/// the +x ray from its center. The grid spans `[-1, 1]` on every axis.
pub fn solid_voxelize(mesh: &TriangleMesh, resolution: usize) -> Result<Voxelized, MeshError> {
    if !(MIN_RESOLUTION..=MAX_RESOLUTION).contains(&resolution) {
        return Err(MeshError::ResolutionOutOfRange(resolution));
    }
    if mesh.faces.is_empty() {
        return Err(MeshError::EmptyMesh);
    }
    let r = resolution;
    let pitch = 2.0 / r as f64;
    let center = |i: usize| -1.0 + (i as f64 + 0.5) * pitch;
    let tris: Vec<ProjectedTriangle> = mesh
        .faces
        .iter()
        .map(|f| {
            let v = f.map(|i| mesh.vertices[i]);
            ProjectedTriangle {
                x: [v[0][0], v[1][0], v[2][0]],
                y: [v[0][1], v[1][1], v[2][1]],
                z: [v[0][2], v[1][2], v[2][2]],
            }
        })
        .collect();

    // bin triangles by the voxel-center rows their yz bounding box may touch,
    // padded by one row so jittered rays still see their candidates
    let mut bins: Vec<Vec<u32>> = vec![Vec::new(); r * r];
    let to_row = |c: f64| ((c + 1.0) / pitch - 0.5).floor();
    for (ti, t) in tris.iter().enumerate() {
        let (ylo, yhi) = min_max(t.y);
        let (zlo, zhi) = min_max(t.z);
        let j0 = (to_row(ylo) - 1.0).max(0.0) as usize;
        let j1 = ((to_row(yhi) + 2.0).max(0.0) as usize).min(r - 1);
        let k0 = (to_row(zlo) - 1.0).max(0.0) as usize;
        let k1 = ((to_row(zhi) + 2.0).max(0.0) as usize).min(r - 1);
        if j0 > j1 || k0 > k1 {
            continue;
        }
        for k in k0..=k1 {
            for j in j0..=j1 {
                bins[k * r + j].push(ti as u32);
            }
        }
    }

    let rows: Vec<(Vec<bool>, bool)> = (0..r * r)
        .into_par_iter()
        .map(|row| {
            let (j, k) = (row % r, row / r);
            let mut crossings = Vec::new();
            let mut jittered = false;
            for attempt in 0..=MAX_JITTER_TRIES {
                let d = JITTER * pitch * attempt as f64;
                let (py, pz) = (center(j) + d, center(k) + d * JITTER_Z_RATIO);
                crossings.clear();
                let mut degenerate = false;
                for &ti in &bins[row] {
                    match tris[ti as usize].intersect(py, pz) {
                        Hit::Miss => {}
                        Hit::At(x) => crossings.push(x),
                        Hit::NearEdge => {
                            degenerate = true;
                            break;
                        }
                    }
                }
                if !degenerate {
                    break;
                }
                jittered = true;
                if attempt == MAX_JITTER_TRIES {
                    // give up on exactness and resolve near-edge hits as crossings
                    crossings.clear();
                    for &ti in &bins[row] {
                        if let Hit::At(x) = tris[ti as usize].intersect(py, pz) {
                            crossings.push(x);
                        }
                    }
                }
            }
            crossings.sort_by(f64::total_cmp);
            let mut line = vec![false; r];
            // crossings beyond each center, counted from the far end
            let mut beyond = 0usize;
            let mut ci = crossings.len();
            for i in (0..r).rev() {
                let x = center(i);
                while ci > 0 && crossings[ci - 1] > x {
                    ci -= 1;
                    beyond += 1;
                }
                line[i] = beyond % 2 == 1;
            }
            (line, jittered)
        })
        .collect();

    let mut occupied = Vec::with_capacity(r.pow(3));
    let mut jittered_rows = 0;
    // row index is k * r + j, so concatenation is x-fastest order
    for (line, jit) in rows {
        occupied.extend(line);
        jittered_rows += usize::from(jit);
    }
    Ok(Voxelized {
        grid: OccupancyGrid::new(r, occupied)?,
        watertight: mesh.is_watertight(),
        jittered_rows,
    })
}

fn min_max(v: [f64; 3]) -> (f64, f64) {
    (v[0].min(v[1]).min(v[2]), v[0].max(v[1]).max(v[2]))
}
