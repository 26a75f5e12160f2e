//! Exact-equality checks shared by the integration tests and the
//! acceptance run. Each returns a description of the first mismatch.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use voxcade::datasets::SampleSource;
use voxcade::mesh_voxel::OccupancyGrid;
use voxcade::models::{batch_tensor, build_stage2, build_stage3, CascadeBundle, InputTransform};
use voxcade::nn::{Mode, Network, Tensor};
use voxcade::sdf_field::{brute_force_squared_edt, squared_edt, squared_edt_lattice, FeatureSet};

fn random_mask(rng: &mut ChaCha8Rng, n: usize) -> Vec<bool> {
    // densities from nearly empty to nearly full, so single seeds and
    // near-degenerate grids both occur
    let density = rng.random_range(0.005..0.95);
    (0..n).map(|_| rng.random_bool(density)).collect()
}

/// `count` random 9^3 grids (distances to occupied and to empty voxels)
/// and `count` random 9x9 images, all against the brute-force oracle.
pub fn edt_matches_oracle(seed: u64, count: usize) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..count {
        let mask = random_mask(&mut rng, 729);
        let grid = OccupancyGrid::new(9, mask.clone()).map_err(|e| e.to_string())?;
        let empty: Vec<bool> = mask.iter().map(|o| !o).collect();
        for (feature, m) in [(FeatureSet::Occupied, &mask), (FeatureSet::Empty, &empty)] {
            let got = squared_edt(&grid, feature).ok();
            if got != brute_force_squared_edt(m, [9, 9, 9]) {
                return Err(format!("grid {k}, distances to {feature:?}"));
            }
        }
    }
    for k in 0..count {
        let mask = random_mask(&mut rng, 81);
        let mut order = [0, 1, 2];
        order.rotate_left(rng.random_range(0..3));
        if squared_edt_lattice(&mask, [9, 9, 1], order) != brute_force_squared_edt(&mask, [9, 9, 1]) {
            return Err(format!("image {k}, axis order {order:?}"));
        }
    }
    Ok(())
}

/// Shapes seen by a real forward pass, layer by layer, for one sample.
fn forward_shapes(net: &mut Network, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<usize>>, String> {
    let input = net.spec().input_shape.clone();
    let mut shape = vec![1];
    shape.extend_from_slice(&input);
    let n: usize = input.iter().product();
    let data: Vec<f32> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut x = Tensor::from_vec(&shape, data).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    for i in 0..net.num_layers() {
        x = net.forward_range(&x, i..i + 1, Mode::Eval).map_err(|e| e.to_string())?;
        out.push(x.shape()[1..].to_vec());
    }
    Ok(out)
}

/// Stage 2 and 3 at 64^3: trunk output 14^3 x 32, stage-2 pooled volume
/// 4^3 x 32, stage-3 last volume 2^3 x 128, with real tensors agreeing
/// with the declared trace everywhere.
pub fn shape_contract_64() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(64);
    let s2 = build_stage2(10, 64, 1).map_err(|e| e.to_string())?;
    let s3 = build_stage3(10, &s2).map_err(|e| e.to_string())?;
    let k = s2.trunk_end.ok_or("stage 2 has no trunk")?;
    for (spec, want) in [(s2, vec![32, 4, 4, 4]), (s3, vec![128, 2, 2, 2])] {
        let name = spec.name.clone();
        let trace = spec.trace().map_err(|e| e.to_string())?;
        let mut net = Network::new(spec, &mut rng).map_err(|e| e.to_string())?;
        let seen = forward_shapes(&mut net, &mut rng)?;
        if seen != trace {
            return Err(format!("{name}: forward shapes {seen:?} differ from trace {trace:?}"));
        }
        if seen[k - 1] != [32, 14, 14, 14] {
            return Err(format!("{name}: trunk output {:?}", seen[k - 1]));
        }
        let last_volume = seen.iter().rev().find(|s| s.len() == 4).ok_or("no volume")?;
        if *last_volume != want {
            return Err(format!("{name}: last volume {last_volume:?}, want {want:?}"));
        }
    }
    Ok(())
}

fn bits(t: &Tensor) -> Vec<u32> {
    t.data().iter().map(|v| v.to_bits()).collect()
}

/// For the first `count` samples, stage 2 and stage 3 run on their own
/// must match the shared trunk followed by each tail, bit for bit.
pub fn shared_forward_is_exact<S: SampleSource + ?Sized>(
    bundle: &mut CascadeBundle,
    source: &S,
    count: usize,
) -> Result<(), String> {
    let shape = bundle.stage2.spec().input_shape.clone();
    for i in 0..count.min(source.len()) {
        let (x, _) = batch_tensor(source, &[i], InputTransform::Identity, &shape).map_err(|e| e.to_string())?;
        let alone2 = bundle.stage2.forward(&x, Mode::Eval).map_err(|e| e.to_string())?;
        let alone3 = bundle.stage3.forward(&x, Mode::Eval).map_err(|e| e.to_string())?;
        let trunk = bundle.trunk(&x).map_err(|e| e.to_string())?;
        let shared2 = bundle.stage2_tail(&trunk).map_err(|e| e.to_string())?;
        let shared3 = bundle.stage3_tail(&trunk).map_err(|e| e.to_string())?;
        if bits(&alone2) != bits(&shared2) || bits(&alone3) != bits(&shared3) {
            return Err(format!("sample {i}: shared and unshared logits differ"));
        }
    }
    Ok(())
}
