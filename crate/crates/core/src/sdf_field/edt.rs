//! Exact squared Euclidean distance transform on an integer lattice by
//! separable lower envelopes of parabolas, in exact integer arithmetic.

use rayon::prelude::*;

/// Marker for "no feature reachable" in intermediate passes.
pub const UNREACHABLE: u64 = u64::MAX;

/// Fraction `num / den` with `den > 0`, or minus infinity.
#[derive(Clone, Copy)]
enum Bound {
    NegInf,
    At(i128, i128),
}

fn le(a: Bound, b: Bound) -> bool {
    match (a, b) {
        (Bound::NegInf, _) => true,
        (_, Bound::NegInf) => false,
        (Bound::At(an, ad), Bound::At(bn, bd)) => an * bd <= bn * ad,
    }
}

/// One-dimensional pass: `out[p] = min_q (p - q)^2 + f[q]` over sites with
/// `f[q] != UNREACHABLE`.
fn envelope_1d(f: &[u64], out: &mut [u64], v: &mut Vec<usize>, z: &mut Vec<Bound>) {
    v.clear();
    z.clear();
    let h = |q: usize| f[q] as i128 + (q as i128) * (q as i128);
    for q in 0..f.len() {
        if f[q] == UNREACHABLE {
            continue;
        }
        loop {
            let Some(&last) = v.last() else {
                v.push(q);
                z.push(Bound::NegInf);
                break;
            };
            // abscissa where the parabolas rooted at `last` and `q` meet
            let s = Bound::At(h(q) - h(last), 2 * (q as i128 - last as i128));
            if le(s, *z.last().unwrap()) {
                v.pop();
                z.pop();
            } else {
                v.push(q);
                z.push(s);
                break;
            }
        }
    }
    if v.is_empty() {
        out.fill(UNREACHABLE);
        return;
    }
    let mut k = 0;
    for (p, o) in out.iter_mut().enumerate() {
        let pb = Bound::At(p as i128, 1);
        while k + 1 < v.len() && le(z[k + 1], pb) {
            k += 1;
        }
        let d = p as i128 - v[k] as i128;
        *o = (d * d) as u64 + f[v[k]];
    }
}

/// Squared distance from every lattice point of a `dims = [nx, ny, nz]`
/// grid (x fastest) to the nearest point where `feature` is true.
/// Axes are processed in `axis_order`; the result does not depend on it.
/// Returns `None` when no feature point exists.
pub fn squared_edt_lattice(feature: &[bool], dims: [usize; 3], axis_order: [usize; 3]) -> Option<Vec<u64>> {
    let n: usize = dims.iter().product();
    assert_eq!(feature.len(), n, "feature mask does not match dims");
    let mut sorted = axis_order;
    sorted.sort_unstable();
    assert_eq!(sorted, [0, 1, 2], "axis order must be a permutation of 0, 1, 2");
    if !feature.iter().any(|&b| b) {
        return None;
    }
    let mut g: Vec<u64> = feature.iter().map(|&b| if b { 0 } else { UNREACHABLE }).collect();
    let strides = [1, dims[0], dims[0] * dims[1]];
    for &axis in &axis_order {
        let len = dims[axis];
        if len <= 1 {
            continue;
        }
        let stride = strides[axis];
        // every line along `axis` starts at an index whose `axis` coordinate is 0
        let starts: Vec<usize> = (0..n).filter(|i| (i / stride).is_multiple_of(len)).collect();
        let lines: Vec<Vec<u64>> = starts
            .par_iter()
            .map_init(
                || (Vec::new(), Vec::new(), vec![0u64; len], vec![0u64; len]),
                |(v, z, f, out), &s| {
                    for (t, fv) in f.iter_mut().enumerate() {
                        *fv = g[s + t * stride];
                    }
                    envelope_1d(f, out, v, z);
                    out.clone()
                },
            )
            .collect();
        for (s, line) in starts.iter().zip(lines) {
            for (t, val) in line.into_iter().enumerate() {
                g[s + t * stride] = val;
            }
        }
    }
    Some(g)
}

/// Exhaustive `O(n^2)` reference used by tests and the acceptance suite.
pub fn brute_force_squared_edt(feature: &[bool], dims: [usize; 3]) -> Option<Vec<u64>> {
    let coords = |i: usize| [i % dims[0], (i / dims[0]) % dims[1], i / (dims[0] * dims[1])];
    let sites: Vec<[usize; 3]> = (0..feature.len()).filter(|&i| feature[i]).map(coords).collect();
    if sites.is_empty() {
        return None;
    }
    Some(
        (0..feature.len())
            .map(|i| {
                let p = coords(i);
                sites
                    .iter()
                    .map(|s| (0..3).map(|a| (p[a] as i64 - s[a] as i64).pow(2) as u64).sum::<u64>())
                    .min()
                    .unwrap()
            })
            .collect(),
    )
}
