//! Every layer's backward pass against central differences, in both
//! precisions, over 20 seeds.

mod common;

use common::gradcases::{cases, check};

const SEEDS: u64 = 20;

#[test]
fn double_precision_within_1e_6() {
    for case in cases() {
        let worst = (0..SEEDS).map(|s| check::<f64>(&case, s, 1e-5)).fold(0.0, f64::max);
        assert!(worst < 1e-6, "{}: {worst:e}", case.name);
    }
}

#[test]
fn single_precision_within_1e_3() {
    for case in cases() {
        let worst = (0..SEEDS).map(|s| check::<f32>(&case, s, 1e-2)).fold(0.0, f64::max);
        assert!(worst < 1e-3, "{}: {worst:e}", case.name);
    }
}
