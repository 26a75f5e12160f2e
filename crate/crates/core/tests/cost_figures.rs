//! Whole-cascade size at 64^3 with 40 classes against the reference
//! figures of about 1.2e6 parameters and 5.7e8 operations per sample.

use voxcade::models::{build_fcnet, build_stage2, build_stage3};
use voxcade::nn::count_params_flops;

fn within_factor(got: f64, reference: f64, factor: f64) -> bool {
    got <= reference * factor && got >= reference / factor
}

#[test]
fn full_cascade_cost_is_near_the_reference() {
    let s1 = build_fcnet(40);
    let s2 = build_stage2(40, 64, 1).unwrap();
    let s3 = build_stage3(40, &s2).unwrap();
    let k = s3.trunk_end.unwrap();
    let c1 = count_params_flops(&s1).unwrap();
    let c2 = count_params_flops(&s2).unwrap();
    let c3 = s3.cost_of(k..s3.layers.len()).unwrap();
    let params = (c1.params + c2.params + c3.params) as f64;
    let macs = (c1.macs() + c2.macs() + c3.macs()) as f64;
    println!("params {params}, multiply-adds {macs:e}, flops {:e}", 2.0 * macs);
    assert!(within_factor(params, 1.2e6, 3.0), "params {params}");
    // the reference counts one multiply-add as one operation
    assert!(within_factor(macs, 5.7e8, 3.0), "multiply-adds {macs:e}");
}
