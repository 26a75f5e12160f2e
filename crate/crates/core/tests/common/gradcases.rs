//! Small networks, one per layer kind, for finite-difference checks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use voxcade::nn::{gradient_check, ArchSpec, GradCheckConfig, LayerSpec, Mode, Network, Scalar, Tensor};

pub const CLASSES: usize = 4;

pub struct Case {
    pub name: &'static str,
    pub spec: ArchSpec,
    pub batch: usize,
}

fn spec(name: &str, input: &[usize], layers: &[(&str, LayerSpec)]) -> ArchSpec {
    let mut a = ArchSpec::new(name, input);
    for (n, l) in layers {
        a.push(n, *l);
    }
    a
}

pub fn cases() -> Vec<Case> {
    use LayerSpec::*;
    let head = |d_in| ("head", Linear { d_in, d_out: CLASSES });
    vec![
        Case {
            name: "linear",
            spec: spec("linear", &[6], &[head(6)]),
            batch: 3,
        },
        Case {
            name: "relu",
            spec: spec(
                "relu",
                &[6],
                &[("fc", Linear { d_in: 6, d_out: 8 }), ("act", Relu), head(8)],
            ),
            batch: 1,
        },
        Case {
            name: "conv2d",
            spec: spec(
                "conv2d",
                &[2, 6, 6],
                &[
                    ("conv", Conv { rank: 2, c_in: 2, c_out: 3, kernel: 3 }),
                    ("flat", Flatten),
                    head(48),
                ],
            ),
            batch: 2,
        },
        Case {
            name: "conv3d",
            spec: spec(
                "conv3d",
                &[2, 5, 5, 5],
                &[
                    ("conv", Conv { rank: 3, c_in: 2, c_out: 2, kernel: 3 }),
                    ("flat", Flatten),
                    head(54),
                ],
            ),
            batch: 2,
        },
        Case {
            name: "batchnorm",
            spec: spec(
                "batchnorm",
                &[2, 6, 6],
                &[
                    ("conv", Conv { rank: 2, c_in: 2, c_out: 3, kernel: 3 }),
                    ("bn", BatchNorm { channels: 3 }),
                    ("flat", Flatten),
                    head(48),
                ],
            ),
            batch: 4,
        },
        Case {
            name: "maxpool2d",
            spec: spec(
                "maxpool2d",
                &[2, 6, 6],
                &[("pool", MaxPool { rank: 2, size: 2, stride: 2 }), ("flat", Flatten), head(18)],
            ),
            batch: 2,
        },
        Case {
            name: "maxpool3d",
            spec: spec(
                "maxpool3d",
                &[1, 4, 4, 4],
                &[("pool", MaxPool { rank: 3, size: 2, stride: 2 }), ("flat", Flatten), head(8)],
            ),
            batch: 2,
        },
        // no parameters: only the input gradient, i.e. the loss itself
        Case {
            name: "softmax-ce",
            spec: spec("softmax-ce", &[CLASSES], &[("flat", Flatten)]),
            batch: 5,
        },
    ]
}

/// Max relative error of backprop against central differences for one
/// case, seed and precision.
pub fn check<T: Scalar>(case: &Case, seed: u64, epsilon: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let net64: Network<f64> = Network::new(case.spec.clone(), &mut rng).expect("valid case");
    let per: usize = case.spec.input_shape.iter().product();
    let mut shape = vec![case.batch];
    shape.extend_from_slice(&case.spec.input_shape);
    let mut data = Vec::with_capacity(case.batch * per);
    for _ in 0..case.batch {
        data.extend(lattice_sample(&mut rng, per, if case.name == "softmax-ce" { 3.0 } else { 1.0 }));
    }
    let x64 = Tensor::<f64>::from_vec(&shape, data).expect("shape");
    let mut net64 = net64;
    if case.name == "relu" {
        push_off_kinks(&mut net64, &x64);
    }
    let mut net: Network<T> = net64.cast();
    let x = x64.cast::<T>();
    let labels: Vec<usize> = (0..case.batch).map(|_| rng.random_range(0..CLASSES)).collect();
    let cfg = GradCheckConfig {
        epsilon,
        seed,
        ..Default::default()
    };
    gradient_check(&mut net, &x, &labels, &cfg)
        .expect("gradient check runs")
        .max_relative_error
}

/// A shuffled evenly spaced lattice on `[-scale, scale]`. Values within a
/// sample differ by at least `2 * scale / n`, so a small perturbation can
/// never change which element wins a max-pool window.
fn lattice_sample(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|i| scale * (2.0 * i as f64 / n as f64 - 1.0)).collect();
    v.shuffle(rng);
    v
}

/// Shifts the first layer's biases so no hidden pre-activation of the
/// (single-sample) batch lies within 0.1 of the ReLU kink.
fn push_off_kinks(net: &mut Network<f64>, x: &Tensor<f64>) {
    const MARGIN: f64 = 0.1;
    let pre = net.forward_range(x, 0..1, Mode::Eval).expect("forward");
    let mut params = net.named_params_mut();
    let bias = &mut params
        .iter_mut()
        .find(|(n, _)| n == "fc.bias")
        .expect("first layer has a bias")
        .1;
    for (b, &p) in bias.data_mut().iter_mut().zip(pre.data()) {
        if p.abs() < MARGIN {
            *b += if p >= 0.0 { MARGIN } else { -MARGIN };
        }
    }
}
