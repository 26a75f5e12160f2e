use crate::nn::{ArchSpec, LayerSpec};

use super::ModelError;

pub const FCNET_HIDDEN: [usize; 2] = [256, 128];
pub const STAGE2_HEAD_HIDDEN: usize = 128;
pub const STAGE3_HEAD_HIDDEN: usize = 256;
/// Side length of the stage-1 input volume.
pub const STAGE1_RESOLUTION: usize = 8;

/// Three linear layers: 8^3 inputs, two hidden layers, class logits.
pub fn build_fcnet(class_count: usize) -> ArchSpec {
    build_fcnet_with_input(STAGE1_RESOLUTION.pow(3), class_count)
}

pub fn build_fcnet_with_input(input: usize, class_count: usize) -> ArchSpec {
    let [h1, h2] = FCNET_HIDDEN;
    let mut a = ArchSpec::new("fcnet", &[input]);
    a.push("fc1", LayerSpec::Linear { d_in: input, d_out: h1 })
        .push("relu1", LayerSpec::Relu)
        .push("fc2", LayerSpec::Linear { d_in: h1, d_out: h2 })
        .push("relu2", LayerSpec::Relu)
        .push("fc3", LayerSpec::Linear { d_in: h2, d_out: class_count });
    a
}

fn conv_block(a: &mut ArchSpec, name: &str, c_in: usize, c_out: usize, pool: bool) {
    a.push(&format!("{name}.conv"), LayerSpec::Conv { rank: 3, c_in, c_out, kernel: 3 })
        .push(&format!("{name}.bn"), LayerSpec::BatchNorm { channels: c_out })
        .push(&format!("{name}.relu"), LayerSpec::Relu);
    if pool {
        a.push(&format!("{name}.pool"), LayerSpec::MaxPool { rank: 3, size: 2, stride: 2 });
    }
}

fn head(a: &mut ArchSpec, d_in: usize, hidden: usize, class_count: usize) {
    a.push("flatten", LayerSpec::Flatten)
        .push("head.fc1", LayerSpec::Linear { d_in, d_out: hidden })
        .push("head.relu", LayerSpec::Relu)
        .push("head.fc2", LayerSpec::Linear { d_in: hidden, d_out: class_count });
}

/// Two conv blocks form the shared trunk (64^3 -> 14^3 x 32), then a size-3
/// pool (-> 4^3 x 32) and a one-hidden-layer head.
///
/// At 32^3 the second block has no pool, giving a 13^3 x 32 trunk and the
/// same 4^3 x 32 head input. This smaller variant is meant for 3-D MNIST.
pub fn build_stage2(class_count: usize, resolution: usize, channels: usize) -> Result<ArchSpec, ModelError> {
    let second_pool = match resolution {
        64 => true,
        32 => false,
        r => return Err(ModelError::UnsupportedResolution(r)),
    };
    let mut a = ArchSpec::new(&format!("stage2-r{resolution}"), &[channels, resolution, resolution, resolution]);
    conv_block(&mut a, "block1", channels, 32, true);
    conv_block(&mut a, "block2", 32, 32, second_pool);
    a.trunk_end = Some(a.layers.len());
    a.push("pool", LayerSpec::MaxPool { rank: 3, size: 3, stride: 3 });
    let flat: usize = trace_last(&a)?.iter().product();
    head(&mut a, flat, STAGE2_HEAD_HIDDEN, class_count);
    Ok(a)
}

fn trace_last(a: &ArchSpec) -> Result<Vec<usize>, ModelError> {
    a.output_shape()
        .map_err(|e| ModelError::TrunkShapeMismatch(e.to_string()))
}

/// Copies the stage-2 trunk layers (same names, so parameters can be
/// shared), then two doubling conv blocks and a one-hidden-layer head.
pub fn build_stage3(class_count: usize, stage2: &ArchSpec) -> Result<ArchSpec, ModelError> {
    let k = stage2
        .trunk_end
        .ok_or_else(|| ModelError::TrunkShapeMismatch("stage 2 declares no trunk".into()))?;
    let trunk = stage2
        .trunk_output_shape()?
        .ok_or_else(|| ModelError::TrunkShapeMismatch("stage 2 declares no trunk".into()))?;
    if trunk.len() != 4 || trunk[0] != 32 {
        return Err(ModelError::TrunkShapeMismatch(format!(
            "expected a 32-channel volume, got {trunk:?}"
        )));
    }
    let name = stage2.name.replacen("stage2", "stage3", 1);
    let mut a = ArchSpec::new(&name, &stage2.input_shape);
    a.layers = stage2.layers[..k].to_vec();
    a.trunk_end = Some(k);
    conv_block(&mut a, "block3", 32, 64, true);
    conv_block(&mut a, "block4", 64, 128, true);
    let flat: usize = trace_last(&a)?.iter().product();
    head(&mut a, flat, STAGE3_HEAD_HIDDEN, class_count);
    Ok(a)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MnistNet {
    Fc1,
    Fc2,
    Cnn,
}

impl MnistNet {
    pub const ALL: [Self; 3] = [Self::Fc1, Self::Fc2, Self::Cnn];

    pub fn name(self) -> &'static str {
        match self {
            Self::Fc1 => "mnist-fc1",
            Self::Fc2 => "mnist-fc2",
            Self::Cnn => "mnist-cnn",
        }
    }

    pub fn spec(self, class_count: usize) -> ArchSpec {
        let mut a;
        match self {
            Self::Fc1 => {
                a = ArchSpec::new(self.name(), &[784]);
                a.push("fc1", LayerSpec::Linear { d_in: 784, d_out: class_count });
            }
            Self::Fc2 => {
                a = ArchSpec::new(self.name(), &[784]);
                a.push("fc1", LayerSpec::Linear { d_in: 784, d_out: 128 })
                    .push("relu1", LayerSpec::Relu)
                    .push("fc2", LayerSpec::Linear { d_in: 128, d_out: class_count });
            }
            Self::Cnn => {
                a = ArchSpec::new(self.name(), &[1, 28, 28]);
                a.push("conv1", LayerSpec::Conv { rank: 2, c_in: 1, c_out: 16, kernel: 3 })
                    .push("relu1", LayerSpec::Relu)
                    .push("pool1", LayerSpec::MaxPool { rank: 2, size: 2, stride: 2 })
                    .push("conv2", LayerSpec::Conv { rank: 2, c_in: 16, c_out: 32, kernel: 3 })
                    .push("relu2", LayerSpec::Relu)
                    .push("pool2", LayerSpec::MaxPool { rank: 2, size: 2, stride: 2 })
                    .push("flatten", LayerSpec::Flatten)
                    .push("fc1", LayerSpec::Linear { d_in: 32 * 5 * 5, d_out: 128 })
                    .push("relu3", LayerSpec::Relu)
                    .push("fc2", LayerSpec::Linear { d_in: 128, d_out: class_count });
            }
        }
        a
    }
}

impl std::str::FromStr for MnistNet {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|n| n.name() == s)
            .ok_or_else(|| format!("unknown MNIST network {s:?}"))
    }
}

/// The one-layer FC net, the two-layer FC net, and the small 2-D CNN.
pub fn build_mnist_nets(class_count: usize) -> Vec<ArchSpec> {
    MnistNet::ALL.iter().map(|n| n.spec(class_count)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spatial(a: &ArchSpec) -> Vec<usize> {
        let mut v = vec![a.input_shape[1]];
        for (s, (_, l)) in a.trace().unwrap().iter().zip(&a.layers) {
            if matches!(l, LayerSpec::Conv { .. } | LayerSpec::MaxPool { .. }) {
                v.push(s[1]);
            }
        }
        v
    }

    #[test]
    fn fcnet_sizes() {
        let a = build_fcnet(40);
        assert_eq!(a.output_shape().unwrap(), vec![40]);
        assert_eq!(
            a.cost().unwrap().params,
            512 * 256 + 256 + 256 * 128 + 128 + 128 * 40 + 40
        );
        assert_eq!(a.cost().unwrap().params, 169_384);
    }

    #[test]
    fn stage2_trace_at_64() {
        let a = build_stage2(10, 64, 1).unwrap();
        assert_eq!(spatial(&a), vec![64, 62, 31, 29, 14, 4]);
        assert_eq!(a.trunk_output_shape().unwrap(), Some(vec![32, 14, 14, 14]));
        assert_eq!(a.output_shape().unwrap(), vec![10]);
        assert!(matches!(build_stage2(10, 16, 1), Err(ModelError::UnsupportedResolution(16))));
    }

    #[test]
    fn stage3_trace_at_64() {
        let s2 = build_stage2(40, 64, 1).unwrap();
        let s3 = build_stage3(40, &s2).unwrap();
        let k = s3.trunk_end.unwrap();
        let trace = s3.trace().unwrap();
        let after_trunk: Vec<usize> = trace[k..]
            .iter()
            .zip(&s3.layers[k..])
            .filter(|(_, (_, l))| matches!(l, LayerSpec::Conv { .. } | LayerSpec::MaxPool { .. }))
            .map(|(s, _)| s[1])
            .collect();
        assert_eq!(after_trunk, vec![12, 6, 4, 2]);
        let flat = s3.layers.iter().position(|(n, _)| n == "flatten").unwrap();
        assert_eq!(trace[flat - 1], vec![128, 2, 2, 2]);
        assert_eq!(trace[flat], vec![1024]);
        assert_eq!(s3.layers[..k], s2.layers[..k]);
    }

    #[test]
    fn experimental_32_variant() {
        let s2 = build_stage2(10, 32, 1).unwrap();
        assert_eq!(s2.trunk_output_shape().unwrap(), Some(vec![32, 13, 13, 13]));
        assert_eq!(spatial(&s2), vec![32, 30, 15, 13, 4]);
        let s3 = build_stage3(10, &s2).unwrap();
        let flat = s3.layers.iter().position(|(n, _)| n == "flatten").unwrap();
        assert_eq!(s3.trace().unwrap()[flat - 1], vec![128, 1, 1, 1]);
    }

    #[test]
    fn mnist_nets() {
        let nets = build_mnist_nets(10);
        assert_eq!(nets[0].output_shape().unwrap(), vec![10]);
        assert_eq!(nets[1].cost().unwrap().params, 101_770);
        let cnn = &nets[2];
        let convpool: Vec<usize> = cnn
            .trace()
            .unwrap()
            .iter()
            .zip(&cnn.layers)
            .filter(|(_, (_, l))| matches!(l, LayerSpec::Conv { .. } | LayerSpec::MaxPool { .. }))
            .map(|(s, _)| s[1])
            .collect();
        assert_eq!(convpool, vec![26, 13, 11, 5]);
    }
}
