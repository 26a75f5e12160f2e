use rayon::prelude::*;

use crate::datasets::SampleSource;
use crate::nn::Tensor;

use super::ModelError;

/// How stored samples become network inputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InputTransform {
    Identity,
    /// Equal-interval sampling of every channel of a cubic volume down to
    /// `target^3`, offset by half the step.
    Downsample { target: usize },
}

impl InputTransform {
    pub fn output_len(&self, dims: [usize; 3], channels: usize) -> Result<usize, ModelError> {
        match *self {
            Self::Identity => Ok(dims.iter().product::<usize>() * channels),
            Self::Downsample { target } => {
                if dims[0] != dims[1] || dims[1] != dims[2] || target == 0 || !dims[0].is_multiple_of(target) {
                    return Err(ModelError::VariantMismatch(format!(
                        "cannot sample {dims:?} down to {target}^3"
                    )));
                }
                Ok(target.pow(3) * channels)
            }
        }
    }

    /// `src` holds `channels` planes of `dims`; writes the transformed
    /// sample to `out`.
    pub fn apply(&self, src: &[f32], dims: [usize; 3], channels: usize, out: &mut [f32]) {
        match *self {
            Self::Identity => out.copy_from_slice(src),
            Self::Downsample { target } => {
                let r = dims[0];
                let s = r / target;
                let off = s / 2;
                let mut o = 0;
                for c in 0..channels {
                    let plane = &src[c * r * r * r..(c + 1) * r * r * r];
                    for z in 0..target {
                        for y in 0..target {
                            for x in 0..target {
                                out[o] = plane[(x * s + off) + r * ((y * s + off) + r * (z * s + off))];
                                o += 1;
                            }
                        }
                    }
                }
            }
        }
    }

    pub fn to_text(&self) -> String {
        match self {
            Self::Identity => "identity".into(),
            Self::Downsample { target } => format!("downsample:{target}"),
        }
    }

    pub fn parse(s: &str) -> Result<Self, ModelError> {
        match s.split_once(':') {
            None if s == "identity" => Ok(Self::Identity),
            Some(("downsample", t)) => t
                .parse()
                .map(|target| Self::Downsample { target })
                .map_err(|_| ModelError::Config(format!("bad input transform {s:?}"))),
            _ => Err(ModelError::Config(format!("bad input transform {s:?}"))),
        }
    }
}

/// Fetches `indices` from `source`, transforms each sample, and stacks them
/// as `[N, ...input_shape]`. Also returns the labels.
pub fn batch_tensor<S: SampleSource + ?Sized>(
    source: &S,
    indices: &[usize],
    transform: InputTransform,
    input_shape: &[usize],
) -> Result<(Tensor<f32>, Vec<usize>), ModelError> {
    let (dims, channels) = (source.dims(), source.channels());
    let per = transform.output_len(dims, channels)?;
    let want: usize = input_shape.iter().product();
    if per != want {
        return Err(ModelError::VariantMismatch(format!(
            "samples give {per} inputs per example, network expects {input_shape:?}"
        )));
    }
    let raw_len = source.sample_len();
    let mut data = vec![0.0f32; per * indices.len()];
    let labels: Vec<usize> = data
        .par_chunks_mut(per.max(1))
        .zip(indices.par_iter())
        .map_init(
            || vec![0.0f32; raw_len],
            |raw, (out, &i)| {
                let label = source.fetch(i, raw)?;
                transform.apply(raw, dims, channels, out);
                Ok(label as usize)
            },
        )
        .collect::<Result<_, crate::datasets::DatasetError>>()?;
    let mut shape = vec![indices.len()];
    shape.extend_from_slice(input_shape);
    Ok((Tensor::from_vec(&shape, data)?, labels))
}
