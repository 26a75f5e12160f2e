//! Central finite-difference verification of hand-written backward passes.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::loss::{softmax_cross_entropy, softmax_cross_entropy_backward};
use super::{Mode, Network, NnError, Scalar, Tensor};

/// Which scalar a gradient entry belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coord {
    /// `(parameter index in `named_params` order, element)`
    Param(usize, usize),
    Input(usize),
}

#[derive(Clone, Copy, Debug)]
pub struct GradCheckConfig {
    pub epsilon: f64,
    /// Upper bound on checked coordinates per parameter tensor (and for the input).
    pub max_per_tensor: usize,
    pub include_input: bool,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            max_per_tensor: 24,
            include_input: true,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub coords: Vec<Coord>,
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
    pub max_relative_error: f64,
}

/// `max |a - n| / max(max |a|, max |n|)` over the checked coordinates.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff = analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs())
        .fold(0.0, f64::max);
    let scale = analytic
        .iter()
        .chain(numeric)
        .map(|v| v.abs())
        .fold(0.0, f64::max);
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

fn loss_of<T: Scalar>(net: &mut Network<T>, x: &Tensor<T>, labels: &[usize]) -> Result<f64, NnError> {
    let logits = net.forward(x, Mode::Train)?;
    Ok(softmax_cross_entropy(&logits, labels)?.0.as_f64())
}

/// Picks the coordinates to check: a seeded subsample of every parameter
/// tensor and, optionally, of the input.
pub fn sample_coords<T: Scalar>(net: &Network<T>, x: &Tensor<T>, cfg: &GradCheckConfig) -> Vec<Coord> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut coords = Vec::new();
    for (pi, (_, t)) in net.named_params().iter().enumerate() {
        if net.is_frozen(&net.param_names()[pi]) {
            continue;
        }
        let k = cfg.max_per_tensor.min(t.len());
        let mut idx = sample(&mut rng, t.len(), k).into_vec();
        idx.sort_unstable();
        coords.extend(idx.into_iter().map(|e| Coord::Param(pi, e)));
    }
    if cfg.include_input {
        let k = cfg.max_per_tensor.min(x.len());
        let mut idx = sample(&mut rng, x.len(), k).into_vec();
        idx.sort_unstable();
        coords.extend(idx.into_iter().map(Coord::Input));
    }
    coords
}

/// Backprop gradients of the mean softmax cross-entropy at `coords`.
pub fn analytic_gradients<T: Scalar>(
    net: &mut Network<T>,
    x: &Tensor<T>,
    labels: &[usize],
    coords: &[Coord],
) -> Result<Vec<f64>, NnError> {
    net.zero_grad();
    let logits = net.forward(x, Mode::Train)?;
    let (_, probs) = softmax_cross_entropy(&logits, labels)?;
    let g = softmax_cross_entropy_backward(&probs, labels)?;
    let want_input = coords.iter().any(|c| matches!(c, Coord::Input(_)));
    let dx = net.backward_to_input(&g, want_input)?;
    let params = net.named_params();
    Ok(coords
        .iter()
        .map(|c| match *c {
            Coord::Param(p, e) => params[p].1.grad().map_or(0.0, |g| g[e].as_f64()),
            Coord::Input(e) => dx.as_ref().map_or(0.0, |d| d.data()[e].as_f64()),
        })
        .collect())
}

/// Central differences `(L(v+eps) - L(v-eps)) / 2eps` at `coords`.
pub fn numeric_gradients<T: Scalar>(
    net: &mut Network<T>,
    x: &Tensor<T>,
    labels: &[usize],
    coords: &[Coord],
    epsilon: f64,
) -> Result<Vec<f64>, NnError> {
    let mut x = x.clone();
    let mut out = Vec::with_capacity(coords.len());
    for &c in coords {
        let orig = read(net, &x, c);
        write(net, &mut x, c, T::from_f64(orig.as_f64() + epsilon));
        let lp = loss_of(net, &x, labels)?;
        write(net, &mut x, c, T::from_f64(orig.as_f64() - epsilon));
        let lm = loss_of(net, &x, labels)?;
        write(net, &mut x, c, orig);
        out.push((lp - lm) / (2.0 * epsilon));
    }
    Ok(out)
}

fn read<T: Scalar>(net: &Network<T>, x: &Tensor<T>, c: Coord) -> T {
    match c {
        Coord::Param(p, e) => net.named_params()[p].1.data()[e],
        Coord::Input(e) => x.data()[e],
    }
}

fn write<T: Scalar>(net: &mut Network<T>, x: &mut Tensor<T>, c: Coord, v: T) {
    match c {
        Coord::Param(p, e) => net.named_params_mut()[p].1.data_mut()[e] = v,
        Coord::Input(e) => x.data_mut()[e] = v,
    }
}

/// Compares backprop against central differences on a parameter subsample.
/// Runs in training mode (batch statistics) so batch norm is checked as
/// trained.
pub fn gradient_check<T: Scalar>(
    net: &mut Network<T>,
    x: &Tensor<T>,
    labels: &[usize],
    cfg: &GradCheckConfig,
) -> Result<GradCheckReport, NnError> {
    let coords = sample_coords(net, x, cfg);
    let analytic = analytic_gradients(net, x, labels, &coords)?;
    let numeric = numeric_gradients(net, x, labels, &coords, cfg.epsilon)?;
    let max_relative_error = relative_error(&analytic, &numeric);
    Ok(GradCheckReport {
        coords,
        analytic,
        numeric,
        max_relative_error,
    })
}
