use std::collections::BTreeSet;
use std::ops::Range;

use rand::Rng;

use super::layers::{BatchNorm, Conv, Flatten, Linear, MaxPool, Mode, Relu};
use super::{ArchSpec, LayerSpec, NnError, Scalar, Tensor};

#[derive(Clone, Debug)]
pub enum Layer<T: Scalar> {
    Linear(Linear<T>),
    Conv(Conv<T>),
    BatchNorm(BatchNorm<T>),
    Relu(Relu),
    MaxPool(MaxPool),
    Flatten(Flatten),
}

impl<T: Scalar> Layer<T> {
    fn from_spec(spec: LayerSpec) -> Self {
        match spec {
            LayerSpec::Linear { d_in, d_out } => Layer::Linear(Linear::new(d_in, d_out)),
            LayerSpec::Conv {
                rank,
                c_in,
                c_out,
                kernel,
            } => Layer::Conv(Conv::new(rank, c_in, c_out, kernel)),
            LayerSpec::BatchNorm { channels } => Layer::BatchNorm(BatchNorm::new(channels)),
            LayerSpec::Relu => Layer::Relu(Relu::default()),
            LayerSpec::MaxPool { rank, size, stride } => Layer::MaxPool(MaxPool::new(rank, size, stride)),
            LayerSpec::Flatten => Layer::Flatten(Flatten::default()),
        }
    }

    fn init<R: Rng>(&mut self, rng: &mut R) {
        match self {
            Layer::Linear(l) => l.init(rng),
            Layer::Conv(c) => c.init(rng),
            _ => {}
        }
    }

    fn forward(&mut self, x: &Tensor<T>, mode: Mode, frozen: bool) -> Result<Tensor<T>, NnError> {
        match self {
            Layer::Linear(l) => l.forward(x, mode),
            Layer::Conv(c) => c.forward(x, mode),
            Layer::BatchNorm(b) => b.forward(x, mode, frozen),
            Layer::Relu(r) => Ok(r.forward(x, mode)),
            Layer::MaxPool(p) => p.forward(x, mode),
            Layer::Flatten(f) => f.forward(x),
        }
    }

    fn backward(
        &mut self,
        grad: &Tensor<T>,
        params: bool,
        input_grad: bool,
    ) -> Result<Option<Tensor<T>>, NnError> {
        match self {
            Layer::Linear(l) => l.backward(grad, params, input_grad),
            Layer::Conv(c) => c.backward(grad, params, input_grad),
            Layer::BatchNorm(b) => b.backward(grad, params, input_grad),
            Layer::Relu(r) => r.backward(grad).map(Some),
            Layer::MaxPool(p) => p.backward(grad).map(Some),
            Layer::Flatten(f) => f.backward(grad).map(Some),
        }
    }

    /// Learnable tensors with their suffixes.
    fn params(&self) -> Vec<(&'static str, &Tensor<T>)> {
        match self {
            Layer::Linear(l) => vec![("weight", &l.weight), ("bias", &l.bias)],
            Layer::Conv(c) => vec![("weight", &c.weight), ("bias", &c.bias)],
            Layer::BatchNorm(b) => vec![("gamma", &b.gamma), ("beta", &b.beta)],
            _ => Vec::new(),
        }
    }

    fn params_mut(&mut self) -> Vec<(&'static str, &mut Tensor<T>)> {
        match self {
            Layer::Linear(l) => vec![("weight", &mut l.weight), ("bias", &mut l.bias)],
            Layer::Conv(c) => vec![("weight", &mut c.weight), ("bias", &mut c.bias)],
            Layer::BatchNorm(b) => vec![("gamma", &mut b.gamma), ("beta", &mut b.beta)],
            _ => Vec::new(),
        }
    }

    /// Non-learned state that still has to be saved.
    fn buffers(&self) -> Vec<(&'static str, &Tensor<T>)> {
        match self {
            Layer::BatchNorm(b) => vec![
                ("running_mean", &b.running_mean),
                ("running_var", &b.running_var),
            ],
            _ => Vec::new(),
        }
    }
}

/// A sequential network built from an [`ArchSpec`].
///
/// Parameters are named `<layer>.<suffix>`, e.g. `block1.conv.weight`.
/// Frozen parameters receive no gradient and are never updated; a batch-norm
/// layer whose scale and shift are both frozen also keeps its running
/// statistics fixed.
#[derive(Clone, Debug)]
pub struct Network<T: Scalar = f32> {
    spec: ArchSpec,
    layers: Vec<Layer<T>>,
    frozen: BTreeSet<String>,
}

impl<T: Scalar> Network<T> {
    pub fn new<R: Rng>(spec: ArchSpec, rng: &mut R) -> Result<Self, NnError> {
        let mut net = Self::uninitialized(spec)?;
        for l in &mut net.layers {
            l.init(rng);
        }
        Ok(net)
    }

    /// All weights zero, batch-norm at identity.
    pub fn uninitialized(spec: ArchSpec) -> Result<Self, NnError> {
        spec.trace()?;
        let layers = spec.layers.iter().map(|(_, l)| Layer::from_spec(*l)).collect();
        Ok(Self {
            spec,
            layers,
            frozen: BTreeSet::new(),
        })
    }

    pub fn spec(&self) -> &ArchSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<T>] {
        &mut self.layers
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// Names of learnable parameters in layer order.
    pub fn param_names(&self) -> Vec<String> {
        self.named_params().into_iter().map(|(n, _)| n).collect()
    }

    pub fn named_params(&self) -> Vec<(String, &Tensor<T>)> {
        let mut out = Vec::new();
        for ((lname, _), layer) in self.spec.layers.iter().zip(&self.layers) {
            for (suffix, t) in layer.params() {
                out.push((format!("{lname}.{suffix}"), t));
            }
        }
        out
    }

    pub fn named_params_mut(&mut self) -> Vec<(String, &mut Tensor<T>)> {
        let mut out = Vec::new();
        for ((lname, _), layer) in self.spec.layers.iter().zip(self.layers.iter_mut()) {
            for (suffix, t) in layer.params_mut() {
                out.push((format!("{lname}.{suffix}"), t));
            }
        }
        out
    }

    /// Parameters and buffers: everything a checkpoint stores.
    pub fn named_tensors(&self) -> Vec<(String, &Tensor<T>)> {
        let mut out = Vec::new();
        for ((lname, _), layer) in self.spec.layers.iter().zip(&self.layers) {
            for (suffix, t) in layer.params().into_iter().chain(layer.buffers()) {
                out.push((format!("{lname}.{suffix}"), t));
            }
        }
        out
    }

    pub fn named_tensors_mut(&mut self) -> Vec<(String, &mut Tensor<T>)> {
        let mut out = Vec::new();
        for ((lname, _), layer) in self.spec.layers.iter().zip(self.layers.iter_mut()) {
            let lname = lname.clone();
            let (p, b) = match layer {
                Layer::BatchNorm(bn) => (
                    vec![("gamma", &mut bn.gamma), ("beta", &mut bn.beta)],
                    vec![
                        ("running_mean", &mut bn.running_mean),
                        ("running_var", &mut bn.running_var),
                    ],
                ),
                other => (other.params_mut(), Vec::new()),
            };
            for (suffix, t) in p.into_iter().chain(b) {
                out.push((format!("{lname}.{suffix}"), t));
            }
        }
        out
    }

    /// Names of tensors belonging to the trunk layers `[0, trunk_end)`.
    pub fn trunk_tensor_names(&self) -> Vec<String> {
        let end = self.spec.trunk_end.unwrap_or(0);
        let mut out = Vec::new();
        for ((lname, _), layer) in self.spec.layers[..end].iter().zip(&self.layers) {
            for (suffix, _) in layer.params().into_iter().chain(layer.buffers()) {
                out.push(format!("{lname}.{suffix}"));
            }
        }
        out
    }

    /// Learnable parameters of the trunk layers: what stage 3 freezes.
    pub fn trunk_param_names(&self) -> Vec<String> {
        let end = self.spec.trunk_end.unwrap_or(0);
        let mut out = Vec::new();
        for ((lname, _), layer) in self.spec.layers[..end].iter().zip(&self.layers) {
            for (suffix, _) in layer.params() {
                out.push(format!("{lname}.{suffix}"));
            }
        }
        out
    }

    pub fn set_frozen<I, S>(&mut self, names: I) -> Result<(), NnError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let known: BTreeSet<String> = self.param_names().into_iter().collect();
        let mut frozen = BTreeSet::new();
        for n in names {
            let n = n.as_ref();
            if !known.contains(n) {
                return Err(NnError::UnknownParameter(n.to_string()));
            }
            frozen.insert(n.to_string());
        }
        self.frozen = frozen;
        Ok(())
    }

    pub fn frozen(&self) -> &BTreeSet<String> {
        &self.frozen
    }

    pub fn is_frozen(&self, name: &str) -> bool {
        self.frozen.contains(name)
    }

    fn layer_frozen(&self, i: usize) -> bool {
        let lname = &self.spec.layers[i].0;
        let params = self.layers[i].params();
        !params.is_empty()
            && params
                .iter()
                .all(|(s, _)| self.frozen.contains(&format!("{lname}.{s}")))
    }

    fn layer_trainable(&self, i: usize) -> bool {
        let lname = &self.spec.layers[i].0;
        self.layers[i]
            .params()
            .iter()
            .any(|(s, _)| !self.frozen.contains(&format!("{lname}.{s}")))
    }

    /// Index of the first layer with any trainable parameter.
    fn first_trainable(&self) -> usize {
        (0..self.layers.len())
            .find(|&i| self.layer_trainable(i))
            .unwrap_or(self.layers.len())
    }

    /// Batched input is `[N, ...input_shape]`.
    pub fn forward(&mut self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>, NnError> {
        self.forward_range(x, 0..self.layers.len(), mode)
    }

    /// Runs layers in `range`. In training mode, layers between the first
    /// layer holding parameters and the first trainable one run without
    /// caching activations; a leading parameter-free prefix still caches so
    /// the input gradient stays available.
    pub fn forward_range(
        &mut self,
        x: &Tensor<T>,
        range: Range<usize>,
        mode: Mode,
    ) -> Result<Tensor<T>, NnError> {
        if range.end > self.layers.len() || range.start > range.end {
            return Err(NnError::ShapeMismatch(format!("layer range {range:?} out of bounds")));
        }
        let start_shape = if range.start == 0 {
            self.spec.input_shape.clone()
        } else {
            self.spec.trace()?[range.start - 1].clone()
        };
        if x.shape().len() != start_shape.len() + 1 || x.shape()[1..] != start_shape[..] {
            return Err(NnError::ShapeMismatch(format!(
                "network {} expects [N, {:?}] at layer {}, got {:?}",
                self.spec.name,
                start_shape,
                range.start,
                x.shape()
            )));
        }
        let first_trainable = self.first_trainable();
        let first_with_params = (0..self.layers.len())
            .find(|&i| !self.layers[i].params().is_empty())
            .unwrap_or(self.layers.len());
        let mut cur: Option<Tensor<T>> = None;
        for i in range {
            let frozen = self.layer_frozen(i);
            let m = if mode == Mode::Train && (first_with_params..first_trainable).contains(&i) {
                Mode::Eval
            } else {
                mode
            };
            let input = cur.as_ref().unwrap_or(x);
            let out = self.layers[i].forward(input, m, frozen)?;
            cur = Some(out);
        }
        Ok(cur.unwrap_or_else(|| x.clone()))
    }

    /// Backpropagates `grad` (w.r.t. the network output of the last
    /// training-mode forward), accumulating parameter gradients.
    pub fn backward(&mut self, grad: &Tensor<T>) -> Result<(), NnError> {
        self.backward_to_input(grad, false).map(|_| ())
    }

    /// Like [`backward`](Self::backward) but optionally also returns the
    /// gradient with respect to the network input.
    pub fn backward_to_input(
        &mut self,
        grad: &Tensor<T>,
        want_input_grad: bool,
    ) -> Result<Option<Tensor<T>>, NnError> {
        let stop = if want_input_grad { 0 } else { self.first_trainable() };
        // the input gradient has to pass through frozen layers, which ran uncached
        let mut g = grad.clone();
        for i in (stop..self.layers.len()).rev() {
            let params = self.layer_trainable(i);
            let need_input = i > stop || want_input_grad;
            match self.layers[i].backward(&g, params, need_input)? {
                Some(next) => g = next,
                None => return Ok(None),
            }
        }
        // frozen parameters must not carry stale gradients
        let frozen = self.frozen.clone();
        for (name, t) in self.named_params_mut() {
            if frozen.contains(&name) {
                t.clear_grad();
            }
        }
        Ok(want_input_grad.then_some(g))
    }

    pub fn zero_grad(&mut self) {
        for (_, t) in self.named_params_mut() {
            t.zero_grad();
        }
    }

    pub fn cast<U: Scalar>(&self) -> Network<U> {
        let mut out = Network::<U>::uninitialized(self.spec.clone()).expect("spec already validated");
        let src: Vec<(String, Vec<f64>)> = self
            .named_tensors()
            .into_iter()
            .map(|(n, t)| (n, t.data().iter().map(|v| v.as_f64()).collect()))
            .collect();
        for ((_, dst), (_, vals)) in out.named_tensors_mut().into_iter().zip(src) {
            for (d, v) in dst.data_mut().iter_mut().zip(vals) {
                *d = U::from_f64(v);
            }
        }
        out.frozen = self.frozen.clone();
        out
    }
}
