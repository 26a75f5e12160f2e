use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::datasets::SampleSource;
use crate::nn::loss::{softmax_cross_entropy, softmax_cross_entropy_backward, softmax_row};
use crate::nn::{Layer, Mode, Network, NnError, Sgd, Tensor};

use super::{batch_tensor, InputTransform, ModelError};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    /// Multiply the learning rate by `lr_gamma` every `lr_step` epochs
    /// (0 disables the schedule).
    pub lr_step: usize,
    pub lr_gamma: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            batch_size: 32,
            lr: 0.01,
            momentum: 0.9,
            weight_decay: 1e-4,
            lr_step: 5,
            lr_gamma: 0.1,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn lr_at(&self, epoch: usize) -> f64 {
        match self.lr_step {
            0 => self.lr,
            s => self.lr * self.lr_gamma.powi((epoch / s) as i32),
        }
    }

    fn validate(&self) -> Result<(), ModelError> {
        if self.batch_size == 0 {
            return Err(ModelError::Config("batch size must be positive".into()));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(ModelError::Config("learning rate must be finite and non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_acc: f64,
    pub val_acc: Option<f64>,
    pub loss: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub history: Vec<EpochRecord>,
    /// Epoch whose parameters were kept (best validation accuracy, or best
    /// training accuracy without a validation set).
    pub best_epoch: Option<usize>,
}

impl TrainOutcome {
    pub fn history_csv(&self) -> String {
        let mut s = String::from("epoch,train_acc,val_acc,loss\n");
        for r in &self.history {
            let val = r.val_acc.map_or(String::new(), |v| format!("{v:.6}"));
            s.push_str(&format!("{},{:.6},{},{:.6}\n", r.epoch, r.train_acc, val, r.loss));
        }
        s
    }
}

fn has_batch_norm(net: &Network) -> bool {
    net.layers().iter().any(|l| matches!(l, Layer::BatchNorm(_)))
}

fn snapshot(net: &Network) -> BTreeMap<String, Vec<f32>> {
    net.named_tensors()
        .into_iter()
        .map(|(n, t)| (n, t.data().to_vec()))
        .collect()
}

fn restore(net: &mut Network, snap: &BTreeMap<String, Vec<f32>>) {
    for (n, t) in net.named_tensors_mut() {
        if let Some(v) = snap.get(&n) {
            t.data_mut().copy_from_slice(v);
        }
    }
}

fn argmax(row: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Trains `net` in place with SGD. Parameters named in `frozen` are left
/// bit-unchanged; the parameters of the best epoch are restored at the end.
pub fn train_stage<S, V>(
    net: &mut Network,
    train: &S,
    val: Option<&V>,
    transform: InputTransform,
    config: &TrainConfig,
    frozen: &[String],
) -> Result<TrainOutcome, ModelError>
where
    S: SampleSource + ?Sized,
    V: SampleSource + ?Sized,
{
    config.validate()?;
    net.set_frozen(frozen.iter().cloned()).map_err(|e| match e {
        NnError::UnknownParameter(n) => ModelError::FrozenNameUnknown(n),
        other => other.into(),
    })?;
    let input_shape = net.spec().input_shape.clone();
    let expected: usize = input_shape.iter().product();
    let got = transform.output_len(train.dims(), train.channels())?;
    if got != expected {
        return Err(ModelError::VariantMismatch(format!(
            "{} expects {expected} inputs, data gives {got}",
            net.spec().name
        )));
    }
    let mut history = Vec::new();
    if config.epochs == 0 {
        return Ok(TrainOutcome {
            history,
            best_epoch: None,
        });
    }
    if train.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    let min_batch = if has_batch_norm(net) { 2 } else { 1 };
    let mut opt = Sgd::new(config.lr, config.momentum, config.weight_decay);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut best: Option<(f64, usize, BTreeMap<String, Vec<f32>>)> = None;
    for epoch in 0..config.epochs {
        opt.lr = config.lr_at(epoch);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_mul(1_000_003).wrapping_add(epoch as u64));
        order.shuffle(&mut rng);
        let (mut correct, mut seen, mut loss_sum) = (0usize, 0usize, 0.0f64);
        for chunk in order.chunks(config.batch_size) {
            if chunk.len() < min_batch {
                continue;
            }
            let (x, y) = batch_tensor(train, chunk, transform, &input_shape)?;
            net.zero_grad();
            let logits = net.forward(&x, Mode::Train)?;
            let (loss, probs) = softmax_cross_entropy(&logits, &y)?;
            let c = logits.shape()[1];
            correct += probs
                .data()
                .chunks(c)
                .zip(&y)
                .filter(|(row, &l)| argmax(row) == l)
                .count();
            seen += y.len();
            loss_sum += loss as f64 * y.len() as f64;
            let g = softmax_cross_entropy_backward(&probs, &y)?;
            net.backward(&g)?;
            opt.step(net);
        }
        let train_acc = if seen > 0 { correct as f64 / seen as f64 } else { 0.0 };
        let loss = if seen > 0 { loss_sum / seen as f64 } else { 0.0 };
        let val_acc = match val {
            Some(v) if !v.is_empty() => Some(evaluate_accuracy(net, v, transform, 256)?),
            _ => None,
        };
        log::info!(
            "{} epoch {epoch}: loss {loss:.4} train {train_acc:.4} val {}",
            net.spec().name,
            val_acc.map_or("-".to_string(), |v| format!("{v:.4}"))
        );
        history.push(EpochRecord {
            epoch,
            train_acc,
            val_acc,
            loss,
        });
        let score = val_acc.unwrap_or(train_acc);
        if best.as_ref().is_none_or(|(s, _, _)| score > *s) {
            best = Some((score, epoch, snapshot(net)));
        }
    }
    let (_, best_epoch, snap) = best.expect("at least one epoch ran");
    restore(net, &snap);
    Ok(TrainOutcome {
        history,
        best_epoch: Some(best_epoch),
    })
}

/// Fraction of samples whose arg-max class matches the label (inference mode).
pub fn evaluate_accuracy<S: SampleSource + ?Sized>(
    net: &mut Network,
    source: &S,
    transform: InputTransform,
    batch_size: usize,
) -> Result<f64, ModelError> {
    if source.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    let input_shape = net.spec().input_shape.clone();
    let idx: Vec<usize> = (0..source.len()).collect();
    let mut correct = 0usize;
    for chunk in idx.chunks(batch_size.max(1)) {
        let (x, y) = batch_tensor(source, chunk, transform, &input_shape)?;
        let logits = net.forward(&x, Mode::Eval)?;
        let c = logits.shape()[1];
        correct += logits
            .data()
            .chunks(c)
            .zip(&y)
            .filter(|(row, &l)| argmax(row) == l)
            .count();
    }
    Ok(correct as f64 / source.len() as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub class: usize,
    /// Top-1 softmax probability.
    pub eta: f32,
    pub probs: Vec<f32>,
}

impl Prediction {
    /// Arg-max of a probability row, ties to the lowest class.
    pub fn from_probs(probs: Vec<f32>) -> Self {
        let class = argmax(&probs);
        Self {
            class,
            eta: probs[class],
            probs,
        }
    }

    pub fn from_logits(logits: &[f32]) -> Self {
        let mut probs = vec![0.0; logits.len()];
        softmax_row(logits, &mut probs);
        Self::from_probs(probs)
    }
}

/// Inference-mode prediction for one already-transformed input.
pub fn predict_input(net: &mut Network, input: &[f32]) -> Result<Prediction, ModelError> {
    let mut shape = vec![1];
    shape.extend_from_slice(&net.spec().input_shape);
    let x = Tensor::from_vec(&shape, input.to_vec()).map_err(|_| {
        ModelError::VariantMismatch(format!("{} values for input {:?}", input.len(), net.spec().input_shape))
    })?;
    let logits = net.forward(&x, Mode::Eval)?;
    Ok(Prediction::from_logits(logits.data()))
}

/// Transforms sample `i` of `source` and predicts it.
pub fn predict<S: SampleSource + ?Sized>(
    net: &mut Network,
    source: &S,
    i: usize,
    transform: InputTransform,
) -> Result<(Prediction, u16), ModelError> {
    let input_shape = net.spec().input_shape.clone();
    let (x, y) = batch_tensor(source, &[i], transform, &input_shape)?;
    let logits = net.forward(&x, Mode::Eval)?;
    Ok((Prediction::from_logits(logits.data()), y[0] as u16))
}
