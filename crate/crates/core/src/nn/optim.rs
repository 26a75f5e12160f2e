use std::collections::BTreeMap;

use super::{Network, Scalar};

/// SGD with momentum and L2 weight decay:
/// `v <- mu*v + g + wd*w`, `w <- w - lr*v`.
#[derive(Clone, Debug)]
pub struct Sgd<T: Scalar = f32> {
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    velocity: BTreeMap<String, Vec<T>>,
}

impl<T: Scalar> Sgd<T> {
    pub fn new(lr: f64, momentum: f64, weight_decay: f64) -> Self {
        Self {
            lr,
            momentum,
            weight_decay,
            velocity: BTreeMap::new(),
        }
    }

    pub fn velocity(&self, name: &str) -> Option<&[T]> {
        self.velocity.get(name).map(Vec::as_slice)
    }

    /// Updates every parameter that has a gradient and is not frozen.
    pub fn step(&mut self, net: &mut Network<T>) {
        let (lr, mu, wd) = (T::from_f64(self.lr), T::from_f64(self.momentum), T::from_f64(self.weight_decay));
        let frozen = net.frozen().clone();
        for (name, p) in net.named_params_mut() {
            if frozen.contains(&name) {
                continue;
            }
            let Some(g) = p.grad().map(<[T]>::to_vec) else {
                continue;
            };
            let v = self
                .velocity
                .entry(name)
                .or_insert_with(|| vec![T::zero(); g.len()]);
            for ((w, vi), gi) in p.data_mut().iter_mut().zip(v.iter_mut()).zip(g) {
                *vi = mu * *vi + gi + wd * *w;
                *w = *w - lr * *vi;
            }
        }
    }
}
