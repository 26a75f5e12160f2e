//! Hand-differentiated layers.
//!
//! Activations are laid out `[N, C, D, H, W]` for volumes and `[N, C, H, W]`
//! for images; 2-D convolution and pooling run through the 3-D kernels with a
//! unit depth. All kernels use cross-correlation (no kernel flip).

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{NnError, Scalar, Tensor};

/// Whether a forward pass should update batch statistics and keep the
/// activations needed by `backward`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Fully connected layer: `out = input · W + b`, `W` stored `[in, out]`.
#[derive(Clone, Debug)]
pub struct Linear<T: Scalar> {
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
    input: Option<Tensor<T>>,
}

impl<T: Scalar> Linear<T> {
    pub fn new(in_dim: usize, out_dim: usize) -> Self {
        Self {
            weight: Tensor::zeros(&[in_dim, out_dim]),
            bias: Tensor::zeros(&[out_dim]),
            input: None,
        }
    }

    /// He-normal weights, zero bias.
    pub fn init<R: Rng>(&mut self, rng: &mut R) {
        let fan_in = self.in_dim();
        he_normal(self.weight.data_mut(), fan_in, rng);
        self.bias.data_mut().fill(T::zero());
    }

    pub fn in_dim(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn out_dim(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn forward(&mut self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>, NnError> {
        let (n, din, dout) = (x.batch(), self.in_dim(), self.out_dim());
        if x.shape().len() != 2 || x.shape()[1] != din {
            return Err(NnError::ShapeMismatch(format!(
                "linear expects [N, {din}], got {:?}",
                x.shape()
            )));
        }
        let mut out = Tensor::zeros(&[n, dout]);
        for row in out.data_mut().chunks_exact_mut(dout) {
            row.copy_from_slice(self.bias.data());
        }
        T::gemm(
            n,
            din,
            dout,
            T::one(),
            x.data(),
            din as isize,
            1,
            self.weight.data(),
            dout as isize,
            1,
            T::one(),
            out.data_mut(),
            dout as isize,
            1,
        );
        self.input = (mode == Mode::Train).then(|| x.clone());
        Ok(out)
    }

    pub fn backward(
        &mut self,
        grad: &Tensor<T>,
        params: bool,
        input_grad: bool,
    ) -> Result<Option<Tensor<T>>, NnError> {
        let x = self.input.as_ref().ok_or(NnError::NoForwardCache)?;
        let (n, din, dout) = (x.batch(), self.in_dim(), self.out_dim());
        if grad.shape() != [n, dout] {
            return Err(NnError::ShapeMismatch(format!(
                "linear grad expects [{n}, {dout}], got {:?}",
                grad.shape()
            )));
        }
        if params {
            T::gemm(
                din,
                n,
                dout,
                T::one(),
                x.data(),
                1,
                din as isize,
                grad.data(),
                dout as isize,
                1,
                T::one(),
                self.weight.grad_mut(),
                dout as isize,
                1,
            );
            let gb = self.bias.grad_mut();
            for row in grad.data().chunks_exact(dout) {
                for (g, &r) in gb.iter_mut().zip(row) {
                    *g += r;
                }
            }
        }
        if !input_grad {
            return Ok(None);
        }
        let mut dx = Tensor::zeros(&[n, din]);
        T::gemm(
            n,
            dout,
            din,
            T::one(),
            grad.data(),
            dout as isize,
            1,
            self.weight.data(),
            1,
            dout as isize,
            T::zero(),
            dx.data_mut(),
            din as isize,
            1,
        );
        Ok(Some(dx))
    }
}

/// Valid (no padding), stride-1 convolution over 2-D or 3-D inputs.
#[derive(Clone, Debug)]
pub struct Conv<T: Scalar> {
    pub rank: usize,
    pub kernel: usize,
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
    input: Option<Tensor<T>>,
}

impl<T: Scalar> Conv<T> {
    pub fn new(rank: usize, c_in: usize, c_out: usize, kernel: usize) -> Self {
        assert!(rank == 2 || rank == 3, "conv rank must be 2 or 3");
        let mut wshape = vec![c_out, c_in];
        wshape.extend(std::iter::repeat_n(kernel, rank));
        Self {
            rank,
            kernel,
            weight: Tensor::zeros(&wshape),
            bias: Tensor::zeros(&[c_out]),
            input: None,
        }
    }

    pub fn init<R: Rng>(&mut self, rng: &mut R) {
        let fan_in = self.c_in() * self.kernel.pow(self.rank as u32);
        he_normal(self.weight.data_mut(), fan_in, rng);
        self.bias.data_mut().fill(T::zero());
    }

    pub fn c_in(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn c_out(&self) -> usize {
        self.weight.shape()[0]
    }

    fn kdims(&self) -> [usize; 3] {
        let k = self.kernel;
        if self.rank == 2 {
            [1, k, k]
        } else {
            [k, k, k]
        }
    }

    pub fn forward(&mut self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>, NnError> {
        let geo = self.geometry(x.shape())?;
        let n = x.batch();
        let (c_out, ck, v) = (self.c_out(), geo.ck, geo.out_vox);
        let mut out = Tensor::zeros(&out_shape(n, c_out, geo.out, self.rank));
        let mut cols = vec![T::zero(); ck * v];
        let in_stride = x.per_sample();
        for s in 0..n {
            im2col(&x.data()[s * in_stride..(s + 1) * in_stride], &geo, &mut cols);
            let o = &mut out.data_mut()[s * c_out * v..(s + 1) * c_out * v];
            for (co, plane) in o.chunks_exact_mut(v).enumerate() {
                plane.fill(self.bias.data()[co]);
            }
            T::gemm(
                c_out,
                ck,
                v,
                T::one(),
                self.weight.data(),
                ck as isize,
                1,
                &cols,
                v as isize,
                1,
                T::one(),
                o,
                v as isize,
                1,
            );
        }
        self.input = (mode == Mode::Train).then(|| x.clone());
        Ok(out)
    }

    pub fn backward(
        &mut self,
        grad: &Tensor<T>,
        params: bool,
        input_grad: bool,
    ) -> Result<Option<Tensor<T>>, NnError> {
        let x = self.input.take().ok_or(NnError::NoForwardCache)?;
        let geo = self.geometry(x.shape())?;
        let n = x.batch();
        let (c_out, ck, v) = (self.c_out(), geo.ck, geo.out_vox);
        if grad.len() != n * c_out * v {
            self.input = Some(x);
            return Err(NnError::ShapeMismatch(format!(
                "conv grad has {} values, expected {}",
                grad.len(),
                n * c_out * v
            )));
        }
        let in_stride = x.per_sample();
        let mut cols = vec![T::zero(); ck * v];
        let mut dx = input_grad.then(|| Tensor::zeros(x.shape()));
        for s in 0..n {
            let g = &grad.data()[s * c_out * v..(s + 1) * c_out * v];
            if params {
                im2col(&x.data()[s * in_stride..(s + 1) * in_stride], &geo, &mut cols);
                T::gemm(
                    c_out,
                    v,
                    ck,
                    T::one(),
                    g,
                    v as isize,
                    1,
                    &cols,
                    1,
                    v as isize,
                    T::one(),
                    self.weight.grad_mut(),
                    ck as isize,
                    1,
                );
                let gb = self.bias.grad_mut();
                for (co, plane) in g.chunks_exact(v).enumerate() {
                    gb[co] += plane.iter().copied().sum::<T>();
                }
            }
            if let Some(dx) = dx.as_mut() {
                T::gemm(
                    ck,
                    c_out,
                    v,
                    T::one(),
                    self.weight.data(),
                    1,
                    ck as isize,
                    g,
                    v as isize,
                    1,
                    T::zero(),
                    &mut cols,
                    v as isize,
                    1,
                );
                col2im_add(
                    &cols,
                    &geo,
                    &mut dx.data_mut()[s * in_stride..(s + 1) * in_stride],
                );
            }
        }
        self.input = Some(x);
        Ok(dx)
    }

    fn geometry(&self, shape: &[usize]) -> Result<ConvGeometry, NnError> {
        let dims = spatial_dims(shape, self.rank)?;
        if shape[1] != self.c_in() {
            return Err(NnError::ShapeMismatch(format!(
                "conv expects {} input channels, got {:?}",
                self.c_in(),
                shape
            )));
        }
        let k = self.kdims();
        if dims.iter().zip(k).any(|(&d, k)| d < k) {
            return Err(NnError::ShapeMismatch(format!(
                "conv kernel {} larger than input {:?}",
                self.kernel, shape
            )));
        }
        let out = [dims[0] - k[0] + 1, dims[1] - k[1] + 1, dims[2] - k[2] + 1];
        Ok(ConvGeometry {
            c_in: self.c_in(),
            dims,
            k,
            out,
            ck: self.c_in() * k[0] * k[1] * k[2],
            out_vox: out[0] * out[1] * out[2],
        })
    }
}

struct ConvGeometry {
    c_in: usize,
    dims: [usize; 3],
    k: [usize; 3],
    out: [usize; 3],
    ck: usize,
    out_vox: usize,
}

/// Rows are `(c, kz, ky, kx)`, columns are output voxels in z-y-x order.
fn im2col<T: Scalar>(x: &[T], g: &ConvGeometry, cols: &mut [T]) {
    let [d, h, w] = g.dims;
    let [kd, kh, kw] = g.k;
    let [od, oh, ow] = g.out;
    let v = g.out_vox;
    let mut row = 0;
    for c in 0..g.c_in {
        let xc = &x[c * d * h * w..(c + 1) * d * h * w];
        for kz in 0..kd {
            for ky in 0..kh {
                for kx in 0..kw {
                    let dst = &mut cols[row * v..(row + 1) * v];
                    let mut j = 0;
                    for oz in 0..od {
                        for oy in 0..oh {
                            let src = ((oz + kz) * h + oy + ky) * w + kx;
                            dst[j..j + ow].copy_from_slice(&xc[src..src + ow]);
                            j += ow;
                        }
                    }
                    row += 1;
                }
            }
        }
    }
}

fn col2im_add<T: Scalar>(cols: &[T], g: &ConvGeometry, dx: &mut [T]) {
    let [d, h, w] = g.dims;
    let [kd, kh, kw] = g.k;
    let [od, oh, ow] = g.out;
    let v = g.out_vox;
    let mut row = 0;
    for c in 0..g.c_in {
        let xc = &mut dx[c * d * h * w..(c + 1) * d * h * w];
        for kz in 0..kd {
            for ky in 0..kh {
                for kx in 0..kw {
                    let srcrow = &cols[row * v..(row + 1) * v];
                    let mut j = 0;
                    for oz in 0..od {
                        for oy in 0..oh {
                            let dst = ((oz + kz) * h + oy + ky) * w + kx;
                            for (a, &b) in xc[dst..dst + ow].iter_mut().zip(&srcrow[j..j + ow]) {
                                *a += b;
                            }
                            j += ow;
                        }
                    }
                    row += 1;
                }
            }
        }
    }
}

/// Per-channel batch normalization over the batch and spatial axes.
#[derive(Clone, Debug)]
pub struct BatchNorm<T: Scalar> {
    pub gamma: Tensor<T>,
    pub beta: Tensor<T>,
    pub running_mean: Tensor<T>,
    pub running_var: Tensor<T>,
    pub momentum: f64,
    pub eps: f64,
    cache: Option<BnCache<T>>,
}

#[derive(Clone, Debug)]
struct BnCache<T> {
    xhat: Vec<T>,
    inv_std: Vec<T>,
    shape: Vec<usize>,
    /// Normalized with running statistics (frozen layer); backward is affine.
    fixed_stats: bool,
}

impl<T: Scalar> BatchNorm<T> {
    pub fn new(channels: usize) -> Self {
        Self {
            gamma: Tensor::filled(&[channels], T::one()),
            beta: Tensor::zeros(&[channels]),
            running_mean: Tensor::zeros(&[channels]),
            running_var: Tensor::filled(&[channels], T::one()),
            momentum: 0.1,
            eps: 1e-5,
            cache: None,
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    /// `fixed_stats` normalizes with the running statistics even in training
    /// mode and leaves them untouched; used for frozen layers.
    pub fn forward(
        &mut self,
        x: &Tensor<T>,
        mode: Mode,
        fixed_stats: bool,
    ) -> Result<Tensor<T>, NnError> {
        let shape = x.shape();
        let c = self.channels();
        if shape.len() < 2 || shape[1] != c {
            return Err(NnError::ShapeMismatch(format!(
                "batchnorm expects [N, {c}, ...], got {shape:?}"
            )));
        }
        let n = shape[0];
        let s: usize = shape[2..].iter().product();
        let use_batch = mode == Mode::Train && !fixed_stats;
        if use_batch && n < 2 {
            return Err(NnError::BatchTooSmall(n));
        }
        let m = (n * s) as f64;
        let mut mean = vec![0.0f64; c];
        let mut var = vec![0.0f64; c];
        if use_batch {
            for b in 0..n {
                for ch in 0..c {
                    let plane = &x.data()[(b * c + ch) * s..(b * c + ch + 1) * s];
                    mean[ch] += plane.iter().map(|v| v.as_f64()).sum::<f64>();
                }
            }
            mean.iter_mut().for_each(|v| *v /= m);
            for b in 0..n {
                for ch in 0..c {
                    let plane = &x.data()[(b * c + ch) * s..(b * c + ch + 1) * s];
                    var[ch] += plane
                        .iter()
                        .map(|v| (v.as_f64() - mean[ch]).powi(2))
                        .sum::<f64>();
                }
            }
            var.iter_mut().for_each(|v| *v /= m);
            let mom = self.momentum;
            let unbias = if m > 1.0 { m / (m - 1.0) } else { 1.0 };
            for ch in 0..c {
                let rm = &mut self.running_mean.data_mut()[ch];
                *rm = T::from_f64((1.0 - mom) * rm.as_f64() + mom * mean[ch]);
                let rv = &mut self.running_var.data_mut()[ch];
                *rv = T::from_f64((1.0 - mom) * rv.as_f64() + mom * var[ch] * unbias);
            }
        } else {
            for ch in 0..c {
                mean[ch] = self.running_mean.data()[ch].as_f64();
                var[ch] = self.running_var.data()[ch].as_f64();
            }
        }
        let inv_std: Vec<T> = var
            .iter()
            .map(|&v| T::from_f64(1.0 / (v + self.eps).sqrt()))
            .collect();
        let mean_t: Vec<T> = mean.iter().map(|&v| T::from_f64(v)).collect();
        let mut out = Tensor::zeros(shape);
        let mut xhat = if mode == Mode::Train {
            vec![T::zero(); x.len()]
        } else {
            Vec::new()
        };
        for b in 0..n {
            for ch in 0..c {
                let range = (b * c + ch) * s..(b * c + ch + 1) * s;
                let (g, bt) = (self.gamma.data()[ch], self.beta.data()[ch]);
                let (mu, is) = (mean_t[ch], inv_std[ch]);
                let src = &x.data()[range.clone()];
                let dst = &mut out.data_mut()[range.clone()];
                if xhat.is_empty() {
                    for (o, &v) in dst.iter_mut().zip(src) {
                        *o = g * ((v - mu) * is) + bt;
                    }
                } else {
                    let xh = &mut xhat[range];
                    for ((o, h), &v) in dst.iter_mut().zip(xh.iter_mut()).zip(src) {
                        *h = (v - mu) * is;
                        *o = g * *h + bt;
                    }
                }
            }
        }
        self.cache = (mode == Mode::Train).then(|| BnCache {
            xhat,
            inv_std,
            shape: shape.to_vec(),
            fixed_stats: !use_batch,
        });
        Ok(out)
    }

    pub fn backward(
        &mut self,
        grad: &Tensor<T>,
        params: bool,
        input_grad: bool,
    ) -> Result<Option<Tensor<T>>, NnError> {
        let cache = self.cache.as_ref().ok_or(NnError::NoForwardCache)?;
        if grad.shape() != cache.shape.as_slice() {
            return Err(NnError::ShapeMismatch(format!(
                "batchnorm grad {:?} vs input {:?}",
                grad.shape(),
                cache.shape
            )));
        }
        let c = self.channels();
        let n = cache.shape[0];
        let s: usize = cache.shape[2..].iter().product();
        let mut sum_dy = vec![0.0f64; c];
        let mut sum_dy_xhat = vec![0.0f64; c];
        for b in 0..n {
            for ch in 0..c {
                let range = (b * c + ch) * s..(b * c + ch + 1) * s;
                for (&dy, &xh) in grad.data()[range.clone()].iter().zip(&cache.xhat[range]) {
                    sum_dy[ch] += dy.as_f64();
                    sum_dy_xhat[ch] += (dy * xh).as_f64();
                }
            }
        }
        if params {
            let gg = self.gamma.grad_mut();
            for ch in 0..c {
                gg[ch] += T::from_f64(sum_dy_xhat[ch]);
            }
            let gb = self.beta.grad_mut();
            for ch in 0..c {
                gb[ch] += T::from_f64(sum_dy[ch]);
            }
        }
        if !input_grad {
            return Ok(None);
        }
        let m = (n * s) as f64;
        let mut dx = Tensor::zeros(&cache.shape);
        for b in 0..n {
            for ch in 0..c {
                let range = (b * c + ch) * s..(b * c + ch + 1) * s;
                let scale = self.gamma.data()[ch] * cache.inv_std[ch];
                let dst = &mut dx.data_mut()[range.clone()];
                let dy = &grad.data()[range.clone()];
                if cache.fixed_stats {
                    for (o, &g) in dst.iter_mut().zip(dy) {
                        *o = scale * g;
                    }
                } else {
                    let mean_dy = T::from_f64(sum_dy[ch] / m);
                    let mean_dy_xhat = T::from_f64(sum_dy_xhat[ch] / m);
                    for ((o, &g), &xh) in dst.iter_mut().zip(dy).zip(&cache.xhat[range]) {
                        *o = scale * (g - mean_dy - xh * mean_dy_xhat);
                    }
                }
            }
        }
        Ok(Some(dx))
    }
}

/// `max(0, x)`; the subgradient at exactly zero is zero.
#[derive(Clone, Debug, Default)]
pub struct Relu {
    mask: Option<Vec<bool>>,
}

impl Relu {
    pub fn forward<T: Scalar>(&mut self, x: &Tensor<T>, mode: Mode) -> Tensor<T> {
        let mut out = x.clone();
        out.clear_grad();
        for v in out.data_mut() {
            if !(*v > T::zero()) {
                *v = T::zero();
            }
        }
        self.mask = (mode == Mode::Train).then(|| x.data().iter().map(|&v| v > T::zero()).collect());
        out
    }

    pub fn backward<T: Scalar>(&mut self, grad: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let mask = self.mask.as_ref().ok_or(NnError::NoForwardCache)?;
        if mask.len() != grad.len() {
            return Err(NnError::ShapeMismatch("relu grad length".into()));
        }
        let mut dx = grad.clone();
        dx.clear_grad();
        for (g, &m) in dx.data_mut().iter_mut().zip(mask) {
            if !m {
                *g = T::zero();
            }
        }
        Ok(dx)
    }
}

/// Window max pooling with floor output size; ties go to the lowest flat
/// input index in the window.
#[derive(Clone, Debug)]
pub struct MaxPool {
    pub rank: usize,
    pub size: usize,
    pub stride: usize,
    argmax: Option<(Vec<u32>, Vec<usize>)>,
}

impl MaxPool {
    pub fn new(rank: usize, size: usize, stride: usize) -> Self {
        assert!(rank == 2 || rank == 3, "pool rank must be 2 or 3");
        assert!(size > 0 && stride > 0, "pool size and stride must be positive");
        Self {
            rank,
            size,
            stride,
            argmax: None,
        }
    }

    fn window(&self) -> [usize; 3] {
        if self.rank == 2 {
            [1, self.size, self.size]
        } else {
            [self.size; 3]
        }
    }

    fn strides(&self) -> [usize; 3] {
        if self.rank == 2 {
            [1, self.stride, self.stride]
        } else {
            [self.stride; 3]
        }
    }

    pub fn output_dims(&self, dims: [usize; 3]) -> Result<[usize; 3], NnError> {
        let (w, t) = (self.window(), self.strides());
        let mut out = [0; 3];
        for a in 0..3 {
            if dims[a] < w[a] {
                return Err(NnError::ShapeMismatch(format!(
                    "pool window {} larger than input {:?}",
                    self.size, dims
                )));
            }
            out[a] = (dims[a] - w[a]) / t[a] + 1;
        }
        Ok(out)
    }

    pub fn forward<T: Scalar>(&mut self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>, NnError> {
        let dims = spatial_dims(x.shape(), self.rank)?;
        let od = self.output_dims(dims)?;
        let (n, c) = (x.shape()[0], x.shape()[1]);
        let (w, t) = (self.window(), self.strides());
        let in_vox = dims[0] * dims[1] * dims[2];
        let out_vox = od[0] * od[1] * od[2];
        let mut out = Tensor::zeros(&out_shape(n, c, od, self.rank));
        let keep = mode == Mode::Train;
        let mut arg = if keep { vec![0u32; n * c * out_vox] } else { Vec::new() };
        for plane in 0..n * c {
            let src = &x.data()[plane * in_vox..(plane + 1) * in_vox];
            let mut o = plane * out_vox;
            for oz in 0..od[0] {
                for oy in 0..od[1] {
                    for ox in 0..od[2] {
                        let (z0, y0, x0) = (oz * t[0], oy * t[1], ox * t[2]);
                        let mut best_i = (z0 * dims[1] + y0) * dims[2] + x0;
                        let mut best = src[best_i];
                        for z in z0..z0 + w[0] {
                            for y in y0..y0 + w[1] {
                                let base = (z * dims[1] + y) * dims[2];
                                for xx in x0..x0 + w[2] {
                                    let v = src[base + xx];
                                    if v > best {
                                        best = v;
                                        best_i = base + xx;
                                    }
                                }
                            }
                        }
                        out.data_mut()[o] = best;
                        if keep {
                            arg[o] = best_i as u32;
                        }
                        o += 1;
                    }
                }
            }
        }
        self.argmax = keep.then(|| (arg, x.shape().to_vec()));
        Ok(out)
    }

    /// Routes each output gradient to its window's stored argmax.
    pub fn backward<T: Scalar>(&mut self, grad: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let (arg, in_shape) = self.argmax.as_ref().ok_or(NnError::NoForwardCache)?;
        if arg.len() != grad.len() {
            return Err(NnError::ShapeMismatch("pool grad length".into()));
        }
        let in_vox: usize = in_shape[2..].iter().product();
        let planes = in_shape[0] * in_shape[1];
        let out_vox = arg.len() / planes.max(1);
        let mut dx = Tensor::zeros(in_shape);
        for p in 0..planes {
            for o in p * out_vox..(p + 1) * out_vox {
                dx.data_mut()[p * in_vox + arg[o] as usize] += grad.data()[o];
            }
        }
        Ok(dx)
    }

    /// Stored argmax flat indices (within each input plane) of the last
    /// training-mode forward.
    pub fn argmax(&self) -> Option<&[u32]> {
        self.argmax.as_ref().map(|(a, _)| a.as_slice())
    }
}

/// Collapses all non-batch axes.
#[derive(Clone, Debug, Default)]
pub struct Flatten {
    in_shape: Option<Vec<usize>>,
}

impl Flatten {
    pub fn forward<T: Scalar>(&mut self, x: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        self.in_shape = Some(x.shape().to_vec());
        let mut out = x.clone();
        out.clear_grad();
        out.reshape(&[x.batch(), x.per_sample()])
    }

    pub fn backward<T: Scalar>(&mut self, grad: &Tensor<T>) -> Result<Tensor<T>, NnError> {
        let shape = self.in_shape.as_ref().ok_or(NnError::NoForwardCache)?;
        grad.clone().reshape(shape)
    }
}

fn spatial_dims(shape: &[usize], rank: usize) -> Result<[usize; 3], NnError> {
    match (rank, shape.len()) {
        (3, 5) => Ok([shape[2], shape[3], shape[4]]),
        (2, 4) => Ok([1, shape[2], shape[3]]),
        _ => Err(NnError::ShapeMismatch(format!(
            "rank-{rank} layer cannot take input of shape {shape:?}"
        ))),
    }
}

fn out_shape(n: usize, c: usize, od: [usize; 3], rank: usize) -> Vec<usize> {
    if rank == 2 {
        vec![n, c, od[1], od[2]]
    } else {
        vec![n, c, od[0], od[1], od[2]]
    }
}

fn he_normal<T: Scalar, R: Rng>(w: &mut [T], fan_in: usize, rng: &mut R) {
    let std = (2.0 / fan_in.max(1) as f64).sqrt();
    let dist = Normal::new(0.0, std).expect("finite std");
    for v in w {
        *v = T::from_f64(dist.sample(rng));
    }
}
