use rand::Rng as _;

use super::spec::{build_network_spec, Head, LayerSpec, NetworkSpec, Shape};
use super::Scalar;
use crate::error::{GsgiError, Result};
use crate::rng;

/// Parameter block of one weighted layer: `weights` then `bias`.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Slot {
    offset: usize,
    weights: usize,
    bias: usize,
}

impl Slot {
    fn len(&self) -> usize {
        self.weights + self.bias
    }
}

/// Convolutional network with a flat parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Network<F: Scalar> {
    spec: NetworkSpec,
    shapes: Vec<Shape>,
    slots: Vec<Option<Slot>>,
    /// Main head layer (Q, logits, value or, for dueling, the advantages).
    head: Slot,
    /// State-value layer of a dueling head.
    value: Option<Slot>,
    params: Vec<F>,
}

pub type QNetwork = Network<f32>;

/// Activations recorded by [`Network::forward_cached`] for backpropagation.
#[derive(Clone, Debug)]
pub struct ForwardCache<F> {
    acts: Vec<Vec<F>>,
    pool_argmax: Vec<Vec<usize>>,
    output: Vec<F>,
}

impl<F: Scalar> ForwardCache<F> {
    pub fn output(&self) -> &[F] {
        &self.output
    }
}

/// Gradient aligned with a network's parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<F>(pub Vec<F>);

impl<F: Scalar> Gradients<F> {
    pub fn zeros(n: usize) -> Self {
        Gradients(vec![F::zero(); n])
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|g| g.f64() * g.f64()).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, s: F) {
        self.0.iter_mut().for_each(|g| *g = *g * s);
    }

    pub fn clear(&mut self) {
        self.0.iter_mut().for_each(|g| *g = F::zero());
    }
}

fn softmax<F: Scalar>(z: &[F]) -> Vec<F> {
    let m = z.iter().cloned().fold(F::neg_infinity(), F::max);
    let e: Vec<F> = z.iter().map(|v| (*v - m).exp()).collect();
    let s: F = e.iter().cloned().sum();
    e.into_iter().map(|v| v / s).collect()
}

fn dense_forward<F: Scalar>(p: &[F], slot: Slot, input: &[F], out: &mut Vec<F>) {
    let n_in = input.len();
    let n_out = slot.bias;
    let w = &p[slot.offset..slot.offset + slot.weights];
    let b = &p[slot.offset + slot.weights..slot.offset + slot.len()];
    out.clear();
    for o in 0..n_out {
        let row = &w[o * n_in..(o + 1) * n_in];
        let mut s = b[o];
        for (wi, xi) in row.iter().zip(input) {
            s = s + *wi * *xi;
        }
        out.push(s);
    }
}

fn dense_backward<F: Scalar>(p: &[F], slot: Slot, input: &[F], gout: &[F], grads: &mut [F], gin: &mut [F]) {
    let n_in = input.len();
    let w = &p[slot.offset..slot.offset + slot.weights];
    for (o, go) in gout.iter().enumerate() {
        if go.is_zero() {
            continue;
        }
        grads[slot.offset + slot.weights + o] = grads[slot.offset + slot.weights + o] + *go;
        let gw = &mut grads[slot.offset + o * n_in..slot.offset + (o + 1) * n_in];
        for (g, x) in gw.iter_mut().zip(input) {
            *g = *g + *go * *x;
        }
        for (gi, wi) in gin.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
            *gi = *gi + *go * *wi;
        }
    }
}

impl<F: Scalar> Network<F> {
    /// Network with fan-in scaled uniform weights and zero biases.
    pub fn new(spec: NetworkSpec, seed: u64) -> Result<Self> {
        let mut net = Self::zeros(spec)?;
        let mut rng = rng::stream(seed, "init", 0);
        let blocks: Vec<(Slot, usize)> = net
            .slots
            .iter()
            .zip(net.spec.layers.iter().zip(&net.shapes))
            .filter_map(|(s, (l, shape))| {
                s.map(|s| {
                    let fan_in = match l {
                        LayerSpec::Conv { kernel, .. } => shape.0 * kernel * kernel,
                        _ => shape.0 * shape.1 * shape.2,
                    };
                    (s, fan_in)
                })
            })
            .chain(net.value.map(|v| (v, v.weights)))
            .chain(std::iter::once((net.head, net.head.weights / net.head.bias)))
            .collect();
        for (slot, fan_in) in blocks {
            let bound = (1.0 / fan_in as f64).sqrt();
            for p in &mut net.params[slot.offset..slot.offset + slot.weights] {
                *p = F::of(rng.gen_range(-bound..bound));
            }
        }
        Ok(net)
    }

    pub fn zeros(spec: NetworkSpec) -> Result<Self> {
        let shapes = spec.shapes()?;
        let mut offset = 0;
        let mut slots = Vec::with_capacity(spec.layers.len());
        for (l, shape) in spec.layers.iter().zip(&shapes) {
            let slot = match *l {
                LayerSpec::Conv { filters, kernel, .. } => Some(Slot {
                    offset,
                    weights: filters * shape.0 * kernel * kernel,
                    bias: filters,
                }),
                LayerSpec::Dense { out } => Some(Slot {
                    offset,
                    weights: out * shape.0 * shape.1 * shape.2,
                    bias: out,
                }),
                _ => None,
            };
            if let Some(s) = slot {
                offset += s.len();
            }
            slots.push(slot);
        }
        let body = spec.body_output_len();
        let value = if spec.head == Head::Dueling {
            let v = Slot {
                offset,
                weights: body,
                bias: 1,
            };
            offset += v.len();
            Some(v)
        } else {
            None
        };
        let out = spec.output_len();
        let head = Slot {
            offset,
            weights: out * body,
            bias: out,
        };
        offset += head.len();
        Ok(Network {
            spec,
            shapes,
            slots,
            head,
            value,
            params: vec![F::zero(); offset],
        })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[F] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [F] {
        &mut self.params
    }

    pub fn set_params(&mut self, p: &[F]) -> Result<()> {
        if p.len() != self.params.len() {
            return Err(GsgiError::Shape(format!(
                "expected {} parameters, got {}",
                self.params.len(),
                p.len()
            )));
        }
        self.params.copy_from_slice(p);
        Ok(())
    }

    /// Parameters of the advantage layer of a dueling head.
    pub fn advantage_params_mut(&mut self) -> Option<&mut [F]> {
        self.value?;
        let h = self.head;
        Some(&mut self.params[h.offset..h.offset + h.len()])
    }

    pub fn zero_gradients(&self) -> Gradients<F> {
        Gradients::zeros(self.params.len())
    }

    pub fn cast<G: Scalar>(&self) -> Network<G> {
        Network {
            spec: self.spec.clone(),
            shapes: self.shapes.clone(),
            slots: self.slots.clone(),
            head: self.head,
            value: self.value,
            params: self.params.iter().map(|p| G::of(p.f64())).collect(),
        }
    }

    pub fn forward(&self, input: &[F]) -> Result<Vec<F>> {
        Ok(self.forward_cached(input)?.output)
    }

    pub fn forward_cached(&self, input: &[F]) -> Result<ForwardCache<F>> {
        if input.len() != self.spec.input_len() {
            return Err(GsgiError::Shape(format!(
                "input has {} values, network expects {}",
                input.len(),
                self.spec.input_len()
            )));
        }
        let p = &self.params;
        let mut acts: Vec<Vec<F>> = Vec::with_capacity(self.spec.layers.len() + 1);
        let mut pool_argmax = vec![Vec::new(); self.spec.layers.len()];
        acts.push(input.to_vec());
        for (li, layer) in self.spec.layers.iter().enumerate() {
            let x = &acts[li];
            let (c, h, w) = self.shapes[li];
            let (oc, oh, ow) = self.shapes[li + 1];
            let y = match *layer {
                LayerSpec::Conv { kernel, stride, .. } => {
                    let s = self.slots[li].unwrap();
                    let wts = &p[s.offset..s.offset + s.weights];
                    let bias = &p[s.offset + s.weights..s.offset + s.len()];
                    let mut y = vec![F::zero(); oc * oh * ow];
                    for o in 0..oc {
                        for oy in 0..oh {
                            for ox in 0..ow {
                                let mut acc = bias[o];
                                for i in 0..c {
                                    let wbase = (o * c + i) * kernel * kernel;
                                    for ky in 0..kernel {
                                        let row = (i * h + oy * stride + ky) * w + ox * stride;
                                        let wrow = wbase + ky * kernel;
                                        for kx in 0..kernel {
                                            acc = acc + wts[wrow + kx] * x[row + kx];
                                        }
                                    }
                                }
                                y[(o * oh + oy) * ow + ox] = acc;
                            }
                        }
                    }
                    y
                }
                LayerSpec::Relu => x.iter().map(|v| v.max(F::zero())).collect(),
                LayerSpec::MaxPool { kernel, stride } => {
                    let mut y = Vec::with_capacity(oc * oh * ow);
                    let mut arg = Vec::with_capacity(oc * oh * ow);
                    for ch in 0..c {
                        for oy in 0..oh {
                            for ox in 0..ow {
                                let mut best = (usize::MAX, F::neg_infinity());
                                for ky in 0..kernel {
                                    for kx in 0..kernel {
                                        let idx = (ch * h + oy * stride + ky) * w + ox * stride + kx;
                                        if best.0 == usize::MAX || x[idx] > best.1 {
                                            best = (idx, x[idx]);
                                        }
                                    }
                                }
                                y.push(best.1);
                                arg.push(best.0);
                            }
                        }
                    }
                    pool_argmax[li] = arg;
                    y
                }
                LayerSpec::Flatten => x.clone(),
                LayerSpec::Dense { .. } => {
                    let mut y = Vec::new();
                    dense_forward(p, self.slots[li].unwrap(), x, &mut y);
                    y
                }
            };
            acts.push(y);
        }
        let body = acts.last().unwrap();
        let mut out = Vec::new();
        dense_forward(p, self.head, body, &mut out);
        match self.spec.head {
            Head::Dueling => {
                let mut v = Vec::new();
                dense_forward(p, self.value.unwrap(), body, &mut v);
                for q in &mut out {
                    *q = *q + v[0];
                }
            }
            Head::PolicySoftmax => out = softmax(&out),
            Head::SingleQ | Head::ScalarValue => {}
        }
        Ok(ForwardCache {
            acts,
            pool_argmax,
            output: out,
        })
    }

    fn check_cache(&self, cache: &ForwardCache<F>, grad_len: usize) -> Result<()> {
        if cache.acts.len() != self.spec.layers.len() + 1 || cache.acts[0].len() != self.spec.input_len() {
            return Err(GsgiError::Shape("forward cache does not belong to this network".into()));
        }
        if grad_len != self.spec.output_len() {
            return Err(GsgiError::Shape(format!(
                "output gradient has {grad_len} values, network outputs {}",
                self.spec.output_len()
            )));
        }
        Ok(())
    }

    /// Accumulate into `grads` the parameter gradient of a scalar loss whose
    /// gradient with respect to the network output is `out_grad`. For a
    /// softmax head the output is the probability vector.
    pub fn backward(&self, cache: &ForwardCache<F>, out_grad: &[F], grads: &mut Gradients<F>) -> Result<()> {
        self.check_cache(cache, out_grad.len())?;
        if self.spec.head == Head::PolicySoftmax {
            let p = &cache.output;
            let dot: F = p.iter().zip(out_grad).map(|(a, b)| *a * *b).sum();
            let gz: Vec<F> = p.iter().zip(out_grad).map(|(pi, gi)| *pi * (*gi - dot)).collect();
            return self.backward_head(cache, &gz, grads);
        }
        self.backward_head(cache, out_grad, grads)
    }

    /// Like [`Network::backward`], but for a softmax head takes the gradient
    /// with respect to the logits.
    pub fn backward_logits(&self, cache: &ForwardCache<F>, logit_grad: &[F], grads: &mut Gradients<F>) -> Result<()> {
        self.check_cache(cache, logit_grad.len())?;
        self.backward_head(cache, logit_grad, grads)
    }

    fn backward_head(&self, cache: &ForwardCache<F>, gout: &[F], grads: &mut Gradients<F>) -> Result<()> {
        if grads.0.len() != self.params.len() {
            return Err(GsgiError::Shape("gradient buffer has wrong length".into()));
        }
        let p = &self.params;
        let g = &mut grads.0;
        let body = cache.acts.last().unwrap();
        let mut gin = vec![F::zero(); body.len()];
        dense_backward(p, self.head, body, gout, g, &mut gin);
        if let Some(v) = self.value {
            let gv: F = gout.iter().cloned().sum();
            dense_backward(p, v, body, &[gv], g, &mut gin);
        }
        for li in (0..self.spec.layers.len()).rev() {
            let x = &cache.acts[li];
            let (c, h, w) = self.shapes[li];
            let (oc, oh, ow) = self.shapes[li + 1];
            let mut gx = vec![F::zero(); x.len()];
            match self.spec.layers[li] {
                LayerSpec::Conv { kernel, stride, .. } => {
                    let s = self.slots[li].unwrap();
                    for o in 0..oc {
                        for oy in 0..oh {
                            for ox in 0..ow {
                                let go = gin[(o * oh + oy) * ow + ox];
                                if go.is_zero() {
                                    continue;
                                }
                                let bi = s.offset + s.weights + o;
                                g[bi] = g[bi] + go;
                                for i in 0..c {
                                    let wbase = s.offset + (o * c + i) * kernel * kernel;
                                    for ky in 0..kernel {
                                        let row = (i * h + oy * stride + ky) * w + ox * stride;
                                        for kx in 0..kernel {
                                            let wi = wbase + ky * kernel + kx;
                                            g[wi] = g[wi] + go * x[row + kx];
                                            gx[row + kx] = gx[row + kx] + go * p[wi];
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
                LayerSpec::Relu => {
                    for ((gxi, xi), go) in gx.iter_mut().zip(x).zip(&gin) {
                        if *xi > F::zero() {
                            *gxi = *go;
                        }
                    }
                }
                LayerSpec::MaxPool { .. } => {
                    for (idx, go) in cache.pool_argmax[li].iter().zip(&gin) {
                        gx[*idx] = gx[*idx] + *go;
                    }
                }
                LayerSpec::Flatten => gx.copy_from_slice(&gin),
                LayerSpec::Dense { .. } => {
                    dense_backward(p, self.slots[li].unwrap(), x, &gin, g, &mut gx);
                }
            }
            gin = gx;
        }
        Ok(())
    }
}

impl QNetwork {
    /// Standard network for a 3x3, 5x5 or 7x7 grid.
    pub fn build(grid_size: usize, head: Head, outputs: usize, seed: u64) -> Result<Self> {
        Network::new(build_network_spec(grid_size, head, outputs)?, seed)
    }
}
