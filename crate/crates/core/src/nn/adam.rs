use super::network::{Gradients, Network};
use super::Scalar;
use crate::error::{GsgiError, Result};

/// Global gradient 2-norm threshold applied before every update.
pub const CLIP_NORM: f64 = 2.0;

#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    pub fn new(num_params: usize) -> Self {
        AdamState {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
        }
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.m
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.v
    }
}

/// Rescale `g` so its 2-norm is at most `max_norm`. Returns the norm before clipping.
pub fn clip_global_norm<F: Scalar>(g: &mut Gradients<F>, max_norm: f64) -> f64 {
    let norm = g.norm();
    if norm > max_norm {
        g.scale(F::of(max_norm / norm));
    }
    norm
}

/// Clip to [`CLIP_NORM`] and take one bias-corrected Adam step.
pub fn apply_gradients<F: Scalar>(
    net: &mut Network<F>,
    grads: &Gradients<F>,
    adam: &mut AdamState,
    lr: f64,
) -> Result<()> {
    if grads.0.len() != net.num_params() || adam.m.len() != net.num_params() {
        return Err(GsgiError::Shape(
            "gradient/optimizer length does not match network".into(),
        ));
    }
    if grads.0.iter().any(|g| !g.is_finite()) {
        return Err(GsgiError::NonFinite("gradients".into()));
    }
    let mut g = grads.clone();
    clip_global_norm(&mut g, CLIP_NORM);
    adam.step += 1;
    let t = adam.step as i32;
    let c1 = 1.0 - adam.beta1.powi(t);
    let c2 = 1.0 - adam.beta2.powi(t);
    for (i, p) in net.params_mut().iter_mut().enumerate() {
        let gi = g.0[i].f64();
        adam.m[i] = adam.beta1 * adam.m[i] + (1.0 - adam.beta1) * gi;
        adam.v[i] = adam.beta2 * adam.v[i] + (1.0 - adam.beta2) * gi * gi;
        let mhat = adam.m[i] / c1;
        let vhat = adam.v[i] / c2;
        *p = F::of(p.f64() - lr * mhat / (vhat.sqrt() + adam.eps));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Head, LayerSpec, NetworkSpec};

    fn net() -> Network<f64> {
        let spec = NetworkSpec::new(4, 1, 1, vec![LayerSpec::Flatten], Head::SingleQ, 1).unwrap();
        Network::new(spec, 1).unwrap()
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut n = net();
        let before = n.params().to_vec();
        let mut adam = AdamState::new(n.num_params());
        let g = Gradients::zeros(n.num_params());
        apply_gradients(&mut n, &g, &mut adam, 0.1).unwrap();
        assert_eq!(n.params(), &before[..]);
        assert_eq!(adam.step, 1);
    }

    #[test]
    fn clip_halves_norm_four() {
        let mut g = Gradients(vec![2.0f64, 2.0, 2.0, 2.0, 0.0]);
        let before = clip_global_norm(&mut g, 2.0);
        assert_eq!(before, 4.0);
        assert_eq!(g.0, vec![1.0, 1.0, 1.0, 1.0, 0.0]);
        // idempotent
        let again = g.clone();
        clip_global_norm(&mut g, 2.0);
        assert_eq!(g, again);
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        let mut n = net();
        let before = n.params().to_vec();
        let mut adam = AdamState::new(n.num_params());
        let g = Gradients(vec![0.3, -0.2, 0.1, -0.05, 0.4]);
        apply_gradients(&mut n, &g, &mut adam, 0.01).unwrap();
        for ((a, b), gi) in n.params().iter().zip(&before).zip(&g.0) {
            let expected = -0.01 * gi.signum();
            assert!(((a - b) - expected).abs() < 1e-6, "{} vs {}", a - b, expected);
        }
    }

    #[test]
    fn non_finite_gradient_rejected() {
        let mut n = net();
        let mut adam = AdamState::new(n.num_params());
        let g = Gradients(vec![f64::NAN, 0.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            apply_gradients(&mut n, &g, &mut adam, 0.1),
            Err(GsgiError::NonFinite(_))
        ));
    }
}
