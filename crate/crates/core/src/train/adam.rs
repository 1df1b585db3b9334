//! Bias-corrected adaptive-moment optimizer.

use crate::real::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T = f32> {
    pub m: Vec<T>,
    pub v: Vec<T>,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl<T: Real> AdamState<T> {
    pub fn new(len: usize) -> Self {
        Self { m: vec![T::zero(); len], v: vec![T::zero(); len], step: 0, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// One update in place. Panics if the three buffers differ in length.
pub fn adam_step<T: Real>(params: &mut [T], grads: &[T], state: &mut AdamState<T>, lr: f64) {
    assert_eq!(params.len(), grads.len());
    assert_eq!(params.len(), state.m.len());
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = T::of(1.0 - b1.powi(t));
    let c2 = T::of(1.0 - b2.powi(t));
    let (b1, b2, lr, eps) = (T::of(b1), T::of(b2), T::of(lr), T::of(state.eps));
    let one = T::one();
    for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut state.m).zip(&mut state.v) {
        *m = b1 * *m + (one - b1) * g;
        *v = b2 * *v + (one - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p = *p - lr * m_hat / (v_hat.sqrt() + eps);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_grads_leave_params_and_decay_moments() {
        let mut p = vec![1.0f64, -2.0];
        let mut s = AdamState::<f64>::new(2);
        s.m = vec![0.5, -0.5];
        s.v = vec![0.25, 0.25];
        adam_step(&mut p, &[0.0, 0.0], &mut s, 0.0);
        assert_eq!(p, vec![1.0, -2.0]);
        assert!((s.m[0] - 0.45).abs() < 1e-15 && (s.m[1] + 0.45).abs() < 1e-15);
        assert!((s.v[0] - 0.24975).abs() < 1e-15);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = vec![0.0f64];
        let mut s = AdamState::new(1);
        adam_step(&mut p, &[3.0], &mut s, 0.01);
        assert!((p[0] + 0.01).abs() < 1e-9);
    }

    #[test]
    fn constant_gradient_step_tends_to_lr_sign() {
        let lr = 1e-3;
        let mut p = vec![0.0f64, 0.0];
        let mut s = AdamState::new(2);
        let g = [0.7, -3.0];
        let mut prev = p.clone();
        for _ in 0..1000 {
            prev.copy_from_slice(&p);
            adam_step(&mut p, &g, &mut s, lr);
        }
        for i in 0..2 {
            let step = p[i] - prev[i];
            assert!((step + lr * g[i].signum()).abs() < 0.01 * lr, "step {step}");
        }
    }

    #[test]
    fn elementwise_under_permutation() {
        let p0 = [0.3f32, -1.0, 2.0, 0.0];
        let g = [0.1f32, 5.0, -0.2, 1e-3];
        let perm = [2usize, 0, 3, 1];
        let mut a = p0.to_vec();
        let mut sa = AdamState::new(4);
        let mut b: Vec<f32> = perm.iter().map(|&i| p0[i]).collect();
        let gb: Vec<f32> = perm.iter().map(|&i| g[i]).collect();
        let mut sb = AdamState::new(4);
        for _ in 0..5 {
            adam_step(&mut a, &g, &mut sa, 0.05);
            adam_step(&mut b, &gb, &mut sb, 0.05);
        }
        for (k, &i) in perm.iter().enumerate() {
            assert_eq!(a[i].to_bits(), b[k].to_bits());
        }
    }
}
