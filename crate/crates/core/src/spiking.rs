//! Leaky integrate-and-fire dynamics and the arctangent surrogate.
//!
//! One tick of either neuron:
//!
//! ```text
//! charge: V' = (1 - 1/tau) * V + I
//! fire:   S  = 1[V' >= V_th]                (LIF)
//!         S  = sgn(V') * 1[|V'| >= V_th]    (BiLIF)
//! reset:  V  = V' - S * V_th
//! ```
//!
//! `tau = inf` gives a perfect integrator.

use crate::error::{Error, Result};
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifParams {
    pub tau: f64,
    pub v_th: f64,
}

impl Default for LifParams {
    fn default() -> Self {
        Self { tau: 2.0, v_th: 1.0 }
    }
}

impl LifParams {
    /// Non-leaking neuron with threshold `v_th`.
    pub fn perfect_integrator(v_th: f64) -> Self {
        Self { tau: f64::INFINITY, v_th }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 1.0) {
            return Err(Error::Config(format!("tau must exceed 1, got {}", self.tau)));
        }
        if !(self.v_th.is_finite() && self.v_th > 0.0) {
            return Err(Error::Config(format!("v_th must be positive, got {}", self.v_th)));
        }
        Ok(())
    }

    /// Membrane retention per tick, `1 - 1/tau`.
    #[inline]
    pub fn decay(&self) -> f64 {
        1.0 - 1.0 / self.tau
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NeuronState<T = f64> {
    pub v: T,
}

impl<T: Real> NeuronState<T> {
    pub fn new(v: T) -> Self {
        Self { v }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurrogateConfig {
    pub alpha: f64,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        Self { alpha: 2.0 }
    }
}

impl SurrogateConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alpha.is_finite() && self.alpha > 0.0 {
            Ok(())
        } else {
            Err(Error::Config(format!("surrogate alpha must be positive, got {}", self.alpha)))
        }
    }
}

#[inline]
fn charge<T: Real>(v: T, input: T, p: &LifParams) -> T {
    T::of(p.decay()) * v + input
}

pub fn lif_step<T: Real>(state: NeuronState<T>, input: T, p: &LifParams) -> (NeuronState<T>, u8) {
    let v_th = T::of(p.v_th);
    let vp = charge(state.v, input, p);
    if vp >= v_th {
        (NeuronState::new(vp - v_th), 1)
    } else {
        (NeuronState::new(vp), 0)
    }
}

/// Bipolar spike for a post-charge potential.
#[inline]
pub fn bilif_fire<T: Real>(v_charged: T, v_th: T) -> i8 {
    if v_charged >= v_th {
        1
    } else if v_charged <= -v_th {
        -1
    } else {
        0
    }
}

pub fn bilif_step<T: Real>(state: NeuronState<T>, input: T, p: &LifParams) -> (NeuronState<T>, i8) {
    let v_th = T::of(p.v_th);
    let vp = charge(state.v, input, p);
    let s = bilif_fire(vp, v_th);
    (NeuronState::new(vp - T::of(s as f64) * v_th), s)
}

/// Run [`bilif_step`] over `x` from initial potential `v0`.
pub fn bilif_sequence<T: Real>(x: &[T], p: &LifParams, v0: T) -> (Vec<i8>, NeuronState<T>) {
    let mut state = NeuronState::new(v0);
    let spikes = x
        .iter()
        .map(|&i| {
            let (next, s) = bilif_step(state, i, p);
            state = next;
            s
        })
        .collect();
    (spikes, state)
}

/// Arctangent sigmoid `1/2 + atan(pi * alpha * u / 2) / pi`.
#[inline]
pub fn atan_sigmoid<T: Real>(u: T, alpha: T) -> T {
    let half = T::of(0.5);
    half + (T::PI() * alpha * u * half).atan() / T::PI()
}

/// Derivative of [`atan_sigmoid`]: `(alpha/2) / (1 + (pi * alpha * u / 2)^2)`.
#[inline]
pub fn atan_sigmoid_grad<T: Real>(u: T, alpha: T) -> T {
    let half = T::of(0.5);
    let z = T::PI() * alpha * u * half;
    alpha * half / (T::one() + z * z)
}

/// Smooth stand-in for the bipolar spike: `sigma(v - V_th) - sigma(-v - V_th)`.
#[inline]
pub fn relaxed_spike<T: Real>(v: T, v_th: T, alpha: T) -> T {
    atan_sigmoid(v - v_th, alpha) - atan_sigmoid(-v - v_th, alpha)
}

/// Surrogate `dS/dV`: two positive bumps centred at `+V_th` and `-V_th`.
#[inline]
pub fn surrogate_grad<T: Real>(v: T, v_th: T, alpha: T) -> T {
    atan_sigmoid_grad(v - v_th, alpha) + atan_sigmoid_grad(-v - v_th, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lif(tau: f64, v_th: f64) -> LifParams {
        LifParams { tau, v_th }
    }

    #[test]
    fn lif_hand_steps() {
        let p = lif(2.0, 1.0);
        let (s1, spike) = lif_step(NeuronState::new(0.0), 1.5, &p);
        assert_eq!((s1.v, spike), (0.5, 1));
        let (s2, spike) = lif_step(NeuronState::new(0.8f64), 0.0, &p);
        assert!((s2.v - 0.4).abs() < 1e-15);
        assert_eq!(spike, 0);
        let mut st = NeuronState::new(0.0);
        for _ in 0..100 {
            let (n, s) = lif_step(st, 0.0, &p);
            assert_eq!((n.v, s), (0.0, 0));
            st = n;
        }
    }

    #[test]
    fn bilif_trailing_pulses() {
        let p = lif(100.0, 1.0);
        let mut x = vec![0.0; 6];
        x[0] = -3.0;
        let (spikes, _) = bilif_sequence(&x, &p, 0.0);
        assert_eq!(spikes, vec![-1, -1, 0, 0, 0, 0]);

        // Explicit potentials: -3 -> -2, then 0.99*-2 = -1.98 -> -0.98, then -0.9702.
        let (s, a) = bilif_step(NeuronState::new(0.0f64), -3.0, &p);
        assert_eq!((s.v, a), (-2.0, -1));
        let (s, a) = bilif_step(s, 0.0, &p);
        assert!((s.v + 0.98).abs() < 1e-12 && a == -1);
        let (s, a) = bilif_step(s, 0.0, &p);
        assert!((s.v + 0.9702).abs() < 1e-12 && a == 0);
    }

    #[test]
    fn subthreshold_drive_converges_without_firing() {
        let p = lif(2.0, 1.0);
        let (spikes, st) = bilif_sequence(&vec![0.4f64; 200], &p, 0.0);
        assert!(spikes.iter().all(|&s| s == 0));
        assert!((st.v - 0.8).abs() < 1e-12);
    }

    #[test]
    fn initial_state_shifts_first_fire() {
        let p = lif(100.0, 1.0);
        let x = vec![0.2; 30];
        let first = |v0: f64| bilif_sequence(&x, &p, v0).0.iter().position(|&s| s != 0);
        let hi = first(0.9).unwrap();
        let lo = first(-0.9).unwrap();
        assert_eq!(hi, 0);
        assert!(lo > hi + 5, "first fires {hi} vs {lo}");
    }

    #[test]
    fn surrogate_values() {
        let (v_th, alpha) = (1.0, 2.0);
        let at: f64 = surrogate_grad(1.0, v_th, alpha);
        let tail = atan_sigmoid_grad(-2.0, alpha);
        assert!((at - (1.0 + tail)).abs() < 1e-15);
        assert!((tail - 1.0 / (1.0 + (2.0 * std::f64::consts::PI).powi(2))).abs() < 1e-15);
    }

    fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let inner: f64 = (1..n).map(|i| f(a + i as f64 * h)).sum();
        h * (0.5 * (f(a) + f(b)) + inner)
    }

    #[test]
    fn surrogate_has_unit_mass() {
        let f = |v: f64| atan_sigmoid_grad(v - 1.0, 2.0f64);
        // The arctangent tails are heavy: [-50, 50] holds sigma(49) - sigma(-51) ~ 0.99595.
        let narrow = trapezoid(f, -50.0, 50.0, 200_000);
        let exact = atan_sigmoid(49.0, 2.0) - atan_sigmoid(-51.0, 2.0);
        assert!((narrow - exact).abs() < 1e-6, "{narrow} vs {exact}");
        let wide = trapezoid(f, -5000.0, 5000.0, 2_000_000);
        assert!((wide - 1.0).abs() < 1e-3, "{wide}");
    }

    #[test]
    fn perfect_integrator_conservation() {
        let p = LifParams::perfect_integrator(0.3);
        let x: Vec<f64> = (0..500).map(|i| ((i * 37 % 101) as f64 - 50.0) / 40.0).collect();
        let (spikes, st) = bilif_sequence(&x, &p, 0.0);
        let sum_s: f64 = spikes.iter().map(|&s| s as f64).sum();
        let sum_x: f64 = x.iter().sum();
        assert!((sum_x - st.v - 0.3 * sum_s).abs() < 1e-9);
    }

    #[test]
    fn validation() {
        assert!(lif(1.0, 1.0).validate().is_err());
        assert!(lif(2.0, 0.0).validate().is_err());
        assert!(LifParams::perfect_integrator(1.0).validate().is_ok());
        assert!(SurrogateConfig { alpha: 0.0 }.validate().is_err());
    }

    proptest! {
        #[test]
        fn bipolar_antisymmetry(x in prop::collection::vec(-3.0f64..3.0, 1..200), tau in 1.5f64..200.0) {
            let p = lif(tau, 1.0);
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            let (a, _) = bilif_sequence(&x, &p, 0.0);
            let (b, _) = bilif_sequence(&neg, &p, 0.0);
            prop_assert!(a.iter().zip(&b).all(|(u, v)| *u == -*v));
        }

        #[test]
        fn single_subtraction_shrinks_potential(v in -2.0f64..2.0, i in -2.0f64..2.0) {
            let p = lif(4.0, 1.0);
            let vp = p.decay() * v + i;
            let (st, s) = bilif_step(NeuronState::new(v), i, &p);
            if s != 0 && vp.abs() < 2.0 {
                prop_assert!(st.v.abs() < vp.abs());
            }
        }

        #[test]
        fn surrogate_even_positive_peaked(v in -10.0f64..10.0) {
            let g = surrogate_grad(v, 1.0, 2.0);
            prop_assert!(g > 0.0);
            prop_assert!((g - surrogate_grad(-v, 1.0, 2.0)).abs() < 1e-15);
            prop_assert!(g <= surrogate_grad(1.0, 1.0, 2.0) + 1e-15);
        }
    }
}
