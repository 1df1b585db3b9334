//! Earth mover's distance training objectives on 1D spike sequences.
//!
//! For equal-length sequences the 1D EMD is the mean absolute difference of
//! prefix sums. The bidirectional form averages the forward and reversed
//! passes, the polar form splits ON and OFF events into separate channels,
//! and a count term penalises the total event-count mismatch.
//!
//! Gradients are subgradients with `sign(0) = 0`; `max(s, 0)` is treated as
//! having slope 1 only for `s > 0`.

use rayon::prelude::*;

use crate::error::{check_len, Error, Result};
use crate::events::SpikeTrain;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    pub lambda: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self { lambda: 0.1 }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambda.is_finite() && self.lambda >= 0.0 {
            Ok(())
        } else {
            Err(Error::Config(format!("lambda must be non-negative, got {}", self.lambda)))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossReport {
    /// Mean polar bidirectional EMD.
    pub emd: f64,
    /// Mean count loss.
    pub count: f64,
    /// `emd + lambda * count`.
    pub total: f64,
    /// Per-pixel totals.
    pub per_pixel: Vec<f64>,
}

#[inline]
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Prefix-sum differences `C_s(i) - C_e(i)`.
fn forward_diffs(e: &[f64], s: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    e.iter()
        .zip(s)
        .map(|(a, b)| {
            acc += b - a;
            acc
        })
        .collect()
}

/// Suffix-sum differences, i.e. prefix sums of the reversed sequences,
/// indexed by original position.
fn reverse_diffs(e: &[f64], s: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; e.len()];
    let mut acc = 0.0;
    for i in (0..e.len()).rev() {
        acc += s[i] - e[i];
        out[i] = acc;
    }
    out
}

fn mean_abs(d: &[f64]) -> f64 {
    if d.is_empty() {
        0.0
    } else {
        d.iter().map(|v| v.abs()).sum::<f64>() / d.len() as f64
    }
}

/// Mean absolute difference of prefix sums.
pub fn emd(e: &[f64], s: &[f64]) -> Result<f64> {
    check_len(e.len(), s.len())?;
    Ok(mean_abs(&forward_diffs(e, s)))
}

/// Average of the forward and time-reversed EMD.
pub fn emd_bidir(e: &[f64], s: &[f64]) -> Result<f64> {
    check_len(e.len(), s.len())?;
    Ok(bidir_unchecked(e, s))
}

fn bidir_unchecked(e: &[f64], s: &[f64]) -> f64 {
    0.5 * (mean_abs(&forward_diffs(e, s)) + mean_abs(&reverse_diffs(e, s)))
}

fn pos(v: f64) -> f64 {
    v.max(0.0)
}

fn neg(v: f64) -> f64 {
    (-v).max(0.0)
}

/// Bidirectional EMD applied separately to the ON and OFF channels.
pub fn emd_polar(e: &[f64], s: &[f64]) -> Result<f64> {
    check_len(e.len(), s.len())?;
    let split = |f: fn(f64) -> f64, v: &[f64]| v.iter().map(|&x| f(x)).collect::<Vec<_>>();
    Ok(bidir_unchecked(&split(pos, e), &split(pos, s)) + bidir_unchecked(&split(neg, e), &split(neg, s)))
}

/// `|sum |s| - sum |e||`.
pub fn count_loss(e: &[f64], s: &[f64]) -> Result<f64> {
    check_len(e.len(), s.len())?;
    Ok(count_gap(e, s).abs())
}

fn count_gap(e: &[f64], s: &[f64]) -> f64 {
    s.iter().map(|v| v.abs()).sum::<f64>() - e.iter().map(|v| v.abs()).sum::<f64>()
}

/// `(emd_polar, count_loss)` for one pixel.
pub fn pixel_loss(e: &[f64], s: &[f64]) -> Result<(f64, f64)> {
    Ok((emd_polar(e, s)?, count_loss(e, s)?))
}

/// Gradient of forward [`emd`] with respect to `s`.
pub fn emd_grad(e: &[f64], s: &[f64]) -> Result<Vec<f64>> {
    check_len(e.len(), s.len())?;
    let k = e.len() as f64;
    let d = forward_diffs(e, s);
    let mut g = vec![0.0; d.len()];
    let mut acc = 0.0;
    for j in (0..d.len()).rev() {
        acc += sign(d[j]);
        g[j] = acc / k;
    }
    Ok(g)
}

fn bidir_grad(e: &[f64], s: &[f64]) -> Vec<f64> {
    let n = e.len();
    let k = n as f64;
    let fwd = forward_diffs(e, s);
    let rev = reverse_diffs(e, s);
    let mut g = vec![0.0; n];
    // Forward term: suffix sums of signs.
    let mut acc = 0.0;
    for j in (0..n).rev() {
        acc += sign(fwd[j]);
        g[j] = 0.5 * acc / k;
    }
    // Reverse term: prefix sums of signs.
    let mut acc = 0.0;
    for j in 0..n {
        acc += sign(rev[j]);
        g[j] += 0.5 * acc / k;
    }
    g
}

/// Subgradient of `emd_polar + lambda * count_loss` with respect to `s`.
pub fn pixel_loss_grad(e: &[f64], s: &[f64], lambda: f64) -> Result<Vec<f64>> {
    check_len(e.len(), s.len())?;
    let ep: Vec<f64> = e.iter().map(|&v| pos(v)).collect();
    let sp: Vec<f64> = s.iter().map(|&v| pos(v)).collect();
    let en: Vec<f64> = e.iter().map(|&v| neg(v)).collect();
    let sn: Vec<f64> = s.iter().map(|&v| neg(v)).collect();
    let gp = bidir_grad(&ep, &sp);
    let gn = bidir_grad(&en, &sn);
    let count_dir = lambda * sign(count_gap(e, s));
    Ok(s.iter()
        .enumerate()
        .map(|(j, &v)| {
            let through_pos = if v > 0.0 { gp[j] } else { 0.0 };
            let through_neg = if v < 0.0 { -gn[j] } else { 0.0 };
            through_pos + through_neg + count_dir * sign(v)
        })
        .collect())
}

fn train_as_f64(t: &SpikeTrain) -> Vec<f64> {
    t.data().iter().map(|&v| v as f64).collect()
}

/// Mean over pixels of `emd_polar + lambda * count_loss` where `s` holds
/// real-valued (possibly relaxed) predictions in the layout of `e`.
pub fn total_loss_dense(e: &SpikeTrain, s: &[f64], cfg: &LossConfig) -> Result<LossReport> {
    cfg.validate()?;
    if s.len() != e.data().len() {
        return Err(Error::ShapeMismatch(format!("{} predictions for {} targets", s.len(), e.data().len())));
    }
    let ticks = e.ticks();
    let target = train_as_f64(e);
    let parts: Vec<(f64, f64)> = target
        .par_chunks(ticks)
        .zip(s.par_chunks(ticks))
        .map(|(ep, sp)| pixel_loss(ep, sp).expect("equal chunk lengths"))
        .collect();
    let n = parts.len() as f64;
    let emd = parts.iter().map(|p| p.0).sum::<f64>() / n;
    let count = parts.iter().map(|p| p.1).sum::<f64>() / n;
    Ok(LossReport {
        emd,
        count,
        total: emd + cfg.lambda * count,
        per_pixel: parts.iter().map(|(a, b)| a + cfg.lambda * b).collect(),
    })
}

pub fn total_loss(e: &SpikeTrain, s: &SpikeTrain, cfg: &LossConfig) -> Result<LossReport> {
    e.same_shape(s)?;
    total_loss_dense(e, &train_as_f64(s), cfg)
}

/// Gradient of [`total_loss_dense`] with respect to every entry of `s`.
pub fn loss_grad(e: &SpikeTrain, s: &[f64], cfg: &LossConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    if s.len() != e.data().len() {
        return Err(Error::ShapeMismatch(format!("{} predictions for {} targets", s.len(), e.data().len())));
    }
    let ticks = e.ticks();
    let scale = 1.0 / e.pixels() as f64;
    let target = train_as_f64(e);
    let mut g = vec![0.0; s.len()];
    g.par_chunks_mut(ticks)
        .zip(target.par_chunks(ticks).zip(s.par_chunks(ticks)))
        .for_each(|(out, (ep, sp))| {
            let pg = pixel_loss_grad(ep, sp, cfg.lambda).expect("equal chunk lengths");
            for (o, v) in out.iter_mut().zip(pg) {
                *o = v * scale;
            }
        });
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn forward_emd_examples() {
        assert_eq!(emd(&[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]).unwrap(), 0.0);
        assert!(close(emd(&[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0]).unwrap(), 2.0 / 3.0));
        assert!(close(emd(&[1.0, -1.0, 0.0], &[0.0; 3]).unwrap(), 1.0 / 3.0));
        assert!(matches!(emd(&[1.0], &[1.0, 0.0]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn bidirectional_examples() {
        assert!(close(emd_bidir(&[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0]).unwrap(), 2.0 / 3.0));
        assert!(close(emd_bidir(&[1.0, 0.0, 0.0, 0.0], &[0.0; 4]).unwrap(), 5.0 / 8.0));
    }

    #[test]
    fn polar_examples() {
        assert!(close(emd_polar(&[1.0, 0.0, -1.0], &[0.0, 1.0, -1.0]).unwrap(), 1.0 / 3.0));
        assert!(close(emd_polar(&[1.0], &[-1.0]).unwrap(), 2.0));
        assert_eq!(emd_polar(&[1.0, -1.0, 0.0], &[1.0, -1.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn count_examples() {
        assert_eq!(count_loss(&[1.0, 0.0, 0.0], &[1.0, -1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(count_loss(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 0.0);
        assert_eq!(count_loss(&[1.0, 0.0, 0.0], &[0.0, -1.0, 1.0]).unwrap(), 1.0);
    }

    #[test]
    fn forward_only_rewards_late_hallucination() {
        let e = [1.0, 0.0, 0.0, 0.0];
        let none = [0.0; 4];
        let late = [0.0, 0.0, 0.0, 1.0];
        assert!(close(emd(&e, &none).unwrap(), 1.0));
        assert!(close(emd(&e, &late).unwrap(), 0.75));
        assert!(close(emd_bidir(&e, &none).unwrap(), 0.625));
        assert!(close(emd_bidir(&e, &late).unwrap(), 0.75));
        // Forward EMD prefers the hallucinated tail event; bidirectional does not.
        assert!(emd(&e, &late).unwrap() < emd(&e, &none).unwrap());
        assert!(emd_bidir(&e, &late).unwrap() > emd_bidir(&e, &none).unwrap());
    }

    #[test]
    fn forward_gradient_by_hand() {
        let g = emd_grad(&[1.0, 0.0, 0.0], &[0.0; 3]).unwrap();
        assert!(close(g[0], -1.0));
        assert!(close(g[1], -2.0 / 3.0));
        assert!(close(g[2], -1.0 / 3.0));
    }

    #[test]
    fn equal_inputs_have_zero_gradient() {
        let e = [1.0, 0.0, -1.0, 1.0];
        assert!(pixel_loss_grad(&e, &e, 0.1).unwrap().iter().all(|&v| v == 0.0));
    }

    fn train(w: usize, k: usize, d: Vec<i8>) -> SpikeTrain {
        SpikeTrain::new(w, 1, 1000.0, k, d).unwrap()
    }

    #[test]
    fn total_loss_composition() {
        let e = train(1, 3, vec![1, 0, -1]);
        let s = train(1, 3, vec![0, 1, -1]);
        let r = total_loss(&e, &s, &LossConfig { lambda: 0.1 }).unwrap();
        assert!(close(r.emd, 1.0 / 3.0));
        assert_eq!(r.count, 0.0);
        assert!(close(r.total, 1.0 / 3.0));

        let r0 = total_loss(&e, &train(1, 3, vec![1, 1, 0]), &LossConfig { lambda: 0.0 }).unwrap();
        assert_eq!(r0.total, r0.emd);
        assert_eq!(total_loss(&e, &e, &LossConfig::default()).unwrap().total, 0.0);
        assert!(matches!(
            total_loss(&e, &train(1, 4, vec![0; 4]), &LossConfig::default()),
            Err(Error::ShapeMismatch(_))
        ));
    }

    fn ternary(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(prop::sample::select(vec![-1.0, 0.0, 0.0, 1.0]), n)
    }

    proptest! {
        #[test]
        fn nonnegative_and_zero_iff_equal(e in ternary(24), s in ternary(24)) {
            let v = emd(&e, &s).unwrap();
            prop_assert!(v >= 0.0);
            prop_assert_eq!(v == 0.0, e == s);
            prop_assert!(emd_polar(&e, &s).unwrap() >= 0.0);
            prop_assert!(count_loss(&e, &s).unwrap() >= 0.0);
        }

        #[test]
        fn polarity_relabeling(e in ternary(20), s in prop::collection::vec(-1.0f64..1.0, 20)) {
            let ne: Vec<f64> = e.iter().map(|v| -v).collect();
            let ns: Vec<f64> = s.iter().map(|v| -v).collect();
            prop_assert!((emd_polar(&e, &s).unwrap() - emd_polar(&ne, &ns).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn joint_reversal_symmetry(e in ternary(16), s in prop::collection::vec(-1.0f64..1.0, 16)) {
            let re: Vec<f64> = e.iter().rev().copied().collect();
            let rs: Vec<f64> = s.iter().rev().copied().collect();
            prop_assert!((emd_bidir(&e, &s).unwrap() - emd_bidir(&re, &rs).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn count_is_permutation_invariant(e in ternary(12), mut s in ternary(12), seed in any::<u64>()) {
            let before = count_loss(&e, &s).unwrap();
            let n = s.len();
            s.rotate_left((seed % n as u64) as usize);
            prop_assert_eq!(before, count_loss(&e, &s).unwrap());
        }
    }
}
