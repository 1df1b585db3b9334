//! RGB to log-luminance preprocessing.
//!
//! Luminance uses Rec. 709 weights. The log map is linear below a knee `rho`
//! with slope `ln(rho)/rho`, so it is continuous at the knee and finite at 0.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frames::{FrameSeq, LogDiffSeq};

pub const LUMA_WEIGHTS: [f64; 3] = [0.2126, 0.7152, 0.0722];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LuminanceConfig {
    pub rho_log: f64,
}

impl Default for LuminanceConfig {
    fn default() -> Self {
        Self { rho_log: 0.02 }
    }
}

impl LuminanceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rho_log > 0.0 && self.rho_log < 1.0 {
            Ok(())
        } else {
            Err(Error::Config(format!("rho_log must lie in (0, 1), got {}", self.rho_log)))
        }
    }
}

#[inline]
pub fn luma(rgb: [f64; 3]) -> f64 {
    LUMA_WEIGHTS[0] * rgb[0] + LUMA_WEIGHTS[1] * rgb[1] + LUMA_WEIGHTS[2] * rgb[2]
}

#[inline]
pub fn lin_log(l: f64, cfg: &LuminanceConfig) -> f64 {
    let rho = cfg.rho_log;
    if l >= rho {
        l.ln()
    } else {
        rho.ln() / rho * l
    }
}

/// `X_k = lin_log(L_k) - lin_log(L_{k-1})` per pixel, `k = 1..=K`.
pub fn log_diff_sequence(f: &FrameSeq, cfg: &LuminanceConfig) -> Result<LogDiffSeq> {
    cfg.validate()?;
    let (pixels, ticks) = (f.pixels(), f.frame_count() - 1);
    let mut data = vec![0f32; pixels * ticks];
    data.par_chunks_mut(ticks).enumerate().for_each(|(p, out)| {
        let log_l = |k: usize| {
            let i = p * FrameSeq::CHANNELS;
            let px = &f.frame(k)[i..i + 3];
            lin_log(luma([px[0] as f64, px[1] as f64, px[2] as f64]), cfg)
        };
        let mut prev = log_l(0);
        for (k, slot) in out.iter_mut().enumerate() {
            let cur = log_l(k + 1);
            *slot = (cur - prev) as f32;
            prev = cur;
        }
    });
    LogDiffSeq::new(f.width(), f.height(), f.fps(), ticks, data)
}
