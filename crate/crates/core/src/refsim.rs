//! Physics-style reference event sensor.
//!
//! Each pixel is a perfect integrator of log-luminance change with a bipolar
//! threshold `theta_p` and reset by subtraction. At most one event fires per
//! tick, so a large jump drains over the following ticks as a train of
//! trailing pulses. Per-pixel threshold mismatch, a random initial potential
//! and leak/shot noise injections complete the model.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::events::SpikeTrain;
use crate::frames::LogDiffSeq;
use crate::rng;
use crate::spiking::{bilif_step, LifParams, NeuronState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    Zero,
    Uniform,
}

impl fmt::Display for InitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitMode::Zero => "zero",
            InitMode::Uniform => "uniform",
        })
    }
}

impl FromStr for InitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(InitMode::Zero),
            "uniform" => Ok(InitMode::Uniform),
            _ => Err(Error::Config(format!("unknown init mode {s:?} (zero|uniform)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefSimConfig {
    /// Nominal contrast threshold in log-luminance units.
    pub theta: f64,
    /// Threshold mismatch, relative to `theta`.
    pub sigma_theta: f64,
    pub init_mode: InitMode,
    /// Positive spurious events per second per pixel.
    pub leak_rate: f64,
    /// Random-sign noise events per second per pixel.
    pub shot_rate: f64,
    pub seed: u64,
}

impl Default for RefSimConfig {
    fn default() -> Self {
        Self {
            theta: 0.2,
            sigma_theta: 0.03,
            init_mode: InitMode::Uniform,
            leak_rate: 0.1,
            shot_rate: 1.0,
            seed: 0,
        }
    }
}

impl RefSimConfig {
    /// Ideal sensor: no mismatch, no noise, zero initial state.
    pub fn noiseless(theta: f64) -> Self {
        Self { theta, sigma_theta: 0.0, init_mode: InitMode::Zero, leak_rate: 0.0, shot_rate: 0.0, seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta.is_finite() && self.theta > 0.0) {
            return Err(Error::Config(format!("theta must be positive, got {}", self.theta)));
        }
        for (name, v) in [("sigma_theta", self.sigma_theta), ("leak_rate", self.leak_rate), ("shot_rate", self.shot_rate)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

/// Per-pixel bookkeeping of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelTrace {
    pub theta: f64,
    pub v0: f64,
    pub v_final: f64,
    /// Net charge injected by noise events (multiples of `theta`).
    pub injected: f64,
    pub injections: usize,
}

/// Simulate one pixel's sequence. `pixel` keys the random stream.
pub fn simulate_pixel(x: &[f32], fps: f64, cfg: &RefSimConfig, pixel: u64) -> (Vec<i8>, PixelTrace) {
    let mut r = rng::stream(cfg.seed, &[rng::TAG_REFSIM, pixel]);
    let z: f64 = r.sample(StandardNormal);
    let theta = (cfg.theta + cfg.sigma_theta * cfg.theta * z).max(cfg.theta / 4.0);
    let u: f64 = r.random();
    let v0 = match cfg.init_mode {
        InitMode::Zero => 0.0,
        InitMode::Uniform => theta * (2.0 * u - 1.0),
    };
    let p_leak = cfg.leak_rate / fps;
    let p_shot = cfg.shot_rate / fps;
    let neuron = LifParams::perfect_integrator(theta);

    let mut state = NeuronState::new(v0);
    let mut injected = 0.0;
    let mut injections = 0;
    let spikes = x
        .iter()
        .map(|&xk| {
            let mut input = xk as f64;
            if p_leak > 0.0 && r.random::<f64>() < p_leak {
                input += theta;
                injected += theta;
                injections += 1;
            }
            if p_shot > 0.0 && r.random::<f64>() < p_shot {
                let sign = if r.random::<bool>() { 1.0 } else { -1.0 };
                input += sign * theta;
                injected += sign * theta;
                injections += 1;
            }
            let (next, s) = bilif_step(state, input, &neuron);
            state = next;
            s
        })
        .collect();
    (spikes, PixelTrace { theta, v0, v_final: state.v, injected, injections })
}

/// Ground-truth events for a clean log-difference sequence.
pub fn simulate(x: &LogDiffSeq, cfg: &RefSimConfig) -> Result<SpikeTrain> {
    cfg.validate()?;
    let ticks = x.ticks();
    let mut data = vec![0i8; x.pixels() * ticks];
    data.par_chunks_mut(ticks).enumerate().for_each(|(p, out)| {
        let (spikes, _) = simulate_pixel(x.pixel(p), x.fps(), cfg, p as u64);
        out.copy_from_slice(&spikes);
    });
    SpikeTrain::new(x.width(), x.height(), x.fps(), ticks, data)
}

/// Frame-difference strawman: each tick thresholded on its own, no state.
pub fn naive_pixel(x: &[f32], theta: f64) -> Vec<i8> {
    x.iter()
        .map(|&v| {
            let v = v as f64;
            if v >= theta {
                1
            } else if v <= -theta {
                -1
            } else {
                0
            }
        })
        .collect()
}

pub fn naive_baseline(x: &LogDiffSeq, theta: f64) -> Result<SpikeTrain> {
    if !(theta.is_finite() && theta > 0.0) {
        return Err(Error::Config(format!("theta must be positive, got {theta}")));
    }
    let ticks = x.ticks();
    let data: Vec<i8> = x.data().par_chunks(ticks).flat_map_iter(|px| naive_pixel(px, theta)).collect();
    SpikeTrain::new(x.width(), x.height(), x.fps(), ticks, data)
}
