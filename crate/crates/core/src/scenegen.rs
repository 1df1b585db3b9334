//! Procedural high-frame-rate scenes and a Monte Carlo style noise model.
//!
//! Scenes are analytic in time: frame `k` is evaluated at `t = k / fps`, never
//! integrated from frame `k - 1`. Edges are anti-aliased by exact pixel
//! coverage so sub-pixel motion changes luminance gradually.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frames::FrameSeq;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SceneKind {
    MovingEdge,
    Grating,
    FlashingLight,
    Mixed,
}

impl SceneKind {
    pub const ALL: [SceneKind; 4] =
        [SceneKind::MovingEdge, SceneKind::Grating, SceneKind::FlashingLight, SceneKind::Mixed];

    pub fn name(self) -> &'static str {
        match self {
            SceneKind::MovingEdge => "moving_edge",
            SceneKind::Grating => "grating",
            SceneKind::FlashingLight => "flashing_light",
            SceneKind::Mixed => "mixed",
        }
    }
}

impl fmt::Display for SceneKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SceneKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SceneKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scene kind {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub kind: SceneKind,
    pub width: usize,
    pub height: usize,
    pub fps: f64,
    /// Seconds.
    pub duration: f64,
    /// Pixels per second along +x.
    pub velocity: f64,
    /// Grating cycles per pixel.
    pub spatial_freq: f64,
    /// Seconds per on/off cycle of the light.
    pub flash_period: f64,
    /// Modulation depth in `[0, 1]` around mid-grey.
    pub contrast: f64,
    pub seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            kind: SceneKind::MovingEdge,
            width: 32,
            height: 32,
            fps: 1000.0,
            duration: 0.512,
            velocity: 200.0,
            spatial_freq: 0.125,
            flash_period: 0.1,
            contrast: 0.8,
            seed: 0,
        }
    }
}

const MID_GREY: f64 = 0.5;
const LIGHT_TINT: [f64; 3] = [1.0, 0.9, 0.7];
const DISC_SUPERSAMPLE: usize = 8;

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Config(format!("scene dims must be positive, got {}x{}", self.width, self.height)));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(Error::Config(format!("scene fps must be positive, got {}", self.fps)));
        }
        if !(self.duration.is_finite() && self.duration > 0.0) || self.frame_count() < 2 {
            return Err(Error::Config(format!(
                "duration {} s at {} fps yields fewer than 2 frames",
                self.duration, self.fps
            )));
        }
        if !(0.0..=1.0).contains(&self.contrast) {
            return Err(Error::Config(format!("contrast must lie in [0, 1], got {}", self.contrast)));
        }
        if !self.velocity.is_finite() || !self.spatial_freq.is_finite() || self.spatial_freq < 0.0 {
            return Err(Error::Config("velocity and spatial frequency must be finite".into()));
        }
        if !(self.flash_period.is_finite() && self.flash_period > 0.0) {
            return Err(Error::Config(format!("flash period must be positive, got {}", self.flash_period)));
        }
        Ok(())
    }

    /// Frames in the rendered sequence, `round(duration * fps) + 1`.
    pub fn frame_count(&self) -> usize {
        (self.duration * self.fps).round() as usize + 1
    }

    fn jitter(&self, slot: u64) -> f64 {
        rng::stream(self.seed, &[rng::TAG_SCENE, slot]).random::<f64>()
    }

    /// Edge x-coordinate at time `t` seconds; pixels left of it are bright.
    pub fn edge_position(&self, t: f64) -> f64 {
        let start = if self.velocity >= 0.0 { 0.2 } else { 0.8 };
        self.width as f64 * start + (self.jitter(0) - 0.5) + self.velocity * t
    }

    fn grating_phase(&self) -> f64 {
        TAU * self.jitter(1)
    }

    fn flash_offset(&self) -> f64 {
        self.flash_period * self.jitter(2)
    }

    fn light_on(&self, t: f64) -> bool {
        ((t + self.flash_offset()) / self.flash_period).fract() < 0.5
    }

    fn levels(&self, contrast: f64) -> (f64, f64) {
        (MID_GREY * (1.0 - contrast), MID_GREY * (1.0 + contrast))
    }

    /// Bright-side coverage of pixel column `x` by the edge at time `t`.
    fn edge_coverage(&self, x: usize, t: f64) -> f64 {
        (self.edge_position(t) - x as f64).clamp(0.0, 1.0)
    }

    /// Pixel-averaged sinusoid over `[x, x + 1)`.
    fn grating_value(&self, x: usize, t: f64, contrast: f64) -> f64 {
        let f = self.spatial_freq;
        let shift = self.velocity * t;
        let phase = self.grating_phase();
        let mean_sin = if f == 0.0 {
            phase.sin()
        } else {
            let a = TAU * f * (x as f64 - shift) + phase;
            let b = TAU * f * (x as f64 + 1.0 - shift) + phase;
            (a.cos() - b.cos()) / (TAU * f)
        };
        MID_GREY * (1.0 + contrast * mean_sin)
    }

    fn disc_coverage(&self) -> Vec<f64> {
        let (w, h) = (self.width as f64, self.height as f64);
        let cx = w / 2.0 + (self.jitter(3) - 0.5);
        let cy = h / 2.0 + (self.jitter(4) - 0.5);
        let r = w.min(h) / 4.0;
        let n = DISC_SUPERSAMPLE;
        let mut cov = vec![0.0; self.width * self.height];
        for y in 0..self.height {
            for x in 0..self.width {
                let mut inside = 0usize;
                for sy in 0..n {
                    for sx in 0..n {
                        let px = x as f64 + (sx as f64 + 0.5) / n as f64;
                        let py = y as f64 + (sy as f64 + 0.5) / n as f64;
                        if (px - cx).powi(2) + (py - cy).powi(2) <= r * r {
                            inside += 1;
                        }
                    }
                }
                cov[y * self.width + x] = inside as f64 / (n * n) as f64;
            }
        }
        cov
    }
}

/// Render the clean ("high-SPP") frame sequence for `spec`.
pub fn gen_scene(spec: &SceneSpec) -> Result<FrameSeq> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let frames = spec.frame_count();
    let frame_len = w * h * FrameSeq::CHANNELS;
    let disc = match spec.kind {
        SceneKind::FlashingLight | SceneKind::Mixed => spec.disc_coverage(),
        _ => Vec::new(),
    };
    let (lo, hi) = spec.levels(spec.contrast);

    let mut data = vec![0f32; frames * frame_len];
    data.par_chunks_mut(frame_len).enumerate().for_each(|(k, frame)| {
        let t = k as f64 / spec.fps;
        let on = spec.light_on(t);
        for y in 0..h {
            for x in 0..w {
                let rgb: [f64; 3] = match spec.kind {
                    SceneKind::MovingEdge => [lo + (hi - lo) * spec.edge_coverage(x, t); 3],
                    SceneKind::Grating => [spec.grating_value(x, t, spec.contrast); 3],
                    SceneKind::FlashingLight => {
                        let c = if on { disc[y * w + x] } else { 0.0 };
                        LIGHT_TINT.map(|tint| (1.0 - c) * lo + c * hi * tint)
                    }
                    SceneKind::Mixed => {
                        let cov = spec.edge_coverage(x, t);
                        let base = cov * hi + (1.0 - cov) * spec.grating_value(x, t, 0.5 * spec.contrast);
                        let c = if on { disc[y * w + x] } else { 0.0 };
                        LIGHT_TINT.map(|tint| (1.0 - c) * base + c * hi * tint)
                    }
                };
                let i = (y * w + x) * FrameSeq::CHANNELS;
                for (slot, v) in frame[i..i + 3].iter_mut().zip(rgb) {
                    *slot = v.clamp(0.0, 1.0) as f32;
                }
            }
        }
    });
    FrameSeq::new(w, h, spec.fps, data)
}

/// Shot-noise analogue of low sample-per-pixel path tracing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub spp: u32,
    pub gain: f64,
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self { spp: 64, gain: 0.5, seed: 0 }
    }
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        if self.spp == 0 {
            return Err(Error::Config("spp must be at least 1".into()));
        }
        if !(self.gain.is_finite() && self.gain >= 0.0) {
            return Err(Error::Config(format!("noise gain must be non-negative, got {}", self.gain)));
        }
        Ok(())
    }

    /// Relative standard deviation `gain / sqrt(spp)`.
    pub fn sigma(&self) -> f64 {
        self.gain / (self.spp as f64).sqrt()
    }
}

/// Multiply every sample by `1 + sigma * z`, `z ~ N(0, 1)`, clamped at 0.
///
/// The draw for each (frame, pixel) comes from its own keyed stream.
pub fn add_render_noise(f: &FrameSeq, m: &NoiseModel) -> Result<FrameSeq> {
    m.validate()?;
    let sigma = m.sigma();
    if sigma == 0.0 {
        return Ok(f.clone());
    }
    let pixels = f.pixels();
    let mut data = f.data().to_vec();
    data.par_chunks_mut(FrameSeq::CHANNELS).enumerate().for_each(|(i, px)| {
        let (frame, pixel) = ((i / pixels) as u64, (i % pixels) as u64);
        let mut r = rng::stream(m.seed, &[rng::TAG_RENDER_NOISE, frame, pixel]);
        for v in px.iter_mut() {
            let z: f64 = r.sample(StandardNormal);
            *v = ((*v as f64) * (1.0 + sigma * z)).max(0.0) as f32;
        }
    });
    FrameSeq::new(f.width(), f.height(), f.fps(), data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: SceneKind) -> SceneSpec {
        SceneSpec { kind, width: 16, height: 8, duration: 0.05, ..SceneSpec::default() }
    }

    #[test]
    fn static_edge_is_constant() {
        let s = SceneSpec { velocity: 0.0, ..spec(SceneKind::MovingEdge) };
        let f = gen_scene(&s).unwrap();
        for k in 1..f.frame_count() {
            assert_eq!(f.frame(k), f.frame(0));
        }
    }

    #[test]
    fn grating_shifts_by_velocity() {
        let s = SceneSpec { velocity: 100.0, spatial_freq: 0.125, ..spec(SceneKind::Grating) };
        let f = gen_scene(&s).unwrap();
        // 100 px/s at 1000 fps: one pixel every 10 frames.
        for (k, shift) in [(10usize, 1usize), (20, 2), (40, 4)] {
            for y in 0..s.height {
                for x in shift..s.width {
                    let a = f.rgb(k, x, y)[0];
                    let b = f.rgb(0, x - shift, y)[0];
                    assert!((a - b).abs() < 1e-6, "k={k} x={x}: {a} vs {b}");
                }
                // Wrap-around through the 8-pixel period.
                for x in 0..shift {
                    let a = f.rgb(k, x, y)[0];
                    let b = f.rgb(0, x + 8 - shift, y)[0];
                    assert!((a - b).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn deterministic_and_in_range() {
        for kind in SceneKind::ALL {
            let a = gen_scene(&spec(kind)).unwrap();
            let b = gen_scene(&spec(kind)).unwrap();
            assert_eq!(a, b);
            assert!(a.data().iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn edge_coverage_tracks_position() {
        let s = SceneSpec { velocity: 50.0, ..spec(SceneKind::MovingEdge) };
        let f = gen_scene(&s).unwrap();
        let (lo, hi) = s.levels(s.contrast);
        for k in [0, 13, 40] {
            let xe = s.edge_position(k as f64 / s.fps);
            for x in 0..s.width {
                let cov = (xe - x as f64).clamp(0.0, 1.0);
                let expect = lo + (hi - lo) * cov;
                assert!((f.rgb(k, x, 0)[1] as f64 - expect).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn flashing_light_toggles() {
        let s = SceneSpec { flash_period: 0.02, ..spec(SceneKind::FlashingLight) };
        let f = gen_scene(&s).unwrap();
        let centre = (s.height / 2 * s.width + s.width / 2) * 3;
        let distinct: std::collections::BTreeSet<u32> =
            (0..f.frame_count()).map(|k| f.frame(k)[centre].to_bits()).collect();
        assert_eq!(distinct.len(), 2);
    }

    #[test]
    fn config_errors() {
        assert!(gen_scene(&SceneSpec { width: 0, ..SceneSpec::default() }).is_err());
        assert!(gen_scene(&SceneSpec { fps: 0.0, ..SceneSpec::default() }).is_err());
        assert!(gen_scene(&SceneSpec { contrast: 1.5, ..SceneSpec::default() }).is_err());
        assert!("disco".parse::<SceneKind>().is_err());
        assert_eq!("flashing_light".parse::<SceneKind>().unwrap(), SceneKind::FlashingLight);
    }

    fn constant_frames(v: f32) -> FrameSeq {
        // 100 x 100 pixels x 4 frames x 3 channels = 120k samples
        FrameSeq::new(100, 100, 1000.0, vec![v; 100 * 100 * 4 * 3]).unwrap()
    }

    fn moments(f: &FrameSeq) -> (f64, f64) {
        let n = f.data().len() as f64;
        let mean = f.data().iter().map(|&v| v as f64).sum::<f64>() / n;
        let var = f.data().iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var.sqrt())
    }

    #[test]
    fn zero_gain_is_identity() {
        let f = gen_scene(&spec(SceneKind::Mixed)).unwrap();
        let m = NoiseModel { gain: 0.0, ..NoiseModel::default() };
        assert_eq!(add_render_noise(&f, &m).unwrap(), f);
    }

    #[test]
    fn noise_std_scales_with_inverse_sqrt_spp() {
        let f = constant_frames(0.5);
        let (_, lo_spp) = moments(&add_render_noise(&f, &NoiseModel { spp: 64, gain: 0.5, seed: 1 }).unwrap());
        let (_, hi_spp) = moments(&add_render_noise(&f, &NoiseModel { spp: 2048, gain: 0.5, seed: 2 }).unwrap());
        let ratio = lo_spp / hi_spp;
        assert!((ratio / 32f64.sqrt() - 1.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn noise_is_unbiased() {
        let f = constant_frames(0.5);
        let m = NoiseModel { spp: 64, gain: 0.5, seed: 3 };
        let (mean, _) = moments(&add_render_noise(&f, &m).unwrap());
        let sigma = 0.5 * m.sigma();
        let n = f.data().len() as f64;
        assert!((mean - 0.5).abs() < 3.0 * sigma / n.sqrt(), "mean {mean}");
    }

    #[test]
    fn noise_is_keyed_per_sample() {
        let f = constant_frames(0.5);
        let m = NoiseModel::default();
        let a = add_render_noise(&f, &m).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap()
            .install(|| add_render_noise(&f, &m).unwrap());
        assert_eq!(a, b);
        assert_ne!(a, add_render_noise(&f, &NoiseModel { seed: 9, ..m }).unwrap());
    }
}
