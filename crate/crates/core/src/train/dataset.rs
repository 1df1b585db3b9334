use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::events::SpikeTrain;
use crate::frames::LogDiffSeq;
use crate::luminance::{log_diff_sequence, LuminanceConfig};
use crate::refsim::{self, RefSimConfig};
use crate::rng;
use crate::scenegen::{add_render_noise, gen_scene, NoiseModel, SceneSpec};

/// Noisy network input paired with the simulator's output on clean frames.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetPair {
    pub x: LogDiffSeq,
    pub e: SpikeTrain,
    pub scene: SceneSpec,
    /// Noise and simulator settings actually used, seeds included.
    pub noise: NoiseModel,
    pub reference: RefSimConfig,
}

impl DatasetPair {
    pub fn new(x: LogDiffSeq, e: SpikeTrain, scene: SceneSpec, noise: NoiseModel, reference: RefSimConfig) -> Result<Self> {
        if (x.width(), x.height(), x.ticks()) != (e.width(), e.height(), e.ticks()) {
            return Err(Error::ShapeMismatch(format!(
                "input {}x{}x{} vs target {}x{}x{}",
                x.width(),
                x.height(),
                x.ticks(),
                e.width(),
                e.height(),
                e.ticks()
            )));
        }
        Ok(Self { x, e, scene, noise, reference })
    }

    pub fn pixels(&self) -> usize {
        self.x.pixels()
    }
}

/// Scene `i` draws render noise from `mix(noise.seed, [scene.seed, i])` and
/// simulator noise from `mix(reference.seed, [scene.seed, i])`.
pub fn make_dataset(
    scenes: &[SceneSpec],
    noise: &NoiseModel,
    reference: &RefSimConfig,
    lum: &LuminanceConfig,
) -> Result<Vec<DatasetPair>> {
    noise.validate()?;
    reference.validate()?;
    lum.validate()?;
    scenes
        .par_iter()
        .enumerate()
        .map(|(i, spec)| {
            let clean = gen_scene(spec)?;
            let nm = NoiseModel { seed: rng::mix(noise.seed, &[spec.seed, i as u64]), ..*noise };
            let noisy = add_render_noise(&clean, &nm)?;
            let rc = RefSimConfig { seed: rng::mix(reference.seed, &[spec.seed, i as u64]), ..*reference };
            let e = refsim::simulate(&log_diff_sequence(&clean, lum)?, &rc)?;
            let x = log_diff_sequence(&noisy, lum)?;
            DatasetPair::new(x, e, spec.clone(), nm, rc)
        })
        .collect()
}
