//! Plain-text run configuration.
//!
//! One `section.key = value` per line, `#` starts a comment. Every key has a
//! default; unknown keys are rejected. Values parse when a command needs them.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use evsynth_core::evsnet::EvsNetConfig;
use evsynth_core::train::ForwardMode;
use evsynth_core::{
    InitMode, InitialState, LifParams, LossConfig, LuminanceConfig, NoiseModel, RefSimConfig, SceneKind, SceneSpec,
    SurrogateConfig, TrainConfig,
};

use crate::CliError;

/// `(key, default)` for every accepted key.
pub const KEYS: &[(&str, &str)] = &[
    ("run.seed", "0"),
    ("run.workers", "0"),
    ("scene.kind", "moving_edge"),
    ("scene.width", "32"),
    ("scene.height", "32"),
    ("scene.fps", "1000"),
    ("scene.duration", "0.512"),
    ("scene.velocity", "200"),
    ("scene.spatial_freq", "0.125"),
    ("scene.flash_period", "0.1"),
    ("scene.contrast", "0.8"),
    ("noise.spp", "64"),
    ("noise.gain", "0.5"),
    ("lum.rho_log", "0.02"),
    ("refsim.theta", "0.2"),
    ("refsim.sigma_theta", "0.03"),
    ("refsim.init", "uniform"),
    ("refsim.leak_rate", "0.1"),
    ("refsim.shot_rate", "1.0"),
    ("net.channels", "32"),
    ("net.kernel", "7"),
    ("net.depth", "3"),
    ("net.tau", "2"),
    ("net.v_th", "1"),
    ("net.alpha", "2"),
    ("loss.lambda", "0.1"),
    ("train.scenes", "moving_edge,grating,flashing_light"),
    ("train.epochs", "20"),
    ("train.batch", "256"),
    ("train.lr", "0.001"),
    ("train.clip", "1"),
    ("train.holdout", "0.2"),
    ("train.forward", "soft"),
    ("infer.init", "zero"),
    ("events.width", "0"),
    ("events.height", "0"),
    ("eval.fps", "1000"),
    ("eval.duration", "0"),
    ("hist.bin_fps", "60"),
    ("hist.buckets", "32"),
    ("hist.duration", "0"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<&'static str, String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { values: KEYS.iter().map(|&(k, v)| (k, v.to_string())).collect() }
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.values {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

fn usage(msg: String) -> CliError {
    CliError::Usage(msg)
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let slot = KEYS
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(k, _)| *k)
            .ok_or_else(|| usage(format!("unknown config key {key:?}")))?;
        self.values.insert(slot, value.trim().to_string());
        Ok(())
    }

    /// Apply every assignment in `text`, in order.
    pub fn merge_str(&mut self, text: &str) -> Result<(), CliError> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| usage(format!("line {}: expected `section.key = value`", n + 1)))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn merge_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        self.merge_str(&text)
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("undeclared key {key}"))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, CliError> {
        let raw = self.raw(key);
        raw.parse().map_err(|_| usage(format!("{key}: cannot parse {raw:?}")))
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        self.get("run.seed")
    }

    pub fn workers(&self) -> Result<usize, CliError> {
        self.get("run.workers")
    }

    pub fn scene(&self) -> Result<SceneSpec, CliError> {
        Ok(SceneSpec {
            kind: self.get("scene.kind")?,
            width: self.get("scene.width")?,
            height: self.get("scene.height")?,
            fps: self.get("scene.fps")?,
            duration: self.get("scene.duration")?,
            velocity: self.get("scene.velocity")?,
            spatial_freq: self.get("scene.spatial_freq")?,
            flash_period: self.get("scene.flash_period")?,
            contrast: self.get("scene.contrast")?,
            seed: self.seed()?,
        })
    }

    pub fn noise(&self) -> Result<NoiseModel, CliError> {
        Ok(NoiseModel { spp: self.get("noise.spp")?, gain: self.get("noise.gain")?, seed: self.seed()? })
    }

    pub fn luminance(&self) -> Result<LuminanceConfig, CliError> {
        Ok(LuminanceConfig { rho_log: self.get("lum.rho_log")? })
    }

    pub fn refsim(&self) -> Result<RefSimConfig, CliError> {
        Ok(RefSimConfig {
            theta: self.get("refsim.theta")?,
            sigma_theta: self.get("refsim.sigma_theta")?,
            init_mode: self.get::<InitMode>("refsim.init")?,
            leak_rate: self.get("refsim.leak_rate")?,
            shot_rate: self.get("refsim.shot_rate")?,
            seed: self.seed()?,
        })
    }

    pub fn net(&self) -> Result<EvsNetConfig, CliError> {
        Ok(EvsNetConfig {
            channels: self.get("net.channels")?,
            kernel: self.get("net.kernel")?,
            depth: self.get("net.depth")?,
            lif: LifParams { tau: self.get("net.tau")?, v_th: self.get("net.v_th")? },
            surrogate: SurrogateConfig { alpha: self.get("net.alpha")? },
        })
    }

    pub fn train_scenes(&self) -> Result<Vec<SceneSpec>, CliError> {
        let base = self.scene()?;
        self.raw("train.scenes")
            .split(',')
            .map(|s| {
                let kind: SceneKind = s.trim().parse().map_err(|_| usage(format!("train.scenes: unknown kind {s:?}")))?;
                Ok(SceneSpec { kind, ..base.clone() })
            })
            .collect()
    }

    pub fn train(&self) -> Result<TrainConfig, CliError> {
        Ok(TrainConfig {
            epochs: self.get("train.epochs")?,
            batch: self.get("train.batch")?,
            lr: self.get("train.lr")?,
            loss: LossConfig { lambda: self.get("loss.lambda")? },
            clip: self.get("train.clip")?,
            seed: self.seed()?,
            holdout: self.get("train.holdout")?,
            forward: self.get::<ForwardMode>("train.forward")?,
            checkpoint: None,
        })
    }

    pub fn infer_init(&self) -> Result<InitialState, CliError> {
        match self.raw("infer.init") {
            "zero" => Ok(InitialState::Zero),
            "uniform" => Ok(InitialState::Uniform { seed: self.seed()? }),
            other => Err(usage(format!("infer.init: expected zero|uniform, got {other:?}"))),
        }
    }

    /// Explicit sensor size for CSV inputs; `None` infers it from the events.
    pub fn event_dims(&self) -> Result<Option<(usize, usize)>, CliError> {
        let (w, h): (usize, usize) = (self.get("events.width")?, self.get("events.height")?);
        Ok((w > 0 && h > 0).then_some((w, h)))
    }

    /// Positive duration in seconds, or `None` when set to 0.
    pub fn duration(&self, key: &str) -> Result<Option<f64>, CliError> {
        let d: f64 = self.get(key)?;
        Ok((d > 0.0).then_some(d))
    }
}
