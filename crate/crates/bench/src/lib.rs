//! Shared fixtures for the benchmarks and the scaling check.

use evsynth_core::evsnet::{init_params, EvsNetConfig, EvsNetParams};
use evsynth_core::luminance::log_diff_sequence;
use evsynth_core::scenegen::{add_render_noise, gen_scene};
use evsynth_core::{FrameSeq, LogDiffSeq, LuminanceConfig, NoiseModel, SceneKind, SceneSpec};

/// Noisy mixed scene of `side × side` pixels and `ticks` log differences.
pub fn noisy_frames(side: usize, ticks: usize) -> FrameSeq {
    let spec = SceneSpec {
        kind: SceneKind::Mixed,
        width: side,
        height: side,
        duration: ticks as f64 / 1000.0,
        ..SceneSpec::default()
    };
    add_render_noise(&gen_scene(&spec).unwrap(), &NoiseModel::default()).unwrap()
}

pub fn log_diffs(side: usize, ticks: usize) -> LogDiffSeq {
    log_diff_sequence(&noisy_frames(side, ticks), &LuminanceConfig::default()).unwrap()
}

pub fn network() -> EvsNetParams<f32> {
    init_params(&EvsNetConfig::default(), 1).unwrap()
}
