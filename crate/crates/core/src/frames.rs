//! Frame sequences and their per-pixel log-luminance differences.

use crate::error::{Error, Result};

/// A `width × height` RGB video in linear radiance, sampled at `fps`.
///
/// Storage is frame-major, then row-major, channel-interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSeq {
    width: usize,
    height: usize,
    fps: f64,
    frames: usize,
    data: Vec<f32>,
}

impl FrameSeq {
    pub const CHANNELS: usize = 3;

    pub fn new(width: usize, height: usize, fps: f64, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Config(format!("frame dims must be positive, got {width}x{height}")));
        }
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::Config(format!("fps must be positive, got {fps}")));
        }
        let frame_len = width * height * Self::CHANNELS;
        if data.len() % frame_len != 0 {
            return Err(Error::Shape(format!(
                "{} samples is not a whole number of {width}x{height} RGB frames",
                data.len()
            )));
        }
        let frames = data.len() / frame_len;
        if frames < 2 {
            return Err(Error::Shape(format!("need at least 2 frames, got {frames}")));
        }
        if let Some(bad) = data.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Range(format!("radiance must be finite and non-negative, got {bad}")));
        }
        Ok(Self { width, height, fps, frames, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    /// Number of frames, `K + 1`.
    pub fn frame_count(&self) -> usize {
        self.frames
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn frame(&self, k: usize) -> &[f32] {
        let len = self.pixels() * Self::CHANNELS;
        &self.data[k * len..(k + 1) * len]
    }

    pub fn rgb(&self, k: usize, x: usize, y: usize) -> [f32; 3] {
        let i = ((k * self.height + y) * self.width + x) * Self::CHANNELS;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }
}

/// Per-pixel sequences `X_1..X_K` of log-luminance differences.
///
/// Storage is pixel-major: pixel `y * width + x` owns `data[p*K..(p+1)*K]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogDiffSeq {
    width: usize,
    height: usize,
    fps: f64,
    ticks: usize,
    data: Vec<f32>,
}

impl LogDiffSeq {
    pub fn new(width: usize, height: usize, fps: f64, ticks: usize, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 || ticks == 0 {
            return Err(Error::Shape(format!("empty sequence {width}x{height}x{ticks}")));
        }
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::Config(format!("fps must be positive, got {fps}")));
        }
        if data.len() != width * height * ticks {
            return Err(Error::Shape(format!(
                "expected {} samples for {width}x{height}x{ticks}, got {}",
                width * height * ticks,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Range("log differences must be finite".into()));
        }
        Ok(Self { width, height, fps, ticks, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    /// Sequence length `K`.
    pub fn ticks(&self) -> usize {
        self.ticks
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn pixel(&self, p: usize) -> &[f32] {
        &self.data[p * self.ticks..(p + 1) * self.ticks]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }
}
