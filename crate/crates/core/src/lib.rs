//! Event-camera stream synthesis from high-frame-rate RGB video.
//!
//! The pipeline turns a (possibly noisy) frame sequence into per-pixel
//! log-luminance differences, then into events either with the reference
//! sensor simulator ([`refsim`]) or with the trainable spiking network
//! ([`evsnet`]). [`loss`] and [`train`] fit the network so its output on
//! noisy frames matches the simulator's output on clean frames.

pub mod error;
pub mod eval;
pub mod events;
pub mod evsnet;
pub mod frames;
pub mod io;
pub mod loss;
pub mod luminance;
pub mod real;
pub mod refsim;
pub mod rng;
pub mod scenegen;
pub mod spiking;
pub mod train;

pub use error::{Error, Result};
pub use events::{dense_to_sparse, sparse_to_dense, voxelize, Event, EventList, SpikeTrain, VoxelGrid};
pub use evsnet::{EvsNetConfig, EvsNetParams, ForwardCache, InitialState};
pub use frames::{FrameSeq, LogDiffSeq};
pub use loss::{LossConfig, LossReport};
pub use luminance::LuminanceConfig;
pub use real::Real;
pub use refsim::{InitMode, RefSimConfig};
pub use scenegen::{NoiseModel, SceneKind, SceneSpec};
pub use spiking::{LifParams, NeuronState, SurrogateConfig};
pub use train::{DatasetPair, TrainConfig};

