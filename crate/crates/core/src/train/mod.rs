//! Dataset assembly and the training loop.
//!
//! A sample is one pixel sequence of one [`DatasetPair`]; a batch is a set
//! of samples. Per-sample gradients are summed in fixed chunks of
//! [`GRAD_CHUNK`] samples and the chunk sums are then added in batch order,
//! so a run is bit-for-bit reproducible regardless of the worker count.

mod adam;
mod dataset;

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;

pub use adam::{adam_step, AdamState};
pub use dataset::{make_dataset, DatasetPair};

use crate::error::{Error, Result};
use crate::evsnet::{self, EvsNetConfig, EvsNetParams};
use crate::loss::{self, LossConfig};
use crate::refsim;
use crate::rng;

pub const GRAD_CHUNK: usize = 8;

/// Which output of the network head the training loss sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForwardMode {
    /// Smooth relaxation of the spikes.
    Soft,
    /// The hard spikes themselves; the surrogate still drives backward.
    Hard,
}

impl fmt::Display for ForwardMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ForwardMode::Soft => "soft",
            ForwardMode::Hard => "hard",
        })
    }
}

impl FromStr for ForwardMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "soft" => Ok(ForwardMode::Soft),
            "hard" => Ok(ForwardMode::Hard),
            _ => Err(Error::Config(format!("unknown forward mode {s:?} (soft|hard)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Pixels per optimizer step.
    pub batch: usize,
    pub lr: f64,
    pub loss: LossConfig,
    /// Cap on the global gradient norm.
    pub clip: f64,
    pub seed: u64,
    /// Fraction of samples held out from gradients.
    pub holdout: f64,
    pub forward: ForwardMode,
    /// Overwritten with the current parameters after every epoch.
    pub checkpoint: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch: 256,
            lr: 1e-3,
            loss: LossConfig::default(),
            clip: 1.0,
            seed: 0,
            holdout: 0.2,
            forward: ForwardMode::Soft,
            checkpoint: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.epochs < 1 {
            return bad("epochs must be >= 1");
        }
        if self.batch < 1 {
            return bad("batch must be >= 1");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr must be positive");
        }
        if !(self.clip > 0.0) {
            return bad("clip must be positive");
        }
        if !(0.0..=0.5).contains(&self.holdout) {
            return bad("holdout must lie in [0, 0.5]");
        }
        self.loss.validate()
    }
}

/// One pixel sequence of one dataset pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SampleId {
    pub pair: usize,
    pub pixel: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean training loss over the epoch's batches, as seen by the optimizer.
    pub train_loss: f64,
    /// Hard-spike total loss on the held-out samples.
    pub holdout_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
    pub train: Vec<SampleId>,
    pub holdout: Vec<SampleId>,
    pub steps: u64,
}

impl History {
    /// `epoch,train_loss,holdout_loss`; the last field is empty without a holdout.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["epoch", "train_loss", "holdout_loss"])?;
        for r in &self.epochs {
            let h = r.holdout_loss.map(|v| v.to_string()).unwrap_or_default();
            wr.write_record(&[r.epoch.to_string(), r.train_loss.to_string(), h])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Hooks into the loop for instrumentation.
pub trait TrainObserver {
    fn on_batch(&mut self, _samples: &[SampleId]) {}
    /// Gradient norm before and after clipping.
    fn on_update(&mut self, _raw_norm: f64, _applied_norm: f64) {}
    fn on_epoch(&mut self, _record: &EpochRecord) {}
}

impl TrainObserver for () {}

/// Deterministic split into `(train, holdout)`.
pub fn split_samples(data: &[DatasetPair], holdout: f64, seed: u64) -> (Vec<SampleId>, Vec<SampleId>) {
    let mut ids: Vec<SampleId> = data
        .iter()
        .enumerate()
        .flat_map(|(pair, d)| (0..d.pixels()).map(move |pixel| SampleId { pair, pixel }))
        .collect();
    ids.shuffle(&mut rng::stream(seed, &[rng::TAG_SPLIT]));
    let n_hold = (holdout * ids.len() as f64).round() as usize;
    let train = ids.split_off(n_hold);
    let mut hold = ids;
    hold.sort();
    (train, hold)
}

fn input_of(data: &[DatasetPair], id: SampleId) -> &[f32] {
    data[id.pair].x.pixel(id.pixel)
}

fn target_of(data: &[DatasetPair], id: SampleId) -> Vec<f64> {
    data[id.pair].e.pixel(id.pixel).iter().map(|&v| v as f64).collect()
}

/// Summed per-sample loss and parameter gradient over `ids`.
fn chunk_gradient(
    data: &[DatasetPair],
    ids: &[SampleId],
    p: &EvsNetParams<f32>,
    cfg: &TrainConfig,
) -> Result<(f64, EvsNetParams<f32>)> {
    let mut grads = EvsNetParams::zeros(*p.config())?;
    let mut loss_sum = 0.0;
    for &id in ids {
        let (spikes, cache) = evsnet::forward(input_of(data, id), p, 0.0)?;
        let s: Vec<f64> = match cfg.forward {
            ForwardMode::Soft => cache.relaxed(p.config()).iter().map(|&v| v as f64).collect(),
            ForwardMode::Hard => spikes.iter().map(|&v| v as f64).collect(),
        };
        let e = target_of(data, id);
        let (emd, count) = loss::pixel_loss(&e, &s)?;
        loss_sum += emd + cfg.loss.lambda * count;
        let g: Vec<f32> = loss::pixel_loss_grad(&e, &s, cfg.loss.lambda)?.into_iter().map(|v| v as f32).collect();
        evsnet::backward_accumulate(&g, &cache, p, &mut grads)?;
    }
    Ok((loss_sum, grads))
}

/// Mean loss and gradient over a batch; independent of the thread count.
pub fn batch_gradient(
    data: &[DatasetPair],
    batch: &[SampleId],
    p: &EvsNetParams<f32>,
    cfg: &TrainConfig,
) -> Result<(f64, EvsNetParams<f32>)> {
    let parts: Vec<(f64, EvsNetParams<f32>)> = batch
        .par_chunks(GRAD_CHUNK)
        .map(|c| chunk_gradient(data, c, p, cfg))
        .collect::<Result<_>>()?;
    let mut grads = EvsNetParams::zeros(*p.config())?;
    let mut loss = 0.0;
    for (l, g) in &parts {
        loss += l;
        grads.add_assign(g);
    }
    let n = batch.len() as f64;
    grads.scale((1.0 / n) as f32);
    Ok((loss / n, grads))
}

/// Mean hard-spike `emd_polar + lambda * count` of the network over `ids`,
/// starting every neuron at zero potential.
pub fn evaluate(data: &[DatasetPair], ids: &[SampleId], p: &EvsNetParams<f32>, cfg: &LossConfig) -> Result<f64> {
    let losses: Vec<f64> = ids
        .par_iter()
        .map(|&id| {
            let s: Vec<f64> = evsnet::infer_pixel(input_of(data, id), p, 0.0).iter().map(|&v| v as f64).collect();
            let (emd, count) = loss::pixel_loss(&target_of(data, id), &s)?;
            Ok(emd + cfg.lambda * count)
        })
        .collect::<Result<_>>()?;
    Ok(losses.iter().sum::<f64>() / ids.len().max(1) as f64)
}

/// As [`evaluate`] for the non-integrating threshold baseline.
pub fn evaluate_naive(data: &[DatasetPair], ids: &[SampleId], theta: f64, cfg: &LossConfig) -> Result<f64> {
    let losses: Vec<f64> = ids
        .par_iter()
        .map(|&id| {
            let s: Vec<f64> = refsim::naive_pixel(input_of(data, id), theta).iter().map(|&v| v as f64).collect();
            let (emd, count) = loss::pixel_loss(&target_of(data, id), &s)?;
            Ok(emd + cfg.lambda * count)
        })
        .collect::<Result<_>>()?;
    Ok(losses.iter().sum::<f64>() / ids.len().max(1) as f64)
}

pub fn train(data: &[DatasetPair], net_cfg: &EvsNetConfig, cfg: &TrainConfig) -> Result<(EvsNetParams<f32>, History)> {
    train_observed(data, net_cfg, cfg, &mut ())
}

pub fn train_observed(
    data: &[DatasetPair],
    net_cfg: &EvsNetConfig,
    cfg: &TrainConfig,
    observer: &mut dyn TrainObserver,
) -> Result<(EvsNetParams<f32>, History)> {
    cfg.validate()?;
    net_cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Config("training data is empty".into()));
    }
    let ticks = data[0].x.ticks();
    if data.iter().any(|d| d.x.ticks() != ticks) {
        return Err(Error::ShapeMismatch("all pairs must share the sequence length".into()));
    }
    let (train_ids, holdout_ids) = split_samples(data, cfg.holdout, cfg.seed);
    if train_ids.is_empty() {
        return Err(Error::Config("no training samples left after the holdout split".into()));
    }

    let mut params = evsnet::init_params(net_cfg, cfg.seed)?;
    let mut state = AdamState::new(params.len());
    let mut history = History { train: train_ids.clone(), holdout: holdout_ids.clone(), ..History::default() };
    let mut order = train_ids;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng::stream(cfg.seed, &[rng::TAG_SHUFFLE, epoch as u64]));
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for batch in order.chunks(cfg.batch) {
            observer.on_batch(batch);
            let (loss, mut grads) = batch_gradient(data, batch, &params, cfg)?;
            let raw = grads.norm();
            if !loss.is_finite() || !raw.is_finite() {
                return Err(Error::Divergence { epoch, loss });
            }
            if raw > cfg.clip {
                grads.scale((cfg.clip / raw) as f32);
            }
            observer.on_update(raw, grads.norm());
            adam_step(params.as_mut_slice(), grads.as_slice(), &mut state, cfg.lr);
            epoch_loss += loss;
            batches += 1;
            history.steps += 1;
        }
        let train_loss = epoch_loss / batches as f64;
        let holdout_loss = if holdout_ids.is_empty() {
            None
        } else {
            Some(evaluate(data, &holdout_ids, &params, &cfg.loss)?)
        };
        if let Some(h) = holdout_loss.filter(|h| !h.is_finite()) {
            return Err(Error::Divergence { epoch, loss: h });
        }
        let record = EpochRecord { epoch, train_loss, holdout_loss };
        log::info!("epoch {epoch}: train {train_loss:.6} holdout {holdout_loss:?}");
        observer.on_epoch(&record);
        history.epochs.push(record);
        if let Some(path) = &cfg.checkpoint {
            evsnet::write_checkpoint(path, &params)?;
        }
    }
    Ok((params, history))
}
