//! Stream comparison: event-intensity histograms and per-pixel EMD distance.
//!
//! CSV schemas (column order is stable):
//!
//! ```text
//! histogram: bucket,count          last bucket counts every value >= its label
//! distance:  mean_emd,count_ratio,pos_ratio,neg_ratio,pixels
//! ```

use std::io::Write;

use rayon::prelude::*;

use crate::error::Result;
use crate::events::{voxelize, EventList, SpikeTrain};

pub const DEFAULT_BIN_FPS: f64 = 60.0;
pub const DEFAULT_BUCKETS: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct IntensityHistogram {
    pub bin_fps: f64,
    /// `counts[i]` = pixel-bins holding exactly `i` events; the last entry
    /// collects everything at or above `counts.len() - 1`.
    pub counts: Vec<u64>,
}

impl IntensityHistogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["bucket", "count"])?;
        for (i, c) in self.counts.iter().enumerate() {
            wr.write_record(&[i.to_string(), c.to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Voxelize at `bin_fps`, then histogram the unsigned count of every
/// pixel-bin into `buckets` integer buckets.
pub fn intensity_histogram(
    e: &EventList,
    bin_fps: f64,
    buckets: usize,
    duration_s: Option<f64>,
) -> Result<IntensityHistogram> {
    let buckets = buckets.max(1);
    let grid = voxelize(e, bin_fps, duration_s)?;
    let mut counts = vec![0u64; buckets];
    for &c in &grid.unsigned {
        counts[(c as usize).min(buckets - 1)] += 1;
    }
    Ok(IntensityHistogram { bin_fps, counts })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamDistanceReport {
    /// Mean over pixels of the polar bidirectional EMD.
    pub mean_emd: f64,
    /// `sum |a| / sum |b|`.
    pub count_ratio: f64,
    pub pos_ratio: f64,
    pub neg_ratio: f64,
    pub pixels: usize,
}

impl StreamDistanceReport {
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["mean_emd", "count_ratio", "pos_ratio", "neg_ratio", "pixels"])?;
        wr.write_record(&[
            self.mean_emd.to_string(),
            self.count_ratio.to_string(),
            self.pos_ratio.to_string(),
            self.neg_ratio.to_string(),
            self.pixels.to_string(),
        ])?;
        wr.flush()?;
        Ok(())
    }
}

/// `0/0` is a perfect match.
fn ratio(a: u64, b: u64) -> f64 {
    match (a, b) {
        (0, 0) => 1.0,
        (_, 0) => f64::INFINITY,
        _ => a as f64 / b as f64,
    }
}

/// Sum over ticks of |prefix-sum difference| in both directions, for one
/// channel selected by `pick`. Exact integer arithmetic.
fn channel_cost(a: &[i8], b: &[i8], pick: impl Fn(i8) -> i64) -> i64 {
    let (mut fwd, mut acc) = (0i64, 0i64);
    for (&x, &y) in a.iter().zip(b) {
        acc += pick(x) - pick(y);
        fwd += acc.abs();
    }
    let (mut rev, mut acc) = (0i64, 0i64);
    for (&x, &y) in a.iter().zip(b).rev() {
        acc += pick(x) - pick(y);
        rev += acc.abs();
    }
    fwd + rev
}

fn pixel_polar_emd(a: &[i8], b: &[i8]) -> f64 {
    let on = channel_cost(a, b, |v| (v > 0) as i64);
    let off = channel_cost(a, b, |v| (v < 0) as i64);
    (on + off) as f64 / (2 * a.len()) as f64
}

pub fn stream_distance(a: &SpikeTrain, b: &SpikeTrain) -> Result<StreamDistanceReport> {
    a.same_shape(b)?;
    let ticks = a.ticks();
    let per_pixel: Vec<f64> = a
        .data()
        .par_chunks(ticks)
        .zip(b.data().par_chunks(ticks))
        .map(|(x, y)| pixel_polar_emd(x, y))
        .collect();
    let count = |t: &SpikeTrain, want: i8| t.data().iter().filter(|&&v| v == want).count() as u64;
    let (ap, an, bp, bn) = (count(a, 1), count(a, -1), count(b, 1), count(b, -1));
    Ok(StreamDistanceReport {
        mean_emd: per_pixel.iter().sum::<f64>() / per_pixel.len() as f64,
        count_ratio: ratio(ap + an, bp + bn),
        pos_ratio: ratio(ap, bp),
        neg_ratio: ratio(an, bn),
        pixels: per_pixel.len(),
    })
}
