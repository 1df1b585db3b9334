//! Event streams in dense tensor form and sparse `(t, x, y, p)` form.

use rayon::prelude::*;

use crate::error::{Error, Result};

pub const MICROS_PER_SECOND: f64 = 1e6;

/// Dense per-pixel spike sequences with entries in `{-1, 0, +1}`.
///
/// Storage is pixel-major, identical to [`crate::LogDiffSeq`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpikeTrain {
    width: usize,
    height: usize,
    fps: FpsBits,
    ticks: usize,
    data: Vec<i8>,
}

// f64 wrapper so SpikeTrain can derive Eq; fps is validated finite.
#[derive(Debug, Clone, Copy)]
struct FpsBits(f64);

impl PartialEq for FpsBits {
    fn eq(&self, other: &Self) -> bool {
        self.0.to_bits() == other.0.to_bits()
    }
}
impl Eq for FpsBits {}

fn check_fps(fps: f64) -> Result<()> {
    // Above 1 MHz two ticks could share one microsecond timestamp.
    if fps.is_finite() && fps > 0.0 && fps <= MICROS_PER_SECOND {
        Ok(())
    } else {
        Err(Error::Config(format!("tick rate must lie in (0, 1e6], got {fps}")))
    }
}

impl SpikeTrain {
    pub fn zeros(width: usize, height: usize, fps: f64, ticks: usize) -> Result<Self> {
        Self::new(width, height, fps, ticks, vec![0; width * height * ticks])
    }

    pub fn new(width: usize, height: usize, fps: f64, ticks: usize, data: Vec<i8>) -> Result<Self> {
        check_fps(fps)?;
        if width == 0 || height == 0 || ticks == 0 {
            return Err(Error::Shape(format!("empty train {width}x{height}x{ticks}")));
        }
        if data.len() != width * height * ticks {
            return Err(Error::Shape(format!(
                "expected {} entries for {width}x{height}x{ticks}, got {}",
                width * height * ticks,
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|s| !(-1..=1).contains(*s)) {
            return Err(Error::Range(format!("spike entries must be in {{-1,0,1}}, got {bad}")));
        }
        Ok(Self { width, height, fps: FpsBits(fps), ticks, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn fps(&self) -> f64 {
        self.fps.0
    }

    pub fn ticks(&self) -> usize {
        self.ticks
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn pixel(&self, p: usize) -> &[i8] {
        &self.data[p * self.ticks..(p + 1) * self.ticks]
    }

    pub fn data(&self) -> &[i8] {
        &self.data
    }

    /// Number of nonzero entries.
    pub fn event_count(&self) -> usize {
        self.data.iter().filter(|&&s| s != 0).count()
    }

    /// Elementwise negation (polarity relabeling).
    pub fn negated(&self) -> Self {
        Self { data: self.data.iter().map(|s| -s).collect(), ..self.clone() }
    }

    pub fn same_shape(&self, other: &SpikeTrain) -> Result<()> {
        if self.width == other.width && self.height == other.height && self.ticks == other.ticks {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "{}x{}x{} vs {}x{}x{}",
                self.width, self.height, self.ticks, other.width, other.height, other.ticks
            )))
        }
    }
}

/// One camera event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Event {
    pub t_us: u64,
    pub x: u16,
    pub y: u16,
    pub p: i8,
}

impl Event {
    pub fn new(t_us: u64, x: u16, y: u16, p: i8) -> Self {
        Self { t_us, x, y, p }
    }

    #[inline]
    fn order_key(&self) -> (u64, u16, u16) {
        (self.t_us, self.y, self.x)
    }
}

/// Events sorted by time, ties broken by `(y, x)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventList {
    width: usize,
    height: usize,
    events: Vec<Event>,
}

impl EventList {
    /// Validates ordering, coordinates and polarities.
    pub fn new(width: usize, height: usize, events: Vec<Event>) -> Result<Self> {
        if width > u16::MAX as usize + 1 || height > u16::MAX as usize + 1 {
            return Err(Error::Range(format!("dims {width}x{height} exceed 16-bit coordinates")));
        }
        for (i, e) in events.iter().enumerate() {
            if e.x as usize >= width || e.y as usize >= height {
                return Err(Error::Range(format!(
                    "event {i} at ({}, {}) outside {width}x{height}",
                    e.x, e.y
                )));
            }
            if e.p != 1 && e.p != -1 {
                return Err(Error::Format(format!("event {i} has polarity {}", e.p)));
            }
            if i > 0 && events[i - 1].order_key() >= e.order_key() {
                return Err(Error::Format(format!("event {i} out of (t, y, x) order")));
            }
        }
        Ok(Self { width, height, events })
    }

    /// Sorts into canonical order before validating.
    pub fn from_unsorted(width: usize, height: usize, mut events: Vec<Event>) -> Result<Self> {
        events.sort_unstable_by_key(Event::order_key);
        Self::new(width, height, events)
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self { width, height, events: Vec::new() }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// Timestamp of tick `k` at rate `fps`, rounded to the nearest microsecond.
#[inline]
pub fn tick_to_micros(k: usize, fps: f64) -> u64 {
    (k as f64 * MICROS_PER_SECOND / fps).round() as u64
}

#[inline]
pub fn micros_to_tick(t_us: u64, fps: f64) -> u64 {
    (t_us as f64 * fps / MICROS_PER_SECOND).round() as u64
}

/// One record per nonzero entry of `s`.
pub fn dense_to_sparse(s: &SpikeTrain) -> EventList {
    let (w, k_len, fps) = (s.width, s.ticks, s.fps());
    let mut events: Vec<Event> = (0..s.pixels())
        .into_par_iter()
        .flat_map_iter(|p| {
            let (x, y) = ((p % w) as u16, (p / w) as u16);
            s.pixel(p)
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0)
                .map(move |(k, &v)| Event::new(tick_to_micros(k, fps), x, y, v))
        })
        .collect();
    // Keys are unique (one event per pixel per tick, fps <= 1e6), so the
    // unstable sort is deterministic.
    events.par_sort_unstable_by_key(Event::order_key);
    debug_assert!(k_len > 0);
    EventList { width: s.width, height: s.height, events }
}

/// Inverse of [`dense_to_sparse`] for a known rate and length.
pub fn sparse_to_dense(e: &EventList, fps: f64, ticks: usize) -> Result<SpikeTrain> {
    let mut train = SpikeTrain::zeros(e.width, e.height, fps, ticks)?;
    for ev in &e.events {
        let k = micros_to_tick(ev.t_us, fps);
        if k >= ticks as u64 {
            return Err(Error::Range(format!(
                "event at {} us maps to tick {k}, outside [0, {ticks})",
                ev.t_us
            )));
        }
        let idx = (ev.y as usize * e.width + ev.x as usize) * ticks + k as usize;
        if train.data[idx] != 0 {
            return Err(Error::Collision(format!(
                "two events at pixel ({}, {}) map to tick {k}",
                ev.x, ev.y
            )));
        }
        train.data[idx] = ev.p;
    }
    Ok(train)
}

/// Events integrated into fixed-rate temporal bins.
///
/// Counts are stored bin-major, then row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    pub width: usize,
    pub height: usize,
    pub bin_fps: f64,
    pub bins: usize,
    pub signed: Vec<i32>,
    pub unsigned: Vec<u32>,
}

impl VoxelGrid {
    pub fn index(&self, bin: usize, x: usize, y: usize) -> usize {
        (bin * self.height + y) * self.width + x
    }

    pub fn total_unsigned(&self) -> u64 {
        self.unsigned.iter().map(|&c| c as u64).sum()
    }
}

/// Bin events at `bin_fps`; bin index is `floor(t * bin_fps / 1e6)`.
///
/// The grid spans `duration_s` seconds when given, otherwise up to the last
/// event. It always holds at least one bin and is extended to cover every
/// event.
pub fn voxelize(e: &EventList, bin_fps: f64, duration_s: Option<f64>) -> Result<VoxelGrid> {
    if !(bin_fps.is_finite() && bin_fps > 0.0) {
        return Err(Error::Config(format!("bin rate must be positive, got {bin_fps}")));
    }
    let bin_of = |t_us: u64| (t_us as f64 * bin_fps / MICROS_PER_SECOND).floor() as usize;
    let duration = duration_s.unwrap_or_else(|| {
        e.events.last().map_or(0.0, |ev| (ev.t_us + 1) as f64 / MICROS_PER_SECOND)
    });
    let mut bins = (duration * bin_fps).ceil() as usize;
    if let Some(last) = e.events.last() {
        bins = bins.max(bin_of(last.t_us) + 1);
    }
    let bins = bins.max(1);
    let cells = bins * e.width * e.height;
    let mut grid = VoxelGrid {
        width: e.width,
        height: e.height,
        bin_fps,
        bins,
        signed: vec![0; cells],
        unsigned: vec![0; cells],
    };
    for ev in &e.events {
        let i = grid.index(bin_of(ev.t_us), ev.x as usize, ev.y as usize);
        grid.signed[i] += ev.p as i32;
        grid.unsigned[i] += 1;
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn all_zero_train_is_empty_list() {
        let s = SpikeTrain::zeros(3, 2, 1000.0, 5).unwrap();
        assert!(dense_to_sparse(&s).is_empty());
        assert_eq!(sparse_to_dense(&EventList::empty(3, 2), 1000.0, 5).unwrap(), s);
    }

    #[test]
    fn hand_example_timestamps() {
        let s = SpikeTrain::new(1, 1, 1000.0, 3, vec![1, 0, -1]).unwrap();
        let e = dense_to_sparse(&s);
        assert_eq!(e.events(), &[Event::new(0, 0, 0, 1), Event::new(2000, 0, 0, -1)]);
        assert_eq!(sparse_to_dense(&e, 1000.0, 3).unwrap(), s);
    }

    #[test]
    fn collision_and_range_errors() {
        let both = vec![Event::new(5000, 1, 0, 1), Event::new(5000, 1, 0, -1)];
        // Same key twice is already out of strict order.
        assert!(EventList::new(2, 1, both.clone()).is_err());
        // Two timestamps rounding to the same tick.
        let near = EventList::new(2, 1, vec![Event::new(5000, 1, 0, 1), Event::new(5100, 1, 0, -1)]).unwrap();
        assert!(matches!(sparse_to_dense(&near, 1000.0, 10), Err(Error::Collision(_))));
        let late = EventList::new(2, 1, vec![Event::new(10_000, 0, 0, 1)]).unwrap();
        assert!(matches!(sparse_to_dense(&late, 1000.0, 10), Err(Error::Range(_))));
    }

    #[test]
    fn list_validation() {
        assert!(matches!(EventList::new(2, 2, vec![Event::new(0, 2, 0, 1)]), Err(Error::Range(_))));
        assert!(matches!(EventList::new(2, 2, vec![Event::new(0, 0, 0, 0)]), Err(Error::Format(_))));
        let swapped = vec![Event::new(0, 0, 1, 1), Event::new(0, 1, 0, 1)];
        assert!(EventList::new(2, 2, swapped.clone()).is_err());
        let sorted = EventList::from_unsorted(2, 2, swapped).unwrap();
        assert_eq!(sorted.events()[0], Event::new(0, 1, 0, 1));
    }

    #[test]
    fn voxelize_hand_binning() {
        let empty = voxelize(&EventList::empty(1, 1), 1000.0, None).unwrap();
        assert_eq!(empty.bins, 1);
        assert_eq!(empty.total_unsigned(), 0);

        let e = EventList::new(1, 1, vec![Event::new(0, 0, 0, 1), Event::new(500, 0, 0, -1)]).unwrap();
        let g = voxelize(&e, 1000.0, None).unwrap();
        assert_eq!(g.bins, 1);
        assert_eq!(g.signed[0], 0);
        assert_eq!(g.unsigned[0], 2);

        let g = voxelize(&e, 1000.0, Some(0.01)).unwrap();
        assert_eq!(g.bins, 10);
    }

    fn arb_train() -> impl Strategy<Value = SpikeTrain> {
        (1usize..6, 1usize..6, 1usize..40, prop::sample::select(vec![30.0, 60.0, 1000.0, 1e6]))
            .prop_flat_map(|(w, h, k, fps)| {
                prop::collection::vec(prop::sample::select(vec![-1i8, 0, 0, 0, 1]), w * h * k)
                    .prop_map(move |d| SpikeTrain::new(w, h, fps, k, d).unwrap())
            })
    }

    proptest! {
        #[test]
        fn dense_sparse_round_trip(s in arb_train()) {
            let e = dense_to_sparse(&s);
            prop_assert_eq!(e.len(), s.event_count());
            // Re-validating proves the producer emits canonical order.
            let e = EventList::new(e.width(), e.height(), e.events().to_vec()).unwrap();
            prop_assert_eq!(sparse_to_dense(&e, s.fps(), s.ticks()).unwrap(), s);
        }

        #[test]
        fn voxelize_conserves_counts(s in arb_train(), bin_fps in 1.0f64..2000.0) {
            let e = dense_to_sparse(&s);
            let g = voxelize(&e, bin_fps, None).unwrap();
            prop_assert_eq!(g.total_unsigned(), e.len() as u64);
            let signed: i64 = g.signed.iter().map(|&v| v as i64).sum();
            let net: i64 = s.data().iter().map(|&v| v as i64).sum();
            prop_assert_eq!(signed, net);
        }
    }
}
