use std::fmt::Debug;
use std::iter::Sum;

use num_traits::{Float, FloatConst};

/// Floating-point scalar used by the network and spiking kernels.
///
/// Inference runs in `f32`; gradient checks instantiate the same code at `f64`.
pub trait Real: Float + FloatConst + Sum + Default + Debug + Send + Sync + 'static {
    fn of(v: f64) -> Self;
    fn f64(self) -> f64;
}

impl Real for f32 {
    #[inline]
    fn of(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    #[inline]
    fn of(v: f64) -> Self {
        v
    }
    #[inline]
    fn f64(self) -> f64 {
        self
    }
}
