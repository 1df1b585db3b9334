//! Pixel-wise event spiking network.
//!
//! ```text
//! h0   = ReLU(conv_in(x))                                  1 -> C, kernel k
//! h_i  = ReLU(h_{i-1} + conv_i2(ReLU(conv_i1(h_{i-1}))))   C -> C, kernel k, i = 1..M
//! z    = head(h_M)                                         C -> 1, kernel 1
//! S    = BiLIF(z)
//! ```
//!
//! Convolutions are cross-correlations with zero padding `(k - 1) / 2`, so
//! every layer preserves the sequence length and the first and last
//! `(k - 1) / 2 * (2M + 1)` ticks see partial context. Training uses the
//! arctangent surrogate for `dS/dV'` and treats the reset term as constant.

mod checkpoint;
mod conv;

use rand::Rng;
use rayon::prelude::*;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, read_checkpoint, write_checkpoint, EVSN_MAGIC};

use crate::error::{Error, Result};
use crate::events::SpikeTrain;
use crate::frames::LogDiffSeq;
use crate::real::Real;
use crate::rng;
use crate::spiking::{bilif_fire, relaxed_spike, surrogate_grad, LifParams, SurrogateConfig};
use conv::ConvShape;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvsNetConfig {
    pub channels: usize,
    pub kernel: usize,
    pub depth: usize,
    pub lif: LifParams,
    pub surrogate: SurrogateConfig,
}

impl Default for EvsNetConfig {
    fn default() -> Self {
        Self {
            channels: 32,
            kernel: 7,
            depth: 3,
            lif: LifParams::default(),
            surrogate: SurrogateConfig::default(),
        }
    }
}

impl EvsNetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.kernel % 2 == 0 {
            return Err(Error::Config(format!("kernel must be odd, got {}", self.kernel)));
        }
        if self.depth == 0 || self.channels == 0 {
            return Err(Error::Config("depth and channels must be at least 1".into()));
        }
        self.lif.validate()?;
        self.surrogate.validate()
    }

    /// Ticks of input that influence one output tick: `1 + (k - 1)(2M + 1)`.
    pub fn receptive_field(&self) -> usize {
        1 + (self.kernel - 1) * (2 * self.depth + 1)
    }

    /// Named tensor shapes in declaration order.
    pub fn tensor_shapes(&self) -> Vec<(String, Vec<usize>)> {
        let (c, k) = (self.channels, self.kernel);
        let mut v = vec![("input.weight".to_string(), vec![c, 1, k]), ("input.bias".to_string(), vec![c])];
        for i in 1..=self.depth {
            v.push((format!("block{i}.conv1.weight"), vec![c, c, k]));
            v.push((format!("block{i}.conv1.bias"), vec![c]));
            v.push((format!("block{i}.conv2.weight"), vec![c, c, k]));
            v.push((format!("block{i}.conv2.bias"), vec![c]));
        }
        v.push(("head.weight".to_string(), vec![1, c, 1]));
        v.push(("head.bias".to_string(), vec![1]));
        v
    }

    fn input_conv(&self) -> ConvShape {
        ConvShape { in_ch: 1, out_ch: self.channels, kernel: self.kernel }
    }

    fn block_conv(&self) -> ConvShape {
        ConvShape { in_ch: self.channels, out_ch: self.channels, kernel: self.kernel }
    }
}

pub fn receptive_field(cfg: &EvsNetConfig) -> usize {
    cfg.receptive_field()
}

/// All weights and biases, stored flat in declaration order.
///
/// The same type carries gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct EvsNetParams<T = f32> {
    config: EvsNetConfig,
    offsets: Vec<usize>,
    data: Vec<T>,
}

impl<T: Real> EvsNetParams<T> {
    pub fn zeros(config: EvsNetConfig) -> Result<Self> {
        config.validate()?;
        let mut offsets = vec![0];
        for (_, shape) in config.tensor_shapes() {
            offsets.push(offsets.last().unwrap() + shape.iter().product::<usize>());
        }
        let n = *offsets.last().unwrap();
        Ok(Self { config, offsets, data: vec![T::zero(); n] })
    }

    pub fn from_flat(config: EvsNetConfig, data: Vec<T>) -> Result<Self> {
        let mut p = Self::zeros(config)?;
        if data.len() != p.data.len() {
            return Err(Error::Shape(format!("expected {} parameters, got {}", p.data.len(), data.len())));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Range("parameters must be finite".into()));
        }
        p.data = data;
        Ok(p)
    }

    pub fn config(&self) -> &EvsNetConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn tensor_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn tensor(&self, i: usize) -> &[T] {
        &self.data[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn tensor_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn cast<U: Real>(&self) -> EvsNetParams<U> {
        EvsNetParams {
            config: self.config,
            offsets: self.offsets.clone(),
            data: self.data.iter().map(|v| U::of(v.f64())).collect(),
        }
    }

    pub fn fill_zero(&mut self) {
        self.data.fill(T::zero());
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a = *a + b;
        }
    }

    pub fn scale(&mut self, s: T) {
        for a in &mut self.data {
            *a = *a * s;
        }
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v.f64() * v.f64()).sum::<f64>().sqrt()
    }

    // Tensor index helpers matching `tensor_shapes`.
    fn block_index(i: usize) -> usize {
        2 + 4 * i
    }

    fn head_index(&self) -> usize {
        2 + 4 * self.config.depth
    }
}

/// He-style uniform init: weights in `±sqrt(6 / fan_in)` (variance
/// `2 / fan_in`), biases zero.
pub fn init_params(cfg: &EvsNetConfig, seed: u64) -> Result<EvsNetParams<f32>> {
    let mut p = EvsNetParams::<f32>::zeros(*cfg)?;
    for (idx, (name, shape)) in cfg.tensor_shapes().into_iter().enumerate() {
        if shape.len() < 3 {
            continue;
        }
        let fan_in = (shape[1] * shape[2]) as f64;
        let bound = (6.0 / fan_in).sqrt();
        let mut r = rng::stream(seed, &[rng::TAG_INIT, idx as u64]);
        debug_assert!(name.ends_with("weight"));
        for w in p.tensor_mut(idx) {
            *w = (bound * (2.0 * r.random::<f64>() - 1.0)) as f32;
        }
    }
    Ok(p)
}

/// Everything backward needs from one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<T = f32> {
    pub ticks: usize,
    pub channels: usize,
    pub input: Vec<T>,
    /// `h^(0)..h^(M)`, each `C × K`, post-ReLU.
    pub hidden: Vec<Vec<T>>,
    /// Inner post-ReLU activation of each residual block, `C × K`.
    pub inner: Vec<Vec<T>>,
    pub logits: Vec<T>,
    /// Post-charge membrane potential `V'` per tick.
    pub charged: Vec<T>,
    pub v0: T,
}

impl<T: Real> ForwardCache<T> {
    /// Smooth relaxation `sigma(V' - V_th) - sigma(-V' - V_th)` of the spikes.
    pub fn relaxed(&self, cfg: &EvsNetConfig) -> Vec<T> {
        let (v_th, alpha) = (T::of(cfg.lif.v_th), T::of(cfg.surrogate.alpha));
        self.charged.iter().map(|&v| relaxed_spike(v, v_th, alpha)).collect()
    }
}

fn relu_inplace<T: Real>(v: &mut [T]) {
    for x in v {
        if !(*x > T::zero()) {
            *x = T::zero();
        }
    }
}

struct Stack<T> {
    hidden: Vec<Vec<T>>,
    inner: Vec<Vec<T>>,
    logits: Vec<T>,
}

fn run_stack<T: Real>(x: &[T], p: &EvsNetParams<T>) -> Stack<T> {
    let cfg = &p.config;
    let (c, len) = (cfg.channels, x.len());
    let mut h = vec![T::zero(); c * len];
    conv::forward(cfg.input_conv(), p.tensor(0), p.tensor(1), x, len, &mut h);
    relu_inplace(&mut h);
    let mut hidden = vec![h];
    let mut inner = Vec::with_capacity(cfg.depth);
    for i in 0..cfg.depth {
        let b = EvsNetParams::<T>::block_index(i);
        let prev = hidden.last().unwrap();
        let mut r = vec![T::zero(); c * len];
        conv::forward(cfg.block_conv(), p.tensor(b), p.tensor(b + 1), prev, len, &mut r);
        relu_inplace(&mut r);
        let mut next = vec![T::zero(); c * len];
        conv::forward(cfg.block_conv(), p.tensor(b + 2), p.tensor(b + 3), &r, len, &mut next);
        for (n, &h) in next.iter_mut().zip(prev) {
            *n = *n + h;
        }
        relu_inplace(&mut next);
        inner.push(r);
        hidden.push(next);
    }
    let hi = p.head_index();
    let (hw, hb) = (p.tensor(hi), p.tensor(hi + 1)[0]);
    let top = hidden.last().unwrap();
    let mut logits = vec![hb; len];
    for (ch, &w) in hw.iter().enumerate() {
        for (z, &h) in logits.iter_mut().zip(&top[ch * len..(ch + 1) * len]) {
            *z = *z + w * h;
        }
    }
    Stack { hidden, inner, logits }
}

/// Pre-spike logits for one pixel sequence.
pub fn logits<T: Real>(x: &[T], p: &EvsNetParams<T>) -> Vec<T> {
    run_stack(x, p).logits
}

/// Run the BiLIF head over logits; returns spikes, post-charge potentials and final potential.
fn spike_head<T: Real>(z: &[T], lif: &LifParams, v0: T) -> (Vec<i8>, Vec<T>, T) {
    let decay = T::of(lif.decay());
    let v_th = T::of(lif.v_th);
    let mut v = v0;
    let mut charged = Vec::with_capacity(z.len());
    let spikes = z
        .iter()
        .map(|&i| {
            let vp = decay * v + i;
            let s = bilif_fire(vp, v_th);
            charged.push(vp);
            v = vp - T::of(s as f64) * v_th;
            s
        })
        .collect();
    (spikes, charged, v)
}

/// Full forward pass for one pixel sequence starting from potential `v0`.
pub fn forward<T: Real>(x: &[T], p: &EvsNetParams<T>, v0: T) -> Result<(Vec<i8>, ForwardCache<T>)> {
    if x.is_empty() {
        return Err(Error::Shape("input sequence is empty".into()));
    }
    let stack = run_stack(x, p);
    let (spikes, charged, _) = spike_head(&stack.logits, &p.config.lif, v0);
    let cache = ForwardCache {
        ticks: x.len(),
        channels: p.config.channels,
        input: x.to_vec(),
        hidden: stack.hidden,
        inner: stack.inner,
        logits: stack.logits,
        charged,
        v0,
    };
    Ok((spikes, cache))
}

/// Forward over a batch of `x.len() / ticks` pixel sequences laid out back to back.
pub fn forward_batch<T: Real>(x: &[T], ticks: usize, p: &EvsNetParams<T>, v0: T) -> Result<Vec<(Vec<i8>, ForwardCache<T>)>> {
    if ticks == 0 || x.len() % ticks != 0 {
        return Err(Error::Shape(format!("{} samples is not a multiple of K = {ticks}", x.len())));
    }
    x.par_chunks(ticks).map(|px| forward(px, p, v0)).collect()
}

fn check_cache<T: Real>(cache: &ForwardCache<T>, p: &EvsNetParams<T>, grad_len: usize) -> Result<()> {
    let cfg = &p.config;
    let ok = cache.ticks == grad_len
        && cache.channels == cfg.channels
        && cache.hidden.len() == cfg.depth + 1
        && cache.inner.len() == cfg.depth
        && cache.charged.len() == cache.ticks
        && cache.hidden.iter().all(|h| h.len() == cfg.channels * cache.ticks);
    if ok {
        Ok(())
    } else {
        Err(Error::CacheMismatch(format!(
            "cache for K = {}, C = {}, {} layers does not fit gradient of length {grad_len} for C = {}, M = {}",
            cache.ticks,
            cache.channels,
            cache.hidden.len(),
            cfg.channels,
            cfg.depth
        )))
    }
}

/// Backpropagate `dL/dS` through the BiLIF head to `dL/dz`.
///
/// `dS/dV'` is the surrogate, `dV/dV' = 1` (reset held constant) and
/// `dV'_{t+1}/dV_t = 1 - 1/tau`.
pub fn spike_head_backward<T: Real>(grad_spikes: &[T], cache: &ForwardCache<T>, cfg: &EvsNetConfig) -> Vec<T> {
    let decay = T::of(cfg.lif.decay());
    let (v_th, alpha) = (T::of(cfg.lif.v_th), T::of(cfg.surrogate.alpha));
    let mut g = vec![T::zero(); grad_spikes.len()];
    let mut carry = T::zero();
    for t in (0..grad_spikes.len()).rev() {
        let gv = grad_spikes[t] * surrogate_grad(cache.charged[t], v_th, alpha) + carry;
        g[t] = gv;
        carry = decay * gv;
    }
    g
}

/// Accumulate parameter gradients for `dL/dz` into `grads`; returns `dL/dx`.
pub fn backward_from_logits<T: Real>(
    grad_logits: &[T],
    cache: &ForwardCache<T>,
    p: &EvsNetParams<T>,
    grads: &mut EvsNetParams<T>,
) -> Result<Vec<T>> {
    check_cache(cache, p, grad_logits.len())?;
    if grads.config != p.config {
        return Err(Error::ShapeMismatch("gradient buffer has a different architecture".into()));
    }
    let cfg = &p.config;
    let (c, len) = (cfg.channels, cache.ticks);

    // Head: z[t] = hb + sum_c hw[c] h_M[c][t]
    let hi = p.head_index();
    let top = cache.hidden.last().unwrap();
    let mut g_h = vec![T::zero(); c * len];
    {
        let hw = p.tensor(hi).to_vec();
        let gw = grads.tensor_mut(hi);
        for ch in 0..c {
            let row = &top[ch * len..(ch + 1) * len];
            gw[ch] = gw[ch] + row.iter().zip(grad_logits).map(|(&h, &g)| h * g).sum::<T>();
            for (d, &g) in g_h[ch * len..(ch + 1) * len].iter_mut().zip(grad_logits) {
                *d = hw[ch] * g;
            }
        }
        let gb = grads.tensor_mut(hi + 1);
        gb[0] = gb[0] + grad_logits.iter().copied().sum::<T>();
    }

    let mut g_r = vec![T::zero(); c * len];
    let mut g_prev = vec![T::zero(); c * len];
    for i in (0..cfg.depth).rev() {
        let b = EvsNetParams::<T>::block_index(i);
        let out = &cache.hidden[i + 1];
        // Through the outer ReLU.
        for (g, &h) in g_h.iter_mut().zip(out) {
            if !(h > T::zero()) {
                *g = T::zero();
            }
        }
        let r = &cache.inner[i];
        {
            let (w2, grads_all) = (p.tensor(b + 2), &mut *grads);
            let (gw, gb) = split_pair(grads_all, b + 2);
            conv::backward(cfg.block_conv(), w2, r, &g_h, len, gw, gb, Some(&mut g_r));
        }
        for (g, &v) in g_r.iter_mut().zip(r) {
            if !(v > T::zero()) {
                *g = T::zero();
            }
        }
        let prev = &cache.hidden[i];
        {
            let (gw, gb) = split_pair(grads, b);
            conv::backward(cfg.block_conv(), p.tensor(b), prev, &g_r, len, gw, gb, Some(&mut g_prev));
        }
        // Residual path.
        for (g, &res) in g_prev.iter_mut().zip(&g_h) {
            *g = *g + res;
        }
        std::mem::swap(&mut g_h, &mut g_prev);
    }

    for (g, &h) in g_h.iter_mut().zip(&cache.hidden[0]) {
        if !(h > T::zero()) {
            *g = T::zero();
        }
    }
    let mut g_x = vec![T::zero(); len];
    let (gw, gb) = split_pair(grads, 0);
    conv::backward(cfg.input_conv(), p.tensor(0), &cache.input, &g_h, len, gw, gb, Some(&mut g_x));
    Ok(g_x)
}

/// Mutable views of tensor `i` (weights) and `i + 1` (bias).
fn split_pair<T: Real>(p: &mut EvsNetParams<T>, i: usize) -> (&mut [T], &mut [T]) {
    let (a, b, c) = (p.offsets[i], p.offsets[i + 1], p.offsets[i + 2]);
    let (w, rest) = p.data[a..c].split_at_mut(b - a);
    (w, rest)
}

/// Full backward from `dL/dS`; returns fresh parameter gradients and `dL/dx`.
pub fn backward<T: Real>(grad_spikes: &[T], cache: &ForwardCache<T>, p: &EvsNetParams<T>) -> Result<(EvsNetParams<T>, Vec<T>)> {
    let mut grads = EvsNetParams::zeros(p.config)?;
    let g_x = backward_accumulate(grad_spikes, cache, p, &mut grads)?;
    Ok((grads, g_x))
}

/// As [`backward`] but adds into an existing gradient buffer.
pub fn backward_accumulate<T: Real>(
    grad_spikes: &[T],
    cache: &ForwardCache<T>,
    p: &EvsNetParams<T>,
    grads: &mut EvsNetParams<T>,
) -> Result<Vec<T>> {
    check_cache(cache, p, grad_spikes.len())?;
    let g_z = spike_head_backward(grad_spikes, cache, &p.config);
    backward_from_logits(&g_z, cache, p, grads)
}

/// Initial BiLIF potential at the start of inference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialState {
    Zero,
    /// Per-pixel `Uniform(-V_th, V_th)` keyed by seed and pixel index.
    Uniform { seed: u64 },
}

impl InitialState {
    pub fn potential(&self, pixel: u64, v_th: f64) -> f64 {
        match *self {
            InitialState::Zero => 0.0,
            InitialState::Uniform { seed } => {
                let u: f64 = rng::stream(seed, &[rng::TAG_V0, pixel]).random();
                v_th * (2.0 * u - 1.0)
            }
        }
    }
}

/// Windowed inference for one pixel.
///
/// Logits are produced in blocks of `W` ticks, each computed from the block
/// plus a halo of `(W - 1) / 2` ticks per side; the membrane potential is
/// carried across blocks. Output is bit-identical to [`forward`].
pub fn infer_pixel<T: Real>(x: &[T], p: &EvsNetParams<T>, v0: T) -> Vec<i8> {
    let w = p.config.receptive_field();
    let halo = (w - 1) / 2;
    let k = x.len();
    let mut out = Vec::with_capacity(k);
    let mut v = v0;
    let mut start = 0;
    while start < k {
        let end = (start + w).min(k);
        let lo = start.saturating_sub(halo);
        let hi = (end + halo).min(k);
        let z = logits(&x[lo..hi], p);
        let (spikes, _, v_end) = spike_head(&z[start - lo..end - lo], &p.config.lif, v);
        out.extend_from_slice(&spikes);
        v = v_end;
        start = end;
    }
    out
}

/// Run the network over every pixel of `x`.
pub fn infer_stream(x: &LogDiffSeq, p: &EvsNetParams<f32>, init: InitialState) -> Result<SpikeTrain> {
    let ticks = x.ticks();
    let v_th = p.config.lif.v_th;
    let mut data = vec![0i8; x.pixels() * ticks];
    data.par_chunks_mut(ticks).enumerate().for_each(|(px, out)| {
        let v0 = init.potential(px as u64, v_th) as f32;
        out.copy_from_slice(&infer_pixel(x.pixel(px), p, v0));
    });
    SpikeTrain::new(x.width(), x.height(), x.fps(), ticks, data)
}
