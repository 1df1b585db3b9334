//! Same-length 1D cross-correlation over channel-major rows.
//!
//! `out[o][t] = b[o] + sum_i sum_j w[o][i][j] * in[i][t + j - (k - 1) / 2]`,
//! with taps outside `[0, len)` skipped (zero padding). Every output element
//! accumulates its terms in the same `(i, j)` order regardless of `len`, so a
//! window that contains all taps of a position reproduces it bit for bit.

use std::ops::Range;

use crate::real::Real;

#[derive(Debug, Clone, Copy)]
pub(crate) struct ConvShape {
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
}

#[cfg(test)]
impl ConvShape {
    pub fn weights(&self) -> usize {
        self.out_ch * self.in_ch * self.kernel
    }
}

/// Output positions for which tap offset `shift` stays inside the row.
#[inline]
fn valid(len: usize, shift: isize) -> Range<usize> {
    let lo = (-shift).clamp(0, len as isize) as usize;
    let hi = (len as isize - shift).clamp(0, len as isize) as usize;
    lo..hi.max(lo)
}

#[inline]
fn shifted(r: &Range<usize>, shift: isize) -> Range<usize> {
    (r.start as isize + shift) as usize..(r.end as isize + shift) as usize
}

/// Dot product with eight interleaved partial sums, combined pairwise.
#[inline]
fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] = acc[l] + x[l] * y[l];
        }
    }
    for (l, (&x, &y)) in ra.iter().zip(rb).enumerate() {
        acc[l] = acc[l] + x * y;
    }
    ((acc[0] + acc[4]) + (acc[2] + acc[6])) + ((acc[1] + acc[5]) + (acc[3] + acc[7]))
}

pub(crate) fn forward<T: Real>(shape: ConvShape, w: &[T], b: &[T], input: &[T], len: usize, out: &mut [T]) {
    let pad = (shape.kernel / 2) as isize;
    debug_assert_eq!(input.len(), shape.in_ch * len);
    debug_assert_eq!(out.len(), shape.out_ch * len);
    for o in 0..shape.out_ch {
        let row = &mut out[o * len..(o + 1) * len];
        row.fill(b[o]);
        for i in 0..shape.in_ch {
            let src = &input[i * len..(i + 1) * len];
            let taps = &w[(o * shape.in_ch + i) * shape.kernel..][..shape.kernel];
            for (j, &wj) in taps.iter().enumerate() {
                let shift = j as isize - pad;
                let r = valid(len, shift);
                if r.is_empty() {
                    continue;
                }
                for (y, &x) in row[r.clone()].iter_mut().zip(&src[shifted(&r, shift)]) {
                    *y = *y + wj * x;
                }
            }
        }
    }
}

/// Accumulates weight and bias gradients; writes (overwrites) `grad_in` when given.
pub(crate) fn backward<T: Real>(
    shape: ConvShape,
    w: &[T],
    input: &[T],
    grad_out: &[T],
    len: usize,
    grad_w: &mut [T],
    grad_b: &mut [T],
    mut grad_in: Option<&mut [T]>,
) {
    let pad = (shape.kernel / 2) as isize;
    if let Some(g) = grad_in.as_deref_mut() {
        g.fill(T::zero());
    }
    for o in 0..shape.out_ch {
        let go = &grad_out[o * len..(o + 1) * len];
        grad_b[o] = grad_b[o] + go.iter().copied().sum::<T>();
        for i in 0..shape.in_ch {
            let src = &input[i * len..(i + 1) * len];
            let base = (o * shape.in_ch + i) * shape.kernel;
            for j in 0..shape.kernel {
                let shift = j as isize - pad;
                let r = valid(len, shift);
                if r.is_empty() {
                    continue;
                }
                let rs = shifted(&r, shift);
                let dot = dot(&go[r.clone()], &src[rs.clone()]);
                grad_w[base + j] = grad_w[base + j] + dot;
                if let Some(gi) = grad_in.as_deref_mut() {
                    let wj = w[base + j];
                    for (d, &g) in gi[i * len..(i + 1) * len][rs].iter_mut().zip(&go[r]) {
                        *d = *d + wj * g;
                    }
                }
            }
        }
    }
}
