//! Discrete Fourier transforms.
//!
//! The forward transform is unnormalized with an `e^{-j2πfn/N}` kernel, so a
//! unit-amplitude tone at bin `k` produces a peak of exactly `N`. The inverse
//! carries the `1/N` factor.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::chirp::{IqSignal, Spectrum};
use crate::error::{Error, Result};

/// Precomputed in-place radix-2 FFT for one power-of-two length.
#[derive(Debug, Clone)]
pub struct Fft {
    n: usize,
    twiddles: Vec<Complex64>,
    bit_reverse: Vec<usize>,
}

impl Fft {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::InvalidParameter("FFT length must be a power of two"));
        }
        let twiddles = (0..n / 2)
            .map(|k| {
                let theta = -2.0 * PI * k as f64 / n as f64;
                Complex64::new(theta.cos(), theta.sin())
            })
            .collect();
        let bits = n.trailing_zeros();
        let bit_reverse = (0..n)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
            .collect();
        Ok(Self {
            n,
            twiddles,
            bit_reverse,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Unnormalized forward transform in place.
    ///
    /// # Panics
    ///
    /// Panics if `buf.len()` differs from the planned length.
    pub fn forward(&self, buf: &mut [Complex64]) {
        self.transform(buf, false);
    }

    /// Inverse transform in place, including the `1/N` scaling.
    ///
    /// # Panics
    ///
    /// Panics if `buf.len()` differs from the planned length.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.transform(buf, true);
        let scale = 1.0 / self.n as f64;
        for x in buf.iter_mut() {
            *x *= scale;
        }
    }

    fn transform(&self, buf: &mut [Complex64], inverse: bool) {
        assert_eq!(buf.len(), self.n, "buffer length does not match FFT plan");
        for (i, &j) in self.bit_reverse.iter().enumerate() {
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= self.n {
            let half = len / 2;
            let stride = self.n / len;
            for block in buf.chunks_exact_mut(len) {
                let (lo, hi) = block.split_at_mut(half);
                for (k, (a, b)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                    let mut w = self.twiddles[k * stride];
                    if inverse {
                        w = w.conj();
                    }
                    let t = *b * w;
                    *b = *a - t;
                    *a += t;
                }
            }
            len <<= 1;
        }
    }
}

/// Forward DFT of an arbitrary nonempty slice.
///
/// Power-of-two lengths go through [`Fft`]; other lengths fall back to direct
/// summation.
pub fn dft_slice(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    if let Ok(plan) = Fft::new(n) {
        let mut buf = x.to_vec();
        plan.forward(&mut buf);
        return buf;
    }
    (0..n)
        .map(|f| {
            x.iter()
                .enumerate()
                .map(|(i, &v)| {
                    let theta = -2.0 * PI * ((f * i) % n) as f64 / n as f64;
                    v * Complex64::new(theta.cos(), theta.sin())
                })
                .sum()
        })
        .collect()
}

/// Inverse DFT (with `1/N`) of an arbitrary nonempty slice.
pub fn idft_slice(bins: &[Complex64]) -> Vec<Complex64> {
    let n = bins.len();
    let conj: Vec<Complex64> = bins.iter().map(|b| b.conj()).collect();
    dft_slice(&conj)
        .into_iter()
        .map(|v| v.conj() / n as f64)
        .collect()
}

/// Unnormalized forward DFT of a signal.
pub fn dft(x: &IqSignal) -> Spectrum {
    Spectrum::from_bins(dft_slice(x.samples()))
}

/// Inverse of [`dft`]; returns raw samples since a spectrum carries no rate.
pub fn idft(s: &Spectrum) -> Vec<Complex64> {
    idft_slice(s.bins())
}
