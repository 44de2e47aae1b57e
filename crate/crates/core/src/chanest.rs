//! Least-squares channel estimation from the sync preamble and zero-forcing
//! equalization.
//!
//! Flat channels use the scalar LS estimate `ĥ = x_pᴴy_p / x_pᴴx_p` over the
//! concatenated sync chirps. Frequency-selective channels need a cyclic prefix
//! on the sync chirps: after prefix removal and averaging, the received chirp
//! is the circular convolution of the raw up-chirp with the channel, and the
//! LS impulse response reduces to a circular cross-correlation because the
//! chirp's circulant matrix satisfies `CᴴC = N·I`.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::chirp::{upchirp_samples, IqSignal, SpreadingFactor};
use crate::error::{Error, Result};
use crate::fft::Fft;

/// Below this magnitude a frequency-response bin is clamped.
pub const FD_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatEstimate {
    pub h_hat: Complex64,
}

/// Estimated channel impulse response, one tap per sample delay.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseEstimate {
    pub h_hat: Vec<Complex64>,
}

impl ImpulseEstimate {
    /// Zeroes every tap at delay `>= keep`.
    pub fn truncated(mut self, keep: usize) -> Self {
        for h in self.h_hat.iter_mut().skip(keep) {
            *h = Complex64::new(0.0, 0.0);
        }
        self
    }
}

/// `ĥ = x_pᴴ y_p / x_pᴴ x_p`.
pub fn ls_flat(preamble_rx: &IqSignal, preamble_ref: &IqSignal) -> Result<FlatEstimate> {
    ls_flat_samples(preamble_rx.samples(), preamble_ref.samples())
}

pub fn ls_flat_samples(rx: &[Complex64], reference: &[Complex64]) -> Result<FlatEstimate> {
    if rx.len() != reference.len() {
        return Err(Error::LengthMismatch {
            expected: reference.len(),
            actual: rx.len(),
        });
    }
    let energy: f64 = reference.iter().map(|x| x.norm_sqr()).sum();
    if energy == 0.0 {
        return Err(Error::ZeroReferenceEnergy);
    }
    let corr: Complex64 = reference.iter().zip(rx).map(|(x, y)| x.conj() * y).sum();
    Ok(FlatEstimate { h_hat: corr / energy })
}

/// Circulant LS estimator for one spreading factor with cached transforms.
#[derive(Debug, Clone)]
pub struct SelectiveEstimator {
    sf: SpreadingFactor,
    fft: Fft,
    /// `conj(DFT(c)) / N`
    chirp_spectrum: Vec<Complex64>,
}

impl SelectiveEstimator {
    pub fn new(sf: SpreadingFactor) -> Self {
        let n = sf.n();
        let fft = Fft::new(n).expect("chirp length is a power of two");
        let mut chirp_spectrum = upchirp_samples(n);
        fft.forward(&mut chirp_spectrum);
        for c in chirp_spectrum.iter_mut() {
            *c = c.conj() / n as f64;
        }
        Self {
            sf,
            fft,
            chirp_spectrum,
        }
    }

    /// `ĥ = (1/N) Cᴴ ȳ_p`.
    pub fn estimate(&self, y_bar: &[Complex64]) -> Result<ImpulseEstimate> {
        let n = self.sf.n();
        if y_bar.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: y_bar.len(),
            });
        }
        let mut buf = y_bar.to_vec();
        self.fft.forward(&mut buf);
        for (b, c) in buf.iter_mut().zip(&self.chirp_spectrum) {
            *b *= c;
        }
        self.fft.inverse(&mut buf);
        Ok(ImpulseEstimate { h_hat: buf })
    }
}

/// LS impulse response from the averaged, prefix-free sync chirp.
pub fn ls_selective(y_bar: &IqSignal, sf: SpreadingFactor) -> Result<ImpulseEstimate> {
    SelectiveEstimator::new(sf).estimate(y_bar.samples())
}

/// Single-tap zero forcing: `x·conj(ĥ)/|ĥ|²`.
pub fn equalize_flat(x: &IqSignal, est: &FlatEstimate) -> Result<IqSignal> {
    let mut samples = x.samples().to_vec();
    equalize_flat_in_place(&mut samples, est)?;
    IqSignal::with_rate(samples, x.sample_rate_hz())
}

pub fn equalize_flat_in_place(x: &mut [Complex64], est: &FlatEstimate) -> Result<()> {
    let mag2 = est.h_hat.norm_sqr();
    if mag2 == 0.0 || !mag2.is_finite() {
        return Err(Error::ZeroChannelEstimate);
    }
    let w = est.h_hat.conj() / mag2;
    for v in x.iter_mut() {
        *v *= w;
    }
    Ok(())
}

/// Output of frequency-domain equalization.
#[derive(Debug, Clone, PartialEq)]
pub struct Equalized {
    pub signal: IqSignal,
    /// Set when some `|H(f)|` was below [`FD_FLOOR`] and got clamped.
    pub ill_conditioned: bool,
}

/// Per-bin zero-forcing equalizer built from one impulse estimate.
#[derive(Debug, Clone)]
pub struct FdEqualizer {
    fft: Fft,
    inverse_response: Vec<Complex64>,
    ill_conditioned: bool,
}

impl FdEqualizer {
    /// Taps beyond `n` wrap around, matching circular convolution.
    pub fn new(est: &ImpulseEstimate, sf: SpreadingFactor) -> Self {
        let n = sf.n();
        let fft = Fft::new(n).expect("chirp length is a power of two");
        let mut response = vec![Complex64::new(0.0, 0.0); n];
        for (i, h) in est.h_hat.iter().enumerate() {
            response[i % n] += h;
        }
        fft.forward(&mut response);
        let mut ill_conditioned = false;
        for h in response.iter_mut() {
            let mag = h.norm();
            if mag.is_nan() || mag < FD_FLOOR {
                ill_conditioned = true;
                *h = if mag > 0.0 {
                    *h * (FD_FLOOR / mag)
                } else {
                    Complex64::new(FD_FLOOR, 0.0)
                };
            }
            *h = h.inv();
        }
        Self {
            fft,
            inverse_response: response,
            ill_conditioned,
        }
    }

    pub fn ill_conditioned(&self) -> bool {
        self.ill_conditioned
    }

    /// `IDFT(DFT(x) / H)` in place.
    ///
    /// # Panics
    ///
    /// Panics if `x.len() != N`.
    pub fn equalize_in_place(&self, x: &mut [Complex64]) {
        self.fft.forward(x);
        for (v, g) in x.iter_mut().zip(&self.inverse_response) {
            *v *= g;
        }
        self.fft.inverse(x);
    }
}

/// Frequency-domain zero forcing of one prefix-free chirp.
pub fn equalize_fd(chirp_rx: &IqSignal, est: &ImpulseEstimate) -> Result<Equalized> {
    let n = chirp_rx.len();
    if !n.is_power_of_two() || !(64..=4096).contains(&n) {
        return Err(Error::LengthMismatch {
            expected: n.next_power_of_two().clamp(64, 4096),
            actual: n,
        });
    }
    let sf = SpreadingFactor::new(n.trailing_zeros() as u8)?;
    let eq = FdEqualizer::new(est, sf);
    let mut samples = chirp_rx.samples().to_vec();
    eq.equalize_in_place(&mut samples);
    Ok(Equalized {
        signal: IqSignal::with_rate(samples, chirp_rx.sample_rate_hz())?,
        ill_conditioned: eq.ill_conditioned,
    })
}
