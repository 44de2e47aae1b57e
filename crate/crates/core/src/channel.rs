//! Channel models: AWGN, time-variant flat Rayleigh fading and a time-variant
//! frequency-selective tapped delay line.
//!
//! Fading gains come from a sum-of-sinusoids Jakes generator with
//! [`JAKES_SINUSOIDS`] equally spaced arrival angles. Each sinusoid gets a
//! circular Gaussian weight and the angle grid a random rotation, which makes
//! every sample exactly `CN(0, 1)` and the ensemble autocorrelation exactly
//! `J0(2π f_d τ)`.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::chirp::{IqSignal, SpreadingFactor};
use crate::error::{Error, Result};
use crate::modem::Modulation;

pub const SPEED_OF_LIGHT_M_S: f64 = 299_792_458.0;
pub const JAKES_SINUSOIDS: usize = 16;

/// Total complex noise variance `σ_w²`; each of I and Q carries half.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub variance_sigma2: f64,
}

impl NoiseSpec {
    pub fn new(variance_sigma2: f64) -> Result<Self> {
        if !(variance_sigma2 >= 0.0 && variance_sigma2.is_finite()) {
            return Err(Error::InvalidParameter("noise variance must be finite and non-negative"));
        }
        Ok(Self { variance_sigma2 })
    }

    pub fn noiseless() -> Self {
        Self { variance_sigma2: 0.0 }
    }
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Per-sample SNR `Es/(N·σ²)` in dB at the given Eb/N0.
///
/// With `Eb = Es/bits` and `N0 = σ²`, `Eb/N0 = SNR·N/bits`, so the two axes
/// differ by the spreading gain plus `10·log10(bits/SF)`.
pub fn ebn0_to_snr_db(ebn0_db: f64, sf: SpreadingFactor, scheme: Modulation) -> f64 {
    let bits = scheme.bits_per_chirp(sf) as f64;
    ebn0_db + 10.0 * (bits / sf.n() as f64).log10()
}

pub fn snr_to_ebn0_db(snr_db: f64, sf: SpreadingFactor, scheme: Modulation) -> f64 {
    let bits = scheme.bits_per_chirp(sf) as f64;
    snr_db - 10.0 * (bits / sf.n() as f64).log10()
}

/// Noise variance for a given Eb/N0; `+∞` dB yields a noiseless channel.
pub fn ebn0_to_sigma2(ebn0_db: f64, sf: SpreadingFactor, scheme: Modulation, es: f64) -> Result<NoiseSpec> {
    snr_to_sigma2(ebn0_to_snr_db(ebn0_db, sf, scheme), sf, es)
}

/// Noise variance such that `Es/(N·σ²)` equals the given SNR.
pub fn snr_to_sigma2(snr_db: f64, sf: SpreadingFactor, es: f64) -> Result<NoiseSpec> {
    if !(es.is_finite() && es > 0.0) {
        return Err(Error::InvalidParameter("symbol energy must be positive"));
    }
    if snr_db.is_nan() {
        return Err(Error::InvalidParameter("SNR must not be NaN"));
    }
    if snr_db == f64::INFINITY {
        return Ok(NoiseSpec::noiseless());
    }
    NoiseSpec::new(es / (sf.n() as f64 * db_to_linear(snr_db)))
}

/// Adds circular complex Gaussian noise in place.
pub fn add_awgn<R: Rng + ?Sized>(x: &mut [Complex64], noise: NoiseSpec, rng: &mut R) {
    if noise.variance_sigma2 == 0.0 {
        return;
    }
    let per_dim = (noise.variance_sigma2 / 2.0).sqrt();
    for v in x.iter_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *v += Complex64::new(re, im) * per_dim;
    }
}

pub fn apply_awgn<R: Rng + ?Sized>(x: &IqSignal, noise: NoiseSpec, rng: &mut R) -> IqSignal {
    let mut samples = x.samples().to_vec();
    add_awgn(&mut samples, noise, rng);
    IqSignal::with_rate(samples, x.sample_rate_hz()).expect("finite noise keeps samples finite")
}

/// Mobility of the link and the resulting maximum Doppler shift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DopplerSpec {
    pub speed_kmh: f64,
    pub carrier_hz: f64,
    pub max_doppler_hz: f64,
}

impl DopplerSpec {
    pub fn new(speed_kmh: f64, carrier_hz: f64) -> Result<Self> {
        if !(speed_kmh.is_finite() && speed_kmh >= 0.0) {
            return Err(Error::InvalidParameter("speed must be finite and non-negative"));
        }
        if !(carrier_hz.is_finite() && carrier_hz > 0.0) {
            return Err(Error::InvalidParameter("carrier frequency must be positive"));
        }
        Ok(Self {
            speed_kmh,
            carrier_hz,
            max_doppler_hz: speed_kmh / 3.6 * carrier_hz / SPEED_OF_LIGHT_M_S,
        })
    }

    pub fn stationary(carrier_hz: f64) -> Result<Self> {
        Self::new(0.0, carrier_hz)
    }
}

/// One unit-power Rayleigh fading process.
#[derive(Debug, Clone, PartialEq)]
pub struct JakesProcess {
    weights: [Complex64; JAKES_SINUSOIDS],
    /// Doppler of each sinusoid in radians per sample.
    omegas: [f64; JAKES_SINUSOIDS],
}

impl JakesProcess {
    pub fn new<R: Rng + ?Sized>(max_doppler_hz: f64, sample_rate_hz: f64, rng: &mut R) -> Self {
        let rotation: f64 = rng.random();
        let per_dim = (0.5 / JAKES_SINUSOIDS as f64).sqrt();
        let mut weights = [Complex64::new(0.0, 0.0); JAKES_SINUSOIDS];
        let mut omegas = [0.0; JAKES_SINUSOIDS];
        for (m, (w, o)) in weights.iter_mut().zip(omegas.iter_mut()).enumerate() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *w = Complex64::new(re, im) * per_dim;
            let alpha = 2.0 * PI * (m as f64 + rotation) / JAKES_SINUSOIDS as f64;
            *o = 2.0 * PI * max_doppler_hz * alpha.cos() / sample_rate_hz;
        }
        Self { weights, omegas }
    }

    /// Gain at sample index `n`.
    pub fn gain_at(&self, n: usize) -> Complex64 {
        let t = n as f64;
        self.weights
            .iter()
            .zip(&self.omegas)
            .map(|(w, o)| w * Complex64::from_polar(1.0, o * t))
            .sum()
    }

    fn oscillator(&self) -> JakesOscillator {
        JakesOscillator {
            phasors: self.weights,
            steps: self.omegas.map(|o| Complex64::from_polar(1.0, o)),
        }
    }
}

/// Sample-by-sample evaluation by phasor rotation.
struct JakesOscillator {
    phasors: [Complex64; JAKES_SINUSOIDS],
    steps: [Complex64; JAKES_SINUSOIDS],
}

impl JakesOscillator {
    fn next_gain(&mut self) -> Complex64 {
        let mut g = Complex64::new(0.0, 0.0);
        for (p, s) in self.phasors.iter_mut().zip(&self.steps) {
            g += *p;
            *p *= s;
        }
        g
    }
}

/// How a fading gain evolves over the frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FadingMode {
    /// One draw held for the whole frame.
    BlockStatic,
    /// Jakes-correlated, updated every sample.
    TimeVarying,
}

/// Gain of one path over time.
#[derive(Debug, Clone, PartialEq)]
pub enum PathGain {
    Constant(Complex64),
    Fading { scale: f64, process: Box<JakesProcess> },
}

impl PathGain {
    fn draw<R: Rng + ?Sized>(power: f64, doppler: &DopplerSpec, rate: f64, mode: FadingMode, rng: &mut R) -> Self {
        let process = JakesProcess::new(doppler.max_doppler_hz, rate, rng);
        let scale = power.sqrt();
        match mode {
            FadingMode::BlockStatic => PathGain::Constant(process.gain_at(0) * scale),
            FadingMode::TimeVarying if doppler.max_doppler_hz == 0.0 => {
                PathGain::Constant(process.gain_at(0) * scale)
            }
            FadingMode::TimeVarying => PathGain::Fading {
                scale,
                process: Box::new(process),
            },
        }
    }

    pub fn at(&self, n: usize) -> Complex64 {
        match self {
            PathGain::Constant(g) => *g,
            PathGain::Fading { scale, process } => process.gain_at(n) * *scale,
        }
    }

    fn for_each(&self, len: usize, mut f: impl FnMut(usize, Complex64)) {
        match self {
            PathGain::Constant(g) => (0..len).for_each(|n| f(n, *g)),
            PathGain::Fading { scale, process } => {
                let mut osc = process.oscillator();
                for n in 0..len {
                    f(n, osc.next_gain() * *scale);
                }
            }
        }
    }

    /// Per-sample gains for `len` samples.
    pub fn trace(&self, len: usize) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(len);
        self.for_each(len, |_, g| out.push(g));
        out
    }
}

/// One path of a realized multipath channel.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizedTap {
    pub delay_samples: usize,
    pub gain: PathGain,
}

/// A drawn channel: a single flat path or a set of delayed paths.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelRealization {
    Flat(PathGain),
    Selective(Vec<RealizedTap>),
}

impl ChannelRealization {
    /// Time-invariant multipath channel with the given `(delay, gain)` taps.
    pub fn static_taps(taps: &[(usize, Complex64)]) -> Self {
        ChannelRealization::Selective(
            taps.iter()
                .map(|&(delay_samples, g)| RealizedTap {
                    delay_samples,
                    gain: PathGain::Constant(g),
                })
                .collect(),
        )
    }

    pub fn max_delay(&self) -> usize {
        match self {
            ChannelRealization::Flat(_) => 0,
            ChannelRealization::Selective(taps) => taps.iter().map(|t| t.delay_samples).max().unwrap_or(0),
        }
    }

    /// Channel impulse response at sample `n`, zero-padded to `len` taps.
    /// Paths sharing a delay are summed.
    pub fn impulse_at(&self, n: usize, len: usize) -> Vec<Complex64> {
        let mut h = vec![Complex64::new(0.0, 0.0); len.max(self.max_delay() + 1)];
        match self {
            ChannelRealization::Flat(g) => h[0] = g.at(n),
            ChannelRealization::Selective(taps) => {
                for t in taps {
                    h[t.delay_samples] += t.gain.at(n);
                }
            }
        }
        h
    }

    /// Passes samples through the channel. Multipath convolution is linear and
    /// starts from silence; the output has the input's length.
    pub fn apply_samples(&self, x: &[Complex64]) -> Vec<Complex64> {
        match self {
            ChannelRealization::Flat(g) => {
                let mut y = x.to_vec();
                g.for_each(x.len(), |n, h| y[n] *= h);
                y
            }
            ChannelRealization::Selective(taps) => {
                let mut y = vec![Complex64::new(0.0, 0.0); x.len()];
                for t in taps {
                    let d = t.delay_samples;
                    t.gain.for_each(x.len(), |n, h| {
                        if n >= d {
                            y[n] += h * x[n - d];
                        }
                    });
                }
                y
            }
        }
    }

    pub fn apply(&self, x: &IqSignal) -> IqSignal {
        IqSignal::with_rate(self.apply_samples(x.samples()), x.sample_rate_hz())
            .expect("finite gains keep samples finite")
    }
}

/// Draws a unit-power flat Rayleigh channel for a frame.
pub fn flat_rayleigh<R: Rng + ?Sized>(
    doppler: &DopplerSpec,
    sample_rate_hz: f64,
    mode: FadingMode,
    rng: &mut R,
) -> ChannelRealization {
    ChannelRealization::Flat(PathGain::draw(1.0, doppler, sample_rate_hz, mode, rng))
}

/// A path of a power-delay profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileTap {
    pub delay_us: f64,
    /// Linear average power; powers of a profile sum to one.
    pub power: f64,
}

/// Power-delay profile of a tapped-delay-line channel.
#[derive(Debug, Clone, PartialEq)]
pub struct TapProfile {
    taps: Vec<ProfileTap>,
}

impl TapProfile {
    /// Builds a profile from `(delay_us, power_db)` pairs, renormalizing
    /// powers to unit sum.
    pub fn from_db(entries: &[(f64, f64)]) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidParameter("profile needs at least one tap"));
        }
        if entries[0].0 != 0.0 {
            return Err(Error::InvalidParameter("first tap delay must be zero"));
        }
        if entries.iter().any(|&(d, p)| !d.is_finite() || !p.is_finite()) {
            return Err(Error::InvalidParameter("tap entries must be finite"));
        }
        if entries.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidParameter("tap delays must be strictly increasing"));
        }
        let total: f64 = entries.iter().map(|&(_, p)| db_to_linear(p)).sum();
        let taps = entries
            .iter()
            .map(|&(delay_us, p)| ProfileTap {
                delay_us,
                power: db_to_linear(p) / total,
            })
            .collect();
        Ok(Self { taps })
    }

    pub fn taps(&self) -> &[ProfileTap] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// Tap delays rounded to the nearest sample at `sample_rate_hz`.
    /// Neighbouring taps may land on the same sample.
    pub fn delays_in_samples(&self, sample_rate_hz: f64) -> Vec<usize> {
        self.taps
            .iter()
            .map(|t| (t.delay_us * 1e-6 * sample_rate_hz).round() as usize)
            .collect()
    }

    pub fn max_delay_samples(&self, sample_rate_hz: f64) -> usize {
        self.delays_in_samples(sample_rate_hz).into_iter().max().unwrap_or(0)
    }
}

/// Draws a time-variant frequency-selective channel: every profile tap fades
/// independently with power `avg_power`.
pub fn tvfs_realization<R: Rng + ?Sized>(
    profile: &TapProfile,
    doppler: &DopplerSpec,
    sample_rate_hz: f64,
    mode: FadingMode,
    rng: &mut R,
) -> ChannelRealization {
    let delays = profile.delays_in_samples(sample_rate_hz);
    ChannelRealization::Selective(
        profile
            .taps
            .iter()
            .zip(delays)
            .map(|(t, delay_samples)| RealizedTap {
                delay_samples,
                gain: PathGain::draw(t.power, doppler, sample_rate_hz, mode, rng),
            })
            .collect(),
    )
}

/// Draws a continuously fading multipath channel and passes `x` through it.
pub fn apply_tvfs<R: Rng + ?Sized>(x: &IqSignal, profile: &TapProfile, doppler: &DopplerSpec, rng: &mut R) -> IqSignal {
    tvfs_realization(profile, doppler, x.sample_rate_hz(), FadingMode::TimeVarying, rng).apply(x)
}
