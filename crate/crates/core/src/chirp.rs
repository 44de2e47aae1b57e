//! Discrete-time chirps and the signal containers shared by every module.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::DEFAULT_BANDWIDTH_HZ;

/// Bits per chirp symbol. A chirp carries `n = 2^sf` samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpreadingFactor(u8);

impl SpreadingFactor {
    pub const MIN: u8 = 6;
    pub const MAX: u8 = 12;

    pub fn new(sf: u8) -> Result<Self> {
        if (Self::MIN..=Self::MAX).contains(&sf) {
            Ok(Self(sf))
        } else {
            Err(Error::InvalidSpreadingFactor(sf))
        }
    }

    /// Every supported spreading factor, ascending.
    pub fn all() -> impl Iterator<Item = SpreadingFactor> {
        (Self::MIN..=Self::MAX).map(Self)
    }

    pub fn sf(self) -> u8 {
        self.0
    }

    /// Samples per chirp.
    pub fn n(self) -> usize {
        1 << self.0
    }

    pub fn bits(self) -> u32 {
        u32::from(self.0)
    }
}

impl TryFrom<u8> for SpreadingFactor {
    type Error = Error;

    fn try_from(sf: u8) -> Result<Self> {
        Self::new(sf)
    }
}

impl core::fmt::Display for SpreadingFactor {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "SF{}", self.0)
    }
}

/// Continuous-time description of a linear chirp `exp(jπ(a t² + 2 b t))` on
/// `-T/2 ≤ t ≤ T/2`, critically sampled at the occupied bandwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChirpParams {
    pub rate_a: f64,
    pub offset_b: f64,
    pub bandwidth_hz: f64,
    pub duration_t_s: f64,
    pub sample_interval_ts_s: f64,
}

impl ChirpParams {
    /// Raw up-chirp sweeping `-B/2..B/2` over one symbol: `a = B/T`, `b = 0`.
    pub fn raw(sf: SpreadingFactor, bandwidth_hz: f64) -> Result<Self> {
        Self::with_offset(sf, bandwidth_hz, 0.0)
    }

    /// Raw chirp rate with a start-frequency offset `b`.
    pub fn with_offset(sf: SpreadingFactor, bandwidth_hz: f64, offset_b: f64) -> Result<Self> {
        if !(bandwidth_hz.is_finite() && bandwidth_hz > 0.0) {
            return Err(Error::InvalidParameter("bandwidth must be positive"));
        }
        if !offset_b.is_finite() {
            return Err(Error::InvalidParameter("frequency offset must be finite"));
        }
        let ts = 1.0 / bandwidth_hz;
        let t = sf.n() as f64 * ts;
        Ok(Self {
            rate_a: bandwidth_hz / t,
            offset_b,
            bandwidth_hz,
            duration_t_s: t,
            sample_interval_ts_s: ts,
        })
    }
}

/// Instantaneous frequency `a t + b` of a chirp at time `t` (seconds from the
/// symbol center).
pub fn instantaneous_frequency(p: &ChirpParams, t: f64) -> Result<f64> {
    let half = p.duration_t_s / 2.0;
    // one ulp of slack so ±T/2 computed by the caller stays inside
    let slack = half * 4.0 * f64::EPSILON;
    if !t.is_finite() || t < -half - slack || t > half + slack {
        return Err(Error::OutsideSupport { t, half });
    }
    Ok(p.rate_a * t + p.offset_b)
}

/// Complex baseband samples at a fixed sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct IqSignal {
    samples: Vec<Complex64>,
    sample_rate_hz: f64,
}

impl IqSignal {
    /// Wraps samples taken at [`DEFAULT_BANDWIDTH_HZ`].
    pub fn new(samples: Vec<Complex64>) -> Result<Self> {
        Self::with_rate(samples, DEFAULT_BANDWIDTH_HZ)
    }

    pub fn with_rate(samples: Vec<Complex64>, sample_rate_hz: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySignal);
        }
        if let Some(i) = samples.iter().position(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return Err(Error::NonFiniteSample(i));
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::InvalidParameter("sample rate must be positive"));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum()
    }

    /// Multiplies every sample by `g`.
    pub fn scaled(&self, g: Complex64) -> Result<Self> {
        Self::with_rate(self.samples.iter().map(|s| s * g).collect(), self.sample_rate_hz)
    }
}

/// DFT bins `R(f)`, `f = 0..N-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    bins: Vec<Complex64>,
}

impl Spectrum {
    pub fn from_bins(bins: Vec<Complex64>) -> Self {
        Self { bins }
    }

    pub fn bins(&self) -> &[Complex64] {
        &self.bins
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }
}

pub(crate) fn upchirp_samples(n: usize) -> Vec<Complex64> {
    // c[n] is periodic in n² with period 2N; reducing first keeps the phase small
    let period = 2 * n as u64;
    (0..n as u64)
        .map(|i| {
            let phase = PI * ((i * i) % period) as f64 / n as f64;
            Complex64::new(phase.cos(), phase.sin())
        })
        .collect()
}

/// Raw up-chirp `c[n] = exp(jπn²/N)`, `n = 0..N-1`.
pub fn raw_upchirp(sf: SpreadingFactor) -> IqSignal {
    IqSignal {
        samples: upchirp_samples(sf.n()),
        sample_rate_hz: DEFAULT_BANDWIDTH_HZ,
    }
}

/// Conjugate of [`raw_upchirp`].
pub fn raw_downchirp(sf: SpreadingFactor) -> IqSignal {
    IqSignal {
        samples: upchirp_samples(sf.n()).into_iter().map(|c| c.conj()).collect(),
        sample_rate_hz: DEFAULT_BANDWIDTH_HZ,
    }
}

/// Multiplies one received chirp by the down-chirp, turning each data symbol
/// into a pure tone.
pub fn despread(rx: &IqSignal, sf: SpreadingFactor) -> Result<IqSignal> {
    let n = sf.n();
    if rx.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: rx.len(),
        });
    }
    let samples = rx
        .samples
        .iter()
        .zip(upchirp_samples(n))
        .map(|(r, c)| r * c.conj())
        .collect();
    Ok(IqSignal {
        samples,
        sample_rate_hz: rx.sample_rate_hz,
    })
}

/// Processing gain `10 log10(N / SF)` in dB.
pub fn spreading_gain_db(sf: SpreadingFactor) -> f64 {
    10.0 * (sf.n() as f64 / f64::from(sf.sf())).log10()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fft::dft;

    fn sf(v: u8) -> SpreadingFactor {
        SpreadingFactor::new(v).unwrap()
    }

    #[test]
    fn spreading_factor_range() {
        assert!(SpreadingFactor::new(5).is_err());
        assert!(SpreadingFactor::new(13).is_err());
        assert_eq!(sf(6).n(), 64);
        assert_eq!(sf(12).n(), 4096);
        assert_eq!(SpreadingFactor::all().count(), 7);
    }

    #[test]
    fn upchirp_values() {
        let c = raw_upchirp(sf(7));
        assert!((c.samples()[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        // exp(jπ·64/128) = j
        assert!((c.samples()[8] - Complex64::new(0.0, 1.0)).norm() < 1e-12);
        for s in SpreadingFactor::all() {
            for v in raw_upchirp(s).samples() {
                assert!((v.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn upchirp_matches_unreduced_formula() {
        let s = sf(9);
        let n = s.n() as f64;
        for (i, v) in raw_upchirp(s).samples().iter().enumerate() {
            let want = Complex64::from_polar(1.0, PI * (i * i) as f64 / n);
            assert!((v - want).norm() < 1e-9);
        }
    }

    #[test]
    fn downchirp_is_conjugate() {
        let d = raw_downchirp(sf(7));
        assert!((d.samples()[8] - Complex64::new(0.0, -1.0)).norm() < 1e-12);
        assert_eq!(raw_downchirp(sf(6)).len(), 64);
        for s in SpreadingFactor::all() {
            let up = raw_upchirp(s);
            let down = raw_downchirp(s);
            for (u, d) in up.samples().iter().zip(down.samples()) {
                assert!((u * d - Complex64::new(1.0, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn despread_upchirp_is_dc() {
        let s = sf(8);
        let out = despread(&raw_upchirp(s), s).unwrap();
        for v in out.samples() {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
        let bins = dft(&out);
        let total: f64 = bins.bins().iter().map(|b| b.norm_sqr()).sum();
        assert!(bins.bins()[0].norm_sqr() / total > 1.0 - 1e-9);
    }

    #[test]
    fn despread_rejects_wrong_length() {
        let s = sf(7);
        let short = IqSignal::new(alloc::vec![Complex64::new(1.0, 0.0); 127]).unwrap();
        assert_eq!(
            despread(&short, s),
            Err(Error::LengthMismatch {
                expected: 128,
                actual: 127
            })
        );
    }

    #[test]
    fn spreading_gain_values() {
        // 10·log10(N/SF) evaluated by hand
        assert!((spreading_gain_db(sf(7)) - 12.621_119_3).abs() < 1e-6);
        assert!((spreading_gain_db(sf(6)) - 10.280_287_2).abs() < 1e-6);
        assert!((spreading_gain_db(sf(12)) - 25.331_787_0).abs() < 1e-6);
    }

    #[test]
    fn instantaneous_frequency_sweep() {
        let b = 250e3;
        let p = ChirpParams::raw(sf(7), b).unwrap();
        assert_eq!(p.sample_interval_ts_s, 1.0 / b);
        assert!((p.duration_t_s - 128.0 / b).abs() < 1e-18);
        let half = p.duration_t_s / 2.0;
        assert_eq!(instantaneous_frequency(&p, 0.0).unwrap(), 0.0);
        assert!((instantaneous_frequency(&p, half).unwrap() - b / 2.0).abs() < 1e-6);
        assert!((instantaneous_frequency(&p, -half).unwrap() + b / 2.0).abs() < 1e-6);

        let q = ChirpParams::with_offset(sf(7), b, 1000.0).unwrap();
        assert!((instantaneous_frequency(&q, -half).unwrap() - (-b / 2.0 + 1000.0)).abs() < 1e-6);
        assert!(matches!(
            instantaneous_frequency(&p, half * 1.01),
            Err(Error::OutsideSupport { .. })
        ));
    }

    #[test]
    fn chirp_rate_from_phase_second_difference() {
        let b = 250e3;
        for s in [sf(6), sf(7), sf(10)] {
            let p = ChirpParams::raw(s, b).unwrap();
            let c = raw_upchirp(s);
            let x = c.samples();
            let ts = p.sample_interval_ts_s;
            for i in 0..x.len() - 2 {
                let d2 = (x[i + 2] * x[i] / (x[i + 1] * x[i + 1])).arg();
                let rate = d2 / (2.0 * PI * ts * ts);
                assert!((rate - p.rate_a).abs() / p.rate_a < 1e-6, "{rate} {} {i}", p.rate_a);
            }
        }
    }

    #[test]
    fn signal_invariants() {
        assert_eq!(IqSignal::new(alloc::vec![]), Err(Error::EmptySignal));
        let bad = alloc::vec![Complex64::new(0.0, 0.0), Complex64::new(f64::NAN, 0.0)];
        assert_eq!(IqSignal::new(bad), Err(Error::NonFiniteSample(1)));
    }
}
