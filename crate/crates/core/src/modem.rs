//! Symbol mapping, modulation and detection for LoRa and IQCSS.
//!
//! Both schemes share one receive chain: despread with the down-chirp, one
//! FFT, then a per-bin decision. LoRa's non-coherent detector picks the bin
//! with the largest magnitude; the coherent detectors pick the largest real
//! (in-phase) or imaginary (quadrature) part and therefore need the channel
//! phase removed first.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::chirp::{upchirp_samples, IqSignal, SpreadingFactor};
use crate::error::{Error, Result};
use crate::fft::Fft;

/// Transmit scheme, as far as bit accounting is concerned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modulation {
    /// One symbol of SF bits per chirp.
    Lora,
    /// Two symbols, 2·SF bits per chirp.
    Iqcss,
}

impl Modulation {
    pub fn symbols_per_chirp(self) -> u32 {
        match self {
            Modulation::Lora => 1,
            Modulation::Iqcss => 2,
        }
    }

    pub fn bits_per_chirp(self, sf: SpreadingFactor) -> u32 {
        self.symbols_per_chirp() * sf.bits()
    }
}

/// One LoRa data symbol `k ∈ {0, …, 2^SF − 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LoraSymbol(u32);

impl LoraSymbol {
    pub fn new(k: u32, sf: SpreadingFactor) -> Result<Self> {
        check_symbol(k, sf)?;
        Ok(Self(k))
    }

    pub fn value(self) -> u32 {
        self.0
    }
}

/// The two independent symbols of one IQCSS chirp.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IqSymbolPair {
    pub k_i: u32,
    pub k_q: u32,
}

impl IqSymbolPair {
    pub fn new(k_i: u32, k_q: u32, sf: SpreadingFactor) -> Result<Self> {
        check_symbol(k_i, sf)?;
        check_symbol(k_q, sf)?;
        Ok(Self { k_i, k_q })
    }
}

/// Modulation parameters shared by both schemes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModConfig {
    pub sf: SpreadingFactor,
    /// Energy per transmitted chirp, `Σ|x[n]|²`.
    pub symbol_energy_es: f64,
}

impl ModConfig {
    pub fn new(sf: SpreadingFactor, symbol_energy_es: f64) -> Result<Self> {
        if !(symbol_energy_es.is_finite() && symbol_energy_es > 0.0) {
            return Err(Error::InvalidParameter("symbol energy must be positive"));
        }
        Ok(Self {
            sf,
            symbol_energy_es,
        })
    }

    /// `Es = N`: unit average power per sample, matching the preamble.
    pub fn unit_power(sf: SpreadingFactor) -> Self {
        Self {
            sf,
            symbol_energy_es: sf.n() as f64,
        }
    }
}

fn check_symbol(k: u32, sf: SpreadingFactor) -> Result<()> {
    if (k as usize) < sf.n() {
        Ok(())
    } else {
        Err(Error::SymbolOutOfRange { symbol: k, n: sf.n() })
    }
}

fn check_len(rx: &IqSignal, sf: SpreadingFactor) -> Result<()> {
    if rx.len() == sf.n() {
        Ok(())
    } else {
        Err(Error::LengthMismatch {
            expected: sf.n(),
            actual: rx.len(),
        })
    }
}

/// Maps SF bits (MSB first, natural binary) to a symbol.
pub fn bits_to_symbol(bits: &[u8], sf: SpreadingFactor) -> Result<LoraSymbol> {
    let width = sf.sf() as usize;
    if bits.len() != width {
        return Err(Error::BitCount {
            expected: width,
            actual: bits.len(),
        });
    }
    let mut k = 0u32;
    for &b in bits {
        if b > 1 {
            return Err(Error::InvalidBit(b));
        }
        k = (k << 1) | u32::from(b);
    }
    Ok(LoraSymbol(k))
}

/// Inverse of [`bits_to_symbol`].
pub fn symbol_to_bits(k: LoraSymbol, sf: SpreadingFactor) -> Vec<u8> {
    let width = sf.bits();
    (0..width).rev().map(|i| ((k.0 >> i) & 1) as u8).collect()
}

/// `2·SF` bits: the in-phase symbol's bits followed by the quadrature symbol's.
pub fn pair_to_bits(pair: IqSymbolPair, sf: SpreadingFactor) -> Vec<u8> {
    let mut bits = symbol_to_bits(LoraSymbol(pair.k_i), sf);
    bits.extend(symbol_to_bits(LoraSymbol(pair.k_q), sf));
    bits
}

/// Inverse of [`pair_to_bits`].
pub fn bits_to_pair(bits: &[u8], sf: SpreadingFactor) -> Result<IqSymbolPair> {
    let width = sf.sf() as usize;
    if bits.len() != 2 * width {
        return Err(Error::BitCount {
            expected: 2 * width,
            actual: bits.len(),
        });
    }
    let k_i = bits_to_symbol(&bits[..width], sf)?.0;
    let k_q = bits_to_symbol(&bits[width..], sf)?.0;
    Ok(IqSymbolPair { k_i, k_q })
}

/// Index of the largest `key(bin)`; ties go to the lowest index.
pub fn argmax_by(bins: &[Complex64], key: impl Fn(&Complex64) -> f64) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, b) in bins.iter().enumerate() {
        let v = key(b);
        if v > best_val {
            best = i;
            best_val = v;
        }
    }
    best
}

/// Table-driven chirp synthesizer for one spreading factor.
#[derive(Debug, Clone)]
pub struct Modulator {
    sf: SpreadingFactor,
    upchirp: Vec<Complex64>,
    roots: Vec<Complex64>,
}

impl Modulator {
    pub fn new(sf: SpreadingFactor) -> Self {
        let n = sf.n();
        let roots = (0..n)
            .map(|i| {
                let theta = 2.0 * PI * i as f64 / n as f64;
                Complex64::new(theta.cos(), theta.sin())
            })
            .collect();
        Self {
            sf,
            upchirp: upchirp_samples(n),
            roots,
        }
    }

    pub fn sf(&self) -> SpreadingFactor {
        self.sf
    }

    /// Writes `x_k[n] = √(Es/N)·exp(j2πkn/N)·c[n]` into `out`.
    ///
    /// # Panics
    ///
    /// Panics if `out.len() != N` or `k >= N`.
    pub fn lora_into(&self, es: f64, k: u32, out: &mut [Complex64]) {
        let n = self.sf.n();
        assert_eq!(out.len(), n);
        assert!((k as usize) < n);
        let amp = (es / n as f64).sqrt();
        let k = k as usize;
        for (i, (o, c)) in out.iter_mut().zip(&self.upchirp).enumerate() {
            *o = self.roots[(k * i) & (n - 1)] * c * amp;
        }
    }

    /// Writes `x_iq[n] = √(Es/2N)·(e^{j2πk_i n/N} + j·e^{j2πk_q n/N})·c[n]`.
    ///
    /// # Panics
    ///
    /// Panics if `out.len() != N` or either symbol is out of range.
    pub fn iqcss_into(&self, es: f64, pair: IqSymbolPair, out: &mut [Complex64]) {
        let n = self.sf.n();
        assert_eq!(out.len(), n);
        assert!((pair.k_i as usize) < n && (pair.k_q as usize) < n);
        let amp = (es / (2 * n) as f64).sqrt();
        let (ki, kq) = (pair.k_i as usize, pair.k_q as usize);
        let j = Complex64::new(0.0, 1.0);
        for (i, (o, c)) in out.iter_mut().zip(&self.upchirp).enumerate() {
            let g = self.roots[(ki * i) & (n - 1)] + j * self.roots[(kq * i) & (n - 1)];
            *o = g * c * amp;
        }
    }
}

/// Despread + FFT receive chain with reusable buffers.
#[derive(Debug, Clone)]
pub struct Demodulator {
    sf: SpreadingFactor,
    downchirp: Vec<Complex64>,
    fft: Fft,
    spectrum: Vec<Complex64>,
}

impl Demodulator {
    pub fn new(sf: SpreadingFactor) -> Self {
        let n = sf.n();
        Self {
            sf,
            downchirp: upchirp_samples(n).into_iter().map(|c| c.conj()).collect(),
            fft: Fft::new(n).expect("chirp length is a power of two"),
            spectrum: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn sf(&self) -> SpreadingFactor {
        self.sf
    }

    /// `R(f) = DFT{rx[n]·c*[n]}` for one chirp.
    ///
    /// # Panics
    ///
    /// Panics if `rx.len() != N`.
    pub fn spectrum(&mut self, rx: &[Complex64]) -> &[Complex64] {
        assert_eq!(rx.len(), self.sf.n(), "received chirp has wrong length");
        for ((s, r), d) in self.spectrum.iter_mut().zip(rx).zip(&self.downchirp) {
            *s = r * d;
        }
        self.fft.forward(&mut self.spectrum);
        &self.spectrum
    }

    /// `argmax_f |R(f)|`.
    pub fn noncoherent(&mut self, rx: &[Complex64]) -> u32 {
        argmax_by(self.spectrum(rx), |b| b.norm_sqr()) as u32
    }

    /// `argmax_f Re{R(f)}`.
    pub fn coherent(&mut self, rx: &[Complex64]) -> u32 {
        argmax_by(self.spectrum(rx), |b| b.re) as u32
    }

    /// `(argmax_f Re{R(f)}, argmax_f Im{R(f)})` from a single FFT.
    pub fn iqcss(&mut self, rx: &[Complex64]) -> IqSymbolPair {
        let bins = self.spectrum(rx);
        IqSymbolPair {
            k_i: argmax_by(bins, |b| b.re) as u32,
            k_q: argmax_by(bins, |b| b.im) as u32,
        }
    }
}

/// LoRa transmit chirp for symbol `k`.
pub fn lora_modulate(cfg: &ModConfig, k: LoraSymbol) -> Result<IqSignal> {
    check_symbol(k.0, cfg.sf)?;
    let mut out = vec![Complex64::new(0.0, 0.0); cfg.sf.n()];
    Modulator::new(cfg.sf).lora_into(cfg.symbol_energy_es, k.0, &mut out);
    IqSignal::new(out)
}

/// IQCSS transmit chirp carrying `pair`.
pub fn iqcss_modulate(cfg: &ModConfig, pair: IqSymbolPair) -> Result<IqSignal> {
    check_symbol(pair.k_i, cfg.sf)?;
    check_symbol(pair.k_q, cfg.sf)?;
    let mut out = vec![Complex64::new(0.0, 0.0); cfg.sf.n()];
    Modulator::new(cfg.sf).iqcss_into(cfg.symbol_energy_es, pair, &mut out);
    IqSignal::new(out)
}

/// Non-coherent LoRa detection, `argmax_f |R(f)|`.
pub fn lora_demod_noncoherent(rx: &IqSignal, sf: SpreadingFactor) -> Result<LoraSymbol> {
    check_len(rx, sf)?;
    Ok(LoraSymbol(Demodulator::new(sf).noncoherent(rx.samples())))
}

/// Coherent LoRa detection on an equalized chirp, `argmax_f Re{R(f)}`.
pub fn lora_demod_coherent(rx_equalized: &IqSignal, sf: SpreadingFactor) -> Result<LoraSymbol> {
    check_len(rx_equalized, sf)?;
    Ok(LoraSymbol(Demodulator::new(sf).coherent(rx_equalized.samples())))
}

/// IQCSS detection on an equalized chirp.
pub fn iqcss_demodulate(rx_equalized: &IqSignal, sf: SpreadingFactor) -> Result<IqSymbolPair> {
    check_len(rx_equalized, sf)?;
    Ok(Demodulator::new(sf).iqcss(rx_equalized.samples()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chirp::{despread, raw_upchirp};
    use crate::fft::dft;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sf(v: u8) -> SpreadingFactor {
        SpreadingFactor::new(v).unwrap()
    }

    #[test]
    fn bit_mapping() {
        let s = sf(7);
        assert_eq!(bits_to_symbol(&[0; 7], s).unwrap().value(), 0);
        assert_eq!(bits_to_symbol(&[1, 1, 0, 0, 1, 0, 0], s).unwrap().value(), 100);
        assert_eq!(
            symbol_to_bits(LoraSymbol::new(100, s).unwrap(), s),
            vec![1, 1, 0, 0, 1, 0, 0]
        );
        assert!(matches!(
            bits_to_symbol(&[1, 0], s),
            Err(Error::BitCount { expected: 7, actual: 2 })
        ));
        assert_eq!(bits_to_symbol(&[0, 0, 0, 0, 0, 0, 2], s), Err(Error::InvalidBit(2)));
    }

    #[test]
    fn bit_mapping_roundtrip_sf6() {
        let s = sf(6);
        for k in 0..64 {
            let sym = LoraSymbol::new(k, s).unwrap();
            let bits = symbol_to_bits(sym, s);
            assert_eq!(bits_to_symbol(&bits, s).unwrap(), sym);
        }
        for v in 0u32..64 {
            let bits: Vec<u8> = (0..6).rev().map(|i| ((v >> i) & 1) as u8).collect();
            assert_eq!(symbol_to_bits(bits_to_symbol(&bits, s).unwrap(), s), bits);
        }
    }

    #[test]
    fn pair_bit_order() {
        let s = sf(6);
        let pair = IqSymbolPair::new(1, 2, s).unwrap();
        let bits = pair_to_bits(pair, s);
        assert_eq!(bits, vec![0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0]);
        assert_eq!(bits_to_pair(&bits, s).unwrap(), pair);
    }

    #[test]
    fn symbol_range() {
        assert!(LoraSymbol::new(127, sf(7)).is_ok());
        assert_eq!(
            LoraSymbol::new(128, sf(7)),
            Err(Error::SymbolOutOfRange { symbol: 128, n: 128 })
        );
        assert!(IqSymbolPair::new(3, 64, sf(6)).is_err());
        let cfg = ModConfig::unit_power(sf(6));
        let big = LoraSymbol::new(100, sf(7)).unwrap();
        assert!(lora_modulate(&cfg, big).is_err());
        assert!(ModConfig::new(sf(6), 0.0).is_err());
    }

    #[test]
    fn lora_k0_is_raw_upchirp() {
        let s = sf(7);
        let x = lora_modulate(&ModConfig::unit_power(s), LoraSymbol::new(0, s).unwrap()).unwrap();
        for (a, b) in x.samples().iter().zip(raw_upchirp(s).samples()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn lora_energy_and_peak() {
        let s = sf(7);
        let cfg = ModConfig::new(s, 1.0).unwrap();
        for k in [0, 1, 77, 127] {
            let x = lora_modulate(&cfg, LoraSymbol::new(k, s).unwrap()).unwrap();
            assert!((x.energy() - 1.0).abs() < 1e-9);
            let r = dft(&despread(&x, s).unwrap());
            let peak = (1.0f64 / 128.0).sqrt() * 128.0;
            for (f, b) in r.bins().iter().enumerate() {
                let want = if f == k as usize { peak } else { 0.0 };
                assert!((b - Complex64::new(want, 0.0)).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn despread_modulated_is_tone() {
        let s = sf(6);
        let es = 3.0;
        let x = lora_modulate(&ModConfig::new(s, es).unwrap(), LoraSymbol::new(5, s).unwrap()).unwrap();
        let amp = (es / 64.0).sqrt();
        for (i, v) in despread(&x, s).unwrap().samples().iter().enumerate() {
            let want = Complex64::from_polar(amp, 2.0 * PI * 5.0 * i as f64 / 64.0);
            assert!((v - want).norm() < 1e-12);
        }
    }

    #[test]
    fn iqcss_dc_pair() {
        let s = sf(6);
        let cfg = ModConfig::new(s, 128.0).unwrap();
        let x = iqcss_modulate(&cfg, IqSymbolPair::new(0, 0, s).unwrap()).unwrap();
        for (a, c) in x.samples().iter().zip(raw_upchirp(s).samples()) {
            assert!((a - Complex64::new(1.0, 1.0) * c).norm() < 1e-12);
        }
    }

    #[test]
    fn iqcss_bins_and_crosstalk() {
        let s = sf(7);
        let es = 5.0;
        let cfg = ModConfig::new(s, es).unwrap();
        let peak = (es / 256.0).sqrt() * 128.0;
        let x = iqcss_modulate(&cfg, IqSymbolPair::new(10, 99, s).unwrap()).unwrap();
        let r = dft(&despread(&x, s).unwrap());
        for (f, b) in r.bins().iter().enumerate() {
            let want_re = if f == 10 { peak } else { 0.0 };
            let want_im = if f == 99 { peak } else { 0.0 };
            assert!((b.re - want_re).abs() < 1e-9, "re bin {f}");
            assert!((b.im - want_im).abs() < 1e-9, "im bin {f}");
        }
    }

    #[test]
    fn iqcss_energy_uniform() {
        let s = sf(6);
        let es = 7.5;
        let cfg = ModConfig::new(s, es).unwrap();
        for ki in 0..64 {
            for kq in [0, 1, ki, 63] {
                let x = iqcss_modulate(&cfg, IqSymbolPair::new(ki, kq, s).unwrap()).unwrap();
                assert!((x.energy() - es).abs() / es < 1e-9, "({ki},{kq})");
            }
        }
    }

    #[test]
    fn iqcss_shared_index() {
        let s = sf(7);
        let cfg = ModConfig::unit_power(s);
        let x = iqcss_modulate(&cfg, IqSymbolPair::new(42, 42, s).unwrap()).unwrap();
        let r = dft(&despread(&x, s).unwrap());
        let amp = (cfg.symbol_energy_es / 256.0).sqrt() * 128.0;
        assert!((r.bins()[42] - Complex64::new(amp, amp)).norm() < 1e-9);
        assert_eq!(iqcss_demodulate(&x, s).unwrap(), IqSymbolPair { k_i: 42, k_q: 42 });
    }

    #[test]
    fn noncoherent_is_phase_blind() {
        let s = sf(7);
        let cfg = ModConfig::unit_power(s);
        let x = lora_modulate(&cfg, LoraSymbol::new(100, s).unwrap()).unwrap();
        assert_eq!(lora_demod_noncoherent(&x, s).unwrap().value(), 100);
        for theta in [0.3, 1.7, PI, -2.2] {
            let rot = x.scaled(Complex64::from_polar(1.0, theta)).unwrap();
            assert_eq!(lora_demod_noncoherent(&rot, s).unwrap().value(), 100);
        }
    }

    #[test]
    fn coherent_needs_phase_correction() {
        let s = sf(7);
        let cfg = ModConfig::unit_power(s);
        let x = lora_modulate(&cfg, LoraSymbol::new(100, s).unwrap()).unwrap();
        assert_eq!(lora_demod_coherent(&x, s).unwrap().value(), 100);
        let flipped = x.scaled(Complex64::new(-1.0, 0.0)).unwrap();
        assert_ne!(lora_demod_coherent(&flipped, s).unwrap().value(), 100);
    }

    #[test]
    fn exhaustive_loopback_sf7() {
        let s = sf(7);
        let cfg = ModConfig::unit_power(s);
        for k in 0..128 {
            let sym = LoraSymbol::new(k, s).unwrap();
            let x = lora_modulate(&cfg, sym).unwrap();
            assert_eq!(lora_demod_noncoherent(&x, s).unwrap(), sym);
            assert_eq!(lora_demod_coherent(&x, s).unwrap(), sym);
            // backwards compatibility: IQCSS receiver on a LoRa chirp
            assert_eq!(iqcss_demodulate(&x, s).unwrap().k_i, k);
        }
    }

    #[test]
    fn random_iqcss_loopback() {
        let s = sf(7);
        let cfg = ModConfig::unit_power(s);
        let modulator = Modulator::new(s);
        let mut demod = Demodulator::new(s);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut buf = vec![Complex64::new(0.0, 0.0); 128];
        for _ in 0..10_000 {
            let pair = IqSymbolPair::new(rng.random_range(0..128), rng.random_range(0..128), s).unwrap();
            modulator.iqcss_into(cfg.symbol_energy_es, pair, &mut buf);
            assert_eq!(demod.iqcss(&buf), pair);
        }
    }

    #[test]
    fn length_checks() {
        let s = sf(7);
        let short = IqSignal::new(vec![Complex64::new(1.0, 0.0); 64]).unwrap();
        assert!(lora_demod_noncoherent(&short, s).is_err());
        assert!(lora_demod_coherent(&short, s).is_err());
        assert!(iqcss_demodulate(&short, s).is_err());
    }

    #[test]
    fn argmax_ties_go_low() {
        let bins = vec![Complex64::new(1.0, 0.0), Complex64::new(3.0, 0.0), Complex64::new(3.0, 0.0)];
        assert_eq!(argmax_by(&bins, |b| b.re), 1);
        let flat = vec![Complex64::new(0.0, 0.0); 8];
        assert_eq!(argmax_by(&flat, |b| b.norm()), 0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn any_sf() -> impl Strategy<Value = SpreadingFactor> {
            (6u8..=12).prop_map(|v| SpreadingFactor::new(v).unwrap())
        }

        proptest! {
            #[test]
            fn pair_bits_roundtrip((s, k_i, k_q) in any_sf().prop_flat_map(|s| {
                let n = s.n() as u32;
                (Just(s), 0..n, 0..n)
            })) {
                let pair = IqSymbolPair::new(k_i, k_q, s).unwrap();
                let bits = pair_to_bits(pair, s);
                prop_assert_eq!(bits.len(), 2 * s.bits() as usize);
                prop_assert_eq!(bits_to_pair(&bits, s).unwrap(), pair);
            }

            #[test]
            fn iqcss_noiseless_loopback((s, k_i, k_q) in any_sf().prop_flat_map(|s| {
                let n = s.n() as u32;
                (Just(s), 0..n, 0..n)
            }), es in 0.01f64..1e4) {
                let cfg = ModConfig::new(s, es).unwrap();
                let pair = IqSymbolPair::new(k_i, k_q, s).unwrap();
                let x = iqcss_modulate(&cfg, pair).unwrap();
                prop_assert!((x.energy() - es).abs() < 1e-9 * es);
                prop_assert_eq!(iqcss_demodulate(&x, s).unwrap(), pair);
            }
        }
    }
}
