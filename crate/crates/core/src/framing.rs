//! Over-the-air frame: 8 sync up-chirps, 2 sync down-chirps, then the
//! payload chirps, each optionally preceded by a cyclic prefix.
//!
//! Time alignment is assumed perfect, so the receiver slices regions at the
//! known offsets. The down-chirps are carried for structural fidelity but the
//! receiver never looks at them.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::chirp::{upchirp_samples, IqSignal, SpreadingFactor};
use crate::error::{Error, Result};
use crate::modem::{IqSymbolPair, LoraSymbol, ModConfig, Modulator};

pub const DEFAULT_SYNC_UP: usize = 8;
pub const DEFAULT_SYNC_DOWN: usize = 2;
pub const DEFAULT_PAYLOAD_SYMBOLS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameConfig {
    pub sf: SpreadingFactor,
    pub n_sync_up: usize,
    pub n_sync_down: usize,
    pub payload_symbols: usize,
    /// Cyclic prefix length in samples; 0 disables it.
    pub cp_len: usize,
}

impl FrameConfig {
    /// 8 up, 2 down, 20 payload chirps, no cyclic prefix.
    pub fn new(sf: SpreadingFactor) -> Self {
        Self {
            sf,
            n_sync_up: DEFAULT_SYNC_UP,
            n_sync_down: DEFAULT_SYNC_DOWN,
            payload_symbols: DEFAULT_PAYLOAD_SYMBOLS,
            cp_len: 0,
        }
    }

    pub fn with_cp(mut self, cp_len: usize) -> Result<Self> {
        self.cp_len = cp_len;
        self.validate()?;
        Ok(self)
    }

    pub fn with_payload(mut self, payload_symbols: usize) -> Result<Self> {
        self.payload_symbols = payload_symbols;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cp_len >= self.sf.n() {
            return Err(Error::InvalidParameter("cyclic prefix must be shorter than a chirp"));
        }
        if self.n_sync_up == 0 {
            return Err(Error::InvalidParameter("at least one sync up-chirp is required"));
        }
        Ok(())
    }

    /// Samples per chirp including its prefix.
    pub fn slot_len(&self) -> usize {
        self.sf.n() + self.cp_len
    }

    pub fn chirp_count(&self) -> usize {
        self.n_sync_up + self.n_sync_down + self.payload_symbols
    }

    pub fn total_len(&self) -> usize {
        self.chirp_count() * self.slot_len()
    }

    /// Start sample of the `i`-th payload chirp, prefix excluded.
    pub fn data_start(&self, i: usize) -> usize {
        (self.n_sync_up + self.n_sync_down + i) * self.slot_len() + self.cp_len
    }

    /// Start sample of the `i`-th sync up-chirp, prefix excluded.
    pub fn sync_start(&self, i: usize) -> usize {
        i * self.slot_len() + self.cp_len
    }

    /// Contiguous region list covering the frame.
    pub fn layout(&self) -> Vec<Region> {
        let slot = self.slot_len();
        let kinds = core::iter::repeat_n(RegionKind::SyncUp, self.n_sync_up)
            .chain(core::iter::repeat_n(RegionKind::SyncDown, self.n_sync_down))
            .chain(core::iter::repeat_n(RegionKind::Data, self.payload_symbols));
        kinds
            .enumerate()
            .map(|(i, kind)| Region {
                kind,
                start: i * slot,
                len: slot,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionKind {
    SyncUp,
    SyncDown,
    Data,
}

/// One chirp slot; `len` includes the cyclic prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Region {
    pub kind: RegionKind,
    pub start: usize,
    pub len: usize,
}

/// Payload chirps for either scheme.
#[derive(Debug, Clone, Copy)]
pub enum Payload<'a> {
    Lora(&'a [LoraSymbol]),
    Iqcss(&'a [IqSymbolPair]),
}

impl Payload<'_> {
    pub fn len(&self) -> usize {
        match self {
            Payload::Lora(s) => s.len(),
            Payload::Iqcss(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub signal: IqSignal,
    pub layout: Vec<Region>,
}

/// Assembles a transmit frame. Sync chirps have unit amplitude per sample;
/// payload chirps carry `modulation.symbol_energy_es` each.
pub fn build_frame(cfg: &FrameConfig, payload: Payload<'_>, modulation: &ModConfig) -> Result<Frame> {
    cfg.validate()?;
    if modulation.sf != cfg.sf {
        return Err(Error::InvalidParameter("modulation and frame spreading factors differ"));
    }
    if payload.len() != cfg.payload_symbols {
        return Err(Error::CountMismatch {
            expected: cfg.payload_symbols,
            actual: payload.len(),
        });
    }
    let n = cfg.sf.n();
    let slot = cfg.slot_len();
    let up = upchirp_samples(n);
    let down: Vec<Complex64> = up.iter().map(|c| c.conj()).collect();
    let modulator = Modulator::new(cfg.sf);
    let es = modulation.symbol_energy_es;

    let mut samples = vec![Complex64::new(0.0, 0.0); cfg.total_len()];
    let mut slots = samples.chunks_exact_mut(slot);
    for _ in 0..cfg.n_sync_up {
        slots.next().unwrap()[cfg.cp_len..].copy_from_slice(&up);
    }
    for _ in 0..cfg.n_sync_down {
        slots.next().unwrap()[cfg.cp_len..].copy_from_slice(&down);
    }
    match payload {
        Payload::Lora(symbols) => {
            for s in symbols {
                if s.value() as usize >= n {
                    return Err(Error::SymbolOutOfRange { symbol: s.value(), n });
                }
                modulator.lora_into(es, s.value(), &mut slots.next().unwrap()[cfg.cp_len..]);
            }
        }
        Payload::Iqcss(pairs) => {
            for &p in pairs {
                IqSymbolPair::new(p.k_i, p.k_q, cfg.sf)?;
                modulator.iqcss_into(es, p, &mut slots.next().unwrap()[cfg.cp_len..]);
            }
        }
    }
    if cfg.cp_len > 0 {
        for chunk in samples.chunks_exact_mut(slot) {
            let (prefix, body) = chunk.split_at_mut(cfg.cp_len);
            prefix.copy_from_slice(&body[n - cfg.cp_len..]);
        }
    }
    Ok(Frame {
        signal: IqSignal::new(samples)?,
        layout: cfg.layout(),
    })
}

/// Sync up-chirps and payload chirps sliced out of a received frame, with
/// cyclic prefixes removed.
#[derive(Debug, Clone, PartialEq)]
pub struct Regions {
    pub sync_up: Vec<IqSignal>,
    pub data: Vec<IqSignal>,
}

pub fn extract_regions(frame_rx: &IqSignal, cfg: &FrameConfig) -> Result<Regions> {
    if frame_rx.len() != cfg.total_len() {
        return Err(Error::LengthMismatch {
            expected: cfg.total_len(),
            actual: frame_rx.len(),
        });
    }
    let n = cfg.sf.n();
    let rate = frame_rx.sample_rate_hz();
    let x = frame_rx.samples();
    let slice = |start: usize| IqSignal::with_rate(x[start..start + n].to_vec(), rate);
    let sync_up = (0..cfg.n_sync_up)
        .map(|i| slice(cfg.sync_start(i)))
        .collect::<Result<_>>()?;
    let data = (0..cfg.payload_symbols)
        .map(|i| slice(cfg.data_start(i)))
        .collect::<Result<_>>()?;
    Ok(Regions { sync_up, data })
}

/// Elementwise mean of the received sync up-chirps.
pub fn average_sync(sync_up: &[IqSignal], cfg: &FrameConfig) -> Result<IqSignal> {
    if sync_up.len() != cfg.n_sync_up {
        return Err(Error::CountMismatch {
            expected: cfg.n_sync_up,
            actual: sync_up.len(),
        });
    }
    let n = cfg.sf.n();
    let mut acc = vec![Complex64::new(0.0, 0.0); n];
    for s in sync_up {
        if s.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: s.len(),
            });
        }
        for (a, v) in acc.iter_mut().zip(s.samples()) {
            *a += v;
        }
    }
    let scale = 1.0 / sync_up.len() as f64;
    for a in acc.iter_mut() {
        *a *= scale;
    }
    IqSignal::with_rate(acc, sync_up[0].sample_rate_hz())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chirp::{raw_downchirp, raw_upchirp};
    use crate::modem::{iqcss_modulate, lora_modulate};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn sf(v: u8) -> SpreadingFactor {
        SpreadingFactor::new(v).unwrap()
    }

    fn lora_payload(s: SpreadingFactor, count: usize, rng: &mut ChaCha8Rng) -> Vec<LoraSymbol> {
        (0..count)
            .map(|_| LoraSymbol::new(rng.random_range(0..s.n() as u32), s).unwrap())
            .collect()
    }

    #[test]
    fn frame_lengths() {
        let s = sf(7);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let payload = lora_payload(s, 20, &mut rng);
        let m = ModConfig::unit_power(s);
        let plain = build_frame(&FrameConfig::new(s), Payload::Lora(&payload), &m).unwrap();
        assert_eq!(plain.signal.len(), 3840);
        let cfg = FrameConfig::new(s).with_cp(16).unwrap();
        let cp = build_frame(&cfg, Payload::Lora(&payload), &m).unwrap();
        assert_eq!(cp.signal.len(), 4320);
    }

    #[test]
    fn layout_is_contiguous() {
        let cfg = FrameConfig::new(sf(6)).with_cp(16).unwrap();
        let layout = cfg.layout();
        assert_eq!(layout.len(), 30);
        let mut next = 0;
        for r in &layout {
            assert_eq!(r.start, next);
            next += r.len;
        }
        assert_eq!(next, cfg.total_len());
        assert_eq!(layout[7].kind, RegionKind::SyncUp);
        assert_eq!(layout[8].kind, RegionKind::SyncDown);
        assert_eq!(layout[10].kind, RegionKind::Data);
    }

    #[test]
    fn cyclic_prefix_copies_tail() {
        let s = sf(7);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pairs: Vec<_> = (0..20)
            .map(|_| IqSymbolPair::new(rng.random_range(0..128), rng.random_range(0..128), s).unwrap())
            .collect();
        let cfg = FrameConfig::new(s).with_cp(16).unwrap();
        let frame = build_frame(&cfg, Payload::Iqcss(&pairs), &ModConfig::unit_power(s)).unwrap();
        let x = frame.signal.samples();
        for r in &frame.layout {
            let slot = &x[r.start..r.start + r.len];
            assert_eq!(&slot[..16], &slot[r.len - 16..]);
        }
    }

    #[test]
    fn loopback_extracts_transmitted_chirps() {
        for cp in [0, 16] {
            let s = sf(7);
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let payload = lora_payload(s, 20, &mut rng);
            let m = ModConfig::new(s, 3.0).unwrap();
            let cfg = FrameConfig::new(s).with_cp(cp).unwrap();
            let frame = build_frame(&cfg, Payload::Lora(&payload), &m).unwrap();
            let regions = extract_regions(&frame.signal, &cfg).unwrap();
            assert_eq!(regions.sync_up.len(), 8);
            for sync in &regions.sync_up {
                assert_eq!(sync, &raw_upchirp(s));
                assert!((sync.energy() - 128.0).abs() < 1e-9);
            }
            for (rx, sym) in regions.data.iter().zip(&payload) {
                assert_eq!(rx, &lora_modulate(&m, *sym).unwrap());
            }
            let down_start = 8 * cfg.slot_len() + cp;
            assert_eq!(
                &frame.signal.samples()[down_start..down_start + 128],
                raw_downchirp(s).samples()
            );
        }
    }

    #[test]
    fn iqcss_payload_roundtrip() {
        let s = sf(6);
        let pairs = [IqSymbolPair::new(3, 60, s).unwrap(); 4];
        let cfg = FrameConfig::new(s).with_payload(4).unwrap();
        let m = ModConfig::unit_power(s);
        let frame = build_frame(&cfg, Payload::Iqcss(&pairs), &m).unwrap();
        let regions = extract_regions(&frame.signal, &cfg).unwrap();
        for rx in &regions.data {
            assert_eq!(rx, &iqcss_modulate(&m, pairs[0]).unwrap());
        }
    }

    #[test]
    fn circular_convolution_after_cp_removal() {
        let s = sf(7);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let payload = lora_payload(s, 20, &mut rng);
        let m = ModConfig::unit_power(s);
        let cfg = FrameConfig::new(s).with_cp(16).unwrap();
        let frame = build_frame(&cfg, Payload::Lora(&payload), &m).unwrap();
        let taps: Vec<Complex64> = (0..5)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        // linear convolution of the whole frame
        let x = frame.signal.samples();
        let y: Vec<Complex64> = (0..x.len())
            .map(|n| (0..taps.len()).filter(|&l| l <= n).map(|l| taps[l] * x[n - l]).sum())
            .collect();
        let regions = extract_regions(&IqSignal::new(y).unwrap(), &cfg).unwrap();
        for (rx, sym) in regions.data.iter().zip(&payload) {
            let tx = lora_modulate(&m, *sym).unwrap();
            let t = tx.samples();
            for n in 0..128 {
                let want: Complex64 = (0..taps.len()).map(|l| taps[l] * t[(n + 128 - l) % 128]).sum();
                assert!((rx.samples()[n] - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        let s = sf(7);
        let m = ModConfig::unit_power(s);
        let cfg = FrameConfig::new(s);
        let short = [LoraSymbol::new(1, s).unwrap(); 19];
        assert!(matches!(
            build_frame(&cfg, Payload::Lora(&short), &m),
            Err(Error::CountMismatch { expected: 20, actual: 19 })
        ));
        assert!(FrameConfig::new(s).with_cp(128).is_err());
        let wrong = IqSignal::new(vec![Complex64::new(0.0, 0.0); 3839]).unwrap();
        assert!(extract_regions(&wrong, &cfg).is_err());
        let sync = vec![raw_upchirp(s); 7];
        assert!(average_sync(&sync, &cfg).is_err());
        let mut mixed = vec![raw_upchirp(s); 7];
        mixed.push(raw_upchirp(sf(6)));
        assert!(average_sync(&mixed, &cfg).is_err());
    }

    #[test]
    fn averaging() {
        let s = sf(6);
        let cfg = FrameConfig::new(s);
        let c = raw_upchirp(s);
        let avg = average_sync(&vec![c.clone(); 8], &cfg).unwrap();
        for (a, b) in avg.samples().iter().zip(c.samples()) {
            assert!((a - b).norm() < 1e-15);
        }
        let neg = c.scaled(Complex64::new(-1.0, 0.0)).unwrap();
        let alternating: Vec<_> = (0..8).map(|i| if i % 2 == 0 { c.clone() } else { neg.clone() }).collect();
        let zero = average_sync(&alternating, &cfg).unwrap();
        assert!(zero.energy() < 1e-24);
    }

    #[test]
    fn averaging_reduces_noise_variance_by_eight() {
        let s = sf(6);
        let cfg = FrameConfig::new(s);
        let c = raw_upchirp(s);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let sigma2 = 0.5;
        let per_dim = (sigma2 / 2.0f64).sqrt();
        let trials = 10_000;
        let mut residual = 0.0;
        for _ in 0..trials {
            let copies: Vec<IqSignal> = (0..8)
                .map(|_| {
                    let noisy = c
                        .samples()
                        .iter()
                        .map(|v| {
                            let re: f64 = rng.sample(StandardNormal);
                            let im: f64 = rng.sample(StandardNormal);
                            v + Complex64::new(re, im) * per_dim
                        })
                        .collect();
                    IqSignal::new(noisy).unwrap()
                })
                .collect();
            let avg = average_sync(&copies, &cfg).unwrap();
            // one sample per trial keeps the draws independent
            residual += (avg.samples()[0] - c.samples()[0]).norm_sqr();
        }
        let var = residual / trials as f64;
        let want = sigma2 / 8.0;
        assert!((var - want).abs() / want < 0.2, "{var} vs {want}");
    }
}
