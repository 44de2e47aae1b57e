//! One frame through transmitter, channel and receiver, with error tallies.
//!
//! This is the unit of work of a Monte Carlo run. The caller owns the random
//! stream, so a frame is fully determined by the stream it is given.

use alloc::vec::Vec;
use core::ops::{Add, AddAssign};

use num_complex::Complex64;
use rand::Rng;

use crate::chanest::{equalize_flat_in_place, ls_flat_samples, FdEqualizer, FlatEstimate, ImpulseEstimate, SelectiveEstimator};
use crate::channel::{add_awgn, flat_rayleigh, tvfs_realization, ChannelRealization, DopplerSpec, FadingMode, NoiseSpec, TapProfile};
use crate::chirp::upchirp_samples;
use crate::error::{Error, Result};
use crate::framing::{build_frame, FrameConfig, Payload};
use crate::modem::{Demodulator, IqSymbolPair, LoraSymbol, ModConfig, Modulation};

/// Transmit scheme together with the detector used for it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    LoraNoncoherent,
    LoraCoherent,
    Iqcss,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::LoraNoncoherent, Scheme::LoraCoherent, Scheme::Iqcss];

    pub fn modulation(self) -> Modulation {
        match self {
            Scheme::LoraNoncoherent | Scheme::LoraCoherent => Modulation::Lora,
            Scheme::Iqcss => Modulation::Iqcss,
        }
    }

    pub fn is_coherent(self) -> bool {
        !matches!(self, Scheme::LoraNoncoherent)
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::LoraNoncoherent => "lora-noncoherent",
            Scheme::LoraCoherent => "lora-coherent",
            Scheme::Iqcss => "iqcss",
        }
    }
}

impl core::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or(Error::InvalidParameter("unknown scheme"))
    }
}

impl core::fmt::Display for Scheme {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

/// Channel model plus the channel state information the receiver gets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelMode {
    /// No fading; coherent detectors need no equalization.
    Awgn,
    /// Block-static Rayleigh, receiver knows the gain.
    RayleighPerfect,
    /// Block-static Rayleigh, LS estimate from the preamble.
    RayleighStaticEst,
    /// Rayleigh varying sample by sample, LS estimate from the preamble.
    RayleighMobileEst,
    /// Time-varying multipath, receiver knows the taps at each chirp center.
    TvfsPerfect,
    /// Time-varying multipath, circulant LS estimate from the preamble.
    TvfsEst,
}

impl ChannelMode {
    pub const ALL: [ChannelMode; 6] = [
        ChannelMode::Awgn,
        ChannelMode::RayleighPerfect,
        ChannelMode::RayleighStaticEst,
        ChannelMode::RayleighMobileEst,
        ChannelMode::TvfsPerfect,
        ChannelMode::TvfsEst,
    ];

    pub fn is_selective(self) -> bool {
        matches!(self, ChannelMode::TvfsPerfect | ChannelMode::TvfsEst)
    }

    pub fn name(self) -> &'static str {
        match self {
            ChannelMode::Awgn => "awgn",
            ChannelMode::RayleighPerfect => "rayleigh-perfect",
            ChannelMode::RayleighStaticEst => "rayleigh-static-est",
            ChannelMode::RayleighMobileEst => "rayleigh-mobile-est",
            ChannelMode::TvfsPerfect => "tvfs-perfect",
            ChannelMode::TvfsEst => "tvfs-est",
        }
    }
}

impl core::str::FromStr for ChannelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ChannelMode::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or(Error::InvalidParameter("unknown channel"))
    }
}

impl core::fmt::Display for ChannelMode {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkConfig {
    pub scheme: Scheme,
    pub channel: ChannelMode,
    pub frame: FrameConfig,
    pub modulation: ModConfig,
    pub sample_rate_hz: f64,
    pub doppler: DopplerSpec,
    /// Required by the multipath modes.
    pub profile: Option<TapProfile>,
    /// Zero estimated taps beyond the cyclic prefix.
    pub truncate_estimate: bool,
}

impl LinkConfig {
    pub fn validate(&self) -> Result<()> {
        self.frame.validate()?;
        if self.modulation.sf != self.frame.sf {
            return Err(Error::InvalidParameter("modulation and frame spreading factors differ"));
        }
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return Err(Error::InvalidParameter("sample rate must be positive"));
        }
        if self.frame.payload_symbols == 0 {
            return Err(Error::InvalidParameter("payload must hold at least one chirp"));
        }
        if self.channel.is_selective() {
            let profile = self
                .profile
                .as_ref()
                .ok_or(Error::InvalidParameter("multipath channel needs a tap profile"))?;
            if profile.max_delay_samples(self.sample_rate_hz) > self.frame.cp_len {
                return Err(Error::InvalidParameter("cyclic prefix shorter than the channel delay spread"));
            }
        }
        Ok(())
    }
}

/// Error counts over payload chirps only.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FrameTally {
    pub bits: u64,
    pub bit_errors: u64,
    /// Detected symbols; an IQCSS chirp contributes two.
    pub symbols: u64,
    pub symbol_errors: u64,
    /// Frames whose frequency-domain equalizer hit the floor.
    pub ill_conditioned: u64,
}

impl Add for FrameTally {
    type Output = FrameTally;

    fn add(self, o: FrameTally) -> FrameTally {
        FrameTally {
            bits: self.bits + o.bits,
            bit_errors: self.bit_errors + o.bit_errors,
            symbols: self.symbols + o.symbols,
            symbol_errors: self.symbol_errors + o.symbol_errors,
            ill_conditioned: self.ill_conditioned + o.ill_conditioned,
        }
    }
}

impl AddAssign for FrameTally {
    fn add_assign(&mut self, o: FrameTally) {
        *self = *self + o;
    }
}

impl core::iter::Sum for FrameTally {
    fn sum<I: Iterator<Item = FrameTally>>(iter: I) -> Self {
        iter.fold(FrameTally::default(), Add::add)
    }
}

enum Sent {
    Lora(Vec<LoraSymbol>),
    Iqcss(Vec<IqSymbolPair>),
}

/// Reusable transmitter/receiver state for one link configuration.
#[derive(Debug, Clone)]
pub struct LinkSimulator {
    cfg: LinkConfig,
    demod: Demodulator,
    estimator: SelectiveEstimator,
    preamble_ref: Vec<Complex64>,
}

impl LinkSimulator {
    pub fn new(cfg: LinkConfig) -> Result<Self> {
        cfg.validate()?;
        let sf = cfg.frame.sf;
        let preamble_ref = upchirp_samples(sf.n()).repeat(cfg.frame.n_sync_up);
        Ok(Self {
            demod: Demodulator::new(sf),
            estimator: SelectiveEstimator::new(sf),
            preamble_ref,
            cfg,
        })
    }

    pub fn config(&self) -> &LinkConfig {
        &self.cfg
    }

    fn draw_channel<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<ChannelRealization> {
        let cfg = &self.cfg;
        let rate = cfg.sample_rate_hz;
        match cfg.channel {
            ChannelMode::Awgn => None,
            ChannelMode::RayleighPerfect | ChannelMode::RayleighStaticEst => {
                Some(flat_rayleigh(&cfg.doppler, rate, FadingMode::BlockStatic, rng))
            }
            ChannelMode::RayleighMobileEst => Some(flat_rayleigh(&cfg.doppler, rate, FadingMode::TimeVarying, rng)),
            ChannelMode::TvfsPerfect | ChannelMode::TvfsEst => {
                let profile = cfg.profile.as_ref().expect("validated");
                Some(tvfs_realization(profile, &cfg.doppler, rate, FadingMode::TimeVarying, rng))
            }
        }
    }

    /// Simulates one frame: random payload, channel, noise, estimation,
    /// equalization and detection.
    pub fn run_frame<R: Rng + ?Sized>(&mut self, noise: NoiseSpec, rng: &mut R) -> FrameTally {
        let frame_cfg = self.cfg.frame;
        let sf = frame_cfg.sf;
        let n = sf.n();
        let range = 0..n as u32;

        let sent = match self.cfg.scheme.modulation() {
            Modulation::Lora => Sent::Lora(
                (0..frame_cfg.payload_symbols)
                    .map(|_| LoraSymbol::new(rng.random_range(range.clone()), sf).expect("in range"))
                    .collect(),
            ),
            Modulation::Iqcss => Sent::Iqcss(
                (0..frame_cfg.payload_symbols)
                    .map(|_| {
                        let k_i = rng.random_range(range.clone());
                        let k_q = rng.random_range(range.clone());
                        IqSymbolPair { k_i, k_q }
                    })
                    .collect(),
            ),
        };
        let payload = match &sent {
            Sent::Lora(s) => Payload::Lora(s),
            Sent::Iqcss(p) => Payload::Iqcss(p),
        };
        let frame = build_frame(&frame_cfg, payload, &self.cfg.modulation).expect("validated frame");

        let channel = self.draw_channel(rng);
        let mut rx = match &channel {
            Some(ch) => ch.apply_samples(frame.signal.samples()),
            None => frame.signal.into_samples(),
        };
        add_awgn(&mut rx, noise, rng);

        let mut tally = FrameTally::default();
        let equalizer = self.receiver_equalizer(&rx, channel.as_ref());
        if let Some(Equalizer::Selective(eq)) = &equalizer {
            if eq.ill_conditioned() {
                tally.ill_conditioned = 1;
            }
        }

        let mut chirp = alloc::vec![Complex64::new(0.0, 0.0); n];
        for i in 0..frame_cfg.payload_symbols {
            let start = frame_cfg.data_start(i);
            chirp.copy_from_slice(&rx[start..start + n]);
            if self.cfg.scheme.is_coherent() {
                match &equalizer {
                    Some(Equalizer::Flat(est)) => {
                        // a zero estimate leaves the chirp as received
                        let _ = equalize_flat_in_place(&mut chirp, est);
                    }
                    Some(Equalizer::Selective(eq)) => eq.equalize_in_place(&mut chirp),
                    Some(Equalizer::PerChirp) => {
                        let center = start + n / 2;
                        let ch = channel.as_ref().expect("perfect CSI needs a channel");
                        match ch {
                            ChannelRealization::Flat(g) => {
                                let _ = equalize_flat_in_place(&mut chirp, &FlatEstimate { h_hat: g.at(center) });
                            }
                            ChannelRealization::Selective(_) => {
                                let est = ImpulseEstimate {
                                    h_hat: ch.impulse_at(center, n),
                                };
                                let eq = FdEqualizer::new(&est, sf);
                                if eq.ill_conditioned() {
                                    tally.ill_conditioned = 1;
                                }
                                eq.equalize_in_place(&mut chirp);
                            }
                        }
                    }
                    None => {}
                }
            }
            let width = sf.bits() as u64;
            match &sent {
                Sent::Lora(symbols) => {
                    let k = symbols[i].value();
                    let k_hat = match self.cfg.scheme {
                        Scheme::LoraNoncoherent => self.demod.noncoherent(&chirp),
                        _ => self.demod.coherent(&chirp),
                    };
                    tally.bits += width;
                    tally.symbols += 1;
                    tally.bit_errors += u64::from((k ^ k_hat).count_ones());
                    tally.symbol_errors += u64::from(k != k_hat);
                }
                Sent::Iqcss(pairs) => {
                    let p = pairs[i];
                    let p_hat = self.demod.iqcss(&chirp);
                    tally.bits += 2 * width;
                    tally.symbols += 2;
                    tally.bit_errors += u64::from((p.k_i ^ p_hat.k_i).count_ones() + (p.k_q ^ p_hat.k_q).count_ones());
                    tally.symbol_errors += u64::from(p.k_i != p_hat.k_i) + u64::from(p.k_q != p_hat.k_q);
                }
            }
        }
        tally
    }

    fn receiver_equalizer(&self, rx: &[Complex64], channel: Option<&ChannelRealization>) -> Option<Equalizer> {
        if !self.cfg.scheme.is_coherent() {
            return None;
        }
        let frame_cfg = &self.cfg.frame;
        let n = frame_cfg.sf.n();
        match self.cfg.channel {
            ChannelMode::Awgn => None,
            ChannelMode::RayleighPerfect | ChannelMode::TvfsPerfect => channel.map(|_| Equalizer::PerChirp),
            ChannelMode::RayleighStaticEst | ChannelMode::RayleighMobileEst => {
                let sync: Vec<Complex64> = (0..frame_cfg.n_sync_up)
                    .flat_map(|i| {
                        let s = frame_cfg.sync_start(i);
                        rx[s..s + n].iter().copied()
                    })
                    .collect();
                ls_flat_samples(&sync, &self.preamble_ref).ok().map(Equalizer::Flat)
            }
            ChannelMode::TvfsEst => {
                let mut y_bar = alloc::vec![Complex64::new(0.0, 0.0); n];
                for i in 0..frame_cfg.n_sync_up {
                    let s = frame_cfg.sync_start(i);
                    for (a, v) in y_bar.iter_mut().zip(&rx[s..s + n]) {
                        *a += v;
                    }
                }
                let scale = 1.0 / frame_cfg.n_sync_up as f64;
                y_bar.iter_mut().for_each(|v| *v *= scale);
                let mut est = self.estimator.estimate(&y_bar).expect("length N");
                if self.cfg.truncate_estimate {
                    est = est.truncated(frame_cfg.cp_len + 1);
                }
                Some(Equalizer::Selective(FdEqualizer::new(&est, frame_cfg.sf)))
            }
        }
    }
}

enum Equalizer {
    Flat(FlatEstimate),
    Selective(FdEqualizer),
    PerChirp,
}
