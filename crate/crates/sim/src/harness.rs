//! Monte Carlo BER/SER and throughput sweeps.
//!
//! Every frame draws from its own ChaCha8 stream keyed by
//! `(seed, sf, point, frame)`, and frames are tallied in fixed batches of
//! [`BATCH_FRAMES`]. The stopping rule is only checked on batch boundaries, so
//! the result never depends on how many worker threads ran the batches.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use iqcss_core::channel::{ebn0_to_sigma2, snr_to_sigma2, snr_to_ebn0_db, ebn0_to_snr_db, DopplerSpec, NoiseSpec};
use iqcss_core::framing::FrameConfig;
use iqcss_core::link::{FrameTally, LinkConfig, LinkSimulator, Scheme};
use iqcss_core::{ModConfig, SpreadingFactor};

use crate::config::{AxisKind, ConfigError, SimConfig};

/// Frames per stopping-rule check.
pub const BATCH_FRAMES: u64 = 64;
/// Batches dispatched to the thread pool at a time.
const BATCHES_PER_ROUND: u64 = 8;

/// One sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SimRecord {
    pub scheme: Scheme,
    pub sf: SpreadingFactor,
    pub axis: AxisKind,
    pub axis_db: f64,
    pub bits_sent: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub symbols: u64,
    pub symbol_errors: u64,
    pub ser: f64,
    pub throughput_bps: f64,
    pub shannon_bps: f64,
    pub frames: u64,
    pub ill_conditioned_frames: u64,
    pub censored: bool,
    pub seed: u64,
    pub elapsed_s: f64,
}

/// Stream id for one frame; SF, point and frame index occupy disjoint bits.
pub fn frame_stream(sf: SpreadingFactor, point: usize, frame: u64) -> u64 {
    debug_assert!(point < 1 << 24 && frame < 1 << 32);
    (u64::from(sf.sf()) << 56) | ((point as u64) << 32) | frame
}

pub fn frame_rng(seed: u64, sf: SpreadingFactor, point: usize, frame: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(frame_stream(sf, point, frame));
    rng
}

/// Link configuration for one spreading factor of a sweep.
pub fn link_config(cfg: &SimConfig, sf: SpreadingFactor) -> Result<LinkConfig, ConfigError> {
    let core = |e: iqcss_core::Error| ConfigError::Invalid(e.to_string());
    let frame = FrameConfig::new(sf)
        .with_cp(cfg.effective_cp_len())
        .and_then(|f| f.with_payload(cfg.payload_symbols))
        .map_err(core)?;
    let profile = if cfg.channel.is_selective() {
        Some(cfg.load_profile()?)
    } else {
        None
    };
    let link = LinkConfig {
        scheme: cfg.scheme,
        channel: cfg.channel,
        frame,
        modulation: ModConfig::unit_power(sf),
        sample_rate_hz: cfg.bandwidth_hz,
        doppler: DopplerSpec::new(cfg.speed_kmh, cfg.carrier_hz).map_err(core)?,
        profile,
        truncate_estimate: cfg.truncate_estimate,
    };
    link.validate().map_err(core)?;
    Ok(link)
}

fn noise_for(cfg: &SimConfig, link: &LinkConfig, db: f64) -> Result<NoiseSpec, ConfigError> {
    let sf = link.frame.sf;
    let es = link.modulation.symbol_energy_es;
    match cfg.axis {
        AxisKind::Ebn0 => ebn0_to_sigma2(db, sf, cfg.scheme.modulation(), es),
        AxisKind::Snr => snr_to_sigma2(db, sf, es),
    }
    .map_err(|e| ConfigError::Invalid(e.to_string()))
}

/// Per-sample SNR in dB for a point on the configured axis.
pub fn point_snr_db(cfg: &SimConfig, sf: SpreadingFactor, db: f64) -> f64 {
    match cfg.axis {
        AxisKind::Snr => db,
        AxisKind::Ebn0 => ebn0_to_snr_db(db, sf, cfg.scheme.modulation()),
    }
}

/// Shannon capacity `B·log2(1 + SNR)` of the occupied bandwidth.
pub fn shannon_bps(bandwidth_hz: f64, snr_db: f64) -> f64 {
    bandwidth_hz * (1.0 + 10f64.powf(snr_db / 10.0)).log2()
}

/// Goodput `(1 − SER)·bits_per_chirp·B/N`.
pub fn throughput_bps(scheme: Scheme, sf: SpreadingFactor, bandwidth_hz: f64, ser: f64) -> f64 {
    let bits = scheme.modulation().bits_per_chirp(sf) as f64;
    (1.0 - ser) * bits * bandwidth_hz / sf.n() as f64
}

fn run_point(cfg: &SimConfig, sim: &LinkSimulator, point: usize, db: f64) -> Result<SimRecord, ConfigError> {
    let started = Instant::now();
    let link = sim.config();
    let sf = link.frame.sf;
    let noise = noise_for(cfg, link, db)?;

    let mut total = FrameTally::default();
    let mut frames = 0u64;
    'rounds: while frames < cfg.max_frames {
        let round_end = (frames + BATCH_FRAMES * BATCHES_PER_ROUND).min(cfg.max_frames);
        let tallies: Vec<FrameTally> = (frames..round_end)
            .into_par_iter()
            .map_init(
                || sim.clone(),
                |sim, frame| {
                    let mut rng = frame_rng(cfg.seed, sf, point, frame);
                    sim.run_frame(noise, &mut rng)
                },
            )
            .collect();
        for batch in tallies.chunks(BATCH_FRAMES as usize) {
            total += batch.iter().copied().sum();
            frames += batch.len() as u64;
            if total.bit_errors >= cfg.min_bit_errors {
                break 'rounds;
            }
        }
    }

    let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let ser = ratio(total.symbol_errors, total.symbols);
    Ok(SimRecord {
        scheme: cfg.scheme,
        sf,
        axis: cfg.axis,
        axis_db: db,
        bits_sent: total.bits,
        bit_errors: total.bit_errors,
        ber: ratio(total.bit_errors, total.bits),
        symbols: total.symbols,
        symbol_errors: total.symbol_errors,
        ser,
        throughput_bps: throughput_bps(cfg.scheme, sf, cfg.bandwidth_hz, ser),
        shannon_bps: shannon_bps(cfg.bandwidth_hz, point_snr_db(cfg, sf, db)),
        frames,
        ill_conditioned_frames: total.ill_conditioned,
        censored: total.bit_errors < cfg.min_bit_errors,
        seed: cfg.seed,
        elapsed_s: started.elapsed().as_secs_f64(),
    })
}

/// Runs the full sweep: every SF in order, every axis point in order.
pub fn run_ber(cfg: &SimConfig) -> Result<Vec<SimRecord>, ConfigError> {
    cfg.validate()?;
    let mut out = Vec::with_capacity(cfg.sf_list.len() * cfg.points_db.len());
    for &sf in &cfg.sf_list {
        let sim = LinkSimulator::new(link_config(cfg, sf)?).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        for (point, &db) in cfg.points_db.iter().enumerate() {
            out.push(run_point(cfg, &sim, point, db)?);
        }
    }
    Ok(out)
}

/// Throughput sweep; identical to [`run_ber`] but on the SNR axis, which is
/// the axis the capacity comparison is meaningful on.
pub fn run_throughput(cfg: &SimConfig) -> Result<Vec<SimRecord>, ConfigError> {
    if cfg.axis != AxisKind::Snr {
        return Err(ConfigError::Invalid("throughput sweeps use the snr axis".into()));
    }
    run_ber(cfg)
}

/// Linear interpolation of `log10(BER)` against the axis, returning the axis
/// value where the curve first crosses `target`. Zero-BER points are skipped.
pub fn crossing_db(records: &[SimRecord], target: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.ber > 0.0 && r.axis_db.is_finite())
        .map(|r| (r.axis_db, r.ber.log10()))
        .collect();
    let t = target.log10();
    pts.windows(2).find_map(|w| {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        (y0 >= t && y1 <= t && y0 != y1).then(|| x0 + (t - y0) * (x1 - x0) / (y1 - y0))
    })
}

/// Axis value in Eb/N0 dB regardless of the sweep axis.
pub fn record_ebn0_db(r: &SimRecord) -> f64 {
    match r.axis {
        AxisKind::Ebn0 => r.axis_db,
        AxisKind::Snr => snr_to_ebn0_db(r.axis_db, r.sf, r.scheme.modulation()),
    }
}
