use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use iqcss_core::chanest::{equalize_fd, equalize_flat, ls_flat, ls_selective};
use iqcss_core::channel::{apply_awgn, ebn0_to_sigma2, ChannelRealization};
use iqcss_core::framing::{average_sync, build_frame, extract_regions, FrameConfig, Payload};
use iqcss_core::link::{ChannelMode, LinkConfig, LinkSimulator, Scheme};
use iqcss_core::modem::{iqcss_demodulate, Modulation};
use iqcss_core::{Complex64, IqSignal, IqSymbolPair, ModConfig, SpreadingFactor};

fn random_pairs(rng: &mut ChaCha8Rng, sf: SpreadingFactor, count: usize) -> Vec<IqSymbolPair> {
    let n = sf.n() as u32;
    (0..count)
        .map(|_| IqSymbolPair::new(rng.random_range(0..n), rng.random_range(0..n), sf).unwrap())
        .collect()
}

#[test]
fn flat_channel_frame_through_public_api() {
    let sf = SpreadingFactor::new(8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let pairs = random_pairs(&mut rng, sf, 20);
    let cfg = FrameConfig::new(sf);
    let modulation = ModConfig::unit_power(sf);
    let frame = build_frame(&cfg, Payload::Iqcss(&pairs), &modulation).unwrap();

    let h = Complex64::from_polar(0.7, 2.1);
    let faded = IqSignal::new(frame.signal.samples().iter().map(|x| h * x).collect()).unwrap();
    let noise = ebn0_to_sigma2(15.0, sf, Modulation::Iqcss, modulation.symbol_energy_es).unwrap();
    let rx = apply_awgn(&faded, noise, &mut rng);

    let regions = extract_regions(&rx, &cfg).unwrap();
    let preamble: Vec<Complex64> = regions.sync_up.iter().flat_map(|s| s.samples().to_vec()).collect();
    let reference = IqSignal::new(iqcss_core::chirp::raw_upchirp(sf).samples().repeat(cfg.n_sync_up)).unwrap();
    let est = ls_flat(&IqSignal::new(preamble).unwrap(), &reference).unwrap();
    assert!((est.h_hat - h).norm() < 0.05, "{:?}", est.h_hat);

    for (chirp, sent) in regions.data.iter().zip(&pairs) {
        let eq = equalize_flat(chirp, &est).unwrap();
        assert_eq!(iqcss_demodulate(&eq, sf).unwrap(), *sent);
    }
}

#[test]
fn static_multipath_frame_with_prefix() {
    let sf = SpreadingFactor::new(7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let pairs = random_pairs(&mut rng, sf, 20);
    let cfg = FrameConfig::new(sf).with_cp(8).unwrap();
    let frame = build_frame(&cfg, Payload::Iqcss(&pairs), &ModConfig::unit_power(sf)).unwrap();

    let channel = ChannelRealization::static_taps(&[
        (0, Complex64::new(0.8, 0.1)),
        (3, Complex64::new(-0.3, 0.4)),
        (7, Complex64::new(0.0, -0.2)),
    ]);
    let rx = channel.apply(&frame.signal);
    let regions = extract_regions(&rx, &cfg).unwrap();
    let est = ls_selective(&average_sync(&regions.sync_up, &cfg).unwrap(), sf)
        .unwrap()
        .truncated(cfg.cp_len + 1);
    assert!((est.h_hat[3] - Complex64::new(-0.3, 0.4)).norm() < 1e-9);

    for (chirp, sent) in regions.data.iter().zip(&pairs) {
        let eq = equalize_fd(chirp, &est).unwrap();
        assert!(!eq.ill_conditioned);
        assert_eq!(iqcss_demodulate(&eq.signal, sf).unwrap(), *sent);
    }
}

#[test]
fn simulator_counts_payload_bits_only() {
    let sf = SpreadingFactor::new(6).unwrap();
    for scheme in Scheme::ALL {
        let cfg = LinkConfig {
            scheme,
            channel: ChannelMode::Awgn,
            frame: FrameConfig::new(sf).with_payload(10).unwrap(),
            modulation: ModConfig::unit_power(sf),
            sample_rate_hz: iqcss_core::DEFAULT_BANDWIDTH_HZ,
            doppler: iqcss_core::channel::DopplerSpec::stationary(863e6).unwrap(),
            profile: None,
            truncate_estimate: true,
        };
        let mut sim = LinkSimulator::new(cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let tally = sim.run_frame(iqcss_core::channel::NoiseSpec::noiseless(), &mut rng);
        let per_chirp = scheme.modulation().bits_per_chirp(sf) as u64;
        assert_eq!(tally.bits, 10 * per_chirp);
        assert_eq!(tally.bit_errors, 0);
    }
}
