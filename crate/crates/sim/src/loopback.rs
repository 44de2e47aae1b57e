//! Noiseless modulate→demodulate self-test.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use iqcss_core::modem::{Demodulator, Modulator};
use iqcss_core::link::Scheme;
use iqcss_core::{Complex64, IqSymbolPair, SpreadingFactor};

/// Random IQ pairs checked per spreading factor.
pub const RANDOM_PAIRS: usize = 10_000;
/// Above this SF, LoRa symbols are sampled instead of enumerated.
pub const EXHAUSTIVE_MAX_SF: u8 = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoopbackResult {
    pub scheme: Scheme,
    pub sf: SpreadingFactor,
    pub checked: usize,
    pub failures: usize,
}

impl LoopbackResult {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

impl std::fmt::Display for LoopbackResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed() { "PASS" } else { "FAIL" };
        write!(
            f,
            "{tag} {} {}: {} symbols, {} errors",
            self.scheme, self.sf, self.checked, self.failures
        )
    }
}

fn lora_symbols(sf: SpreadingFactor, rng: &mut ChaCha8Rng) -> Vec<u32> {
    let n = sf.n() as u32;
    if sf.sf() <= EXHAUSTIVE_MAX_SF {
        (0..n).collect()
    } else {
        (0..RANDOM_PAIRS).map(|_| rng.random_range(0..n)).collect()
    }
}

/// Runs one scheme at one SF; `seed` picks the random symbols.
pub fn loopback(scheme: Scheme, sf: SpreadingFactor, seed: u64) -> LoopbackResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ u64::from(sf.sf()));
    let modulator = Modulator::new(sf);
    let mut demod = Demodulator::new(sf);
    let es = sf.n() as f64;
    let mut buf = vec![Complex64::new(0.0, 0.0); sf.n()];
    let (mut checked, mut failures) = (0, 0);
    match scheme {
        Scheme::LoraNoncoherent | Scheme::LoraCoherent => {
            for k in lora_symbols(sf, &mut rng) {
                modulator.lora_into(es, k, &mut buf);
                let got = if scheme == Scheme::LoraCoherent {
                    demod.coherent(&buf)
                } else {
                    demod.noncoherent(&buf)
                };
                checked += 1;
                failures += usize::from(got != k);
            }
        }
        Scheme::Iqcss => {
            let n = sf.n() as u32;
            for _ in 0..RANDOM_PAIRS {
                let pair = IqSymbolPair {
                    k_i: rng.random_range(0..n),
                    k_q: rng.random_range(0..n),
                };
                modulator.iqcss_into(es, pair, &mut buf);
                checked += 1;
                failures += usize::from(demod.iqcss(&buf) != pair);
            }
        }
    }
    LoopbackResult {
        scheme,
        sf,
        checked,
        failures,
    }
}

/// Every scheme at every spreading factor.
pub fn loopback_all(seed: u64) -> Vec<LoopbackResult> {
    SpreadingFactor::all()
        .flat_map(|sf| Scheme::ALL.into_iter().map(move |scheme| loopback(scheme, sf, seed)))
        .collect()
}
