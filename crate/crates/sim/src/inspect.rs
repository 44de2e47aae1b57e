//! Single-chirp waveform dump: transmitted samples, noisy received samples
//! and the despread spectrum, for eyeballing a detection.

use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use iqcss_core::channel::{apply_awgn, snr_to_sigma2};
use iqcss_core::chirp::despread;
use iqcss_core::fft::dft;
use iqcss_core::modem::{argmax_by, iqcss_modulate, lora_modulate, Modulation};
use iqcss_core::{IqSignal, IqSymbolPair, LoraSymbol, ModConfig, Result, Spectrum, SpreadingFactor};

#[derive(Debug, Clone)]
pub struct ChirpDump {
    pub tx: IqSignal,
    pub rx: IqSignal,
    pub bins: Spectrum,
    /// Bin with the largest magnitude.
    pub peak: usize,
}

/// Modulates symbol `k` (LoRa) or the pair `(k, k_q)` (IQCSS), adds noise at
/// `snr_db` and despreads.
pub fn chirp_dump(
    modulation: Modulation,
    sf: SpreadingFactor,
    k: u32,
    k_q: u32,
    snr_db: f64,
    seed: u64,
) -> Result<ChirpDump> {
    let cfg = ModConfig::unit_power(sf);
    let tx = match modulation {
        Modulation::Lora => lora_modulate(&cfg, LoraSymbol::new(k, sf)?)?,
        Modulation::Iqcss => iqcss_modulate(&cfg, IqSymbolPair::new(k, k_q, sf)?)?,
    };
    let noise = snr_to_sigma2(snr_db, sf, cfg.symbol_energy_es)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rx = apply_awgn(&tx, noise, &mut rng);
    let bins = dft(&despread(&rx, sf)?);
    let peak = argmax_by(bins.bins(), |c| c.norm());
    Ok(ChirpDump { tx, rx, bins, peak })
}

impl ChirpDump {
    /// Columns `n,tx_re,tx_im,rx_re,rx_im,bin_re,bin_im,bin_mag`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "n,tx_re,tx_im,rx_re,rx_im,bin_re,bin_im,bin_mag")?;
        let rows = self.tx.samples().iter().zip(self.rx.samples()).zip(self.bins.bins());
        for (n, ((t, r), b)) in rows.enumerate() {
            writeln!(
                w,
                "{n},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
                t.re,
                t.im,
                r.re,
                r.im,
                b.re,
                b.im,
                b.norm()
            )?;
        }
        w.flush()
    }
}
