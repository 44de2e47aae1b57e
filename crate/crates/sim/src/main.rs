use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use iqcss_core::modem::Modulation;
use iqcss_core::SpreadingFactor;
use iqcss_sim::config::{ConfigError, SimConfig};
use iqcss_sim::plot::{render_svg, PlotKind};
use iqcss_sim::{csv, harness, inspect, loopback};

#[derive(Parser)]
#[command(name = "iqcss-sim", version, about = "LoRa / IQCSS link-level simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// BER/SER sweep over Eb/N0 or SNR.
    Ber(SweepArgs),
    /// Throughput sweep over SNR, with Shannon capacity alongside.
    Throughput(SweepArgs),
    /// Noiseless modulate/demodulate self-test.
    Loopback(LoopbackArgs),
    /// Dump one chirp's waveform and despread spectrum as CSV.
    Chirp(ChirpArgs),
}

/// Flags mirror the config-file keys and override them.
#[derive(Args)]
struct SweepArgs {
    /// `key = value` config file applied before the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// lora-noncoherent, lora-coherent or iqcss.
    #[arg(long)]
    scheme: Option<String>,
    /// Comma-separated spreading factors, e.g. `7,8`.
    #[arg(long)]
    sf: Option<String>,
    /// awgn, rayleigh-perfect, rayleigh-static-est, rayleigh-mobile-est,
    /// tvfs-perfect or tvfs-est.
    #[arg(long)]
    channel: Option<String>,
    /// Eb/N0 points in dB: `start:step:stop` or a comma list.
    #[arg(long, conflicts_with = "snr", allow_hyphen_values = true)]
    ebn0: Option<String>,
    /// SNR points in dB: `start:step:stop` or a comma list.
    #[arg(long, allow_hyphen_values = true)]
    snr: Option<String>,
    #[arg(long)]
    max_frames: Option<String>,
    #[arg(long)]
    min_bit_errors: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    bandwidth_hz: Option<String>,
    #[arg(long)]
    carrier_hz: Option<String>,
    #[arg(long)]
    speed_kmh: Option<String>,
    #[arg(long)]
    cp_len: Option<String>,
    #[arg(long)]
    payload_symbols: Option<String>,
    #[arg(long)]
    truncate_estimate: Option<String>,
    /// Tap profile file (`delay_us power_db` per line); TU-12 by default.
    #[arg(long)]
    profile: Option<String>,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// SVG plot destination.
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct LoopbackArgs {
    /// Every scheme at every spreading factor.
    #[arg(long)]
    all: bool,
    #[arg(long, default_value_t = 7)]
    sf: u8,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct ChirpArgs {
    #[arg(long, default_value_t = 7)]
    sf: u8,
    /// LoRa symbol, or the in-phase symbol with `--iqcss`.
    #[arg(long, default_value_t = 100)]
    k: u32,
    /// Quadrature symbol with `--iqcss`.
    #[arg(long, default_value_t = 0)]
    k_q: u32,
    #[arg(long)]
    iqcss: bool,
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    snr: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Io(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Read { .. } => Failure::Io(e.to_string()),
            other => Failure::Config(other.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl Fn(io::Error) -> Failure + '_ {
    move |e| Failure::Io(format!("{}: {e}", path.display()))
}

impl SweepArgs {
    fn build(&self) -> Result<SimConfig, ConfigError> {
        let mut cfg = match &self.config {
            Some(path) => SimConfig::from_file(path)?,
            None => SimConfig::default(),
        };
        let flags = [
            ("scheme", &self.scheme),
            ("sf", &self.sf),
            ("channel", &self.channel),
            ("ebn0", &self.ebn0),
            ("snr", &self.snr),
            ("max_frames", &self.max_frames),
            ("min_bit_errors", &self.min_bit_errors),
            ("seed", &self.seed),
            ("bandwidth_hz", &self.bandwidth_hz),
            ("carrier_hz", &self.carrier_hz),
            ("speed_kmh", &self.speed_kmh),
            ("cp_len", &self.cp_len),
            ("payload_symbols", &self.payload_symbols),
            ("truncate_estimate", &self.truncate_estimate),
            ("profile", &self.profile),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write_to(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), Failure> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(io_err(p))?;
            let mut w = BufWriter::new(file);
            f(&mut w).map_err(io_err(p))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock).map_err(|e| Failure::Io(format!("stdout: {e}")))
        }
    }
}

fn sweep(args: &SweepArgs, kind: PlotKind) -> Result<(), Failure> {
    let mut cfg = args.build()?;
    if kind == PlotKind::Throughput && args.ebn0.is_none() && args.snr.is_none() && args.config.is_none() {
        // the default axis is Eb/N0; throughput defaults to the usual SNR range
        cfg.set("snr", "-20:1:0")?;
    }
    let run = || match kind {
        PlotKind::Ber => harness::run_ber(&cfg),
        PlotKind::Throughput => harness::run_throughput(&cfg),
    };
    let records = match args.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Failure::Config(e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    for r in records.iter().filter(|r| r.censored) {
        eprintln!(
            "note: {} SF{} at {} dB stopped at {} frames with {} bit errors (censored)",
            r.scheme,
            r.sf.sf(),
            r.axis_db,
            r.frames,
            r.bit_errors
        );
    }
    write_to(args.out.as_deref(), |w| csv::write_records(w, &records))?;
    if let Some(plot) = &args.plot {
        std::fs::write(plot, render_svg(&records, kind)).map_err(io_err(plot))?;
    }
    Ok(())
}

fn run_loopback(args: &LoopbackArgs) -> Result<bool, Failure> {
    let results = if args.all {
        loopback::loopback_all(args.seed)
    } else {
        let sf = SpreadingFactor::new(args.sf).map_err(|e| Failure::Config(e.to_string()))?;
        iqcss_core::link::Scheme::ALL
            .into_iter()
            .map(|s| loopback::loopback(s, sf, args.seed))
            .collect()
    };
    for r in &results {
        println!("{r}");
    }
    Ok(results.iter().all(|r| r.passed()))
}

fn run_chirp(args: &ChirpArgs) -> Result<(), Failure> {
    let config = |e: iqcss_core::Error| Failure::Config(e.to_string());
    let sf = SpreadingFactor::new(args.sf).map_err(config)?;
    let modulation = if args.iqcss { Modulation::Iqcss } else { Modulation::Lora };
    let dump = inspect::chirp_dump(modulation, sf, args.k, args.k_q, args.snr, args.seed).map_err(config)?;
    eprintln!("peak bin {}", dump.peak);
    write_to(args.out.as_deref(), |w| dump.write_csv(w))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Ber(a) => sweep(a, PlotKind::Ber).map(|()| true),
        Command::Throughput(a) => sweep(a, PlotKind::Throughput).map(|()| true),
        Command::Loopback(a) => run_loopback(a),
        Command::Chirp(a) => run_chirp(a).map(|()| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
