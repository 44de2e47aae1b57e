//! Simulation configuration: flat `key = value` files and matching CLI flags.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use iqcss_core::channel::TapProfile;
use iqcss_core::link::{ChannelMode, Scheme};
use iqcss_core::SpreadingFactor;

use crate::profile;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`: {msg}")]
    Value { key: String, value: String, msg: String },
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Which quantity the sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisKind {
    /// Energy per bit over noise density.
    Ebn0,
    /// Per-sample signal-to-noise ratio `Es/(N·σ²)`.
    Snr,
}

impl AxisKind {
    pub fn name(self) -> &'static str {
        match self {
            AxisKind::Ebn0 => "ebn0",
            AxisKind::Snr => "snr",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub scheme: Scheme,
    pub sf_list: Vec<SpreadingFactor>,
    pub channel: ChannelMode,
    pub axis: AxisKind,
    /// Sweep points in dB; `+inf` means noiseless.
    pub points_db: Vec<f64>,
    pub max_frames: u64,
    pub min_bit_errors: u64,
    pub seed: u64,
    pub bandwidth_hz: f64,
    pub carrier_hz: f64,
    pub speed_kmh: f64,
    /// `None` picks 16 for multipath channels and 0 otherwise.
    pub cp_len: Option<usize>,
    pub payload_symbols: usize,
    pub truncate_estimate: bool,
    /// Tap profile file; the bundled TU-12 table when unset.
    pub profile: Option<PathBuf>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Iqcss,
            sf_list: vec![SpreadingFactor::new(6).unwrap(), SpreadingFactor::new(7).unwrap()],
            channel: ChannelMode::Awgn,
            axis: AxisKind::Ebn0,
            points_db: parse_points("0:1:12").unwrap(),
            max_frames: 10_000,
            min_bit_errors: 100,
            seed: 1,
            bandwidth_hz: iqcss_core::DEFAULT_BANDWIDTH_HZ,
            carrier_hz: 863e6,
            speed_kmh: 0.1,
            cp_len: None,
            payload_symbols: 20,
            truncate_estimate: true,
            profile: None,
        }
    }
}

/// Parses `start:step:stop` (inclusive) or a comma list; `inf` is allowed in
/// lists.
pub fn parse_points(s: &str) -> Result<Vec<f64>, String> {
    let s = s.trim();
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [start, step, stop] = parts[..] else {
            return Err("range must be start:step:stop".into());
        };
        let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
        let (start, step, stop) = (num(start)?, num(step)?, num(stop)?);
        if !(start.is_finite() && step.is_finite() && stop.is_finite()) {
            return Err("range bounds must be finite".into());
        }
        if step <= 0.0 {
            return Err("step must be positive".into());
        }
        if stop < start {
            return Err("stop must not be below start".into());
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        if count > 100_000 {
            return Err("too many points".into());
        }
        // rounding to 1e-9 keeps 0.1-style steps printable
        Ok((0..count)
            .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
            .collect())
    } else {
        let pts = s
            .split(',')
            .map(|v| match v.trim() {
                "inf" | "+inf" => Ok(f64::INFINITY),
                t => t
                    .parse::<f64>()
                    .map_err(|e| format!("`{t}`: {e}"))
                    .and_then(|x| if x.is_finite() { Ok(x) } else { Err(format!("`{t}` is not finite")) }),
            })
            .collect::<Result<Vec<_>, _>>()?;
        if pts.is_empty() {
            return Err("empty point list".into());
        }
        Ok(pts)
    }
}

fn parse_sf_list(s: &str) -> Result<Vec<SpreadingFactor>, String> {
    s.split(',')
        .map(|v| {
            let v = v.trim();
            let raw: u8 = v.parse().map_err(|e| format!("`{v}`: {e}"))?;
            SpreadingFactor::new(raw).map_err(|e| e.to_string())
        })
        .collect()
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s.trim() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        other => Err(format!("`{other}` is not a boolean")),
    }
}

fn parse_num<T: std::str::FromStr>(s: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    s.trim().parse::<T>().map_err(|e| e.to_string())
}

impl SimConfig {
    /// Keys accepted by [`SimConfig::set`]; CLI flags use the same names.
    pub const KEYS: &'static [&'static str] = &[
        "scheme",
        "sf",
        "sf_list",
        "channel",
        "axis",
        "ebn0",
        "snr",
        "max_frames",
        "min_bit_errors",
        "seed",
        "bandwidth_hz",
        "carrier_hz",
        "speed_kmh",
        "cp_len",
        "payload_symbols",
        "truncate_estimate",
        "profile",
    ];

    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = |msg: String| ConfigError::Value {
            key: key.to_string(),
            value: value.to_string(),
            msg,
        };
        let v = value.trim();
        match key {
            "scheme" => self.scheme = v.parse().map_err(|e: iqcss_core::Error| bad(e.to_string()))?,
            "sf" | "sf_list" => self.sf_list = parse_sf_list(v).map_err(bad)?,
            "channel" => self.channel = v.parse().map_err(|e: iqcss_core::Error| bad(e.to_string()))?,
            "axis" => {
                self.axis = match v {
                    "ebn0" => AxisKind::Ebn0,
                    "snr" => AxisKind::Snr,
                    _ => return Err(bad("expected ebn0 or snr".into())),
                }
            }
            "ebn0" => {
                self.axis = AxisKind::Ebn0;
                self.points_db = parse_points(v).map_err(bad)?;
            }
            "snr" => {
                self.axis = AxisKind::Snr;
                self.points_db = parse_points(v).map_err(bad)?;
            }
            "max_frames" => self.max_frames = parse_num(v).map_err(bad)?,
            "min_bit_errors" => self.min_bit_errors = parse_num(v).map_err(bad)?,
            "seed" => self.seed = parse_num(v).map_err(bad)?,
            "bandwidth_hz" => self.bandwidth_hz = parse_num(v).map_err(bad)?,
            "carrier_hz" => self.carrier_hz = parse_num(v).map_err(bad)?,
            "speed_kmh" => self.speed_kmh = parse_num(v).map_err(bad)?,
            "cp_len" => self.cp_len = Some(parse_num(v).map_err(bad)?),
            "payload_symbols" => self.payload_symbols = parse_num(v).map_err(bad)?,
            "truncate_estimate" => self.truncate_estimate = parse_bool(v).map_err(bad)?,
            "profile" => self.profile = Some(PathBuf::from(v)),
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Applies a `key = value` document on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line: idx + 1,
                    msg: format!("expected `key = value`, got `{line}`"),
                });
            };
            self.set(key.trim(), value).map_err(|e| match e {
                ConfigError::UnknownKey(k) => ConfigError::Syntax {
                    line: idx + 1,
                    msg: format!("unknown key `{k}`"),
                },
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = SimConfig::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn effective_cp_len(&self) -> usize {
        self.cp_len
            .unwrap_or(if self.channel.is_selective() { 16 } else { 0 })
    }

    /// The tap profile for multipath runs.
    pub fn load_profile(&self) -> Result<TapProfile, ConfigError> {
        match &self.profile {
            None => Ok(profile::tu12()),
            Some(path) => profile::read(path).map_err(|e| ConfigError::Invalid(e.to_string())),
        }
    }

    /// Checks every field and combination before any simulation work.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.sf_list.is_empty() {
            return invalid("sf list is empty");
        }
        if self.points_db.is_empty() {
            return invalid("axis has no points");
        }
        if self.points_db.iter().any(|p| p.is_nan() || *p == f64::NEG_INFINITY) {
            return invalid("axis points must be numbers or +inf");
        }
        if self.max_frames == 0 {
            return invalid("max_frames must be positive");
        }
        if self.payload_symbols == 0 {
            return invalid("payload_symbols must be positive");
        }
        if !(self.bandwidth_hz.is_finite() && self.bandwidth_hz > 0.0) {
            return invalid("bandwidth_hz must be positive");
        }
        if !(self.carrier_hz.is_finite() && self.carrier_hz > 0.0) {
            return invalid("carrier_hz must be positive");
        }
        if !(self.speed_kmh.is_finite() && self.speed_kmh >= 0.0) {
            return invalid("speed_kmh must be non-negative");
        }
        let cp = self.effective_cp_len();
        let min_n = self.sf_list.iter().map(|s| s.n()).min().unwrap_or(0);
        if cp >= min_n {
            return invalid("cp_len must be shorter than a chirp");
        }
        if self.channel.is_selective() {
            if cp == 0 {
                return invalid("multipath channels need a cyclic prefix (cp_len > 0)");
            }
            let profile = self.load_profile()?;
            let spread = profile.max_delay_samples(self.bandwidth_hz);
            if spread > cp {
                return Err(ConfigError::Invalid(format!(
                    "cp_len {cp} is shorter than the profile delay spread of {spread} samples"
                )));
            }
        }
        Ok(())
    }

    /// `key = value` rendering that [`SimConfig::apply_text`] reads back.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let sfs: Vec<String> = self.sf_list.iter().map(|s| s.sf().to_string()).collect();
        let pts: Vec<String> = self
            .points_db
            .iter()
            .map(|p| if p.is_infinite() { "inf".into() } else { p.to_string() })
            .collect();
        let _ = writeln!(s, "scheme = {}", self.scheme);
        let _ = writeln!(s, "sf = {}", sfs.join(","));
        let _ = writeln!(s, "channel = {}", self.channel);
        let _ = writeln!(s, "{} = {}", self.axis.name(), pts.join(","));
        let _ = writeln!(s, "max_frames = {}", self.max_frames);
        let _ = writeln!(s, "min_bit_errors = {}", self.min_bit_errors);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "bandwidth_hz = {}", self.bandwidth_hz);
        let _ = writeln!(s, "carrier_hz = {}", self.carrier_hz);
        let _ = writeln!(s, "speed_kmh = {}", self.speed_kmh);
        if let Some(cp) = self.cp_len {
            let _ = writeln!(s, "cp_len = {cp}");
        }
        let _ = writeln!(s, "payload_symbols = {}", self.payload_symbols);
        let _ = writeln!(s, "truncate_estimate = {}", self.truncate_estimate);
        if let Some(p) = &self.profile {
            let _ = writeln!(s, "profile = {}", p.display());
        }
        s
    }
}
