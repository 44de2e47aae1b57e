//! Tap profile files: one `delay_us  power_db` pair per line, `#` comments.

use std::path::Path;

use iqcss_core::channel::TapProfile;

/// Bundled COST 207 TU-12 table.
pub const TU12_PROFILE: &str = include_str!("../data/tu12.profile");

#[derive(Debug, thiserror::Error)]
pub enum ProfileError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("invalid profile: {0}")]
    Invalid(#[from] iqcss_core::Error),
    #[error("cannot read profile: {0}")]
    Io(#[from] std::io::Error),
}

pub fn parse(text: &str) -> Result<TapProfile, ProfileError> {
    let mut entries = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let syntax = |msg: String| ProfileError::Syntax { line: idx + 1, msg };
        let [delay, power] = fields[..] else {
            return Err(syntax(format!("expected `delay_us power_db`, got `{line}`")));
        };
        let delay: f64 = delay.parse().map_err(|e| syntax(format!("delay `{delay}`: {e}")))?;
        let power: f64 = power.parse().map_err(|e| syntax(format!("power `{power}`: {e}")))?;
        entries.push((delay, power));
    }
    Ok(TapProfile::from_db(&entries)?)
}

pub fn read(path: &Path) -> Result<TapProfile, ProfileError> {
    parse(&std::fs::read_to_string(path)?)
}

pub fn tu12() -> TapProfile {
    parse(TU12_PROFILE).expect("bundled profile is valid")
}
