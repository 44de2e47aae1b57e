//! Simulation harness around `iqcss-core`: sweep configuration, tap-profile
//! files, the parallel Monte Carlo engine, CSV/SVG output and self-tests.
//!
//! ```no_run
//! use iqcss_sim::config::SimConfig;
//!
//! let mut cfg = SimConfig::default();
//! cfg.apply_text("scheme = iqcss\nsf = 7\nebn0 = 0:1:12\nseed = 42").unwrap();
//! let records = iqcss_sim::harness::run_ber(&cfg).unwrap();
//! print!("{}", iqcss_sim::csv::to_string(&records));
//! ```

pub mod config;
pub mod csv;
pub mod harness;
pub mod inspect;
pub mod loopback;
pub mod plot;
pub mod profile;

pub use config::{AxisKind, ConfigError, SimConfig};
pub use harness::{run_ber, run_throughput, SimRecord};
