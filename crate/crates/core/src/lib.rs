//! Chirp spread spectrum modem and link-level building blocks.
//!
//! This crate implements the conventional LoRa physical layer (chirp-spread
//! FSK with non-coherent detection) together with its coherent
//! in-phase/quadrature extension (IQCSS), where two independent symbols ride
//! on the real and imaginary components of the same chirp. Around the modem it
//! provides frame construction, fading channel models, least-squares channel
//! estimation from the synchronization preamble and equalization.
//!
//! The crate is `no_std` and only needs `alloc`. Randomness is always supplied
//! by the caller through [`rand::Rng`], so every realization is reproducible
//! from the caller's seed.
//!
//! # Modules
//!
//! - [`chirp`]: chirp waveforms, despreading, spreading gain.
//! - [`fft`]: radix-2 FFT and the DFT conventions used throughout.
//! - [`modem`]: bit/symbol mapping, LoRa and IQCSS modulation and detection.
//! - [`framing`]: preamble + payload frames with optional cyclic prefixes.
//! - [`channel`]: AWGN, Jakes-correlated Rayleigh and tapped-delay-line channels.
//! - [`chanest`]: LS channel estimation and zero-forcing equalization.
//! - [`link`]: one frame through transmitter, channel and receiver.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod chanest;
pub mod channel;
pub mod chirp;
mod error;
pub mod fft;
pub mod framing;
pub mod link;
pub mod modem;

pub use num_complex::Complex64;

pub use crate::error::{Error, Result};
pub use crate::chirp::{IqSignal, SpreadingFactor, Spectrum};
pub use crate::modem::{IqSymbolPair, LoraSymbol, ModConfig};

/// Default occupied bandwidth (and sample rate), in Hz.
pub const DEFAULT_BANDWIDTH_HZ: f64 = 250e3;
