use thiserror::Error;

/// Errors raised by the modem and channel primitives.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("spreading factor {0} outside 6..=12")]
    InvalidSpreadingFactor(u8),
    #[error("expected {expected} samples, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("symbol {symbol} out of range for {n} chirp samples")]
    SymbolOutOfRange { symbol: u32, n: usize },
    #[error("expected {expected} bits, got {actual}")]
    BitCount { expected: usize, actual: usize },
    #[error("bit value {0} is not 0 or 1")]
    InvalidBit(u8),
    #[error("signal must contain at least one sample")]
    EmptySignal,
    #[error("non-finite sample at index {0}")]
    NonFiniteSample(usize),
    #[error("time {t} s outside chirp support [-{half}, {half}] s")]
    OutsideSupport { t: f64, half: f64 },
    #[error("expected {expected} signals, got {actual}")]
    CountMismatch { expected: usize, actual: usize },
    #[error("reference signal has zero energy")]
    ZeroReferenceEnergy,
    #[error("channel estimate is zero")]
    ZeroChannelEstimate,
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
