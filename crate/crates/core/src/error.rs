use thiserror::Error;

/// Errors produced by the modem, channel and analysis code.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid modulation parameters: {0}")]
    InvalidModulation(String),

    #[error("invalid channel parameters: {0}")]
    InvalidChannel(String),

    #[error("invalid frame: {0}")]
    InvalidFrame(String),

    #[error("symbol index {index} out of range for M={m}")]
    SymbolOutOfRange { index: u32, m: u32 },

    #[error("level {level} outside the allowed range [1, {max}]")]
    LevelOutOfRange { level: f64, max: f64 },

    #[error("carrier too short: {frames_needed} frames needed, {available} available")]
    CarrierTooShort { frames_needed: usize, available: usize },

    #[error("payload too long: {0} bits does not fit the 32-bit length field")]
    PayloadTooLong(usize),

    #[error("homography is singular")]
    SingularHomography,

    #[error(
        "sampling guard violated: camera at {camera_fps} fps needs at least twice the symbol rate ({symbol_rate} symbols/s)"
    )]
    SamplingGuard { camera_fps: f64, symbol_rate: f64 },

    #[error("empty frame sequence")]
    NoFrames,

    #[error("region is empty or outside the rectified frame")]
    EmptyRegion,

    #[error("synchronization failed: peak preamble correlation {peak:.3} below {threshold}")]
    SyncFailure { peak: f64, threshold: f64 },

    #[error("degenerate levels: mu1={mu1} is not above mu0={mu0}")]
    DegenerateLevels { mu0: f64, mu1: f64 },

    #[error("frame header too short: {available} bits, at least {required} required")]
    HeaderTooShort { available: usize, required: usize },

    #[error("frame truncated: header declares {declared} payload bits but only {available} bits follow")]
    TruncatedFrame { declared: usize, available: usize },

    #[error("invalid analysis input: {0}")]
    InvalidAnalysis(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
