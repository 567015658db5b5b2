//! Brightness-modulation modem for screen-to-camera links, together with a
//! simulator of the optical path between them.
//!
//! The transmitter scales one colour component of carrier frames by a few
//! percent per symbol ([`encode_stream`]). The channel ([`transmit`]) applies
//! inverse-square attenuation, a projective warp, sensor noise and
//! quantisation. The receiver ([`decode`]) rectifies, averages, locks onto
//! the preamble and thresholds. [`analysis`] holds the error-rate model and
//! the distance sweep.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar.

// `!(a > b)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod carrier;
pub mod channel;
pub mod decoder;
pub mod encoder;
pub mod error;
pub mod frame;
pub mod homography;
pub mod modulation;
pub mod num;
#[cfg(any(test, feature = "oracles"))]
pub mod oracles;

pub use analysis::{
    distance_sweep, fit_log_log_slope, monte_carlo_ber, q_function, theoretical_ber, BerModel, MonteCarloEstimate,
    SweepConfig, SweepMeasurement, SweepResult, SweepRow,
};
pub use carrier::CarrierKind;
pub use channel::{geometric_gain, relative_gain, transmit, ChannelGeometry, ChannelParams};
pub use decoder::{decode, decode_series, extract_signal, DecodeReport, DecoderConfig, SyncResult};
pub use encoder::{encode_stream, frame_payload};
pub use error::{Error, Result};
pub use frame::{ColorChannel, FrameBuffer, Region};
pub use homography::Homography;
pub use modulation::{bits_to_symbols, symbols_to_bits, Bitstream, ModulationParams, SymbolSeries};
pub use num::Real;

pub type ModulationParamsF64 = ModulationParams<f64>;
pub type ModulationParamsF32 = ModulationParams<f32>;
pub type SymbolSeriesF64 = SymbolSeries<f64>;
pub type SymbolSeriesF32 = SymbolSeries<f32>;
pub type HomographyF64 = Homography<f64>;
pub type HomographyF32 = Homography<f32>;
pub type ChannelGeometryF64 = ChannelGeometry<f64>;
pub type ChannelGeometryF32 = ChannelGeometry<f32>;
pub type ChannelParamsF64 = ChannelParams<f64>;
pub type ChannelParamsF32 = ChannelParams<f32>;
pub type DecoderConfigF64 = DecoderConfig<f64>;
pub type DecoderConfigF32 = DecoderConfig<f32>;
pub type DecodeReportF64 = DecodeReport<f64>;
pub type DecodeReportF32 = DecodeReport<f32>;
pub type BerModelF64 = BerModel<f64>;
pub type BerModelF32 = BerModel<f32>;
pub type SweepConfigF64 = SweepConfig<f64>;
pub type SweepResultF64 = SweepResult<f64>;
