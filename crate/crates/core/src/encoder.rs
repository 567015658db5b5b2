//! Transmit side: framing and per-frame brightness modulation.
//!
//! The encoder is an offline frame transformer. It takes the frames that
//! would have been shown anyway (the carrier) and scales one colour
//! component of every pixel by the level of the symbol being sent.
//!
//! A transmission is `preamble ‖ length ‖ payload ‖ crc32`:
//!
//! * preamble: 16 symbols alternating between the top level and level 0,
//!   i.e. `1010…` for on-off keying. The receiver locks onto it and uses it
//!   to measure the two extreme levels.
//! * length: payload length in bits, 32-bit unsigned, MSB first.
//! * crc32: IEEE CRC-32 of the payload packed MSB-first into bytes.
//!
//! The bit string is grouped into symbols MSB-first with zero padding at
//! the very end.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frame::{FrameBuffer, Region};
use crate::modulation::{bits_to_symbols, Bitstream, ModulationParams};
use crate::num::{to_count, Real};

pub const PREAMBLE_SYMBOLS: usize = 16;
pub const LENGTH_FIELD_BITS: usize = 32;
pub const CRC_FIELD_BITS: usize = 32;

/// Fixed-width fields that wrap a payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FrameHeader {
    pub payload_length_bits: u32,
    pub checksum: u32,
}

impl FrameHeader {
    pub fn for_payload(payload: &Bitstream) -> Result<Self> {
        let payload_length_bits = u32::try_from(payload.len()).map_err(|_| Error::PayloadTooLong(payload.len()))?;
        Ok(FrameHeader { payload_length_bits, checksum: payload_crc(payload) })
    }
}

/// CRC-32 (IEEE, reflected, poly 0x04C11DB7) of the payload bits packed
/// MSB-first with zero padding. The length field disambiguates the padding.
pub fn payload_crc(payload: &Bitstream) -> u32 {
    crc32fast::hash(&payload.to_bytes_msb_first())
}

/// Symbols of the synchronization preamble: `M−1, 0, M−1, 0, …`.
pub fn preamble_symbols(m: u32) -> Vec<u32> {
    (0..PREAMBLE_SYMBOLS).map(|i| if i % 2 == 0 { m - 1 } else { 0 }).collect()
}

/// Preamble expressed as bits (`log2 M` bits per preamble symbol).
pub fn preamble_bits<T: Real>(params: &ModulationParams<T>) -> Bitstream {
    let k = params.bits_per_symbol();
    let mut bits = Bitstream::new();
    for s in preamble_symbols(params.m()) {
        bits.push_uint(s as u64, k);
    }
    bits
}

/// Number of bits in the framing overhead ahead of the payload.
pub fn header_bits<T: Real>(params: &ModulationParams<T>) -> usize {
    PREAMBLE_SYMBOLS * params.bits_per_symbol() + LENGTH_FIELD_BITS
}

/// `preamble ‖ length ‖ payload ‖ crc32`.
pub fn frame_payload<T: Real>(payload: &Bitstream, params: &ModulationParams<T>) -> Result<Bitstream> {
    let header = FrameHeader::for_payload(payload)?;
    let mut bits = preamble_bits(params);
    bits.push_uint(header.payload_length_bits as u64, LENGTH_FIELD_BITS);
    bits.extend_from(payload);
    bits.push_uint(header.checksum as u64, CRC_FIELD_BITS);
    Ok(bits)
}

/// Symbol sequence for a complete transmission.
pub fn framed_symbols<T: Real>(payload: &Bitstream, params: &ModulationParams<T>) -> Result<Vec<u32>> {
    Ok(bits_to_symbols(&frame_payload(payload, params)?, params))
}

/// Symbols needed to carry a payload of `payload_bits` bits.
pub fn symbols_needed<T: Real>(payload_bits: usize, params: &ModulationParams<T>) -> usize {
    let total = header_bits(params) + payload_bits + CRC_FIELD_BITS;
    total.div_ceil(params.bits_per_symbol())
}

/// Display frames needed to carry a payload of `payload_bits` bits.
pub fn frames_needed<T: Real>(payload_bits: usize, params: &ModulationParams<T>) -> usize {
    symbols_needed(payload_bits, params) * params.symbol_duration_frames() as usize
}

/// Scales the selected colour component of every pixel by `level`.
pub fn apply_level_to_frame<T: Real>(frame: &FrameBuffer, level: T, params: &ModulationParams<T>) -> Result<FrameBuffer> {
    apply_level_in_region(frame, level, params, Region::full(frame.width(), frame.height()))
}

/// Like [`apply_level_to_frame`] but only inside `region`.
///
/// Each value `c` becomes `round_half_up(min(c × level, 255))`.
pub fn apply_level_in_region<T: Real>(
    frame: &FrameBuffer,
    level: T,
    params: &ModulationParams<T>,
    region: Region,
) -> Result<FrameBuffer> {
    check_level(level, params)?;
    if !region.fits(frame.width(), frame.height()) {
        return Err(Error::EmptyRegion);
    }
    let mut out = frame.clone();
    if level == T::one() {
        return Ok(out);
    }
    let c = params.channel().index();
    let width = frame.width();
    let pixels = out.pixels_mut();
    for y in region.y..region.y + region.height {
        let row = y * width * 3;
        for x in region.x..region.x + region.width {
            let i = row + x * 3 + c;
            pixels[i] = to_count(T::lit(pixels[i] as f64) * level);
        }
    }
    Ok(out)
}

fn check_level<T: Real>(level: T, params: &ModulationParams<T>) -> Result<()> {
    let slack = T::epsilon() * T::lit(4.0);
    let max = T::one() + params.depth();
    if !(level >= T::one() - slack && level <= max + slack) {
        return Err(Error::LevelOutOfRange { level: level.as_f64(), max: max.as_f64() });
    }
    Ok(())
}

/// Modulates `payload` onto the carrier.
///
/// A one-frame carrier is treated as a still image and repeated for exactly
/// as many frames as the message needs. A longer carrier must cover the
/// whole message; frames after the message are passed through at level 1.
pub fn encode_stream<T: Real>(
    payload: &Bitstream,
    carrier: &[FrameBuffer],
    params: &ModulationParams<T>,
) -> Result<Vec<FrameBuffer>> {
    let symbols = framed_symbols(payload, params)?;
    let per_symbol = params.symbol_duration_frames() as usize;
    let needed = symbols.len() * per_symbol;
    let total = match carrier.len() {
        0 => return Err(Error::NoFrames),
        1 => needed,
        n if n < needed => return Err(Error::CarrierTooShort { frames_needed: needed, available: n }),
        n => n,
    };
    let levels = params.levels();
    (0..total)
        .into_par_iter()
        .map(|i| {
            let source = if carrier.len() == 1 { &carrier[0] } else { &carrier[i] };
            let level = symbols.get(i / per_symbol).map_or(T::one(), |&s| levels[s as usize]);
            apply_level_to_frame(source, level, params)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::ColorChannel;

    fn ook() -> ModulationParams<f64> {
        ModulationParams::ook(6, 30.0).unwrap()
    }

    /// Bit-at-a-time CRC-32, written straight from the polynomial.
    fn crc32_reference(bytes: &[u8]) -> u32 {
        let mut crc = 0xFFFF_FFFFu32;
        for &b in bytes {
            crc ^= b as u32;
            for _ in 0..8 {
                crc = if crc & 1 == 1 { (crc >> 1) ^ 0xEDB8_8320 } else { crc >> 1 };
            }
        }
        !crc
    }

    #[test]
    fn reference_crc_check_value() {
        assert_eq!(crc32_reference(b"123456789"), 0xCBF4_3926);
    }

    #[test]
    fn crc_of_demo_payload_matches_reference() {
        let payload: Bitstream = "1010101010101010".parse().unwrap();
        assert_eq!(payload_crc(&payload), crc32_reference(&[0xAA, 0xAA]));
        assert_eq!(payload_crc(&payload), 0x2332_0C6A);
    }

    #[test]
    fn framed_lengths() {
        let p = ook();
        let payload: Bitstream = "1010101010101010".parse().unwrap();
        assert_eq!(frame_payload(&payload, &p).unwrap().len(), 96);
        assert_eq!(frame_payload(&Bitstream::new(), &p).unwrap().len(), 80);
        assert_eq!(symbols_needed(16, &p), 96);
    }

    #[test]
    fn framing_layout() {
        let p = ook();
        let payload: Bitstream = "110".parse().unwrap();
        let f = frame_payload(&payload, &p).unwrap();
        assert_eq!(f.slice(0, 16).to_string(), "1010101010101010");
        assert_eq!(f.read_uint(16, 32), Some(3));
        assert_eq!(f.slice(48, 51), payload);
        assert_eq!(f.read_uint(51, 32), Some(payload_crc(&payload) as u64));
    }

    #[test]
    fn four_level_preamble_uses_extreme_levels() {
        let p = ModulationParams::<f64>::new(4, 2, 0.03, ColorChannel::Red, 30.0).unwrap();
        let s = framed_symbols(&Bitstream::new(), &p).unwrap();
        assert_eq!(&s[..4], &[3, 0, 3, 0]);
        assert_eq!(preamble_bits(&p).len(), 32);
    }

    #[test]
    fn framing_with_odd_bits_per_symbol_pads_tail() {
        let p = ModulationParams::<f64>::new(8, 1, 0.03, ColorChannel::Red, 30.0).unwrap();
        // 48 + 32 + 5 + 32 = 117 bits -> 39 symbols
        assert_eq!(symbols_needed(5, &p), 39);
        let s = framed_symbols(&"10101".parse().unwrap(), &p).unwrap();
        assert_eq!(s.len(), 39);
    }

    #[test]
    fn identity_level_leaves_frame() {
        let f = FrameBuffer::filled(4, 4, [128, 128, 128]).unwrap();
        assert_eq!(apply_level_to_frame(&f, 1.0, &ook()).unwrap(), f);
    }

    #[test]
    fn three_percent_red() {
        let f = FrameBuffer::filled(2, 2, [100, 100, 100]).unwrap();
        let out = apply_level_to_frame(&f, 1.03, &ook()).unwrap();
        assert_eq!(out.pixel(1, 1), [103, 100, 100]);
    }

    #[test]
    fn clamps_at_full_scale() {
        // 250 × 1.03 = 257.5
        let f = FrameBuffer::filled(1, 1, [250, 250, 250]).unwrap();
        assert_eq!(apply_level_to_frame(&f, 1.03, &ook()).unwrap().pixel(0, 0), [255, 250, 250]);
    }

    #[test]
    fn other_channels() {
        let p = ModulationParams::<f64>::new(2, 1, 0.03, ColorChannel::Blue, 30.0).unwrap();
        let f = FrameBuffer::filled(1, 1, [100, 100, 100]).unwrap();
        assert_eq!(apply_level_to_frame(&f, 1.03, &p).unwrap().pixel(0, 0), [100, 100, 103]);
    }

    #[test]
    fn level_out_of_range() {
        let f = FrameBuffer::filled(1, 1, [100, 100, 100]).unwrap();
        assert!(matches!(apply_level_to_frame(&f, 1.05, &ook()), Err(Error::LevelOutOfRange { .. })));
        assert!(matches!(apply_level_to_frame(&f, 0.99, &ook()), Err(Error::LevelOutOfRange { .. })));
    }

    #[test]
    fn region_modulation() {
        let f = FrameBuffer::filled(4, 2, [100, 100, 100]).unwrap();
        let out = apply_level_in_region(&f, 1.03, &ook(), Region::new(0, 0, 4, 1)).unwrap();
        assert_eq!(out.pixel(3, 0)[0], 103);
        assert_eq!(out.pixel(3, 1)[0], 100);
        assert!(apply_level_in_region(&f, 1.03, &ook(), Region::new(2, 0, 4, 1)).is_err());
    }

    #[test]
    fn still_carrier_is_repeated() {
        let p = ook();
        let carrier = [FrameBuffer::filled(2, 2, [128, 128, 128]).unwrap()];
        let payload: Bitstream = "1010101010101010".parse().unwrap();
        let frames = encode_stream(&payload, &carrier, &p).unwrap();
        assert_eq!(frames.len(), 96 * 6);
        let reds: Vec<u8> = frames.iter().map(|f| f.pixel(0, 0)[0]).collect();
        assert!(reds[..6].iter().all(|&r| r == 132));
        assert!(reds[6..12].iter().all(|&r| r == 128));
    }

    #[test]
    fn long_carrier_tail_is_untouched() {
        let p = ook();
        let carrier: Vec<_> = (0..500).map(|i| FrameBuffer::filled(1, 1, [i as u8, 0, 0]).unwrap()).collect();
        let frames = encode_stream(&Bitstream::new(), &carrier, &p).unwrap();
        assert_eq!(frames.len(), 500);
        assert_eq!(&frames[480..], &carrier[480..]);
    }

    #[test]
    fn short_carrier_rejected() {
        let p = ook();
        let carrier = vec![FrameBuffer::filled(1, 1, [0, 0, 0]).unwrap(); 10];
        assert_eq!(
            encode_stream(&Bitstream::new(), &carrier, &p),
            Err(Error::CarrierTooShort { frames_needed: 480, available: 10 })
        );
        assert_eq!(encode_stream(&Bitstream::new(), &[], &p), Err(Error::NoFrames));
    }

    #[test]
    fn demo_rate_is_five_bits_per_second() {
        assert_eq!(ook().bit_rate(), 5.0);
    }
}
