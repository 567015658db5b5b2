//! M-ASK parameters and the bit ↔ symbol ↔ level mapping.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::frame::ColorChannel;
use crate::num::Real;

/// Default modulation depth: a 3% change of the selected colour component.
pub const DEFAULT_DEPTH: f64 = 0.03;

/// Depth ceiling enforced unless the caller explicitly opts out.
pub const MAX_DEPTH: f64 = 0.1;

/// Transmitter settings for M-level amplitude-shift keying.
///
/// Construction validates everything, so a `ModulationParams` in hand is
/// always usable: `M` is a power of two, the depth is within the
/// imperceptibility guard (unless overridden) and the bit rate is positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulationParams<T> {
    m: u32,
    symbol_duration_frames: u32,
    depth: T,
    channel: ColorChannel,
    frame_rate: T,
}

impl<T: Real> ModulationParams<T> {
    pub fn new(m: u32, symbol_duration_frames: u32, depth: T, channel: ColorChannel, frame_rate: T) -> Result<Self> {
        Self::build(m, symbol_duration_frames, depth, channel, frame_rate, false)
    }

    /// Same as [`ModulationParams::new`] but lifts the 10% depth ceiling.
    /// The depth must still be in `(0, 1]`.
    pub fn new_allowing_deep(
        m: u32,
        symbol_duration_frames: u32,
        depth: T,
        channel: ColorChannel,
        frame_rate: T,
    ) -> Result<Self> {
        Self::build(m, symbol_duration_frames, depth, channel, frame_rate, true)
    }

    /// On-off keying on the red channel with the default 3% depth.
    pub fn ook(symbol_duration_frames: u32, frame_rate: T) -> Result<Self> {
        Self::new(2, symbol_duration_frames, T::lit(DEFAULT_DEPTH), ColorChannel::Red, frame_rate)
    }

    fn build(
        m: u32,
        symbol_duration_frames: u32,
        depth: T,
        channel: ColorChannel,
        frame_rate: T,
        allow_deep: bool,
    ) -> Result<Self> {
        if m < 2 || !m.is_power_of_two() {
            return Err(Error::InvalidModulation(format!("M must be a power of two >= 2, got {m}")));
        }
        if symbol_duration_frames == 0 {
            return Err(Error::InvalidModulation("symbol duration must be at least one frame".into()));
        }
        let ceiling = if allow_deep { T::one() } else { T::lit(MAX_DEPTH) };
        if !(depth > T::zero() && depth <= ceiling) {
            return Err(Error::InvalidModulation(format!(
                "depth {depth} outside (0, {ceiling}]{}",
                if allow_deep { "" } else { "; set the deep-modulation override to exceed the guard" }
            )));
        }
        if !(frame_rate.is_finite() && frame_rate > T::zero()) {
            return Err(Error::InvalidModulation(format!("frame rate must be positive, got {frame_rate}")));
        }
        Ok(ModulationParams { m, symbol_duration_frames, depth, channel, frame_rate })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn symbol_duration_frames(&self) -> u32 {
        self.symbol_duration_frames
    }

    pub fn depth(&self) -> T {
        self.depth
    }

    pub fn channel(&self) -> ColorChannel {
        self.channel
    }

    pub fn frame_rate(&self) -> T {
        self.frame_rate
    }

    /// `⌊log2 M⌋`, exact because `M` is a power of two.
    pub fn bits_per_symbol(&self) -> usize {
        self.m.trailing_zeros() as usize
    }

    /// Symbols per second shown on the display.
    pub fn symbol_rate(&self) -> T {
        self.frame_rate / T::lit(self.symbol_duration_frames as f64)
    }

    /// Bits per second: `log2(M) × frame_rate / symbol_duration_frames`.
    pub fn bit_rate(&self) -> T {
        T::lit(self.bits_per_symbol() as f64) * self.symbol_rate()
    }

    /// Multiplicative gain for a symbol: `1 + δ·index/(M−1)`.
    pub fn level(&self, index: u32) -> Result<T> {
        symbol_to_level(index, self)
    }

    /// All `M` levels in increasing order.
    pub fn levels(&self) -> Vec<T> {
        (0..self.m).map(|i| level_unchecked(i, self)).collect()
    }
}

/// An ordered sequence of bits.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Bitstream(Vec<bool>);

impl Bitstream {
    pub fn new() -> Self {
        Bitstream(Vec::new())
    }

    /// Builds a bitstream from 0/1 values, rejecting anything else.
    pub fn from_binary(values: &[u8]) -> Result<Self> {
        values
            .iter()
            .map(|&v| match v {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(Error::InvalidModulation(format!("bit value {other} is not 0 or 1"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Bitstream)
    }

    /// Unpacks bytes, most significant bit first.
    pub fn from_bytes_msb_first(bytes: &[u8]) -> Self {
        Bitstream(bytes.iter().flat_map(|&b| (0..8).rev().map(move |i| (b >> i) & 1 == 1)).collect())
    }

    /// Packs bits MSB-first, zero-padding the final byte.
    pub fn to_bytes_msb_first(&self) -> Vec<u8> {
        self.0
            .chunks(8)
            .map(|chunk| chunk.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | ((b as u8) << (7 - i))))
            .collect()
    }

    /// Appends the low `width` bits of `value`, MSB first.
    pub fn push_uint(&mut self, value: u64, width: usize) {
        self.0.extend((0..width).rev().map(|i| (value >> i) & 1 == 1));
    }

    /// Reads `width` bits starting at `offset` as an unsigned integer.
    pub fn read_uint(&self, offset: usize, width: usize) -> Option<u64> {
        let bits = self.0.get(offset..offset + width)?;
        Some(bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64))
    }

    pub fn push(&mut self, bit: bool) {
        self.0.push(bit);
    }

    pub fn extend_from(&mut self, other: &Bitstream) {
        self.0.extend_from_slice(&other.0);
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn slice(&self, start: usize, end: usize) -> Bitstream {
        Bitstream(self.0[start..end].to_vec())
    }

    pub fn truncate(&mut self, len: usize) {
        self.0.truncate(len);
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.0.iter().copied()
    }

    /// Number of positions where the two streams differ; surplus or missing
    /// bits on either side count as errors.
    pub fn hamming_distance(&self, other: &Bitstream) -> usize {
        let common = self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count();
        common + self.len().abs_diff(other.len())
    }
}

impl From<Vec<bool>> for Bitstream {
    fn from(bits: Vec<bool>) -> Self {
        Bitstream(bits)
    }
}

impl FromIterator<bool> for Bitstream {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Bitstream(iter.into_iter().collect())
    }
}

impl FromStr for Bitstream {
    type Err = Error;

    /// Parses a string of `0` and `1` characters; `_` and whitespace are ignored.
    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .filter(|c| !c.is_whitespace() && *c != '_')
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidModulation(format!("'{other}' is not a bit"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Bitstream)
    }
}

impl fmt::Display for Bitstream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Per-sample amplitudes extracted by the receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolSeries<T> {
    values: Vec<T>,
    sample_rate: T,
}

impl<T: Real> SymbolSeries<T> {
    pub fn new(values: Vec<T>, sample_rate: T) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidAnalysis(format!("series sample {i} is not finite")));
        }
        if !(sample_rate.is_finite() && sample_rate > T::zero()) {
            return Err(Error::InvalidAnalysis(format!("sample rate must be positive, got {sample_rate}")));
        }
        Ok(SymbolSeries { values, sample_rate })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn sample_rate(&self) -> T {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Applies `a·x + b` to every sample.
    pub fn affine_map(&self, a: T, b: T) -> Result<Self> {
        SymbolSeries::new(self.values.iter().map(|&v| a * v + b).collect(), self.sample_rate)
    }
}

/// Groups bits into symbol indices, MSB first. A trailing partial group is
/// padded with zeros.
pub fn bits_to_symbols<T: Real>(bits: &Bitstream, params: &ModulationParams<T>) -> Vec<u32> {
    let k = params.bits_per_symbol();
    bits.as_slice()
        .chunks(k)
        .map(|group| {
            let v = group.iter().fold(0u32, |acc, &b| (acc << 1) | b as u32);
            v << (k - group.len())
        })
        .collect()
}

/// Expands symbol indices back into bits, MSB first.
pub fn symbols_to_bits<T: Real>(symbols: &[u32], params: &ModulationParams<T>) -> Result<Bitstream> {
    let k = params.bits_per_symbol();
    let mut out = Bitstream(Vec::with_capacity(symbols.len() * k));
    for &s in symbols {
        if s >= params.m() {
            return Err(Error::SymbolOutOfRange { index: s, m: params.m() });
        }
        out.push_uint(s as u64, k);
    }
    Ok(out)
}

/// Gain applied to the selected colour component for a symbol.
pub fn symbol_to_level<T: Real>(index: u32, params: &ModulationParams<T>) -> Result<T> {
    if index >= params.m() {
        return Err(Error::SymbolOutOfRange { index, m: params.m() });
    }
    Ok(level_unchecked(index, params))
}

fn level_unchecked<T: Real>(index: u32, params: &ModulationParams<T>) -> T {
    if index == params.m() - 1 {
        // exact top level, no rounding from the division
        return T::one() + params.depth();
    }
    T::one() + params.depth() * T::lit(index as f64) / T::lit((params.m() - 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(m: u32) -> ModulationParams<f64> {
        ModulationParams::new(m, 6, 0.03, ColorChannel::Red, 30.0).unwrap()
    }

    fn bits(s: &str) -> Bitstream {
        s.parse().unwrap()
    }

    #[test]
    fn rejects_non_power_of_two() {
        for m in [0, 1, 3, 5, 6, 12] {
            assert!(ModulationParams::<f64>::new(m, 1, 0.03, ColorChannel::Red, 30.0).is_err(), "M={m}");
        }
    }

    #[test]
    fn depth_guard_and_override() {
        assert!(ModulationParams::<f64>::new(2, 1, 0.1, ColorChannel::Red, 30.0).is_ok());
        assert!(ModulationParams::<f64>::new(2, 1, 0.11, ColorChannel::Red, 30.0).is_err());
        assert!(ModulationParams::<f64>::new(2, 1, 0.0, ColorChannel::Red, 30.0).is_err());
        assert!(ModulationParams::<f64>::new_allowing_deep(2, 1, 0.25, ColorChannel::Red, 30.0).is_ok());
        assert!(ModulationParams::<f64>::new_allowing_deep(2, 1, 1.5, ColorChannel::Red, 30.0).is_err());
    }

    #[test]
    fn rejects_bad_timing() {
        assert!(ModulationParams::<f64>::new(2, 0, 0.03, ColorChannel::Red, 30.0).is_err());
        assert!(ModulationParams::<f64>::new(2, 1, 0.03, ColorChannel::Red, 0.0).is_err());
        assert!(ModulationParams::<f64>::new(2, 1, 0.03, ColorChannel::Red, f64::NAN).is_err());
    }

    #[test]
    fn bit_rate_formula() {
        assert_eq!(params(2).bit_rate(), 5.0);
        assert_eq!(params(4).bit_rate(), 10.0);
        let p = ModulationParams::<f64>::new(16, 7, 0.03, ColorChannel::Red, 29.97).unwrap();
        assert_eq!(p.bit_rate(), 4.0 * 29.97 / 7.0);
    }

    #[test]
    fn ook_mapping_is_identity() {
        assert_eq!(bits_to_symbols(&bits("1010"), &params(2)), vec![1, 0, 1, 0]);
    }

    #[test]
    fn four_level_grouping_msb_first() {
        assert_eq!(bits_to_symbols(&bits("1100"), &params(4)), vec![3, 0]);
        assert_eq!(symbols_to_bits(&[3, 0], &params(4)).unwrap(), bits("1100"));
    }

    #[test]
    fn demo_pattern_alternates() {
        let s = bits_to_symbols(&bits("1010101010101010"), &params(2));
        assert_eq!(s.len(), 16);
        assert!(s.iter().enumerate().all(|(i, &v)| v == (i % 2 == 0) as u32));
    }

    #[test]
    fn partial_group_padded_with_zeros() {
        assert_eq!(bits_to_symbols(&bits("111"), &params(4)), vec![3, 2]);
        assert_eq!(bits_to_symbols(&bits("1"), &params(8)), vec![4]);
    }

    #[test]
    fn empty_roundtrip() {
        assert!(bits_to_symbols(&Bitstream::new(), &params(2)).is_empty());
        assert!(symbols_to_bits(&[], &params(2)).unwrap().is_empty());
    }

    #[test]
    fn out_of_range_symbol_rejected() {
        assert_eq!(symbols_to_bits(&[0, 4], &params(4)), Err(Error::SymbolOutOfRange { index: 4, m: 4 }));
        assert!(symbol_to_level(2, &params(2)).is_err());
    }

    #[test]
    fn levels() {
        assert_eq!(symbol_to_level(1, &params(2)).unwrap(), 1.03);
        assert_eq!(symbol_to_level(0, &params(8)).unwrap(), 1.0);
        // 1 + 0.03/3
        assert!((symbol_to_level(1, &params(4)).unwrap() - 1.01).abs() < 1e-15);
        assert_eq!(symbol_to_level(3, &params(4)).unwrap(), 1.03);
    }

    #[test]
    fn levels_in_f32() {
        let p = ModulationParams::<f32>::ook(6, 30.0).unwrap();
        assert_eq!(p.level(1).unwrap(), 1.0f32 + 0.03f32);
        assert_eq!(p.bit_rate(), 5.0f32);
    }

    #[test]
    fn exhaustive_roundtrip_short_streams() {
        for m in [2u32, 4, 8, 16] {
            let p = params(m);
            let k = p.bits_per_symbol();
            for len in (0..=12).filter(|l| l % k == 0) {
                for word in 0u64..(1 << len) {
                    let mut b = Bitstream::new();
                    b.push_uint(word, len);
                    let syms = bits_to_symbols(&b, &p);
                    assert_eq!(syms.len(), len / k);
                    assert_eq!(symbols_to_bits(&syms, &p).unwrap(), b);
                }
            }
        }
    }

    #[test]
    fn byte_packing() {
        let b = Bitstream::from_bytes_msb_first(&[0xAA, 0x01]);
        assert_eq!(b.to_string(), "1010101000000001");
        assert_eq!(b.to_bytes_msb_first(), vec![0xAA, 0x01]);
        assert_eq!(bits("101").to_bytes_msb_first(), vec![0xA0]);
    }

    #[test]
    fn from_binary_validates() {
        assert_eq!(Bitstream::from_binary(&[1, 0, 1]).unwrap(), bits("101"));
        assert!(Bitstream::from_binary(&[1, 2]).is_err());
    }

    #[test]
    fn uint_fields() {
        let mut b = Bitstream::new();
        b.push_uint(0xDEAD_BEEF, 32);
        assert_eq!(b.read_uint(0, 32), Some(0xDEAD_BEEF));
        assert_eq!(b.read_uint(16, 16), Some(0xBEEF));
        assert_eq!(b.read_uint(20, 16), None);
    }

    #[test]
    fn series_rejects_non_finite() {
        assert!(SymbolSeries::new(vec![0.1, f64::NAN], 30.0).is_err());
        assert!(SymbolSeries::new(vec![0.1, f64::INFINITY], 30.0).is_err());
        assert!(SymbolSeries::new(vec![0.1], 0.0).is_err());
        assert!(SymbolSeries::new(vec![0.1], 30.0).is_ok());
    }

    #[test]
    fn hamming_counts_length_mismatch() {
        assert_eq!(bits("1010").hamming_distance(&bits("1000")), 1);
        assert_eq!(bits("1010").hamming_distance(&bits("10")), 2);
    }
}
