//! Raw RGB frame sequence container.
//!
//! Layout, all integers little-endian:
//!
//! | offset | size | field                      |
//! |--------|------|----------------------------|
//! | 0      | 4    | magic `"BFRS"`             |
//! | 4      | 2    | version, `1`               |
//! | 6      | 4    | width                      |
//! | 10     | 4    | height                     |
//! | 14     | 4    | fps numerator              |
//! | 18     | 4    | fps denominator (nonzero)  |
//! | 22     | 4    | frame count                |
//! | 26     | ...  | frames, row-major RGB8     |

use std::fs;
use std::io;
use std::path::Path;

use screenlink::FrameBuffer;
use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"BFRS";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 26;

#[derive(Debug, Error)]
pub enum BfrsError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("file too short for a BFRS header: {0} bytes")]
    TruncatedHeader(usize),
    #[error("bad magic {0:02x?}, expected \"BFRS\"")]
    BadMagic([u8; 4]),
    #[error("unsupported BFRS version {0}")]
    UnsupportedVersion(u16),
    #[error("zero frame dimension {width}x{height}")]
    ZeroDimension { width: u32, height: u32 },
    #[error("fps denominator is zero")]
    ZeroFpsDenominator,
    #[error("fps numerator is zero")]
    ZeroFpsNumerator,
    #[error("size mismatch: header implies {expected} bytes, file has {actual}")]
    SizeMismatch { expected: u64, actual: u64 },
    #[error("frames in a sequence must share dimensions")]
    InconsistentFrames,
    #[error("cannot represent {0} fps as a ratio of 32-bit integers")]
    UnrepresentableFps(f64),
}

/// A frame sequence with its nominal rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Bfrs {
    pub fps_num: u32,
    pub fps_den: u32,
    pub frames: Vec<FrameBuffer>,
}

impl Bfrs {
    pub fn new(frames: Vec<FrameBuffer>, fps: f64) -> Result<Self, BfrsError> {
        let (fps_num, fps_den) = fps_ratio(fps)?;
        if let Some(first) = frames.first() {
            if frames.iter().any(|f| !f.same_shape(first)) {
                return Err(BfrsError::InconsistentFrames);
            }
        }
        Ok(Bfrs { fps_num, fps_den, frames })
    }

    pub fn fps(&self) -> f64 {
        self.fps_num as f64 / self.fps_den as f64
    }

    pub fn dimensions(&self) -> (usize, usize) {
        self.frames.first().map(|f| (f.width(), f.height())).unwrap_or((0, 0))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let (w, h) = self.dimensions();
        let mut out = Vec::with_capacity(HEADER_LEN + self.frames.len() * w * h * 3);
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        for v in [w as u32, h as u32, self.fps_num, self.fps_den, self.frames.len() as u32] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for f in &self.frames {
            out.extend_from_slice(f.pixels());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, BfrsError> {
        if bytes.len() < HEADER_LEN {
            return Err(BfrsError::TruncatedHeader(bytes.len()));
        }
        let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
        if magic != MAGIC {
            return Err(BfrsError::BadMagic(magic));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != VERSION {
            return Err(BfrsError::UnsupportedVersion(version));
        }
        let field = |i: usize| u32::from_le_bytes(bytes[6 + 4 * i..10 + 4 * i].try_into().unwrap());
        let (width, height, fps_num, fps_den, count) = (field(0), field(1), field(2), field(3), field(4));
        let frame_len = width as u64 * height as u64 * 3;
        let expected = HEADER_LEN as u64 + count as u64 * frame_len;
        if expected != bytes.len() as u64 {
            return Err(BfrsError::SizeMismatch { expected, actual: bytes.len() as u64 });
        }
        if fps_den == 0 {
            return Err(BfrsError::ZeroFpsDenominator);
        }
        if fps_num == 0 {
            return Err(BfrsError::ZeroFpsNumerator);
        }
        if width == 0 || height == 0 {
            return Err(BfrsError::ZeroDimension { width, height });
        }
        let frames = bytes[HEADER_LEN..]
            .chunks_exact(frame_len as usize)
            .map(|c| FrameBuffer::new(width as usize, height as usize, c.to_vec()).expect("length checked above"))
            .collect();
        Ok(Bfrs { fps_num, fps_den, frames })
    }

    pub fn read(path: &Path) -> Result<Self, BfrsError> {
        Self::from_bytes(&fs::read(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<(), BfrsError> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }
}

/// Exact ratio for integer, NTSC-style and millihertz rates.
pub fn fps_ratio(fps: f64) -> Result<(u32, u32), BfrsError> {
    if !(fps.is_finite() && fps > 0.0) {
        return Err(BfrsError::UnrepresentableFps(fps));
    }
    for den in [1u32, 1001, 1000, 1_000_000] {
        let num = (fps * den as f64).round();
        if num >= 1.0 && num <= u32::MAX as f64 && (num / den as f64 - fps).abs() <= 1e-9 * fps {
            return Ok((num as u32, den));
        }
    }
    Err(BfrsError::UnrepresentableFps(fps))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Bfrs {
        let frames = (0..3u8).map(|i| FrameBuffer::filled(4, 2, [i, 2 * i, 3 * i]).unwrap()).collect();
        Bfrs::new(frames, 30.0).unwrap()
    }

    #[test]
    fn round_trip() {
        let b = sample();
        let bytes = b.to_bytes();
        assert_eq!(bytes.len(), HEADER_LEN + 3 * 4 * 2 * 3);
        assert_eq!(&bytes[..4], b"BFRS");
        assert_eq!(Bfrs::from_bytes(&bytes).unwrap(), b);
    }

    #[test]
    fn header_layout() {
        let bytes = sample().to_bytes();
        assert_eq!(&bytes[4..6], &[1, 0]);
        assert_eq!(&bytes[6..10], &4u32.to_le_bytes());
        assert_eq!(&bytes[10..14], &2u32.to_le_bytes());
        assert_eq!(&bytes[14..18], &30u32.to_le_bytes());
        assert_eq!(&bytes[18..22], &1u32.to_le_bytes());
        assert_eq!(&bytes[22..26], &3u32.to_le_bytes());
    }

    #[test]
    fn distinct_rejections() {
        let good = sample().to_bytes();
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(Bfrs::from_bytes(&bad), Err(BfrsError::BadMagic(_))));
        let mut bad = good.clone();
        bad[4] = 2;
        assert!(matches!(Bfrs::from_bytes(&bad), Err(BfrsError::UnsupportedVersion(2))));
        let mut bad = good.clone();
        bad.pop();
        assert!(matches!(Bfrs::from_bytes(&bad), Err(BfrsError::SizeMismatch { .. })));
        let mut bad = good.clone();
        bad[18..22].copy_from_slice(&0u32.to_le_bytes());
        assert!(matches!(Bfrs::from_bytes(&bad), Err(BfrsError::ZeroFpsDenominator)));
        assert!(matches!(Bfrs::from_bytes(&good[..10]), Err(BfrsError::TruncatedHeader(10))));
        let mut bad = good[..HEADER_LEN].to_vec();
        bad[6..10].copy_from_slice(&0u32.to_le_bytes());
        assert!(matches!(Bfrs::from_bytes(&bad), Err(BfrsError::ZeroDimension { .. })));
    }

    #[test]
    fn empty_sequence_is_valid() {
        let mut bytes = sample().to_bytes()[..HEADER_LEN].to_vec();
        bytes[22..26].copy_from_slice(&0u32.to_le_bytes());
        assert!(Bfrs::from_bytes(&bytes).unwrap().frames.is_empty());
    }

    #[test]
    fn fps_ratios() {
        assert_eq!(fps_ratio(30.0).unwrap(), (30, 1));
        assert_eq!(fps_ratio(30000.0 / 1001.0).unwrap(), (30000, 1001));
        assert_eq!(fps_ratio(12.5).unwrap(), (12500, 1000));
        assert!(fps_ratio(0.0).is_err());
    }
}
