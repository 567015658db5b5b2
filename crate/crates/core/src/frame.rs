//! The raw RGB raster that every stage of the pipeline passes around.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::num::Real;

/// One of the three colour components of a pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ColorChannel {
    #[default]
    Red,
    Green,
    Blue,
}

impl ColorChannel {
    pub const ALL: [ColorChannel; 3] = [ColorChannel::Red, ColorChannel::Green, ColorChannel::Blue];

    /// Offset of this component inside an RGB triplet.
    pub fn index(self) -> usize {
        match self {
            ColorChannel::Red => 0,
            ColorChannel::Green => 1,
            ColorChannel::Blue => 2,
        }
    }
}

impl fmt::Display for ColorChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ColorChannel::Red => "red",
            ColorChannel::Green => "green",
            ColorChannel::Blue => "blue",
        })
    }
}

impl FromStr for ColorChannel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "red" | "r" => Ok(ColorChannel::Red),
            "green" | "g" => Ok(ColorChannel::Green),
            "blue" | "b" => Ok(ColorChannel::Blue),
            other => Err(Error::InvalidModulation(format!("unknown colour channel '{other}'"))),
        }
    }
}

/// Axis-aligned pixel rectangle, `[x, x + width) × [y, y + height)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Region {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Region {
    pub fn new(x: usize, y: usize, width: usize, height: usize) -> Self {
        Region { x, y, width, height }
    }

    pub fn full(width: usize, height: usize) -> Self {
        Region { x: 0, y: 0, width, height }
    }

    /// The central `fraction` of a `width × height` frame in each dimension.
    pub fn centered(width: usize, height: usize, fraction: f64) -> Self {
        let w = ((width as f64 * fraction).round() as usize).clamp(1, width);
        let h = ((height as f64 * fraction).round() as usize).clamp(1, height);
        Region { x: (width - w) / 2, y: (height - h) / 2, width: w, height: h }
    }

    pub fn is_empty(&self) -> bool {
        self.width == 0 || self.height == 0
    }

    pub fn fits(&self, width: usize, height: usize) -> bool {
        !self.is_empty() && self.x + self.width <= width && self.y + self.height <= height
    }
}

/// A single RGB frame, row-major, 3 bytes per pixel.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FrameBuffer {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl fmt::Debug for FrameBuffer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FrameBuffer")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl FrameBuffer {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidFrame(format!("dimensions must be positive, got {width}x{height}")));
        }
        let expected = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(3))
            .ok_or_else(|| Error::InvalidFrame("dimensions overflow".into()))?;
        if pixels.len() != expected {
            return Err(Error::InvalidFrame(format!(
                "pixel buffer has {} bytes, {width}x{height} RGB needs {expected}",
                pixels.len()
            )));
        }
        Ok(FrameBuffer { width, height, pixels })
    }

    /// A frame where every pixel has the colour `rgb`.
    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        let pixels = rgb.iter().copied().cycle().take(width * height * 3).collect();
        FrameBuffer::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn same_shape(&self, other: &FrameBuffer) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Iterator over one colour component of every pixel.
    pub fn channel_values(&self, channel: ColorChannel) -> impl Iterator<Item = u8> + '_ {
        self.pixels.iter().skip(channel.index()).step_by(3).copied()
    }

    /// Mean of one colour component, normalised to `[0, 1]`.
    pub fn channel_mean<T: Real>(&self, channel: ColorChannel) -> T {
        let sum: u64 = self.channel_values(channel).map(u64::from).sum();
        T::lit(sum as f64 / (self.width * self.height) as f64 / 255.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_buffers() {
        assert!(FrameBuffer::new(0, 4, vec![]).is_err());
        assert!(FrameBuffer::new(2, 2, vec![0; 11]).is_err());
        assert!(FrameBuffer::new(2, 2, vec![0; 12]).is_ok());
    }

    #[test]
    fn pixel_access_is_row_major() {
        let mut f = FrameBuffer::filled(3, 2, [1, 2, 3]).unwrap();
        f.set_pixel(2, 1, [7, 8, 9]);
        assert_eq!(&f.pixels()[15..18], &[7, 8, 9]);
        assert_eq!(f.pixel(2, 1), [7, 8, 9]);
        assert_eq!(f.pixel(0, 0), [1, 2, 3]);
    }

    #[test]
    fn channel_mean_normalised() {
        let f = FrameBuffer::filled(4, 4, [255, 0, 51]).unwrap();
        assert_eq!(f.channel_mean::<f64>(ColorChannel::Red), 1.0);
        assert_eq!(f.channel_mean::<f64>(ColorChannel::Green), 0.0);
        assert!((f.channel_mean::<f64>(ColorChannel::Blue) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn channel_names_parse() {
        assert_eq!("RED".parse::<ColorChannel>().unwrap(), ColorChannel::Red);
        assert_eq!("b".parse::<ColorChannel>().unwrap(), ColorChannel::Blue);
        assert!("violet".parse::<ColorChannel>().is_err());
    }

    #[test]
    fn centered_region_fits() {
        let r = Region::centered(64, 48, 0.25);
        assert_eq!(r, Region::new(24, 18, 16, 12));
        assert!(r.fits(64, 48));
        assert!(!Region::new(60, 0, 8, 8).fits(64, 48));
    }
}
