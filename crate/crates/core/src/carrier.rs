//! Built-in synthetic carrier frames.
//!
//! Two carriers are provided so nothing depends on external image assets:
//! a flat mid-gray screen and a smooth "photo-like" gradient. The gradient
//! walks the frame in boustrophedon order and maps the walk position through
//! a Gaussian tone curve, so its histogram is a broad bell (mean 124, 60
//! counts wide) with no hard edges. That wide, smooth histogram matters for
//! simulations at long range: once the received image is only a few counts
//! bright, a textured carrier dithers the camera quantizer where a flat one
//! collapses every pixel onto the same code.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::frame::FrameBuffer;
use crate::num::to_count;

/// Brightest value the gradient carrier uses; `247 × 1.03` stays below 255.
pub const GRADIENT_MAX: u8 = 247;

const GRADIENT_MEAN: f64 = 124.0;
const GRADIENT_SPREAD: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CarrierKind {
    /// Every pixel (128, 128, 128).
    Gray128,
    /// Smooth vertical gradient with a bell-shaped histogram.
    Gradient,
}

impl CarrierKind {
    pub fn frame(self, width: usize, height: usize) -> Result<FrameBuffer> {
        match self {
            CarrierKind::Gray128 => FrameBuffer::filled(width, height, [128, 128, 128]),
            CarrierKind::Gradient => gradient(width, height),
        }
    }
}

impl fmt::Display for CarrierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CarrierKind::Gray128 => "gray128",
            CarrierKind::Gradient => "gradient",
        })
    }
}

impl FromStr for CarrierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "gray128" | "gray" => Ok(CarrierKind::Gray128),
            "gradient" => Ok(CarrierKind::Gradient),
            other => Err(Error::InvalidFrame(format!("unknown built-in carrier '{other}'"))),
        }
    }
}

fn gradient(width: usize, height: usize) -> Result<FrameBuffer> {
    let n = (width * height) as f64;
    let mut pixels = Vec::with_capacity(width * height * 3);
    for y in 0..height {
        for x in 0..width {
            let walk = if y % 2 == 0 { x } else { width - 1 - x };
            let u = ((y * width + walk) as f64 + 0.5) / n;
            // standard normal quantile
            let z = -std::f64::consts::SQRT_2 * statrs::function::erf::erfc_inv(2.0 * u);
            let v = (GRADIENT_MEAN + GRADIENT_SPREAD * z).clamp(0.0, GRADIENT_MAX as f64);
            let r = to_count(v);
            // green and blue carry the same tone, slightly shifted for a less synthetic look
            let g = to_count(v * 0.9 + 10.0);
            let b = to_count(v * 0.8 + 20.0);
            pixels.extend_from_slice(&[r, g, b]);
        }
    }
    FrameBuffer::new(width, height, pixels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::ColorChannel;

    #[test]
    fn gray_is_flat() {
        let f = CarrierKind::Gray128.frame(8, 4).unwrap();
        assert!(f.pixels().iter().all(|&v| v == 128));
    }

    #[test]
    fn gradient_is_deterministic_and_bounded() {
        let a = CarrierKind::Gradient.frame(64, 48).unwrap();
        let b = CarrierKind::Gradient.frame(64, 48).unwrap();
        assert_eq!(a, b);
        assert!(a.channel_values(ColorChannel::Red).all(|v| v <= GRADIENT_MAX));
        let mean = a.channel_mean::<f64>(ColorChannel::Red) * 255.0;
        assert!((mean - GRADIENT_MEAN).abs() < 1.0, "mean {mean}");
    }

    #[test]
    fn gradient_has_wide_histogram() {
        let f = CarrierKind::Gradient.frame(128, 96).unwrap();
        let vals: Vec<f64> = f.channel_values(ColorChannel::Red).map(f64::from).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64).sqrt();
        assert!(sd > 50.0, "sd {sd}");
    }

    #[test]
    fn names_roundtrip() {
        for k in [CarrierKind::Gray128, CarrierKind::Gradient] {
            assert_eq!(k.to_string().parse::<CarrierKind>().unwrap(), k);
        }
        assert!("noise".parse::<CarrierKind>().is_err());
    }
}
