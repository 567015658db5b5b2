//! Display-to-camera channel simulator.
//!
//! Each camera frame is produced by a fixed pipeline:
//!
//! 1. pick the display frame nearest in time (display rate → camera rate),
//! 2. warp it onto the sensor with the configured homography,
//! 3. scale intensities by the geometric gain relative to the reference
//!    geometry (1 m, both axes aligned), so at the reference the received
//!    amplitude equals the transmitted one,
//! 4. add i.i.d. Gaussian noise, per pixel and per component,
//! 5. clamp to `[0, 1]` and quantize.
//!
//! Noise comes from a ChaCha8 stream keyed by `(seed, camera frame index)`
//! and consumed in pixel order, so frames can be rendered in any order or in
//! parallel and the output stays bit-identical.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frame::{ColorChannel, FrameBuffer};
use crate::homography::{Homography, WarpPlan};
use crate::num::{round_half_up, Real};

/// Distance at which the simulated camera sees the transmitted amplitude
/// unchanged.
pub const REFERENCE_DISTANCE_M: f64 = 1.0;

/// Display/camera placement: distance, axial misalignments and the two
/// emitting/collecting areas. Angles in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelGeometry<T> {
    distance: T,
    phi: T,
    theta: T,
    display_area: T,
    aperture_area: T,
}

impl<T: Real> ChannelGeometry<T> {
    pub fn new(distance: T, phi: T, theta: T, display_area: T, aperture_area: T) -> Result<Self> {
        if !(distance.is_finite() && distance > T::zero()) {
            return Err(Error::InvalidChannel(format!("distance must be positive, got {distance}")));
        }
        let right = T::FRAC_PI_2();
        for (name, a) in [("phi", phi), ("theta", theta)] {
            if !(a >= T::zero() && a < right) {
                return Err(Error::InvalidChannel(format!("{name} must be in [0, pi/2), got {a}")));
            }
        }
        for (name, a) in [("display area", display_area), ("aperture area", aperture_area)] {
            if !(a.is_finite() && a > T::zero()) {
                return Err(Error::InvalidChannel(format!("{name} must be positive, got {a}")));
            }
        }
        Ok(ChannelGeometry { distance, phi, theta, display_area, aperture_area })
    }

    /// Aligned geometry at `distance` with the given areas.
    pub fn aligned(distance: T, display_area: T, aperture_area: T) -> Result<Self> {
        Self::new(distance, T::zero(), T::zero(), display_area, aperture_area)
    }

    pub fn distance(&self) -> T {
        self.distance
    }

    pub fn phi(&self) -> T {
        self.phi
    }

    pub fn theta(&self) -> T {
        self.theta
    }

    pub fn display_area(&self) -> T {
        self.display_area
    }

    pub fn aperture_area(&self) -> T {
        self.aperture_area
    }

    /// Same areas, moved to `distance`.
    pub fn at_distance(&self, distance: T) -> Result<Self> {
        Self::new(distance, self.phi, self.theta, self.display_area, self.aperture_area)
    }

    /// The normalisation geometry: same areas, 1 m, no misalignment.
    pub fn reference(&self) -> Self {
        ChannelGeometry { distance: T::lit(REFERENCE_DISTANCE_M), phi: T::zero(), theta: T::zero(), ..*self }
    }
}

/// Small-element optical gain `A·S·cos(φ)·cos(θ) / (π d²)`.
pub fn geometric_gain<T: Real>(geometry: &ChannelGeometry<T>) -> T {
    let d = geometry.distance;
    geometry.aperture_area * geometry.display_area * geometry.phi.cos() * geometry.theta.cos() / (T::PI() * d * d)
}

/// Gain relative to the reference geometry.
pub fn relative_gain<T: Real>(geometry: &ChannelGeometry<T>) -> T {
    geometric_gain(geometry) / geometric_gain(&geometry.reference())
}

/// Everything the channel needs besides the frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams<T> {
    pub geometry: ChannelGeometry<T>,
    /// Standard deviation of the additive sensor noise, in normalised units.
    pub noise_sigma: T,
    /// Display plane → sensor plane.
    pub affine: Homography<T>,
    pub camera_fps: T,
    pub quantizer_bits: u8,
    pub rng_seed: u64,
}

impl<T: Real> ChannelParams<T> {
    /// Transparent channel: reference geometry, no noise, identity warp,
    /// 8-bit output.
    pub fn transparent(camera_fps: T) -> Result<Self> {
        let params = ChannelParams {
            geometry: ChannelGeometry::aligned(T::lit(REFERENCE_DISTANCE_M), T::lit(0.25), T::lit(1e-4))?,
            noise_sigma: T::zero(),
            affine: Homography::identity(),
            camera_fps,
            quantizer_bits: 8,
            rng_seed: 0,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= T::zero()) {
            return Err(Error::InvalidChannel(format!("noise sigma must be >= 0, got {}", self.noise_sigma)));
        }
        if !(self.camera_fps.is_finite() && self.camera_fps > T::zero()) {
            return Err(Error::InvalidChannel(format!("camera fps must be positive, got {}", self.camera_fps)));
        }
        if !(1..=8).contains(&self.quantizer_bits) {
            return Err(Error::InvalidChannel(format!(
                "quantizer bits must be in 1..=8, got {}",
                self.quantizer_bits
            )));
        }
        Ok(())
    }

    /// Camera frame rate must be at least twice the symbol rate.
    pub fn check_sampling(&self, symbol_rate: T) -> Result<()> {
        if self.camera_fps < T::lit(2.0) * symbol_rate {
            return Err(Error::SamplingGuard {
                camera_fps: self.camera_fps.as_f64(),
                symbol_rate: symbol_rate.as_f64(),
            });
        }
        Ok(())
    }
}

/// Standard normal draws for one camera frame.
pub fn sensor_noise<T: Real>(seed: u64, frame_index: u64) -> impl Iterator<Item = T>
where
    StandardNormal: Distribution<T>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(frame_index);
    std::iter::repeat_with(move || StandardNormal.sample(&mut rng))
}

/// Number of camera frames covering `display_frames` shown at `display_fps`.
pub fn camera_frame_count<T: Real>(display_frames: usize, display_fps: T, camera_fps: T) -> usize {
    let exact = T::lit(display_frames as f64) * camera_fps / display_fps;
    // tolerate round-off when the ratio is an integer
    let n = (exact + T::lit(1e-9)).floor().to_usize().unwrap_or(0);
    n.max(1)
}

/// Display frame on screen nearest to camera frame `camera_index`.
pub fn source_frame_index<T: Real>(camera_index: usize, display_fps: T, camera_fps: T, display_frames: usize) -> usize {
    let t = T::lit(camera_index as f64) * display_fps / camera_fps;
    round_half_up(t).to_usize().unwrap_or(0).min(display_frames - 1)
}

/// Runs the display frames through the simulated optical channel.
///
/// `symbol_rate`, when known, is checked against the sampling guard.
pub fn transmit<T: Real>(
    frames: &[FrameBuffer],
    display_fps: T,
    symbol_rate: Option<T>,
    params: &ChannelParams<T>,
) -> Result<Vec<FrameBuffer>>
where
    StandardNormal: Distribution<T>,
{
    if frames.is_empty() {
        return Err(Error::NoFrames);
    }
    params.validate()?;
    if !(display_fps.is_finite() && display_fps > T::zero()) {
        return Err(Error::InvalidChannel(format!("display fps must be positive, got {display_fps}")));
    }
    if let Some(rate) = symbol_rate {
        params.check_sampling(rate)?;
    }
    let count = camera_frame_count(frames.len(), display_fps, params.camera_fps);
    let first = &frames[0];
    if frames.iter().any(|f| !f.same_shape(first)) {
        return Err(Error::InvalidFrame("frames in a sequence must share dimensions".into()));
    }
    let gain = relative_gain(&params.geometry);
    let plan = WarpPlan::new(first.width(), first.height(), &params.affine);
    (0..count)
        .into_par_iter()
        .map(|i| {
            let src = &frames[source_frame_index(i, display_fps, params.camera_fps, frames.len())];
            render_camera_frame(src, i as u64, gain, &plan, params)
        })
        .collect()
}

fn render_camera_frame<T: Real>(
    src: &FrameBuffer,
    index: u64,
    gain: T,
    plan: &WarpPlan<T>,
    params: &ChannelParams<T>,
) -> Result<FrameBuffer>
where
    StandardNormal: Distribution<T>,
{
    let full = T::lit(255.0);
    let levels = T::lit(((1u32 << params.quantizer_bits) - 1) as f64);
    let to_output = |k: T| -> u8 {
        if params.quantizer_bits == 8 {
            k.to_u8().unwrap_or(255)
        } else {
            round_half_up(k * full / levels).to_u8().unwrap_or(255)
        }
    };
    let quantize = |x: T| to_output(round_half_up(x.max(T::zero()).min(T::one()) * levels));
    let scale = gain / full;
    let counts = plan.apply(src);
    let pixels = if params.noise_sigma > T::zero() {
        counts
            .iter()
            .zip(sensor_noise::<T>(params.rng_seed, index))
            .map(|(&c, z)| quantize(c * scale + params.noise_sigma * z))
            .collect()
    } else {
        counts.iter().map(|&c| quantize(c * scale)).collect()
    };
    FrameBuffer::new(src.width(), src.height(), pixels)
}

/// Mean of one colour component over every pixel of every frame, in `[0, 1]`.
pub fn mean_received_amplitude<T: Real>(frames: &[FrameBuffer], channel: ColorChannel) -> Result<T> {
    if frames.is_empty() {
        return Err(Error::NoFrames);
    }
    let sum: f64 = frames.iter().map(|f| f.channel_mean::<f64>(channel)).sum();
    Ok(T::lit(sum / frames.len() as f64))
}
