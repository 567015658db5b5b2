//! Planar projective transforms and bilinear image warping.
//!
//! Pixel coordinates put pixel centres on integers: pixel `(x, y)` of a
//! frame sits at the point `(x, y)`. A frame therefore covers
//! `[0, width−1] × [0, height−1]`, and warping with the identity reads every
//! pixel exactly at its own centre.

use std::ops::Mul;

use crate::error::{Error, Result};
use crate::frame::{ColorChannel, FrameBuffer};
use crate::num::{to_count, Real};

/// A 3×3 row-major homography together with its inverse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography<T> {
    forward: [T; 9],
    inverse: [T; 9],
}

impl<T: Real> Homography<T> {
    /// Builds a homography from a row-major matrix, normalising `h22` to 1.
    ///
    /// Rejects matrices whose bottom-right entry is zero, whose upper-left
    /// 2×2 block is singular, or which are singular overall.
    pub fn from_matrix(m: [T; 9]) -> Result<Self> {
        if m.iter().any(|v| !v.is_finite()) || m[8].abs() <= T::epsilon() {
            return Err(Error::SingularHomography);
        }
        let forward = m.map(|v| v / m[8]);
        let det2 = forward[0] * forward[4] - forward[1] * forward[3];
        if det2.abs() <= T::epsilon() {
            return Err(Error::SingularHomography);
        }
        let inverse = invert(&forward).ok_or(Error::SingularHomography)?;
        Ok(Homography { forward, inverse })
    }

    #[rustfmt::skip]
    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        let m = [o, z, z, z, o, z, z, z, o];
        Homography { forward: m, inverse: m }
    }

    #[rustfmt::skip]
    pub fn translate(tx: T, ty: T) -> Self {
        let (o, z) = (T::one(), T::zero());
        Homography {
            forward: [o, z, tx, z, o, ty, z, z, o],
            inverse: [o, z, -tx, z, o, -ty, z, z, o],
        }
    }

    /// Uniform scale about the origin.
    pub fn scale(s: T) -> Result<Self> {
        let z = T::zero();
        Self::from_matrix([s, z, z, z, s, z, z, z, T::one()])
    }

    /// Counter-clockwise (in image coordinates, y down: clockwise on screen)
    /// rotation about the origin by `angle` radians.
    #[rustfmt::skip]
    pub fn rotate(angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        let (o, z) = (T::one(), T::zero());
        Homography {
            forward: [c, -s, z, s, c, z, z, z, o],
            inverse: [c, s, z, -s, c, z, z, z, o],
        }
    }

    /// Rotation by `angle` and uniform `scale` about `(cx, cy)`.
    pub fn similarity_about(cx: T, cy: T, angle: T, scale: T) -> Result<Self> {
        Ok(Self::translate(cx, cy) * Self::rotate(angle) * Self::scale(scale)? * Self::translate(-cx, -cy))
    }

    /// Applies `self` first, then `other`.
    pub fn then(self, other: Homography<T>) -> Homography<T> {
        other * self
    }

    pub fn inverse(&self) -> Homography<T> {
        Homography { forward: self.inverse, inverse: self.forward }
    }

    pub fn matrix(&self) -> [T; 9] {
        self.forward
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }

    /// Maps a point; `None` when it lands on the line at infinity.
    pub fn apply(&self, x: T, y: T) -> Option<(T, T)> {
        project(&self.forward, x, y)
    }

    /// Maps a point through the inverse transform.
    pub fn apply_inverse(&self, x: T, y: T) -> Option<(T, T)> {
        project(&self.inverse, x, y)
    }
}

impl<T: Real> Mul for Homography<T> {
    type Output = Homography<T>;

    /// `(a * b)` applies `b` first, then `a`.
    fn mul(self, rhs: Homography<T>) -> Homography<T> {
        Homography { forward: mat_mul(&self.forward, &rhs.forward), inverse: mat_mul(&rhs.inverse, &self.inverse) }
    }
}

#[inline]
fn project<T: Real>(m: &[T; 9], x: T, y: T) -> Option<(T, T)> {
    let w = m[6] * x + m[7] * y + m[8];
    if w.abs() <= T::epsilon() {
        return None;
    }
    Some(((m[0] * x + m[1] * y + m[2]) / w, (m[3] * x + m[4] * y + m[5]) / w))
}

fn mat_mul<T: Real>(a: &[T; 9], b: &[T; 9]) -> [T; 9] {
    let mut out = [T::zero(); 9];
    for r in 0..3 {
        for c in 0..3 {
            out[r * 3 + c] = (0..3).map(|k| a[r * 3 + k] * b[k * 3 + c]).sum();
        }
    }
    let w = out[8];
    if w != T::zero() && w.is_finite() {
        out.iter_mut().for_each(|v| *v = *v / w);
    }
    out
}

fn invert<T: Real>(m: &[T; 9]) -> Option<[T; 9]> {
    let cof = [
        m[4] * m[8] - m[5] * m[7],
        m[5] * m[6] - m[3] * m[8],
        m[3] * m[7] - m[4] * m[6],
    ];
    let det = m[0] * cof[0] + m[1] * cof[1] + m[2] * cof[2];
    let scale = m.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
    if !det.is_finite() || det.abs() <= T::epsilon() * scale * scale * scale {
        return None;
    }
    let inv_det = T::one() / det;
    let adj = [
        cof[0],
        m[2] * m[7] - m[1] * m[8],
        m[1] * m[5] - m[2] * m[4],
        cof[1],
        m[0] * m[8] - m[2] * m[6],
        m[2] * m[3] - m[0] * m[5],
        cof[2],
        m[1] * m[6] - m[0] * m[7],
        m[0] * m[4] - m[1] * m[3],
    ];
    let mut out = adj.map(|v| v * inv_det);
    let w = out[8];
    if w.abs() > T::epsilon() {
        out = out.map(|v| v / w);
    }
    Some(out)
}

/// Bilinear interpolation footprint of one fractional position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Tap<T> {
    /// Byte offset of the top-left neighbour's red sample.
    base: usize,
    /// Byte offsets to the right and lower neighbours (0 on the last column/row).
    dx: usize,
    dy: usize,
    fx: T,
    fy: T,
}

impl<T: Real> Tap<T> {
    /// `None` outside `[0, width−1] × [0, height−1]`.
    #[inline]
    pub(crate) fn new(width: usize, height: usize, x: T, y: T) -> Option<Self> {
        let slack = T::lit(1e-6);
        let max_x = T::lit((width - 1) as f64);
        let max_y = T::lit((height - 1) as f64);
        if !(x >= -slack && y >= -slack && x <= max_x + slack && y <= max_y + slack) {
            return None;
        }
        let x = x.max(T::zero()).min(max_x);
        let y = y.max(T::zero()).min(max_y);
        let x0 = x.floor().to_usize().unwrap_or(0).min(width - 1);
        let y0 = y.floor().to_usize().unwrap_or(0).min(height - 1);
        Some(Tap {
            base: (y0 * width + x0) * 3,
            dx: if x0 + 1 < width { 3 } else { 0 },
            dy: if y0 + 1 < height { width * 3 } else { 0 },
            fx: x - T::lit(x0 as f64),
            fy: y - T::lit(y0 as f64),
        })
    }

    /// Interpolated value of colour component `c` in counts.
    #[inline]
    pub(crate) fn sample(&self, px: &[u8], c: usize) -> T {
        let at = |o: usize| T::lit(px[self.base + o + c] as f64);
        let (a00, a10, a01, a11) = (at(0), at(self.dx), at(self.dy), at(self.dx + self.dy));
        let top = a00 + (a10 - a00) * self.fx;
        let bottom = a01 + (a11 - a01) * self.fx;
        top + (bottom - top) * self.fy
    }
}

/// Samples one colour component at a fractional position, bilinearly.
///
/// Returns `None` outside `[0, width−1] × [0, height−1]`. The value is in
/// counts (0–255), not normalised.
#[inline]
pub fn sample_bilinear<T: Real>(frame: &FrameBuffer, channel: ColorChannel, x: T, y: T) -> Option<T> {
    Tap::new(frame.width(), frame.height(), x, y).map(|t| t.sample(frame.pixels(), channel.index()))
}

/// Warps `frame` by `h` into a frame of the same size: output pixel `p`
/// takes the bilinear sample of the input at `h⁻¹(p)`, or black when that
/// falls outside the input.
pub fn warp_frame<T: Real>(frame: &FrameBuffer, h: &Homography<T>) -> Result<FrameBuffer> {
    if h.is_identity() {
        return Ok(frame.clone());
    }
    let planes = WarpPlan::new(frame.width(), frame.height(), h).apply(frame);
    let pixels = planes.iter().map(|&v| to_count(v)).collect();
    FrameBuffer::new(frame.width(), frame.height(), pixels)
}

/// Source taps of every output pixel for one warp, reusable across frames
/// of the same size.
#[derive(Debug, Clone)]
pub(crate) struct WarpPlan<T> {
    width: usize,
    height: usize,
    /// `None` for the identity warp.
    taps: Option<Vec<Option<Tap<T>>>>,
}

impl<T: Real> WarpPlan<T> {
    pub(crate) fn new(width: usize, height: usize, h: &Homography<T>) -> Self {
        if h.is_identity() {
            return WarpPlan { width, height, taps: None };
        }
        let taps = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| {
                h.apply_inverse(T::lit(x as f64), T::lit(y as f64)).and_then(|(sx, sy)| Tap::new(width, height, sx, sy))
            })
            .collect();
        WarpPlan { width, height, taps: Some(taps) }
    }

    /// Interleaved RGB values in counts, before rounding.
    pub(crate) fn apply(&self, frame: &FrameBuffer) -> Vec<T> {
        debug_assert!(frame.width() == self.width && frame.height() == self.height);
        let px = frame.pixels();
        let Some(taps) = &self.taps else {
            return px.iter().map(|&v| T::lit(v as f64)).collect();
        };
        let mut out = vec![T::zero(); self.width * self.height * 3];
        for (o, tap) in out.chunks_exact_mut(3).zip(taps) {
            if let Some(t) = tap {
                for (c, v) in o.iter_mut().enumerate() {
                    *v = t.sample(px, c);
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn checker(w: usize, h: usize) -> FrameBuffer {
        let mut f = FrameBuffer::filled(w, h, [0, 0, 0]).unwrap();
        for y in 0..h {
            for x in 0..w {
                f.set_pixel(x, y, [(x * 7 + y * 3) as u8, (x * y) as u8, 200]);
            }
        }
        f
    }

    #[test]
    fn identity_warp_is_bit_exact() {
        let f = checker(17, 9);
        assert_eq!(warp_frame(&f, &Homography::<f64>::identity()).unwrap(), f);
        // identity built the long way round, so the fast path is not taken
        let h = Homography::<f64>::from_matrix([2.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 2.0]).unwrap();
        assert_eq!(warp_frame(&f, &h).unwrap(), f);
        let t = Homography::<f32>::translate(0.0, 0.0);
        assert_eq!(warp_frame(&f, &t).unwrap(), f);
    }

    #[test]
    fn singular_matrices_rejected() {
        assert_eq!(Homography::<f64>::from_matrix([0.0; 9]), Err(Error::SingularHomography));
        assert_eq!(
            Homography::<f64>::from_matrix([1.0, 2.0, 0.0, 2.0, 4.0, 0.0, 0.0, 0.0, 1.0]),
            Err(Error::SingularHomography)
        );
        assert_eq!(
            Homography::<f64>::from_matrix([1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]),
            Err(Error::SingularHomography)
        );
        assert!(Homography::<f64>::scale(0.0).is_err());
    }

    #[test]
    fn inverse_roundtrip() {
        let h = Homography::from_matrix([1.1, 0.2, 3.0, -0.1, 0.9, -2.0, 1e-4, 2e-4, 1.0]).unwrap();
        let (x, y) = h.apply(10.0, 20.0).unwrap();
        let (bx, by) = h.apply_inverse(x, y).unwrap();
        assert!((bx - 10.0f64).abs() < 1e-9 && (by - 20.0f64).abs() < 1e-9);
        let back = h * h.inverse();
        for (a, b) in back.matrix().iter().zip(Homography::<f64>::identity().matrix()) {
            assert!((*a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rotation_corners_match_direct_multiply() {
        let (w, hgt) = (64.0f64, 48.0f64);
        let (cx, cy) = ((w - 1.0) / 2.0, (hgt - 1.0) / 2.0);
        let angle = 10f64.to_radians();
        let h = Homography::similarity_about(cx, cy, angle, 1.0).unwrap();
        let (s, c) = angle.sin_cos();
        for (x, y) in [(0.0, 0.0), (w - 1.0, 0.0), (0.0, hgt - 1.0), (w - 1.0, hgt - 1.0)] {
            let expect = (cx + c * (x - cx) - s * (y - cy), cy + s * (x - cx) + c * (y - cy));
            let got = h.apply(x, y).unwrap();
            assert!((got.0 - expect.0).abs() < 1e-9 && (got.1 - expect.1).abs() < 1e-9);
        }
    }

    #[test]
    fn scale_then_inverse_preserves_interior_mean() {
        let f = checker(64, 48);
        let h = Homography::similarity_about(31.5, 23.5, 0.0, 2.0f64).unwrap();
        let there = warp_frame(&f, &h).unwrap();
        let back = warp_frame(&there, &h.inverse()).unwrap();
        // the doubled image only shows the central half; compare inside it
        let (x0, y0, x1, y1) = (20, 14, 44, 34);
        for ch in ColorChannel::ALL {
            let mean = |fr: &FrameBuffer| {
                let mut s = 0.0;
                for y in y0..y1 {
                    for x in x0..x1 {
                        s += fr.pixel(x, y)[ch.index()] as f64;
                    }
                }
                s / ((x1 - x0) * (y1 - y0)) as f64
            };
            assert!((mean(&f) - mean(&back)).abs() < 1.0, "{ch}: {} vs {}", mean(&f), mean(&back));
        }
    }

    #[test]
    fn outside_is_black() {
        let f = FrameBuffer::filled(8, 8, [200, 200, 200]).unwrap();
        let out = warp_frame(&f, &Homography::translate(4.0f64, 0.0)).unwrap();
        assert_eq!(out.pixel(0, 0), [0, 0, 0]);
        assert_eq!(out.pixel(3, 5), [0, 0, 0]);
        assert_eq!(out.pixel(4, 5), [200, 200, 200]);
    }

    #[test]
    fn bilinear_midpoint() {
        let mut f = FrameBuffer::filled(2, 1, [0, 0, 0]).unwrap();
        f.set_pixel(1, 0, [100, 0, 0]);
        assert_eq!(sample_bilinear(&f, ColorChannel::Red, 0.5f64, 0.0), Some(50.0));
        assert_eq!(sample_bilinear(&f, ColorChannel::Red, 1.5f64, 0.0), None);
    }
}
