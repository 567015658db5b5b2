//! Slow independent reference computations used to cross-check the fast
//! paths in tests. Compiled only for tests or with the `oracles` feature.

use rayon::prelude::*;

use crate::channel::ChannelGeometry;

/// Gain between a square Lambertian emitter and a square aperture by direct
/// midpoint integration over an `n × n` grid on each surface.
///
/// The emitter is centred on the origin facing `+z`, tilted by `φ` about the
/// y axis. The aperture is centred on `(0, 0, d)` facing `−z`, tilted by `θ`
/// about the x axis.
pub fn integrated_gain(geometry: &ChannelGeometry<f64>, n: usize) -> f64 {
    let (d, phi, theta) = (geometry.distance(), geometry.phi(), geometry.theta());
    let (ls, la) = (geometry.display_area().sqrt(), geometry.aperture_area().sqrt());
    let (das, daa) = (geometry.display_area() / (n * n) as f64, geometry.aperture_area() / (n * n) as f64);
    let mid = |i: usize, side: f64| (i as f64 + 0.5) / n as f64 * side - side / 2.0;

    let ns = [phi.sin(), 0.0, phi.cos()];
    let na = [0.0, theta.sin(), -theta.cos()];
    let emitter: Vec<[f64; 3]> = (0..n * n)
        .map(|k| {
            let (u, v) = (mid(k % n, ls), mid(k / n, ls));
            [u * phi.cos(), v, -u * phi.sin()]
        })
        .collect();
    let aperture: Vec<[f64; 3]> = (0..n * n)
        .map(|k| {
            let (u, v) = (mid(k % n, la), mid(k / n, la));
            [u, v * theta.cos(), d + v * theta.sin()]
        })
        .collect();

    let total: f64 = emitter
        .par_iter()
        .map(|p| {
            let mut acc = 0.0;
            for q in &aperture {
                let r = [q[0] - p[0], q[1] - p[1], q[2] - p[2]];
                let r2 = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
                let cos_e = (ns[0] * r[0] + ns[1] * r[1] + ns[2] * r[2]).max(0.0);
                let cos_a = -(na[0] * r[0] + na[1] * r[1] + na[2] * r[2]).min(0.0);
                acc += cos_e * cos_a / (r2 * r2);
            }
            acc
        })
        .sum();
    total * das * daa / std::f64::consts::PI
}

/// Gaussian upper tail by composite Simpson integration of the density on
/// `[0, |x|]` with `intervals` (rounded up to even) panels.
pub fn q_by_quadrature(x: f64, intervals: usize) -> f64 {
    let n = intervals.max(2).next_multiple_of(2);
    let a = x.abs();
    let h = a / n as f64;
    let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = pdf(0.0) + pdf(a);
    for i in 1..n {
        s += pdf(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    let area = s * h / 3.0;
    if x >= 0.0 {
        0.5 - area
    } else {
        0.5 + area
    }
}

/// Index of the nearest level by exhaustive search; ties go to the higher
/// index.
pub fn nearest_level(value: f64, means: &[f64]) -> u32 {
    let mut best = 0;
    for (k, &m) in means.iter().enumerate() {
        if (value - m).abs() <= (value - means[best]).abs() {
            best = k;
        }
    }
    best as u32
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_matches_erfc() {
        for x in [-1.5, 0.0, 0.5, 2.0, 4.0] {
            let (a, b) = (q_by_quadrature(x, 4000), crate::analysis::q_function(x));
            assert!((a - b).abs() < 1e-12, "x={x} quadrature={a} erfc={b}");
        }
    }

    #[test]
    fn far_field_integration_matches_small_element_formula() {
        let g = ChannelGeometry::new(2.0, 0.2, 0.1, 0.01, 0.0004).unwrap();
        let exact = integrated_gain(&g, 16);
        let approx = crate::channel::geometric_gain(&g);
        assert!((exact / approx - 1.0).abs() < 0.01);
    }

    #[test]
    fn nearest_level_ties_go_up() {
        assert_eq!(nearest_level(0.5, &[0.0, 1.0]), 1);
        assert_eq!(nearest_level(0.49, &[0.0, 1.0]), 0);
        assert_eq!(nearest_level(7.0, &[0.0, 1.0, 2.0]), 2);
    }
}
