//! Binary error-probability model, its Monte Carlo check, and the distance
//! sweep that ties the whole simulator back to the inverse-square law.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::channel::{transmit, ChannelParams};
use crate::decoder::{deframe, estimate_levels, extract_signal, symbol_statistics, synchronize};
use crate::encoder::{encode_stream, frame_payload};
use crate::error::{Error, Result};
use crate::frame::{FrameBuffer, Region};
use crate::modulation::{bits_to_symbols, symbols_to_bits, Bitstream, ModulationParams};
use crate::num::Real;

/// Upper tail of the standard normal, `Q(x) = erfc(x/√2)/2`.
pub fn q_function<T: Real>(x: T) -> T {
    (x * T::FRAC_1_SQRT_2()).erfc() / T::lit(2.0)
}

/// Two Gaussian received levels and a decision threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerModel<T> {
    pub mu0: T,
    pub mu1: T,
    pub sigma0: T,
    pub sigma1: T,
    pub p0: T,
    pub p1: T,
    pub thr: T,
}

impl<T: Real> BerModel<T> {
    pub fn new(mu0: T, mu1: T, sigma0: T, sigma1: T, p0: T, thr: T) -> Result<Self> {
        let p1 = T::one() - p0;
        if !(p0 >= T::zero() && p0 <= T::one()) {
            return Err(Error::InvalidAnalysis(format!("prior p0={p0} outside [0, 1]")));
        }
        if !(sigma0 > T::zero() && sigma1 > T::zero()) {
            return Err(Error::InvalidAnalysis("level standard deviations must be positive".into()));
        }
        // equal means are allowed: they model indistinguishable levels
        if !(mu1 >= mu0) || !thr.is_finite() {
            return Err(Error::InvalidAnalysis(format!("need mu1 >= mu0 and a finite threshold, got mu0={mu0} mu1={mu1}")));
        }
        Ok(BerModel { mu0, mu1, sigma0, sigma1, p0, p1, thr })
    }

    /// Equal priors, equal variances, threshold at the midpoint.
    pub fn symmetric(mu0: T, mu1: T, sigma: T) -> Result<Self> {
        Self::new(mu0, mu1, sigma, sigma, T::lit(0.5), (mu0 + mu1) / T::lit(2.0))
    }

    /// Symmetric model normalised so that `(μ1 − μ0)/(2σ) = q_arg`.
    pub fn with_q_argument(q_arg: T) -> Result<Self> {
        Self::symmetric(T::zero(), T::one(), T::one() / (T::lit(2.0) * q_arg))
    }
}

/// `(p(1|0), p(0|1))`.
pub fn conditional_error_probs<T: Real>(model: &BerModel<T>) -> (T, T) {
    (
        q_function((model.thr - model.mu0) / model.sigma0),
        q_function((model.mu1 - model.thr) / model.sigma1),
    )
}

/// `p(0)·p(1|0) + p(1)·p(0|1)`.
pub fn theoretical_ber<T: Real>(model: &BerModel<T>) -> T {
    let (p10, p01) = conditional_error_probs(model);
    model.p0 * p10 + model.p1 * p01
}

/// Closed form for the symmetric case, `Q((μ1 − μ0)/(2σ))`.
pub fn symmetric_ber<T: Real>(delta_mu: T, sigma: T) -> T {
    if sigma > T::zero() {
        q_function(delta_mu / (T::lit(2.0) * sigma))
    } else if delta_mu > T::zero() {
        T::zero()
    } else {
        T::lit(0.5)
    }
}

/// Monte Carlo error count with a 3σ normal-approximation interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate<T> {
    pub ber: T,
    pub halfwidth: T,
    pub errors: u64,
    pub symbols: u64,
}

impl<T: Real> MonteCarloEstimate<T> {
    pub fn from_counts(errors: u64, symbols: u64) -> Self {
        let n = T::lit(symbols as f64);
        let ber = T::lit(errors as f64) / n;
        MonteCarloEstimate { ber, halfwidth: binomial_halfwidth(ber, symbols), errors, symbols }
    }

    pub fn contains(&self, p: T) -> bool {
        (self.ber - p).abs() <= self.halfwidth
    }
}

/// `3·√(p(1−p)/n)`.
pub fn binomial_halfwidth<T: Real>(p: T, n: u64) -> T {
    T::lit(3.0) * (p * (T::one() - p) / T::lit(n as f64)).sqrt()
}

/// Smallest symbol count accepted by [`monte_carlo_ber`].
pub const MIN_MONTE_CARLO_SYMBOLS: u64 = 10_000;

/// Symbols per independent random stream.
pub const MONTE_CARLO_BLOCK: u64 = 8192;

/// Draws `n_symbols` symbols from the model, thresholds them and counts
/// errors. Block `b` of [`MONTE_CARLO_BLOCK`] symbols uses the ChaCha8
/// stream `(seed, b)`, so the result does not depend on thread scheduling.
pub fn monte_carlo_ber<T: Real>(model: &BerModel<T>, n_symbols: u64, seed: u64) -> Result<MonteCarloEstimate<T>>
where
    StandardNormal: Distribution<T>,
{
    if n_symbols < MIN_MONTE_CARLO_SYMBOLS {
        return Err(Error::InvalidAnalysis(format!(
            "Monte Carlo needs at least {MIN_MONTE_CARLO_SYMBOLS} symbols, got {n_symbols}"
        )));
    }
    let blocks = n_symbols.div_ceil(MONTE_CARLO_BLOCK);
    let errors = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let len = MONTE_CARLO_BLOCK.min(n_symbols - b * MONTE_CARLO_BLOCK);
            monte_carlo_block(model, seed, b, len)
        })
        .sum();
    Ok(MonteCarloEstimate::from_counts(errors, n_symbols))
}

/// Error count of one block of symbols.
pub fn monte_carlo_block<T: Real>(model: &BerModel<T>, seed: u64, block: u64, len: u64) -> u64
where
    StandardNormal: Distribution<T>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    let p1 = model.p1.as_f64();
    let mut errors = 0;
    for _ in 0..len {
        let one = rng.random::<f64>() < p1;
        let z: T = StandardNormal.sample(&mut rng);
        let received = if one { model.mu1 + model.sigma1 * z } else { model.mu0 + model.sigma0 * z };
        if (received >= model.thr) != one {
            errors += 1;
        }
    }
    errors
}

/// Least-squares slope of `ln y` against `ln x`. Needs at least two points
/// with positive coordinates and distinct `x`.
pub fn fit_log_log_slope<T: Real>(points: &[(T, T)]) -> Option<T> {
    let logs: Vec<(T, T)> =
        points.iter().filter(|(x, y)| *x > T::zero() && *y > T::zero()).map(|&(x, y)| (x.ln(), y.ln())).collect();
    if logs.len() < 2 {
        return None;
    }
    let n = T::lit(logs.len() as f64);
    let mx = logs.iter().map(|p| p.0).sum::<T>() / n;
    let my = logs.iter().map(|p| p.1).sum::<T>() / n;
    let sxx = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum::<T>();
    let sxy = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<T>();
    if sxx <= T::zero() {
        return None;
    }
    Some(sxy / sxx)
}

/// Inputs of a distance sweep. `channel.geometry` supplies everything but
/// the distance, which is replaced row by row.
#[derive(Debug, Clone)]
pub struct SweepConfig<T> {
    pub params: ModulationParams<T>,
    pub channel: ChannelParams<T>,
    pub carrier: Vec<FrameBuffer>,
    pub payload: Bitstream,
    /// Averaging region in rectified coordinates; whole frame when `None`.
    pub region: Option<Region>,
}

/// What one distance produced. Level statistics are measured over every
/// framed symbol, grouped by what was actually sent.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepMeasurement<T> {
    /// Mean decision statistic of the top level minus that of level 0.
    pub delta_mu: T,
    /// Pooled standard deviation of the per-symbol decision statistic.
    pub decision_sigma: T,
    /// Threshold the receiver derived from the preamble (binary only).
    pub threshold: Option<T>,
    /// Two-level Gaussian error probability at the receiver's threshold;
    /// only defined for binary signalling.
    pub pe_theory: Option<T>,
    /// Fraction of framed bits decided wrongly.
    pub pe_measured: T,
    pub ci_halfwidth: T,
    pub bits_compared: usize,
    pub crc_ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow<T> {
    pub distance: T,
    pub outcome: std::result::Result<SweepMeasurement<T>, Error>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult<T> {
    pub rows: Vec<SweepRow<T>>,
    /// Fitted slope of `ln Δμ` against `ln d` over the successful rows.
    pub slope: Option<T>,
}

impl<T: Real> SweepResult<T> {
    pub fn successes(&self) -> usize {
        self.rows.iter().filter(|r| r.outcome.is_ok()).count()
    }

    pub fn delta_mu(&self, distance: T) -> Option<T> {
        self.rows
            .iter()
            .find(|r| r.distance == distance)
            .and_then(|r| r.outcome.as_ref().ok())
            .map(|m| m.delta_mu)
    }
}

/// Minimum number of distances a sweep accepts.
pub const MIN_SWEEP_POINTS: usize = 3;

/// Runs encode → channel → decode at every distance and fits the
/// distance law. Failures are recorded per row and the sweep continues.
pub fn distance_sweep<T: Real>(distances: &[T], config: &SweepConfig<T>) -> Result<SweepResult<T>>
where
    StandardNormal: Distribution<T>,
{
    if distances.len() < MIN_SWEEP_POINTS {
        return Err(Error::InvalidAnalysis(format!(
            "a sweep needs at least {MIN_SWEEP_POINTS} distances, got {}",
            distances.len()
        )));
    }
    if let Some(d) = distances.iter().find(|d| !(**d > T::zero() && d.is_finite())) {
        return Err(Error::InvalidAnalysis(format!("distances must be positive, got {d}")));
    }
    let frames = encode_stream(&config.payload, &config.carrier, &config.params)?;
    let sent = bits_to_symbols(&frame_payload(&config.payload, &config.params)?, &config.params);
    let rows: Vec<SweepRow<T>> = distances
        .iter()
        .map(|&d| SweepRow { distance: d, outcome: measure_at(d, &frames, &sent, config) })
        .collect();
    let points: Vec<(T, T)> =
        rows.iter().filter_map(|r| r.outcome.as_ref().ok().map(|m| (r.distance, m.delta_mu))).collect();
    Ok(SweepResult { slope: fit_log_log_slope(&points), rows })
}

fn measure_at<T: Real>(
    distance: T,
    frames: &[FrameBuffer],
    sent: &[u32],
    config: &SweepConfig<T>,
) -> Result<SweepMeasurement<T>>
where
    StandardNormal: Distribution<T>,
{
    let params = &config.params;
    let mut channel = config.channel;
    channel.geometry = channel.geometry.at_distance(distance)?;
    let received = transmit(frames, params.frame_rate(), Some(params.symbol_rate()), &channel)?;
    let first = &received[0];
    let region = config.region.unwrap_or_else(|| Region::full(first.width(), first.height()));
    let series = extract_signal(&received, &channel.affine.inverse(), region, params.channel(), channel.camera_fps)?;
    let sync = synchronize(&series, params, channel.camera_fps)?;
    let levels = estimate_levels(&series, &sync, params)?;
    let stats = symbol_statistics(&series, &sync);
    let decided: Vec<u32> = stats.iter().map(|&v| levels.decide(v)).collect();
    let bits = symbols_to_bits(&decided, params)?;
    let sent_bits = symbols_to_bits(sent, params)?;

    let compared = sent_bits.len();
    let errors = bits.slice(0, bits.len().min(compared)).hamming_distance(&sent_bits);
    let pe_measured = T::lit(errors as f64 / compared as f64);

    let top = params.m() - 1;
    let (low, high) = split_by_sent(&stats, sent, top);
    if low.is_empty() || high.is_empty() {
        return Err(Error::InvalidAnalysis("the received run does not cover both extreme levels".into()));
    }
    let (mu0, mu1) = (mean(&low), mean(&high));
    let dof = (low.len() + high.len()).saturating_sub(2).max(1);
    let decision_sigma = ((sum_sq(&low, mu0) + sum_sq(&high, mu1)) / T::lit(dof as f64)).sqrt();

    let (threshold, pe_theory) = if params.m() == 2 {
        let thr = levels.thresholds[0];
        let p0 = T::lit(low.len() as f64 / (low.len() + high.len()) as f64);
        let pe = if decision_sigma > T::zero() && mu1 >= mu0 {
            BerModel::new(mu0, mu1, decision_sigma, decision_sigma, p0, thr).ok().map(|m| theoretical_ber(&m))
        } else {
            None
        };
        (Some(thr), pe)
    } else {
        (None, None)
    };
    let crc_ok = deframe(&bits, params).map(|f| f.crc_ok).unwrap_or(false);
    Ok(SweepMeasurement {
        delta_mu: mu1 - mu0,
        decision_sigma,
        threshold,
        pe_theory,
        pe_measured,
        ci_halfwidth: binomial_halfwidth(pe_measured, compared as u64),
        bits_compared: compared,
        crc_ok,
    })
}

fn split_by_sent<T: Real>(stats: &[T], sent: &[u32], top: u32) -> (Vec<T>, Vec<T>) {
    let mut low = Vec::new();
    let mut high = Vec::new();
    for (&v, &s) in stats.iter().zip(sent) {
        if s == 0 {
            low.push(v);
        } else if s == top {
            high.push(v);
        }
    }
    (low, high)
}

fn mean<T: Real>(v: &[T]) -> T {
    v.iter().copied().sum::<T>() / T::lit(v.len() as f64)
}

fn sum_sq<T: Real>(v: &[T], m: T) -> T {
    v.iter().map(|&x| (x - m) * (x - m)).sum()
}
