//! Receive side: rectification, signal extraction, preamble lock, level
//! estimation, symbol decisions and deframing.

use rayon::prelude::*;

use crate::encoder::{header_bits, payload_crc, preamble_symbols, CRC_FIELD_BITS, LENGTH_FIELD_BITS, PREAMBLE_SYMBOLS};
use crate::error::{Error, Result};
use crate::frame::{ColorChannel, FrameBuffer, Region};
use crate::homography::{Homography, Tap};
use crate::modulation::{symbols_to_bits, Bitstream, ModulationParams, SymbolSeries};
use crate::num::{round_half_up, Real};

/// Minimum normalised correlation accepted as a preamble lock.
pub const SYNC_THRESHOLD: f64 = 0.5;

/// Offsets whose correlation is within this margin of the global peak are
/// treated as ties; the earliest one wins. A payload that happens to repeat
/// the preamble pattern would otherwise compete with the real preamble.
pub const SYNC_TIE_MARGIN: f64 = 0.05;

/// Where the preamble starts in the received series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncResult<T> {
    /// Camera frame index of the first preamble symbol.
    pub start_offset: usize,
    /// Camera frames per symbol.
    pub frames_per_symbol: T,
    pub peak_correlation: T,
}

impl<T: Real> SyncResult<T> {
    /// Half-open range of camera frames in the central half of symbol `s`.
    pub fn central_window(&self, symbol: usize) -> (usize, usize) {
        let f = self.frames_per_symbol;
        let start = T::lit(self.start_offset as f64) + T::lit(symbol as f64) * f;
        let a = round_half_up(start + T::lit(0.25) * f).to_usize().unwrap_or(0);
        let b = round_half_up(start + T::lit(0.75) * f).to_usize().unwrap_or(0);
        (a, b.max(a + 1))
    }

    /// Number of symbols whose central window lies inside a series of `len`.
    pub fn symbols_available(&self, len: usize) -> usize {
        let mut n = 0;
        while self.central_window(n).1 <= len {
            n += 1;
        }
        n
    }
}

/// Level means and decision thresholds estimated from the preamble.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelEstimate<T> {
    /// Mean of the level-0 preamble samples.
    pub mu0: T,
    /// Mean of the top-level preamble samples.
    pub mu1: T,
    /// Pooled per-sample standard deviation of the two preamble groups.
    pub sigma: T,
    /// Expected mean of every level, `mu0` to `mu1` in equal steps.
    pub means: Vec<T>,
    /// `M − 1` boundaries, midway between adjacent means.
    pub thresholds: Vec<T>,
}

impl<T: Real> LevelEstimate<T> {
    /// Builds levels from the two extremes. Fails unless `mu1 > mu0`.
    pub fn from_extremes(mu0: T, mu1: T, sigma: T, m: u32) -> Result<Self> {
        if !(mu1 > mu0) {
            return Err(Error::DegenerateLevels { mu0: mu0.as_f64(), mu1: mu1.as_f64() });
        }
        let step = (mu1 - mu0) / T::lit((m - 1) as f64);
        let means: Vec<T> = (0..m).map(|k| if k == m - 1 { mu1 } else { mu0 + step * T::lit(k as f64) }).collect();
        let thresholds = means.windows(2).map(|w| (w[0] + w[1]) / T::lit(2.0)).collect();
        Ok(LevelEstimate { mu0, mu1, sigma, means, thresholds })
    }

    /// Symbol index for a decision statistic: number of thresholds at or
    /// below it. A value exactly on a threshold goes to the higher symbol.
    pub fn decide(&self, value: T) -> u32 {
        self.thresholds.iter().filter(|&&t| value >= t).count() as u32
    }
}

/// Payload recovered from a bit string, with its integrity check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Deframed {
    pub payload: Bitstream,
    pub declared_length: usize,
    pub received_crc: u32,
    pub computed_crc: u32,
    pub crc_ok: bool,
}

/// Everything the receiver found out about one transmission.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeReport<T> {
    pub payload: Bitstream,
    pub symbol_series: SymbolSeries<T>,
    pub sync: SyncResult<T>,
    pub levels: LevelEstimate<T>,
    /// Every symbol decided after the preamble start.
    pub symbols: Vec<u32>,
    pub declared_length: usize,
    pub crc_ok: bool,
    /// Fraction of reference bits decoded wrongly, when a reference is known.
    pub ber_vs_reference: Option<T>,
}

/// Receiver configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderConfig<T> {
    pub params: ModulationParams<T>,
    pub camera_fps: T,
    /// Sensor plane → display plane.
    pub affine_inverse: Homography<T>,
    /// Averaging region in rectified (display) coordinates; whole frame when
    /// `None`.
    pub region: Option<Region>,
    pub reference: Option<Bitstream>,
}

impl<T: Real> DecoderConfig<T> {
    pub fn new(params: ModulationParams<T>, camera_fps: T) -> Self {
        DecoderConfig { params, camera_fps, affine_inverse: Homography::identity(), region: None, reference: None }
    }
}

/// Per-frame mean of one colour component over a rectified region, in `[0, 1]`.
///
/// Region pixels whose pre-image falls outside the captured frame are
/// skipped rather than counted as black.
pub fn extract_signal<T: Real>(
    frames: &[FrameBuffer],
    affine_inverse: &Homography<T>,
    region: Region,
    channel: ColorChannel,
    camera_fps: T,
) -> Result<SymbolSeries<T>> {
    let first = frames.first().ok_or(Error::NoFrames)?;
    if !region.fits(first.width(), first.height()) {
        return Err(Error::EmptyRegion);
    }
    // Sensor taps for each region pixel; the same for every frame.
    let identity = affine_inverse.is_identity();
    let (w, h) = (first.width(), first.height());
    let taps: Vec<Tap<T>> = if identity {
        Vec::new()
    } else {
        (region.y..region.y + region.height)
            .flat_map(|y| (region.x..region.x + region.width).map(move |x| (x, y)))
            .filter_map(|(x, y)| affine_inverse.apply_inverse(T::lit(x as f64), T::lit(y as f64)))
            .filter_map(|(sx, sy)| Tap::new(w, h, sx, sy))
            .collect()
    };
    if !identity && taps.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let c = channel.index();
    let values = frames
        .par_iter()
        .map(|frame| {
            if !frame.same_shape(first) {
                return Err(Error::InvalidFrame("frames in a sequence must share dimensions".into()));
            }
            if identity {
                let mut sum = 0u64;
                for y in region.y..region.y + region.height {
                    for x in region.x..region.x + region.width {
                        sum += frame.pixel(x, y)[channel.index()] as u64;
                    }
                }
                let n = (region.width * region.height) as f64;
                return Ok(T::lit(sum as f64 / n / 255.0));
            }
            let px = frame.pixels();
            let sum = taps.iter().map(|t| t.sample(px, c)).fold(T::zero(), |s, v| s + v);
            Ok(sum / T::lit(taps.len() as f64) / T::lit(255.0))
        })
        .collect::<Result<Vec<T>>>()?;
    SymbolSeries::new(values, camera_fps)
}

/// Camera frames per symbol for a given camera rate.
pub fn frames_per_symbol<T: Real>(params: &ModulationParams<T>, camera_fps: T) -> T {
    camera_fps * T::lit(params.symbol_duration_frames() as f64) / params.frame_rate()
}

/// Ideal preamble as sampled by the camera: 1 for the top level, 0 for level 0.
pub fn preamble_template<T: Real>(frames_per_symbol: T) -> Vec<T> {
    let len = round_half_up(T::lit(PREAMBLE_SYMBOLS as f64) * frames_per_symbol).to_usize().unwrap_or(0);
    (0..len)
        .map(|j| {
            let s = (T::lit(j as f64) / frames_per_symbol + T::lit(1e-9)).floor().to_usize().unwrap_or(0);
            if s.is_multiple_of(2) {
                T::one()
            } else {
                T::zero()
            }
        })
        .collect()
}

/// Pearson correlation of two equal-length slices; 0 when either is constant.
pub fn normalized_correlation<T: Real>(a: &[T], b: &[T]) -> T {
    let n = T::lit(a.len() as f64);
    let ma = a.iter().copied().sum::<T>() / n;
    let mb = b.iter().copied().sum::<T>() / n;
    let (mut sab, mut saa, mut sbb) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab = sab + dx * dy;
        saa = saa + dx * dx;
        sbb = sbb + dy * dy;
    }
    let denom = (saa * sbb).sqrt();
    if denom <= T::zero() {
        T::zero()
    } else {
        sab / denom
    }
}

/// Locates the preamble by normalised cross-correlation against the ideal
/// template.
pub fn synchronize<T: Real>(
    series: &SymbolSeries<T>,
    params: &ModulationParams<T>,
    camera_fps: T,
) -> Result<SyncResult<T>> {
    let fps_rx = frames_per_symbol(params, camera_fps);
    let template = preamble_template(fps_rx);
    let values = series.values();
    if template.is_empty() || values.len() < template.len() {
        return Err(Error::SyncFailure { peak: 0.0, threshold: SYNC_THRESHOLD });
    }
    let scores: Vec<T> =
        (0..=values.len() - template.len()).map(|o| normalized_correlation(&values[o..o + template.len()], &template)).collect();
    let peak = scores.iter().copied().fold(T::neg_infinity(), T::max);
    if !(peak >= T::lit(SYNC_THRESHOLD)) {
        return Err(Error::SyncFailure { peak: peak.as_f64(), threshold: SYNC_THRESHOLD });
    }
    let floor = peak - T::lit(SYNC_TIE_MARGIN);
    let mut offset = scores.iter().position(|&s| s >= floor).unwrap_or(0);
    while offset + 1 < scores.len() && scores[offset + 1] > scores[offset] {
        offset += 1;
    }
    Ok(SyncResult { start_offset: offset, frames_per_symbol: fps_rx, peak_correlation: scores[offset] })
}

fn window<'a, T: Real>(series: &'a [T], sync: &SyncResult<T>, symbol: usize) -> Option<&'a [T]> {
    let (a, b) = sync.central_window(symbol);
    series.get(a..b)
}

/// Estimates `μ0`, `μ1` and the pooled `σ` from the preamble samples.
pub fn estimate_levels<T: Real>(
    series: &SymbolSeries<T>,
    sync: &SyncResult<T>,
    params: &ModulationParams<T>,
) -> Result<LevelEstimate<T>> {
    let top = params.m() - 1;
    let mut zeros = Vec::new();
    let mut ones = Vec::new();
    for (s, sym) in preamble_symbols(params.m()).into_iter().enumerate() {
        let w = window(series.values(), sync, s).ok_or(Error::SyncFailure {
            peak: sync.peak_correlation.as_f64(),
            threshold: SYNC_THRESHOLD,
        })?;
        if sym == top {
            ones.extend_from_slice(w);
        } else {
            zeros.extend_from_slice(w);
        }
    }
    let mean = |v: &[T]| v.iter().copied().sum::<T>() / T::lit(v.len() as f64);
    let (mu0, mu1) = (mean(&zeros), mean(&ones));
    let ss = |v: &[T], m: T| v.iter().map(|&x| (x - m) * (x - m)).sum::<T>();
    let dof = (zeros.len() + ones.len()).saturating_sub(2);
    let sigma = if dof == 0 { T::zero() } else { ((ss(&zeros, mu0) + ss(&ones, mu1)) / T::lit(dof as f64)).sqrt() };
    LevelEstimate::from_extremes(mu0, mu1, sigma, params.m())
}

/// Decision statistic of every complete symbol from the preamble onwards:
/// the mean of its central camera frames.
pub fn symbol_statistics<T: Real>(series: &SymbolSeries<T>, sync: &SyncResult<T>) -> Vec<T> {
    let n = sync.symbols_available(series.len());
    (0..n)
        .filter_map(|s| window(series.values(), sync, s))
        .map(|w| w.iter().copied().sum::<T>() / T::lit(w.len() as f64))
        .collect()
}

/// Decides every complete symbol from the preamble onwards.
pub fn decide_symbols<T: Real>(series: &SymbolSeries<T>, sync: &SyncResult<T>, levels: &LevelEstimate<T>) -> Vec<u32> {
    symbol_statistics(series, sync).into_iter().map(|v| levels.decide(v)).collect()
}

/// Parses `preamble ‖ length ‖ payload ‖ crc32` and checks the CRC.
pub fn deframe<T: Real>(bits: &Bitstream, params: &ModulationParams<T>) -> Result<Deframed> {
    let header = header_bits(params);
    if bits.len() < header {
        return Err(Error::HeaderTooShort { available: bits.len(), required: header });
    }
    let declared = bits.read_uint(header - LENGTH_FIELD_BITS, LENGTH_FIELD_BITS).unwrap_or(0) as usize;
    let available = bits.len() - header;
    if available < declared + CRC_FIELD_BITS {
        return Err(Error::TruncatedFrame { declared, available });
    }
    let payload = bits.slice(header, header + declared);
    let received_crc = bits.read_uint(header + declared, CRC_FIELD_BITS).unwrap_or(0) as u32;
    let computed_crc = payload_crc(&payload);
    Ok(Deframed { payload, declared_length: declared, received_crc, computed_crc, crc_ok: received_crc == computed_crc })
}

/// Full receive chain over captured camera frames.
pub fn decode<T: Real>(frames: &[FrameBuffer], config: &DecoderConfig<T>) -> Result<DecodeReport<T>> {
    let first = frames.first().ok_or(Error::NoFrames)?;
    let region = config.region.unwrap_or_else(|| Region::full(first.width(), first.height()));
    let series = extract_signal(frames, &config.affine_inverse, region, config.params.channel(), config.camera_fps)?;
    decode_series(series, config)
}

/// Receive chain starting from an already extracted series.
pub fn decode_series<T: Real>(series: SymbolSeries<T>, config: &DecoderConfig<T>) -> Result<DecodeReport<T>> {
    let params = &config.params;
    let sync = synchronize(&series, params, config.camera_fps)?;
    let levels = estimate_levels(&series, &sync, params)?;
    let symbols = decide_symbols(&series, &sync, &levels);
    let bits = symbols_to_bits(&symbols, params)?;
    let frame = deframe(&bits, params)?;
    let ber_vs_reference = config.reference.as_ref().map(|reference| {
        let errors = frame.payload.hamming_distance(reference);
        T::lit(errors as f64 / reference.len().max(1) as f64)
    });
    Ok(DecodeReport {
        payload: frame.payload,
        symbol_series: series,
        sync,
        levels,
        symbols,
        declared_length: frame.declared_length,
        crc_ok: frame.crc_ok,
        ber_vs_reference,
    })
}
