//! Text outputs: decode report, per-frame series CSV, sweep CSV, BER table.
//!
//! Floats are printed with Rust's shortest round-trip formatting so reruns
//! produce byte-identical files.

use std::fmt::Write as _;

use screenlink::analysis::{MonteCarloEstimate, SweepResult};
use screenlink::{Bitstream, DecodeReport, SymbolSeries};

pub const SERIES_HEADER: &str = "frame,time_s,amplitude";
pub const SWEEP_HEADER: &str = "d_m,delta_mu,pe_theory,pe_measured,ci_halfwidth,status";
pub const BER_HEADER: &str = "q_arg,pe_theory,pe_monte_carlo,ci_halfwidth,errors,symbols,within";

pub fn series_csv(series: &SymbolSeries<f64>) -> String {
    let mut out = String::from(SERIES_HEADER);
    out.push('\n');
    let rate = series.sample_rate();
    for (i, v) in series.values().iter().enumerate() {
        writeln!(out, "{i},{},{v}", i as f64 / rate).unwrap();
    }
    out
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";")
}

fn hex(bits: &Bitstream) -> String {
    bits.to_bytes_msb_first().iter().map(|b| format!("{b:02x}")).collect()
}

/// Report for a decode that reached deframing.
pub fn decode_report(report: &DecodeReport<f64>) -> String {
    let mut out = String::new();
    let status = if report.crc_ok { "ok" } else { "crc_failure" };
    writeln!(out, "status={status}").unwrap();
    writeln!(out, "crc_ok={}", report.crc_ok).unwrap();
    writeln!(out, "declared_length={}", report.declared_length).unwrap();
    writeln!(out, "payload_bits={}", report.payload.len()).unwrap();
    writeln!(out, "payload_hex={}", hex(&report.payload)).unwrap();
    writeln!(out, "payload_bin={}", report.payload).unwrap();
    if let Some(ber) = report.ber_vs_reference {
        writeln!(out, "ber_vs_reference={ber}").unwrap();
    }
    writeln!(out, "camera_frames={}", report.symbol_series.len()).unwrap();
    writeln!(out, "sync_offset={}", report.sync.start_offset).unwrap();
    writeln!(out, "frames_per_symbol={}", report.sync.frames_per_symbol).unwrap();
    writeln!(out, "peak_correlation={}", report.sync.peak_correlation).unwrap();
    writeln!(out, "mu0={}", report.levels.mu0).unwrap();
    writeln!(out, "mu1={}", report.levels.mu1).unwrap();
    writeln!(out, "sigma={}", report.levels.sigma).unwrap();
    writeln!(out, "level_means={}", join(&report.levels.means)).unwrap();
    writeln!(out, "thresholds={}", join(&report.levels.thresholds)).unwrap();
    writeln!(out, "symbols_decided={}", report.symbols.len()).unwrap();
    out
}

/// Report for a decode that stopped before a payload was recovered.
pub fn failure_report(status: &str, error: &dyn std::fmt::Display, frames: usize) -> String {
    format!("status={status}\ncrc_ok=false\nerror={error}\ncamera_frames={frames}\n")
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn sweep_csv(result: &SweepResult<f64>) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for row in &result.rows {
        match &row.outcome {
            Ok(m) => writeln!(
                out,
                "{},{},{},{},{},ok",
                row.distance,
                m.delta_mu,
                opt(m.pe_theory),
                m.pe_measured,
                m.ci_halfwidth
            ),
            Err(e) => writeln!(out, "{},,,,,{}", row.distance, status_of(e)),
        }
        .unwrap();
    }
    out
}

/// Short machine-readable name for a pipeline error.
pub fn status_of(e: &screenlink::Error) -> &'static str {
    use screenlink::Error::*;
    match e {
        SyncFailure { .. } => "sync_failure",
        DegenerateLevels { .. } => "degenerate_levels",
        HeaderTooShort { .. } | TruncatedFrame { .. } => "deframe_failure",
        SamplingGuard { .. } => "sampling_guard",
        _ => "error",
    }
}

pub struct BerRow {
    pub q_arg: f64,
    pub theory: f64,
    pub estimate: MonteCarloEstimate<f64>,
}

pub fn ber_csv(rows: &[BerRow]) -> String {
    let mut out = String::from(BER_HEADER);
    out.push('\n');
    for r in rows {
        let e = &r.estimate;
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.q_arg,
            r.theory,
            e.ber,
            e.halfwidth,
            e.errors,
            e.symbols,
            e.contains(r.theory)
        )
        .unwrap();
    }
    out
}
