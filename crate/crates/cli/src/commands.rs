use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use screenlink::analysis::{distance_sweep, monte_carlo_ber, theoretical_ber, BerModel, SweepConfig};
use screenlink::decoder::{decode_series, extract_signal, DecoderConfig};
use screenlink::encoder::{encode_stream, symbols_needed};
use screenlink::{transmit, Bitstream, CarrierKind, FrameBuffer, Region};

use crate::bfrs::Bfrs;
use crate::config::RunConfig;
use crate::output::{self, BerRow};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "screenlink", version, about = "Brightness-modulation screen-to-camera modem and channel simulator")]
pub struct Cli {
    /// key=value run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Overrides channel.seed (and the Monte Carlo seed for `ber`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Modulate a payload file onto carrier frames.
    Encode {
        /// Raw bytes, transmitted MSB first.
        #[arg(long)]
        payload: PathBuf,
        /// `gray128`, `gradient`, or a BFRS file.
        #[arg(long, default_value = "gray128")]
        carrier: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pass frames through the simulated display-to-camera channel.
    Channel {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recover the payload from captured frames.
    Decode {
        #[arg(long = "in")]
        input: PathBuf,
        /// key=value decode report.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Per-frame amplitude CSV.
        #[arg(long)]
        series: Option<PathBuf>,
        /// Recovered payload bytes.
        #[arg(long)]
        payload_out: Option<PathBuf>,
    },
    /// Run encode, channel and decode over a list of distances.
    Sweep {
        /// Comma-separated distances in metres; at least three.
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        distances: Vec<f64>,
        /// Payload bytes; defaults to the 16-bit alternating pattern.
        #[arg(long)]
        payload: Option<PathBuf>,
        #[arg(long, default_value = "gradient")]
        carrier: CarrierKind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Theoretical against Monte Carlo error rate for symmetric binary levels.
    Ber {
        /// Comma-separated values of (mu1 - mu0) / (2 sigma).
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,1.5,2,2.5,3")]
        q_args: Vec<f64>,
        #[arg(long, default_value_t = 100_000)]
        symbols: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.channel.rng_seed = seed;
    }
    Ok(config)
}

/// Runs one subcommand, printing a short summary to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let config = load_config(cli)?;
    let say = |out: &mut dyn Write, line: String| {
        let _ = writeln!(out, "{line}");
    };
    match &cli.command {
        Command::Encode { payload, carrier, out: path } => {
            let payload = Bitstream::from_bytes_msb_first(&read_file(payload)?);
            let carrier = load_carrier(carrier, &config)?;
            let params = &config.modulation;
            let frames = encode_stream(&payload, &carrier, params)?;
            let n = frames.len();
            Bfrs::new(frames, params.frame_rate())?.write(path)?;
            say(out, format!("frames written: {n}"));
            say(out, format!("symbols: {}", symbols_needed(payload.len(), params)));
            say(out, format!("bit rate: {} bit/s", params.bit_rate()));
        }
        Command::Channel { input, out: path } => {
            let src = Bfrs::read(input)?;
            if src.frames.is_empty() {
                return Err(screenlink::Error::NoFrames.into());
            }
            let rx = transmit(&src.frames, src.fps(), Some(config.modulation.symbol_rate()), &config.channel)?;
            let n = rx.len();
            Bfrs::new(rx, config.channel.camera_fps)?.write(path)?;
            say(out, format!("frames written: {n}"));
        }
        Command::Decode { input, report, series, payload_out } => {
            return decode(&config, input, report.as_deref(), series.as_deref(), payload_out.as_deref(), out);
        }
        Command::Sweep { distances, payload, carrier, out: path } => {
            if distances.len() < screenlink::analysis::MIN_SWEEP_POINTS {
                return Err(CliError::Usage(format!("sweep needs at least 3 distances, got {}", distances.len())));
            }
            let payload = match payload {
                Some(p) => Bitstream::from_bytes_msb_first(&read_file(p)?),
                None => "1010101010101010".parse().expect("constant pattern"),
            };
            let sweep = SweepConfig {
                params: config.modulation,
                channel: config.channel,
                carrier: vec![carrier.frame(config.carrier_width, config.carrier_height)?],
                payload,
                region: config.region,
            };
            let result = distance_sweep(distances, &sweep)?;
            if let Some(path) = path {
                write_file(path, output::sweep_csv(&result))?;
            }
            for row in &result.rows {
                match &row.outcome {
                    Ok(m) => say(out, format!("d={} delta_mu={} pe={}", row.distance, m.delta_mu, m.pe_measured)),
                    Err(e) => say(out, format!("d={} failed: {e}", row.distance)),
                }
            }
            match result.slope {
                Some(s) => say(out, format!("slope: {s:.4}")),
                None => say(out, "slope: n/a".to_string()),
            }
            let ok = result.successes();
            if ok < screenlink::analysis::MIN_SWEEP_POINTS {
                return Err(CliError::Pipeline(screenlink::Error::InvalidAnalysis(format!(
                    "only {ok} of {} distances decoded",
                    result.rows.len()
                ))));
            }
        }
        Command::Ber { q_args, symbols, out: path } => {
            let seed = cli.seed.unwrap_or(config.channel.rng_seed);
            let mut rows = Vec::with_capacity(q_args.len());
            for &q in q_args {
                if !(q.is_finite() && q > 0.0) {
                    return Err(CliError::Usage(format!("Q-arguments must be positive, got {q}")));
                }
                let model = BerModel::with_q_argument(q)?;
                let estimate = monte_carlo_ber(&model, *symbols, seed)?;
                rows.push(BerRow { q_arg: q, theory: theoretical_ber(&model), estimate });
            }
            let table = output::ber_csv(&rows);
            if let Some(path) = path {
                write_file(path, &table)?;
            }
            let _ = out.write_all(table.as_bytes());
        }
    }
    Ok(())
}

fn load_carrier(name: &str, config: &RunConfig) -> Result<Vec<FrameBuffer>, CliError> {
    if let Ok(kind) = name.parse::<CarrierKind>() {
        return Ok(vec![kind.frame(config.carrier_width, config.carrier_height)?]);
    }
    let path = Path::new(name);
    if !path.exists() {
        return Err(CliError::Usage(format!("carrier {name:?} is neither a built-in carrier nor an existing file")));
    }
    let file = Bfrs::read(path)?;
    let rate = config.modulation.frame_rate();
    if (file.fps() - rate).abs() > 1e-9 * rate {
        return Err(CliError::Usage(format!(
            "carrier runs at {} fps but modulation.frame_rate is {rate}",
            file.fps()
        )));
    }
    if file.frames.is_empty() {
        return Err(screenlink::Error::NoFrames.into());
    }
    Ok(file.frames)
}

fn decode(
    config: &RunConfig,
    input: &Path,
    report_path: Option<&Path>,
    series_path: Option<&Path>,
    payload_out: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let rx = Bfrs::read(input)?;
    let fps = rx.fps();
    let (w, h) = rx.dimensions();
    if rx.frames.is_empty() {
        return Err(screenlink::Error::NoFrames.into());
    }
    let region = config.region.unwrap_or_else(|| Region::full(w, h));
    let affine_inverse = config.channel.affine.inverse();
    let series = extract_signal(&rx.frames, &affine_inverse, region, config.modulation.channel(), fps)?;
    if let Some(path) = series_path {
        write_file(path, output::series_csv(&series))?;
    }
    let mut decoder = DecoderConfig::new(config.modulation, fps);
    decoder.affine_inverse = affine_inverse;
    decoder.region = Some(region);
    if let Some(reference) = &config.reference_payload {
        decoder.reference = Some(Bitstream::from_bytes_msb_first(&read_file(reference)?));
    }
    let frames = series.len();
    match decode_series(series, &decoder) {
        Ok(report) => {
            if let Some(path) = report_path {
                write_file(path, output::decode_report(&report))?;
            }
            if let Some(path) = payload_out {
                write_file(path, report.payload.to_bytes_msb_first())?;
            }
            let _ = writeln!(out, "payload: {} bits, crc_ok={}", report.payload.len(), report.crc_ok);
            if !report.crc_ok {
                return Err(CliError::Integrity("payload CRC does not match".into()));
            }
            Ok(())
        }
        Err(e) => {
            let status = output::status_of(&e);
            if let Some(path) = report_path {
                write_file(path, output::failure_report(status, &e, frames))?;
            }
            Err(match e {
                screenlink::Error::SyncFailure { .. } | screenlink::Error::DegenerateLevels { .. } => CliError::Sync(e),
                screenlink::Error::HeaderTooShort { .. } | screenlink::Error::TruncatedFrame { .. } => {
                    CliError::Integrity(e.to_string())
                }
                other => CliError::Pipeline(other),
            })
        }
    }
}
