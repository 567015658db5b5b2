//! Flat `key=value` run configuration.
//!
//! ```text
//! # comments and blank lines are ignored
//! modulation.M=2
//! modulation.symbol_duration_frames=6
//! modulation.depth=0.03
//! modulation.channel=red
//! modulation.frame_rate=30
//! modulation.allow_deep=false
//! channel.distance=6
//! channel.phi_deg=0
//! channel.theta_deg=0
//! channel.display_area=0.25
//! channel.aperture_area=0.0001
//! channel.noise_sigma=0.005
//! channel.affine=1,0,0,0,1,0,0,0,1
//! channel.camera_fps=30
//! channel.quantizer_bits=8
//! channel.seed=1
//! decoder.region=32,24,64,48
//! decoder.reference_payload=payload.bin
//! carrier.width=128
//! carrier.height=96
//! ```
//!
//! Unknown keys and repeated keys are rejected. Every value is validated by
//! building the corresponding library type at load time.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use screenlink::{
    ChannelGeometry, ChannelParams, ColorChannel, Homography, ModulationParams, Region,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected key=value, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key {key:?} given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("{key}: cannot parse {value:?}: {reason}")]
    BadValue { key: String, value: String, reason: String },
    #[error("invalid configuration: {0}")]
    Invalid(#[from] screenlink::Error),
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

const KEYS: &[&str] = &[
    "modulation.M",
    "modulation.symbol_duration_frames",
    "modulation.depth",
    "modulation.channel",
    "modulation.frame_rate",
    "modulation.allow_deep",
    "channel.distance",
    "channel.phi_deg",
    "channel.theta_deg",
    "channel.display_area",
    "channel.aperture_area",
    "channel.noise_sigma",
    "channel.affine",
    "channel.camera_fps",
    "channel.quantizer_bits",
    "channel.seed",
    "decoder.region",
    "decoder.reference_payload",
    "carrier.width",
    "carrier.height",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub modulation: ModulationParams<f64>,
    pub channel: ChannelParams<f64>,
    pub region: Option<Region>,
    pub reference_payload: Option<PathBuf>,
    pub carrier_width: usize,
    pub carrier_height: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        "".parse().expect("defaults are valid")
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        text.parse()
    }
}

struct Values(BTreeMap<&'static str, String>);

impl Values {
    fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e: T::Err| bad(key, v, e)),
        }
    }

    fn list(&self, key: &str, len: usize) -> Result<Option<Vec<f64>>, ConfigError> {
        let Some(v) = self.0.get(key) else { return Ok(None) };
        let items = v
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| bad(key, v, e)))
            .collect::<Result<Vec<_>, _>>()?;
        if items.len() != len {
            return Err(bad(key, v, format!("expected {len} comma-separated numbers")));
        }
        Ok(Some(items))
    }
}

fn bad(key: &str, value: &str, reason: impl std::fmt::Display) -> ConfigError {
    ConfigError::BadValue { key: key.to_string(), value: value.to_string(), reason: reason.to_string() }
}

impl FromStr for RunConfig {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<Self, ConfigError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ConfigError::Syntax { line: i + 1, text: raw.to_string() });
            };
            let k = k.trim();
            let Some(key) = KEYS.iter().find(|&&known| known == k) else {
                return Err(ConfigError::UnknownKey { line: i + 1, key: k.to_string() });
            };
            if values.insert(*key, v.trim().to_string()).is_some() {
                return Err(ConfigError::DuplicateKey { line: i + 1, key: k.to_string() });
            }
        }
        let v = Values(values);

        let m = v.get("modulation.M", 2u32)?;
        let sdf = v.get("modulation.symbol_duration_frames", 6u32)?;
        let depth = v.get("modulation.depth", screenlink::modulation::DEFAULT_DEPTH)?;
        let channel: ColorChannel = v.get("modulation.channel", ColorChannel::Red)?;
        let frame_rate = v.get("modulation.frame_rate", 30.0)?;
        let modulation = if v.get("modulation.allow_deep", false)? {
            ModulationParams::new_allowing_deep(m, sdf, depth, channel, frame_rate)?
        } else {
            ModulationParams::new(m, sdf, depth, channel, frame_rate)?
        };

        let geometry = ChannelGeometry::new(
            v.get("channel.distance", 1.0)?,
            v.get::<f64>("channel.phi_deg", 0.0)?.to_radians(),
            v.get::<f64>("channel.theta_deg", 0.0)?.to_radians(),
            v.get("channel.display_area", 0.25)?,
            v.get("channel.aperture_area", 1e-4)?,
        )?;
        let affine = match v.list("channel.affine", 9)? {
            Some(m) => Homography::from_matrix(m.try_into().unwrap())?,
            None => Homography::identity(),
        };
        let channel = ChannelParams {
            geometry,
            noise_sigma: v.get("channel.noise_sigma", 0.0)?,
            affine,
            camera_fps: v.get("channel.camera_fps", 30.0)?,
            quantizer_bits: v.get("channel.quantizer_bits", 8u8)?,
            rng_seed: v.get("channel.seed", 0u64)?,
        };
        channel.validate()?;

        let region = v
            .list("decoder.region", 4)?
            .map(|r| {
                let raw = &v.0["decoder.region"];
                if r.iter().any(|x| *x < 0.0 || x.fract() != 0.0) {
                    return Err(bad("decoder.region", raw, "expected non-negative integers x,y,width,height"));
                }
                let region = Region::new(r[0] as usize, r[1] as usize, r[2] as usize, r[3] as usize);
                if region.is_empty() {
                    return Err(bad("decoder.region", raw, "region is empty"));
                }
                Ok(region)
            })
            .transpose()?;
        let reference_payload = v.0.get("decoder.reference_payload").map(PathBuf::from);

        let carrier_width = v.get("carrier.width", 128usize)?;
        let carrier_height = v.get("carrier.height", 96usize)?;
        if carrier_width == 0 || carrier_height == 0 {
            return Err(bad("carrier.width", &format!("{carrier_width}x{carrier_height}"), "must be nonzero"));
        }
        Ok(RunConfig { modulation, channel, region, reference_payload, carrier_width, carrier_height })
    }
}
