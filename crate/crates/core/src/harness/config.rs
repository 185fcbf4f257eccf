//! Experiment configuration, read from JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::frame::FrameConfig;
use crate::receiver::Scheme;

/// SNR in dB; `"inf"` in JSON means noiseless.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SnrDb(pub f64);

impl SnrDb {
    pub fn is_noiseless(self) -> bool {
        self.0.is_infinite() && self.0 > 0.0
    }
}

impl std::fmt::Display for SnrDb {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_noiseless() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl std::str::FromStr for SnrDb {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        match t.to_ascii_lowercase().as_str() {
            "inf" | "+inf" | "infinity" => Ok(SnrDb(f64::INFINITY)),
            _ => t
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(SnrDb)
                .ok_or_else(|| Error::Config(format!("bad SNR value {s:?}"))),
        }
    }
}

impl Serialize for SnrDb {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_noiseless() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for SnrDb {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) if v.is_finite() || v == f64::INFINITY => Ok(SnrDb(v)),
            Raw::Num(v) => Err(serde::de::Error::custom(format!("bad SNR value {v}"))),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    #[default]
    Random,
    /// `H_n = I`: no multipath, no Doppler.
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    #[serde(default)]
    pub kind: ChannelKind,
    #[serde(default = "default_paths")]
    pub paths: usize,
    pub l_max: usize,
    #[serde(default)]
    pub k_max: f64,
}

fn default_paths() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopRule {
    pub target_frame_errors: u64,
    pub max_frames: u64,
}

/// Code per scheme: a builtin name or a path to an alist file.
///
/// Builtins: `ieee80211n-648-r12`, and `ira-r12`, a rate-1/2 irregular
/// repeat-accumulate code sized to whatever length the scheme needs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodesSpec {
    #[serde(default = "default_pce_code")]
    pub pce: String,
    #[serde(default = "default_sce_code")]
    pub sce: String,
}

fn default_pce_code() -> String {
    "ieee80211n-648-r12".into()
}

fn default_sce_code() -> String {
    "ira-r12".into()
}

impl Default for CodesSpec {
    fn default() -> Self {
        CodesSpec {
            pce: default_pce_code(),
            sce: default_sce_code(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputSpec {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
    /// Wall time breaks byte-for-byte reproducibility, so it is opt-in; the
    /// `wall_s` column is 0 otherwise.
    #[serde(default)]
    pub record_wall_time: bool,
    /// Dump first-iteration detector LLRs (sign-folded, code order).
    #[serde(default)]
    pub dump_llrs: bool,
    #[serde(default = "default_dump_frames")]
    pub dump_max_frames: usize,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("results")
}

fn default_dump_frames() -> usize {
    200
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: default_out_dir(),
            record_wall_time: false,
            dump_llrs: false,
            dump_max_frames: default_dump_frames(),
        }
    }
}

/// Post-simulation analysis of the LLR dumps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSpec {
    /// Mixture components for the pooled fit.
    #[serde(default = "default_components")]
    pub components: usize,
    /// Mixture components for each per-codeword fit.
    #[serde(default = "default_codeword_components")]
    pub codeword_components: usize,
    /// Noise level, relative to the threshold, at which the residual error
    /// fraction of a failed codeword is evaluated.
    #[serde(default = "default_alpha_offset")]
    pub alpha_noise_offset: f64,
}

fn default_alpha_offset() -> f64 {
    crate::analysis::ALPHA_NOISE_OFFSET
}

fn default_components() -> usize {
    3
}

fn default_codeword_components() -> usize {
    1
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        AnalysisSpec {
            components: default_components(),
            codeword_components: default_codeword_components(),
            alpha_noise_offset: default_alpha_offset(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub frame: FrameConfig,
    pub channel: ChannelSpec,
    pub schemes: Vec<Scheme>,
    pub snr_db: Vec<SnrDb>,
    pub turbo_iters: usize,
    #[serde(default = "default_bp_iters")]
    pub bp_iters: usize,
    #[serde(default = "default_true")]
    pub skip_converged: bool,
    pub stop: StopRule,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; 0 lets the pool pick.
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub codes: CodesSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analysis: Option<AnalysisSpec>,
    /// Directory relative code paths are resolved against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn default_bp_iters() -> usize {
    50
}

fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.frame.validate()?;
        if self.schemes.is_empty() {
            return Err(Error::Config("scheme list is empty".into()));
        }
        if self.snr_db.is_empty() {
            return Err(Error::Config("SNR list is empty".into()));
        }
        if self.turbo_iters == 0 || self.bp_iters == 0 {
            return Err(Error::Config("turbo and BP iteration budgets must be positive".into()));
        }
        if self.stop.target_frame_errors == 0 || self.stop.max_frames == 0 {
            return Err(Error::Config("stop rule must be positive".into()));
        }
        if self.channel.kind == ChannelKind::Random {
            if self.channel.l_max > self.frame.l {
                return Err(Error::Config(format!(
                    "l_max = {} exceeds the zero padding L = {}",
                    self.channel.l_max, self.frame.l
                )));
            }
            if self.channel.paths == 0 || self.channel.paths > self.channel.l_max + 1 {
                return Err(Error::Config(format!(
                    "{} paths do not fit delays 0..={}",
                    self.channel.paths, self.channel.l_max
                )));
            }
            if self.channel.k_max.is_nan() || self.channel.k_max < 0.0 {
                return Err(Error::Config("k_max must be non-negative".into()));
            }
        }
        if let Some(a) = &self.analysis {
            if a.components == 0 || a.codeword_components == 0 {
                return Err(Error::Config("analysis needs at least one mixture component".into()));
            }
            if !a.alpha_noise_offset.is_finite() || a.alpha_noise_offset < 1.0 {
                return Err(Error::Config("alpha_noise_offset must be at least 1".into()));
            }
        }
        Ok(())
    }
}
