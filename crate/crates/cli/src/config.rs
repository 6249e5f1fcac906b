//! Pipeline configuration file (TOML).
//!
//! ```toml
//! [wavelet]
//! family = "db4"          # or "haar"
//! levels = 4
//! threshold_rule = "universal"
//! threshold_mode = "soft"
//!
//! [mfcc]
//! preemphasis = 0.97
//! frame_ms = 25.0
//! hop_ms = 10.0
//! num_filters = 20
//! num_ceps = 13
//! lifter = 22
//! fmin_hz = 0.0
//! # fmax_hz = 8000.0      # defaults to half the sample rate
//!
//! [knn]
//! k = 3
//!
//! [evaluation]
//! folds = 5
//! k_values = [2, 3, 4, 5, 6]
//! seed = 42
//!
//! [access]
//! # min_vote_fraction = 0.6
//! ```
//!
//! Every section and key is optional; unknown keys are rejected.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use voicegate_core::access::AccessPolicy;
use voicegate_core::{MfccConfig, PipelineConfig, WaveletConfig};

use crate::UsageError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KnnSection {
    pub k: usize,
}

impl Default for KnnSection {
    fn default() -> Self {
        Self { k: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationSection {
    pub folds: usize,
    pub k_values: Vec<usize>,
    pub seed: u64,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        Self {
            folds: 5,
            k_values: vec![2, 3, 4, 5, 6],
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigFile {
    pub wavelet: WaveletConfig,
    pub mfcc: MfccConfig,
    pub knn: KnnSection,
    pub evaluation: EvaluationSection,
    pub access: AccessPolicy,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ConfigFile = toml::from_str(text).map_err(|e| UsageError(format!("invalid config: {e}")))?;
        cfg.pipeline()
            .validate()
            .map_err(|e| UsageError(format!("invalid config: {e}")))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }

    /// Reads `path`, or returns the defaults when no path is given.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = fs::read_to_string(p)
                    .map_err(|e| UsageError(format!("cannot read config {}: {e}", p.display())))?;
                Self::parse(&text).with_context(|| format!("in {}", p.display()))
            }
        }
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            wavelet: self.wavelet,
            mfcc: self.mfcc,
        }
    }
}
