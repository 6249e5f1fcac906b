//! The feature-producing chain: denoise, MFCC, pool.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::audio_io::Signal;
use crate::error::Result;
use crate::features::{pool, ClipFeature};
use crate::mfcc::{MfccConfig, MfccExtractor, MfccMatrix};
use crate::wavelet::{denoise, WaveletConfig};

/// Hex SHA-256 of the value's JSON encoding.
pub(crate) fn fingerprint<T: Serialize + ?Sized>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("config types always serialize");
    hex::encode(Sha256::digest(&bytes))
}

/// Every parameter that influences a clip's feature vector.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub wavelet: WaveletConfig,
    pub mfcc: MfccConfig,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.wavelet.validate()?;
        self.mfcc.validate()
    }

    /// Binds stored features to the exact parameters that produced them.
    pub fn fingerprint(&self) -> String {
        fingerprint(self)
    }

    pub fn mfcc_matrix(&self, signal: &Signal) -> Result<MfccMatrix> {
        let clean = denoise(signal, &self.wavelet)?;
        MfccExtractor::new(&self.mfcc, clean.sample_rate_hz())?.extract(&clean)
    }

    pub fn clip_feature(&self, signal: &Signal, clip_id: impl Into<String>) -> Result<ClipFeature> {
        pool(&self.mfcc_matrix(signal)?, clip_id)
    }
}
