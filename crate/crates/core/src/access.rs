//! Claim verification with password fallback.
//!
//! A speaker claims an identity and presents a clip. If the classifier's
//! prediction matches the claim, access is granted; otherwise a password is
//! required, and a correct password grants access while a wrong one denies it.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use pbkdf2::pbkdf2_hmac;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::Sha256;
use subtle::ConstantTimeEq;

use crate::audio_io::Signal;
use crate::error::{Error, Result};
use crate::knn::SpeakerModel;
use crate::pipeline::PipelineConfig;

pub const CREDENTIAL_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_PBKDF2_ITERATIONS: u32 = 100_000;
const SALT_LEN: usize = 16;
const DIGEST_LEN: usize = 32;
const SCHEME_PREFIX: &str = "pbkdf2-sha256:i=";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AccessOutcome {
    Granted,
    PasswordRequired,
    GrantedByPassword,
    Denied,
}

impl AccessOutcome {
    pub fn is_granted(self) -> bool {
        matches!(self, AccessOutcome::Granted | AccessOutcome::GrantedByPassword)
    }
}

impl fmt::Display for AccessOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AccessOutcome::Granted => "Granted",
            AccessOutcome::PasswordRequired => "PasswordRequired",
            AccessOutcome::GrantedByPassword => "GrantedByPassword",
            AccessOutcome::Denied => "Denied",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PasswordOutcome {
    GrantedByPassword,
    Denied,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccessDecision {
    pub outcome: AccessOutcome,
    pub claimed_id: String,
    pub predicted_id: String,
    pub vote_fraction: f64,
    pub audit_note: String,
}

impl AccessDecision {
    /// `timestamp, claimed_id, predicted_id, outcome`
    pub fn audit_line(&self, timestamp: &str) -> String {
        format!(
            "{timestamp}, {}, {}, {}",
            self.claimed_id, self.predicted_id, self.outcome
        )
    }
}

/// Optional extra gate on top of the label match. Off by default.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AccessPolicy {
    /// When set, a matching prediction with a lower vote fraction still requires a password.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_vote_fraction: Option<f64>,
}

/// Runs the clip through the pipeline and checks the prediction against the claim.
pub fn decide(
    model: &SpeakerModel,
    claimed_id: &str,
    clip: &Signal,
    pipeline: &PipelineConfig,
    policy: &AccessPolicy,
) -> Result<AccessDecision> {
    if model.label_set().binary_search_by(|l| l.as_str().cmp(claimed_id)).is_err() {
        return Err(Error::UnknownSpeaker(claimed_id.to_string()));
    }
    if model.pipeline_fingerprint() != pipeline.fingerprint() {
        return Err(Error::Config(
            "pipeline configuration does not match the one the model was trained with".into(),
        ));
    }
    let feature = pipeline.clip_feature(clip, "query")?;
    let prediction = model.predict(&feature)?;

    let matched = prediction.label == claimed_id;
    let confident = policy
        .min_vote_fraction
        .is_none_or(|min| prediction.vote_fraction >= min);
    let (outcome, note) = match (matched, confident) {
        (true, true) => (AccessOutcome::Granted, "prediction matches claim"),
        (true, false) => (
            AccessOutcome::PasswordRequired,
            "prediction matches claim below the vote threshold",
        ),
        (false, _) => (AccessOutcome::PasswordRequired, "prediction differs from claim"),
    };
    Ok(AccessDecision {
        outcome,
        claimed_id: claimed_id.to_string(),
        predicted_id: prediction.label,
        vote_fraction: prediction.vote_fraction,
        audit_note: format!(
            "{note}; vote fraction {:.3} with k = {}",
            prediction.vote_fraction,
            model.k()
        ),
    })
}

/// Completes a `PasswordRequired` decision. Other outcomes are returned unchanged.
pub fn resolve_with_password(
    decision: AccessDecision,
    store: &CredentialStore,
    password_attempt: &str,
) -> Result<AccessDecision> {
    if decision.outcome != AccessOutcome::PasswordRequired {
        return Ok(decision);
    }
    let outcome = match store.verify_password(&decision.claimed_id, password_attempt)? {
        PasswordOutcome::GrantedByPassword => AccessOutcome::GrantedByPassword,
        PasswordOutcome::Denied => AccessOutcome::Denied,
    };
    Ok(AccessDecision {
        outcome,
        audit_note: format!("{}; password {}", decision.audit_note, if outcome.is_granted() { "accepted" } else { "rejected" }),
        ..decision
    })
}

/// Records a password fallback that could not take place, e.g. non-interactive runs.
pub fn deny_without_password(decision: AccessDecision, reason: &str) -> AccessDecision {
    if decision.outcome != AccessOutcome::PasswordRequired {
        return decision;
    }
    AccessDecision {
        outcome: AccessOutcome::Denied,
        audit_note: format!("{}; {reason}", decision.audit_note),
        ..decision
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CredentialEntry {
    /// Hex-encoded 16-byte salt.
    pub salt: String,
    /// Hex-encoded derived key.
    pub digest: String,
    pub hash_scheme_id: String,
}

/// Salted password digests keyed by speaker id. Plaintext is never stored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CredentialStore {
    pub format_version: u32,
    entries: BTreeMap<String, CredentialEntry>,
    #[serde(skip)]
    iterations: Option<u32>,
}

impl Default for CredentialStore {
    fn default() -> Self {
        Self::new()
    }
}

impl CredentialStore {
    pub fn new() -> Self {
        Self {
            format_version: CREDENTIAL_FORMAT_VERSION,
            entries: BTreeMap::new(),
            iterations: None,
        }
    }

    /// Store that hashes new passwords with a custom PBKDF2 iteration count.
    pub fn with_iterations(iterations: u32) -> Self {
        Self {
            iterations: Some(iterations.max(1)),
            ..Self::new()
        }
    }

    /// Iteration count for passwords enrolled from now on.
    pub fn set_iterations(&mut self, iterations: u32) {
        self.iterations = Some(iterations.max(1));
    }

    pub fn entry(&self, speaker_id: &str) -> Option<&CredentialEntry> {
        self.entries.get(speaker_id)
    }

    pub fn speakers(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sets or replaces a speaker's password with a fresh salt.
    pub fn enroll(&mut self, speaker_id: &str, password: &str) -> Result<()> {
        if speaker_id.is_empty() {
            return Err(Error::Credential("speaker id must not be empty".into()));
        }
        let iterations = self.iterations.unwrap_or(DEFAULT_PBKDF2_ITERATIONS);
        let mut rng = rand::rng();
        let salt = loop {
            let mut salt = [0u8; SALT_LEN];
            rng.fill_bytes(&mut salt);
            let encoded = hex::encode(salt);
            if self.entries.values().all(|e| e.salt != encoded) {
                break salt;
            }
        };
        let digest = derive(password, &salt, iterations);
        self.entries.insert(
            speaker_id.to_string(),
            CredentialEntry {
                salt: hex::encode(salt),
                digest: hex::encode(digest),
                hash_scheme_id: format!("{SCHEME_PREFIX}{iterations}"),
            },
        );
        Ok(())
    }

    pub fn verify_password(&self, speaker_id: &str, password_attempt: &str) -> Result<PasswordOutcome> {
        let entry = self
            .entries
            .get(speaker_id)
            .ok_or_else(|| Error::UnknownSpeaker(speaker_id.to_string()))?;
        let iterations = entry
            .hash_scheme_id
            .strip_prefix(SCHEME_PREFIX)
            .and_then(|i| i.parse::<u32>().ok())
            .filter(|&i| i > 0)
            .ok_or_else(|| Error::Credential(format!("unknown hash scheme {:?}", entry.hash_scheme_id)))?;
        let salt = hex::decode(&entry.salt).map_err(|e| Error::Credential(format!("bad salt: {e}")))?;
        let expected = hex::decode(&entry.digest).map_err(|e| Error::Credential(format!("bad digest: {e}")))?;
        let actual = derive(password_attempt, &salt, iterations);
        if bool::from(actual.as_slice().ct_eq(expected.as_slice())) {
            Ok(PasswordOutcome::GrantedByPassword)
        } else {
            Ok(PasswordOutcome::Denied)
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let store: CredentialStore = serde_json::from_str(&text)?;
        if store.format_version != CREDENTIAL_FORMAT_VERSION {
            return Err(Error::Credential(format!(
                "unsupported credential file version {}",
                store.format_version
            )));
        }
        Ok(store)
    }

    /// Writes the store atomically; on Unix the file is readable by its owner only.
    pub fn save(&self, path: &Path) -> Result<()> {
        let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        let json = serde_json::to_string_pretty(self)?;
        let tmp = dir.join(format!(
            ".{}.tmp",
            path.file_name().and_then(|n| n.to_str()).unwrap_or("credentials")
        ));
        {
            let mut opts = fs::OpenOptions::new();
            opts.write(true).create(true).truncate(true);
            #[cfg(unix)]
            {
                use std::os::unix::fs::OpenOptionsExt;
                opts.mode(0o600);
            }
            let mut f = opts.open(&tmp).map_err(|e| Error::io(&tmp, e))?;
            f.write_all(json.as_bytes()).map_err(|e| Error::io(&tmp, e))?;
            f.sync_all().map_err(|e| Error::io(&tmp, e))?;
        }
        fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }
}

fn derive(password: &str, salt: &[u8], iterations: u32) -> [u8; DIGEST_LEN] {
    let mut out = [0u8; DIGEST_LEN];
    pbkdf2_hmac::<Sha256>(password.as_bytes(), salt, iterations, &mut out);
    out
}
