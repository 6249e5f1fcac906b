//! Versioned JSON model file.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use voicegate_core::knn::{SpeakerModel, TrainingPoint};
use voicegate_core::ClipFeature;

use crate::config::ConfigFile;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoredPoint {
    pub clip_id: String,
    pub speaker_id: String,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format_version: u32,
    pub created_at: String,
    pub pipeline_fingerprint: String,
    pub config: ConfigFile,
    pub k: usize,
    pub label_set: Vec<String>,
    pub points: Vec<StoredPoint>,
}

impl ModelFile {
    pub fn from_model(model: &SpeakerModel, config: &ConfigFile, created_at: String) -> Self {
        Self {
            format_version: MODEL_FORMAT_VERSION,
            created_at,
            pipeline_fingerprint: model.pipeline_fingerprint().to_string(),
            config: config.clone(),
            k: model.k(),
            label_set: model.label_set().to_vec(),
            points: model
                .points()
                .iter()
                .map(|p| StoredPoint {
                    clip_id: p.feature.clip_id.clone(),
                    speaker_id: p.speaker_id.clone(),
                    vector: p.feature.vector.clone(),
                })
                .collect(),
        }
    }

    pub fn to_model(&self) -> Result<SpeakerModel> {
        let points = self
            .points
            .iter()
            .map(|p| TrainingPoint {
                feature: ClipFeature::new(p.clip_id.clone(), p.vector.clone()),
                speaker_id: p.speaker_id.clone(),
            })
            .collect();
        let model = SpeakerModel::fit(points, self.k, self.pipeline_fingerprint.clone())?;
        if model.label_set() != self.label_set.as_slice() {
            bail!("model label set does not match its points");
        }
        Ok(model)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading model {}", path.display()))?;
        let file: ModelFile =
            serde_json::from_str(&text).with_context(|| format!("parsing model {}", path.display()))?;
        if file.format_version != MODEL_FORMAT_VERSION {
            bail!("unsupported model format version {}", file.format_version);
        }
        let embedded = file.config.pipeline().fingerprint();
        if embedded != file.pipeline_fingerprint {
            bail!(
                "model header fingerprint {} does not match its embedded config ({embedded})",
                file.pipeline_fingerprint
            );
        }
        Ok(file)
    }

    /// Writes to a temporary file in the target directory, then renames it into place.
    pub fn save_atomic(&self, path: &Path) -> Result<()> {
        let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        let mut tmp = tempfile::NamedTempFile::new_in(dir)
            .with_context(|| format!("creating temporary file in {}", dir.display()))?;
        serde_json::to_writer_pretty(&mut tmp, self)?;
        tmp.write_all(b"\n")?;
        tmp.as_file().sync_all()?;
        tmp.persist(path)
            .with_context(|| format!("writing model {}", path.display()))?;
        Ok(())
    }
}
