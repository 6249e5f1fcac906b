//! Shared inputs for the benchmarks.

use voicegate_core::knn::{SpeakerModel, TrainingPoint};
use voicegate_core::synth::{self, SynthConfig};
use voicegate_core::{PipelineConfig, Signal};

/// Synthetic one-second clips at 16 kHz, with their speaker ids.
pub fn clips(speakers: usize, per_speaker: usize) -> Vec<(String, Signal)> {
    let cfg = SynthConfig {
        speakers,
        train_per_speaker: per_speaker,
        test_per_speaker: 0,
        ..SynthConfig::default()
    };
    synth::generate(&cfg)
        .expect("valid synth config")
        .into_iter()
        .map(|c| (c.speaker_id, c.signal))
        .collect()
}

/// A model over `speakers × per_speaker` clips with the default pipeline.
pub fn model(speakers: usize, per_speaker: usize, k: usize) -> SpeakerModel {
    let pipeline = PipelineConfig::default();
    let points = clips(speakers, per_speaker)
        .into_iter()
        .enumerate()
        .map(|(i, (speaker_id, signal))| TrainingPoint {
            feature: pipeline.clip_feature(&signal, format!("clip{i}")).expect("feature"),
            speaker_id,
        })
        .collect();
    SpeakerModel::fit(points, k, pipeline.fingerprint()).expect("model")
}
