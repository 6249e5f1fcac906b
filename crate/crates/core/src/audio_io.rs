//! WAV decoding and on-disk corpus discovery.
//!
//! A corpus is a directory with one subdirectory per speaker; every `*.wav`
//! file inside a speaker directory is one clip of that speaker. Clips keep
//! their native sample rate.

use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use hound::{SampleFormat, WavReader};
use log::warn;

use crate::error::{Error, Result};

/// Mono audio with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
    sample_rate_hz: u32,
}

impl Signal {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self> {
        if sample_rate_hz == 0 {
            return Err(Error::Config("sample rate must be positive".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::Domain("signal contains non-finite samples".into()));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate_hz)
    }

    /// Same sample rate, new samples.
    pub(crate) fn with_samples(&self, samples: Vec<f64>) -> Signal {
        Signal {
            samples,
            sample_rate_hz: self.sample_rate_hz,
        }
    }
}

/// One decoded clip and the speaker it belongs to.
#[derive(Debug, Clone)]
pub struct LabeledClip {
    pub signal: Signal,
    pub speaker_id: String,
    /// Path relative to the corpus root, `/`-separated. Unique within a corpus.
    pub clip_id: String,
    pub source_path: PathBuf,
}

/// A file that was found in the corpus but could not be decoded.
#[derive(Debug, Clone)]
pub struct SkippedClip {
    pub path: PathBuf,
    pub speaker_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub clips: Vec<LabeledClip>,
    pub skipped: Vec<SkippedClip>,
    /// Every speaker directory that contained at least one `.wav` file, sorted.
    pub speakers: Vec<String>,
}

impl Corpus {
    /// Speakers for which every file failed to decode.
    pub fn speakers_without_clips(&self) -> Vec<&str> {
        self.speakers
            .iter()
            .filter(|s| !self.clips.iter().any(|c| &c.speaker_id == *s))
            .map(String::as_str)
            .collect()
    }
}

/// Decodes a RIFF/WAVE byte buffer into a mono signal.
///
/// Integer PCM is divided by the negative full-scale magnitude of its bit
/// depth (32768 for 16-bit), float PCM is clamped to `[-1, 1]`, and channels
/// are averaged.
pub fn decode_wav(bytes: &[u8]) -> Result<Signal> {
    let reader = WavReader::new(Cursor::new(bytes)).map_err(map_hound_error)?;
    let spec = reader.spec();
    let channels = usize::from(spec.channels);
    if channels == 0 {
        return Err(Error::Format("zero channels".into()));
    }

    let interleaved: Vec<f64> = match spec.sample_format {
        SampleFormat::Int => {
            if spec.bits_per_sample == 0 || spec.bits_per_sample > 32 {
                return Err(Error::UnsupportedFormat(format!(
                    "{}-bit integer PCM",
                    spec.bits_per_sample
                )));
            }
            let full_scale = f64::from(1u32 << (spec.bits_per_sample - 1).min(31));
            let full_scale = if spec.bits_per_sample == 32 {
                2.0 * full_scale
            } else {
                full_scale
            };
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| f64::from(v) / full_scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(map_hound_error)?
        }
        SampleFormat::Float => {
            if spec.bits_per_sample != 32 {
                return Err(Error::UnsupportedFormat(format!(
                    "{}-bit float PCM",
                    spec.bits_per_sample
                )));
            }
            reader
                .into_samples::<f32>()
                .map(|s| s.map(|v| f64::from(v).clamp(-1.0, 1.0)))
                .collect::<std::result::Result<_, _>>()
                .map_err(map_hound_error)?
        }
    };

    if interleaved.len() < channels {
        return Err(Error::EmptyAudio);
    }
    if interleaved.iter().any(|s| !s.is_finite()) {
        return Err(Error::Format("non-finite float samples".into()));
    }

    let mono = if channels == 1 {
        interleaved
    } else {
        interleaved
            .chunks_exact(channels)
            .map(|frame| frame.iter().sum::<f64>() / channels as f64)
            .collect()
    };
    Signal::new(mono, spec.sample_rate)
}

pub fn decode_wav_file(path: &Path) -> Result<Signal> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_wav(&bytes)
}

fn map_hound_error(err: hound::Error) -> Error {
    match err {
        hound::Error::Unsupported => Error::UnsupportedFormat("non-PCM codec".into()),
        hound::Error::TooWide => Error::UnsupportedFormat("sample width too large".into()),
        other => Error::Format(other.to_string()),
    }
}

/// Loads a `<root>/<speaker_id>/*.wav` corpus.
///
/// Files that fail to decode are reported in [`Corpus::skipped`] rather than
/// failing the whole load. Output order is lexicographic by path.
pub fn load_corpus(root: &Path) -> Result<Corpus> {
    load_corpus_with_prefix(root, "")
}

pub(crate) fn load_corpus_with_prefix(root: &Path, id_prefix: &str) -> Result<Corpus> {
    let mut speaker_dirs = Vec::new();
    for entry in fs::read_dir(root).map_err(|e| Error::io(root, e))? {
        let entry = entry.map_err(|e| Error::io(root, e))?;
        let path = entry.path();
        let name = entry.file_name().to_string_lossy().into_owned();
        if path.is_dir() && !name.starts_with('.') {
            speaker_dirs.push((name, path));
        }
    }
    speaker_dirs.sort();

    let mut corpus = Corpus::default();
    for (speaker_id, dir) in speaker_dirs {
        let mut files: Vec<PathBuf> = fs::read_dir(&dir)
            .map_err(|e| Error::io(&dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && is_wav(p))
            .collect();
        if files.is_empty() {
            continue;
        }
        files.sort();
        corpus.speakers.push(speaker_id.clone());

        for path in files {
            let file_name = path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            match decode_wav_file(&path).and_then(|s| {
                if s.is_empty() {
                    Err(Error::EmptyAudio)
                } else {
                    Ok(s)
                }
            }) {
                Ok(signal) => corpus.clips.push(LabeledClip {
                    signal,
                    speaker_id: speaker_id.clone(),
                    clip_id: format!("{id_prefix}{speaker_id}/{file_name}"),
                    source_path: path,
                }),
                Err(err) => {
                    warn!("skipping {}: {err}", path.display());
                    corpus.skipped.push(SkippedClip {
                        path,
                        speaker_id: speaker_id.clone(),
                        reason: err.to_string(),
                    });
                }
            }
        }
    }

    if corpus.speakers.is_empty() {
        return Err(Error::EmptyCorpus(root.to_path_buf()));
    }
    Ok(corpus)
}

/// A corpus optionally split into fixed training and test subsets.
#[derive(Debug, Clone)]
pub enum Dataset {
    Flat(Corpus),
    Split { train: Corpus, test: Corpus },
}

/// Loads either a flat corpus or a `<root>/{train,test}/<speaker_id>/*.wav` split.
///
/// The split layout is recognised when both `train` and `test` directories
/// exist; their clip ids are prefixed with `train/` and `test/`.
pub fn load_dataset(root: &Path) -> Result<Dataset> {
    let train_dir = root.join("train");
    let test_dir = root.join("test");
    if train_dir.is_dir() && test_dir.is_dir() {
        Ok(Dataset::Split {
            train: load_corpus_with_prefix(&train_dir, "train/")?,
            test: load_corpus_with_prefix(&test_dir, "test/")?,
        })
    } else {
        load_corpus(root).map(Dataset::Flat)
    }
}

fn is_wav(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("wav"))
}
