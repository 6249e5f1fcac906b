//! Synthetic speaker corpus.
//!
//! Each synthetic speaker has a fundamental frequency and three formant
//! resonances. A clip is a harmonic series at a slightly jittered pitch,
//! shaped by the speaker's (jittered) formant envelope, amplitude-modulated at
//! a syllable-like rate, plus white Gaussian noise. In control mode every clip
//! draws a fresh random voice, so labels carry no acoustic information.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use hound::{SampleFormat, WavSpec, WavWriter};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::audio_io::Signal;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub speakers: usize,
    pub train_per_speaker: usize,
    pub test_per_speaker: usize,
    pub seed: u64,
    pub sample_rate_hz: u32,
    pub duration_secs: f64,
    /// Noise standard deviation relative to the clip's peak amplitude.
    pub noise_level: f64,
    /// Draw an independent random voice for every clip.
    pub control: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            speakers: 5,
            train_per_speaker: 40,
            test_per_speaker: 10,
            seed: 42,
            sample_rate_hz: 16_000,
            duration_secs: 1.0,
            noise_level: 0.05,
            control: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Voice {
    pub f0_hz: f64,
    pub formants_hz: [f64; 3],
    pub bandwidths_hz: [f64; 3],
}

impl Voice {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        Voice {
            f0_hz: rng.random_range(90.0..260.0),
            formants_hz: [
                rng.random_range(300.0..850.0),
                rng.random_range(900.0..2300.0),
                rng.random_range(2400.0..3400.0),
            ],
            bandwidths_hz: [
                rng.random_range(70.0..130.0),
                rng.random_range(90.0..160.0),
                rng.random_range(120.0..220.0),
            ],
        }
    }

    /// Pitches spread geometrically over 90–260 Hz; formants random.
    fn for_speaker(index: usize, count: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut voice = Voice::random(rng);
        let position = if count > 1 { index as f64 / (count - 1) as f64 } else { 0.5 };
        voice.f0_hz = 90.0 * (260.0f64 / 90.0).powf(position);
        voice
    }

    fn envelope(&self, f_hz: f64, harmonic: usize) -> f64 {
        let resonance: f64 = self
            .formants_hz
            .iter()
            .zip(&self.bandwidths_hz)
            .map(|(&f, &b)| (-0.5 * ((f_hz - f) / b).powi(2)).exp())
            .sum();
        (resonance + 0.03) / (harmonic as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn dir_name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthClip {
    pub split: Split,
    pub speaker_id: String,
    pub file_name: String,
    pub signal: Signal,
}

impl SynthClip {
    /// `<split>/<speaker_id>/<file_name>`
    pub fn relative_path(&self) -> PathBuf {
        Path::new(self.split.dir_name())
            .join(&self.speaker_id)
            .join(&self.file_name)
    }
}

pub fn speaker_id(index: usize) -> String {
    format!("speaker_{:02}", index + 1)
}

/// Renders one clip of `voice`, with per-clip pitch/formant jitter drawn from `rng`.
pub fn synthesize_clip(voice: &Voice, config: &SynthConfig, rng: &mut ChaCha8Rng) -> Result<Signal> {
    let rate = f64::from(config.sample_rate_hz);
    let len = (config.duration_secs * rate).round() as usize;
    if len == 0 {
        return Err(Error::Config("synthetic clip duration rounds to zero samples".into()));
    }
    let f0 = voice.f0_hz * rng.random_range(0.97..1.03);
    let mut jittered = *voice;
    for f in &mut jittered.formants_hz {
        *f *= rng.random_range(0.96..1.04);
    }
    let nyquist_guard = (0.45 * rate).min(4000.0);
    let harmonics = ((nyquist_guard / f0).floor() as usize).max(1);

    let mut samples = vec![0.0; len];
    for h in 1..=harmonics {
        let freq = f0 * h as f64;
        let amp = jittered.envelope(freq, h);
        let step = 2.0 * PI * freq / rate;
        let (step_sin, step_cos) = step.sin_cos();
        let (mut s, mut c) = rng.random_range(0.0..2.0 * PI).sin_cos();
        for x in samples.iter_mut() {
            *x += amp * s;
            let next_s = s * step_cos + c * step_sin;
            c = c * step_cos - s * step_sin;
            s = next_s;
        }
    }

    let mod_rate = rng.random_range(2.0..5.0);
    let mod_phase = rng.random_range(0.0..2.0 * PI);
    for (n, x) in samples.iter_mut().enumerate() {
        let t = n as f64 / rate;
        *x *= 0.6 + 0.4 * (2.0 * PI * mod_rate * t + mod_phase).sin();
    }

    let peak = samples.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-12);
    let target = rng.random_range(0.3..0.7);
    let noise = Normal::new(0.0, config.noise_level.max(0.0) * target)
        .map_err(|e| Error::Config(format!("noise level: {e}")))?;
    for x in samples.iter_mut() {
        *x = (*x / peak * target + noise.sample(rng)).clamp(-1.0, 1.0);
    }
    Signal::new(samples, config.sample_rate_hz)
}

/// All clips of a synthetic corpus, in a fixed order determined by the seed.
pub fn generate(config: &SynthConfig) -> Result<Vec<SynthClip>> {
    if config.speakers == 0 || config.train_per_speaker + config.test_per_speaker == 0 {
        return Err(Error::Config("synthetic corpus needs speakers and clips".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let voices: Vec<Voice> = (0..config.speakers)
        .map(|i| Voice::for_speaker(i, config.speakers, &mut rng))
        .collect();

    let mut clips = Vec::with_capacity(config.speakers * (config.train_per_speaker + config.test_per_speaker));
    for (index, voice) in voices.iter().enumerate() {
        let id = speaker_id(index);
        for (split, count) in [(Split::Train, config.train_per_speaker), (Split::Test, config.test_per_speaker)] {
            for n in 0..count {
                let voice = if config.control { Voice::random(&mut rng) } else { *voice };
                let signal = synthesize_clip(&voice, config, &mut rng)?;
                clips.push(SynthClip {
                    split,
                    speaker_id: id.clone(),
                    file_name: format!("{}_{n:03}.wav", split.dir_name()),
                    signal,
                });
            }
        }
    }
    Ok(clips)
}

/// Quantizes to 16-bit PCM.
pub fn write_wav_pcm16(path: &Path, signal: &Signal) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: signal.sample_rate_hz(),
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let to_err = |e: hound::Error| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::Format(other.to_string()),
    };
    let mut writer = WavWriter::create(path, spec).map_err(to_err)?;
    for &x in signal.samples() {
        let q = (x * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        writer.write_sample(q).map_err(to_err)?;
    }
    writer.finalize().map_err(to_err)
}

/// Writes `<out_dir>/{train,test}/<speaker_id>/*.wav` and returns the clip count.
pub fn write_corpus(out_dir: &Path, config: &SynthConfig) -> Result<usize> {
    let clips = generate(config)?;
    for clip in &clips {
        let path = out_dir.join(clip.relative_path());
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        write_wav_pcm16(&path, &clip.signal)?;
    }
    Ok(clips.len())
}
