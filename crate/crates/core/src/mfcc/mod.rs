//! MFCC extraction.
//!
//! Stage order: pre-emphasis, frame blocking, Hamming window, FFT magnitude,
//! triangular Mel filterbank, natural log, DCT, sinusoidal lifter. Each stage
//! is exposed on its own; [`MfccExtractor`] precomputes the window, FFT plan,
//! filterbank and DCT basis for one sample rate.

mod cepstrum;
mod filterbank;
mod spectrum;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::audio_io::Signal;
use crate::error::{Error, Result};
use crate::pipeline::fingerprint;

pub use cepstrum::{dct_cepstra, dct_matrix, lifter, lifter_weights};
pub use filterbank::{build_filterbank, log_fbe, mel, mel_to_hz, MelFilterbank, LOG_FLOOR};
pub use spectrum::{fft_size_for, magnitude_spectrum, SpectrumAnalyzer};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MfccConfig {
    /// Pre-emphasis coefficient, `0 <= k < 1`.
    pub preemphasis: f64,
    pub frame_ms: f64,
    pub hop_ms: f64,
    pub num_filters: usize,
    pub num_ceps: usize,
    /// Cepstral lifter parameter; 0 disables liftering.
    pub lifter: u32,
    pub fmin_hz: f64,
    /// Upper filterbank edge; `None` means the Nyquist frequency.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fmax_hz: Option<f64>,
}

impl Default for MfccConfig {
    fn default() -> Self {
        Self {
            preemphasis: 0.97,
            frame_ms: 25.0,
            hop_ms: 10.0,
            num_filters: 20,
            num_ceps: 13,
            lifter: 22,
            fmin_hz: 0.0,
            fmax_hz: None,
        }
    }
}

impl MfccConfig {
    /// Checks the rate-independent constraints.
    pub fn validate(&self) -> Result<()> {
        check_preemphasis(self.preemphasis)?;
        if !(self.frame_ms > 0.0 && self.hop_ms > 0.0) {
            return Err(Error::Config("frame_ms and hop_ms must be positive".into()));
        }
        if self.hop_ms > self.frame_ms {
            return Err(Error::Config(format!(
                "hop_ms ({}) must not exceed frame_ms ({})",
                self.hop_ms, self.frame_ms
            )));
        }
        if self.num_filters == 0 || self.num_ceps == 0 {
            return Err(Error::Config("num_filters and num_ceps must be positive".into()));
        }
        if self.num_ceps > self.num_filters {
            return Err(Error::Config(format!(
                "num_ceps ({}) must not exceed num_filters ({})",
                self.num_ceps, self.num_filters
            )));
        }
        if self.fmin_hz.is_nan() || self.fmin_hz < 0.0 {
            return Err(Error::Config("fmin_hz must be non-negative".into()));
        }
        if let Some(fmax) = self.fmax_hz {
            if fmax.is_nan() || fmax <= self.fmin_hz {
                return Err(Error::Config("fmax_hz must exceed fmin_hz".into()));
            }
        }
        Ok(())
    }

    pub fn fmax_for(&self, sample_rate_hz: u32) -> f64 {
        self.fmax_hz.unwrap_or(f64::from(sample_rate_hz) / 2.0)
    }

    pub fn frame_len(&self, sample_rate_hz: u32) -> usize {
        ms_to_samples(self.frame_ms, sample_rate_hz)
    }

    pub fn hop_len(&self, sample_rate_hz: u32) -> usize {
        ms_to_samples(self.hop_ms, sample_rate_hz)
    }

    pub fn fingerprint(&self) -> String {
        fingerprint(self)
    }
}

fn ms_to_samples(ms: f64, sample_rate_hz: u32) -> usize {
    (ms * f64::from(sample_rate_hz) / 1000.0).round() as usize
}

fn check_preemphasis(k: f64) -> Result<()> {
    if !(0.0..1.0).contains(&k) {
        return Err(Error::Config(format!(
            "pre-emphasis coefficient {k} outside [0, 1)"
        )));
    }
    Ok(())
}

/// First-order pre-emphasis, `out[n] = x[n] − k·x[n−1]` and `out[0] = (1 − k)·x[0]`.
pub fn preemphasize(signal: &Signal, k: f64) -> Result<Signal> {
    check_preemphasis(k)?;
    Ok(signal.with_samples(preemphasize_samples(signal.samples(), k)))
}

fn preemphasize_samples(x: &[f64], k: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    if let Some(&first) = x.first() {
        out.push((1.0 - k) * first);
    }
    out.extend(x.windows(2).map(|w| w[1] - k * w[0]));
    out
}

/// Overlapping frames stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMatrix {
    data: Vec<f64>,
    frame_len: usize,
    hop: usize,
}

impl FrameMatrix {
    pub fn num_frames(&self) -> usize {
        self.data.len() / self.frame_len
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn frame(&self, index: usize) -> &[f64] {
        &self.data[index * self.frame_len..(index + 1) * self.frame_len]
    }

    pub fn frames(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.frame_len)
    }
}

/// Number of complete frames; trailing samples that do not fill a frame are dropped.
pub fn frame_count(signal_len: usize, frame_len: usize, hop: usize) -> usize {
    if signal_len < frame_len || frame_len == 0 || hop == 0 {
        0
    } else {
        (signal_len - frame_len) / hop + 1
    }
}

pub fn frame_blocks(signal: &Signal, frame_ms: f64, hop_ms: f64) -> Result<FrameMatrix> {
    let rate = signal.sample_rate_hz();
    let frame_len = ms_to_samples(frame_ms, rate);
    let hop = ms_to_samples(hop_ms, rate);
    if frame_len == 0 || hop == 0 {
        return Err(Error::Config(format!(
            "{frame_ms} ms / {hop_ms} ms rounds to zero samples at {rate} Hz"
        )));
    }
    frame_samples(signal.samples(), frame_len, hop)
}

fn frame_samples(x: &[f64], frame_len: usize, hop: usize) -> Result<FrameMatrix> {
    let n = frame_count(x.len(), frame_len, hop);
    if n == 0 {
        return Err(Error::TooShort {
            len: x.len(),
            frame_len,
        });
    }
    let mut data = Vec::with_capacity(n * frame_len);
    for i in 0..n {
        data.extend_from_slice(&x[i * hop..i * hop + frame_len]);
    }
    Ok(FrameMatrix {
        data,
        frame_len,
        hop,
    })
}

/// `w(n) = 0.54 − 0.46·cos(2πn/(N−1))`.
pub fn hamming_window(frame_len: usize) -> Result<Vec<f64>> {
    if frame_len < 2 {
        return Err(Error::Config(format!(
            "Hamming window needs at least 2 samples, got {frame_len}"
        )));
    }
    let denom = (frame_len - 1) as f64;
    Ok((0..frame_len)
        .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / denom).cos())
        .collect())
}

/// Liftered cepstra, one row per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct MfccMatrix {
    rows: Vec<Vec<f64>>,
    num_ceps: usize,
    config_fingerprint: String,
}

impl MfccMatrix {
    pub fn new(rows: Vec<Vec<f64>>, num_ceps: usize, config_fingerprint: String) -> Result<Self> {
        if let Some(bad) = rows.iter().find(|r| r.len() != num_ceps) {
            return Err(Error::Shape {
                expected: num_ceps,
                found: bad.len(),
            });
        }
        Ok(Self {
            rows,
            num_ceps,
            config_fingerprint,
        })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn num_frames(&self) -> usize {
        self.rows.len()
    }

    pub fn num_ceps(&self) -> usize {
        self.num_ceps
    }

    pub fn config_fingerprint(&self) -> &str {
        &self.config_fingerprint
    }
}

/// All rate-dependent MFCC state for one sample rate.
#[derive(Debug, Clone)]
pub struct MfccExtractor {
    config: MfccConfig,
    sample_rate_hz: u32,
    frame_len: usize,
    hop: usize,
    window: Vec<f64>,
    spectrum: SpectrumAnalyzer,
    filterbank: MelFilterbank,
    dct: Vec<Vec<f64>>,
    lifter: Vec<f64>,
    fingerprint: String,
}

impl MfccExtractor {
    pub fn new(config: &MfccConfig, sample_rate_hz: u32) -> Result<Self> {
        config.validate()?;
        if sample_rate_hz == 0 {
            return Err(Error::Config("sample rate must be positive".into()));
        }
        let frame_len = config.frame_len(sample_rate_hz);
        let hop = config.hop_len(sample_rate_hz);
        if hop == 0 {
            return Err(Error::Config(format!(
                "hop of {} ms is shorter than one sample at {sample_rate_hz} Hz",
                config.hop_ms
            )));
        }
        let window = hamming_window(frame_len)?;
        let spectrum = SpectrumAnalyzer::new(fft_size_for(frame_len));
        let filterbank = build_filterbank(
            config.num_filters,
            spectrum.size(),
            sample_rate_hz,
            config.fmin_hz,
            config.fmax_for(sample_rate_hz),
        )?;
        let dct = dct_matrix(config.num_filters, config.num_ceps)?;
        let lifter = lifter_weights(config.num_ceps, config.lifter);
        Ok(Self {
            config: *config,
            sample_rate_hz,
            frame_len,
            hop,
            window,
            spectrum,
            filterbank,
            dct,
            lifter,
            fingerprint: config.fingerprint(),
        })
    }

    pub fn config(&self) -> &MfccConfig {
        &self.config
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn filterbank(&self) -> &MelFilterbank {
        &self.filterbank
    }

    pub fn extract(&self, signal: &Signal) -> Result<MfccMatrix> {
        if signal.sample_rate_hz() != self.sample_rate_hz {
            return Err(Error::Config(format!(
                "extractor built for {} Hz cannot process {} Hz audio",
                self.sample_rate_hz,
                signal.sample_rate_hz()
            )));
        }
        let emphasized = preemphasize_samples(signal.samples(), self.config.preemphasis);
        let frames = frame_samples(&emphasized, self.frame_len, self.hop)?;
        let mut windowed = vec![0.0; self.frame_len];
        let rows = frames
            .frames()
            .map(|frame| {
                for ((dst, &x), &w) in windowed.iter_mut().zip(frame).zip(&self.window) {
                    *dst = x * w;
                }
                let magnitudes = self.spectrum.magnitudes(&windowed);
                let energies = log_fbe(&magnitudes, &self.filterbank)?;
                let cepstra = cepstrum::apply_dct(&self.dct, &energies);
                Ok(cepstra.iter().zip(&self.lifter).map(|(c, w)| c * w).collect())
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        MfccMatrix::new(rows, self.config.num_ceps, self.fingerprint.clone())
    }
}

pub fn extract_mfcc(signal: &Signal, config: &MfccConfig) -> Result<MfccMatrix> {
    MfccExtractor::new(config, signal.sample_rate_hz())?.extract(signal)
}
