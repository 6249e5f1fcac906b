//! Multi-level discrete wavelet transform and VisuShrink denoising.
//!
//! Each level filters with the orthogonal scaling/wavelet pair under
//! periodic extension and keeps every second output. A level whose input has
//! odd length is first extended by repeating its last sample (half-sample
//! symmetric), so every level is critically sampled and exactly invertible.

use serde::{Deserialize, Serialize};

use crate::audio_io::Signal;
use crate::error::{Error, Result};

/// Daubechies scaling filter with four vanishing moments (8 taps).
const DB4: [f64; 8] = [
    0.230_377_813_308_855_23,
    0.714_846_570_552_541_5,
    0.630_880_767_929_590_4,
    -0.027_983_769_416_983_85,
    -0.187_034_811_718_881_14,
    0.030_841_381_835_986_965,
    0.032_883_011_666_982_945,
    -0.010_597_401_784_997_278,
];

const HAAR: [f64; 2] = [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];

/// MAD-to-standard-deviation factor for Gaussian noise.
const MAD_SCALE: f64 = 0.6745;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WaveletFamily {
    #[serde(rename = "haar")]
    Haar,
    #[serde(rename = "db4")]
    Daubechies4,
}

impl WaveletFamily {
    /// Low-pass (scaling) decomposition filter.
    pub fn scaling_filter(self) -> &'static [f64] {
        match self {
            WaveletFamily::Haar => &HAAR,
            WaveletFamily::Daubechies4 => &DB4,
        }
    }

    /// High-pass filter, `g[n] = (-1)^n h[L-1-n]`.
    pub fn wavelet_filter(self) -> Vec<f64> {
        let h = self.scaling_filter();
        let len = h.len();
        (0..len)
            .map(|n| {
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                sign * h[len - 1 - n]
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdRule {
    /// `σ·sqrt(2·ln N)` with σ from the median absolute finest detail.
    Universal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdMode {
    Soft,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WaveletConfig {
    pub family: WaveletFamily,
    pub levels: usize,
    pub threshold_rule: ThresholdRule,
    pub threshold_mode: ThresholdMode,
}

impl Default for WaveletConfig {
    fn default() -> Self {
        Self {
            family: WaveletFamily::Daubechies4,
            levels: 4,
            threshold_rule: ThresholdRule::Universal,
            threshold_mode: ThresholdMode::Soft,
        }
    }
}

impl WaveletConfig {
    pub fn validate(&self) -> Result<()> {
        if self.levels == 0 {
            return Err(Error::Config("wavelet levels must be at least 1".into()));
        }
        Ok(())
    }

    fn check_depth(&self, len: usize) -> Result<()> {
        self.validate()?;
        let too_deep = self.levels >= usize::BITS as usize || len < (1usize << self.levels);
        if too_deep {
            return Err(Error::Depth {
                levels: self.levels,
                len,
            });
        }
        Ok(())
    }
}

/// Coefficient pyramid. `details[0]` is the finest level.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletDecomposition {
    pub approximation: Vec<f64>,
    pub details: Vec<Vec<f64>>,
    /// Unpadded input length at each level, finest first.
    pub level_lengths: Vec<usize>,
}

impl WaveletDecomposition {
    pub fn coefficient_count(&self) -> usize {
        self.approximation.len() + self.details.iter().map(Vec::len).sum::<usize>()
    }
}

pub fn dwt_forward(samples: &[f64], config: &WaveletConfig) -> Result<WaveletDecomposition> {
    config.check_depth(samples.len())?;
    let h = config.family.scaling_filter();
    let g = config.family.wavelet_filter();

    let mut current = samples.to_vec();
    let mut details = Vec::with_capacity(config.levels);
    let mut level_lengths = Vec::with_capacity(config.levels);
    for _ in 0..config.levels {
        level_lengths.push(current.len());
        if current.len() % 2 == 1 {
            let last = current[current.len() - 1];
            current.push(last);
        }
        let (approx, detail) = analysis_step(&current, h, &g);
        details.push(detail);
        current = approx;
    }

    Ok(WaveletDecomposition {
        approximation: current,
        details,
        level_lengths,
    })
}

pub fn dwt_inverse(decomp: &WaveletDecomposition, config: &WaveletConfig) -> Result<Vec<f64>> {
    if decomp.details.len() != config.levels || decomp.level_lengths.len() != config.levels {
        return Err(Error::Structure(format!(
            "decomposition has {} detail levels, config expects {}",
            decomp.details.len(),
            config.levels
        )));
    }
    let h = config.family.scaling_filter();
    let g = config.family.wavelet_filter();

    let mut current = decomp.approximation.clone();
    for level in (0..config.levels).rev() {
        let detail = &decomp.details[level];
        let target = decomp.level_lengths[level];
        if detail.len() != current.len() || target.div_ceil(2) != detail.len() {
            return Err(Error::Structure(format!(
                "level {} has {} approximation and {} detail coefficients for length {}",
                level + 1,
                current.len(),
                detail.len(),
                target
            )));
        }
        let mut rebuilt = synthesis_step(&current, detail, h, &g);
        rebuilt.truncate(target);
        current = rebuilt;
    }
    Ok(current)
}

fn analysis_step(x: &[f64], h: &[f64], g: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let half = n / 2;
    let mut approx = vec![0.0; half];
    let mut detail = vec![0.0; half];
    for i in 0..half {
        let mut a = 0.0;
        let mut d = 0.0;
        for (tap, (&hk, &gk)) in h.iter().zip(g).enumerate() {
            let v = x[(2 * i + tap) % n];
            a += hk * v;
            d += gk * v;
        }
        approx[i] = a;
        detail[i] = d;
    }
    (approx, detail)
}

fn synthesis_step(approx: &[f64], detail: &[f64], h: &[f64], g: &[f64]) -> Vec<f64> {
    let n = 2 * approx.len();
    let mut out = vec![0.0; n];
    for (i, (&a, &d)) in approx.iter().zip(detail).enumerate() {
        for (tap, (&hk, &gk)) in h.iter().zip(g).enumerate() {
            out[(2 * i + tap) % n] += hk * a + gk * d;
        }
    }
    out
}

pub fn soft_threshold(value: f64, threshold: f64) -> f64 {
    let magnitude = value.abs() - threshold;
    if magnitude > 0.0 {
        magnitude.copysign(value)
    } else {
        0.0
    }
}

/// Noise-level estimate from the finest detail band.
pub fn estimate_noise_sigma(finest_details: &[f64]) -> f64 {
    if finest_details.is_empty() {
        return 0.0;
    }
    let mut mags: Vec<f64> = finest_details.iter().map(|d| d.abs()).collect();
    mags.sort_by(f64::total_cmp);
    let mid = mags.len() / 2;
    let median = if mags.len().is_multiple_of(2) {
        0.5 * (mags[mid - 1] + mags[mid])
    } else {
        mags[mid]
    };
    median / MAD_SCALE
}

pub fn universal_threshold(sigma: f64, len: usize) -> f64 {
    if len < 2 {
        return 0.0;
    }
    sigma * (2.0 * (len as f64).ln()).sqrt()
}

/// Soft-thresholds every detail level in place and returns the threshold used.
pub fn shrink_details(decomp: &mut WaveletDecomposition, signal_len: usize, config: &WaveletConfig) -> f64 {
    let sigma = decomp
        .details
        .first()
        .map_or(0.0, |d| estimate_noise_sigma(d));
    let threshold = match config.threshold_rule {
        ThresholdRule::Universal => universal_threshold(sigma, signal_len),
    };
    match config.threshold_mode {
        ThresholdMode::Soft => {
            for level in &mut decomp.details {
                for c in level.iter_mut() {
                    *c = soft_threshold(*c, threshold);
                }
            }
        }
    }
    threshold
}

pub fn denoise(signal: &Signal, config: &WaveletConfig) -> Result<Signal> {
    let mut decomp = dwt_forward(signal.samples(), config)?;
    shrink_details(&mut decomp, signal.len(), config);
    let samples = dwt_inverse(&decomp, config)?;
    Ok(signal.with_samples(samples))
}
