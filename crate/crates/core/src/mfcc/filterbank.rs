use crate::error::{Error, Result};

/// Lower bound applied to filterbank energies before taking the log.
pub const LOG_FLOOR: f64 = 1e-10;

/// Hz to Mel, `2595·log10(1 + f/700)`.
pub fn mel(f_hz: f64) -> Result<f64> {
    if !f_hz.is_finite() || f_hz < 0.0 {
        return Err(Error::Domain(format!("frequency {f_hz} Hz must be finite and non-negative")));
    }
    Ok(2595.0 * (1.0 + f_hz / 700.0).log10())
}

/// Inverse of [`mel`].
pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters with unit peak height, uniformly spaced in Mel.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    weights: Vec<Vec<f64>>,
    center_freqs_hz: Vec<f64>,
    boundary_bins: Vec<usize>,
}

impl MelFilterbank {
    /// One row per filter, each `fft_size / 2 + 1` wide.
    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn center_freqs_hz(&self) -> &[f64] {
        &self.center_freqs_hz
    }

    /// The `M + 2` FFT bins the triangle corners were snapped to.
    pub fn boundary_bins(&self) -> &[usize] {
        &self.boundary_bins
    }

    pub fn num_filters(&self) -> usize {
        self.weights.len()
    }

    pub fn num_bins(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }
}

pub fn build_filterbank(
    num_filters: usize,
    fft_size: usize,
    sample_rate_hz: u32,
    fmin_hz: f64,
    fmax_hz: f64,
) -> Result<MelFilterbank> {
    if num_filters == 0 {
        return Err(Error::Config("filterbank needs at least one filter".into()));
    }
    if fft_size < 2 {
        return Err(Error::Config(format!("fft size {fft_size} is too small")));
    }
    let nyquist = f64::from(sample_rate_hz) / 2.0;
    if !(fmin_hz >= 0.0 && fmin_hz < fmax_hz && fmax_hz <= nyquist) {
        return Err(Error::Config(format!(
            "filterbank edges must satisfy 0 <= fmin < fmax <= {nyquist} Hz, got {fmin_hz}..{fmax_hz}"
        )));
    }

    let num_bins = fft_size / 2 + 1;
    let mel_lo = mel(fmin_hz)?;
    let mel_hi = mel(fmax_hz)?;
    let step = (mel_hi - mel_lo) / (num_filters + 1) as f64;
    let edges_hz: Vec<f64> = (0..num_filters + 2)
        .map(|i| mel_to_hz(mel_lo + step * i as f64))
        .collect();
    let bin_width = f64::from(sample_rate_hz) / fft_size as f64;
    let boundary_bins: Vec<usize> = edges_hz
        .iter()
        .map(|&hz| ((hz / bin_width).round() as usize).min(num_bins - 1))
        .collect();

    let mut weights = Vec::with_capacity(num_filters);
    for m in 0..num_filters {
        let (left, center, right) = (boundary_bins[m], boundary_bins[m + 1], boundary_bins[m + 2]);
        if left >= center || center >= right {
            return Err(Error::Resolution(format!(
                "filter {} collapses onto bins {left}/{center}/{right}; use fewer filters or a larger FFT",
                m + 1
            )));
        }
        let mut row = vec![0.0; num_bins];
        for (k, w) in row.iter_mut().enumerate().take(right).skip(left + 1) {
            *w = if k <= center {
                (k - left) as f64 / (center - left) as f64
            } else {
                (right - k) as f64 / (right - center) as f64
            };
        }
        weights.push(row);
    }

    Ok(MelFilterbank {
        weights,
        center_freqs_hz: edges_hz[1..=num_filters].to_vec(),
        boundary_bins,
    })
}

/// Natural-log filterbank energies of a magnitude spectrum.
pub fn log_fbe(spectrum: &[f64], filterbank: &MelFilterbank) -> Result<Vec<f64>> {
    if spectrum.len() != filterbank.num_bins() {
        return Err(Error::Shape {
            expected: filterbank.num_bins(),
            found: spectrum.len(),
        });
    }
    Ok(filterbank
        .weights
        .iter()
        .map(|row| {
            let energy: f64 = row.iter().zip(spectrum).map(|(w, s)| w * s).sum();
            energy.max(LOG_FLOOR).ln()
        })
        .collect())
}
