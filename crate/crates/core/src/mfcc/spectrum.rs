use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

/// Zero-padded FFT size used for a frame of `frame_len` samples.
pub fn fft_size_for(frame_len: usize) -> usize {
    frame_len.max(1).next_power_of_two()
}

/// Magnitudes of bins `0..=fft_size/2` of the zero-padded frame.
pub fn magnitude_spectrum(frame: &[f64]) -> Vec<f64> {
    SpectrumAnalyzer::new(fft_size_for(frame.len())).magnitudes(frame)
}

/// Reusable forward FFT of a fixed size.
#[derive(Clone)]
pub struct SpectrumAnalyzer {
    fft: Arc<dyn Fft<f64>>,
    size: usize,
}

impl std::fmt::Debug for SpectrumAnalyzer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectrumAnalyzer").field("size", &self.size).finish()
    }
}

impl SpectrumAnalyzer {
    pub fn new(size: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(size);
        Self { fft, size }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn num_bins(&self) -> usize {
        self.size / 2 + 1
    }

    /// `frame` longer than the FFT size is truncated.
    pub fn magnitudes(&self, frame: &[f64]) -> Vec<f64> {
        let mut buf: Vec<Complex<f64>> = frame
            .iter()
            .take(self.size)
            .map(|&x| Complex::new(x, 0.0))
            .collect();
        buf.resize(self.size, Complex::new(0.0, 0.0));
        self.fft.process(&mut buf);
        buf[..self.num_bins()].iter().map(|c| c.norm()).collect()
    }
}
