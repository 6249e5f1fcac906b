mod common;

use std::f64::consts::PI;

use rand_distr::{Distribution, Normal};
use voicegate_core::wavelet::{denoise, dwt_forward, shrink_details, WaveletConfig};
use voicegate_core::Signal;

fn sine(len: usize, rate: f64, freq: f64, amp: f64) -> Vec<f64> {
    (0..len).map(|n| amp * (2.0 * PI * freq * n as f64 / rate).sin()).collect()
}

fn noise(seed: u64, len: usize, sigma: f64) -> Vec<f64> {
    let mut r = common::rng(seed);
    let d = Normal::new(0.0, sigma).unwrap();
    (0..len).map(|_| d.sample(&mut r)).collect()
}

fn variance(x: &[f64]) -> f64 {
    let m = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64
}

fn snr_db(clean: &[f64], test: &[f64]) -> f64 {
    let s: f64 = clean.iter().map(|v| v * v).sum();
    let e: f64 = clean.iter().zip(test).map(|(a, b)| (a - b).powi(2)).sum();
    10.0 * (s / e).log10()
}

fn sine_snr_gain(rate: u32, cfg: &WaveletConfig) -> (f64, f64) {
    let len = rate as usize;
    let clean = sine(len, f64::from(rate), 440.0, 0.5);
    let sigma = (0.125 / 10f64.powf(0.5)).sqrt();
    let noisy: Vec<f64> = clean.iter().zip(noise(5, len, sigma)).map(|(a, b)| a + b).collect();
    let before = snr_db(&clean, &noisy);
    let out = denoise(&Signal::new(noisy, rate).unwrap(), cfg).unwrap();
    (before, snr_db(&clean, out.samples()))
}

#[test]
fn sine_in_noise_improves_by_three_db() {
    let (before, after) = sine_snr_gain(44_100, &WaveletConfig::default());
    assert!((before - 5.0).abs() < 0.2, "{before}");
    assert!(after - before >= 3.0, "{before} -> {after}");
}

#[test]
fn sine_at_16k_needs_the_tone_inside_the_approximation_band() {
    // Three levels keep 440 Hz well below the 1 kHz approximation edge.
    let cfg = WaveletConfig { levels: 3, ..WaveletConfig::default() };
    let (before, after) = sine_snr_gain(16_000, &cfg);
    assert!(after - before >= 3.0, "{before} -> {after}");
}

#[test]
fn pure_noise_variance_drops() {
    let x = noise(17, 8192, 0.1);
    let out = denoise(&Signal::new(x.clone(), 16000).unwrap(), &WaveletConfig::default()).unwrap();
    assert!(variance(out.samples()) < variance(&x));
}

#[test]
fn contraction_energy_and_repeat_invariants() {
    let cfg = WaveletConfig::default();
    for seed in 0..100 {
        let len = 1 << (6 + seed % 6);
        let mut x = sine(len, 16000.0, 300.0 + seed as f64, 0.3);
        for (a, b) in x.iter_mut().zip(noise(seed, len, 0.05)) {
            *a += b;
        }

        let before = dwt_forward(&x, &cfg).unwrap();
        let mut after = before.clone();
        shrink_details(&mut after, len, &cfg);
        for (lb, la) in before.details.iter().zip(&after.details) {
            for (b, a) in lb.iter().zip(la) {
                assert!(a.abs() <= b.abs());
            }
        }

        let once = denoise(&Signal::new(x.clone(), 16000).unwrap(), &cfg).unwrap();
        let e_in: f64 = x.iter().map(|v| v * v).sum();
        let e_out: f64 = once.samples().iter().map(|v| v * v).sum();
        assert!(e_out <= e_in + 1e-9, "seed {seed}");

        let twice = denoise(&once, &cfg).unwrap();
        assert!(variance(twice.samples()) <= variance(once.samples()) + 1e-12, "seed {seed}");
    }
}
