//! Naive reference implementations used as independent oracles.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use voicegate_core::features::ClipFeature;
use voicegate_core::knn::TrainingPoint;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// One analysis level: periodically extend, fully convolve with the
/// reversed filter, keep every other output.
pub fn conv_downsample(x: &[f64], filter: &[f64]) -> Vec<f64> {
    let n = x.len();
    let taps = filter.len();
    let extended: Vec<f64> = (0..n + taps - 1).map(|i| x[i % n]).collect();
    let reversed: Vec<f64> = filter.iter().rev().copied().collect();
    // full convolution
    let mut full = vec![0.0; extended.len() + taps - 1];
    for (i, &e) in extended.iter().enumerate() {
        for (j, &r) in reversed.iter().enumerate() {
            full[i + j] += e * r;
        }
    }
    (0..n / 2).map(|i| full[2 * i + taps - 1]).collect()
}

/// Multi-level cascade with last-sample repetition for odd lengths.
pub fn dwt_oracle(x: &[f64], h: &[f64], g: &[f64], levels: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut current = x.to_vec();
    let mut details = Vec::new();
    for _ in 0..levels {
        if current.len() % 2 == 1 {
            current.push(*current.last().unwrap());
        }
        details.push(conv_downsample(&current, g));
        current = conv_downsample(&current, h);
    }
    (current, details)
}

pub fn naive_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    s.sqrt()
}

/// Sort all distances, take k, majority vote; ties by closest member then label order.
pub fn knn_oracle(train: &[TrainingPoint], query: &[f64], k: usize) -> String {
    let mut all: Vec<(f64, usize)> = train
        .iter()
        .enumerate()
        .map(|(i, p)| (naive_distance(query, &p.feature.vector), i))
        .collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let mut votes: BTreeMap<&str, (usize, f64)> = BTreeMap::new();
    for &(d, i) in &all[..k] {
        let e = votes.entry(train[i].speaker_id.as_str()).or_insert((0, f64::INFINITY));
        e.0 += 1;
        if d < e.1 {
            e.1 = d;
        }
    }
    let top = votes.values().map(|v| v.0).max().unwrap();
    let mut best: Option<(&str, f64)> = None;
    for (label, (count, nearest)) in &votes {
        if *count == top && best.is_none_or(|(_, d)| *nearest < d) {
            best = Some((label, *nearest));
        }
    }
    best.unwrap().0.to_string()
}

pub fn random_points(rng: &mut ChaCha8Rng, n: usize, dim: usize, labels: usize) -> Vec<TrainingPoint> {
    (0..n)
        .map(|i| TrainingPoint {
            feature: ClipFeature::new(format!("p{i}"), random_vec(rng, dim)),
            speaker_id: format!("L{}", rng.random_range(0..labels)),
        })
        .collect()
}

/// O(N²) DFT magnitudes of bins 0..=N/2.
pub fn naive_dft_magnitudes(x: &[f64], size: usize) -> Vec<f64> {
    (0..=size / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (n, &v) in x.iter().enumerate() {
                let angle = -2.0 * std::f64::consts::PI * (k * n) as f64 / size as f64;
                re += v * angle.cos();
                im += v * angle.sin();
            }
            (re * re + im * im).sqrt()
        })
        .collect()
}
