mod common;

use common::*;
use rand::Rng;
use voicegate_core::evaluation::{kfold_cv, stratified_folds};
use voicegate_core::features::{pool, ClipFeature};
use voicegate_core::knn::{euclidean_distance, SpeakerModel, TrainingPoint};
use voicegate_core::mfcc::{
    build_filterbank, dct_cepstra, log_fbe, magnitude_spectrum, MfccMatrix, LOG_FLOOR,
};
use voicegate_core::wavelet::{dwt_forward, dwt_inverse, WaveletConfig, WaveletFamily};

#[test]
fn db4_three_levels_matches_convolution_oracle() {
    let mut r = rng(1024);
    let x = random_vec(&mut r, 1024);
    let cfg = WaveletConfig {
        family: WaveletFamily::Daubechies4,
        levels: 3,
        ..WaveletConfig::default()
    };
    let d = dwt_forward(&x, &cfg).unwrap();
    let family = cfg.family;
    let (approx, details) = dwt_oracle(&x, family.scaling_filter(), &family.wavelet_filter(), 3);
    for (a, b) in d.approximation.iter().zip(&approx) {
        assert!((a - b).abs() < 1e-9);
    }
    for (level, (ours, theirs)) in d.details.iter().zip(&details).enumerate() {
        assert_eq!(ours.len(), theirs.len(), "level {level}");
        for (a, b) in ours.iter().zip(theirs) {
            assert!((a - b).abs() < 1e-9);
        }
    }
    assert_eq!(d.coefficient_count(), 1024);

    let y = dwt_inverse(&d, &cfg).unwrap();
    let err = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-10, "{err}");
}

#[test]
fn odd_length_cascade_matches_oracle() {
    let mut r = rng(77);
    let x = random_vec(&mut r, 999);
    for family in [WaveletFamily::Haar, WaveletFamily::Daubechies4] {
        let cfg = WaveletConfig { family, levels: 5, ..WaveletConfig::default() };
        let d = dwt_forward(&x, &cfg).unwrap();
        let (approx, details) = dwt_oracle(&x, family.scaling_filter(), &family.wavelet_filter(), 5);
        assert_eq!(d.approximation.len(), approx.len());
        for (a, b) in d.approximation.iter().zip(&approx) {
            assert!((a - b).abs() < 1e-9);
        }
        for (ours, theirs) in d.details.iter().zip(&details) {
            for (a, b) in ours.iter().zip(theirs) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn knn_matches_brute_force_oracle() {
    let mut r = rng(26);
    let train = random_points(&mut r, 100, 26, 5);
    for k in 2..=6 {
        let model = SpeakerModel::fit(train.clone(), k, "").unwrap();
        for _ in 0..40 {
            let q = random_vec(&mut r, 26);
            assert_eq!(model.predict_vector(&q).unwrap().label, knn_oracle(&train, &q, k));
        }
    }
}

#[test]
fn knn_oracle_agrees_under_heavy_ties() {
    // Integer grid coordinates produce many equal distances.
    let mut r = rng(5);
    let train: Vec<TrainingPoint> = (0..60)
        .map(|i| TrainingPoint {
            feature: ClipFeature::new(format!("g{i}"), vec![f64::from(r.random_range(0..4)), f64::from(r.random_range(0..4))]),
            speaker_id: format!("L{}", r.random_range(0..3)),
        })
        .collect();
    for k in 1..=8 {
        let model = SpeakerModel::fit(train.clone(), k, "").unwrap();
        for _ in 0..30 {
            let q = vec![f64::from(r.random_range(0..4)), f64::from(r.random_range(0..4))];
            assert_eq!(model.predict_vector(&q).unwrap().label, knn_oracle(&train, &q, k), "k={k} q={q:?}");
        }
    }
}

#[test]
fn distance_matches_naive_sum() {
    let mut r = rng(3);
    let a = random_vec(&mut r, 26);
    let b = random_vec(&mut r, 26);
    assert!((euclidean_distance(&a, &b).unwrap() - naive_distance(&a, &b)).abs() < 1e-12);
}

#[test]
fn log_fbe_matches_dot_then_log() {
    let fb = build_filterbank(20, 512, 16000, 0.0, 8000.0).unwrap();
    let mut r = rng(11);
    let spectrum: Vec<f64> = (0..257).map(|_| r.random_range(0.0..5.0)).collect();
    let ours = log_fbe(&spectrum, &fb).unwrap();
    for (j, row) in fb.weights().iter().enumerate() {
        let mut dot = 0.0;
        for k in 0..257 {
            dot += row[k] * spectrum[k];
        }
        let expected = if dot > LOG_FLOOR { dot.ln() } else { LOG_FLOOR.ln() };
        assert!((ours[j] - expected).abs() < 1e-12);
    }
}

#[test]
fn dct_inverse_recovers_centered_input() {
    let mut r = rng(4);
    for m in [2, 13, 20, 30] {
        let x = random_vec(&mut r, m);
        let c = dct_cepstra(&x, m).unwrap();
        let mean = x.iter().sum::<f64>() / m as f64;
        for j in 1..=m {
            let mut rec = 0.0;
            for (i, ci) in c.iter().enumerate().take(m - 1) {
                let i = i + 1;
                rec += ci * (2.0 / m as f64).sqrt()
                    * (std::f64::consts::PI * i as f64 / m as f64 * (j as f64 - 0.5)).cos();
            }
            assert!((rec - (x[j - 1] - mean)).abs() < 1e-9);
        }
        // the i = M row is identically zero
        assert!(c[m - 1].abs() < 1e-9);
    }
}

#[test]
fn magnitude_spectrum_matches_dft_and_parseval() {
    let mut r = rng(400);
    let x = random_vec(&mut r, 400);
    let ours = magnitude_spectrum(&x);
    let naive = naive_dft_magnitudes(&x, 512);
    for (a, b) in ours.iter().zip(&naive) {
        assert!((a - b).abs() < 1e-9);
    }
    // Rebuild |X|² over all 512 bins from the half spectrum via conjugate symmetry.
    let full: f64 = ours[0].powi(2)
        + ours[256].powi(2)
        + 2.0 * ours[1..256].iter().map(|m| m * m).sum::<f64>();
    let energy: f64 = x.iter().map(|v| v * v).sum();
    assert!((full / 512.0 - energy).abs() < 1e-9);
}

#[test]
fn pooling_matches_two_pass_oracle() {
    let mut r = rng(98);
    let rows: Vec<Vec<f64>> = (0..98).map(|_| random_vec(&mut r, 13)).collect();
    let f = pool(&MfccMatrix::new(rows.clone(), 13, String::new()).unwrap(), "c").unwrap();
    for c in 0..13 {
        let col: Vec<f64> = rows.iter().map(|row| row[c]).collect();
        let mean = col.iter().sum::<f64>() / 98.0;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 98.0;
        assert!((f.vector[c] - mean).abs() < 1e-12);
        assert!((f.vector[13 + c] - var.sqrt()).abs() < 1e-12);
    }
}

#[test]
fn two_fold_unrolled_by_hand() {
    let mut r = rng(10);
    let data: Vec<TrainingPoint> = (0..10)
        .map(|i| TrainingPoint {
            feature: ClipFeature::new(format!("p{i}"), random_vec(&mut r, 4)),
            speaker_id: if i < 5 { "a".into() } else { "b".into() },
        })
        .collect();
    let folds = stratified_folds(&data, 2, 123).unwrap();
    let mut fold_acc = Vec::new();
    for fold in 0..2 {
        let train: Vec<TrainingPoint> = data.iter().zip(&folds).filter(|(_, f)| **f != fold).map(|(p, _)| p.clone()).collect();
        let test: Vec<&TrainingPoint> = data.iter().zip(&folds).filter(|(_, f)| **f == fold).map(|(p, _)| p).collect();
        let correct = test
            .iter()
            .filter(|p| knn_oracle(&train, &p.feature.vector, 3) == p.speaker_id)
            .count();
        fold_acc.push(correct as f64 / test.len() as f64);
    }
    let expected = (fold_acc[0] + fold_acc[1]) / 2.0;
    assert_eq!(kfold_cv(&data, 2, 3, 123).unwrap(), expected);
}

#[test]
fn chance_level_kfold() {
    for seed in 0..10 {
        let mut r = rng(1000 + seed);
        let data = random_points(&mut r, 150, 26, 5);
        let acc = kfold_cv(&data, 5, 3, seed).unwrap();
        assert!((0.05..=0.45).contains(&acc), "seed {seed}: {acc}");
    }
}
