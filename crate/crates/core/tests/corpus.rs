use std::fs;
use std::io::Cursor;
use std::path::Path;

use hound::{SampleFormat, WavSpec, WavWriter};
use voicegate_core::audio_io::{decode_wav, load_corpus, load_dataset, Dataset};
use voicegate_core::Error;

fn pcm16(samples: &[f64], rate: u32) -> Vec<u8> {
    let spec = WavSpec { channels: 1, sample_rate: rate, bits_per_sample: 16, sample_format: SampleFormat::Int };
    let mut buf = Cursor::new(Vec::new());
    let mut w = WavWriter::new(&mut buf, spec).unwrap();
    for &s in samples {
        w.write_sample((s * 32768.0).round().clamp(-32768.0, 32767.0) as i16).unwrap();
    }
    w.finalize().unwrap();
    buf.into_inner()
}

fn write(path: &Path, bytes: &[u8]) {
    fs::create_dir_all(path.parent().unwrap()).unwrap();
    fs::write(path, bytes).unwrap();
}

#[test]
fn one_second_sine_fixture() {
    let amp = 0.8;
    let x: Vec<f64> = (0..8000).map(|n| amp * (2.0 * std::f64::consts::PI * 440.0 * n as f64 / 8000.0).sin()).collect();
    let s = decode_wav(&pcm16(&x, 8000)).unwrap();
    assert_eq!(s.len(), 8000);
    let peak_in = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let peak_out = s.samples().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!((peak_in - peak_out).abs() <= 1.0 / 32768.0);
    for (a, b) in x.iter().zip(s.samples()) {
        assert!((a - b).abs() <= 1.0 / 32768.0);
    }
}

#[test]
fn corpus_counts_labels_and_order() {
    let dir = tempfile::tempdir().unwrap();
    let clip = pcm16(&[0.1; 800], 8000);
    for name in ["a/1.wav", "a/0.wav", "b/x.wav", "b/y.WAV", "b/z.wav", "b/notes.txt"] {
        write(&dir.path().join(name), &clip);
    }
    let c = load_corpus(dir.path()).unwrap();
    assert_eq!(c.clips.len(), 5);
    let labels: Vec<_> = c.clips.iter().map(|c| c.speaker_id.as_str()).collect();
    assert_eq!(labels, ["a", "a", "b", "b", "b"]);
    let ids: Vec<_> = c.clips.iter().map(|c| c.clip_id.as_str()).collect();
    assert_eq!(ids, ["a/0.wav", "a/1.wav", "b/x.wav", "b/y.WAV", "b/z.wav"]);
    assert!(c.skipped.is_empty());

    let again = load_corpus(dir.path()).unwrap();
    let again_ids: Vec<_> = again.clips.iter().map(|c| c.clip_id.as_str()).collect();
    assert_eq!(ids, again_ids);
}

#[test]
fn empty_root_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(load_corpus(dir.path()), Err(Error::EmptyCorpus(_))));
    fs::create_dir(dir.path().join("speaker_without_audio")).unwrap();
    assert!(matches!(load_corpus(dir.path()), Err(Error::EmptyCorpus(_))));
}

#[test]
fn corrupt_file_is_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let clip = pcm16(&[0.1; 800], 8000);
    for i in 0..9 {
        write(&dir.path().join(format!("s{}/{i}.wav", i % 2)), &clip);
    }
    write(&dir.path().join("s0/bad.wav"), b"RIFF garbage");
    let c = load_corpus(dir.path()).unwrap();
    assert_eq!(c.clips.len(), 9);
    assert_eq!(c.skipped.len(), 1);
    assert_eq!(c.skipped[0].speaker_id, "s0");
    assert!(c.speakers_without_clips().is_empty());
}

#[test]
fn split_layout_is_detected() {
    let dir = tempfile::tempdir().unwrap();
    let clip = pcm16(&[0.1; 800], 8000);
    write(&dir.path().join("train/a/0.wav"), &clip);
    write(&dir.path().join("test/a/0.wav"), &clip);
    match load_dataset(dir.path()).unwrap() {
        Dataset::Split { train, test } => {
            assert_eq!(train.clips[0].clip_id, "train/a/0.wav");
            assert_eq!(test.clips[0].clip_id, "test/a/0.wav");
        }
        Dataset::Flat(_) => panic!("expected split layout"),
    }
}
