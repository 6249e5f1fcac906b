//! Text-independent speaker identification for access control.
//!
//! The processing chain is: WAV decoding ([`audio_io`]), wavelet denoising
//! ([`wavelet`]), MFCC extraction ([`mfcc`]), clip-level pooling
//! ([`features`]), Euclidean kNN classification ([`knn`]), cross-validated
//! evaluation ([`evaluation`]) and the claim / password-fallback access flow
//! ([`access`]). [`pipeline`] bundles the feature-producing stages behind one
//! fingerprinted configuration, and [`synth`] generates a synthetic corpus for
//! demos and end-to-end tests.

pub mod access;
pub mod audio_io;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod knn;
pub mod mfcc;
pub mod pipeline;
pub mod synth;
pub mod wavelet;

pub use access::{AccessDecision, AccessOutcome, CredentialStore, PasswordOutcome};
pub use audio_io::{decode_wav, load_corpus, Corpus, LabeledClip, Signal, SkippedClip};
pub use error::{Error, Result};
pub use evaluation::{EvalReport, HoldoutAccuracy, LabeledFeature};
pub use features::{pool, ClipFeature};
pub use knn::{Prediction, SpeakerModel};
pub use mfcc::{extract_mfcc, MfccConfig, MfccMatrix};
pub use pipeline::PipelineConfig;
pub use wavelet::{denoise, WaveletConfig, WaveletFamily};
