//! Clip-level pooling: one fixed-length vector per clip.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mfcc::MfccMatrix;

/// Per-coefficient means followed by per-coefficient population standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipFeature {
    pub clip_id: String,
    pub vector: Vec<f64>,
}

impl ClipFeature {
    pub fn new(clip_id: impl Into<String>, vector: Vec<f64>) -> Self {
        Self {
            clip_id: clip_id.into(),
            vector,
        }
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }
}

pub fn pool(mfcc: &MfccMatrix, clip_id: impl Into<String>) -> Result<ClipFeature> {
    let rows = mfcc.rows();
    if rows.is_empty() {
        return Err(Error::EmptyFeature);
    }
    let n = mfcc.num_ceps();
    let count = rows.len() as f64;

    let mut mean = vec![0.0; n];
    for row in rows {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= count);

    let mut var = vec![0.0; n];
    for row in rows {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
            let d = v - m;
            *s += d * d;
        }
    }

    let mut vector = mean;
    vector.extend(var.into_iter().map(|s| (s / count).sqrt()));
    Ok(ClipFeature::new(clip_id, vector))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: Vec<Vec<f64>>) -> MfccMatrix {
        let n = rows.first().map_or(2, Vec::len);
        MfccMatrix::new(rows, n, String::new()).unwrap()
    }

    #[test]
    fn single_frame_has_zero_spread() {
        let row: Vec<f64> = (1..=13).map(f64::from).collect();
        let f = pool(&matrix(vec![row.clone()]), "x").unwrap();
        assert_eq!(&f.vector[..13], row.as_slice());
        assert!(f.vector[13..].iter().all(|&s| s == 0.0));
        assert_eq!(f.dim(), 26);
    }

    #[test]
    fn two_frames() {
        let f = pool(&matrix(vec![vec![1.0, 5.0], vec![3.0, 5.0]]), "x").unwrap();
        assert_eq!(f.vector, vec![2.0, 5.0, 1.0, 0.0]);
    }

    #[test]
    fn zero_frames() {
        assert!(matches!(pool(&matrix(vec![]), "x"), Err(Error::EmptyFeature)));
    }
}
