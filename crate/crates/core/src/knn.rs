//! Euclidean k-nearest-neighbour classification by majority vote.
//!
//! Ties are resolved deterministically: among equidistant points the one
//! inserted first is nearer; among labels with equal votes the label whose
//! closest neighbour is nearest to the query wins, then the label that sorts
//! first.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::ClipFeature;

pub fn euclidean_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum::<f64>()
        .sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingPoint {
    pub feature: ClipFeature,
    pub speaker_id: String,
}

/// Stored training set of a lazy kNN learner.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerModel {
    points: Vec<TrainingPoint>,
    k: usize,
    dim: usize,
    label_set: Vec<String>,
    pipeline_fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Neighbor {
    pub clip_id: String,
    pub speaker_id: String,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub label: String,
    /// Winning votes divided by k.
    pub vote_fraction: f64,
    pub votes: usize,
    /// True when another label received as many votes as the winner.
    pub vote_tied: bool,
    /// The k nearest training points, nearest first.
    pub neighbors: Vec<Neighbor>,
}

impl SpeakerModel {
    pub fn fit(
        training: Vec<TrainingPoint>,
        k: usize,
        pipeline_fingerprint: impl Into<String>,
    ) -> Result<Self> {
        if training.is_empty() {
            return Err(Error::Config("training set is empty".into()));
        }
        if k == 0 || k > training.len() {
            return Err(Error::Config(format!(
                "k = {k} must be between 1 and the number of training points ({})",
                training.len()
            )));
        }
        let dim = training[0].feature.dim();
        if let Some(p) = training.iter().find(|p| p.feature.dim() != dim) {
            return Err(Error::Shape {
                expected: dim,
                found: p.feature.dim(),
            });
        }
        if let Some(p) = training.iter().find(|p| p.speaker_id.is_empty()) {
            return Err(Error::Config(format!(
                "training point {:?} has an empty speaker id",
                p.feature.clip_id
            )));
        }
        let label_set = training
            .iter()
            .map(|p| p.speaker_id.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        Ok(Self {
            points: training,
            k,
            dim,
            label_set,
            pipeline_fingerprint: pipeline_fingerprint.into(),
        })
    }

    pub fn points(&self) -> &[TrainingPoint] {
        &self.points
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Distinct speaker ids, sorted.
    pub fn label_set(&self) -> &[String] {
        &self.label_set
    }

    pub fn pipeline_fingerprint(&self) -> &str {
        &self.pipeline_fingerprint
    }

    pub fn with_k(&self, k: usize) -> Result<Self> {
        Self::fit(self.points.clone(), k, self.pipeline_fingerprint.clone())
    }

    pub fn predict(&self, query: &ClipFeature) -> Result<Prediction> {
        self.predict_vector(&query.vector)
    }

    pub fn predict_vector(&self, query: &[f64]) -> Result<Prediction> {
        if query.len() != self.dim {
            return Err(Error::Shape {
                expected: self.dim,
                found: query.len(),
            });
        }

        // Bounded insertion keeps the k nearest; equal distances stay in
        // insertion order because a newcomer goes after its equals.
        let mut nearest: Vec<(f64, usize)> = Vec::with_capacity(self.k + 1);
        for (index, point) in self.points.iter().enumerate() {
            let distance = euclidean_distance(query, &point.feature.vector)?;
            if nearest.len() == self.k && distance >= nearest[self.k - 1].0 {
                continue;
            }
            let pos = nearest.partition_point(|&(d, _)| d <= distance);
            nearest.insert(pos, (distance, index));
            nearest.truncate(self.k);
        }

        // (votes, closest distance) per label in label_set order.
        let mut tally: Vec<(usize, f64)> = vec![(0, f64::INFINITY); self.label_set.len()];
        for &(distance, index) in &nearest {
            let slot = self.label_index(&self.points[index].speaker_id);
            tally[slot].0 += 1;
            tally[slot].1 = tally[slot].1.min(distance);
        }
        let best_votes = tally.iter().map(|t| t.0).max().unwrap_or(0);
        let contenders: Vec<usize> = (0..tally.len()).filter(|&i| tally[i].0 == best_votes).collect();
        let winner = contenders
            .iter()
            .copied()
            .min_by(|&a, &b| tally[a].1.total_cmp(&tally[b].1).then(a.cmp(&b)))
            .expect("k >= 1 guarantees at least one vote");

        Ok(Prediction {
            label: self.label_set[winner].clone(),
            vote_fraction: best_votes as f64 / self.k as f64,
            votes: best_votes,
            vote_tied: contenders.len() > 1,
            neighbors: nearest
                .into_iter()
                .map(|(distance, index)| Neighbor {
                    clip_id: self.points[index].feature.clip_id.clone(),
                    speaker_id: self.points[index].speaker_id.clone(),
                    distance,
                })
                .collect(),
        })
    }

    fn label_index(&self, label: &str) -> usize {
        self.label_set
            .binary_search_by(|l| l.as_str().cmp(label))
            .expect("training labels are in label_set")
    }
}
