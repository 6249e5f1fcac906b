//! Cross-validated accuracy as a function of neighbour count.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::knn::{Prediction, SpeakerModel, TrainingPoint};

pub type LabeledFeature = TrainingPoint;

/// Holdout predictions with more vote ties than this fraction are reported as indeterminate.
pub const INDETERMINATE_TIE_FRACTION: f64 = 0.5;

/// Test share used when no fixed holdout set is given.
pub const DEFAULT_HOLDOUT_FRACTION: f64 = 0.2;

fn sorted_labels(data: &[LabeledFeature]) -> Vec<String> {
    data.iter()
        .map(|p| p.speaker_id.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

fn indices_by_label(data: &[LabeledFeature]) -> BTreeMap<&str, Vec<usize>> {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, p) in data.iter().enumerate() {
        groups.entry(p.speaker_id.as_str()).or_default().push(i);
    }
    groups
}

/// Fold index for every sample.
///
/// Each label's members are shuffled with a generator seeded by `seed` and
/// dealt round-robin, so per-label fold counts differ by at most one.
pub fn stratified_folds(data: &[LabeledFeature], folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {folds}")));
    }
    let groups = indices_by_label(data);
    if let Some((label, members)) = groups.iter().min_by_key(|(_, m)| m.len()) {
        if members.len() < folds {
            return Err(Error::InsufficientData {
                label: (*label).to_string(),
                count: members.len(),
                required: folds,
            });
        }
    } else {
        return Err(Error::Config("dataset is empty".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; data.len()];
    let mut dealt = 0;
    for members in groups.into_values() {
        let mut members = members;
        members.shuffle(&mut rng);
        for index in members {
            assignment[index] = dealt % folds;
            dealt += 1;
        }
    }
    Ok(assignment)
}

/// Seeded stratified split into (train, test) index lists.
///
/// Every label keeps at least one member on each side.
pub fn stratified_holdout_split(
    data: &[LabeledFeature],
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Config(format!("test fraction {test_fraction} outside (0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (label, mut members) in indices_by_label(data) {
        if members.len() < 2 {
            return Err(Error::InsufficientData {
                label: label.to_string(),
                count: members.len(),
                required: 2,
            });
        }
        members.shuffle(&mut rng);
        let n_test = ((members.len() as f64 * test_fraction).round() as usize).clamp(1, members.len() - 1);
        test.extend_from_slice(&members[..n_test]);
        train.extend_from_slice(&members[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// One k-fold run: every sample predicted once by a model trained on the other folds.
#[derive(Debug, Clone)]
pub struct KFoldOutcome {
    /// Mean over folds of per-fold accuracy.
    pub accuracy: f64,
    pub fold_accuracies: Vec<f64>,
    /// `(sample index, prediction)` in sample order.
    pub predictions: Vec<(usize, Prediction)>,
}

pub fn kfold_run(
    data: &[LabeledFeature],
    folds: usize,
    k_neighbors: usize,
    seed: u64,
) -> Result<KFoldOutcome> {
    let assignment = stratified_folds(data, folds, seed)?;
    let mut fold_accuracies = Vec::with_capacity(folds);
    let mut predictions = Vec::with_capacity(data.len());

    for fold in 0..folds {
        let (test_idx, train_idx): (Vec<usize>, Vec<usize>) =
            (0..data.len()).partition(|&i| assignment[i] == fold);
        if k_neighbors > train_idx.len() {
            return Err(Error::Config(format!(
                "k = {k_neighbors} exceeds the {} training points of fold {}",
                train_idx.len(),
                fold + 1
            )));
        }
        let train: Vec<LabeledFeature> = train_idx.iter().map(|&i| data[i].clone()).collect();
        let model = SpeakerModel::fit(train, k_neighbors, "")?;
        let mut correct = 0;
        for &i in &test_idx {
            let p = model.predict(&data[i].feature)?;
            if p.label == data[i].speaker_id {
                correct += 1;
            }
            predictions.push((i, p));
        }
        fold_accuracies.push(correct as f64 / test_idx.len() as f64);
    }
    predictions.sort_by_key(|(i, _)| *i);
    let accuracy = fold_accuracies.iter().sum::<f64>() / folds as f64;
    Ok(KFoldOutcome {
        accuracy,
        fold_accuracies,
        predictions,
    })
}

/// Stratified k-fold cross-validation accuracy.
pub fn kfold_cv(data: &[LabeledFeature], folds: usize, k_neighbors: usize, seed: u64) -> Result<f64> {
    kfold_run(data, folds, k_neighbors, seed).map(|o| o.accuracy)
}

#[derive(Debug, Clone)]
pub struct HoldoutOutcome {
    pub accuracy: f64,
    /// Fraction of test predictions decided by a vote tie.
    pub tie_fraction: f64,
    pub predictions: Vec<Prediction>,
}

pub fn holdout_run(
    train: &[LabeledFeature],
    test: &[LabeledFeature],
    k_neighbors: usize,
) -> Result<HoldoutOutcome> {
    let train_ids: HashSet<&str> = train.iter().map(|p| p.feature.clip_id.as_str()).collect();
    if let Some(p) = test.iter().find(|p| train_ids.contains(p.feature.clip_id.as_str())) {
        return Err(Error::Leakage(p.feature.clip_id.clone()));
    }
    if test.is_empty() {
        return Err(Error::Config("holdout test set is empty".into()));
    }
    let model = SpeakerModel::fit(train.to_vec(), k_neighbors, "")?;
    let predictions = test
        .iter()
        .map(|p| model.predict(&p.feature))
        .collect::<Result<Vec<_>>>()?;
    let correct = predictions
        .iter()
        .zip(test)
        .filter(|(pred, truth)| pred.label == truth.speaker_id)
        .count();
    let ties = predictions.iter().filter(|p| p.vote_tied).count();
    Ok(HoldoutOutcome {
        accuracy: correct as f64 / test.len() as f64,
        tie_fraction: ties as f64 / test.len() as f64,
        predictions,
    })
}

/// Fraction of test clips whose predicted speaker is correct.
pub fn holdout_cv(train: &[LabeledFeature], test: &[LabeledFeature], k_neighbors: usize) -> Result<f64> {
    holdout_run(train, test, k_neighbors).map(|o| o.accuracy)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum HoldoutAccuracy {
    Determinate { accuracy: f64, tie_fraction: f64 },
    Indeterminate { tie_fraction: f64 },
}

impl HoldoutAccuracy {
    pub fn accuracy(&self) -> Option<f64> {
        match self {
            HoldoutAccuracy::Determinate { accuracy, .. } => Some(*accuracy),
            HoldoutAccuracy::Indeterminate { .. } => None,
        }
    }

    fn from_outcome(o: &HoldoutOutcome) -> Self {
        if o.tie_fraction > INDETERMINATE_TIE_FRACTION {
            HoldoutAccuracy::Indeterminate {
                tie_fraction: o.tie_fraction,
            }
        } else {
            HoldoutAccuracy::Determinate {
                accuracy: o.accuracy,
                tie_fraction: o.tie_fraction,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborResult {
    pub k: usize,
    pub kfold_accuracy: f64,
    pub holdout: HoldoutAccuracy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub fold_count: usize,
    pub split_seed: u64,
    pub kfold_samples: usize,
    pub holdout_train_samples: usize,
    pub holdout_test_samples: usize,
    pub per_k_results: Vec<NeighborResult>,
    /// Neighbour count with the highest k-fold accuracy (smallest k on ties).
    pub best_k: usize,
    pub labels: Vec<String>,
    /// k-fold confusion counts at `best_k`; rows are true labels, columns predictions.
    pub confusion: Vec<Vec<usize>>,
}

impl EvalReport {
    pub fn table(&self) -> AccuracyTable {
        AccuracyTable {
            neighbors: self.per_k_results.iter().map(|r| r.k).collect(),
            kfold_percent: self.per_k_results.iter().map(|r| Some(100.0 * r.kfold_accuracy)).collect(),
            holdout_percent: self
                .per_k_results
                .iter()
                .map(|r| r.holdout.accuracy().map(|a| 100.0 * a))
                .collect(),
        }
    }

    pub fn render_confusion(&self) -> String {
        let width = self.labels.iter().map(String::len).max().unwrap_or(0).max(5) + 2;
        let mut out = format!("{:<width$}", "true\\pred");
        for l in &self.labels {
            out.push_str(&format!("{l:>width$}"));
        }
        out.push('\n');
        for (label, row) in self.labels.iter().zip(&self.confusion) {
            out.push_str(&format!("{label:<width$}"));
            for c in row {
                out.push_str(&format!("{c:>width$}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Accuracy from a confusion matrix: trace over total.
pub fn confusion_accuracy(confusion: &[Vec<usize>]) -> f64 {
    let total: usize = confusion.iter().flatten().sum();
    let trace: usize = confusion.iter().enumerate().map(|(i, r)| r[i]).sum();
    if total == 0 {
        0.0
    } else {
        trace as f64 / total as f64
    }
}

pub fn confusion_matrix(labels: &[String], truth: &[&str], predicted: &[&str]) -> Vec<Vec<usize>> {
    let index = |l: &str| labels.iter().position(|x| x == l);
    let mut m = vec![vec![0; labels.len()]; labels.len()];
    for (t, p) in truth.iter().zip(predicted) {
        if let (Some(ti), Some(pi)) = (index(t), index(p)) {
            m[ti][pi] += 1;
        }
    }
    m
}

/// Sweeps neighbour counts over k-fold and holdout evaluation.
///
/// `holdout_test` is a fixed test set evaluated against a model trained on
/// all of `data`; when absent, `data` is split with
/// [`stratified_holdout_split`] for the holdout column while k-fold still
/// uses every sample.
pub fn sweep_neighbors(
    data: &[LabeledFeature],
    holdout_test: Option<&[LabeledFeature]>,
    k_values: &[usize],
    folds: usize,
    seed: u64,
) -> Result<EvalReport> {
    if k_values.is_empty() {
        return Err(Error::Config("no neighbour counts to evaluate".into()));
    }
    let (holdout_train, holdout_test): (Vec<LabeledFeature>, Vec<LabeledFeature>) = match holdout_test {
        Some(test) => (data.to_vec(), test.to_vec()),
        None => {
            let (tr, te) = stratified_holdout_split(data, DEFAULT_HOLDOUT_FRACTION, seed)?;
            (
                tr.iter().map(|&i| data[i].clone()).collect(),
                te.iter().map(|&i| data[i].clone()).collect(),
            )
        }
    };

    let labels = sorted_labels(data);
    let mut per_k_results = Vec::with_capacity(k_values.len());
    let mut best: Option<(usize, f64, Vec<Vec<usize>>)> = None;
    for &k in k_values {
        let kfold = kfold_run(data, folds, k, seed)?;
        let holdout = holdout_run(&holdout_train, &holdout_test, k)?;
        if best.as_ref().is_none_or(|(_, acc, _)| kfold.accuracy > *acc) {
            let truth: Vec<&str> = kfold.predictions.iter().map(|(i, _)| data[*i].speaker_id.as_str()).collect();
            let predicted: Vec<&str> = kfold.predictions.iter().map(|(_, p)| p.label.as_str()).collect();
            best = Some((k, kfold.accuracy, confusion_matrix(&labels, &truth, &predicted)));
        }
        per_k_results.push(NeighborResult {
            k,
            kfold_accuracy: kfold.accuracy,
            holdout: HoldoutAccuracy::from_outcome(&holdout),
        });
    }
    let (best_k, _, confusion) = best.expect("k_values is non-empty");

    Ok(EvalReport {
        fold_count: folds,
        split_seed: seed,
        kfold_samples: data.len(),
        holdout_train_samples: holdout_train.len(),
        holdout_test_samples: holdout_test.len(),
        per_k_results,
        best_k,
        labels,
        confusion,
    })
}

/// Accuracy-versus-neighbours table, values in percent; `None` renders as `-`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyTable {
    pub neighbors: Vec<usize>,
    pub kfold_percent: Vec<Option<f64>>,
    pub holdout_percent: Vec<Option<f64>>,
}

fn percent_cell(v: Option<f64>) -> String {
    match v {
        None => "-".to_string(),
        Some(p) if (p - p.round()).abs() < 1e-9 => format!("{}", p.round() as i64),
        Some(p) => format!("{p:.1}"),
    }
}

impl fmt::Display for AccuracyTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const ROWS: [&str; 3] = ["Number of neighbors", "K-fold accuracy", "Holdout accuracy"];
        let label_width = ROWS.iter().map(|r| r.len()).max().unwrap_or(0) + 2;
        let header: Vec<String> = self.neighbors.iter().map(ToString::to_string).collect();
        let kfold: Vec<String> = self.kfold_percent.iter().copied().map(percent_cell).collect();
        let holdout: Vec<String> = self.holdout_percent.iter().copied().map(percent_cell).collect();
        let cell = header
            .iter()
            .chain(&kfold)
            .chain(&holdout)
            .map(String::len)
            .max()
            .unwrap_or(1)
            + 2;
        for (name, cells) in ROWS.iter().zip([&header, &kfold, &holdout]) {
            write!(f, "{name:<label_width$}")?;
            for c in cells {
                write!(f, "{c:>cell$}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::ClipFeature;

    fn lf(id: &str, label: &str, v: Vec<f64>) -> LabeledFeature {
        TrainingPoint {
            feature: ClipFeature::new(id, v),
            speaker_id: label.into(),
        }
    }

    fn separable() -> Vec<LabeledFeature> {
        (0..20)
            .map(|i| {
                let (label, base) = if i % 2 == 0 { ("a", 0.0) } else { ("b", 100.0) };
                lf(&format!("c{i}"), label, vec![base + 0.01 * f64::from(i % 7), base])
            })
            .collect()
    }

    #[test]
    fn folds_are_stratified_and_deterministic() {
        let data: Vec<_> = (0..23)
            .map(|i| lf(&format!("c{i}"), ["x", "y", "z"][i % 3], vec![i as f64]))
            .collect();
        let a = stratified_folds(&data, 5, 9).unwrap();
        assert_eq!(a, stratified_folds(&data, 5, 9).unwrap());
        for label in ["x", "y", "z"] {
            let n = data.iter().filter(|p| p.speaker_id == label).count();
            for fold in 0..5 {
                let c = (0..data.len()).filter(|&i| a[i] == fold && data[i].speaker_id == label).count();
                assert!((c as f64 - n as f64 / 5.0).abs() <= 1.0);
            }
        }
    }

    #[test]
    fn insufficient_data_names_smallest_class() {
        let mut data = separable();
        data.push(lf("lonely", "c", vec![50.0, 50.0]));
        match stratified_folds(&data, 5, 1) {
            Err(Error::InsufficientData { label, count, required }) => {
                assert_eq!((label.as_str(), count, required), ("c", 1, 5));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(stratified_folds(&separable(), 1, 1), Err(Error::Config(_))));
    }

    #[test]
    fn separable_kfold_is_perfect() {
        for folds in [2, 5, 10] {
            assert_eq!(kfold_cv(&separable(), folds, 3, 7).unwrap(), 1.0);
        }
    }

    #[test]
    fn holdout_arithmetic_and_leakage() {
        let train = separable();
        let subset: Vec<_> = train[..6]
            .iter()
            .map(|p| lf(&format!("t-{}", p.feature.clip_id), &p.speaker_id, p.feature.vector.clone()))
            .collect();
        assert_eq!(holdout_cv(&train, &subset, 1).unwrap(), 1.0);

        let test = vec![
            lf("q1", "a", vec![0.0, 0.0]),
            lf("q2", "a", vec![0.0, 0.0]),
            lf("q3", "a", vec![0.0, 0.0]),
            lf("q4", "a", vec![100.0, 100.0]),
            lf("q5", "b", vec![0.0, 0.0]),
        ];
        assert!((holdout_cv(&train, &test, 3).unwrap() - 0.6).abs() < 1e-15);

        let leaky = vec![train[3].clone()];
        assert!(matches!(holdout_cv(&train, &leaky, 1), Err(Error::Leakage(id)) if id == "c3"));
    }

    #[test]
    fn sweep_shape_and_best_confusion() {
        let report = sweep_neighbors(&separable(), None, &[2, 3, 4, 5, 6], 5, 3).unwrap();
        assert_eq!(report.per_k_results.len(), 5);
        for r in &report.per_k_results {
            assert_eq!(r.kfold_accuracy, 1.0);
        }
        assert_eq!(report.best_k, 2);
        assert_eq!(confusion_accuracy(&report.confusion), 1.0);
        let row_sums: Vec<usize> = report.confusion.iter().map(|r| r.iter().sum()).collect();
        assert_eq!(row_sums, vec![10, 10]);
    }

    #[test]
    fn tied_holdout_is_indeterminate() {
        // Two training points per label at mirrored positions: every k=2
        // query equidistant between one "a" and one "b" ties.
        let train = vec![
            lf("a1", "a", vec![-1.0]),
            lf("b1", "b", vec![1.0]),
            lf("a2", "a", vec![-10.0]),
            lf("b2", "b", vec![10.0]),
        ];
        let test = vec![lf("q1", "a", vec![0.0]), lf("q2", "b", vec![0.0])];
        let o = holdout_run(&train, &test, 2).unwrap();
        assert_eq!(o.tie_fraction, 1.0);
        assert!(matches!(HoldoutAccuracy::from_outcome(&o), HoldoutAccuracy::Indeterminate { .. }));
    }

    #[test]
    fn table_cells() {
        assert_eq!(percent_cell(None), "-");
        assert_eq!(percent_cell(Some(60.0)), "60");
        assert_eq!(percent_cell(Some(97.5)), "97.5");
    }
}
