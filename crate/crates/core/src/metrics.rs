//! Exact AUROC.
//!
//! AUROC is computed as the Wilcoxon–Mann–Whitney statistic: the fraction of
//! (positive, negative) pairs in which the positive is scored higher, with
//! tied pairs counting one half. Two routes are provided: a direct pairwise
//! enumeration and an `O(n log n)` rank-sum with midranks. Both count in
//! integer half-units, so they agree exactly.
//!
//! Scores may be logits or probabilities. The metric only looks at ranks, so
//! no normalization is applied.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Above this many samples [`auroc_scores`] uses the rank-sum route.
pub const PAIRWISE_LIMIT: usize = 10_000;

/// Scores (one column per class) and true labels for a set of samples.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionBatch {
    scores: Matrix,
    labels: Vec<usize>,
}

impl PredictionBatch {
    /// Validates shape, label range and finiteness. The number of classes is
    /// the number of score columns and must be at least 2.
    pub fn new(scores: Matrix, labels: Vec<usize>) -> Result<Self> {
        if scores.cols() < 2 {
            return Err(Error::InvalidBatch(format!(
                "need at least 2 score columns, got {}",
                scores.cols()
            )));
        }
        if scores.rows() != labels.len() {
            return Err(Error::InvalidBatch(format!(
                "{} score rows but {} labels",
                scores.rows(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= scores.cols()) {
            return Err(Error::InvalidBatch(format!(
                "label {bad} out of range for {} classes",
                scores.cols()
            )));
        }
        if !scores.all_finite() {
            return Err(Error::NonFinite("scores"));
        }
        Ok(PredictionBatch { scores, labels })
    }

    pub fn scores(&self) -> &Matrix {
        &self.scores
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_classes(&self) -> usize {
        self.scores.cols()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Same labels, new scores of identical shape.
    pub fn with_scores(&self, scores: Matrix) -> Result<Self> {
        if scores.shape() != self.scores.shape() {
            return Err(Error::InvalidBatch("score shape changed".into()));
        }
        PredictionBatch::new(scores, self.labels.clone())
    }

    /// Column `class` split into (positive, negative) scores.
    pub fn split_class(&self, class: usize) -> (Vec<f64>, Vec<f64>) {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for (row, &l) in self.scores.iter_rows().zip(&self.labels) {
            if l == class {
                pos.push(row[class]);
            } else {
                neg.push(row[class]);
            }
        }
        (pos, neg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AurocValue {
    pub value: f64,
    pub n_pos: usize,
    pub n_neg: usize,
}

/// What to do when a class has no positives or no negatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClassPolicy {
    /// Fail with [`Error::EmptyClass`].
    #[default]
    Strict,
    /// Leave the class out of the macro average and flag it.
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassAuroc {
    pub class: usize,
    /// `None` when the class was absent and skipped.
    pub auroc: Option<AurocValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OvrAuroc {
    /// Unweighted mean over the classes that could be evaluated.
    pub macro_auroc: f64,
    pub per_class: Vec<ClassAuroc>,
}

/// Unit step with the midpoint convention: 1 above zero, 1/2 at zero, 0 below.
pub fn heaviside(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite("heaviside argument"));
    }
    Ok(if x > 0.0 {
        1.0
    } else if x == 0.0 {
        0.5
    } else {
        0.0
    })
}

fn check_inputs(pos: &[f64], neg: &[f64], class: usize) -> Result<()> {
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::EmptyClass { class });
    }
    if !pos.iter().chain(neg).all(|x| x.is_finite()) {
        return Err(Error::NonFinite("scores"));
    }
    Ok(())
}

fn from_half_units(half_units: u64, n_pos: usize, n_neg: usize) -> AurocValue {
    let pairs = (n_pos as u64) * (n_neg as u64);
    AurocValue {
        value: half_units as f64 / (2 * pairs) as f64,
        n_pos,
        n_neg,
    }
}

/// AUROC by enumerating every (positive, negative) pair. `O(n_pos * n_neg)`;
/// kept as the reference the rank route is tested against.
///
/// An empty side reports `EmptyClass { class: 1 }` for positives and
/// `class: 0` for negatives.
pub fn auroc_pairwise(pos: &[f64], neg: &[f64]) -> Result<AurocValue> {
    if pos.is_empty() {
        return Err(Error::EmptyClass { class: 1 });
    }
    check_inputs(pos, neg, 0)?;
    let mut half_units = 0u64;
    for &p in pos {
        for &n in neg {
            let d = p - n;
            half_units += if d > 0.0 {
                2
            } else if d == 0.0 {
                1
            } else {
                0
            };
        }
    }
    Ok(from_half_units(half_units, pos.len(), neg.len()))
}

/// AUROC from the Mann–Whitney rank sum, midranks for ties.
pub fn auroc_rank_scores(scores: &[f64], is_positive: &[bool]) -> Result<AurocValue> {
    assert_eq!(
        scores.len(),
        is_positive.len(),
        "scores/labels length mismatch"
    );
    let n_pos = is_positive.iter().filter(|&&p| p).count();
    let n_neg = scores.len() - n_pos;
    if n_pos == 0 {
        return Err(Error::EmptyClass { class: 1 });
    }
    if n_neg == 0 {
        return Err(Error::EmptyClass { class: 0 });
    }
    if !scores.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite("scores"));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("finite scores"));

    // Doubled midrank of a tie group occupying sorted positions [start, end)
    // is (start + 1) + end, an integer.
    let mut doubled_rank_sum = 0u64;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let doubled = (start + 1 + end) as u64;
        let group_pos = order[start..end]
            .iter()
            .filter(|&&i| is_positive[i])
            .count() as u64;
        doubled_rank_sum += doubled * group_pos;
        start = end;
    }
    let np = n_pos as u64;
    let half_units = doubled_rank_sum - np * (np + 1);
    Ok(from_half_units(half_units, n_pos, n_neg))
}

/// Binary AUROC of `scores`, choosing the pairwise route for small inputs and
/// the rank route above [`PAIRWISE_LIMIT`] samples.
pub fn auroc_scores(scores: &[f64], is_positive: &[bool]) -> Result<AurocValue> {
    if scores.len() > PAIRWISE_LIMIT {
        return auroc_rank_scores(scores, is_positive);
    }
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (&s, &p) in scores.iter().zip(is_positive) {
        if p {
            pos.push(s);
        } else {
            neg.push(s);
        }
    }
    if neg.is_empty() && !pos.is_empty() {
        return Err(Error::EmptyClass { class: 0 });
    }
    auroc_pairwise(&pos, &neg)
}

/// Rank-based AUROC of a two-class batch, scoring with the column of
/// `positive_class`.
pub fn auroc_rank(batch: &PredictionBatch, positive_class: usize) -> Result<AurocValue> {
    if batch.n_classes() != 2 {
        return Err(Error::InvalidBatch(format!(
            "binary AUROC needs 2 classes, batch has {}",
            batch.n_classes()
        )));
    }
    if positive_class >= 2 {
        return Err(Error::InvalidBatch(format!(
            "positive class {positive_class} out of range"
        )));
    }
    let scores = batch.scores().column(positive_class);
    let is_positive: Vec<bool> = batch
        .labels()
        .iter()
        .map(|&l| l == positive_class)
        .collect();
    auroc_rank_scores(&scores, &is_positive).map_err(|e| match e {
        Error::EmptyClass { class: 1 } => Error::EmptyClass {
            class: positive_class,
        },
        Error::EmptyClass { .. } => Error::EmptyClass {
            class: 1 - positive_class,
        },
        other => other,
    })
}

/// One-vs-rest AUROC per class and its macro average.
pub fn auroc_multiclass_ovr(batch: &PredictionBatch, policy: ClassPolicy) -> Result<OvrAuroc> {
    let mut per_class = Vec::with_capacity(batch.n_classes());
    for class in 0..batch.n_classes() {
        let (pos, neg) = batch.split_class(class);
        let auroc = if pos.is_empty() || neg.is_empty() {
            match policy {
                ClassPolicy::Strict => {
                    // No negatives means every other class is the empty one.
                    let missing = if pos.is_empty() {
                        class
                    } else {
                        (0..batch.n_classes())
                            .find(|&c| c != class)
                            .unwrap_or(class)
                    };
                    return Err(Error::EmptyClass { class: missing });
                }
                ClassPolicy::Lenient => None,
            }
        } else if pos.len() + neg.len() > PAIRWISE_LIMIT {
            let scores = batch.scores().column(class);
            let is_pos: Vec<bool> = batch.labels().iter().map(|&l| l == class).collect();
            Some(auroc_rank_scores(&scores, &is_pos)?)
        } else {
            Some(auroc_pairwise(&pos, &neg)?)
        };
        per_class.push(ClassAuroc { class, auroc });
    }
    let present: Vec<f64> = per_class
        .iter()
        .filter_map(|c| c.auroc.map(|a| a.value))
        .collect();
    if present.is_empty() {
        return Err(Error::EmptyClass { class: 0 });
    }
    let macro_auroc = present.iter().sum::<f64>() / present.len() as f64;
    Ok(OvrAuroc {
        macro_auroc,
        per_class,
    })
}

/// The AUROC used for model selection and evaluation: binary AUROC of the
/// last column for two classes, strict macro one-vs-rest otherwise.
pub fn auroc_auto(batch: &PredictionBatch) -> Result<f64> {
    if batch.n_classes() == 2 {
        let scores = batch.scores().column(1);
        let is_pos: Vec<bool> = batch.labels().iter().map(|&l| l == 1).collect();
        auroc_scores(&scores, &is_pos).map(|a| a.value)
    } else {
        auroc_multiclass_ovr(batch, ClassPolicy::Strict).map(|o| o.macro_auroc)
    }
}

/// Whether applying `transform` to every score leaves the AUROC unchanged
/// (within 1e-12). Holds for any strictly increasing transform.
pub fn monotone_check(batch: &PredictionBatch, transform: impl Fn(f64) -> f64) -> bool {
    let before = match auroc_auto(batch) {
        Ok(v) => v,
        Err(_) => return false,
    };
    let after = match batch
        .with_scores(batch.scores().map(&transform))
        .and_then(|b| auroc_auto(&b))
    {
        Ok(v) => v,
        Err(_) => return false,
    };
    (before - after).abs() <= 1e-12
}
