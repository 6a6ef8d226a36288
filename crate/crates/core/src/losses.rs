//! Differentiable AUROC losses and cross-entropy, with analytic gradients.
//!
//! The AUROC losses replace the unit step in the pairwise AUROC with a
//! logistic curve `L / (1 + exp(-k (x - x0)))` applied to differences of
//! softmax probabilities. The loss is one minus the smoothed AUROC.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metrics::{ClassPolicy, PredictionBatch};

/// Parameters of the logistic step approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurrogateParams {
    /// Growth rate. Larger values approximate the step more closely.
    pub k: f64,
    /// Supremum.
    pub l: f64,
    /// Midpoint.
    pub x0: f64,
}

impl Default for SurrogateParams {
    fn default() -> Self {
        SurrogateParams {
            k: 20.0,
            l: 1.0,
            x0: 0.0,
        }
    }
}

impl SurrogateParams {
    pub fn new(k: f64, l: f64, x0: f64) -> Result<Self> {
        let p = SurrogateParams { k, l, x0 };
        p.validate()?;
        Ok(p)
    }

    pub fn with_k(k: f64) -> Result<Self> {
        SurrogateParams::new(k, 1.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k.is_finite() && self.l.is_finite() && self.x0.is_finite()) {
            return Err(Error::InvalidParams(
                "surrogate parameters must be finite".into(),
            ));
        }
        if self.k <= 0.0 || self.l <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "surrogate needs k > 0 and L > 0, got k={} L={}",
                self.k, self.l
            )));
        }
        Ok(())
    }
}

/// Logistic curve, evaluated so that neither branch overflows.
pub fn logistic(x: f64, params: &SurrogateParams) -> f64 {
    let z = params.k * (x - params.x0);
    if z >= 0.0 {
        params.l / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        params.l * e / (1.0 + e)
    }
}

/// Value and derivative `(k/L) f (L - f)` of the logistic curve.
fn logistic_with_slope(x: f64, params: &SurrogateParams) -> (f64, f64) {
    let f = logistic(x, params);
    // L - f computed from the complementary branch to keep precision in the tail
    let complement = logistic(-(x - params.x0) + params.x0, params);
    (f, params.k / params.l * f * complement)
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn softmax_rows(scores: &Matrix) -> Matrix {
    let mut out = scores.clone();
    for i in 0..scores.rows() {
        let s = softmax(scores.row(i));
        out.row_mut(i).copy_from_slice(&s);
    }
    out
}

/// Loss value and, when requested, its gradient with respect to the logits.
#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput {
    pub value: f64,
    pub grad: Option<Matrix>,
}

/// Smoothed pairwise AUROC of one probability column.
///
/// Returns the mean logistic value and accumulates `scale * d(mean)/dp_i`
/// into `dprob` for each sample.
fn pairwise_term(
    probs: &[f64],
    is_pos: &[bool],
    params: &SurrogateParams,
    scale: f64,
    dprob: Option<&mut [f64]>,
) -> f64 {
    let pos: Vec<usize> = (0..probs.len()).filter(|&i| is_pos[i]).collect();
    let neg: Vec<usize> = (0..probs.len()).filter(|&i| !is_pos[i]).collect();
    let n_pairs = (pos.len() * neg.len()) as f64;
    let mut sum = 0.0;
    match dprob {
        None => {
            for &i in &pos {
                for &j in &neg {
                    sum += logistic(probs[i] - probs[j], params);
                }
            }
        }
        Some(dprob) => {
            let w = scale / n_pairs;
            for &i in &pos {
                for &j in &neg {
                    let (f, slope) = logistic_with_slope(probs[i] - probs[j], params);
                    sum += f;
                    dprob[i] += w * slope;
                    dprob[j] -= w * slope;
                }
            }
        }
    }
    sum / n_pairs
}

/// Pulls a gradient with respect to softmax outputs back to the logits:
/// `dz_m = s_m (g_m - sum_c g_c s_c)`.
fn softmax_backward(probs: &Matrix, dprobs: &Matrix) -> Matrix {
    let mut grad = Matrix::zeros(probs.rows(), probs.cols());
    for i in 0..probs.rows() {
        let s = probs.row(i);
        let g = dprobs.row(i);
        let dot: f64 = s.iter().zip(g).map(|(a, b)| a * b).sum();
        for (out, (&sm, &gm)) in grad.row_mut(i).iter_mut().zip(s.iter().zip(g)) {
            *out = sm * (gm - dot);
        }
    }
    grad
}

/// One minus the smoothed AUROC of the last softmax column, class 1 positive.
///
/// The batch must have exactly two classes and contain at least one sample of
/// each, so the smallest usable batch has two samples.
pub fn binary_auc_loss(
    batch: &PredictionBatch,
    params: &SurrogateParams,
    want_grad: bool,
) -> Result<LossOutput> {
    params.validate()?;
    if batch.n_classes() != 2 {
        return Err(Error::InvalidBatch(format!(
            "binary AUC loss needs 2 classes, batch has {}",
            batch.n_classes()
        )));
    }
    let counts = batch.class_counts();
    if let Some(class) = counts.iter().position(|&c| c == 0) {
        return Err(Error::EmptyClass { class });
    }

    let probs = softmax_rows(batch.scores());
    let last = probs.cols() - 1;
    let p = probs.column(last);
    let is_pos: Vec<bool> = batch.labels().iter().map(|&l| l == 1).collect();

    if !want_grad {
        let mean = pairwise_term(&p, &is_pos, params, 1.0, None);
        return Ok(LossOutput {
            value: 1.0 - mean,
            grad: None,
        });
    }

    let mut dp = vec![0.0; p.len()];
    let mean = pairwise_term(&p, &is_pos, params, -1.0, Some(&mut dp));
    let mut dprobs = Matrix::zeros(probs.rows(), probs.cols());
    for (i, g) in dp.into_iter().enumerate() {
        dprobs[(i, last)] = g;
    }
    Ok(LossOutput {
        value: 1.0 - mean,
        grad: Some(softmax_backward(&probs, &dprobs)),
    })
}

/// One minus the macro average of per-class smoothed one-vs-rest AUROCs.
///
/// In strict mode any class without samples is an error. In lenient mode
/// classes lacking positives or negatives are skipped and the mean is taken
/// over the rest.
pub fn multiclass_auc_loss(
    batch: &PredictionBatch,
    params: &SurrogateParams,
    want_grad: bool,
    policy: ClassPolicy,
) -> Result<LossOutput> {
    params.validate()?;
    let n = batch.len();
    let counts = batch.class_counts();
    let usable: Vec<usize> = (0..batch.n_classes())
        .filter(|&c| counts[c] > 0 && counts[c] < n)
        .collect();
    if policy == ClassPolicy::Strict {
        if let Some(class) = counts.iter().position(|&c| c == 0) {
            return Err(Error::EmptyClass { class });
        }
    }
    if usable.is_empty() {
        return Err(Error::EmptyClass {
            class: counts.iter().position(|&c| c == 0).unwrap_or(0),
        });
    }

    let probs = softmax_rows(batch.scores());
    let scale = -1.0 / usable.len() as f64;
    let mut dprobs = want_grad.then(|| Matrix::zeros(probs.rows(), probs.cols()));
    let mut total = 0.0;
    for &class in &usable {
        let p = probs.column(class);
        let is_pos: Vec<bool> = batch.labels().iter().map(|&l| l == class).collect();
        match dprobs.as_mut() {
            None => total += pairwise_term(&p, &is_pos, params, scale, None),
            Some(dprobs) => {
                let mut dp = vec![0.0; n];
                total += pairwise_term(&p, &is_pos, params, scale, Some(&mut dp));
                for (i, g) in dp.into_iter().enumerate() {
                    dprobs[(i, class)] += g;
                }
            }
        }
    }
    Ok(LossOutput {
        value: 1.0 - total / usable.len() as f64,
        grad: dprobs.map(|d| softmax_backward(&probs, &d)),
    })
}

/// Mean negative log-likelihood of the true class under softmax.
pub fn cross_entropy_loss(batch: &PredictionBatch, want_grad: bool) -> Result<LossOutput> {
    let n = batch.len();
    if n == 0 {
        return Err(Error::InvalidBatch("empty batch".into()));
    }
    let scores = batch.scores();
    let mut value = 0.0;
    let mut grad = want_grad.then(|| Matrix::zeros(scores.rows(), scores.cols()));
    for (i, (row, &label)) in scores.iter_rows().zip(batch.labels()).enumerate() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_sum = row.iter().map(|&z| (z - max).exp()).sum::<f64>().ln() + max;
        value += log_sum - row[label];
        if let Some(grad) = grad.as_mut() {
            for (c, g) in grad.row_mut(i).iter_mut().enumerate() {
                let s = (row[c] - log_sum).exp();
                *g = (s - if c == label { 1.0 } else { 0.0 }) / n as f64;
            }
        }
    }
    Ok(LossOutput {
        value: value / n as f64,
        grad,
    })
}

/// Result of comparing analytic and central-difference gradients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// (row, column) of the worst entry.
    pub worst: (usize, usize),
    pub passed: bool,
}

/// Compares `loss_fn`'s analytic gradient against central differences
/// `(f(x+h) - f(x-h)) / 2h` on every logit. Relative error uses the
/// denominator `max(|analytic|, |numeric|, 1e-8)`.
pub fn finite_diff_check<F>(
    loss_fn: F,
    batch: &PredictionBatch,
    h: f64,
    tol: f64,
) -> Result<GradCheckReport>
where
    F: Fn(&PredictionBatch, bool) -> Result<LossOutput>,
{
    let analytic = loss_fn(batch, true)?
        .grad
        .ok_or_else(|| Error::InvalidParams("loss returned no gradient".into()))?;
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: (0, 0),
        passed: true,
    };
    let mut scores = batch.scores().clone();
    for i in 0..scores.rows() {
        for j in 0..scores.cols() {
            let orig = scores[(i, j)];
            scores[(i, j)] = orig + h;
            let plus = loss_fn(&batch.with_scores(scores.clone())?, false)?.value;
            scores[(i, j)] = orig - h;
            let minus = loss_fn(&batch.with_scores(scores.clone())?, false)?.value;
            scores[(i, j)] = orig;

            let numeric = (plus - minus) / (2.0 * h);
            let a = analytic[(i, j)];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            if rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst = (i, j);
            }
        }
    }
    report.passed = report.max_rel_error <= tol;
    Ok(report)
}
