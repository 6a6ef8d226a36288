//! A small feed-forward classifier trained with plain SGD.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::{
    binary_auc_loss, cross_entropy_loss, multiclass_auc_loss, softmax, LossOutput, SurrogateParams,
};
use crate::matrix::Matrix;
use crate::metrics::{auroc_auto, ClassPolicy, PredictionBatch};
use crate::seed::{derive_seed, rng_from, STREAM_SHUFFLE};

/// Hidden layers use ReLU; at most this many of them.
pub const MAX_HIDDEN_LAYERS: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// Shape (fan_in, fan_out).
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    layer_dims: Vec<usize>,
    layers: Vec<Layer>,
    rng_seed: u64,
}

/// Per-layer parameter gradients, same shapes as the model's layers.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

/// Builds a model with weights drawn uniformly from `±1/sqrt(fan_in)` and
/// zero biases. `layer_dims` runs input → hidden… → classes.
pub fn init_model(layer_dims: &[usize], seed: u64) -> Result<MlpModel> {
    if layer_dims.len() < 2 {
        return Err(Error::InvalidParams(
            "layer dims need at least an input and an output size".into(),
        ));
    }
    if layer_dims.len() - 2 > MAX_HIDDEN_LAYERS {
        return Err(Error::InvalidParams(format!(
            "at most {MAX_HIDDEN_LAYERS} hidden layers supported"
        )));
    }
    if layer_dims.contains(&0) {
        return Err(Error::InvalidParams("layer sizes must be positive".into()));
    }
    let mut rng = rng_from(seed);
    let layers = layer_dims
        .windows(2)
        .map(|w| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            let data = (0..fan_in * fan_out)
                .map(|_| rng.random_range(-bound..bound))
                .collect();
            Layer {
                weights: Matrix::from_vec(fan_in, fan_out, data).expect("sized"),
                bias: vec![0.0; fan_out],
            }
        })
        .collect();
    Ok(MlpModel {
        layer_dims: layer_dims.to_vec(),
        layers,
        rng_seed: seed,
    })
}

impl MlpModel {
    /// Builds a model from explicit layers. Shapes must chain.
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        let first = layers
            .first()
            .ok_or_else(|| Error::InvalidParams("model needs at least one layer".into()))?;
        let mut dims = vec![first.weights.rows()];
        for layer in &layers {
            if layer.weights.rows() != *dims.last().unwrap()
                || layer.bias.len() != layer.weights.cols()
            {
                return Err(Error::InvalidParams("layer shapes do not chain".into()));
            }
            dims.push(layer.weights.cols());
        }
        if dims.len() - 2 > MAX_HIDDEN_LAYERS {
            return Err(Error::InvalidParams(format!(
                "at most {MAX_HIDDEN_LAYERS} hidden layers supported"
            )));
        }
        Ok(MlpModel {
            layer_dims: dims,
            layers,
            rng_seed: 0,
        })
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn n_inputs(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn n_outputs(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.all_finite() && l.bias.iter().all(|b| b.is_finite()))
    }

    /// Logits for each row of `features`. The last layer is linear.
    pub fn forward(&self, features: &Matrix) -> Result<Matrix> {
        Ok(self
            .forward_cached(features)?
            .pop()
            .expect("at least one layer output"))
    }

    /// Activations of every layer, input first, logits last.
    fn forward_cached(&self, features: &Matrix) -> Result<Vec<Matrix>> {
        if features.cols() != self.n_inputs() {
            return Err(Error::ShapeMismatch {
                expected: self.n_inputs(),
                found: features.cols(),
            });
        }
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(features.clone());
        for (idx, layer) in self.layers.iter().enumerate() {
            let mut z = acts.last().unwrap().matmul(&layer.weights);
            let hidden = idx + 1 < self.layers.len();
            for i in 0..z.rows() {
                for (v, b) in z.row_mut(i).iter_mut().zip(&layer.bias) {
                    *v += b;
                    if hidden && *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            acts.push(z);
        }
        Ok(acts)
    }

    /// Parameter gradients given the loss gradient with respect to the logits.
    pub fn backward(&self, features: &Matrix, grad_logits: &Matrix) -> Result<Gradients> {
        let acts = self.forward_cached(features)?;
        let mut delta = grad_logits.clone();
        let mut grads = Vec::with_capacity(self.layers.len());
        for idx in (0..self.layers.len()).rev() {
            let input = &acts[idx];
            let weights = input.t_matmul(&delta);
            let mut bias = vec![0.0; delta.cols()];
            for row in delta.iter_rows() {
                for (b, d) in bias.iter_mut().zip(row) {
                    *b += d;
                }
            }
            grads.push(Layer { weights, bias });
            if idx > 0 {
                let mut prev = delta.matmul_t(&self.layers[idx].weights);
                // ReLU mask; acts[idx] holds post-activation values
                for (p, &a) in prev.as_mut_slice().iter_mut().zip(input.as_slice()) {
                    if a <= 0.0 {
                        *p = 0.0;
                    }
                }
                delta = prev;
            }
        }
        grads.reverse();
        Ok(Gradients { layers: grads })
    }

    pub fn sgd_step(&mut self, grads: &Gradients, learning_rate: f64) {
        for (layer, g) in self.layers.iter_mut().zip(&grads.layers) {
            for (w, dw) in layer
                .weights
                .as_mut_slice()
                .iter_mut()
                .zip(g.weights.as_slice())
            {
                *w -= learning_rate * dw;
            }
            for (b, db) in layer.bias.iter_mut().zip(&g.bias) {
                *b -= learning_rate * db;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    CrossEntropy,
    AucBinary,
    AucMulticlass,
}

impl LossKind {
    pub fn evaluate(
        &self,
        batch: &PredictionBatch,
        surrogate: &SurrogateParams,
        want_grad: bool,
    ) -> Result<LossOutput> {
        match self {
            LossKind::CrossEntropy => cross_entropy_loss(batch, want_grad),
            LossKind::AucBinary => binary_auc_loss(batch, surrogate, want_grad),
            LossKind::AucMulticlass => {
                multiclass_auc_loss(batch, surrogate, want_grad, ClassPolicy::Strict)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub loss_kind: LossKind,
    pub surrogate: SurrogateParams,
    pub shuffle_each_epoch: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 40,
            learning_rate: 0.1,
            batch_size: 8,
            loss_kind: LossKind::CrossEntropy,
            surrogate: SurrogateParams::default(),
            shuffle_each_epoch: true,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 2 {
            return Err(Error::InvalidParams(format!(
                "batch size must be at least 2, got {}",
                self.batch_size
            )));
        }
        if self.max_epochs < 1 {
            return Err(Error::InvalidParams("max_epochs must be at least 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "learning rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        self.surrogate.validate()
    }
}

/// Splits a shuffled ordering of `0..labels.len()` into batches that each
/// contain at least one sample of every class.
///
/// The number of batches is `len / batch_size`, lowered to the size of the
/// rarest class when needed. Each batch is seeded with one sample per class
/// and topped up from the shuffled remainder; samples that do not fill a
/// whole batch join the last one. The shuffle depends only on
/// `(seed, epoch)`.
pub fn stratified_batches(
    labels: &[usize],
    batch_size: usize,
    seed: u64,
    epoch: u64,
) -> Result<Vec<Vec<usize>>> {
    let n_classes = labels.iter().max().map_or(0, |&m| m + 1);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    if let Some(class) = by_class.iter().position(|c| c.is_empty()) {
        return Err(Error::Infeasible(format!(
            "class {class} has no training samples"
        )));
    }
    if n_classes < 2 {
        return Err(Error::Infeasible(
            "training labels contain a single class".into(),
        ));
    }
    if batch_size < n_classes {
        return Err(Error::Infeasible(format!(
            "batch size {batch_size} cannot hold one sample of each of {n_classes} classes"
        )));
    }

    let mut rng = rng_from(derive_seed(seed, &[STREAM_SHUFFLE, epoch]));
    for members in &mut by_class {
        members.shuffle(&mut rng);
    }
    let rarest = by_class.iter().map(Vec::len).min().unwrap();
    let n = labels.len();
    let full = n / batch_size;
    let n_batches = full.min(rarest).max(1);

    let mut batches: Vec<Vec<usize>> = (0..n_batches)
        .map(|b| by_class.iter().map(|members| members[b]).collect())
        .collect();
    let mut rest: Vec<usize> = by_class
        .iter()
        .flat_map(|members| members[n_batches..].iter().copied())
        .collect();
    rest.shuffle(&mut rng);

    let sizes: Vec<usize> = if n_batches == full {
        let mut s = vec![batch_size; n_batches];
        *s.last_mut().unwrap() += n - full * batch_size;
        s
    } else {
        (0..n_batches)
            .map(|b| n / n_batches + usize::from(b < n % n_batches))
            .collect()
    };
    let mut rest = rest.into_iter();
    for (batch, size) in batches.iter_mut().zip(sizes) {
        while batch.len() < size {
            batch.push(rest.next().expect("sizes sum to n"));
        }
        batch.shuffle(&mut rng);
    }
    debug_assert!(rest.next().is_none());
    Ok(batches)
}

/// Features and labels of one partition.
#[derive(Debug, Clone)]
pub struct LabeledData {
    pub features: Matrix,
    pub labels: Vec<usize>,
}

impl LabeledData {
    pub fn new(features: Matrix, labels: Vec<usize>) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::InvalidBatch(format!(
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        Ok(LabeledData { features, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn subset(&self, indices: &[usize]) -> LabeledData {
        LabeledData {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Model logits on this data as a prediction batch.
    pub fn predict(&self, model: &MlpModel) -> Result<PredictionBatch> {
        PredictionBatch::new(model.forward(&self.features)?, self.labels.clone())
    }

    /// Softmax probabilities on this data, the scores AUROC is measured on.
    pub fn predict_proba(&self, model: &MlpModel) -> Result<PredictionBatch> {
        let mut probs = model.forward(&self.features)?;
        for i in 0..probs.rows() {
            let p = softmax(probs.row(i));
            probs.row_mut(i).copy_from_slice(&p);
        }
        PredictionBatch::new(probs, self.labels.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Loss on the full training partition after the epoch's updates.
    pub train_loss: f64,
    pub val_auroc: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Weights from the epoch with the highest validation AUROC.
    pub model: MlpModel,
    pub best_epoch: usize,
    pub initial_train_loss: f64,
    pub history: Vec<EpochRecord>,
}

impl TrainOutcome {
    pub fn best_record(&self) -> &EpochRecord {
        &self.history[self.best_epoch - 1]
    }
}

/// Trains `model` with minibatch SGD and keeps the checkpoint with the best
/// validation AUROC (earliest epoch on ties). AUROC is measured on softmax
/// probabilities.
pub fn train(
    mut model: MlpModel,
    train_data: &LabeledData,
    val_data: &LabeledData,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    if train_data.is_empty() || val_data.is_empty() {
        return Err(Error::InvalidBatch(
            "train and validation sets must be non-empty".into(),
        ));
    }
    if model.n_outputs() < 2 {
        return Err(Error::InvalidParams(
            "model needs at least 2 outputs".into(),
        ));
    }
    let full_loss = |m: &MlpModel| -> Result<f64> {
        let batch = train_data.predict(m)?;
        Ok(config
            .loss_kind
            .evaluate(&batch, &config.surrogate, false)?
            .value)
    };
    let initial_train_loss = full_loss(&model)?;

    let mut history = Vec::with_capacity(config.max_epochs);
    let mut best: Option<(f64, usize, MlpModel)> = None;
    for epoch in 1..=config.max_epochs {
        let shuffle_epoch = if config.shuffle_each_epoch {
            epoch as u64
        } else {
            0
        };
        let batches = stratified_batches(
            &train_data.labels,
            config.batch_size,
            config.seed,
            shuffle_epoch,
        )?;
        for (b, indices) in batches.iter().enumerate() {
            let part = train_data.subset(indices);
            let logits = model.forward(&part.features)?;
            if !logits.all_finite() {
                return Err(Error::Diverged { epoch, batch: b });
            }
            let batch = PredictionBatch::new(logits, part.labels.clone())?;
            let out = config.loss_kind.evaluate(&batch, &config.surrogate, true)?;
            let grad = out.grad.expect("gradient requested");
            let grads = model.backward(&part.features, &grad)?;
            model.sgd_step(&grads, config.learning_rate);
            if !model.all_finite() {
                return Err(Error::Diverged { epoch, batch: b });
            }
        }

        let train_loss = full_loss(&model)?;
        let val_auroc = auroc_auto(&val_data.predict_proba(&model)?)?;
        history.push(EpochRecord {
            epoch,
            train_loss,
            val_auroc,
        });
        if best.as_ref().is_none_or(|(v, _, _)| val_auroc > *v) {
            best = Some((val_auroc, epoch, model.clone()));
        }
    }
    let (_, best_epoch, model) = best.expect("at least one epoch");
    Ok(TrainOutcome {
        model,
        best_epoch,
        initial_train_loss,
        history,
    })
}
