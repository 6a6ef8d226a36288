//! Datasets: synthetic Gaussian classes and CSV ingestion.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metrics::{
    auroc_multiclass_ovr, auroc_scores, ClassAuroc, ClassPolicy, PredictionBatch,
};
use crate::nn::LabeledData;
use crate::seed::rng_from;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub class_counts: Vec<usize>,
    pub dim: usize,
    pub class_mean_separation: f64,
    pub noise_std: f64,
    #[serde(default)]
    pub label_flip_prob: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let k = self.class_counts.len();
        if k < 2 {
            return Err(Error::InvalidParams("need at least 2 classes".into()));
        }
        if self.class_counts.contains(&0) {
            return Err(Error::InvalidParams("class counts must be positive".into()));
        }
        if self.dim < (k - 1).max(1) {
            return Err(Error::InvalidParams(format!(
                "dim {} too small to place {k} equidistant class means (need {})",
                self.dim,
                k - 1
            )));
        }
        if !(self.class_mean_separation.is_finite() && self.class_mean_separation >= 0.0) {
            return Err(Error::InvalidParams(
                "separation must be finite and >= 0".into(),
            ));
        }
        if !(self.noise_std.is_finite() && self.noise_std > 0.0) {
            return Err(Error::InvalidParams(
                "noise_std must be finite and > 0".into(),
            ));
        }
        if !(0.0..0.5).contains(&self.label_flip_prob) {
            return Err(Error::InvalidParams(
                "label_flip_prob must lie in [0, 0.5)".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Synthetic(SyntheticSpec),
    Csv(PathBuf),
    /// Parsed from an in-memory reader.
    Inline,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Matrix,
    labels: Vec<usize>,
    class_names: Option<Vec<String>>,
    provenance: Provenance,
}

impl Dataset {
    pub fn new(
        features: Matrix,
        labels: Vec<usize>,
        class_names: Option<Vec<String>>,
        provenance: Provenance,
    ) -> Result<Self> {
        if features.rows() == 0 {
            return Err(Error::EmptyFile);
        }
        if features.cols() == 0 {
            return Err(Error::InvalidBatch(
                "dataset needs at least one feature".into(),
            ));
        }
        if features.rows() != labels.len() {
            return Err(Error::InvalidBatch(format!(
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        if !features.all_finite() {
            return Err(Error::NonFinite("features"));
        }
        let n_classes = labels.iter().max().unwrap() + 1;
        if let Some(names) = &class_names {
            if names.len() != n_classes {
                return Err(Error::InvalidBatch(format!(
                    "{} class names for {n_classes} classes",
                    names.len()
                )));
            }
        }
        let ds = Dataset {
            features,
            labels,
            class_names,
            provenance,
        };
        if let Some(class) = ds.class_counts().iter().position(|&c| c == 0) {
            return Err(Error::EmptyClass { class });
        }
        Ok(ds)
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> Option<&[String]> {
        self.class_names.as_deref()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn n_classes(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    pub fn class_name(&self, class: usize) -> String {
        match &self.class_names {
            Some(names) => names[class].clone(),
            None => class.to_string(),
        }
    }

    pub fn to_labeled(&self) -> LabeledData {
        LabeledData {
            features: self.features.clone(),
            labels: self.labels.clone(),
        }
    }

    /// Writes a header `f0,…,f{d-1},label` and one row per sample. Floats use
    /// 17 significant digits so the file reloads exactly.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (0..self.dim()).map(|j| format!("f{j}")).collect();
        header.push("label".into());
        w.write_record(&header)?;
        for (row, &label) in self.features.iter_rows().zip(&self.labels) {
            let mut record: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
            record.push(self.class_name(label));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Equidistant class means: vertices of a regular simplex in the first
/// `k - 1` coordinates, scaled so every pair is `separation` apart.
pub fn simplex_means(k: usize, dim: usize, separation: f64) -> Vec<Vec<f64>> {
    assert!(k >= 2 && dim >= k - 1);
    // e_1..e_{k-1} plus a(1,…,1) are pairwise sqrt(2) apart
    let a = (1.0 - (k as f64).sqrt()) / (k - 1) as f64;
    let scale = separation / std::f64::consts::SQRT_2;
    (0..k)
        .map(|c| {
            let mut v = vec![0.0; dim];
            if c + 1 < k {
                v[c] = scale;
            } else {
                v[..k - 1].iter_mut().for_each(|x| *x = a * scale);
            }
            v
        })
        .collect()
}

/// Class-conditional Gaussians with exact class counts.
///
/// Label noise keeps the counts: with probability `label_flip_prob` a sample
/// labeled `c` is drawn from a uniformly chosen other class's Gaussian. Rows
/// are shuffled.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let k = spec.class_counts.len();
    let means = simplex_means(k, spec.dim, spec.class_mean_separation);
    let noise =
        Normal::new(0.0, spec.noise_std).map_err(|e| Error::InvalidParams(e.to_string()))?;
    let mut rng = rng_from(spec.seed);

    let mut rows: Vec<(Vec<f64>, usize)> = Vec::with_capacity(spec.class_counts.iter().sum());
    for (class, &count) in spec.class_counts.iter().enumerate() {
        for _ in 0..count {
            let source = if spec.label_flip_prob > 0.0 && rng.random_bool(spec.label_flip_prob) {
                let other = rng.random_range(0..k - 1);
                if other >= class {
                    other + 1
                } else {
                    other
                }
            } else {
                class
            };
            let x: Vec<f64> = means[source]
                .iter()
                .map(|&m| m + noise.sample(&mut rng))
                .collect();
            rows.push((x, class));
        }
    }
    rows.shuffle(&mut rng);

    let labels = rows.iter().map(|(_, l)| *l).collect();
    let feature_rows: Vec<Vec<f64>> = rows.into_iter().map(|(x, _)| x).collect();
    let features = Matrix::from_rows(&feature_rows).expect("uniform rows");
    let names = (0..k).map(|c| format!("class_{c}")).collect();
    Dataset::new(
        features,
        labels,
        Some(names),
        Provenance::Synthetic(spec.clone()),
    )
}

fn header_index(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::MissingColumn(name.to_string()))
}

fn parse_cell(
    record: &csv::StringRecord,
    col: usize,
    row: usize,
    headers: &csv::StringRecord,
) -> Result<f64> {
    record
        .get(col)
        .and_then(|s| s.trim().parse::<f64>().ok())
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::NonNumericCell {
            row,
            col: headers[col].to_string(),
        })
}

fn read_headers<R: Read>(reader: &mut csv::Reader<R>) -> Result<csv::StringRecord> {
    let headers = reader.headers()?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::EmptyFile);
    }
    Ok(headers)
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader)
}

/// Parses a dataset from CSV. Every column except `label_column` is a
/// feature. Labels map to indices in order of first appearance. Rows are
/// numbered from 1, the header excluded.
pub fn read_dataset_csv<R: Read>(reader: R, label_column: &str) -> Result<Dataset> {
    let mut reader = csv_reader(reader);
    let headers = read_headers(&mut reader)?;
    let label_idx = header_index(&headers, label_column)?;
    let feature_cols: Vec<usize> = (0..headers.len()).filter(|&c| c != label_idx).collect();

    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut names: Vec<String> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record?;
        for &c in &feature_cols {
            data.push(parse_cell(&record, c, row, &headers)?);
        }
        let name = record
            .get(label_idx)
            .filter(|s| !s.is_empty())
            .ok_or(Error::MissingLabel { row })?;
        let id = match names.iter().position(|n| n == name) {
            Some(id) => id,
            None => {
                names.push(name.to_string());
                names.len() - 1
            }
        };
        labels.push(id);
    }
    if labels.is_empty() {
        return Err(Error::EmptyFile);
    }
    let features = Matrix::from_vec(labels.len(), feature_cols.len(), data).expect("sized");
    Dataset::new(features, labels, Some(names), Provenance::Inline)
}

pub fn load_csv(path: impl AsRef<Path>, label_column: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    let mut ds = read_dataset_csv(std::io::BufReader::new(file), label_column)?;
    ds.provenance = Provenance::Csv(path.to_path_buf());
    Ok(ds)
}

/// Score columns plus integer labels, as consumed by the `metric` command.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub columns: Vec<String>,
    pub scores: Matrix,
    pub labels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub auroc: f64,
    pub n_samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_pos: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_neg: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_class: Option<Vec<ClassAuroc>>,
}

/// Parses a score file: every non-label column is a score column, labels are
/// non-negative integers.
pub fn read_score_csv<R: Read>(reader: R, label_column: &str) -> Result<ScoreTable> {
    let mut reader = csv_reader(reader);
    let headers = read_headers(&mut reader)?;
    let label_idx = header_index(&headers, label_column)?;
    let score_cols: Vec<usize> = (0..headers.len()).filter(|&c| c != label_idx).collect();
    if score_cols.is_empty() {
        return Err(Error::MissingColumn("<score>".into()));
    }

    let mut data = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record?;
        for &c in &score_cols {
            data.push(parse_cell(&record, c, row, &headers)?);
        }
        let label = record
            .get(label_idx)
            .and_then(|s| s.trim().parse::<usize>().ok())
            .ok_or_else(|| Error::NonNumericCell {
                row,
                col: label_column.to_string(),
            })?;
        labels.push(label);
    }
    if labels.is_empty() {
        return Err(Error::EmptyFile);
    }
    Ok(ScoreTable {
        columns: score_cols.iter().map(|&c| headers[c].to_string()).collect(),
        scores: Matrix::from_vec(labels.len(), score_cols.len(), data).expect("sized"),
        labels,
    })
}

impl ScoreTable {
    /// Binary mode scores with the last column and treats label 1 as
    /// positive; labels must be 0 or 1. Multiclass mode needs one column per
    /// class and computes strict macro one-vs-rest AUROC.
    pub fn auroc(&self, multiclass: bool) -> Result<MetricReport> {
        let n_samples = self.labels.len();
        if multiclass {
            let k = self.scores.cols();
            if let Some(row) = self.labels.iter().position(|&l| l >= k) {
                return Err(Error::InvalidBatch(format!(
                    "row {}: label {} has no score column ({k} columns)",
                    row + 1,
                    self.labels[row]
                )));
            }
            let batch = PredictionBatch::new(self.scores.clone(), self.labels.clone())?;
            let ovr = auroc_multiclass_ovr(&batch, ClassPolicy::Strict)?;
            return Ok(MetricReport {
                auroc: ovr.macro_auroc,
                n_samples,
                n_pos: None,
                n_neg: None,
                per_class: Some(ovr.per_class),
            });
        }
        if self.scores.cols() > 2 {
            return Err(Error::InvalidBatch(format!(
                "{} score columns; use multiclass mode",
                self.scores.cols()
            )));
        }
        if let Some(row) = self.labels.iter().position(|&l| l > 1) {
            return Err(Error::InvalidBatch(format!(
                "row {}: binary labels must be 0 or 1, got {}",
                row + 1,
                self.labels[row]
            )));
        }
        let scores = self.scores.column(self.scores.cols() - 1);
        let is_pos: Vec<bool> = self.labels.iter().map(|&l| l == 1).collect();
        let a = auroc_scores(&scores, &is_pos)?;
        Ok(MetricReport {
            auroc: a.value,
            n_samples,
            n_pos: Some(a.n_pos),
            n_neg: Some(a.n_neg),
            per_class: None,
        })
    }
}
