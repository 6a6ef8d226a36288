//! Monte Carlo evaluation: repeated random train/validation/test splits,
//! every loss arm trained on the same split from the same initialization,
//! test AUROCs aggregated into means, 95% intervals and t-tests.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Partition, Result};
use crate::metrics::auroc_auto;
use crate::nn::{init_model, train, TrainConfig};
use crate::seed::{derive_seed, rng_from, STREAM_INIT, STREAM_SHUFFLE, STREAM_SPLIT};
use crate::stats::{mean, mean_ci, t_test};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    /// (train, validation, test) fractions.
    pub ratios: [f64; 3],
    pub stratified: bool,
    pub n_repeats: usize,
    pub base_seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            ratios: [0.6, 0.2, 0.2],
            stratified: true,
            n_repeats: 100,
            base_seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if self.ratios.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::InvalidParams("split ratios must be positive".into()));
        }
        if (self.ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParams("split ratios must sum to 1".into()));
        }
        if self.n_repeats < 1 {
            return Err(Error::InvalidParams("n_repeats must be at least 1".into()));
        }
        Ok(())
    }

    /// Seed of trial `trial`; drives its split, initialization and shuffling.
    pub fn trial_seed(&self, trial: usize) -> u64 {
        derive_seed(self.base_seed, &[trial as u64])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// `floor(ratio * n)`, tolerant of products like 0.6 * 10 landing a hair
/// below an integer.
fn floor_share(ratio: f64, n: usize) -> usize {
    ((ratio * n as f64) + 1e-9).floor() as usize
}

/// Partition sizes: floor, floor, remainder.
pub fn partition_sizes(n: usize, ratios: &[f64; 3]) -> [usize; 3] {
    let n_train = floor_share(ratios[0], n);
    let n_val = floor_share(ratios[1], n).min(n - n_train);
    [n_train, n_val, n - n_train - n_val]
}

/// Integer per-class partition counts with row sums `class_counts` and column
/// sums `sizes`, each entry the floor or ceiling of its proportional share
/// `class_counts[c] * sizes[j] / n`. Such a rounding always exists; it is
/// found as a max-flow over the cells with a fractional share. `order` sets
/// which classes are offered the ceilings first.
fn controlled_rounding(
    class_counts: &[usize],
    sizes: &[usize; 3],
    order: &[usize],
) -> Vec<[usize; 3]> {
    let n: usize = class_counts.iter().sum();
    let k = class_counts.len();
    let mut alloc: Vec<[usize; 3]> = class_counts
        .iter()
        .map(|&c| [0, 1, 2].map(|j| c * sizes[j] / n))
        .collect();
    let row_need: Vec<usize> = (0..k)
        .map(|c| class_counts[c] - alloc[c].iter().sum::<usize>())
        .collect();
    let col_need: Vec<usize> = (0..3)
        .map(|j| sizes[j] - alloc.iter().map(|a| a[j]).sum::<usize>())
        .collect();
    let fractional = |c: usize, j: usize| !(class_counts[c] * sizes[j]).is_multiple_of(n);

    // Nodes: 0 source, 1..=k classes, k+1..=k+3 partitions, k+4 sink.
    let nodes = k + 5;
    let sink = k + 4;
    let mut cap = vec![vec![0usize; nodes]; nodes];
    for &c in order {
        cap[0][1 + c] = row_need[c];
        for j in 0..3 {
            if fractional(c, j) {
                cap[1 + c][k + 1 + j] = 1;
            }
        }
    }
    for j in 0..3 {
        cap[k + 1 + j][sink] = col_need[j];
    }
    // neighbour lists in the requested class order keep the search deterministic
    let mut visit: Vec<usize> = vec![0];
    visit.extend(order.iter().map(|&c| 1 + c));
    visit.extend(k + 1..=sink);
    loop {
        let mut parent = vec![usize::MAX; nodes];
        parent[0] = 0;
        let mut queue = std::collections::VecDeque::from([0usize]);
        while let Some(u) = queue.pop_front() {
            for &v in &visit {
                if parent[v] == usize::MAX && cap[u][v] > 0 {
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if parent[sink] == usize::MAX {
            break;
        }
        let mut v = sink;
        while v != 0 {
            let u = parent[v];
            cap[u][v] -= 1;
            cap[v][u] += 1;
            v = u;
        }
    }
    for c in 0..k {
        for j in 0..3 {
            // reverse capacity on a class→partition edge is the flow through it
            if fractional(c, j) && cap[k + 1 + j][1 + c] > 0 {
                alloc[c][j] += 1;
            }
        }
    }
    debug_assert!((0..k).all(|c| alloc[c].iter().sum::<usize>() == class_counts[c]));
    alloc
}

/// Random train/validation/test partition of `0..labels.len()`.
///
/// Partition sizes follow floor / floor / remainder. In stratified mode each
/// class contributes the floor or ceiling of its proportional share to every
/// partition, and every class must reach every partition.
pub fn monte_carlo_split(labels: &[usize], spec: &SplitSpec, trial: usize) -> Result<Split> {
    spec.validate()?;
    let n = labels.len();
    if n < 5 {
        return Err(Error::InvalidParams(format!(
            "need at least 5 samples to split, got {n}"
        )));
    }
    let mut rng = rng_from(derive_seed(spec.trial_seed(trial), &[STREAM_SPLIT]));
    let sizes = partition_sizes(n, &spec.ratios);
    let mut split = Split {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
    };
    if !spec.stratified {
        let mut indices: Vec<usize> = (0..n).collect();
        indices.shuffle(&mut rng);
        split.test = indices.split_off(sizes[0] + sizes[1]);
        split.val = indices.split_off(sizes[0]);
        split.train = indices;
        return Ok(split);
    }

    let n_classes = labels.iter().max().unwrap() + 1;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        members[l].push(i);
    }
    let counts: Vec<usize> = members.iter().map(Vec::len).collect();
    let mut order: Vec<usize> = (0..n_classes).collect();
    order.shuffle(&mut rng);
    let alloc = controlled_rounding(&counts, &sizes, &order);
    for (class, mut idx) in members.into_iter().enumerate() {
        if idx.is_empty() {
            continue;
        }
        for (j, partition) in [Partition::Train, Partition::Validation, Partition::Test]
            .into_iter()
            .enumerate()
        {
            if alloc[class][j] == 0 {
                return Err(Error::TooSmall { class, partition });
            }
        }
        idx.shuffle(&mut rng);
        let test = idx.split_off(alloc[class][0] + alloc[class][1]);
        let val = idx.split_off(alloc[class][0]);
        split.train.extend(idx);
        split.val.extend(val);
        split.test.extend(test);
    }
    // interleave classes so partitions are not class-sorted
    split.train.shuffle(&mut rng);
    split.val.shuffle(&mut rng);
    split.test.shuffle(&mut rng);
    Ok(split)
}

/// One loss configuration under comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arm {
    pub name: String,
    /// `seed` is ignored; each trial supplies its own.
    pub train: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub arms: Vec<Arm>,
    /// Hidden layer widths; input and output sizes come from the data.
    pub hidden: Vec<usize>,
    pub split: SplitSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    /// Test AUROC per arm, in arm order.
    pub aurocs: Vec<f64>,
    /// Selected epoch per arm.
    pub best_epochs: Vec<usize>,
}

/// Runs every arm on one split. All arms share the split, the initial
/// weights and the shuffling seed.
pub fn run_trial(dataset: &Dataset, experiment: &Experiment, trial: usize) -> Result<TrialResult> {
    let inner = || -> Result<TrialResult> {
        let split = monte_carlo_split(dataset.labels(), &experiment.split, trial)?;
        let all = dataset.to_labeled();
        let (train_set, val_set, test_set) = (
            all.subset(&split.train),
            all.subset(&split.val),
            all.subset(&split.test),
        );

        let seed = experiment.split.trial_seed(trial);
        let mut dims = vec![dataset.dim()];
        dims.extend(&experiment.hidden);
        dims.push(dataset.n_classes());
        let initial = init_model(&dims, derive_seed(seed, &[STREAM_INIT]))?;

        let mut aurocs = Vec::with_capacity(experiment.arms.len());
        let mut best_epochs = Vec::with_capacity(experiment.arms.len());
        for arm in &experiment.arms {
            let config = TrainConfig {
                seed: derive_seed(seed, &[STREAM_SHUFFLE]),
                ..arm.train.clone()
            };
            let outcome = train(initial.clone(), &train_set, &val_set, &config)?;
            aurocs.push(auroc_auto(&test_set.predict_proba(&outcome.model)?)?);
            best_epochs.push(outcome.best_epoch);
        }
        Ok(TrialResult {
            trial,
            seed,
            aurocs,
            best_epochs,
        })
    };
    inner().map_err(|e| Error::Trial {
        trial,
        source: Box::new(e),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmReport {
    pub name: String,
    pub aurocs: Vec<f64>,
    pub mean: f64,
    /// `None` with fewer than two trials.
    pub std: Option<f64>,
    pub ci: Option<Interval>,
}

/// `t > 0` means `arm_a` scored higher on average.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub arm_a: String,
    pub arm_b: String,
    pub t: Option<f64>,
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateReport {
    pub arms: Vec<ArmReport>,
    /// Every arm against the first.
    pub comparisons: Vec<Comparison>,
    pub trial_seeds: Vec<u64>,
}

/// Folds trial results (in trial order) into per-arm statistics.
pub fn aggregate(experiment: &Experiment, trials: &[TrialResult]) -> AggregateReport {
    let arms: Vec<ArmReport> = experiment
        .arms
        .iter()
        .enumerate()
        .map(|(a, arm)| {
            let aurocs: Vec<f64> = trials.iter().map(|t| t.aurocs[a]).collect();
            let ci = mean_ci(&aurocs).ok();
            ArmReport {
                name: arm.name.clone(),
                mean: mean(&aurocs),
                std: ci.map(|c| c.std),
                ci: ci.map(|c| Interval {
                    low: c.low,
                    high: c.high,
                }),
                aurocs,
            }
        })
        .collect();
    let comparisons = arms
        .iter()
        .skip(1)
        .map(|other| {
            let test = t_test(&arms[0].aurocs, &other.aurocs).ok();
            Comparison {
                arm_a: arms[0].name.clone(),
                arm_b: other.name.clone(),
                t: test.map(|r| r.t).filter(|t| t.is_finite()),
                p: test.map(|r| r.p),
            }
        })
        .collect();
    AggregateReport {
        arms,
        comparisons,
        trial_seeds: trials.iter().map(|t| t.seed).collect(),
    }
}

/// Runs all trials on `jobs` worker threads. Output does not depend on
/// `jobs`; on failure the error of the lowest failing trial is returned.
pub fn run_experiment(
    dataset: &Dataset,
    experiment: &Experiment,
    jobs: usize,
) -> Result<AggregateReport> {
    experiment.split.validate()?;
    if experiment.arms.is_empty() {
        return Err(Error::InvalidParams("need at least one arm".into()));
    }
    for arm in &experiment.arms {
        arm.train.validate()?;
    }
    let n = experiment.split.n_repeats;
    let results: Vec<Result<TrialResult>> = if jobs <= 1 {
        (0..n).map(|t| run_trial(dataset, experiment, t)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))?;
        pool.install(|| {
            (0..n)
                .into_par_iter()
                .map(|t| run_trial(dataset, experiment, t))
                .collect()
        })
    };
    let trials = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(aggregate(experiment, &trials))
}
