#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rankloss::{Matrix, PredictionBatch};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Reference AUROC: loop over all pairs, ties count one half.
pub fn oracle_auroc(pos: &[f64], neg: &[f64]) -> f64 {
    let mut auc = 0.0;
    for &p in pos {
        for &n in neg {
            if p > n {
                auc += 1.0;
            } else if p == n {
                auc += 0.5;
            }
        }
    }
    auc / (pos.len() * neg.len()) as f64
}

/// Labels in `0..k` with every class present, at least `k` samples.
pub fn labels_with_all_classes(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    assert!(n >= k);
    let mut labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
    for (c, l) in labels.iter_mut().take(k).enumerate() {
        *l = c;
    }
    use rand::seq::SliceRandom;
    labels.shuffle(rng);
    labels
}

/// Standard-normal-ish logits, every class present.
pub fn random_batch(seed: u64, n: usize, k: usize) -> PredictionBatch {
    let mut rng = rng(seed);
    let labels = labels_with_all_classes(&mut rng, n, k);
    let data = (0..n * k).map(|_| rng.random_range(-2.0..2.0)).collect();
    PredictionBatch::new(Matrix::from_vec(n, k, data).unwrap(), labels).unwrap()
}

/// Binary scores drawn from a small grid when `ties` is set.
pub fn random_scores(rng: &mut ChaCha8Rng, n: usize, ties: bool) -> (Vec<f64>, Vec<bool>) {
    let scores = (0..n)
        .map(|_| {
            if ties {
                rng.random_range(0..5) as f64 / 4.0
            } else {
                rng.random::<f64>()
            }
        })
        .collect();
    let mut is_pos: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
    is_pos[0] = true;
    is_pos[n - 1] = false;
    (scores, is_pos)
}

pub fn split_scores(scores: &[f64], is_pos: &[bool]) -> (Vec<f64>, Vec<f64>) {
    let pos = scores
        .iter()
        .zip(is_pos)
        .filter(|(_, &p)| p)
        .map(|(s, _)| *s)
        .collect();
    let neg = scores
        .iter()
        .zip(is_pos)
        .filter(|(_, &p)| !p)
        .map(|(s, _)| *s)
        .collect();
    (pos, neg)
}
