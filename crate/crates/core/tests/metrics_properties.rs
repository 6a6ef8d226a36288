mod common;

use proptest::prelude::*;
use rand::Rng;

use common::{oracle_auroc, random_scores, rng, split_scores};
use rankloss::metrics::{
    auroc_auto, auroc_multiclass_ovr, auroc_pairwise, auroc_rank, auroc_rank_scores,
    monotone_check, ClassPolicy,
};
use rankloss::{Matrix, PredictionBatch};

#[test]
fn pairwise_matches_loop_oracle() {
    let v = auroc_pairwise(&[0.4, 0.8], &[0.6]).unwrap();
    assert_eq!(v.value, oracle_auroc(&[0.4, 0.8], &[0.6]));
    for seed in 0..100 {
        let mut r = rng(seed);
        let (scores, is_pos) = random_scores(&mut r, 50, seed % 2 == 0);
        let (pos, neg) = split_scores(&scores, &is_pos);
        let got = auroc_pairwise(&pos, &neg).unwrap().value;
        assert!((got - oracle_auroc(&pos, &neg)).abs() < 1e-15);
    }
}

#[test]
fn rank_route_with_injected_ties() {
    let mut r = rng(200);
    let mut scores: Vec<f64> = (0..200).map(|_| r.random::<f64>()).collect();
    for i in (0..200).step_by(7) {
        scores[i] = 0.5;
    }
    let is_pos: Vec<bool> = (0..200).map(|i| i % 3 == 0).collect();
    let (pos, neg) = split_scores(&scores, &is_pos);
    let rank = auroc_rank_scores(&scores, &is_pos).unwrap().value;
    assert!((rank - oracle_auroc(&pos, &neg)).abs() <= 1e-12);
}

#[test]
fn rank_on_batch_matches_pairwise() {
    let mut r = rng(3);
    let n = 60;
    let labels: Vec<usize> = (0..n).map(|i| usize::from(i % 4 == 0)).collect();
    let data: Vec<f64> = (0..2 * n)
        .map(|_| (r.random_range(0..10) as f64) / 3.0)
        .collect();
    let batch = PredictionBatch::new(Matrix::from_vec(n, 2, data).unwrap(), labels).unwrap();
    for class in 0..2 {
        let (pos, neg) = batch.split_class(class);
        let rank = auroc_rank(&batch, class).unwrap().value;
        assert!((rank - auroc_pairwise(&pos, &neg).unwrap().value).abs() <= 1e-12);
    }
}

#[test]
fn ovr_matches_hand_built_binary_calls() {
    let mut r = rng(30);
    let n = 30;
    let mut labels: Vec<usize> = (0..n).map(|_| r.random_range(0..3)).collect();
    labels[..3].copy_from_slice(&[0, 1, 2]);
    let data: Vec<f64> = (0..n * 3).map(|_| r.random::<f64>()).collect();
    let batch = PredictionBatch::new(
        Matrix::from_vec(n, 3, data.clone()).unwrap(),
        labels.clone(),
    )
    .unwrap();

    let mut expected = 0.0;
    for class in 0..3 {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for i in 0..n {
            let s = data[i * 3 + class];
            if labels[i] == class {
                pos.push(s)
            } else {
                neg.push(s)
            }
        }
        expected += oracle_auroc(&pos, &neg) / 3.0;
    }
    let got = auroc_multiclass_ovr(&batch, ClassPolicy::Strict).unwrap();
    assert!((got.macro_auroc - expected).abs() < 1e-12);
}

#[test]
fn multiclass_reduces_to_binary_on_complementary_columns() {
    for seed in 0..50 {
        let mut r = rng(seed);
        let n = 40;
        let mut labels: Vec<usize> = (0..n).map(|_| r.random_range(0..2)).collect();
        labels[0] = 0;
        labels[1] = 1;
        let p: Vec<f64> = (0..n).map(|_| r.random::<f64>()).collect();
        let rows: Vec<[f64; 2]> = p.iter().map(|&x| [1.0 - x, x]).collect();
        let batch = PredictionBatch::new(Matrix::from_rows(&rows).unwrap(), labels).unwrap();
        let ovr = auroc_multiclass_ovr(&batch, ClassPolicy::Strict)
            .unwrap()
            .macro_auroc;
        let binary = auroc_rank(&batch, 1).unwrap().value;
        assert!(
            (ovr - binary).abs() <= 1e-12,
            "seed {seed}: {ovr} vs {binary}"
        );
    }
}

#[test]
fn negation_reverses_auroc() {
    let mut r = rng(9);
    let scores: Vec<f64> = (0..40).map(|_| r.random::<f64>()).collect();
    let is_pos: Vec<bool> = (0..40).map(|i| i % 2 == 0).collect();
    let negated: Vec<f64> = scores.iter().map(|s| -s).collect();
    let (pos, neg) = split_scores(&negated, &is_pos);
    let v = auroc_rank_scores(&scores, &is_pos).unwrap().value;
    let expected = oracle_auroc(&pos, &neg);
    assert!((auroc_rank_scores(&negated, &is_pos).unwrap().value - expected).abs() < 1e-15);
    assert!((expected - (1.0 - v)).abs() < 1e-15);
    assert!(v != 0.5);
}

fn binary_case() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    (2usize..120).prop_flat_map(|n| {
        (
            prop::collection::vec(
                prop_oneof![(-4i32..4).prop_map(|x| x as f64), -10.0f64..10.0],
                n,
            ),
            prop::collection::vec(any::<bool>(), n),
        )
            .prop_map(|(s, mut p)| {
                let last = p.len() - 1;
                p[0] = true;
                p[last] = false;
                (s, p)
            })
    })
}

proptest! {
    #[test]
    fn rank_equals_pairwise((scores, is_pos) in binary_case()) {
        let (pos, neg) = split_scores(&scores, &is_pos);
        let a = auroc_rank_scores(&scores, &is_pos).unwrap();
        let b = auroc_pairwise(&pos, &neg).unwrap();
        prop_assert!((a.value - b.value).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&a.value));
        prop_assert_eq!((a.n_pos, a.n_neg), (b.n_pos, b.n_neg));
    }

    #[test]
    fn swapping_roles_complements((scores, is_pos) in binary_case()) {
        let flipped: Vec<bool> = is_pos.iter().map(|p| !p).collect();
        let v = auroc_rank_scores(&scores, &is_pos).unwrap().value;
        let w = auroc_rank_scores(&scores, &flipped).unwrap().value;
        prop_assert!((w - (1.0 - v)).abs() <= f64::EPSILON);
    }

    #[test]
    fn strictly_increasing_transforms_preserve_auroc(
        (scores, is_pos) in binary_case(),
        scale in 0.1f64..5.0,
        shift in -3.0f64..3.0,
    ) {
        let labels: Vec<usize> = is_pos.iter().map(|&p| usize::from(p)).collect();
        let rows: Vec<[f64; 2]> = scores.iter().map(|&s| [-s, s]).collect();
        let batch = PredictionBatch::new(Matrix::from_rows(&rows).unwrap(), labels).unwrap();
        prop_assert!(monotone_check(&batch, |x| scale * x + shift));
        prop_assert!(monotone_check(&batch, |x| x * x * x));
        prop_assert!(monotone_check(&batch, f64::exp));
        let before = auroc_auto(&batch).unwrap();
        prop_assert!((0.0..=1.0).contains(&before));
    }

    #[test]
    fn perfect_separation_and_full_ties(n_pos in 1usize..30, n_neg in 1usize..30, level in -5.0f64..5.0) {
        let pos: Vec<f64> = (0..n_pos).map(|i| 10.0 + i as f64).collect();
        let neg: Vec<f64> = (0..n_neg).map(|i| -(i as f64)).collect();
        prop_assert_eq!(auroc_pairwise(&pos, &neg).unwrap().value, 1.0);
        let tied_pos = vec![level; n_pos];
        let tied_neg = vec![level; n_neg];
        prop_assert_eq!(auroc_pairwise(&tied_pos, &tied_neg).unwrap().value, 0.5);
        let mut all = tied_pos.clone();
        all.extend(&tied_neg);
        let flags: Vec<bool> = (0..all.len()).map(|i| i < n_pos).collect();
        prop_assert_eq!(auroc_rank_scores(&all, &flags).unwrap().value, 0.5);
    }
}
