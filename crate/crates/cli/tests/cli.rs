mod support;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use support::{manifest_without_duration, rankloss, rankloss_with_env, read_json, stderr, write};

const SMALL_CONFIG: &str = r#"{
    "dataset": {"synthetic": {"class_counts": [30, 20], "dim": 4,
                "class_mean_separation": 2.0, "noise_std": 1.0, "seed": 3}},
    "model": {"hidden": [8]},
    "arms": [{"loss_kind": "cross_entropy", "batch_size": 8, "max_epochs": 3},
             {"loss_kind": "auc_binary", "batch_size": 16, "max_epochs": 3}],
    "split": {"n_repeats": 6, "base_seed": 11}
}"#;

fn metric(text: &str, extra: &[&str]) -> std::process::Output {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "scores.csv", text);
    let mut args = vec![
        "metric",
        "--input",
        path.to_str().unwrap(),
        "--label-col",
        "y",
    ];
    args.extend_from_slice(extra);
    rankloss(&args)
}

fn metric_value(text: &str, extra: &[&str]) -> serde_json::Value {
    let out = metric(text, extra);
    assert!(out.status.success(), "{}", stderr(&out));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn metric_perfect_and_tied() {
    let perfect = "score,y\n0.1,0\n0.2,0\n0.8,1\n0.9,1\n";
    let v = metric_value(perfect, &[]);
    assert_eq!(v["auroc"], 1.0);
    assert_eq!(v["n_pos"], 2);
    assert_eq!(v["n_neg"], 2);

    let tied = "score,y\n0.5,0\n0.5,1\n0.5,0\n0.5,1\n0.5,1\n";
    assert_eq!(metric_value(tied, &[])["auroc"], 0.5);
}

#[test]
fn metric_matches_pairwise_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let rows: Vec<(f64, u8)> = (0..50)
        .map(|i| {
            // coarse grid forces ties
            let s = rng.random_range(0..10) as f64 / 10.0;
            (
                s,
                if i < 2 {
                    i as u8
                } else {
                    rng.random_range(0..2)
                },
            )
        })
        .collect();
    let mut text = String::from("score,y\n");
    for (s, y) in &rows {
        text.push_str(&format!("{s},{y}\n"));
    }
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (sp, yp) in &rows {
        for (sn, yn) in &rows {
            if *yp == 1 && *yn == 0 {
                pairs += 1.0;
                wins += if sp > sn {
                    1.0
                } else if sp == sn {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    let got = metric_value(&text, &[])["auroc"].as_f64().unwrap();
    assert!((got - wins / pairs).abs() < 1e-12);
}

#[test]
fn metric_multiclass() {
    let text = "a,b,c,y\n0.8,0.1,0.1,0\n0.1,0.8,0.1,1\n0.1,0.1,0.8,2\n0.6,0.3,0.1,0\n";
    let v = metric_value(text, &["--multiclass"]);
    assert_eq!(v["auroc"], 1.0);
    assert_eq!(v["per_class"].as_array().unwrap().len(), 3);
}

#[test]
fn metric_bad_input_exits_2() {
    for text in [
        "score,y\n0.1,0\nabc,1\n",
        "score,label\n0.1,0\n0.9,1\n",
        "score,y\n0.1,0\n0.2,0\n",
        "score,y\n0.1,0\n0.2,7\n",
        "",
    ] {
        let out = metric(text, &[]);
        assert_eq!(out.status.code(), Some(2), "{text:?}: {}", stderr(&out));
        assert!(stderr(&out).starts_with("error:"));
    }
    let out = rankloss(&["metric", "--input", "/nonexistent.csv", "--label-col", "y"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn compare_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", SMALL_CONFIG);
    let out_path = dir.path().join("m.json");
    let out = rankloss(&[
        "compare",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("cross_entropy_b8") && stdout.contains("95% CI"));

    let m = read_json(&out_path);
    assert_eq!(m["arms"].as_array().unwrap().len(), 2);
    assert_eq!(m["arms"][0]["aurocs"].as_array().unwrap().len(), 6);
    assert!(m["arms"][1]["ci"]["low"].is_f64());
    assert!(m["comparisons"][0]["p"].is_f64());
    assert_eq!(m["trial_seeds"].as_array().unwrap().len(), 6);
    assert_eq!(m["config"]["arms"][1]["max_epochs"], 3);
    assert_eq!(m["config"]["arms"][1]["learning_rate"], 0.1);
    assert!(m["duration_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn compare_single_repeat_nulls() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        &SMALL_CONFIG.replace(r#""n_repeats": 6"#, r#""n_repeats": 1"#),
    );
    let out_path = dir.path().join("m.json");
    let out = rankloss(&[
        "compare",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let m = read_json(&out_path);
    assert!(m["arms"][0]["ci"].is_null());
    assert!(m["comparisons"][0]["p"].is_null());
}

#[test]
fn compare_is_reproducible_and_seed_overridable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", SMALL_CONFIG);
    let run = |name: &str, extra: &[&str], env: &[(&str, &str)]| {
        let path = dir.path().join(name);
        let mut args = vec![
            "compare",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            path.to_str().unwrap(),
        ];
        args.extend_from_slice(extra);
        let out = rankloss_with_env(&args, env);
        assert!(out.status.success(), "{}", stderr(&out));
        manifest_without_duration(&path)
    };
    let a = run("a.json", &[], &[]);
    assert_eq!(a, run("b.json", &[], &[]));
    assert_eq!(a, run("c.json", &["--jobs", "3"], &[]));

    let env_seed = run("d.json", &[], &[("RANKLOSS_SEED", "99")]);
    let flag_seed = run("e.json", &["--seed", "99"], &[("RANKLOSS_SEED", "5")]);
    assert_ne!(a, env_seed);
    assert_eq!(env_seed, flag_seed);
}

#[test]
fn compare_config_errors_exit_2_with_pointer() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("m.json");
    let cases = [
        (
            SMALL_CONFIG.replace(r#""batch_size": 16"#, r#""batch_size": "x""#),
            "/arms/1/batch_size",
        ),
        (
            SMALL_CONFIG.replace("[30, 20]", "[30, 20, 20]"),
            "/arms/1/loss_kind",
        ),
        (
            SMALL_CONFIG.replace(r#""hidden": [8]"#, r#""hidden": [8, 8, 8]"#),
            "/model/hidden",
        ),
    ];
    for (text, pointer) in cases {
        let cfg = write(dir.path(), "cfg.json", &text);
        let out = rankloss(&[
            "compare",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
        assert!(stderr(&out).contains(pointer), "{}", stderr(&out));
    }
    let cfg = write(dir.path(), "cfg.json", SMALL_CONFIG);
    let out = rankloss_with_env(
        &[
            "compare",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_path.to_str().unwrap(),
        ],
        &[("RANKLOSS_SEED", "abc")],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn compare_runtime_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    // a two-sample minority class cannot reach all three partitions
    let cfg = write(
        dir.path(),
        "cfg.json",
        &SMALL_CONFIG.replace("[30, 20]", "[30, 2]"),
    );
    let out_path = dir.path().join("m.json");
    let out = rankloss(&[
        "compare",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("trial 0"), "{}", stderr(&out));
}

#[test]
fn gen_then_compare_on_csv() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "spec.json",
        r#"{"class_counts": [25, 25, 20], "dim": 3, "class_mean_separation": 3.0, "noise_std": 1.0, "seed": 4}"#,
    );
    let csv = dir.path().join("data.csv");
    let out = rankloss(&[
        "gen",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("f0,f1,f2,label\n"));
    assert_eq!(text.lines().count(), 71);

    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"dataset": {"csv": {"path": "data.csv", "label_col": "label"}},
            "arms": [{"loss_kind": "auc_multiclass", "batch_size": 16, "max_epochs": 5}],
            "split": {"n_repeats": 3}}"#,
    );
    let out_path = dir.path().join("m.json");
    let out = rankloss(&[
        "compare",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let m = read_json(&out_path);
    assert!(m["arms"][0]["mean"].as_f64().unwrap() > 0.8);

    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"class_counts": [5], "dim": 3, "class_mean_separation": 1.0, "noise_std": 1.0}"#,
    );
    let out = rankloss(&[
        "gen",
        "--spec",
        bad.to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}
