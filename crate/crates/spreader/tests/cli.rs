//! The `spreader` binary end to end on a small synthetic world.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn spreader(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spreader"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = spreader(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn small_world(dir: &Path) {
    let conf = dir.join("small.conf");
    fs::write(
        &conf,
        "# small world\ncommunities = 4\ncommunity_size = 40\np_in = 0.25\np_out = 0.0125\nseeds_per_community = 2\nepochs = 3\nhidden_dim = 8\n",
    )
    .unwrap();
    ok(&[
        "--config",
        conf.to_str().unwrap(),
        "--seed",
        "5",
        "--out-dir",
        dir.to_str().unwrap(),
        "synth",
    ]);
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn synth_then_each_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    small_world(d);
    for f in [
        "graph.tsv",
        "planted.tsv",
        "trust_scores.tsv",
        "believability.tsv",
        "trace.tsv",
        "activity.csv",
        "pairs.csv",
        "synth.json",
    ] {
        assert!(d.join(f).exists(), "{f} missing");
    }
    let graph = d.join("graph.tsv");
    let out = d.join("stages");
    let common = ["--seed", "5", "--out-dir", arg(&out)];

    ok(&[&common[..], &["tsm", "--graph", arg(&graph)]].concat());
    let edges = fs::read_to_string(&graph).unwrap().lines().count();
    assert_eq!(
        fs::read_to_string(out.join("believability.tsv"))
            .unwrap()
            .lines()
            .count(),
        edges
    );

    ok(&[&common[..], &["communities", "--graph", arg(&graph)]].concat());
    ok(&[
        &common[..],
        &[
            "cha",
            "--graph",
            arg(&graph),
            "--communities",
            arg(&d.join("planted.tsv")),
        ],
    ]
    .concat());
    let cha = fs::read_to_string(out.join("cha.tsv")).unwrap();
    assert!(cha.lines().all(|l| {
        let role = l.split('\t').nth(2).unwrap();
        ["boundary", "core", "neighbor"].contains(&role)
    }));

    ok(&[
        &common[..],
        &[
            "featurize",
            "--graph",
            arg(&graph),
            "--activity",
            arg(&d.join("activity.csv")),
            "--pairs",
            arg(&d.join("pairs.csv")),
            "--strategy",
            "act/act",
        ],
    ]
    .concat());
    assert!(out.join("features.tsv").exists() && out.join("sampling_weights.tsv").exists());

    let root = fs::read_to_string(&graph)
        .unwrap()
        .split('\t')
        .next()
        .unwrap()
        .to_owned();
    let drawn = ok(&[&common[..], &["sample", "--graph", arg(&graph), "--root", &root]].concat());
    assert!(drawn.lines().all(|l| l.starts_with(&format!("{root}\t"))));
    assert!(!drawn.is_empty());
}

#[test]
fn evaluate_train_predict_and_score() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    small_world(d);
    let (graph, trace) = (d.join("graph.tsv"), d.join("trace.tsv"));
    let base = [
        "--seed",
        "5",
        "--out-dir",
        arg(d),
        "--set",
        "epochs=3",
        "--set",
        "hidden_dim=8",
    ];
    let inputs = ["--graph", arg(&graph), "--trace", arg(&trace)];

    ok(&[&base[..], &["evaluate"], &inputs[..], &["--strategy", "top/top"]].concat());
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("report.json")).unwrap()).unwrap();
    let folds = report["metrics"]["folds"].as_array().unwrap();
    assert_eq!(folds.len(), 5);
    let mean: f64 = folds
        .iter()
        .map(|f| f["metrics"]["accuracy"].as_f64().unwrap())
        .sum::<f64>()
        / 5.0;
    assert!((mean - report["metrics"]["mean"]["accuracy"].as_f64().unwrap()).abs() < 1e-12);
    assert!(report["timing"]["runtime_seconds"].as_f64().unwrap() >= 0.0);
    assert_eq!(report["seeds"]["master"], 5);

    ok(&[&base[..], &["baseline"], &inputs[..], &["--kind", "trusting"]].concat());

    ok(&[&base[..], &["train"], &inputs[..], &["--strategy", "rand/top"]].concat());
    let checkpoint: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("model.json")).unwrap()).unwrap();
    assert_eq!(checkpoint["version"], 1);
    assert_eq!(checkpoint["model"]["dims"]["hidden"], 8);

    ok(&[
        &base[..],
        &[
            "predict",
            "--graph",
            arg(&graph),
            "--checkpoint",
            arg(&d.join("model.json")),
        ],
    ]
    .concat());
    let predictions = fs::read_to_string(d.join("predictions.tsv")).unwrap();
    assert_eq!(
        predictions.lines().count(),
        fs::read_to_string(d.join("trust_scores.tsv")).unwrap().lines().count()
    );

    let scored = ok(&[
        &base[..],
        &["evaluate"],
        &inputs[..],
        &["--predictions", arg(&d.join("predictions.tsv"))],
    ]
    .concat());
    assert!(scored.starts_with("accuracy"));
}

#[test]
fn pipeline_reports_are_identical_modulo_timing() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = tmp.path().join(name);
        ok(&[
            "--seed",
            "3",
            "--out-dir",
            arg(&out),
            "--set",
            "communities=4",
            "--set",
            "community_size=40",
            "--set",
            "seeds_per_community=2",
            "--set",
            "epochs=2",
            "--set",
            "hidden_dim=8",
            "pipeline",
            "--model",
            "interpolation",
        ]);
        let mut v: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("timing");
        v
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn exit_codes_distinguish_input_errors_from_refusals() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let missing = spreader(&["--out-dir", arg(d), "tsm", "--graph", arg(&d.join("nope.tsv"))]);
    assert_eq!(missing.status.code(), Some(2));

    fs::write(d.join("bad.tsv"), "a\tb\tnot-a-number\n").unwrap();
    let bad = spreader(&["--out-dir", arg(d), "tsm", "--graph", arg(&d.join("bad.tsv"))]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains(":1:"));

    let unknown = spreader(&["--set", "colour=blue", "synth"]);
    assert_eq!(unknown.status.code(), Some(2));

    // a single spreader cannot support training
    small_world(d);
    let lines: Vec<String> = fs::read_to_string(d.join("trace.tsv"))
        .unwrap()
        .lines()
        .enumerate()
        .map(|(i, l)| {
            let node = l.split('\t').next().unwrap();
            if i == 0 {
                format!("{node}\tspreader\t0")
            } else {
                format!("{node}\tunexposed\t-")
            }
        })
        .collect();
    fs::write(d.join("flat.tsv"), lines.join("\n")).unwrap();
    let refused = spreader(&[
        "--out-dir",
        arg(d),
        "evaluate",
        "--graph",
        arg(&d.join("graph.tsv")),
        "--trace",
        arg(&d.join("flat.tsv")),
    ]);
    assert_eq!(
        refused.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&refused.stderr)
    );
}
