use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use causemap::io;
use causemap::{compute_causality_map, extract_factors, EstimatorConfig, FactorConfig, FeatureStack};
use serde_json::Value;
use tempfile::TempDir;

fn causemap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_causemap")).args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn sample_stack() -> FeatureStack {
    let data = (0..3 * 16).map(|i| ((i * 37 % 11) as f64) / 7.0).collect();
    FeatureStack::new(3, 4, data).unwrap()
}

fn files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = match fs::read_dir(dir) {
        Ok(rd) => rd.map(|e| e.unwrap().file_name().into_string().unwrap()).collect(),
        Err(_) => Vec::new(),
    };
    v.sort();
    v
}

#[test]
fn cmap_matches_library_and_round_trips() {
    let tmp = TempDir::new().unwrap();
    let stack = sample_stack();
    let input = write(tmp.path(), "stack.csv", &io::stack_to_csv(&stack));
    let out = tmp.path().join("out");
    let o = causemap(&["cmap", "--input", s(&input), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(files(&out), ["cmap.csv", "cmap.pgm"]);

    let expected = compute_causality_map(&stack, &EstimatorConfig::max()).unwrap();
    let text = fs::read_to_string(out.join("cmap.csv")).unwrap();
    assert_eq!(text, io::map_to_csv(&expected));
    assert_eq!(io::map_from_csv(&text).unwrap(), expected);
    assert_eq!(fs::read(out.join("cmap.pgm")).unwrap(), io::map_to_pgm(&expected));
}

#[test]
fn lehmer_p0_via_cli_is_the_arithmetic_map() {
    let tmp = TempDir::new().unwrap();
    let stack = sample_stack();
    let input = write(tmp.path(), "stack.csv", &io::stack_to_csv(&stack));
    let out = tmp.path().join("out");
    let o = causemap(&["cmap", "--input", s(&input), "--method", "lehmer", "--p", "0", "--out", s(&out)]);
    assert!(o.status.success());
    let map = io::map_from_csv(&fs::read_to_string(out.join("cmap.csv")).unwrap()).unwrap();
    let g = stack.global_max();
    let mean = |i: usize| stack.map(i).iter().map(|v| v / g).sum::<f64>() / 16.0;
    for i in 0..3 {
        for j in 0..3 {
            let arithmetic = mean(i) * mean(j) / mean(j).max(1e-12);
            assert!((map.get(i, j) - arithmetic).abs() <= 1e-12);
        }
    }
}

#[test]
fn negative_lehmer_exponent_parses() {
    let tmp = TempDir::new().unwrap();
    let input = write(tmp.path(), "stack.csv", &io::stack_to_csv(&sample_stack()));
    let out = tmp.path().join("out");
    let o = causemap(&["cmap", "--input", s(&input), "--method", "lehmer", "--p", "-100", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn zero_stack_exits_3_without_output() {
    let tmp = TempDir::new().unwrap();
    let input = write(tmp.path(), "zero.csv", "# k=2 n=1\n0\n0\n");
    let out = tmp.path().join("out");
    let o = causemap(&["cmap", "--input", s(&input), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!o.stderr.is_empty());
    assert!(files(&out).is_empty());
}

#[test]
fn malformed_inputs_exit_2_without_output() {
    let tmp = TempDir::new().unwrap();
    let bad = write(tmp.path(), "bad.csv", "# k=2 n=2\n1,2\n");
    let out = tmp.path().join("out");
    for args in [
        vec!["cmap", "--input", s(&bad), "--out", s(&out)],
        vec!["cmap", "--input", "/nonexistent/stack.csv", "--out", s(&out)],
        vec!["cmap", "--method", "median", "--input", s(&bad), "--out", s(&out)],
        vec!["factors", "--input", s(&bad), "--out", s(&out)],
        vec!["bogus"],
        vec!["am", "--scorer", "nope", "--out", s(&out)],
    ] {
        let o = causemap(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
    let cfg = write(tmp.path(), "c.cfg", "epochs = 1\nunknown_key = 3\n");
    let o = causemap(&["--config", s(&cfg), "--out", s(&out), "train"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown_key"));
    assert!(files(&out).is_empty());
}

#[test]
fn factors_match_library() {
    let tmp = TempDir::new().unwrap();
    let map = compute_causality_map(&sample_stack(), &EstimatorConfig::max()).unwrap();
    let input = write(tmp.path(), "map.csv", &io::map_to_csv(&map));
    for (direction, mode) in [("causes", "full"), ("effects", "full"), ("causes", "bool"), ("effects", "bool")] {
        let out = tmp.path().join(format!("{direction}_{mode}"));
        let o = causemap(&["factors", "--input", s(&input), "--direction", direction, "--mode", mode, "--out", s(&out)]);
        assert!(o.status.success());
        let cfg = FactorConfig { direction: direction.parse().unwrap(), mode: mode.parse().unwrap() };
        let text = fs::read_to_string(out.join("factors.csv")).unwrap();
        assert_eq!(text, io::factors_to_csv(&extract_factors(&map, cfg)));
        if mode == "bool" {
            assert!(io::factors_from_csv(&text).unwrap().iter().all(|&v| v == 0.0 || v == 1.0));
        }
    }
}

#[test]
fn symmetric_map_gives_zero_factors() {
    let tmp = TempDir::new().unwrap();
    let input = write(tmp.path(), "map.csv", "# k=3\n0.5,0.2,0.3\n0.2,0.5,0.4\n0.3,0.4,0.5\n");
    let out = tmp.path().join("out");
    assert!(causemap(&["factors", "--input", s(&input), "--out", s(&out)]).status.success());
    assert_eq!(io::factors_from_csv(&fs::read_to_string(out.join("factors.csv")).unwrap()).unwrap(), vec![0.0; 3]);
}

const SMALL_TRAIN: &str = "epochs = 2\ntrain_size = 40\nval_size = 10\ntest_size = 10\nbatch_size = 8\n";

#[test]
fn train_writes_runs_and_aggregates_deterministically() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "train.cfg", &format!("{SMALL_TRAIN}variants = baseline, mulcat\nseeds = 0, 1\n"));
    let run = |name: &str| {
        let out = tmp.path().join(name);
        let o = causemap(&["--config", s(&cfg), "--out", s(&out), "train"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let a = run("a");
    let b = run("b");
    let metrics: Value = serde_json::from_slice(&fs::read(a.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["runs"].as_array().unwrap().len(), 4);
    assert_eq!(metrics["aggregates"].as_array().unwrap().len(), 2);
    for f in files(&a) {
        assert_eq!(fs::read(a.join(&f)).unwrap(), fs::read(b.join(&f)).unwrap(), "{f}");
    }
    assert_eq!(files(&a).len(), 2 + 4);
    let history = fs::read_to_string(a.join("history.csv")).unwrap();
    assert_eq!(history.lines().count(), 1 + 4 * 2);
}

#[test]
fn cab_has_baseline_parameter_count() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "train.cfg", SMALL_TRAIN);
    let out = tmp.path().join("out");
    let o = causemap(&["--config", s(&cfg), "--out", s(&out), "train", "--variant", "cab", "--variant", "baseline"]);
    assert!(o.status.success());
    let metrics: Value = serde_json::from_slice(&fs::read(out.join("metrics.json")).unwrap()).unwrap();
    let counts: Vec<u64> = metrics["runs"].as_array().unwrap().iter().map(|r| r["param_count"].as_u64().unwrap()).collect();
    assert_eq!(counts.len(), 2);
    assert_eq!(counts[0], counts[1]);
}

#[test]
fn divergence_exits_4_naming_the_seed() {
    let tmp = TempDir::new().unwrap();
    // most huge steps just silence every unit; this seed overflows instead
    let cfg = write(tmp.path(), "train.cfg", &format!("{SMALL_TRAIN}learning_rate = 1e50\nseeds = 3, 0\n"));
    let out = tmp.path().join("out");
    let o = causemap(&["--config", s(&cfg), "--out", s(&out), "train"]);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("(seed 0)"));
    assert!(files(&out).is_empty());
}

fn trace(out: &Path) -> Vec<f64> {
    fs::read_to_string(out.join("am_trace.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn am_quadratic_ascends_and_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "am.cfg", "iterations = 200\n");
    let run = |name: &str| {
        let out = tmp.path().join(name);
        let o = causemap(&["--seed", "4", "--config", s(&cfg), "--out", s(&out), "am", "--scorer", "quadratic-test"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let a = run("a");
    let b = run("b");
    let t = trace(&a);
    assert_eq!(t.len(), 200);
    assert!(t.windows(2).skip(10).all(|w| w[1] >= w[0]));
    for f in ["am.pgm", "am_image.csv", "am_trace.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
    }
}

#[test]
fn am_zero_iterations_returns_seeded_init() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "am.cfg", "iterations = 0\nheight = 5\nwidth = 6\n");
    let out = tmp.path().join("out");
    assert!(causemap(&["--seed", "8", "--config", s(&cfg), "--out", s(&out), "am", "--scorer", "quadratic-test"]).status.success());
    let img = io::image_from_csv(&fs::read_to_string(out.join("am_image.csv")).unwrap()).unwrap();
    assert_eq!(img, causemap::am::random_init(5, 6, 1, 0.0, 1.0, 8).unwrap());
}

#[test]
fn am_with_trained_desk_net() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "train.cfg", SMALL_TRAIN);
    let trained = tmp.path().join("trained");
    assert!(causemap(&["--config", s(&cfg), "--out", s(&trained), "train", "--variant", "mulcat"]).status.success());
    let params = trained.join("params_mulcat_seed0.json");
    let am_cfg = write(tmp.path(), "am.cfg", "iterations = 20\nw_symmetry = 0.1\njitter = 1\nblur_every = 5\n");
    let out = tmp.path().join("am");
    let scorer = format!("desknet:{}:1", s(&params));
    let o = causemap(&["--config", s(&am_cfg), "--out", s(&out), "am", "--scorer", &scorer]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (w, h, _) = io::decode_pgm(&fs::read(out.join("am.pgm")).unwrap()).unwrap();
    assert_eq!((w, h), (16, 16));

    // blow up the classifier so the logits overflow
    let mut model: Value = serde_json::from_slice(&fs::read(&params).unwrap()).unwrap();
    for v in model["params"]["fc_w"].as_array_mut().unwrap() {
        *v = Value::from(1e308);
    }
    let broken = write(tmp.path(), "broken.json", &model.to_string());
    let out = tmp.path().join("broken");
    let o = causemap(&["--out", s(&out), "am", "--scorer", &format!("desknet:{}:0", s(&broken))]);
    assert_eq!(o.status.code(), Some(5), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(files(&out).is_empty());
}
