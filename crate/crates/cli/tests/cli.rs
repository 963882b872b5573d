use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use evofuse::fusion::{evaluate, BinaryChromosome, Chromosome, DEFAULT_CUTOFF};
use evofuse::nsga2::ParetoFront;
use evofuse::score_data::{assemble_matrix, load_labels, load_manifest};

fn evofuse(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evofuse"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Writes scenario `name` to `dir/data` and returns the directory.
fn synth(dir: &Path, name: &str, extra: &[&str]) -> PathBuf {
    let mut args = vec!["synth", "--scenario", name, "--seed", "21", "--out-dir", "data"];
    args.extend_from_slice(extra);
    let o = evofuse(dir, &args);
    assert!(o.status.success(), "{}", stderr(&o));
    dir.join("data")
}

const DATA: [&str; 4] = ["--manifest", "data/manifest.csv", "--labels", "data/labels.txt"];

fn optimize(dir: &Path, extra: &[&str]) -> (Output, PathBuf) {
    let mut args = vec!["optimize"];
    args.extend_from_slice(&DATA);
    args.extend_from_slice(extra);
    let o = evofuse(dir, &args);
    let tag = extra
        .iter()
        .position(|a| *a == "--tag")
        .map(|i| extra[i + 1])
        .unwrap_or("");
    (o, dir.join("out/runs").join(tag))
}

#[test]
fn validate_prints_every_detector() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), "s1", &["--n-bonafide", "300", "--n-spoof", "300"]);
    let mut args = vec!["validate"];
    args.extend_from_slice(&DATA);
    let o = evofuse(tmp.path(), &args);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("12 detectors"));
    assert!((0..12).all(|i| text.contains(&format!("s1_det{i:02}"))));
    assert!(text.contains("300 bonafide, 300 spoof"));
}

#[test]
fn missing_score_file_is_a_data_error() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth(tmp.path(), "sep", &[]);
    fs::remove_file(data.join("scores/001_sep_det1.txt")).unwrap();
    let mut args = vec!["validate"];
    args.extend_from_slice(&DATA);
    let o = evofuse(tmp.path(), &args);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("001_sep_det1.txt"), "{}", stderr(&o));
}

#[test]
fn usage_and_config_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(evofuse(tmp.path(), &["optimize", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(evofuse(tmp.path(), &["optimize"]).status.code(), Some(1));
    fs::write(tmp.path().join("bad.toml"), "population = 3\n").unwrap();
    let o = evofuse(tmp.path(), &["--config", "bad.toml", "optimize"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(evofuse(tmp.path(), &["--help"]).status.success());

    synth(tmp.path(), "sep", &[]);
    let (o, _) = optimize(tmp.path(), &["--population-size", "3"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let leftovers = fs::read_dir(tmp.path().join("out/runs")).map_or(0, |d| d.count());
    assert_eq!(leftovers, 0);
}

#[test]
fn optimize_layout_and_single_generation() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), "sep", &[]);
    let (o, run) = optimize(tmp.path(), &["--max-generations", "1", "--runs", "2", "--tag", "one"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["run_0/front.csv", "run_0/hv.csv", "run_1/front.csv", "super_front.csv", "report.json"] {
        assert!(run.join(f).exists(), "{f}");
    }
    let hv = fs::read_to_string(run.join("run_0/hv.csv")).unwrap();
    assert_eq!(hv.lines().count(), 2);
    assert!(hv.starts_with("generation,hypervolume\n0,"));

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(report["config"]["max_generations"], 1);
    assert_eq!(report["runs"][0]["generations_run"], 1);
    assert_eq!(report["runs"][1]["seed"], 1);
    assert_eq!(report["runs"][0]["hv_trace"].as_array().unwrap().len(), 1);

    let (again, _) = optimize(tmp.path(), &["--max-generations", "1", "--tag", "one"]);
    assert_eq!(again.status.code(), Some(1));
}

#[test]
fn config_file_with_flag_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), "sep", &[]);
    fs::write(
        tmp.path().join("exp.toml"),
        "manifest = \"data/manifest.csv\"\nlabels = \"data/labels.txt\"\nencoding = \"real\"\n\
         max_generations = 5\nseed = 3\nruns = 1\n",
    )
    .unwrap();
    let o = evofuse(tmp.path(), &["--config", "exp.toml", "optimize", "--seed", "8", "--tag", "c"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("out/runs/c/report.json")).unwrap())
            .unwrap();
    assert_eq!(report["config"]["seed"], 8);
    assert_eq!(report["run_config"]["encoding"], "real");
    assert_eq!(report["run_config"]["max_generations"], 5);
}

#[test]
fn identical_runs_give_identical_fronts() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), "s1", &["--n-bonafide", "500", "--n-spoof", "500"]);
    let common = ["--runs", "2", "--seed", "5", "--encoding", "real", "--max-generations", "60"];
    let mut fronts = Vec::new();
    for (tag, workers) in [("a", "1"), ("b", "1"), ("c", "4")] {
        let mut args = common.to_vec();
        args.extend_from_slice(&["--tag", tag, "--workers", workers]);
        let (o, run) = optimize(tmp.path(), &args);
        assert!(o.status.success(), "{}", stderr(&o));
        fronts.push(fs::read(run.join("super_front.csv")).unwrap());
        fronts.push(fs::read(run.join("run_1/front.csv")).unwrap());
    }
    assert_eq!(fronts[0], fronts[2]);
    assert_eq!(fronts[1], fronts[3]);
    assert_eq!(fronts[0], fronts[4]);
    assert_eq!(fronts[1], fronts[5]);
}

#[test]
fn s1_super_front_covers_singletons() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth(tmp.path(), "s1", &[]);
    let (o, run) = optimize(tmp.path(), &["--runs", "10", "--tag", "s1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let front = ParetoFront::from_csv(&fs::read_to_string(run.join("super_front.csv")).unwrap()).unwrap();

    let m = assemble_matrix(
        load_manifest(&data.join("manifest.csv")).unwrap(),
        load_labels(&data.join("labels.txt")).unwrap(),
    )
    .unwrap();
    for k in 0..m.n_detectors() {
        let c = Chromosome::Binary(BinaryChromosome::one_hot(m.n_detectors(), k));
        let single = evaluate(&c, &m, DEFAULT_CUTOFF).unwrap();
        assert!(front.weakly_dominates(&single), "detector {k}: {single:?}");
    }
}

#[test]
fn baselines_report_and_hv() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), "s1", &["--n-bonafide", "500", "--n-spoof", "500"]);
    let dir = tmp.path();
    let (o, run) = optimize(dir, &["--runs", "2", "--tag", "r"]);
    assert!(o.status.success(), "{}", stderr(&o));

    let mut args = vec!["baseline", "--mode", "average", "--subset", "s1_det00,1", "--output", "avg.csv"];
    args.extend_from_slice(&DATA);
    let o = evofuse(dir, &args);
    assert!(o.status.success(), "{}", stderr(&o));
    let avg = fs::read_to_string(dir.join("avg.csv")).unwrap();
    assert!(avg.starts_with("name,eer,min_dcf,params\naverage_0-1,"));
    assert!(avg.trim_end().ends_with(",35000000"));

    let mut args = vec![
        "baseline", "--mode", "logreg", "--prune", "by_weight", "--output", "lr.csv", "--sweep-output", "sweep.csv",
    ];
    args.extend_from_slice(&DATA);
    let o = evofuse(dir, &args);
    assert!(o.status.success(), "{}", stderr(&o));
    let sweep = fs::read_to_string(dir.join("sweep.csv")).unwrap();
    assert!(sweep.starts_with("k,eer,params\n12,"));
    assert_eq!(sweep.lines().count(), 13);

    let front = run.join("super_front.csv").display().to_string();
    let front_arg = format!("binary={front}");
    let mut args = vec![
        "report", "--front", &front_arg, "--baseline", "avg.csv", "--baseline", "lr.csv", "--output", "cmp.csv",
    ];
    args.extend_from_slice(&DATA);
    let o = evofuse(dir, &args);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = fs::read_to_string(dir.join("cmp.csv")).unwrap();
    assert!(table.starts_with("system,source,eer,min_dcf,params,dominated\nbinary#0,"));
    // two weak detectors averaged are beaten by the front
    let avg_row = table.lines().find(|l| l.starts_with("average_0-1,")).unwrap();
    assert!(avg_row.ends_with(",true"), "{avg_row}");
    assert!(stdout(&o).contains("hypervolume binary: "));

    // a lone front reproduces itself
    let o = evofuse(dir, &["report", "--front", &front, "--output", "alone.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let alone = fs::read_to_string(dir.join("alone.csv")).unwrap();
    let parsed = ParetoFront::from_csv(&fs::read_to_string(&front).unwrap()).unwrap();
    assert_eq!(alone.lines().count(), parsed.len() + 1);

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run.join("report.json")).unwrap()).unwrap();
    let o = evofuse(dir, &["hv", "--front", &front, "--manifest", "data/manifest.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let hv: f64 = stdout(&o).trim().parse().unwrap();
    let expected = report["super_front_hypervolume"].as_f64().unwrap();
    assert!((hv - expected).abs() < 1e-6);

    let bad = evofuse(dir, &["report", "--baseline", "sweep.csv"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn metrics_on_one_score_file() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth(tmp.path(), "sep", &[]);
    let o = evofuse(
        tmp.path(),
        &["metrics", "--scores", "data/scores/000_sep_det0.txt", "--labels", "data/labels.txt", "--det", "det.csv"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("eer="));
    let det = fs::read_to_string(tmp.path().join("det.csv")).unwrap();
    assert!(det.starts_with("threshold,far,frr\n"));
    assert!(data.join("ground_truth.csv").exists());
}
