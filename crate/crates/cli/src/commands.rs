use std::fs;
use std::path::{Path, PathBuf};

use evofuse::baselines::{logreg_fit, logreg_fuse, prune_sweep, PruneMode};
use evofuse::fusion::{self, BinaryChromosome, DEFAULT_CUTOFF};
use evofuse::metrics::{self, CostModel};
use evofuse::nsga2::{evolve_with_workers, super_pareto, ParetoFront, ReferencePoint, DEFAULT_REFERENCE_EER};
use evofuse::score_data::{assemble_matrix, format_params, load_labels, load_manifest, DetectorPool};
use evofuse::synthgen::{generate, write_scenario, SynthScenario};
use evofuse::{RunConfig, ScoreMatrix};
use serde::Serialize;

use crate::args::{BaselineArgs, BaselineMode, HvArgs, MetricsArgs, PruneArg, ReportArgs, ScenarioName, SynthArgs};
use crate::config::CliConfig;
use crate::error::{CliError, Result};
use crate::output::{emit, render_table, write_atomic};

fn fmt_rate(x: f64) -> String {
    format!("{x:.6}")
}

pub fn validate(cfg: &CliConfig) -> Result<()> {
    let mut sets: Vec<(&str, ScoreMatrix)> = Vec::new();
    if cfg.dev_labels.is_some() || cfg.eval_labels.is_some() {
        let (dev, eval) = cfg.load_split()?;
        sets.push(("dev", dev));
        sets.push(("eval", eval));
    } else {
        sets.push(("labels", cfg.load_main_matrix()?));
    }
    let pool = sets[0].1.pool().clone();
    println!(
        "pool: {} detectors, {} parameters in total",
        pool.len(),
        format_params(pool.total_params())
    );
    for (name, m) in &sets {
        let (bona, spoof) = m.trial_labels().counts();
        println!("{name}: {} trials ({bona} bonafide, {spoof} spoof)", m.n_trials());
        let rows: Vec<Vec<String>> = pool
            .detectors()
            .iter()
            .zip(m.stats())
            .zip(m.rows())
            .map(|((d, s), row)| {
                Ok(vec![
                    d.id.to_string(),
                    d.name.clone(),
                    format_params(d.param_count),
                    format!("{:.4}", s.min),
                    format!("{:.4}", s.max),
                    format!("{:.4}", s.mean),
                    fmt_rate(metrics::eer(row, m.labels())?),
                ])
            })
            .collect::<Result<_>>()?;
        print!(
            "{}",
            render_table(&["id", "name", "params", "min", "max", "mean", "eer"], &rows)
        );
    }
    Ok(())
}

pub fn metrics_cmd(args: &MetricsArgs, cfg: &CliConfig) -> Result<()> {
    let labels = args
        .labels
        .as_deref()
        .or(cfg.labels.as_deref())
        .ok_or_else(|| CliError::Usage("missing `labels` (flag --labels or config key)".into()))?;
    let name = args
        .scores
        .file_stem()
        .map_or_else(|| "scores".to_string(), |s| s.to_string_lossy().into_owned());
    let pool = DetectorPool::new([(name, 1u64, args.scores.clone())])?;
    let m = assemble_matrix(pool, load_labels(labels)?)?;
    let cost = args.cost.apply(cfg.clone()).cost_model()?;
    let curve = metrics::det_points(m.row(0), m.labels())?;
    println!("eer={} min_dcf={}", fmt_rate(curve.eer()), fmt_rate(curve.min_dcf(&cost)));
    if let Some(det) = &args.det {
        emit(Some(det), &curve.to_csv())?;
    }
    Ok(())
}

pub fn synth(args: &SynthArgs, cfg: &CliConfig) -> Result<()> {
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let (label, mut scenario) = match args.scenario {
        ScenarioName::S1 => ("s1", SynthScenario::s1(seed)),
        ScenarioName::Sep => ("sep", SynthScenario::sep(seed)),
    };
    scenario.n_bonafide = args.n_bonafide.unwrap_or(scenario.n_bonafide);
    scenario.n_spoof = args.n_spoof.unwrap_or(scenario.n_spoof);
    let dir = args
        .out_dir
        .clone()
        .unwrap_or_else(|| cfg.out_dir().join(format!("synth_{label}")));
    let (matrix, truth) = generate(&scenario)?;
    let manifest = write_scenario(&dir, &matrix, &truth)?;
    println!(
        "wrote {} detectors x {} trials to {}",
        matrix.n_detectors(),
        matrix.n_trials(),
        manifest.display()
    );
    println!("analytic EER of the all-detector average: {}", fmt_rate(truth.average_eer));
    Ok(())
}

#[derive(Serialize)]
struct RunSummary<'a> {
    run: usize,
    seed: u64,
    generations_run: usize,
    evaluations: usize,
    wall_time_secs: f64,
    hypervolume: f64,
    hv_trace: &'a [f64],
    front: &'a ParetoFront,
}

#[derive(Serialize)]
struct OptimizeReport<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a CliConfig,
    run_config: &'a RunConfig,
    reference_point: ReferencePoint,
    runs: Vec<RunSummary<'a>>,
    super_front_hypervolume: f64,
    super_front: &'a ParetoFront,
}

fn run_dir_name(runs_root: &Path, tag: Option<&str>) -> Result<String> {
    if let Some(tag) = tag {
        if runs_root.join(tag).exists() {
            return Err(CliError::Usage(format!(
                "run directory {} already exists",
                runs_root.join(tag).display()
            )));
        }
        return Ok(tag.to_string());
    }
    let stamp = chrono::Local::now().format("%Y%m%d-%H%M%S").to_string();
    let mut name = stamp.clone();
    let mut k = 2;
    while runs_root.join(&name).exists() {
        name = format!("{stamp}-{k}");
        k += 1;
    }
    Ok(name)
}

pub fn optimize(cfg: &CliConfig, tag: Option<&str>) -> Result<PathBuf> {
    let matrix = cfg.load_main_matrix()?;
    let base = cfg.run_config(matrix.pool().total_params());
    base.validate(matrix.pool())?;
    let runs = cfg.runs.unwrap_or(1);
    if runs == 0 {
        return Err(CliError::Usage("runs must be at least 1".into()));
    }

    let runs_root = cfg.out_dir().join("runs");
    fs::create_dir_all(&runs_root).map_err(|e| CliError::io(&runs_root, e))?;
    let name = run_dir_name(&runs_root, tag)?;
    let staging = runs_root.join(format!(".{name}.partial"));
    let target = runs_root.join(&name);
    let result = write_optimize(cfg, &matrix, &base, runs, &staging)
        .and_then(|()| fs::rename(&staging, &target).map_err(|e| CliError::io(&target, e)));
    if let Err(e) = result {
        let _ = fs::remove_dir_all(&staging);
        return Err(e);
    }
    println!("outputs in {}", target.display());
    Ok(target)
}

fn write_optimize(cfg: &CliConfig, matrix: &ScoreMatrix, base: &RunConfig, runs: usize, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut reports = Vec::with_capacity(runs);
    for k in 0..runs {
        let mut config = base.clone();
        config.rng_seed = base.rng_seed.wrapping_add(k as u64);
        let report = evolve_with_workers(matrix, &config, cfg.workers)?;
        let reference = report.config.reference_point.expect("resolved by evolve");
        log::info!(
            "run {k}: {} generations, front of {}, HV {:.6}",
            report.generations_run,
            report.front.len(),
            report.front.hypervolume(reference)
        );
        let run_dir = dir.join(format!("run_{k}"));
        write_atomic(&run_dir.join("front.csv"), &report.front.to_csv())?;
        write_atomic(&run_dir.join("hv.csv"), &report.hv_csv())?;
        reports.push(report);
    }

    let fronts: Vec<ParetoFront> = reports.iter().map(|r| r.front.clone()).collect();
    let superfront = super_pareto(&fronts)?;
    let run_config = &reports[0].config;
    let reference = run_config.reference_point.expect("resolved by evolve");
    write_atomic(&dir.join("super_front.csv"), &superfront.to_csv())?;
    let report = OptimizeReport {
        tool: "evofuse",
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        run_config,
        reference_point: reference,
        runs: reports
            .iter()
            .enumerate()
            .map(|(k, r)| RunSummary {
                run: k,
                seed: r.config.rng_seed,
                generations_run: r.generations_run,
                evaluations: r.evaluations,
                wall_time_secs: r.wall_time_secs,
                hypervolume: r.front.hypervolume(reference),
                hv_trace: &r.hv_trace,
                front: &r.front,
            })
            .collect(),
        super_front_hypervolume: superfront.hypervolume(reference),
        super_front: &superfront,
    };
    write_atomic(&dir.join("report.json"), &serde_json::to_string_pretty(&report)?)?;
    println!(
        "super-front: {} points, HV {:.6} (reference EER {}, params {})",
        superfront.len(),
        report.super_front_hypervolume,
        reference.eer,
        format_params(reference.params)
    );
    Ok(())
}

fn objectives_row(name: &str, scores: &[f64], m: &ScoreMatrix, params: u64, cost: &CostModel) -> Result<String> {
    let curve = metrics::det_points(scores, m.labels())?;
    Ok(format!("{name},{},{},{params}\n", curve.eer(), curve.min_dcf(cost)))
}

fn resolve_subset(tokens: &[String], pool: &DetectorPool) -> Result<Vec<usize>> {
    let mut ids = Vec::with_capacity(tokens.len());
    for t in tokens.iter().map(|t| t.trim()).filter(|t| !t.is_empty()) {
        let id = match t.parse::<usize>() {
            Ok(i) if i < pool.len() => i,
            _ => pool
                .id_of(t)
                .ok_or_else(|| CliError::Usage(format!("unknown detector `{t}` in --subset")))?,
        };
        ids.push(id);
    }
    ids.sort_unstable();
    ids.dedup();
    if ids.is_empty() {
        return Err(CliError::Usage("--subset needs at least one detector".into()));
    }
    Ok(ids)
}

pub fn baseline(args: &BaselineArgs, cfg: &CliConfig) -> Result<()> {
    let cost = cfg.cost_model()?;
    let mut out = String::from("name,eer,min_dcf,params\n");
    match args.mode {
        BaselineMode::Average => {
            let m = cfg.load_main_matrix()?;
            let ids = resolve_subset(&args.subset, m.pool())?;
            let chrom = BinaryChromosome::from_support(m.n_detectors(), &ids);
            let fused = fusion::fuse_binary(&chrom, &m)?;
            let name = format!(
                "average_{}",
                ids.iter().map(usize::to_string).collect::<Vec<_>>().join("-")
            );
            out.push_str(&objectives_row(&name, &fused, &m, fusion::param_count(&ids, m.pool()), &cost)?);
        }
        BaselineMode::Logreg => {
            let hyper = cfg.logreg_hyper();
            let (dev, eval) = cfg.load_split()?;
            match args.prune {
                None => {
                    let model = logreg_fit(&dev, &hyper)?;
                    let fused = logreg_fuse(&model, &eval)?;
                    out.push_str(&objectives_row("logreg_all", &fused, &eval, eval.pool().total_params(), &cost)?);
                }
                Some(p) => {
                    let (mode, label) = match p {
                        PruneArg::ByWeight => (PruneMode::ByWeight, "by_weight"),
                        PruneArg::ByEer => (PruneMode::ByIndividualEer, "by_eer"),
                    };
                    let sweep = prune_sweep(&dev, &eval, mode, &hyper)?;
                    for r in &sweep.records {
                        let model = logreg_fit(&dev.select_detectors(&r.active)?, &hyper)?;
                        let fused = logreg_fuse(&model, &eval.select_detectors(&r.active)?)?;
                        let name = format!("logreg_{label}_k{}", r.active.len());
                        out.push_str(&objectives_row(&name, &fused, &eval, r.params, &cost)?);
                    }
                    if let Some(path) = &args.sweep_output {
                        write_atomic(path, &sweep.to_csv())?;
                    }
                }
            }
        }
    }
    emit(args.output.as_deref(), &out)
}

struct System {
    name: String,
    source: String,
    eer: f64,
    min_dcf: Option<f64>,
    params: u64,
    baseline: bool,
}

fn read_baselines(path: &Path) -> Result<Vec<System>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let schema = |msg: String| CliError::Usage(format!("{}: {msg}", path.display()));
    let header = lines.next().unwrap_or_default();
    if header.trim() != "name,eer,min_dcf,params" {
        return Err(schema(format!("expected header `name,eer,min_dcf,params`, got `{header}`")));
    }
    let source = path.display().to_string();
    lines
        .enumerate()
        .map(|(i, line)| {
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = || schema(format!("line {} is not `name,eer,min_dcf,params`", i + 2));
            if cells.len() != 4 {
                return Err(bad());
            }
            Ok(System {
                name: cells[0].to_string(),
                source: source.clone(),
                eer: cells[1].parse().map_err(|_| bad())?,
                min_dcf: if cells[2].is_empty() {
                    None
                } else {
                    Some(cells[2].parse().map_err(|_| bad())?)
                },
                params: cells[3].parse().map_err(|_| bad())?,
                baseline: true,
            })
        })
        .collect()
}

fn front_spec(spec: &str) -> (String, PathBuf) {
    match spec.split_once('=') {
        Some((name, path)) if !name.is_empty() => (name.to_string(), PathBuf::from(path)),
        _ => {
            let path = PathBuf::from(spec);
            let stem = path
                .file_stem()
                .map_or_else(|| "front".to_string(), |s| s.to_string_lossy().into_owned());
            (stem, path)
        }
    }
}

pub fn report(args: &ReportArgs, cfg: &CliConfig) -> Result<()> {
    if args.fronts.is_empty() && args.baselines.is_empty() {
        return Err(CliError::Usage("report needs at least one --front or --baseline".into()));
    }
    let matrix = match (&cfg.manifest, cfg.labels.is_some() || cfg.eval_labels.is_some()) {
        (Some(_), true) => Some(cfg.load_main_matrix()?),
        _ => None,
    };
    let cost = cfg.cost_model()?;
    let cutoff = cfg.cutoff.unwrap_or(DEFAULT_CUTOFF);
    let total_params = match (&matrix, &cfg.manifest) {
        (Some(m), _) => Some(m.pool().total_params()),
        (None, Some(p)) => Some(load_manifest(p)?.total_params()),
        _ => None,
    };
    let reference = cfg.reference(total_params.unwrap_or(0)).or_else(|| {
        total_params.map(|p| ReferencePoint {
            eer: DEFAULT_REFERENCE_EER,
            params: p,
        })
    });
    if let Some(r) = reference {
        if r.params == 0 {
            return Err(CliError::Usage("--reference-params is needed without --manifest".into()));
        }
    }

    let mut systems = Vec::new();
    let mut fronts = Vec::new();
    for spec in &args.fronts {
        let (name, path) = front_spec(spec);
        let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        let front = ParetoFront::from_csv(&text)?;
        for (i, member) in front.members().iter().enumerate() {
            let min_dcf = match &matrix {
                Some(m) => {
                    let fused = fusion::fuse(&member.chromosome, m, cutoff)?;
                    Some(metrics::min_dcf(&fused, m.labels(), &cost)?)
                }
                None => None,
            };
            systems.push(System {
                name: format!("{name}#{i}"),
                source: path.display().to_string(),
                eer: member.objectives.eer,
                min_dcf,
                params: member.objectives.params,
                baseline: false,
            });
        }
        fronts.push((name, front));
    }
    for path in &args.baselines {
        systems.extend(read_baselines(path)?);
    }

    let mut csv = String::from("system,source,eer,min_dcf,params,dominated\n");
    let mut rows = Vec::with_capacity(systems.len());
    for s in &systems {
        let point = evofuse::FusionObjectives {
            eer: s.eer,
            params: s.params,
        };
        let dominated = if s.baseline {
            (fronts.iter().any(|(_, f)| f.dominates(&point))).to_string()
        } else {
            String::new()
        };
        let dcf = s.min_dcf.map(|x| x.to_string()).unwrap_or_default();
        csv.push_str(&format!(
            "{},{},{},{dcf},{},{dominated}\n",
            s.name, s.source, s.eer, s.params
        ));
        rows.push(vec![
            s.name.clone(),
            fmt_rate(s.eer),
            s.min_dcf.map(fmt_rate).unwrap_or_else(|| "-".into()),
            format_params(s.params),
            if dominated == "true" { "dominated".into() } else { String::new() },
        ]);
    }
    print!("{}", render_table(&["system", "eer", "min_dcf", "params", ""], &rows));
    if let Some(r) = reference {
        for (name, front) in &fronts {
            println!("hypervolume {name}: {:.6}", front.hypervolume(r));
        }
    }
    if let Some(path) = &args.output {
        write_atomic(path, &csv)?;
    }
    Ok(())
}

pub fn hv(args: &HvArgs, cfg: &CliConfig) -> Result<()> {
    let text = fs::read_to_string(&args.front).map_err(|e| CliError::io(&args.front, e))?;
    let front = ParetoFront::from_csv(&text)?;
    let cfg = args.reference.apply(cfg.clone());
    let params = match (cfg.reference_params, args.manifest.as_ref().or(cfg.manifest.as_ref())) {
        (Some(p), _) => p,
        (None, Some(m)) => load_manifest(m)?.total_params(),
        (None, None) => {
            return Err(CliError::Usage(
                "give --reference-params or --manifest for the reference parameter count".into(),
            ))
        }
    };
    let reference = ReferencePoint {
        eer: cfg.reference_eer.unwrap_or(DEFAULT_REFERENCE_EER),
        params,
    };
    if !(reference.eer > 0.0) || reference.params == 0 {
        return Err(CliError::Usage(format!("reference point must be positive, got {reference:?}")));
    }
    println!("{:.6}", front.hypervolume(reference));
    Ok(())
}
