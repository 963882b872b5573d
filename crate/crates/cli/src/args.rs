use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use evofuse::Encoding;

use crate::config::CliConfig;

#[derive(Debug, Parser)]
#[command(name = "evofuse", version, about = "Evolutionary score fusion of spoofing detectors")]
pub struct Cli {
    /// Flat TOML config; flags override its keys.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads for objective evaluation (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load inputs and print per-detector statistics and EERs.
    Validate(DataArgs),
    /// EER, minDCF and optionally the DET curve of one score file.
    Metrics(MetricsArgs),
    /// Write a synthetic scenario in the input formats.
    Synth(SynthArgs),
    /// Run NSGA-II and write fronts, HV traces and a report.
    Optimize(OptimizeArgs),
    /// Averaging or logistic-regression reference fusions.
    Baseline(BaselineArgs),
    /// Merge fronts and baselines into one comparison table.
    Report(ReportArgs),
    /// Hypervolume of a front CSV.
    Hv(HvArgs),
}

#[derive(Debug, Clone, Args, Default)]
pub struct DataArgs {
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub labels: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub dev_labels: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub eval_labels: Option<PathBuf>,
    /// Z-normalize each detector's scores before fusion.
    #[arg(long)]
    pub z_norm: bool,
}

#[derive(Debug, Clone, Args, Default)]
pub struct CostArgs {
    #[arg(long)]
    pub c_miss: Option<f64>,
    #[arg(long)]
    pub c_fa: Option<f64>,
    #[arg(long)]
    pub p_target: Option<f64>,
}

#[derive(Debug, Clone, Args, Default)]
pub struct ReferenceArgs {
    #[arg(long)]
    pub reference_eer: Option<f64>,
    /// Reference parameter count (default: whole pool).
    #[arg(long)]
    pub reference_params: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct MetricsArgs {
    /// Score file with `trial_id score` lines.
    #[arg(long, value_name = "FILE")]
    pub scores: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub labels: Option<PathBuf>,
    /// Write the DET curve as CSV (`-` for stdout).
    #[arg(long, value_name = "FILE")]
    pub det: Option<PathBuf>,
    #[command(flatten)]
    pub cost: CostArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScenarioName {
    S1,
    Sep,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value = "s1")]
    pub scenario: ScenarioName,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n_bonafide: Option<usize>,
    #[arg(long)]
    pub n_spoof: Option<usize>,
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_parser = parse_encoding)]
    pub encoding: Option<Encoding>,
    #[arg(long)]
    pub population_size: Option<usize>,
    #[arg(long)]
    pub max_generations: Option<usize>,
    #[arg(long)]
    pub crossover_rate: Option<f64>,
    /// Per-gene mutation rate (default: 1/D binary, 0.01 real).
    #[arg(long)]
    pub mutation_rate: Option<f64>,
    #[arg(long)]
    pub eta_m: Option<f64>,
    #[arg(long)]
    pub cutoff: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub patience: Option<usize>,
    /// Root seed; run k uses seed + k.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Independent runs merged into the super-front.
    #[arg(long)]
    pub runs: Option<usize>,
    #[command(flatten)]
    pub reference: ReferenceArgs,
    #[command(flatten)]
    pub cost: CostArgs,
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Name of the run directory (default: a timestamp).
    #[arg(long)]
    pub tag: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineMode {
    Average,
    Logreg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PruneArg {
    #[value(name = "by_weight", alias = "by-weight")]
    ByWeight,
    #[value(name = "by_eer", alias = "by-eer")]
    ByEer,
}

#[derive(Debug, Clone, Args)]
pub struct BaselineArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum)]
    pub mode: BaselineMode,
    /// Detector ids or names for averaging, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub subset: Vec<String>,
    /// Progressive pruning order for logistic regression.
    #[arg(long, value_enum)]
    pub prune: Option<PruneArg>,
    #[arg(long)]
    pub l2_lambda: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[command(flatten)]
    pub cost: CostArgs,
    /// Objectives CSV (`name,eer,min_dcf,params`); stdout if omitted.
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,
    /// Pruning sweep CSV (`k,eer,params`).
    #[arg(long, value_name = "FILE")]
    pub sweep_output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Front CSV, optionally as NAME=FILE. Repeatable.
    #[arg(long = "front", value_name = "[NAME=]FILE")]
    pub fronts: Vec<String>,
    /// Baseline objectives CSV. Repeatable.
    #[arg(long = "baseline", value_name = "FILE")]
    pub baselines: Vec<PathBuf>,
    /// Data used to recompute minDCF of front members.
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub reference: ReferenceArgs,
    #[command(flatten)]
    pub cost: CostArgs,
    /// Comparison CSV; stdout gets a readable table either way.
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct HvArgs {
    #[arg(long, value_name = "FILE")]
    pub front: PathBuf,
    #[command(flatten)]
    pub reference: ReferenceArgs,
    /// Pool whose total size is the default reference parameter count.
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
}

fn parse_encoding(s: &str) -> Result<Encoding, String> {
    s.parse().map_err(|e: evofuse::Error| e.to_string())
}

impl DataArgs {
    pub fn to_config(&self) -> CliConfig {
        CliConfig {
            manifest: self.manifest.clone(),
            labels: self.labels.clone(),
            dev_labels: self.dev_labels.clone(),
            eval_labels: self.eval_labels.clone(),
            z_norm: self.z_norm.then_some(true),
            ..Default::default()
        }
    }
}

impl CostArgs {
    pub fn apply(&self, cfg: CliConfig) -> CliConfig {
        CliConfig {
            c_miss: self.c_miss,
            c_fa: self.c_fa,
            p_target: self.p_target,
            ..Default::default()
        }
        .overlay(cfg)
    }
}

impl ReferenceArgs {
    pub fn apply(&self, cfg: CliConfig) -> CliConfig {
        CliConfig {
            reference_eer: self.reference_eer,
            reference_params: self.reference_params,
            ..Default::default()
        }
        .overlay(cfg)
    }
}

impl OptimizeArgs {
    pub fn to_config(&self) -> CliConfig {
        let cfg = CliConfig {
            encoding: self.encoding,
            population_size: self.population_size,
            max_generations: self.max_generations,
            crossover_rate: self.crossover_rate,
            mutation_rate: self.mutation_rate,
            eta_m: self.eta_m,
            cutoff: self.cutoff,
            epsilon: self.epsilon,
            patience: self.patience,
            seed: self.seed,
            runs: self.runs,
            out_dir: self.out_dir.clone(),
            ..Default::default()
        }
        .overlay(self.data.to_config());
        self.cost.apply(self.reference.apply(cfg))
    }
}

impl BaselineArgs {
    pub fn to_config(&self) -> CliConfig {
        let cfg = CliConfig {
            l2_lambda: self.l2_lambda,
            max_iters: self.max_iters,
            tol: self.tol,
            ..Default::default()
        }
        .overlay(self.data.to_config());
        self.cost.apply(cfg)
    }
}

impl ReportArgs {
    pub fn to_config(&self) -> CliConfig {
        self.cost.apply(self.reference.apply(self.data.to_config()))
    }
}
