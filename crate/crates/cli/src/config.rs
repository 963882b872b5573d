//! Flat TOML experiment config. Every key is optional and every key has a
//! command-line flag of the same name (underscores become dashes); flags
//! take precedence over the file.

use std::fs;
use std::path::{Path, PathBuf};

use evofuse::baselines::LogRegHyper;
use evofuse::metrics::CostModel;
use evofuse::nsga2::ReferencePoint;
use evofuse::score_data::{assemble_matrix, load_labels, load_manifest};
use evofuse::{Encoding, RunConfig, ScoreMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CliConfig {
    pub manifest: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub dev_labels: Option<PathBuf>,
    pub eval_labels: Option<PathBuf>,
    pub z_norm: Option<bool>,
    pub out_dir: Option<PathBuf>,

    pub encoding: Option<Encoding>,
    pub population_size: Option<usize>,
    pub max_generations: Option<usize>,
    pub crossover_rate: Option<f64>,
    pub mutation_rate: Option<f64>,
    pub eta_m: Option<f64>,
    pub cutoff: Option<f64>,
    pub epsilon: Option<f64>,
    pub patience: Option<usize>,
    pub seed: Option<u64>,
    pub runs: Option<usize>,
    pub workers: Option<usize>,
    pub reference_eer: Option<f64>,
    pub reference_params: Option<u64>,

    pub c_miss: Option<f64>,
    pub c_fa: Option<f64>,
    pub p_target: Option<f64>,

    pub l2_lambda: Option<f64>,
    pub max_iters: Option<usize>,
    pub tol: Option<f64>,
}

macro_rules! overlay_fields {
    ($hi:expr, $lo:expr, $($f:ident),* $(,)?) => {
        CliConfig { $($f: $hi.$f.or($lo.$f)),* }
    };
}

impl CliConfig {
    /// Reads a config file. Relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: CliConfig = toml::from_str(&text).map_err(|source| CliError::Toml {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        for p in [
            &mut cfg.manifest,
            &mut cfg.labels,
            &mut cfg.dev_labels,
            &mut cfg.eval_labels,
            &mut cfg.out_dir,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Fields set in `self` win over those in `lower`.
    pub fn overlay(self, lower: CliConfig) -> CliConfig {
        overlay_fields!(
            self, lower, manifest, labels, dev_labels, eval_labels, z_norm, out_dir, encoding,
            population_size, max_generations, crossover_rate, mutation_rate, eta_m, cutoff,
            epsilon, patience, seed, runs, workers, reference_eer, reference_params, c_miss,
            c_fa, p_target, l2_lambda, max_iters, tol,
        )
    }

    pub fn require<'a>(&self, value: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
        value
            .as_deref()
            .ok_or_else(|| CliError::Usage(format!("missing `{key}` (flag --{} or config key)", key.replace('_', "-"))))
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn cost_model(&self) -> Result<CostModel> {
        let d = CostModel::default();
        Ok(CostModel::new(
            self.c_miss.unwrap_or(d.c_miss),
            self.c_fa.unwrap_or(d.c_fa),
            self.p_target.unwrap_or(d.p_target),
        )?)
    }

    pub fn logreg_hyper(&self) -> LogRegHyper {
        let d = LogRegHyper::default();
        LogRegHyper {
            l2_lambda: self.l2_lambda.unwrap_or(d.l2_lambda),
            max_iters: self.max_iters.unwrap_or(d.max_iters),
            tol: self.tol.unwrap_or(d.tol),
        }
    }

    /// Partial reference point; missing coordinates default per run.
    pub fn reference(&self, total_params: u64) -> Option<ReferencePoint> {
        if self.reference_eer.is_none() && self.reference_params.is_none() {
            return None;
        }
        Some(ReferencePoint {
            eer: self.reference_eer.unwrap_or(evofuse::nsga2::DEFAULT_REFERENCE_EER),
            params: self.reference_params.unwrap_or(total_params),
        })
    }

    pub fn run_config(&self, total_params: u64) -> RunConfig {
        let encoding = self.encoding.unwrap_or(Encoding::Binary);
        let mut c = RunConfig::new(encoding);
        c.population_size = self.population_size.unwrap_or(c.population_size);
        c.max_generations = self.max_generations.unwrap_or(c.max_generations);
        c.crossover_rate = self.crossover_rate.unwrap_or(c.crossover_rate);
        c.mutation_rate = self.mutation_rate.or(c.mutation_rate);
        c.eta_m = self.eta_m.unwrap_or(c.eta_m);
        c.cutoff = self.cutoff.unwrap_or(c.cutoff);
        c.epsilon = self.epsilon.unwrap_or(c.epsilon);
        c.patience = self.patience.unwrap_or(c.patience);
        c.rng_seed = self.seed.unwrap_or(c.rng_seed);
        c.reference_point = self.reference(total_params);
        c
    }

    /// Loads the manifest with the given label file.
    pub fn load_matrix(&self, labels: &Path) -> Result<ScoreMatrix> {
        let manifest = self.require(&self.manifest, "manifest")?;
        let pool = load_manifest(manifest)?;
        let matrix = assemble_matrix(pool, load_labels(labels)?)?;
        Ok(if self.z_norm.unwrap_or(false) {
            matrix.z_normalized()
        } else {
            matrix
        })
    }

    /// The single evaluation matrix: `labels`, else `eval_labels`.
    pub fn load_main_matrix(&self) -> Result<ScoreMatrix> {
        let labels = match (&self.labels, &self.eval_labels) {
            (Some(l), _) | (None, Some(l)) => l,
            (None, None) => return Err(CliError::Usage("missing `labels` (flag --labels or config key)".into())),
        };
        self.load_matrix(labels)
    }

    /// `(dev, eval)` matrices; without a split both come from `labels`.
    pub fn load_split(&self) -> Result<(ScoreMatrix, ScoreMatrix)> {
        match (&self.dev_labels, &self.eval_labels) {
            (Some(dev), Some(eval)) => Ok((self.load_matrix(dev)?, self.load_matrix(eval)?)),
            (None, None) => {
                let m = self.load_main_matrix()?;
                Ok((m.clone(), m))
            }
            _ => Err(CliError::Usage(
                "`dev_labels` and `eval_labels` must be given together".into(),
            )),
        }
    }
}
