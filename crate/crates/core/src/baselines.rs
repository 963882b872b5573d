//! Reference fusions: fixed-subset averaging and logistic-regression
//! fusion with progressive detector pruning.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::{self, BinaryChromosome, FusionObjectives};
use crate::metrics;
use crate::score_data::ScoreMatrix;

/// Equal-weight average over `subset`.
pub fn average_fusion(subset: &[usize], matrix: &ScoreMatrix) -> Result<FusionObjectives> {
    if subset.is_empty() {
        return Err(Error::Infeasible("empty detector subset"));
    }
    let d = matrix.n_detectors();
    if let Some(&bad) = subset.iter().find(|&&i| i >= d) {
        return Err(Error::Config(format!("detector id {bad} is outside the pool of {d}")));
    }
    let chrom = BinaryChromosome::from_support(d, subset);
    let fused = fusion::fuse_binary(&chrom, matrix)?;
    Ok(FusionObjectives {
        eer: metrics::eer(&fused, matrix.labels())?,
        params: fusion::param_count(&chrom.support(), matrix.pool()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRegHyper {
    pub l2_lambda: f64,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for LogRegHyper {
    fn default() -> Self {
        Self {
            l2_lambda: 1e-3,
            max_iters: 10_000,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    /// Weights on raw detector scores.
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Weights on standardized scores (used to rank detector contribution).
    pub standardized_weights: Vec<f64>,
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    pub iterations: usize,
    pub final_loss: f64,
    pub grad_norm: f64,
    pub converged: bool,
    /// Training loss after every accepted step, starting at the initial point.
    #[serde(skip)]
    pub loss_history: Vec<f64>,
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Standardized features and the L2-penalized mean log-loss over them.
struct Problem {
    features: Vec<Vec<f64>>,
    targets: Vec<f64>,
    lambda: f64,
}

impl Problem {
    fn logits(&self, w: &[f64], b: f64) -> Vec<f64> {
        let mut z = vec![b; self.targets.len()];
        for (x, &wi) in self.features.iter().zip(w) {
            for (zj, xj) in z.iter_mut().zip(x) {
                *zj += wi * xj;
            }
        }
        z
    }

    fn loss(&self, z: &[f64], w: &[f64]) -> f64 {
        let nll: f64 = z
            .iter()
            .zip(&self.targets)
            .map(|(&zj, &y)| softplus(zj) - y * zj)
            .sum::<f64>()
            / z.len() as f64;
        nll + 0.5 * self.lambda * w.iter().map(|x| x * x).sum::<f64>()
    }

    /// `loss(z_new, w_new) - loss(z, w)` without subtracting two nearly
    /// equal totals, so that tiny decreases near the optimum stay visible.
    fn loss_change(&self, z: &[f64], z_new: &[f64], w: &[f64], w_new: &[f64]) -> f64 {
        let nll: f64 = z
            .iter()
            .zip(z_new)
            .zip(&self.targets)
            .map(|((&a, &b), &y)| {
                let dz = b - a;
                (sigmoid(a) * dz.exp_m1()).ln_1p() - y * dz
            })
            .sum::<f64>()
            / z.len() as f64;
        let reg: f64 = w.iter().zip(w_new).map(|(a, b)| (b - a) * (b + a)).sum();
        nll + 0.5 * self.lambda * reg
    }

    /// Gradient with respect to `(w, b)` at logits `z`.
    fn gradient(&self, z: &[f64], w: &[f64]) -> (Vec<f64>, f64) {
        let t = z.len() as f64;
        let resid: Vec<f64> = z
            .iter()
            .zip(&self.targets)
            .map(|(&zj, &y)| sigmoid(zj) - y)
            .collect();
        let gw = self
            .features
            .iter()
            .zip(w)
            .map(|(x, &wi)| x.iter().zip(&resid).map(|(a, r)| a * r).sum::<f64>() / t + self.lambda * wi)
            .collect();
        let gb = resid.iter().sum::<f64>() / t;
        (gw, gb)
    }
}

/// Fits an L2-regularized logistic regression of "bonafide" on the detector
/// scores by full-batch gradient descent with backtracking line search.
///
/// Scores are standardized per detector first; the returned raw-score
/// weights have the standardization folded in. A fit that hits `max_iters`
/// is still returned, with `converged = false`.
pub fn logreg_fit(matrix: &ScoreMatrix, hyper: &LogRegHyper) -> Result<LogRegModel> {
    if !(hyper.l2_lambda >= 0.0) || !(hyper.tol > 0.0) {
        return Err(Error::Config(format!("invalid logistic regression settings {hyper:?}")));
    }
    let t = matrix.n_trials() as f64;
    let mut means = Vec::with_capacity(matrix.n_detectors());
    let mut scales = Vec::with_capacity(matrix.n_detectors());
    let mut features = Vec::with_capacity(matrix.n_detectors());
    for row in matrix.rows() {
        let mean = row.iter().sum::<f64>() / t;
        let var = row.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / t;
        let scale = if var > 0.0 { var.sqrt() } else { 1.0 };
        features.push(row.iter().map(|x| (x - mean) / scale).collect::<Vec<_>>());
        means.push(mean);
        scales.push(scale);
    }
    let problem = Problem {
        features,
        targets: matrix
            .labels()
            .iter()
            .map(|l| if l.is_bonafide() { 1.0 } else { 0.0 })
            .collect(),
        lambda: hyper.l2_lambda,
    };

    let d = matrix.n_detectors();
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut z = problem.logits(&w, b);
    let mut loss = problem.loss(&z, &w);
    let mut history = vec![loss];
    let mut step = 1.0;
    let mut iterations = 0;
    let mut grad_norm;
    loop {
        let (gw, gb) = problem.gradient(&z, &w);
        let g2 = gw.iter().map(|g| g * g).sum::<f64>() + gb * gb;
        grad_norm = g2.sqrt();
        if grad_norm < hyper.tol || iterations >= hyper.max_iters {
            break;
        }
        // Armijo backtracking; the trial step grows again after success
        let mut accepted = false;
        while step > 1e-16 {
            let w_new: Vec<f64> = w.iter().zip(&gw).map(|(x, g)| x - step * g).collect();
            let b_new = b - step * gb;
            let z_new = problem.logits(&w_new, b_new);
            let change = problem.loss_change(&z, &z_new, &w, &w_new);
            if change <= -0.5 * step * g2 {
                w = w_new;
                b = b_new;
                z = z_new;
                loss += change;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        iterations += 1;
        if !accepted {
            break;
        }
        history.push(loss);
        step *= 2.0;
    }
    let converged = grad_norm < hyper.tol;
    if !converged {
        log::warn!(
            "logistic regression stopped after {iterations} iterations with gradient norm {grad_norm:.3e}"
        );
    }

    let weights: Vec<f64> = w.iter().zip(&scales).map(|(wi, s)| wi / s).collect();
    let bias = b - weights.iter().zip(&means).map(|(wi, m)| wi * m).sum::<f64>();
    Ok(LogRegModel {
        weights,
        bias,
        standardized_weights: w,
        means,
        scales,
        iterations,
        final_loss: loss,
        grad_norm,
        converged,
        loss_history: history,
    })
}

/// Linear fusion score `w·s + b` per trial. The sigmoid is omitted since
/// it does not change any threshold-based metric.
pub fn logreg_fuse(model: &LogRegModel, matrix: &ScoreMatrix) -> Result<Vec<f64>> {
    if model.weights.len() != matrix.n_detectors() {
        return Err(Error::DimensionMismatch {
            expected: matrix.n_detectors(),
            got: model.weights.len(),
        });
    }
    let mut fused = vec![model.bias; matrix.n_trials()];
    for (row, &w) in matrix.rows().zip(&model.weights) {
        for (acc, s) in fused.iter_mut().zip(row) {
            *acc += w * s;
        }
    }
    Ok(fused)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneMode {
    /// Drop the detector with the smallest absolute standardized weight in a
    /// refit on the survivors.
    ByWeight,
    /// Drop the survivor with the highest individual dev EER.
    ByIndividualEer,
}

impl std::str::FromStr for PruneMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "by_weight" | "weight" => Ok(PruneMode::ByWeight),
            "by_eer" | "by_individual_eer" | "eer" => Ok(PruneMode::ByIndividualEer),
            other => Err(Error::Config(format!("unknown prune mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneRecord {
    /// Surviving detector ids, ascending.
    pub active: Vec<usize>,
    pub eer: f64,
    pub params: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneSweep {
    pub mode: PruneMode,
    pub records: Vec<PruneRecord>,
}

impl PruneSweep {
    /// `k,eer,params` rows, `k` being the number of fused detectors.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,eer,params\n");
        for r in &self.records {
            out.push_str(&format!("{},{},{}\n", r.active.len(), r.eer, r.params));
        }
        out
    }
}

/// Starting from every detector, refits logistic regression on `dev`,
/// scores `eval`, and removes one detector per step until one is left.
pub fn prune_sweep(
    dev: &ScoreMatrix,
    eval: &ScoreMatrix,
    mode: PruneMode,
    hyper: &LogRegHyper,
) -> Result<PruneSweep> {
    if dev.pool() != eval.pool() {
        return Err(Error::Config("dev and eval matrices use different pools".into()));
    }
    let individual_eer: Vec<f64> = match mode {
        PruneMode::ByIndividualEer => dev
            .rows()
            .map(|row| metrics::eer(row, dev.labels()))
            .collect::<Result<_>>()?,
        PruneMode::ByWeight => Vec::new(),
    };

    let mut active: Vec<usize> = (0..dev.n_detectors()).collect();
    let mut records = Vec::with_capacity(active.len());
    loop {
        let dev_sub = dev.select_detectors(&active)?;
        let eval_sub = eval.select_detectors(&active)?;
        let model = logreg_fit(&dev_sub, hyper)?;
        let fused = logreg_fuse(&model, &eval_sub)?;
        records.push(PruneRecord {
            active: active.clone(),
            eer: metrics::eer(&fused, eval.labels())?,
            params: fusion::param_count(&active, dev.pool()),
        });
        if active.len() == 1 {
            break;
        }
        let drop_at = match mode {
            PruneMode::ByWeight => argmin_by(&model.standardized_weights, |w| w.abs()),
            PruneMode::ByIndividualEer => argmin_by(&active, |&i| -individual_eer[i]),
        };
        active.remove(drop_at);
    }
    Ok(PruneSweep { mode, records })
}

/// First index minimizing `key`.
fn argmin_by<T>(items: &[T], key: impl Fn(&T) -> f64) -> usize {
    let mut best = 0;
    for i in 1..items.len() {
        if key(&items[i]) < key(&items[best]) {
            best = i;
        }
    }
    best
}
