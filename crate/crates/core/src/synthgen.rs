//! Synthetic detector scores with closed-form error rates.
//!
//! Each detector scores spoof trials as `N(0, 1)` and bonafide trials as
//! `N(d', 1)`. The unit noise is split into a per-trial factor shared by
//! all detectors (loading `rho`) and independent noise (loading
//! `sqrt(1 - rho²)`), so any weighted average of detectors is again an
//! equal-variance Gaussian pair whose EER is `Φ(-Δ / 2σ)`.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::score_data::{write_text, DetectorPool, Label, ScoreMatrix, TrialLabels};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthDetectorSpec {
    pub name: String,
    pub d_prime: f64,
    pub rho: f64,
    pub param_count: u64,
}

impl SynthDetectorSpec {
    pub fn new(name: impl Into<String>, d_prime: f64, rho: f64, param_count: u64) -> Self {
        Self {
            name: name.into(),
            d_prime,
            rho,
            param_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthScenario {
    pub detectors: Vec<SynthDetectorSpec>,
    pub n_bonafide: usize,
    pub n_spoof: usize,
    pub seed: u64,
}

/// `(d', params)` of the twelve S1 detectors. Larger systems tend to be
/// better but not strictly so.
const S1_DETECTORS: [(f64, u64); 12] = [
    (0.5, 10_000_000),
    (0.8, 25_000_000),
    (1.0, 15_000_000),
    (1.3, 60_000_000),
    (1.5, 40_000_000),
    (1.8, 120_000_000),
    (2.0, 95_000_000),
    (2.2, 300_000_000),
    (2.4, 200_000_000),
    (2.6, 600_000_000),
    (2.8, 450_000_000),
    (3.0, 1_000_000_000),
];

impl SynthScenario {
    /// Twelve detectors with mixed quality and size, shared-factor loading
    /// 0.5.
    pub fn s1(seed: u64) -> Self {
        Self {
            detectors: S1_DETECTORS
                .iter()
                .enumerate()
                .map(|(i, &(d, p))| SynthDetectorSpec::new(format!("s1_det{i:02}"), d, 0.5, p))
                .collect(),
            n_bonafide: 2000,
            n_spoof: 2000,
            seed,
        }
    }

    /// Four well separated detectors (d' = 8).
    pub fn sep(seed: u64) -> Self {
        Self {
            detectors: (0..4)
                .map(|i| {
                    SynthDetectorSpec::new(format!("sep_det{i}"), 8.0, 0.5, 100_000_000 * (i + 1))
                })
                .collect(),
            n_bonafide: 500,
            n_spoof: 500,
            seed,
        }
    }

    pub fn named(name: &str, seed: u64) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "s1" => Ok(Self::s1(seed)),
            "sep" => Ok(Self::sep(seed)),
            other => Err(Error::Config(format!("unknown scenario `{other}`"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.detectors.is_empty() {
            return Err(Error::EmptyPool);
        }
        if self.n_bonafide == 0 || self.n_spoof == 0 {
            return Err(Error::DegenerateClasses {
                bonafide: self.n_bonafide,
                spoof: self.n_spoof,
            });
        }
        for d in &self.detectors {
            if !(d.d_prime >= 0.0 && d.d_prime.is_finite()) || !(0.0..1.0).contains(&d.rho) {
                return Err(Error::Config(format!(
                    "detector `{}` needs d' >= 0 and 0 <= rho < 1",
                    d.name
                )));
            }
        }
        Ok(())
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// EER of a detector with class separation `d_prime` in unit-variance noise.
pub fn analytic_eer(d_prime: f64) -> f64 {
    normal_cdf(-d_prime / 2.0)
}

/// EER of the weighted sum `Σ w_i s_i` under the shared-factor model.
/// Weights need not be normalized.
pub fn analytic_fused_eer(detectors: &[SynthDetectorSpec], weights: &[f64]) -> f64 {
    let separation: f64 = detectors
        .iter()
        .zip(weights)
        .map(|(d, w)| w * d.d_prime)
        .sum();
    let mut variance = 0.0;
    for (i, (di, wi)) in detectors.iter().zip(weights).enumerate() {
        for (j, (dj, wj)) in detectors.iter().zip(weights).enumerate() {
            let cov = if i == j { 1.0 } else { di.rho * dj.rho };
            variance += wi * wj * cov;
        }
    }
    normal_cdf(-separation / (2.0 * variance.sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruthRow {
    pub detector: String,
    pub d_prime: f64,
    pub analytic_eer: f64,
    pub param_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruth {
    pub detectors: Vec<GroundTruthRow>,
    /// Analytic EER of the equal-weight average of every detector.
    pub average_eer: f64,
}

impl GroundTruth {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("detector,d_prime,analytic_eer,param_count\n");
        for r in &self.detectors {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.detector, r.d_prime, r.analytic_eer, r.param_count
            ));
        }
        out
    }
}

/// Draws a score matrix for `scenario`. Bonafide trials come first. The
/// output is a pure function of the scenario, seed included.
pub fn generate(scenario: &SynthScenario) -> Result<(ScoreMatrix, GroundTruth)> {
    scenario.validate()?;
    let specs = &scenario.detectors;
    let pool = DetectorPool::new(specs.iter().map(|d| {
        (
            d.name.clone(),
            d.param_count,
            format!("{}.txt", d.name),
        )
    }))?;
    let n = scenario.n_bonafide + scenario.n_spoof;
    let width = n.to_string().len().max(6);
    let labels = TrialLabels::new(
        (0..n)
            .map(|j| {
                let label = if j < scenario.n_bonafide {
                    Label::Bonafide
                } else {
                    Label::Spoof
                };
                (format!("T{j:0width$}"), label)
            })
            .collect(),
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let mut rows = vec![Vec::with_capacity(n); specs.len()];
    for j in 0..n {
        let bonafide = j < scenario.n_bonafide;
        let shared: f64 = StandardNormal.sample(&mut rng);
        for (row, spec) in rows.iter_mut().zip(specs) {
            let own: f64 = StandardNormal.sample(&mut rng);
            let mean = if bonafide { spec.d_prime } else { 0.0 };
            row.push(mean + spec.rho * shared + (1.0 - spec.rho * spec.rho).sqrt() * own);
        }
    }
    let matrix = ScoreMatrix::new(pool, labels, rows)?;

    let truth = GroundTruth {
        detectors: specs
            .iter()
            .map(|d| GroundTruthRow {
                detector: d.name.clone(),
                d_prime: d.d_prime,
                analytic_eer: analytic_eer(d.d_prime),
                param_count: d.param_count,
            })
            .collect(),
        average_eer: analytic_fused_eer(specs, &vec![1.0; specs.len()]),
    };
    Ok((matrix, truth))
}

/// Writes the scenario in the on-disk formats plus `ground_truth.csv`.
/// Returns the manifest path.
pub fn write_scenario(dir: &Path, matrix: &ScoreMatrix, truth: &GroundTruth) -> Result<std::path::PathBuf> {
    let manifest = matrix.write_files(dir)?;
    write_text(&dir.join("ground_truth.csv"), &truth.to_csv())?;
    Ok(manifest)
}
