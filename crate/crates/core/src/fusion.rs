//! Fusion encodings and the two fusion objectives.
//!
//! A binary chromosome selects detectors whose scores are averaged with
//! equal weight. A real chromosome carries one non-negative gene per
//! detector; genes below the cut-off `W` are dropped and the rest are
//! normalized to sum to one before the weighted sum is taken.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics;
use crate::score_data::{DetectorPool, ScoreMatrix};

pub const DEFAULT_CUTOFF: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    Binary,
    Real,
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Encoding::Binary => "binary",
            Encoding::Real => "real",
        })
    }
}

impl std::str::FromStr for Encoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(Encoding::Binary),
            "real" => Ok(Encoding::Real),
            other => Err(Error::Config(format!("unknown encoding `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BinaryChromosome {
    bits: Vec<bool>,
}

impl BinaryChromosome {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn all_ones(d: usize) -> Self {
        Self::new(vec![true; d])
    }

    pub fn one_hot(d: usize, k: usize) -> Self {
        let mut bits = vec![false; d];
        bits[k] = true;
        Self::new(bits)
    }

    pub fn from_support(d: usize, support: &[usize]) -> Self {
        let mut bits = vec![false; d];
        for &i in support {
            bits[i] = true;
        }
        Self::new(bits)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn is_feasible(&self) -> bool {
        self.bits.iter().any(|&b| b)
    }

    pub fn support(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    /// Sets one uniformly chosen bit if none is set.
    pub fn repair<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        if !self.is_feasible() && !self.bits.is_empty() {
            let k = rng.random_range(0..self.bits.len());
            self.bits[k] = true;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealChromosome {
    genes: Vec<f64>,
}

impl RealChromosome {
    /// Genes are clamped to `[0, 1]`.
    pub fn new(genes: Vec<f64>) -> Self {
        Self {
            genes: genes.into_iter().map(|g| g.clamp(0.0, 1.0)).collect(),
        }
    }

    pub fn one_hot(d: usize, k: usize) -> Self {
        let mut genes = vec![0.0; d];
        genes[k] = 1.0;
        Self { genes }
    }

    pub fn genes(&self) -> &[f64] {
        &self.genes
    }

    pub(crate) fn genes_mut(&mut self) -> &mut [f64] {
        &mut self.genes
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    pub fn is_feasible(&self, cutoff: f64) -> bool {
        self.genes.iter().any(|&g| g >= cutoff)
    }

    /// Raises the largest gene to exactly `cutoff` when every gene is below it.
    pub fn repair(&mut self, cutoff: f64) {
        if self.is_feasible(cutoff) || self.genes.is_empty() {
            return;
        }
        let mut best = 0;
        for (i, &g) in self.genes.iter().enumerate() {
            if g > self.genes[best] {
                best = i;
            }
        }
        self.genes[best] = cutoff;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Chromosome {
    Binary(BinaryChromosome),
    Real(RealChromosome),
}

impl Chromosome {
    pub fn encoding(&self) -> Encoding {
        match self {
            Chromosome::Binary(_) => Encoding::Binary,
            Chromosome::Real(_) => Encoding::Real,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Chromosome::Binary(c) => c.len(),
            Chromosome::Real(c) => c.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_feasible(&self, cutoff: f64) -> bool {
        match self {
            Chromosome::Binary(c) => c.is_feasible(),
            Chromosome::Real(c) => c.is_feasible(cutoff),
        }
    }

    /// Ids of the detectors that take part in the fusion.
    pub fn support(&self, cutoff: f64) -> Vec<usize> {
        match self {
            Chromosome::Binary(c) => c.support(),
            Chromosome::Real(c) => c
                .genes
                .iter()
                .enumerate()
                .filter_map(|(i, &g)| (g >= cutoff && g > 0.0).then_some(i))
                .collect(),
        }
    }

    /// Bit pattern identifying the genotype, used for memoizing evaluations.
    pub(crate) fn key(&self) -> Vec<u64> {
        match self {
            Chromosome::Binary(c) => c.bits.iter().map(|&b| b as u64).collect(),
            Chromosome::Real(c) => c.genes.iter().map(|g| g.to_bits()).collect(),
        }
    }

    /// Front-file representation: a `0`/`1` string for binary chromosomes,
    /// comma-separated genes with six significant digits for real ones.
    pub fn to_field(&self) -> String {
        match self {
            Chromosome::Binary(c) => c.bits.iter().map(|&b| if b { '1' } else { '0' }).collect(),
            Chromosome::Real(c) => c
                .genes
                .iter()
                .map(|&g| format_sig6(g))
                .collect::<Vec<_>>()
                .join(","),
        }
    }

    pub fn parse_field(encoding: Encoding, field: &str) -> Result<Self> {
        let field = field.trim();
        match encoding {
            Encoding::Binary => field
                .chars()
                .map(|ch| match ch {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    _ => Err(Error::Config(format!("bad binary chromosome `{field}`"))),
                })
                .collect::<Result<Vec<_>>>()
                .map(|b| Chromosome::Binary(BinaryChromosome::new(b))),
            Encoding::Real => field
                .split(',')
                .map(|g| {
                    g.trim()
                        .parse::<f64>()
                        .ok()
                        .filter(|x| (0.0..=1.0).contains(x))
                        .ok_or_else(|| Error::Config(format!("bad real gene `{g}`")))
                })
                .collect::<Result<Vec<_>>>()
                .map(|g| Chromosome::Real(RealChromosome::new(g))),
        }
    }

    /// Infers the encoding of a serialized chromosome.
    pub fn detect_encoding(field: &str) -> Encoding {
        let field = field.trim();
        if !field.is_empty() && field.chars().all(|c| c == '0' || c == '1') {
            Encoding::Binary
        } else {
            Encoding::Real
        }
    }
}

fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveWeights {
    pub weights: Vec<f64>,
    pub support: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionObjectives {
    pub eer: f64,
    pub params: u64,
}

impl FusionObjectives {
    /// Weak-or-strict Pareto dominance under minimization of both
    /// objectives: no worse in both, strictly better in one.
    pub fn dominates(&self, other: &Self) -> bool {
        self.eer <= other.eer
            && self.params <= other.params
            && (self.eer < other.eer || self.params < other.params)
    }

    pub fn weakly_dominates(&self, other: &Self) -> bool {
        self.eer <= other.eer && self.params <= other.params
    }

    pub fn as_point(&self) -> [f64; 2] {
        [self.eer, self.params as f64]
    }
}

fn check_len(len: usize, matrix: &ScoreMatrix) -> Result<()> {
    if len != matrix.n_detectors() {
        return Err(Error::DimensionMismatch {
            expected: matrix.n_detectors(),
            got: len,
        });
    }
    Ok(())
}

/// Equal-weight average of the selected detectors' scores.
pub fn fuse_binary(chrom: &BinaryChromosome, matrix: &ScoreMatrix) -> Result<Vec<f64>> {
    check_len(chrom.len(), matrix)?;
    let support = chrom.support();
    if support.is_empty() {
        return Err(Error::Infeasible("no detector selected"));
    }
    let mut fused = vec![0.0; matrix.n_trials()];
    for &i in &support {
        for (acc, s) in fused.iter_mut().zip(matrix.row(i)) {
            *acc += s;
        }
    }
    let k = support.len() as f64;
    fused.iter_mut().for_each(|x| *x /= k);
    Ok(fused)
}

pub fn effective_weights(chrom: &RealChromosome, cutoff: f64) -> Result<EffectiveWeights> {
    let kept: Vec<f64> = chrom
        .genes
        .iter()
        .map(|&g| if g >= cutoff { g } else { 0.0 })
        .collect();
    let total: f64 = kept.iter().sum();
    if total <= 0.0 {
        return Err(Error::Infeasible("every gene is below the cut-off"));
    }
    let support = kept
        .iter()
        .enumerate()
        .filter_map(|(i, &g)| (g > 0.0).then_some(i))
        .collect();
    Ok(EffectiveWeights {
        weights: kept.iter().map(|g| g / total).collect(),
        support,
    })
}

fn weighted_sum(weights: &EffectiveWeights, matrix: &ScoreMatrix) -> Vec<f64> {
    let mut fused = vec![0.0; matrix.n_trials()];
    for &i in &weights.support {
        let w = weights.weights[i];
        for (acc, s) in fused.iter_mut().zip(matrix.row(i)) {
            *acc += w * s;
        }
    }
    fused
}

pub fn fuse_real(chrom: &RealChromosome, matrix: &ScoreMatrix, cutoff: f64) -> Result<Vec<f64>> {
    check_len(chrom.len(), matrix)?;
    let weights = effective_weights(chrom, cutoff)?;
    Ok(weighted_sum(&weights, matrix))
}

pub fn fuse(chrom: &Chromosome, matrix: &ScoreMatrix, cutoff: f64) -> Result<Vec<f64>> {
    match chrom {
        Chromosome::Binary(c) => fuse_binary(c, matrix),
        Chromosome::Real(c) => fuse_real(c, matrix, cutoff),
    }
}

pub fn param_count(support: &[usize], pool: &DetectorPool) -> u64 {
    support
        .iter()
        .map(|&i| pool.detectors()[i].param_count)
        .sum()
}

/// Both objectives of one candidate fusion.
pub fn evaluate(chrom: &Chromosome, matrix: &ScoreMatrix, cutoff: f64) -> Result<FusionObjectives> {
    let fused = fuse(chrom, matrix, cutoff)?;
    let eer = metrics::eer(&fused, matrix.labels())?;
    let params = param_count(&chrom.support(cutoff), matrix.pool());
    Ok(FusionObjectives { eer, params })
}
