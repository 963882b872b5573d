//! Variation operators. Each takes the random stream explicitly so callers
//! control which stream a draw comes from.

use rand::Rng;

use crate::error::{Error, Result};
use crate::fusion::{BinaryChromosome, Chromosome, RealChromosome};

/// Uniform crossover. With probability `p_c` every gene position swaps
/// between the two children with probability 1/2; otherwise the children
/// are copies of the parents.
pub fn uniform_crossover<R: Rng + ?Sized>(
    p1: &Chromosome,
    p2: &Chromosome,
    p_c: f64,
    rng: &mut R,
) -> Result<(Chromosome, Chromosome)> {
    if p1.len() != p2.len() {
        return Err(Error::DimensionMismatch {
            expected: p1.len(),
            got: p2.len(),
        });
    }
    let mut c1 = p1.clone();
    let mut c2 = p2.clone();
    if !rng.random_bool(p_c) {
        return Ok((c1, c2));
    }
    match (&mut c1, &mut c2) {
        (Chromosome::Binary(a), Chromosome::Binary(b)) => {
            swap_genes(a.bits_mut(), b.bits_mut(), rng);
        }
        (Chromosome::Real(a), Chromosome::Real(b)) => {
            swap_genes(a.genes_mut(), b.genes_mut(), rng);
        }
        _ => return Err(Error::MixedEncodings),
    }
    Ok((c1, c2))
}

fn swap_genes<T, R: Rng + ?Sized>(a: &mut [T], b: &mut [T], rng: &mut R) {
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        if rng.random_bool(0.5) {
            std::mem::swap(x, y);
        }
    }
}

/// Flips every bit independently with probability `p_m`, then repairs an
/// all-zero result.
pub fn bitflip_mutation<R: Rng + ?Sized>(
    chrom: &BinaryChromosome,
    p_m: f64,
    rng: &mut R,
) -> BinaryChromosome {
    let mut out = chrom.clone();
    for bit in out.bits_mut() {
        if rng.random_bool(p_m) {
            *bit = !*bit;
        }
    }
    out.repair(rng);
    out
}

/// Bounded polynomial mutation on `[0, 1]`. Each gene mutates with
/// probability `p_m`; larger `eta_m` concentrates the step size near zero.
pub fn polynomial_mutation<R: Rng + ?Sized>(
    chrom: &RealChromosome,
    p_m: f64,
    eta_m: f64,
    cutoff: f64,
    rng: &mut R,
) -> RealChromosome {
    let mut out = chrom.clone();
    for gene in out.genes_mut() {
        if rng.random_bool(p_m) {
            let u: f64 = rng.random();
            *gene = (*gene + polynomial_step(*gene, u, eta_m)).clamp(0.0, 1.0);
        }
    }
    out.repair(cutoff);
    out
}

pub(crate) fn polynomial_step(x: f64, u: f64, eta_m: f64) -> f64 {
    let power = 1.0 / (eta_m + 1.0);
    if u < 0.5 {
        let base = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - x).powf(eta_m + 1.0);
        base.powf(power) - 1.0
    } else {
        let base = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * x.powf(eta_m + 1.0);
        1.0 - base.powf(power)
    }
}
