//! Ground-truth causal effects under Bernoulli(alpha) neighbor allocations.
//!
//! Potential outcomes are indexed by own treatment and the number of
//! treated neighbors. Averaging them over the binomial allocation law
//! gives individual average potential outcomes, from which direct and
//! indirect (spillover) effects follow; school and population summaries
//! average those per-node effects.

use crate::error::{Error, Result};

/// Exact binomial coefficient as f64 (exact while intermediates fit 2^53).
fn binom(d: usize, s: usize) -> f64 {
    let s = s.min(d - s);
    let mut r = 1.0;
    for t in 1..=s {
        r = r * (d - s + t) as f64 / t as f64;
    }
    r
}

/// P(S = s) when each of `d` neighbors is treated independently with
/// probability `alpha`.
pub fn allocation_pmf(s: usize, d: usize, alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) || !alpha.is_finite() {
        return Err(Error::Domain(format!(
            "allocation probability {alpha} outside [0, 1]"
        )));
    }
    if s > d {
        return Err(Error::Domain(format!(
            "treated-neighbor count {s} exceeds degree {d}"
        )));
    }
    Ok(binom(d, s) * alpha.powi(s as i32) * (1.0 - alpha).powi((d - s) as i32))
}

/// Potential outcomes for one school's nodes: y_i(z, s) given own
/// treatment z and s treated neighbors out of degree(i).
pub trait PotentialOutcomes {
    fn n_nodes(&self) -> usize;
    fn degree(&self, node: usize) -> usize;
    /// Outcome for `node` with own treatment `z` and `s` treated neighbors;
    /// `s` never exceeds `degree(node)`.
    fn outcome(&self, node: usize, z: u8, s: usize) -> f64;
}

/// Individual average potential outcome under own treatment `z` and a
/// Bernoulli(alpha) allocation over the node's neighbors.
pub fn individual_apo<O: PotentialOutcomes + ?Sized>(
    outcomes: &O,
    node: usize,
    z: u8,
    alpha: f64,
) -> Result<f64> {
    let d = outcomes.degree(node);
    let mut acc = 0.0;
    for s in 0..=d {
        acc += outcomes.outcome(node, z, s) * allocation_pmf(s, d, alpha)?;
    }
    Ok(acc)
}

/// Direct effect for one node: apo(1; alpha) - apo(0; alpha).
pub fn individual_de<O: PotentialOutcomes + ?Sized>(
    outcomes: &O,
    node: usize,
    alpha: f64,
) -> Result<f64> {
    Ok(individual_apo(outcomes, node, 1, alpha)? - individual_apo(outcomes, node, 0, alpha)?)
}

/// Indirect effect for one node: apo(0; alpha_1) - apo(0; alpha_0).
pub fn individual_ie<O: PotentialOutcomes + ?Sized>(
    outcomes: &O,
    node: usize,
    alpha_1: f64,
    alpha_0: f64,
) -> Result<f64> {
    Ok(individual_apo(outcomes, node, 0, alpha_1)? - individual_apo(outcomes, node, 0, alpha_0)?)
}

/// Linear outcome surface: y(z, s) = base + bz*z + bzn*(s/d) + bzzn*z*(s/d),
/// with the neighbor share taken as 0 for isolated nodes.
#[derive(Debug, Clone)]
pub struct LinearOutcomeOracle {
    pub base: Vec<f64>,
    pub degrees: Vec<usize>,
    pub beta_z: f64,
    pub beta_zn: f64,
    pub beta_zzn: f64,
}

impl PotentialOutcomes for LinearOutcomeOracle {
    fn n_nodes(&self) -> usize {
        self.base.len()
    }

    fn degree(&self, node: usize) -> usize {
        self.degrees[node]
    }

    fn outcome(&self, node: usize, z: u8, s: usize) -> f64 {
        let d = self.degrees[node];
        let share = if d == 0 { 0.0 } else { s as f64 / d as f64 };
        self.base[node]
            + self.beta_z * z as f64
            + self.beta_zn * share
            + self.beta_zzn * z as f64 * share
    }
}

/// Ground-truth effect summaries for a set of schools.
#[derive(Debug, Clone)]
pub struct EffectTruth {
    pub alphas: Vec<f64>,
    pub ie_pairs: Vec<(f64, f64)>,
    /// Per-school mean direct effect, indexed `[school][alpha]`.
    pub school_de: Vec<Vec<f64>>,
    /// Per-school mean indirect effect, indexed `[school][pair]`.
    pub school_ie: Vec<Vec<f64>>,
    /// Unweighted mean over schools, per alpha.
    pub de: Vec<f64>,
    /// Unweighted mean over schools, per pair.
    pub ie: Vec<f64>,
}

/// School-level and population-level true effects. Schools enter the
/// population average with equal weight regardless of size.
pub fn population_truth(
    schools: &[&dyn PotentialOutcomes],
    alphas: &[f64],
    ie_pairs: &[(f64, f64)],
) -> Result<EffectTruth> {
    if schools.is_empty() {
        return Err(Error::Domain("population_truth: no schools".into()));
    }
    for o in schools {
        if o.n_nodes() == 0 {
            return Err(Error::Domain("population_truth: empty school".into()));
        }
    }
    let mut school_de = Vec::with_capacity(schools.len());
    let mut school_ie = Vec::with_capacity(schools.len());
    for o in schools {
        let n = o.n_nodes() as f64;
        let mut de_row = Vec::with_capacity(alphas.len());
        for &alpha in alphas {
            let mut acc = 0.0;
            for i in 0..o.n_nodes() {
                acc += individual_de(*o, i, alpha)?;
            }
            de_row.push(acc / n);
        }
        let mut ie_row = Vec::with_capacity(ie_pairs.len());
        for &(a1, a0) in ie_pairs {
            let mut acc = 0.0;
            for i in 0..o.n_nodes() {
                acc += individual_ie(*o, i, a1, a0)?;
            }
            ie_row.push(acc / n);
        }
        school_de.push(de_row);
        school_ie.push(ie_row);
    }
    let k = schools.len() as f64;
    let de = (0..alphas.len())
        .map(|a| school_de.iter().map(|row| row[a]).sum::<f64>() / k)
        .collect();
    let ie = (0..ie_pairs.len())
        .map(|p| school_ie.iter().map(|row| row[p]).sum::<f64>() / k)
        .collect();
    Ok(EffectTruth {
        alphas: alphas.to_vec(),
        ie_pairs: ie_pairs.to_vec(),
        school_de,
        school_ie,
        de,
        ie,
    })
}
