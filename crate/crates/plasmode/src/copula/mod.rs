//! Gaussian-copula synthesis of categorical nodal attributes.
//!
//! Given per-variable marginal distributions and a target Spearman rank
//! correlation matrix, this module solves for the latent Gaussian
//! correlation that reproduces each pairwise target after discretization,
//! repairs the assembled matrix to positive definiteness if needed, and
//! samples attribute tables from the fitted copula.

mod bvn;

pub use bvn::{bvn_cdf, phi};

use crate::error::{Error, Result};
use crate::table::{NodeTable, Role};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use std::path::Path;

/// Largest latent correlation magnitude the solver will consider.
const RHO_MAX: f64 = 1.0 - 1e-6;
/// Default bisection tolerance on the implied Spearman scale.
pub const SOLVE_TOL: f64 = 1e-3;
/// Eigenvalue floor used by the positive-definiteness repair.
const EIGEN_FLOOR: f64 = 1e-8;
/// Entry movement beyond this marks a pair as adjusted by the repair.
const ADJUST_EPS: f64 = 1e-6;

/// Marginal distribution of one categorical variable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarginalSpec {
    pub name: String,
    pub levels: Vec<String>,
    pub probs: Vec<f64>,
    /// Optional provenance note (e.g. "user-supplied"), carried through output.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

impl MarginalSpec {
    pub fn new(
        name: impl Into<String>,
        levels: Vec<String>,
        probs: Vec<f64>,
    ) -> Result<Self> {
        let spec = Self {
            name: name.into(),
            levels,
            probs,
            source: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Error::InvalidMarginal {
            name: self.name.clone(),
            reason,
        };
        if self.name.is_empty() {
            return Err(Error::InvalidMarginal {
                name: "<unnamed>".into(),
                reason: "empty variable name".into(),
            });
        }
        if self.levels.len() < 2 {
            return Err(bad(format!("needs >= 2 levels, has {}", self.levels.len())));
        }
        if self.levels.len() != self.probs.len() {
            return Err(bad(format!(
                "{} levels but {} probabilities",
                self.levels.len(),
                self.probs.len()
            )));
        }
        for (i, a) in self.levels.iter().enumerate() {
            if a.is_empty() {
                return Err(bad(format!("level {i} is empty")));
            }
            if self.levels[..i].contains(a) {
                return Err(bad(format!("duplicate level {a:?}")));
            }
        }
        let mut sum = 0.0;
        let mut positive = 0usize;
        for &p in &self.probs {
            if !p.is_finite() || p < 0.0 {
                return Err(bad(format!("probability {p} is not in [0, 1]")));
            }
            if p > 0.0 {
                positive += 1;
            }
            sum += p;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(bad(format!("probabilities sum to {sum}, expected 1")));
        }
        if positive < 2 {
            return Err(bad("fewer than 2 levels have positive probability".into()));
        }
        Ok(())
    }

    /// Interior latent cutpoints: quantiles of the standard normal at the
    /// cumulative probabilities (one fewer than the number of levels).
    pub fn cutpoints(&self) -> Vec<f64> {
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        let mut cuts = Vec::with_capacity(self.levels.len() - 1);
        let mut cum = 0.0;
        for &p in &self.probs[..self.probs.len() - 1] {
            cum += p;
            let clamped = cum.clamp(1e-300, 1.0 - 1e-16);
            cuts.push(normal.inverse_cdf(clamped));
        }
        cuts
    }

    /// Mid-rank score of each level: F(a-1) + p_a / 2, on the [0, 1] scale.
    pub fn midrank_scores(&self) -> Vec<f64> {
        let mut scores = Vec::with_capacity(self.probs.len());
        let mut below = 0.0;
        for &p in &self.probs {
            scores.push(below + p / 2.0);
            below += p;
        }
        scores
    }

    /// Variance of the mid-rank score under this marginal.
    pub fn midrank_variance(&self) -> f64 {
        let scores = self.midrank_scores();
        let ex2: f64 = self
            .probs
            .iter()
            .zip(&scores)
            .map(|(&p, &r)| p * r * r)
            .sum();
        ex2 - 0.25
    }
}

/// Target specification for one school's attribute synthesis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthesisParams {
    pub variables: Vec<MarginalSpec>,
    /// Target Spearman correlations, square, symmetric, unit diagonal.
    pub spearman: Vec<Vec<f64>>,
}

impl SynthesisParams {
    pub fn validate(&self) -> Result<()> {
        if self.variables.len() < 2 {
            return Err(Error::InvalidCorrelation(format!(
                "need >= 2 variables, have {}",
                self.variables.len()
            )));
        }
        for v in &self.variables {
            v.validate()?;
        }
        for (i, v) in self.variables.iter().enumerate() {
            if self.variables[..i].iter().any(|u| u.name == v.name) {
                return Err(Error::InvalidCorrelation(format!(
                    "duplicate variable name {:?}",
                    v.name
                )));
            }
        }
        let d = self.variables.len();
        if self.spearman.len() != d {
            return Err(Error::InvalidCorrelation(format!(
                "matrix has {} rows for {} variables",
                self.spearman.len(),
                d
            )));
        }
        for (i, row) in self.spearman.iter().enumerate() {
            if row.len() != d {
                return Err(Error::InvalidCorrelation(format!(
                    "row {i} has {} entries, expected {d}",
                    row.len()
                )));
            }
            for (j, &r) in row.iter().enumerate() {
                if !r.is_finite() || !(-1.0..=1.0).contains(&r) {
                    return Err(Error::InvalidCorrelation(format!(
                        "entry ({i}, {j}) = {r} outside [-1, 1]"
                    )));
                }
                if (self.spearman[j][i] - r).abs() > 1e-12 {
                    return Err(Error::InvalidCorrelation(format!(
                        "asymmetric at ({i}, {j}): {r} vs {}",
                        self.spearman[j][i]
                    )));
                }
            }
            if (self.spearman[i][i] - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidCorrelation(format!(
                    "diagonal entry {i} is {}, expected 1",
                    self.spearman[i][i]
                )));
            }
        }
        Ok(())
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let params: Self = serde_json::from_str(&text)?;
        params.validate()?;
        Ok(params)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        self.validate()?;
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    /// Drop one variable (by name) from the marginals and target matrix.
    pub fn without_variable(&self, name: &str) -> Result<Self> {
        let idx = self
            .variables
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
        let variables: Vec<MarginalSpec> = self
            .variables
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != idx)
            .map(|(_, v)| v.clone())
            .collect();
        let spearman: Vec<Vec<f64>> = self
            .spearman
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != idx)
            .map(|(_, row)| {
                row.iter()
                    .enumerate()
                    .filter(|(j, _)| *j != idx)
                    .map(|(_, &r)| r)
                    .collect()
            })
            .collect();
        Ok(Self { variables, spearman })
    }
}

/// Spearman correlation of the discretized pair when the latent Gaussian
/// pair has correlation `rho`.
pub fn implied_spearman(a: &MarginalSpec, b: &MarginalSpec, rho: f64) -> Result<f64> {
    a.validate()?;
    b.validate()?;
    if !rho.is_finite() || !(-1.0..=1.0).contains(&rho) {
        return Err(Error::Domain(format!(
            "implied_spearman: correlation {rho} outside [-1, 1]"
        )));
    }
    let var_a = a.midrank_variance();
    let var_b = b.midrank_variance();
    if var_a <= 0.0 || var_b <= 0.0 {
        return Err(Error::InvalidMarginal {
            name: if var_a <= 0.0 { a.name.clone() } else { b.name.clone() },
            reason: "mid-rank variance is zero".into(),
        });
    }
    // Latent-cell boundaries, including the infinite outer edges.
    let bounds = |m: &MarginalSpec| {
        let mut b = vec![f64::NEG_INFINITY];
        b.extend(m.cutpoints());
        b.push(f64::INFINITY);
        b
    };
    let ba = bounds(a);
    let bb = bounds(b);
    // CDF grid over all boundary pairs, then cell masses by differencing.
    let mut grid = vec![vec![0.0; bb.len()]; ba.len()];
    for (i, &h) in ba.iter().enumerate() {
        for (j, &k) in bb.iter().enumerate() {
            grid[i][j] = bvn_cdf(h, k, rho)?;
        }
    }
    let ra = a.midrank_scores();
    let rb = b.midrank_scores();
    let mut exy = 0.0;
    for ai in 0..a.levels.len() {
        for bj in 0..b.levels.len() {
            let cell = (grid[ai + 1][bj + 1] - grid[ai][bj + 1] - grid[ai + 1][bj]
                + grid[ai][bj])
                .max(0.0);
            exy += cell * ra[ai] * rb[bj];
        }
    }
    Ok((exy - 0.25) / (var_a * var_b).sqrt())
}

/// One solved off-diagonal pair of the latent correlation matrix.
#[derive(Debug, Clone, Serialize)]
pub struct PairFit {
    pub i: usize,
    pub j: usize,
    pub target: f64,
    /// Latent Gaussian correlation produced by the bisection.
    pub rho: f64,
    /// Implied Spearman at the solved correlation, before any repair.
    pub achieved: f64,
}

/// Solved latent correlation matrix plus a record of what the solver did.
#[derive(Debug, Clone)]
pub struct IntermediateCorr {
    pub gaussian: DMatrix<f64>,
    pub pairs: Vec<PairFit>,
    /// Frobenius norm of the positive-definiteness adjustment (0 when none).
    pub repair_delta: f64,
    /// Pairs whose latent correlation moved by more than a small epsilon
    /// during the repair; their realized rank correlations are off-target.
    pub adjusted_pairs: Vec<(usize, usize)>,
}

impl IntermediateCorr {
    /// True when the repair materially changed the solved matrix.
    pub fn repair_warning(&self) -> bool {
        self.repair_delta > 0.05
    }
}

/// Solve each pairwise latent correlation by bisection, then repair the
/// assembled matrix to positive definiteness.
pub fn solve_intermediate(params: &SynthesisParams, tol: f64) -> Result<IntermediateCorr> {
    params.validate()?;
    if !(tol > 0.0) {
        return Err(Error::Domain(format!(
            "solve_intermediate: tolerance {tol} must be positive"
        )));
    }
    let d = params.variables.len();
    let mut gaussian = DMatrix::<f64>::identity(d, d);
    let mut pairs = Vec::with_capacity(d * (d - 1) / 2);
    for i in 0..d {
        for j in (i + 1)..d {
            let target = params.spearman[i][j];
            let fit = solve_pair(&params.variables[i], &params.variables[j], target, tol)?
                .with_indices(i, j);
            gaussian[(i, j)] = fit.rho;
            gaussian[(j, i)] = fit.rho;
            pairs.push(fit);
        }
    }
    let (repaired, repair_delta) = repair_psd(&gaussian)?;
    let mut adjusted_pairs = Vec::new();
    for p in &pairs {
        if (repaired[(p.i, p.j)] - p.rho).abs() > ADJUST_EPS {
            adjusted_pairs.push((p.i, p.j));
        }
    }
    Ok(IntermediateCorr {
        gaussian: repaired,
        pairs,
        repair_delta,
        adjusted_pairs,
    })
}

struct PairSolution {
    target: f64,
    rho: f64,
    achieved: f64,
}

impl PairSolution {
    fn with_indices(self, i: usize, j: usize) -> PairFit {
        PairFit {
            i,
            j,
            target: self.target,
            rho: self.rho,
            achieved: self.achieved,
        }
    }
}

fn solve_pair(
    a: &MarginalSpec,
    b: &MarginalSpec,
    target: f64,
    tol: f64,
) -> Result<PairSolution> {
    if target == 0.0 {
        // Independence is exact for any marginals.
        return Ok(PairSolution {
            target,
            rho: 0.0,
            achieved: 0.0,
        });
    }
    let lo_val = implied_spearman(a, b, -RHO_MAX)?;
    let hi_val = implied_spearman(a, b, RHO_MAX)?;
    if target < lo_val - tol || target > hi_val + tol {
        return Err(Error::InfeasibleTarget {
            a: a.name.clone(),
            b: b.name.clone(),
            target,
            lo: lo_val,
            hi: hi_val,
        });
    }
    // Clamp targets sitting inside the tolerance collar onto the bracket.
    let goal = target.clamp(lo_val, hi_val);
    let mut lo = -RHO_MAX;
    let mut hi = RHO_MAX;
    let mut f_lo = lo_val - goal;
    let mut best = (lo, f_lo.abs(), lo_val);
    for _ in 0..200 {
        let mid = (lo + hi) / 2.0;
        let val = implied_spearman(a, b, mid)?;
        let f_mid = val - goal;
        if f_mid.abs() < best.1 {
            best = (mid, f_mid.abs(), val);
        }
        if f_mid.abs() <= tol {
            return Ok(PairSolution {
                target,
                rho: mid,
                achieved: val,
            });
        }
        if (f_lo < 0.0) == (f_mid < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    if best.1 <= tol {
        return Ok(PairSolution {
            target,
            rho: best.0,
            achieved: best.2,
        });
    }
    Err(Error::NoConvergence(200))
}

/// Clip eigenvalues to a small positive floor and rescale to unit diagonal.
/// Returns the repaired matrix and the Frobenius norm of the change.
fn repair_psd(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let eig = m.clone().symmetric_eigen();
    let min_eig = eig.eigenvalues.min();
    if min_eig >= EIGEN_FLOOR {
        return Ok((m.clone(), 0.0));
    }
    let mut vals = eig.eigenvalues.clone();
    for v in vals.iter_mut() {
        if *v < EIGEN_FLOOR {
            *v = EIGEN_FLOOR;
        }
    }
    let b = &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose();
    let d = m.nrows();
    let mut repaired = DMatrix::<f64>::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let denom = (b[(i, i)] * b[(j, j)]).sqrt();
            if denom <= 0.0 {
                return Err(Error::Internal(
                    "positive-definiteness repair produced a zero diagonal".into(),
                ));
            }
            repaired[(i, j)] = b[(i, j)] / denom;
        }
    }
    // Exact symmetry and unit diagonal despite roundoff.
    for i in 0..d {
        repaired[(i, i)] = 1.0;
        for j in (i + 1)..d {
            let avg = (repaired[(i, j)] + repaired[(j, i)]) / 2.0;
            let clipped = avg.clamp(-RHO_MAX, RHO_MAX);
            repaired[(i, j)] = clipped;
            repaired[(j, i)] = clipped;
        }
    }
    let delta = (&repaired - m).norm();
    Ok((repaired, delta))
}

/// Draw `n` rows from the fitted copula, returning a table of categorical
/// covariate columns in the order of `params.variables`.
pub fn sample(
    params: &SynthesisParams,
    inter: &IntermediateCorr,
    n: usize,
    seed: u64,
) -> Result<NodeTable> {
    params.validate()?;
    let d = params.variables.len();
    if inter.gaussian.nrows() != d || inter.gaussian.ncols() != d {
        return Err(Error::InvalidCorrelation(format!(
            "latent matrix is {}x{}, expected {d}x{d}",
            inter.gaussian.nrows(),
            inter.gaussian.ncols()
        )));
    }
    let chol = inter.gaussian.clone().cholesky().ok_or_else(|| {
        Error::InvalidCorrelation("latent correlation matrix is not positive definite".into())
    })?;
    let l = chol.l();
    let cuts: Vec<Vec<f64>> = params.variables.iter().map(|v| v.cutpoints()).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut codes: Vec<Vec<u32>> = vec![Vec::with_capacity(n); d];
    let mut z = vec![0.0_f64; d];
    for _ in 0..n {
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        for k in 0..d {
            let mut x = 0.0;
            for (m, &zm) in z.iter().enumerate().take(k + 1) {
                x += l[(k, m)] * zm;
            }
            let code = cuts[k].iter().take_while(|&&c| x > c).count() as u32;
            codes[k].push(code);
        }
    }
    let mut table = NodeTable::new(n);
    for (v, col_codes) in params.variables.iter().zip(codes) {
        table.push_categorical(&v.name, Role::Covariate, v.levels.clone(), col_codes)?;
    }
    Ok(table)
}

/// Resample `n` rows (with replacement) from an existing table.
pub fn bootstrap_rows(table: &NodeTable, n: usize, seed: u64) -> Result<NodeTable> {
    if table.n_rows() == 0 {
        return Err(Error::Domain(
            "bootstrap_rows: source table has no rows".into(),
        ));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let picks: Vec<usize> = (0..n).map(|_| rng.random_range(0..table.n_rows())).collect();
    let mut out = NodeTable::new(n);
    for col in table.columns() {
        match &col.data {
            crate::table::ColumnData::Categorical { levels, codes } => {
                let sampled: Vec<u32> = picks.iter().map(|&r| codes[r]).collect();
                out.push_categorical(&col.name, col.role, levels.clone(), sampled)?;
            }
            crate::table::ColumnData::Numeric(values) => {
                let sampled: Vec<f64> = picks.iter().map(|&r| values[r]).collect();
                out.push_numeric(&col.name, col.role, sampled)?;
            }
        }
    }
    Ok(out)
}

/// Sample Spearman rank correlation (mid-ranks for ties).
pub fn empirical_spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "length mismatch");
    let rx = midranks(x);
    let ry = midranks(y);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

fn midranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).expect("non-NaN values"));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}
