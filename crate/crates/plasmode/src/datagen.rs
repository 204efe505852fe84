//! Structural exposure and outcome models for synthetic school studies.
//!
//! Exposures are Bernoulli draws from a logistic model with a school-level
//! random intercept (or come jointly from the attribute copula, depending
//! on the scheme). Outcomes follow a linear model in own treatment, the
//! treated-neighbor share, their interaction, covariate main effects, a
//! school random intercept, and Gaussian noise; the realized coefficient
//! draw doubles as the ground-truth potential-outcome surface.

use crate::copula::{self, IntermediateCorr, SynthesisParams};
use crate::error::{Error, Result};
use crate::estimands::LinearOutcomeOracle;
use crate::graph::Graph;
use crate::table::{NodeTable, Role};
use crate::util::sigmoid;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// One covariate main effect: an indicator `[column == level]`, or the
/// numeric column itself when `level` is absent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CovariateTerm {
    pub column: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<String>,
    pub coef: f64,
}

impl CovariateTerm {
    fn validate(&self) -> Result<()> {
        if self.column.is_empty() {
            return Err(Error::Config("covariate term with empty column name".into()));
        }
        if !self.coef.is_finite() {
            return Err(Error::Config(format!(
                "covariate term {:?} has non-finite coefficient",
                self.column
            )));
        }
        Ok(())
    }

    /// Evaluate this term's regressor for one row.
    fn value(&self, table: &NodeTable, row: usize) -> Result<f64> {
        let col = table.require(&self.column)?;
        match (&self.level, col.is_categorical()) {
            (Some(level), true) => {
                let code = col.level_code(level).ok_or_else(|| Error::UnknownLevel {
                    column: self.column.clone(),
                    level: level.clone(),
                })?;
                Ok((col.codes().expect("categorical")[row] == code) as u32 as f64)
            }
            (None, false) => Ok(col.numeric().expect("numeric")[row]),
            (Some(_), false) => Err(Error::BadColumn {
                column: self.column.clone(),
                reason: "level given for a numeric column".into(),
            }),
            (None, true) => Err(Error::BadColumn {
                column: self.column.clone(),
                reason: "categorical column used without a level".into(),
            }),
        }
    }
}

/// Logistic treatment-assignment model with a school random intercept.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExposureModel {
    pub intercept: f64,
    #[serde(default)]
    pub covariates: Vec<CovariateTerm>,
    /// Variance of the school-level random intercept.
    #[serde(default)]
    pub school_variance: f64,
}

impl ExposureModel {
    pub fn validate(&self) -> Result<()> {
        if !self.intercept.is_finite() {
            return Err(Error::Config("exposure intercept is not finite".into()));
        }
        if !self.school_variance.is_finite() || self.school_variance < 0.0 {
            return Err(Error::Config(format!(
                "exposure school variance {} must be >= 0",
                self.school_variance
            )));
        }
        for t in &self.covariates {
            t.validate()?;
        }
        Ok(())
    }

    /// Fixed-effect linear predictor for one row (random intercept excluded).
    pub fn linear_predictor(&self, table: &NodeTable, row: usize) -> Result<f64> {
        let mut lp = self.intercept;
        for t in &self.covariates {
            lp += t.coef * t.value(table, row)?;
        }
        Ok(lp)
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let model: Self = serde_json::from_str(&text)?;
        model.validate()?;
        Ok(model)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        self.validate()?;
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// Linear outcome model: intercept + exposure*z + neighborhood*(s/d)
/// + interaction*z*(s/d) + covariate effects + school intercept + noise.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutcomeModel {
    pub intercept: f64,
    pub exposure: f64,
    pub neighborhood: f64,
    pub interaction: f64,
    #[serde(default)]
    pub covariates: Vec<CovariateTerm>,
    pub residual_variance: f64,
    #[serde(default)]
    pub school_variance: f64,
}

impl OutcomeModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("intercept", self.intercept),
            ("exposure", self.exposure),
            ("neighborhood", self.neighborhood),
            ("interaction", self.interaction),
        ] {
            if !v.is_finite() {
                return Err(Error::Config(format!("outcome {name} is not finite")));
            }
        }
        for (name, v) in [
            ("residual_variance", self.residual_variance),
            ("school_variance", self.school_variance),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Config(format!("outcome {name} {v} must be >= 0")));
            }
        }
        for t in &self.covariates {
            t.validate()?;
        }
        Ok(())
    }

    /// Covariate-only part of the linear predictor for one row.
    pub fn covariate_predictor(&self, table: &NodeTable, row: usize) -> Result<f64> {
        let mut lp = self.intercept;
        for t in &self.covariates {
            lp += t.coef * t.value(table, row)?;
        }
        Ok(lp)
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let model: Self = serde_json::from_str(&text)?;
        model.validate()?;
        Ok(model)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        self.validate()?;
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// How treatment enters the synthetic data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExposureScheme {
    /// Treatment is one more copula variable, correlated with covariates
    /// through the rank-correlation targets.
    Copula,
    /// Covariates come from the copula (treatment variable dropped);
    /// treatment is then drawn from the logistic exposure model.
    Logistic,
}

/// Per-school-type attribute sampler: solves the latent correlation once,
/// then draws any number of tables from it.
#[derive(Debug, Clone)]
pub struct AttributeGenerator {
    full: SynthesisParams,
    sampled: SynthesisParams,
    inter: IntermediateCorr,
    exposure_name: String,
    scheme: ExposureScheme,
}

impl AttributeGenerator {
    /// Solve the latent correlation for the variables this scheme samples.
    pub fn prepare(
        params: &SynthesisParams,
        exposure_name: &str,
        scheme: ExposureScheme,
        tol: f64,
    ) -> Result<Self> {
        params.validate()?;
        if !params.variables.iter().any(|v| v.name == exposure_name) {
            return Err(Error::MissingColumn(exposure_name.to_string()));
        }
        let sampled = match scheme {
            ExposureScheme::Copula => params.clone(),
            ExposureScheme::Logistic => params.without_variable(exposure_name)?,
        };
        let inter = copula::solve_intermediate(&sampled, tol)?;
        Ok(Self {
            full: params.clone(),
            sampled,
            inter,
            exposure_name: exposure_name.to_string(),
            scheme,
        })
    }

    /// Draw one table. Under the copula scheme it includes the exposure
    /// column (tagged with the exposure role); under the logistic scheme
    /// it holds covariates only.
    pub fn generate(&self, n: usize, seed: u64) -> Result<NodeTable> {
        let mut table = copula::sample(&self.sampled, &self.inter, n, seed)?;
        if self.scheme == ExposureScheme::Copula {
            table.set_role(&self.exposure_name, Role::Exposure)?;
        }
        Ok(table)
    }

    pub fn scheme(&self) -> ExposureScheme {
        self.scheme
    }

    pub fn exposure_name(&self) -> &str {
        &self.exposure_name
    }

    /// Level labels of the exposure variable (order fixes code 0/1).
    pub fn exposure_levels(&self) -> &[String] {
        &self
            .full
            .variables
            .iter()
            .find(|v| v.name == self.exposure_name)
            .expect("exposure variable present")
            .levels
    }

    pub fn intermediate(&self) -> &IntermediateCorr {
        &self.inter
    }
}

/// Draw 0/1 treatments from the exposure model with school intercept `b_z`.
pub fn gen_exposure(
    model: &ExposureModel,
    table: &NodeTable,
    b_z: f64,
    seed: u64,
) -> Result<Vec<u8>> {
    model.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut z = Vec::with_capacity(table.n_rows());
    for row in 0..table.n_rows() {
        let p = sigmoid(model.linear_predictor(table, row)? + b_z);
        z.push(rng.random_bool(p) as u8);
    }
    Ok(z)
}

/// Fraction of each node's neighbors that are treated (0 for isolates).
pub fn treated_share(graph: &Graph, z: &[u8]) -> Vec<f64> {
    (0..graph.n_nodes())
        .map(|i| {
            let d = graph.degree(i as u32);
            if d == 0 {
                0.0
            } else {
                let s: u32 = graph
                    .neighbors(i as u32)
                    .iter()
                    .map(|&j| z[j as usize] as u32)
                    .sum();
                s as f64 / d as f64
            }
        })
        .collect()
}

/// Observed outcomes plus the matching ground-truth outcome surface.
#[derive(Debug, Clone)]
pub struct OutcomeData {
    pub y: Vec<f64>,
    pub oracle: LinearOutcomeOracle,
}

/// Draw outcomes for one school and return the realized potential-outcome
/// surface (noise and random intercept are baked into the node baselines,
/// so observed outcomes equal the surface at the realized treatments).
pub fn gen_outcomes(
    model: &OutcomeModel,
    table: &NodeTable,
    graph: &Graph,
    z: &[u8],
    b_y: f64,
    seed: u64,
) -> Result<OutcomeData> {
    model.validate()?;
    let n = table.n_rows();
    if graph.n_nodes() != n {
        return Err(Error::SizeMismatch {
            rows: n,
            nodes: graph.n_nodes(),
        });
    }
    if z.len() != n {
        return Err(Error::SizeMismatch {
            rows: z.len(),
            nodes: n,
        });
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, model.residual_variance.sqrt())
        .map_err(|e| Error::Config(format!("residual noise: {e}")))?;
    let mut base = Vec::with_capacity(n);
    for row in 0..n {
        let eps: f64 = noise.sample(&mut rng);
        base.push(model.covariate_predictor(table, row)? + b_y + eps);
    }
    let degrees: Vec<usize> = (0..n).map(|i| graph.degree(i as u32)).collect();
    let oracle = LinearOutcomeOracle {
        base,
        degrees,
        beta_z: model.exposure,
        beta_zn: model.neighborhood,
        beta_zzn: model.interaction,
    };
    let shares = treated_share(graph, z);
    let y = (0..n)
        .map(|i| {
            oracle.base[i]
                + oracle.beta_z * z[i] as f64
                + oracle.beta_zn * shares[i]
                + oracle.beta_zzn * z[i] as f64 * shares[i]
        })
        .collect();
    Ok(OutcomeData { y, oracle })
}

/// Draw one school size per mean from Poisson(mean), redrawing until the
/// size is at least 2 (at most 100 attempts each).
pub fn draw_poisson_sizes(means: &[f64], seed: u64) -> Result<Vec<usize>> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut sizes = Vec::with_capacity(means.len());
    for &m in means {
        if !m.is_finite() || m <= 0.0 {
            return Err(Error::Config(format!("Poisson size mean {m} must be > 0")));
        }
        let dist =
            Poisson::new(m).map_err(|e| Error::Config(format!("Poisson size mean {m}: {e}")))?;
        let mut accepted = None;
        for _ in 0..100 {
            let draw: f64 = dist.sample(&mut rng);
            if draw >= 2.0 {
                accepted = Some(draw as usize);
                break;
            }
        }
        sizes.push(accepted.ok_or(Error::SizeRedraw(100))?);
    }
    Ok(sizes)
}
