//! Study driver: generate replicated synthetic school studies and score
//! the interference estimators against the realized ground truth.
//!
//! A study config names school types (network model + attribute synthesis
//! parameters each), structural exposure/outcome models, an allocation
//! grid, and confounding scenarios given as covariates hidden from the
//! working models. Every random stage is seeded through a label path from
//! the master seed, so runs are byte-reproducible and replicate prefixes
//! are stable as the replicate count grows.

pub mod seed;

pub use seed::{derive_seed, SeedLabel};

use crate::copula::SynthesisParams;
use crate::datagen::{
    draw_poisson_sizes, gen_exposure, gen_outcomes, AttributeGenerator, ExposureModel,
    ExposureScheme, OutcomeModel,
};
use crate::ergm::{simulate, ErgmModel, SamplerConfig};
use crate::error::{Error, Result};
use crate::estimands::{population_truth, LinearOutcomeOracle, PotentialOutcomes};
use crate::estimators::{estimate_effects, EstimatorConfig, School};
use crate::table::Role;
use crate::util::{mean, quantile_sorted};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

/// How school sizes are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SizeMode {
    /// Every replica of a school type has exactly the configured size.
    #[default]
    Fixed,
    /// Sizes are drawn once per school from Poisson(configured size) and
    /// then reused by every replicate.
    PoissonOnce,
}

/// One school type: a network model plus attribute synthesis parameters,
/// instantiated `replicas` times per replicate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchoolTypeConfig {
    pub name: String,
    pub size: u64,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    /// Path to the network model JSON, relative to the config file.
    pub ergm: String,
    /// Path to the synthesis parameters JSON, relative to the config file.
    pub synthesis: String,
}

fn default_replicas() -> usize {
    1
}

/// A confounding scenario: covariates hidden from both working models.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub drop: Vec<String>,
}

/// Full study specification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyConfig {
    pub master_seed: u64,
    pub replicates: usize,
    pub exposure_scheme: ExposureScheme,
    #[serde(default = "default_exposure_variable")]
    pub exposure_variable: String,
    pub alpha_grid: Vec<f64>,
    #[serde(default)]
    pub ie_pairs: Vec<(f64, f64)>,
    #[serde(default)]
    pub size_mode: SizeMode,
    /// Also report IPW with per-school normalized weights.
    #[serde(default)]
    pub hajek: bool,
    #[serde(default = "default_max_failure_share")]
    pub max_failure_share: f64,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default = "default_solver_tol")]
    pub solver_tol: f64,
    pub school_types: Vec<SchoolTypeConfig>,
    /// Path to the exposure model JSON, relative to the config file.
    pub exposure_model: String,
    /// Path to the outcome model JSON, relative to the config file.
    pub outcome_model: String,
    pub scenarios: Vec<ScenarioConfig>,
    /// Output directory, relative to the config file.
    pub output_dir: String,
}

fn default_exposure_variable() -> String {
    "Z".to_string()
}

fn default_max_failure_share() -> f64 {
    0.05
}

fn default_solver_tol() -> f64 {
    crate::copula::SOLVE_TOL
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be >= 1".into()));
        }
        if self.alpha_grid.is_empty() {
            return Err(Error::Config("alpha_grid is empty".into()));
        }
        let ok = |a: f64| a.is_finite() && a > 0.0 && a < 1.0;
        for &a in &self.alpha_grid {
            if !ok(a) {
                return Err(Error::Config(format!("allocation {a} outside (0, 1)")));
            }
        }
        for &(a1, a0) in &self.ie_pairs {
            if !ok(a1) || !ok(a0) {
                return Err(Error::Config(format!(
                    "allocation pair ({a1}, {a0}) outside (0, 1)"
                )));
            }
        }
        if !(0.0..1.0).contains(&self.max_failure_share) {
            return Err(Error::Config(format!(
                "max_failure_share {} outside [0, 1)",
                self.max_failure_share
            )));
        }
        if !(self.solver_tol > 0.0) {
            return Err(Error::Config("solver_tol must be positive".into()));
        }
        if self.school_types.is_empty() {
            return Err(Error::Config("no school types configured".into()));
        }
        for t in &self.school_types {
            if t.name.is_empty() {
                return Err(Error::Config("school type with empty name".into()));
            }
            if t.replicas == 0 {
                return Err(Error::Config(format!(
                    "school type {:?} has zero replicas",
                    t.name
                )));
            }
            if t.size < 2 {
                return Err(Error::Config(format!(
                    "school type {:?} size {} must be >= 2",
                    t.name, t.size
                )));
            }
        }
        if self.scenarios.is_empty() {
            return Err(Error::Config("no scenarios configured".into()));
        }
        for (i, s) in self.scenarios.iter().enumerate() {
            if s.name.is_empty() {
                return Err(Error::Config("scenario with empty name".into()));
            }
            if self.scenarios[..i].iter().any(|o| o.name == s.name) {
                return Err(Error::Config(format!("duplicate scenario {:?}", s.name)));
            }
        }
        if self.output_dir.is_empty() {
            return Err(Error::Config("output_dir is empty".into()));
        }
        Ok(())
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: Self = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    /// Canonical digest of the configuration (hex SHA-256 of its JSON form).
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(&json);
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// One method's estimates for one scenario in one replicate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodEstimates {
    pub method: String,
    pub de: Vec<f64>,
    pub ie: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioEstimates {
    pub scenario: String,
    pub methods: Vec<MethodEstimates>,
}

/// Everything recorded about one successful replicate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub de_truth: Vec<f64>,
    pub ie_truth: Vec<f64>,
    pub estimates: Vec<ScenarioEstimates>,
}

/// One row of the bias/MSE summary.
#[derive(Debug, Clone, Serialize)]
pub struct MetricRow {
    pub scenario: String,
    pub method: String,
    pub estimand: String,
    pub truth: f64,
    pub bias: f64,
    pub mse: f64,
}

/// One row of the direct-effect dose-response summary.
#[derive(Debug, Clone, Serialize)]
pub struct DoseRow {
    pub method: String,
    pub scenario: String,
    pub alpha: f64,
    pub truth: f64,
    pub mean: f64,
    pub q025: f64,
    pub q975: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FailureNote {
    pub replicate: usize,
    pub error: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub version: String,
    pub config_digest: String,
    pub master_seed: u64,
    pub replicates_total: usize,
    pub replicates_failed: usize,
    pub estimator_variant: String,
    pub methods: Vec<String>,
    pub scenarios: Vec<String>,
    pub alphas: Vec<f64>,
    pub ie_pairs: Vec<(f64, f64)>,
    pub school_sizes: Vec<usize>,
    pub failures: Vec<FailureNote>,
}

/// Full study output.
#[derive(Debug, Clone)]
pub struct StudyResults {
    pub replicates: Vec<ReplicateRecord>,
    pub metrics: Vec<MetricRow>,
    pub dose: Vec<DoseRow>,
    pub manifest: Manifest,
}

impl StudyResults {
    /// Dose-response rows for one (method, scenario) series, in alpha order.
    pub fn dose_series(&self, method: &str, scenario: &str) -> Result<Vec<&DoseRow>> {
        let rows: Vec<&DoseRow> = self
            .dose
            .iter()
            .filter(|r| r.method == method && r.scenario == scenario)
            .collect();
        if rows.is_empty() {
            return Err(Error::NoSuchSeries {
                method: method.to_string(),
                scenario: scenario.to_string(),
            });
        }
        Ok(rows)
    }

    /// Write metrics.csv, dose_response.csv, replicates.jsonl, and
    /// manifest.json into `dir` (creating it), byte-deterministically.
    pub fn write_outputs(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let fmt = |v: f64| format!("{v:.16e}");

        let mut w = csv::Writer::from_path(dir.join("metrics.csv"))?;
        w.write_record(["scenario", "method", "estimand", "truth", "bias", "mse"])?;
        for row in &self.metrics {
            w.write_record([
                row.scenario.as_str(),
                row.method.as_str(),
                row.estimand.as_str(),
                &fmt(row.truth),
                &fmt(row.bias),
                &fmt(row.mse),
            ])?;
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(dir.join("dose_response.csv"))?;
        w.write_record(["method", "scenario", "alpha", "truth", "mean", "q025", "q975"])?;
        for row in &self.dose {
            w.write_record([
                row.method.as_str(),
                row.scenario.as_str(),
                &fmt(row.alpha),
                &fmt(row.truth),
                &fmt(row.mean),
                &fmt(row.q025),
                &fmt(row.q975),
            ])?;
        }
        w.flush()?;

        let mut jsonl = String::new();
        for rec in &self.replicates {
            jsonl.push_str(&serde_json::to_string(rec)?);
            jsonl.push('\n');
        }
        std::fs::write(dir.join("replicates.jsonl"), jsonl)?;

        let mut manifest = serde_json::to_string_pretty(&self.manifest)?;
        manifest.push('\n');
        std::fs::write(dir.join("manifest.json"), manifest)?;
        Ok(())
    }
}

/// Immutable per-run state shared by all replicates.
struct LoadedStudy {
    config: StudyConfig,
    generators: Vec<AttributeGenerator>,
    ergms: Vec<ErgmModel>,
    exposure_model: ExposureModel,
    outcome_model: OutcomeModel,
    /// Flat school list: type index per school, canonical order
    /// (types in config order, replicas within type).
    school_type_of: Vec<usize>,
    sizes: Vec<usize>,
    covariate_names: Vec<String>,
}

fn resolve(base: &Path, rel: &str) -> PathBuf {
    let p = Path::new(rel);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn load_study(config: &StudyConfig, base_dir: &Path) -> Result<LoadedStudy> {
    config.validate()?;
    let exposure_model = ExposureModel::read_json(resolve(base_dir, &config.exposure_model))?;
    let outcome_model = OutcomeModel::read_json(resolve(base_dir, &config.outcome_model))?;

    let mut generators = Vec::with_capacity(config.school_types.len());
    let mut ergms = Vec::with_capacity(config.school_types.len());
    let mut synth_params: Vec<SynthesisParams> = Vec::with_capacity(config.school_types.len());
    for t in &config.school_types {
        let params = SynthesisParams::read_json(resolve(base_dir, &t.synthesis))?;
        let exposure = params
            .variables
            .iter()
            .find(|v| v.name == config.exposure_variable)
            .ok_or_else(|| {
                Error::Config(format!(
                    "school type {:?} synthesis lacks exposure variable {:?}",
                    t.name, config.exposure_variable
                ))
            })?;
        if exposure.levels.len() != 2 {
            return Err(Error::Config(format!(
                "exposure variable {:?} in school type {:?} must have 2 levels, has {}",
                config.exposure_variable,
                t.name,
                exposure.levels.len()
            )));
        }
        generators.push(AttributeGenerator::prepare(
            &params,
            &config.exposure_variable,
            config.exposure_scheme,
            config.solver_tol,
        )?);
        ergms.push(ErgmModel::read_json(resolve(base_dir, &t.ergm))?);
        synth_params.push(params);
    }

    // Covariates every school provides, in the first type's order.
    let covariate_names: Vec<String> = synth_params[0]
        .variables
        .iter()
        .map(|v| v.name.clone())
        .filter(|n| *n != config.exposure_variable)
        .collect();
    for (t, params) in config.school_types.iter().zip(&synth_params) {
        for name in &covariate_names {
            let here = params.variables.iter().find(|v| v.name == *name);
            let first = synth_params[0]
                .variables
                .iter()
                .find(|v| v.name == *name)
                .expect("name from first type");
            match here {
                Some(v) if v.levels == first.levels => {}
                Some(_) => {
                    return Err(Error::Config(format!(
                        "school type {:?} defines {:?} with different levels",
                        t.name, name
                    )))
                }
                None => {
                    return Err(Error::Config(format!(
                        "school type {:?} lacks covariate {:?}",
                        t.name, name
                    )))
                }
            }
        }
    }

    // Structural-model and scenario references must resolve everywhere.
    for term in exposure_model
        .covariates
        .iter()
        .chain(&outcome_model.covariates)
    {
        for params in &synth_params {
            let var = params
                .variables
                .iter()
                .find(|v| v.name == term.column)
                .ok_or_else(|| Error::MissingColumn(term.column.clone()))?;
            if let Some(level) = &term.level {
                if !var.levels.contains(level) {
                    return Err(Error::UnknownLevel {
                        column: term.column.clone(),
                        level: level.clone(),
                    });
                }
            }
        }
    }
    for scenario in &config.scenarios {
        for dropped in &scenario.drop {
            if !covariate_names.contains(dropped) {
                return Err(Error::Config(format!(
                    "scenario {:?} drops unknown covariate {:?}",
                    scenario.name, dropped
                )));
            }
        }
    }

    let mut school_type_of = Vec::new();
    for (ti, t) in config.school_types.iter().enumerate() {
        school_type_of.extend(std::iter::repeat(ti).take(t.replicas));
    }
    let sizes = match config.size_mode {
        SizeMode::Fixed => school_type_of
            .iter()
            .map(|&ti| config.school_types[ti].size as usize)
            .collect(),
        SizeMode::PoissonOnce => {
            let means: Vec<f64> = school_type_of
                .iter()
                .map(|&ti| config.school_types[ti].size as f64)
                .collect();
            draw_poisson_sizes(
                &means,
                derive_seed(config.master_seed, &[SeedLabel::from("sizes")]),
            )?
        }
    };

    Ok(LoadedStudy {
        config: config.clone(),
        generators,
        ergms,
        exposure_model,
        outcome_model,
        school_type_of,
        sizes,
        covariate_names,
    })
}

fn school_effect(variance: f64, seed: u64) -> f64 {
    if variance <= 0.0 {
        return 0.0;
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    Normal::new(0.0, variance.sqrt())
        .expect("valid sd")
        .sample(&mut rng)
}

fn run_replicate(study: &LoadedStudy, r: usize) -> Result<ReplicateRecord> {
    let config = &study.config;
    let m = config.master_seed;
    let mut schools = Vec::with_capacity(study.school_type_of.len());
    let mut oracles: Vec<LinearOutcomeOracle> = Vec::with_capacity(schools.capacity());
    for (sid, &ti) in study.school_type_of.iter().enumerate() {
        let n = study.sizes[sid];
        let path = |stage: &str| {
            [
                SeedLabel::from("rep"),
                SeedLabel::from(r),
                SeedLabel::from("school"),
                SeedLabel::from(sid),
                SeedLabel::from(stage),
            ]
        };
        let mut table = study.generators[ti].generate(n, derive_seed(m, &path("attrs")))?;
        let z: Vec<u8> = match config.exposure_scheme {
            ExposureScheme::Copula => table
                .codes(&config.exposure_variable)?
                .iter()
                .map(|&c| c as u8)
                .collect(),
            ExposureScheme::Logistic => {
                let b_z = school_effect(
                    study.exposure_model.school_variance,
                    derive_seed(m, &path("bz")),
                );
                let z = gen_exposure(
                    &study.exposure_model,
                    &table,
                    b_z,
                    derive_seed(m, &path("exposure")),
                )?;
                table.push_categorical(
                    &config.exposure_variable,
                    Role::Exposure,
                    study.generators[ti].exposure_levels().to_vec(),
                    z.iter().map(|&v| v as u32).collect(),
                )?;
                z
            }
        };
        let mut sampler_cfg = config.sampler;
        sampler_cfg.seed = derive_seed(m, &path("graph"));
        let graph = simulate(&study.ergms[ti], &table, n, &sampler_cfg)?;
        let b_y = school_effect(
            study.outcome_model.school_variance,
            derive_seed(m, &path("by")),
        );
        let data = gen_outcomes(
            &study.outcome_model,
            &table,
            &graph,
            &z,
            b_y,
            derive_seed(m, &path("outcome")),
        )?;
        oracles.push(data.oracle);
        schools.push(School {
            graph,
            table,
            z,
            y: data.y,
        });
    }

    let oracle_refs: Vec<&dyn PotentialOutcomes> =
        oracles.iter().map(|o| o as &dyn PotentialOutcomes).collect();
    let truth = population_truth(&oracle_refs, &config.alpha_grid, &config.ie_pairs)?;

    let mut estimates = Vec::with_capacity(config.scenarios.len());
    for scenario in &config.scenarios {
        let covariates: Vec<String> = study
            .covariate_names
            .iter()
            .filter(|n| !scenario.drop.contains(n))
            .cloned()
            .collect();
        let est = estimate_effects(
            &schools,
            &EstimatorConfig {
                alphas: config.alpha_grid.clone(),
                ie_pairs: config.ie_pairs.clone(),
                covariates,
                hajek: config.hajek,
            },
        )?;
        estimates.push(ScenarioEstimates {
            scenario: scenario.name.clone(),
            methods: est
                .methods()
                .into_iter()
                .map(|(name, series)| MethodEstimates {
                    method: name.to_string(),
                    de: series.de.clone(),
                    ie: series.ie.clone(),
                })
                .collect(),
        });
    }

    Ok(ReplicateRecord {
        replicate: r,
        de_truth: truth.de,
        ie_truth: truth.ie,
        estimates,
    })
}

/// Run a loaded study configuration. Paths inside the config resolve
/// relative to `base_dir`; outputs are not written (see `write_outputs`).
pub fn run_study(config: &StudyConfig, base_dir: &Path) -> Result<StudyResults> {
    let study = load_study(config, base_dir)?;
    let outcomes: Vec<(usize, std::result::Result<ReplicateRecord, String>)> = (0..config
        .replicates)
        .into_par_iter()
        .map(|r| (r, run_replicate(&study, r).map_err(|e| e.to_string())))
        .collect();

    let mut replicates = Vec::new();
    let mut failures = Vec::new();
    for (r, outcome) in outcomes {
        match outcome {
            Ok(rec) => replicates.push(rec),
            Err(error) => failures.push(FailureNote {
                replicate: r,
                error,
            }),
        }
    }
    let failed = failures.len();
    let total = config.replicates;
    if failed as f64 / total as f64 > config.max_failure_share {
        return Err(Error::TooManyFailures {
            failed,
            total,
            first: failures
                .first()
                .map(|f| f.error.clone())
                .unwrap_or_default(),
        });
    }
    if replicates.is_empty() {
        return Err(Error::TooManyFailures {
            failed,
            total,
            first: "no replicates succeeded".into(),
        });
    }

    let methods: Vec<String> = replicates[0].estimates[0]
        .methods
        .iter()
        .map(|m| m.method.clone())
        .collect();
    let scenario_names: Vec<String> =
        config.scenarios.iter().map(|s| s.name.clone()).collect();

    let mut metrics = Vec::new();
    let mut dose = Vec::new();
    for (si, scenario) in scenario_names.iter().enumerate() {
        for (mi, method) in methods.iter().enumerate() {
            for (ai, &alpha) in config.alpha_grid.iter().enumerate() {
                let truths: Vec<f64> = replicates.iter().map(|r| r.de_truth[ai]).collect();
                let ests: Vec<f64> = replicates
                    .iter()
                    .map(|r| r.estimates[si].methods[mi].de[ai])
                    .collect();
                let errs: Vec<f64> =
                    ests.iter().zip(&truths).map(|(e, t)| e - t).collect();
                let sq: Vec<f64> = errs.iter().map(|e| e * e).collect();
                metrics.push(MetricRow {
                    scenario: scenario.clone(),
                    method: method.clone(),
                    estimand: format!("de({alpha})"),
                    truth: mean(&truths),
                    bias: mean(&errs),
                    mse: mean(&sq),
                });
                let mut sorted = ests.clone();
                sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite estimates"));
                dose.push(DoseRow {
                    method: method.clone(),
                    scenario: scenario.clone(),
                    alpha,
                    truth: mean(&truths),
                    mean: mean(&ests),
                    q025: quantile_sorted(&sorted, 0.025),
                    q975: quantile_sorted(&sorted, 0.975),
                });
            }
            for (pi, &(a1, a0)) in config.ie_pairs.iter().enumerate() {
                let truths: Vec<f64> = replicates.iter().map(|r| r.ie_truth[pi]).collect();
                let ests: Vec<f64> = replicates
                    .iter()
                    .map(|r| r.estimates[si].methods[mi].ie[pi])
                    .collect();
                let errs: Vec<f64> =
                    ests.iter().zip(&truths).map(|(e, t)| e - t).collect();
                let sq: Vec<f64> = errs.iter().map(|e| e * e).collect();
                metrics.push(MetricRow {
                    scenario: scenario.clone(),
                    method: method.clone(),
                    estimand: format!("ie({a1},{a0})"),
                    truth: mean(&truths),
                    bias: mean(&errs),
                    mse: mean(&sq),
                });
            }
        }
    }

    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_digest: config.digest(),
        master_seed: config.master_seed,
        replicates_total: total,
        replicates_failed: failed,
        estimator_variant: "fixed-effects-working-models".to_string(),
        methods,
        scenarios: scenario_names,
        alphas: config.alpha_grid.clone(),
        ie_pairs: config.ie_pairs.clone(),
        school_sizes: study.sizes.clone(),
        failures,
    };

    Ok(StudyResults {
        replicates,
        metrics,
        dose,
        manifest,
    })
}

/// Load a config file, run the study, and write outputs next to it.
/// Returns the results and the output directory.
pub fn run_study_file(path: impl AsRef<Path>) -> Result<(StudyResults, PathBuf)> {
    let path = path.as_ref();
    let config = StudyConfig::read_json(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let results = run_study(&config, base)?;
    let out_dir = resolve(base, &config.output_dir);
    results.write_outputs(&out_dir)?;
    Ok((results, out_dir))
}
