//! IPW, regression, and doubly robust estimators of direct and indirect
//! effects under neighborhood interference.
//!
//! Both working models are fit on data pooled across schools with school
//! fixed effects: a logistic propensity model for treatment and a linear
//! outcome model in own treatment, treated-neighbor share, and their
//! interaction. Node-level estimates are averaged within school first,
//! and schools are averaged with equal weight.

use crate::error::{Error, Result};
use crate::estimands::allocation_pmf;
use crate::estimators::glm::{fit_linear, fit_logistic, LinearFit, LogisticFit};
use crate::graph::Graph;
use crate::table::NodeTable;
use crate::util::mean;
use nalgebra::DMatrix;
use std::collections::BTreeSet;

/// Fitted probabilities this close to 0 or 1 make the weights unusable.
const PROPENSITY_EPS: f64 = 1e-12;
/// Columns whose pooled range is below this are dropped before fitting.
const CONSTANT_EPS: f64 = 1e-12;

/// One school's realized data.
#[derive(Debug, Clone)]
pub struct School {
    pub graph: Graph,
    pub table: NodeTable,
    pub z: Vec<u8>,
    pub y: Vec<f64>,
}

impl School {
    fn validate(&self) -> Result<()> {
        let n = self.graph.n_nodes();
        if self.table.n_rows() != n {
            return Err(Error::SizeMismatch {
                rows: self.table.n_rows(),
                nodes: n,
            });
        }
        if self.z.len() != n || self.y.len() != n {
            return Err(Error::SizeMismatch {
                rows: self.z.len().min(self.y.len()),
                nodes: n,
            });
        }
        if n == 0 {
            return Err(Error::DegenerateGraph(0));
        }
        if let Some(bad) = self.z.iter().find(|&&z| z > 1) {
            return Err(Error::Domain(format!("treatment value {bad} is not 0/1")));
        }
        if self.y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite outcome value".into()));
        }
        Ok(())
    }
}

/// What to estimate and which covariates the working models may use.
#[derive(Debug, Clone)]
pub struct EstimatorConfig {
    pub alphas: Vec<f64>,
    pub ie_pairs: Vec<(f64, f64)>,
    /// Columns available to both working models (the confounder mask).
    pub covariates: Vec<String>,
    /// Also report IPW with per-school normalized weights.
    pub hajek: bool,
}

impl EstimatorConfig {
    fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() && self.ie_pairs.is_empty() {
            return Err(Error::Config("no allocations requested".into()));
        }
        let ok = |a: f64| a.is_finite() && a > 0.0 && a < 1.0;
        for &a in &self.alphas {
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
        Ok(())
    }
}

/// Direct-effect estimates per allocation and indirect per pair.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectSeries {
    pub de: Vec<f64>,
    pub ie: Vec<f64>,
}

/// All estimator outputs for one realized study.
#[derive(Debug, Clone)]
pub struct EstimateSet {
    pub alphas: Vec<f64>,
    pub ie_pairs: Vec<(f64, f64)>,
    pub ipw: EffectSeries,
    pub reg: EffectSeries,
    pub dr: EffectSeries,
    pub ipw_hajek: Option<EffectSeries>,
}

impl EstimateSet {
    /// (method name, series) pairs in a fixed reporting order.
    pub fn methods(&self) -> Vec<(&'static str, &EffectSeries)> {
        let mut out = vec![
            ("ipw", &self.ipw),
            ("reg", &self.reg),
            ("dr", &self.dr),
        ];
        if let Some(h) = &self.ipw_hajek {
            out.push(("ipw_hajek", h));
        }
        out
    }
}

/// One expanded design regressor derived from a table column.
#[derive(Debug, Clone)]
enum Regressor {
    /// Indicator `[column == code]`; baseline level omitted.
    Indicator { column: String, code: u32 },
    Numeric { column: String },
}

struct Expansion {
    regressors: Vec<Regressor>,
    names: Vec<String>,
}

/// Expand masked columns into indicator/numeric regressors, checking that
/// every school describes each column the same way.
fn expand_covariates(schools: &[School], mask: &[String]) -> Result<Expansion> {
    let first = &schools[0].table;
    let mut regressors = Vec::new();
    let mut names = Vec::new();
    for name in mask {
        let col = first.require(name)?;
        for school in &schools[1..] {
            let other = school.table.require(name)?;
            if other.is_categorical() != col.is_categorical()
                || other.levels() != col.levels()
            {
                return Err(Error::BadColumn {
                    column: name.clone(),
                    reason: "column definition differs across schools".into(),
                });
            }
        }
        if let Some(levels) = col.levels() {
            for (code, level) in levels.iter().enumerate().skip(1) {
                regressors.push(Regressor::Indicator {
                    column: name.clone(),
                    code: code as u32,
                });
                names.push(format!("{name}={level}"));
            }
        } else {
            regressors.push(Regressor::Numeric {
                column: name.clone(),
            });
            names.push(name.clone());
        }
    }
    Ok(Expansion { regressors, names })
}

fn regressor_values(table: &NodeTable, row: usize, exp: &Expansion, out: &mut Vec<f64>) {
    for reg in &exp.regressors {
        let v = match reg {
            Regressor::Indicator { column, code } => {
                let codes = table
                    .column(column)
                    .and_then(|c| c.codes())
                    .expect("validated categorical column");
                (codes[row] == *code) as u32 as f64
            }
            Regressor::Numeric { column } => {
                table
                    .column(column)
                    .and_then(|c| c.numeric())
                    .expect("validated numeric column")[row]
            }
        };
        out.push(v);
    }
}

/// A pooled design with constant columns removed (school dummies exempt).
struct PooledDesign {
    x: DMatrix<f64>,
    names: Vec<String>,
    /// Indices into the candidate layout that survived the constancy filter.
    kept: Vec<usize>,
}

fn build_design(
    rows: &[Vec<f64>],
    names: &[String],
    n_protected: usize,
) -> Result<PooledDesign> {
    let n_cols = names.len();
    let mut kept = Vec::with_capacity(n_cols);
    for c in 0..n_cols {
        if c < n_protected {
            kept.push(c);
            continue;
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for row in rows {
            lo = lo.min(row[c]);
            hi = hi.max(row[c]);
        }
        if hi - lo > CONSTANT_EPS {
            kept.push(c);
        }
    }
    let mut data = Vec::with_capacity(rows.len() * kept.len());
    for row in rows {
        for &c in &kept {
            data.push(row[c]);
        }
    }
    let x = DMatrix::from_row_slice(rows.len(), kept.len(), &data);
    let names = kept.iter().map(|&c| names[c].clone()).collect();
    Ok(PooledDesign { x, names, kept })
}

fn select_kept(full_row: &[f64], kept: &[usize], out: &mut Vec<f64>) {
    out.clear();
    out.extend(kept.iter().map(|&c| full_row[c]));
}

/// Per-node quantities shared by the weighting estimators.
struct NodeWeights {
    /// Sum over neighbors of log fitted own-arm propensity, plus the node's.
    log_denominator: Vec<f64>,
    treated_neighbors: Vec<usize>,
    degrees: Vec<usize>,
}

/// Estimate direct and indirect effects with IPW, outcome regression, and
/// the doubly robust combination.
pub fn estimate_effects(schools: &[School], config: &EstimatorConfig) -> Result<EstimateSet> {
    config.validate()?;
    if schools.is_empty() {
        return Err(Error::Domain("no schools to estimate from".into()));
    }
    for s in schools {
        s.validate()?;
    }
    let pooled_treated: usize = schools
        .iter()
        .map(|s| s.z.iter().filter(|&&z| z == 1).count())
        .sum();
    let pooled_n: usize = schools.iter().map(|s| s.z.len()).sum();
    if pooled_treated == 0 {
        return Err(Error::DegenerateArm(1));
    }
    if pooled_treated == pooled_n {
        return Err(Error::DegenerateArm(0));
    }

    let expansion = expand_covariates(schools, &config.covariates)?;
    let k_schools = schools.len();

    // Candidate layouts (school dummies first, always kept).
    let mut prop_names: Vec<String> = (0..k_schools).map(|k| format!("school_{k}")).collect();
    prop_names.extend(expansion.names.iter().cloned());
    let mut out_names: Vec<String> = (0..k_schools).map(|k| format!("school_{k}")).collect();
    out_names.extend(["z".to_string(), "p".to_string(), "z_p".to_string()]);
    out_names.extend(expansion.names.iter().cloned());

    let shares: Vec<Vec<f64>> = schools
        .iter()
        .map(|s| crate::datagen::treated_share(&s.graph, &s.z))
        .collect();

    let mut prop_rows = Vec::with_capacity(pooled_n);
    let mut out_rows = Vec::with_capacity(pooled_n);
    let mut z_resp = Vec::with_capacity(pooled_n);
    let mut y_resp = Vec::with_capacity(pooled_n);
    for (k, school) in schools.iter().enumerate() {
        for i in 0..school.z.len() {
            let mut dummies = vec![0.0; k_schools];
            dummies[k] = 1.0;
            let mut xvals = Vec::with_capacity(expansion.regressors.len());
            regressor_values(&school.table, i, &expansion, &mut xvals);

            let mut prow = dummies.clone();
            prow.extend(&xvals);
            prop_rows.push(prow);

            let z = school.z[i] as f64;
            let p = shares[k][i];
            let mut orow = dummies;
            orow.extend([z, p, z * p]);
            orow.extend(&xvals);
            out_rows.push(orow);

            z_resp.push(z);
            y_resp.push(school.y[i]);
        }
    }

    let prop_design = build_design(&prop_rows, &prop_names, k_schools)?;
    let out_design = build_design(&out_rows, &out_names, k_schools)?;

    let prop_fit: LogisticFit =
        fit_logistic(&prop_design.x, &z_resp, &prop_design.names, 100, 1e-8)?;
    let out_fit: LinearFit = fit_linear(&out_design.x, &y_resp, &out_design.names)?;

    // Fitted propensities and observed-outcome predictions per pooled row.
    let mut p_hat = Vec::with_capacity(pooled_n);
    let mut m_obs = Vec::with_capacity(pooled_n);
    let mut buf = Vec::new();
    for (prow, orow) in prop_rows.iter().zip(&out_rows) {
        select_kept(prow, &prop_design.kept, &mut buf);
        let p = prop_fit.predict(&buf);
        if p < PROPENSITY_EPS || p > 1.0 - PROPENSITY_EPS {
            return Err(Error::PropensityBoundary(p));
        }
        p_hat.push(p);
        select_kept(orow, &out_design.kept, &mut buf);
        m_obs.push(out_fit.predict(&buf));
    }

    // Per-school weight ingredients.
    let mut offsets = Vec::with_capacity(k_schools);
    let mut offset = 0usize;
    let mut weights = Vec::with_capacity(k_schools);
    for school in schools {
        offsets.push(offset);
        let n = school.z.len();
        let mut log_denominator = Vec::with_capacity(n);
        let mut treated_neighbors = Vec::with_capacity(n);
        let mut degrees = Vec::with_capacity(n);
        for i in 0..n {
            let own = p_hat[offset + i];
            let mut ld = if school.z[i] == 1 {
                own.ln()
            } else {
                (1.0 - own).ln()
            };
            let mut s_treated = 0usize;
            for &j in school.graph.neighbors(i as u32) {
                let pj = p_hat[offset + j as usize];
                if school.z[j as usize] == 1 {
                    s_treated += 1;
                    ld += pj.ln();
                } else {
                    ld += (1.0 - pj).ln();
                }
            }
            log_denominator.push(ld);
            treated_neighbors.push(s_treated);
            degrees.push(school.graph.degree(i as u32));
        }
        weights.push(NodeWeights {
            log_denominator,
            treated_neighbors,
            degrees,
        });
        offset += n;
    }

    // Every allocation probability needed for either effect family.
    let mut alpha_bits: BTreeSet<u64> = BTreeSet::new();
    for &a in &config.alphas {
        alpha_bits.insert(a.to_bits());
    }
    for &(a1, a0) in &config.ie_pairs {
        alpha_bits.insert(a1.to_bits());
        alpha_bits.insert(a0.to_bits());
    }
    let all_alphas: Vec<f64> = alpha_bits.iter().map(|&b| f64::from_bits(b)).collect();
    let alpha_idx = |a: f64| all_alphas.iter().position(|&x| x == a).expect("known alpha");

    // School-level average potential outcomes: [school][alpha] for each arm.
    let mut apo = SchoolApo::new(k_schools, all_alphas.len());

    let mut pred_row = Vec::new();
    for (k, school) in schools.iter().enumerate() {
        let n = school.z.len();
        let w = &weights[k];
        for (ai, &alpha) in all_alphas.iter().enumerate() {
            for z_arm in 0..2u8 {
                let mut w_sum = 0.0;
                let mut wy_sum = 0.0;
                let mut reg_sum = 0.0;
                let mut corr_sum = 0.0;
                let mut row = Vec::new();
                for i in 0..n {
                    let d = w.degrees[i];
                    let s = w.treated_neighbors[i];
                    // IPW weight: the allocation probability of the realized
                    // neighborhood over the fitted probability of the whole
                    // realized (own, neighbors) treatment configuration,
                    // zeroed when the node is not in the requested arm.
                    let wi = if school.z[i] == z_arm {
                        let ln_num = s as f64 * alpha.ln()
                            + (d - s) as f64 * (1.0 - alpha).ln();
                        (ln_num - w.log_denominator[i]).exp()
                    } else {
                        0.0
                    };
                    w_sum += wi;
                    wy_sum += wi * school.y[i];
                    corr_sum += wi * (school.y[i] - m_obs[offsets[k] + i]);

                    // Outcome-regression prediction averaged over the
                    // binomial allocation of treated neighbors.
                    row.clear();
                    row.extend_from_slice(&out_rows[offsets[k] + i]);
                    row[k_schools] = z_arm as f64;
                    let mut pred = 0.0;
                    for s_alloc in 0..=d {
                        let pmf = allocation_pmf(s_alloc, d, alpha)?;
                        if pmf == 0.0 {
                            continue;
                        }
                        let p_alloc = if d == 0 { 0.0 } else { s_alloc as f64 / d as f64 };
                        row[k_schools + 1] = p_alloc;
                        row[k_schools + 2] = z_arm as f64 * p_alloc;
                        select_kept(&row, &out_design.kept, &mut pred_row);
                        pred += pmf * out_fit.predict(&pred_row);
                    }
                    reg_sum += pred;
                }
                let nf = n as f64;
                apo.ipw[z_arm as usize][k][ai] = wy_sum / nf;
                apo.hajek[z_arm as usize][k][ai] =
                    if w_sum > 0.0 { wy_sum / w_sum } else { 0.0 };
                apo.reg[z_arm as usize][k][ai] = reg_sum / nf;
                apo.dr[z_arm as usize][k][ai] = reg_sum / nf + corr_sum / nf;
            }
        }
    }

    let series = |grab: &dyn Fn(u8, usize, usize) -> f64| -> EffectSeries {
        let de = config
            .alphas
            .iter()
            .map(|&a| {
                let ai = alpha_idx(a);
                let per_school: Vec<f64> = (0..k_schools)
                    .map(|k| grab(1, k, ai) - grab(0, k, ai))
                    .collect();
                mean(&per_school)
            })
            .collect();
        let ie = config
            .ie_pairs
            .iter()
            .map(|&(a1, a0)| {
                let i1 = alpha_idx(a1);
                let i0 = alpha_idx(a0);
                let per_school: Vec<f64> = (0..k_schools)
                    .map(|k| grab(0, k, i1) - grab(0, k, i0))
                    .collect();
                mean(&per_school)
            })
            .collect();
        EffectSeries { de, ie }
    };

    let ipw = series(&|z, k, ai| apo.ipw[z as usize][k][ai]);
    let reg = series(&|z, k, ai| apo.reg[z as usize][k][ai]);
    let dr = series(&|z, k, ai| apo.dr[z as usize][k][ai]);
    let ipw_hajek = if config.hajek {
        Some(series(&|z, k, ai| apo.hajek[z as usize][k][ai]))
    } else {
        None
    };

    Ok(EstimateSet {
        alphas: config.alphas.clone(),
        ie_pairs: config.ie_pairs.clone(),
        ipw,
        reg,
        dr,
        ipw_hajek,
    })
}

/// Average potential outcomes indexed `[arm][school][alpha]`.
struct SchoolApo {
    ipw: [Vec<Vec<f64>>; 2],
    hajek: [Vec<Vec<f64>>; 2],
    reg: [Vec<Vec<f64>>; 2],
    dr: [Vec<Vec<f64>>; 2],
}

impl SchoolApo {
    fn new(k: usize, n_alpha: usize) -> Self {
        let zeros = || [vec![vec![0.0; n_alpha]; k], vec![vec![0.0; n_alpha]; k]];
        SchoolApo {
            ipw: zeros(),
            hajek: zeros(),
            reg: zeros(),
            dr: zeros(),
        }
    }
}
