//! Exponential-family random graph models: term statistics, change
//! statistics, Metropolis simulation, pseudolikelihood fitting, and
//! goodness-of-fit summaries.

mod gof;
mod mple;
mod sampler;
mod stats;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::NodeTable;

pub use gof::{gof, GofBand, GofReport, GofStats};
pub use mple::{mple_fit, MpleFit};
pub use sampler::{sample_many, simulate, Proposal, Sampler, SamplerConfig};
pub use stats::{change_statistics, statistics};

pub(crate) use stats::resolve_terms;

/// One sufficient-statistic term of an ERGM.
///
/// `NodeFactor` counts incident edge-ends at a level (2 when both ends
/// match, 1 when one does). `UniformHomophily` counts matched-attribute
/// edges. `AbsDiff` sums `|code_i - code_j|` over edges. The geometric
/// terms use weight decays `decay > 0`: `GwDegree` is
/// `sum_d exp(-decay * d) * N_d` over all nodes including isolates, and
/// `GwEsp` is `exp(decay) * sum_k (1 - (1 - exp(-decay))^k) * EP_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TermSpec {
    Edges,
    NodeFactor { attr: String, level: String },
    UniformHomophily { attr: String },
    AbsDiff { attr: String },
    GwDegree { decay: f64 },
    GwEsp { decay: f64 },
}

impl TermSpec {
    /// Short display label used in fit output and error messages.
    pub fn label(&self) -> String {
        match self {
            TermSpec::Edges => "edges".into(),
            TermSpec::NodeFactor { attr, level } => format!("nodefactor({attr}={level})"),
            TermSpec::UniformHomophily { attr } => format!("homophily({attr})"),
            TermSpec::AbsDiff { attr } => format!("absdiff({attr})"),
            TermSpec::GwDegree { decay } => format!("gwdegree({decay})"),
            TermSpec::GwEsp { decay } => format!("gwesp({decay})"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            TermSpec::GwDegree { decay } | TermSpec::GwEsp { decay } => {
                if !(decay.is_finite() && *decay > 0.0) {
                    return Err(Error::InvalidModel(format!(
                        "{}: decay must be positive and finite",
                        self.label()
                    )));
                }
            }
            TermSpec::NodeFactor { attr, level } => {
                if attr.is_empty() || level.is_empty() {
                    return Err(Error::InvalidModel("node_factor needs attr and level".into()));
                }
            }
            TermSpec::UniformHomophily { attr } | TermSpec::AbsDiff { attr } => {
                if attr.is_empty() {
                    return Err(Error::InvalidModel(format!("{}: empty attr", self.label())));
                }
            }
            TermSpec::Edges => {}
        }
        Ok(())
    }

    /// True for terms whose change statistic depends on the rest of the
    /// graph (so dyads are not independent under the model).
    pub fn is_dyad_dependent(&self) -> bool {
        matches!(self, TermSpec::GwDegree { .. } | TermSpec::GwEsp { .. })
    }
}

/// A term list with its coefficient vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErgmModel {
    pub terms: Vec<TermSpec>,
    pub theta: Vec<f64>,
}

impl ErgmModel {
    pub fn new(terms: Vec<TermSpec>, theta: Vec<f64>) -> Result<Self> {
        let model = ErgmModel { terms, theta };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.terms.is_empty() {
            return Err(Error::InvalidModel("no terms".into()));
        }
        if self.terms.len() != self.theta.len() {
            return Err(Error::InvalidModel(format!(
                "{} terms but {} coefficients",
                self.terms.len(),
                self.theta.len()
            )));
        }
        if let Some(bad) = self.theta.iter().position(|t| !t.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "non-finite coefficient on {}",
                self.terms[bad].label()
            )));
        }
        for t in &self.terms {
            t.validate()?;
        }
        Ok(())
    }

    /// Weighted sufficient statistics `g(a, x) . theta`.
    pub fn log_weight(&self, graph: &crate::graph::Graph, table: &NodeTable) -> Result<f64> {
        let g = statistics(graph, table, &self.terms)?;
        Ok(g.iter().zip(&self.theta).map(|(s, t)| s * t).sum())
    }

    pub fn read_json<P: AsRef<Path>>(path: P) -> Result<Self> {
        let model: ErgmModel = serde_json::from_reader(std::fs::File::open(path)?)?;
        model.validate()?;
        Ok(model)
    }

    pub fn write_json<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(&mut f, self)?;
        use std::io::Write;
        writeln!(f)?;
        Ok(())
    }
}
