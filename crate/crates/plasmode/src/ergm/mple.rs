//! Maximum pseudolikelihood estimation: logistic regression of each
//! dyad's state on its change statistics computed with the dyad off.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::estimators::fit_logistic;
use crate::graph::Graph;
use crate::table::NodeTable;

use super::stats::{change_resolved, resolve_terms};
use super::{ErgmModel, TermSpec};

#[derive(Clone, Debug)]
pub struct MpleFit {
    pub model: ErgmModel,
    /// Logistic-information standard errors. With dyad-dependent terms
    /// present these ignore dependence between dyads; see [`MpleFit::se_caveat`].
    pub std_errors: Vec<f64>,
    /// True when any term is dyad-dependent, so the standard errors are
    /// naive and typically anti-conservative.
    pub se_caveat: bool,
    pub iterations: usize,
    pub deviance: f64,
}

pub fn mple_fit(graph: &Graph, table: &NodeTable, terms: &[TermSpec]) -> Result<MpleFit> {
    if terms.is_empty() {
        return Err(Error::InvalidModel("no terms".into()));
    }
    if table.n_rows() != graph.n_nodes() {
        return Err(Error::SizeMismatch { rows: table.n_rows(), nodes: graph.n_nodes() });
    }
    let n_dyads = graph.n_dyads();
    if graph.n_edges() == 0 || graph.n_edges() == n_dyads {
        return Err(Error::Domain(format!(
            "pseudolikelihood undefined on a graph with {} of {} possible edges",
            graph.n_edges(),
            n_dyads
        )));
    }
    let resolved = resolve_terms(terms, table)?;
    let p = resolved.len();
    let mut x = DMatrix::zeros(n_dyads, p);
    let mut y = Vec::with_capacity(n_dyads);
    let n = graph.n_nodes() as u32;
    let mut row = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            for (k, term) in resolved.iter().enumerate() {
                x[(row, k)] = change_resolved(graph, term, i, j);
            }
            y.push(graph.has_edge(i, j) as u8 as f64);
            row += 1;
        }
    }
    let labels: Vec<String> = terms.iter().map(|t| t.label()).collect();
    let fit = fit_logistic(&x, &y, &labels, 50, 1e-8)?;
    Ok(MpleFit {
        model: ErgmModel::new(terms.to_vec(), fit.coefficients)?,
        std_errors: fit.std_errors,
        se_caveat: terms.iter().any(|t| t.is_dyad_dependent()),
        iterations: fit.iterations,
        deviance: fit.deviance,
    })
}
