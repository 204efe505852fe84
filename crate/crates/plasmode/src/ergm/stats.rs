//! Sufficient statistics and change statistics for ERGM terms.
//!
//! Change statistics are always computed on the edge-removed basis: for
//! dyad `{i, j}`, `delta = g(a + ij) - g(a - ij)` regardless of whether
//! the passed graph currently holds the edge.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::table::NodeTable;

use super::TermSpec;

/// A term bound to a concrete node table, with per-node values cached.
pub(crate) enum ResolvedTerm {
    Edges,
    NodeFactor(Vec<bool>),
    UniformHomophily(Vec<u32>),
    AbsDiff(Vec<f64>),
    GwDegree(f64),
    GwEsp(f64),
}

/// Bind terms to a table, checking attributes, levels, and decays.
pub(crate) fn resolve_terms(terms: &[TermSpec], table: &NodeTable) -> Result<Vec<ResolvedTerm>> {
    terms
        .iter()
        .map(|term| {
            term.validate()?;
            Ok(match term {
                TermSpec::Edges => ResolvedTerm::Edges,
                TermSpec::NodeFactor { attr, level } => {
                    let col = table.require(attr)?;
                    let codes = table.codes(attr)?;
                    let target = col.level_code(level).ok_or_else(|| Error::UnknownLevel {
                        column: attr.clone(),
                        level: level.clone(),
                    })?;
                    ResolvedTerm::NodeFactor(codes.iter().map(|&c| c == target).collect())
                }
                TermSpec::UniformHomophily { attr } => {
                    ResolvedTerm::UniformHomophily(table.codes(attr)?.to_vec())
                }
                TermSpec::AbsDiff { attr } => {
                    ResolvedTerm::AbsDiff(table.require(attr)?.as_numeric())
                }
                TermSpec::GwDegree { decay } => ResolvedTerm::GwDegree(*decay),
                TermSpec::GwEsp { decay } => ResolvedTerm::GwEsp(*decay),
            })
        })
        .collect()
}

/// Edgewise shared-partner weight `exp(d) * (1 - (1 - exp(-d))^k)`.
#[inline]
fn gwesp_weight(decay: f64, k: usize) -> f64 {
    decay.exp() * (1.0 - (1.0 - (-decay).exp()).powi(k as i32))
}

pub(crate) fn statistic_resolved(graph: &Graph, term: &ResolvedTerm) -> f64 {
    match term {
        ResolvedTerm::Edges => graph.n_edges() as f64,
        ResolvedTerm::NodeFactor(is_level) => graph
            .edges()
            .iter()
            .map(|&(i, j)| is_level[i as usize] as u32 + is_level[j as usize] as u32)
            .sum::<u32>() as f64,
        ResolvedTerm::UniformHomophily(codes) => graph
            .edges()
            .iter()
            .filter(|&&(i, j)| codes[i as usize] == codes[j as usize])
            .count() as f64,
        ResolvedTerm::AbsDiff(vals) => graph
            .edges()
            .iter()
            .map(|&(i, j)| (vals[i as usize] - vals[j as usize]).abs())
            .sum(),
        ResolvedTerm::GwDegree(decay) => (0..graph.n_nodes() as u32)
            .map(|i| (-decay * graph.degree(i) as f64).exp())
            .sum(),
        ResolvedTerm::GwEsp(decay) => graph
            .edges()
            .iter()
            .map(|&(i, j)| gwesp_weight(*decay, graph.shared_partners(i, j)))
            .sum(),
    }
}

pub(crate) fn change_resolved(graph: &Graph, term: &ResolvedTerm, i: u32, j: u32) -> f64 {
    let (iu, ju) = (i as usize, j as usize);
    match term {
        ResolvedTerm::Edges => 1.0,
        ResolvedTerm::NodeFactor(is_level) => (is_level[iu] as u32 + is_level[ju] as u32) as f64,
        ResolvedTerm::UniformHomophily(codes) => (codes[iu] == codes[ju]) as u32 as f64,
        ResolvedTerm::AbsDiff(vals) => (vals[iu] - vals[ju]).abs(),
        ResolvedTerm::GwDegree(decay) => {
            // degrees on the edge-removed basis
            let present = graph.has_edge(i, j) as usize;
            let mut delta = 0.0;
            for v in [i, j] {
                let d = (graph.degree(v) - present) as f64;
                delta += (-decay * (d + 1.0)).exp() - (-decay * d).exp();
            }
            delta
        }
        ResolvedTerm::GwEsp(decay) => {
            // The toggled edge lands in shared-partner bin |N(i) ∩ N(j)|,
            // and each common neighbor u bumps the bins of edges (i,u)
            // and (j,u) by one; their base counts exclude the toggled
            // edge itself.
            let common = graph.shared_partner_list(i, j);
            let mut delta = gwesp_weight(*decay, common.len());
            for &u in &common {
                let ei = graph.shared_partners_excluding(i, u, Some(j));
                let ej = graph.shared_partners_excluding(j, u, Some(i));
                delta += gwesp_weight(*decay, ei + 1) - gwesp_weight(*decay, ei);
                delta += gwesp_weight(*decay, ej + 1) - gwesp_weight(*decay, ej);
            }
            delta
        }
    }
}

fn check_graph_table(graph: &Graph, table: &NodeTable) -> Result<()> {
    if table.n_rows() != graph.n_nodes() {
        return Err(Error::SizeMismatch { rows: table.n_rows(), nodes: graph.n_nodes() });
    }
    Ok(())
}

/// Sufficient statistics `g(a, x)`, one value per term.
pub fn statistics(graph: &Graph, table: &NodeTable, terms: &[TermSpec]) -> Result<Vec<f64>> {
    check_graph_table(graph, table)?;
    let resolved = resolve_terms(terms, table)?;
    Ok(resolved.iter().map(|t| statistic_resolved(graph, t)).collect())
}

/// Change statistics for toggling dyad `{i, j}`, one value per term.
pub fn change_statistics(
    graph: &Graph,
    table: &NodeTable,
    terms: &[TermSpec],
    i: u32,
    j: u32,
) -> Result<Vec<f64>> {
    check_graph_table(graph, table)?;
    let n = graph.n_nodes() as u32;
    if i == j {
        return Err(Error::InvalidEdge { i, j, reason: "self-loop".into() });
    }
    if i >= n || j >= n {
        return Err(Error::InvalidEdge { i, j, reason: format!("node out of range 0..{n}") });
    }
    let resolved = resolve_terms(terms, table)?;
    Ok(resolved.iter().map(|t| change_resolved(graph, t, i, j)).collect())
}
