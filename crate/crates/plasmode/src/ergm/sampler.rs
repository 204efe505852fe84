//! Metropolis–Hastings sampling of graphs from an ERGM.
//!
//! The default proposal is tie/no-tie: a fair coin picks a uniform
//! existing edge or a uniform empty dyad, with the matching Hastings
//! correction; a branch with nothing to pick is a no-op step. The
//! uniform-dyad proposal is symmetric (no correction) and exists mainly
//! for detailed-balance checks.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::table::NodeTable;

use super::stats::{change_resolved, ResolvedTerm};
use super::{resolve_terms, ErgmModel};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Proposal {
    #[default]
    TieNoTie,
    UniformDyad,
}

/// Chain controls. `burn_in` defaults to `20 * n_dyads` proposals and
/// `thin` (proposals between retained draws) to `n_dyads`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SamplerConfig {
    #[serde(default)]
    pub burn_in: Option<u64>,
    #[serde(default)]
    pub thin: Option<u64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub proposal: Proposal,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig { burn_in: None, thin: None, seed: 0, proposal: Proposal::TieNoTie }
    }
}

impl SamplerConfig {
    pub fn with_seed(seed: u64) -> Self {
        SamplerConfig { seed, ..Default::default() }
    }

    fn burn_in_for(&self, n_dyads: usize) -> u64 {
        self.burn_in.unwrap_or(20 * n_dyads as u64)
    }

    fn thin_for(&self, n_dyads: usize) -> u64 {
        self.thin.unwrap_or(n_dyads as u64).max(1)
    }
}

/// A running Metropolis chain over graphs on a fixed node set.
pub struct Sampler {
    graph: Graph,
    edges: Vec<(u32, u32)>,
    edge_pos: HashMap<(u32, u32), usize>,
    terms: Vec<ResolvedTerm>,
    theta: Vec<f64>,
    proposal: Proposal,
    rng: ChaCha12Rng,
    n_dyads: usize,
    proposals: u64,
    accepted: u64,
}

impl Sampler {
    /// Start a chain at the empty graph.
    pub fn new(
        model: &ErgmModel,
        table: &NodeTable,
        n_nodes: usize,
        proposal: Proposal,
        seed: u64,
    ) -> Result<Self> {
        model.validate()?;
        if n_nodes < 2 {
            return Err(Error::DegenerateGraph(n_nodes));
        }
        if table.n_rows() != n_nodes {
            return Err(Error::SizeMismatch { rows: table.n_rows(), nodes: n_nodes });
        }
        let terms = resolve_terms(&model.terms, table)?;
        let graph = Graph::empty(n_nodes);
        let n_dyads = graph.n_dyads();
        Ok(Sampler {
            graph,
            edges: Vec::new(),
            edge_pos: HashMap::new(),
            terms,
            theta: model.theta.clone(),
            proposal,
            rng: ChaCha12Rng::seed_from_u64(seed),
            n_dyads,
            proposals: 0,
            accepted: 0,
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn into_graph(self) -> Graph {
        self.graph
    }

    pub fn proposals(&self) -> u64 {
        self.proposals
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposals as f64
        }
    }

    /// Run one proposal (possibly a no-op when the chosen branch is empty).
    pub fn step(&mut self) -> Result<()> {
        self.proposals += 1;
        match self.proposal {
            Proposal::TieNoTie => {
                let e = self.edges.len() as f64;
                let nd = self.n_dyads as f64;
                if self.rng.random_bool(0.5) {
                    if self.edges.is_empty() {
                        return Ok(());
                    }
                    let idx = self.rng.random_range(0..self.edges.len());
                    let (i, j) = self.edges[idx];
                    self.propose_off(i, j, (e / (nd - e + 1.0)).ln())
                } else {
                    if self.edges.len() == self.n_dyads {
                        return Ok(());
                    }
                    let (i, j) = self.random_non_edge();
                    self.propose_on(i, j, ((nd - e) / (e + 1.0)).ln())
                }
            }
            Proposal::UniformDyad => {
                let (i, j) = self.random_dyad();
                if self.graph.has_edge(i, j) {
                    self.propose_off(i, j, 0.0)
                } else {
                    self.propose_on(i, j, 0.0)
                }
            }
        }
    }

    pub fn run(&mut self, proposals: u64) -> Result<()> {
        for _ in 0..proposals {
            self.step()?;
        }
        Ok(())
    }

    fn weighted_change(&self, i: u32, j: u32) -> Result<f64> {
        let mut s = 0.0;
        for (term, theta) in self.terms.iter().zip(&self.theta) {
            s += theta * change_resolved(&self.graph, term, i, j);
        }
        if !s.is_finite() {
            return Err(Error::SamplerFault(format!(
                "non-finite weighted change statistic at dyad ({i}, {j})"
            )));
        }
        Ok(s)
    }

    fn propose_on(&mut self, i: u32, j: u32, correction: f64) -> Result<()> {
        let log_ratio = self.weighted_change(i, j)? + correction;
        if self.accept(log_ratio) {
            self.insert_edge(i, j);
            self.accepted += 1;
        }
        Ok(())
    }

    fn propose_off(&mut self, i: u32, j: u32, correction: f64) -> Result<()> {
        let log_ratio = -self.weighted_change(i, j)? + correction;
        if self.accept(log_ratio) {
            self.delete_edge(i, j);
            self.accepted += 1;
        }
        Ok(())
    }

    fn accept(&mut self, log_ratio: f64) -> bool {
        log_ratio >= 0.0 || self.rng.random::<f64>().ln() < log_ratio
    }

    fn insert_edge(&mut self, i: u32, j: u32) {
        self.graph.add_edge(i, j);
        self.edge_pos.insert((i, j), self.edges.len());
        self.edges.push((i, j));
    }

    fn delete_edge(&mut self, i: u32, j: u32) {
        self.graph.remove_edge(i, j);
        let idx = self.edge_pos.remove(&(i, j)).expect("edge is tracked");
        let last = self.edges.pop().expect("edge list non-empty");
        if idx < self.edges.len() {
            self.edges[idx] = last;
            self.edge_pos.insert(last, idx);
        }
    }

    fn random_dyad(&mut self) -> (u32, u32) {
        let n = self.graph.n_nodes() as u32;
        loop {
            let i = self.rng.random_range(0..n);
            let j = self.rng.random_range(0..n);
            if i != j {
                return (i.min(j), i.max(j));
            }
        }
    }

    fn random_non_edge(&mut self) -> (u32, u32) {
        for _ in 0..10_000 {
            let (i, j) = self.random_dyad();
            if !self.graph.has_edge(i, j) {
                return (i, j);
            }
        }
        // Nearly complete graph: fall back to an exact scan. The caller
        // guarantees at least one empty dyad exists.
        let mut t = self.rng.random_range(0..self.n_dyads - self.edges.len());
        let n = self.graph.n_nodes() as u32;
        for i in 0..n {
            for j in (i + 1)..n {
                if !self.graph.has_edge(i, j) {
                    if t == 0 {
                        return (i, j);
                    }
                    t -= 1;
                }
            }
        }
        unreachable!("an empty dyad must exist")
    }
}

/// Draw one graph: burn the chain in, return its state.
pub fn simulate(
    model: &ErgmModel,
    table: &NodeTable,
    n_nodes: usize,
    cfg: &SamplerConfig,
) -> Result<Graph> {
    let mut sampler = Sampler::new(model, table, n_nodes, cfg.proposal, cfg.seed)?;
    sampler.run(cfg.burn_in_for(sampler.n_dyads))?;
    Ok(sampler.into_graph())
}

/// Draw `n_draws` graphs from one chain: burn-in, then a snapshot every
/// `thin` proposals.
pub fn sample_many(
    model: &ErgmModel,
    table: &NodeTable,
    n_nodes: usize,
    cfg: &SamplerConfig,
    n_draws: usize,
) -> Result<Vec<Graph>> {
    let mut sampler = Sampler::new(model, table, n_nodes, cfg.proposal, cfg.seed)?;
    let thin = cfg.thin_for(sampler.n_dyads);
    sampler.run(cfg.burn_in_for(sampler.n_dyads))?;
    let mut draws = Vec::with_capacity(n_draws);
    for _ in 0..n_draws {
        sampler.run(thin)?;
        draws.push(sampler.graph().clone());
    }
    Ok(draws)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ergm::TermSpec;
    use crate::table::Role;
    use crate::util::{mean, sigmoid};

    fn bare_table(n: usize) -> NodeTable {
        NodeTable::new(n)
    }

    fn edges_model(theta: f64) -> ErgmModel {
        ErgmModel::new(vec![TermSpec::Edges], vec![theta]).unwrap()
    }

    #[test]
    fn edges_only_density_matches_bernoulli_limit() {
        // theta = -2 makes dyads iid Bernoulli(sigmoid(-2))
        let model = edges_model(-2.0);
        let table = bare_table(40);
        let cfg = SamplerConfig::with_seed(42);
        let draws = sample_many(&model, &table, 40, &cfg, 50).unwrap();
        let densities: Vec<f64> =
            draws.iter().map(|g| g.n_edges() as f64 / g.n_dyads() as f64).collect();
        let target = sigmoid(-2.0);
        assert!(
            (mean(&densities) - target).abs() < 0.02,
            "mean density {} vs {}",
            mean(&densities),
            target
        );
    }

    #[test]
    fn uniform_dyad_proposal_agrees() {
        let model = edges_model(-1.0);
        let table = bare_table(30);
        let cfg = SamplerConfig {
            proposal: Proposal::UniformDyad,
            seed: 7,
            ..Default::default()
        };
        let draws = sample_many(&model, &table, 30, &cfg, 40).unwrap();
        let densities: Vec<f64> =
            draws.iter().map(|g| g.n_edges() as f64 / g.n_dyads() as f64).collect();
        assert!((mean(&densities) - sigmoid(-1.0)).abs() < 0.03);
    }

    #[test]
    fn same_seed_reproduces_same_graph() {
        let model = ErgmModel::new(
            vec![TermSpec::Edges, TermSpec::GwEsp { decay: 0.8 }],
            vec![-2.5, 0.4],
        )
        .unwrap();
        let table = bare_table(25);
        let cfg = SamplerConfig::with_seed(99);
        let a = simulate(&model, &table, 25, &cfg).unwrap();
        let b = simulate(&model, &table, 25, &cfg).unwrap();
        assert_eq!(a, b);
        let c = simulate(&model, &table, 25, &SamplerConfig::with_seed(100)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn strong_positive_theta_saturates() {
        // exercises the no-op/complete-graph branch without hanging
        let model = edges_model(6.0);
        let table = bare_table(8);
        let cfg = SamplerConfig { burn_in: Some(5_000), ..SamplerConfig::with_seed(5) };
        let g = simulate(&model, &table, 8, &cfg).unwrap();
        assert!(g.n_edges() as f64 / g.n_dyads() as f64 > 0.95);
    }

    #[test]
    fn input_validation() {
        let model = edges_model(-1.0);
        assert!(Sampler::new(&model, &bare_table(1), 1, Proposal::TieNoTie, 0).is_err());
        assert!(Sampler::new(&model, &bare_table(5), 6, Proposal::TieNoTie, 0).is_err());
    }

    #[test]
    fn non_finite_change_statistic_faults() {
        let mut table = NodeTable::new(6);
        table
            .push_numeric("v", Role::Covariate, vec![0.0, f64::INFINITY, 0.0, 0.0, 0.0, 0.0])
            .unwrap();
        let model =
            ErgmModel::new(vec![TermSpec::AbsDiff { attr: "v".into() }], vec![0.5]).unwrap();
        let mut s = Sampler::new(&model, &table, 6, Proposal::UniformDyad, 1).unwrap();
        let err = s.run(200).unwrap_err();
        assert!(matches!(err, Error::SamplerFault(_)));
    }
}
