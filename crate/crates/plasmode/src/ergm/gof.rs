//! Goodness-of-fit: compare a reference graph's degree, edgewise and
//! dyadwise shared-partner distributions against simulated quantile bands.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{degree_distribution, shared_partner_counts, Graph};
use crate::table::NodeTable;
use crate::util::quantile_sorted;

use super::{sample_many, ErgmModel, SamplerConfig};

/// Dense count vectors, index = degree or shared-partner count.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GofStats {
    pub degree: Vec<usize>,
    pub esp: Vec<usize>,
    pub dsp: Vec<usize>,
}

impl GofStats {
    fn of(graph: &Graph) -> Self {
        let degree = dense(&degree_distribution(graph));
        let (ep, dp) = shared_partner_counts(graph);
        GofStats { degree, esp: dense(&ep), dsp: dense(&dp) }
    }
}

fn dense(sparse: &std::collections::BTreeMap<usize, usize>) -> Vec<usize> {
    let len = sparse.keys().next_back().map_or(0, |k| k + 1);
    let mut out = vec![0; len];
    for (&k, &v) in sparse {
        out[k] = v;
    }
    out
}

/// Simulated band for one bin of one statistic family.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GofBand {
    pub statistic: String,
    pub bin: usize,
    pub observed: usize,
    pub q05: f64,
    pub median: f64,
    pub q95: f64,
    pub mean: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GofReport {
    pub n_sims: usize,
    pub observed: GofStats,
    pub simulated: Vec<GofStats>,
    pub bands: Vec<GofBand>,
}

impl GofReport {
    /// Fraction of occupied bins (observed count > 0) whose observation
    /// falls inside the simulated [q05, q95] band.
    pub fn envelope_coverage(&self) -> f64 {
        let occupied: Vec<&GofBand> = self.bands.iter().filter(|b| b.observed > 0).collect();
        if occupied.is_empty() {
            return 1.0;
        }
        let inside = occupied
            .iter()
            .filter(|b| b.q05 <= b.observed as f64 && b.observed as f64 <= b.q95)
            .count();
        inside as f64 / occupied.len() as f64
    }
}

/// Simulate `n_sims` graphs from `model` and band the reference graph's
/// distributions against them.
pub fn gof(
    model: &ErgmModel,
    table: &NodeTable,
    reference: &Graph,
    n_sims: usize,
    cfg: &SamplerConfig,
) -> Result<GofReport> {
    if n_sims == 0 {
        return Err(Error::Domain("gof needs at least one simulation".into()));
    }
    let observed = GofStats::of(reference);
    let simulated: Vec<GofStats> = sample_many(model, table, reference.n_nodes(), cfg, n_sims)?
        .iter()
        .map(GofStats::of)
        .collect();

    let mut bands = Vec::new();
    for (name, pick) in [
        ("degree", (|s: &GofStats| &s.degree) as fn(&GofStats) -> &Vec<usize>),
        ("esp", |s| &s.esp),
        ("dsp", |s| &s.dsp),
    ] {
        let obs = pick(&observed);
        let width = simulated.iter().map(|s| pick(s).len()).max().unwrap_or(0).max(obs.len());
        for bin in 0..width {
            let mut counts: Vec<f64> = simulated
                .iter()
                .map(|s| pick(s).get(bin).copied().unwrap_or(0) as f64)
                .collect();
            counts.sort_by(f64::total_cmp);
            bands.push(GofBand {
                statistic: name.into(),
                bin,
                observed: obs.get(bin).copied().unwrap_or(0),
                q05: quantile_sorted(&counts, 0.05),
                median: quantile_sorted(&counts, 0.5),
                q95: quantile_sorted(&counts, 0.95),
                mean: counts.iter().sum::<f64>() / counts.len() as f64,
            });
        }
    }
    Ok(GofReport { n_sims, observed, simulated, bands })
}
