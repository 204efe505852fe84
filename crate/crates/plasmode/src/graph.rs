//! Undirected simple graphs with sorted adjacency lists, plus the
//! summary statistics used for generation targets and goodness-of-fit:
//! density, degree spread, transitivity, categorical assortativity,
//! and degree / shared-partner distributions.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Simple undirected graph on nodes `0..n`; no loops, no multi-edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    neighbors: Vec<Vec<u32>>,
    n_edges: usize,
}

impl Graph {
    pub fn empty(n_nodes: usize) -> Self {
        Graph { neighbors: vec![Vec::new(); n_nodes], n_edges: 0 }
    }

    /// Build from a dyad list; each pair must satisfy `i < j < n_nodes`
    /// and appear once.
    pub fn from_edges(n_nodes: usize, edges: &[(u32, u32)]) -> Result<Self> {
        let mut g = Graph::empty(n_nodes);
        for &(i, j) in edges {
            g.check_dyad(i, j)?;
            if i >= j {
                return Err(Error::InvalidEdge { i, j, reason: "want i < j".into() });
            }
            if !g.add_edge(i, j) {
                return Err(Error::InvalidEdge { i, j, reason: "duplicate edge".into() });
            }
        }
        Ok(g)
    }

    fn check_dyad(&self, i: u32, j: u32) -> Result<()> {
        let n = self.n_nodes() as u32;
        if i == j {
            return Err(Error::InvalidEdge { i, j, reason: "self-loop".into() });
        }
        if i >= n || j >= n {
            return Err(Error::InvalidEdge { i, j, reason: format!("node out of range 0..{n}") });
        }
        Ok(())
    }

    pub fn n_nodes(&self) -> usize {
        self.neighbors.len()
    }

    pub fn n_edges(&self) -> usize {
        self.n_edges
    }

    /// Number of unordered node pairs.
    pub fn n_dyads(&self) -> usize {
        let n = self.n_nodes();
        n * n.saturating_sub(1) / 2
    }

    pub fn degree(&self, i: u32) -> usize {
        self.neighbors[i as usize].len()
    }

    /// Sorted neighbor list of `i`.
    pub fn neighbors(&self, i: u32) -> &[u32] {
        &self.neighbors[i as usize]
    }

    pub fn has_edge(&self, i: u32, j: u32) -> bool {
        i != j && self.neighbors[i as usize].binary_search(&j).is_ok()
    }

    /// Insert edge `{i, j}`; returns false if it was already present.
    /// Callers must pass a valid dyad (distinct, in range).
    pub fn add_edge(&mut self, i: u32, j: u32) -> bool {
        debug_assert!(self.check_dyad(i, j).is_ok());
        match self.neighbors[i as usize].binary_search(&j) {
            Ok(_) => false,
            Err(pos_i) => {
                self.neighbors[i as usize].insert(pos_i, j);
                let pos_j = self.neighbors[j as usize].binary_search(&i).unwrap_err();
                self.neighbors[j as usize].insert(pos_j, i);
                self.n_edges += 1;
                true
            }
        }
    }

    /// Remove edge `{i, j}`; returns false if it was absent.
    pub fn remove_edge(&mut self, i: u32, j: u32) -> bool {
        debug_assert!(self.check_dyad(i, j).is_ok());
        match self.neighbors[i as usize].binary_search(&j) {
            Err(_) => false,
            Ok(pos_i) => {
                self.neighbors[i as usize].remove(pos_i);
                let pos_j = self.neighbors[j as usize].binary_search(&i).unwrap();
                self.neighbors[j as usize].remove(pos_j);
                self.n_edges -= 1;
                true
            }
        }
    }

    /// Flip the state of dyad `{i, j}`; returns true if the edge now exists.
    pub fn toggle(&mut self, i: u32, j: u32) -> bool {
        if self.add_edge(i, j) {
            true
        } else {
            self.remove_edge(i, j);
            false
        }
    }

    /// Edges as sorted `(i, j)` pairs with `i < j`.
    pub fn edges(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::with_capacity(self.n_edges);
        for (i, nbrs) in self.neighbors.iter().enumerate() {
            let i = i as u32;
            for &j in nbrs.iter().filter(|&&j| j > i) {
                out.push((i, j));
            }
        }
        out
    }

    /// Number of common neighbors of `i` and `j`.
    pub fn shared_partners(&self, i: u32, j: u32) -> usize {
        self.shared_partners_excluding(i, j, None)
    }

    /// Common neighbors of `i` and `j`, skipping `excl` if given.
    pub fn shared_partners_excluding(&self, i: u32, j: u32, excl: Option<u32>) -> usize {
        sorted_intersection(self.neighbors(i), self.neighbors(j))
            .filter(|&u| Some(u) != excl)
            .count()
    }

    /// The common neighbors of `i` and `j` as a list.
    pub fn shared_partner_list(&self, i: u32, j: u32) -> Vec<u32> {
        sorted_intersection(self.neighbors(i), self.neighbors(j)).collect()
    }
}

fn sorted_intersection<'a>(a: &'a [u32], b: &'a [u32]) -> impl Iterator<Item = u32> + 'a {
    let mut ai = 0;
    let mut bi = 0;
    std::iter::from_fn(move || {
        while ai < a.len() && bi < b.len() {
            match a[ai].cmp(&b[bi]) {
                std::cmp::Ordering::Less => ai += 1,
                std::cmp::Ordering::Greater => bi += 1,
                std::cmp::Ordering::Equal => {
                    let v = a[ai];
                    ai += 1;
                    bi += 1;
                    return Some(v);
                }
            }
        }
        None
    })
}

/// Whole-graph descriptive statistics. Ratios with an empty denominator
/// (transitivity with no connected triple, assortativity with a single
/// category) are `None`, never NaN.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NetworkSummary {
    pub n_nodes: usize,
    pub n_edges: usize,
    pub density: f64,
    pub mean_degree: f64,
    pub sd_degree: f64,
    pub transitivity: Option<f64>,
    pub assortativity: Option<f64>,
}

/// Summarize a graph; `attr` (categorical codes, one per node) feeds the
/// assortativity coefficient. Graphs with fewer than 2 nodes have no
/// density and are rejected.
pub fn summarize(graph: &Graph, attr: Option<&[u32]>) -> Result<NetworkSummary> {
    let n = graph.n_nodes();
    if n < 2 {
        return Err(Error::DegenerateGraph(n));
    }
    let degrees: Vec<f64> = (0..n as u32).map(|i| graph.degree(i) as f64).collect();
    let mean = degrees.iter().sum::<f64>() / n as f64;
    let var = degrees.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;

    let mut triangles3 = 0usize; // 3 * triangle count
    for (i, j) in graph.edges() {
        triangles3 += graph.shared_partners(i, j);
    }
    let triples: usize = (0..n as u32).map(|i| binom2(graph.degree(i))).sum();
    let transitivity = (triples > 0).then(|| triangles3 as f64 / triples as f64);

    let assortativity = match attr {
        Some(codes) => {
            if codes.len() != n {
                return Err(Error::SizeMismatch { rows: codes.len(), nodes: n });
            }
            assortativity(graph, codes)
        }
        None => None,
    };

    Ok(NetworkSummary {
        n_nodes: n,
        n_edges: graph.n_edges(),
        density: graph.n_edges() as f64 / graph.n_dyads() as f64,
        mean_degree: mean,
        sd_degree: var.sqrt(),
        transitivity,
        assortativity,
    })
}

fn binom2(d: usize) -> usize {
    d * d.saturating_sub(1) / 2
}

/// Categorical assortativity: with `f[a][b]` the fraction of edge ends
/// joining category `a` to `b` (each edge counted in both directions),
/// `r = (sum f_aa - sum f_a+ f_+a) / (1 - sum f_a+ f_+a)`. `None` when
/// there are no edges or everything sits in one category.
pub fn assortativity(graph: &Graph, codes: &[u32]) -> Option<f64> {
    if graph.n_edges() == 0 {
        return None;
    }
    let k = (*codes.iter().max()? + 1) as usize;
    let mut f = vec![vec![0.0; k]; k];
    let total = (2 * graph.n_edges()) as f64;
    for (i, j) in graph.edges() {
        let (a, b) = (codes[i as usize] as usize, codes[j as usize] as usize);
        f[a][b] += 1.0 / total;
        f[b][a] += 1.0 / total;
    }
    let trace: f64 = (0..k).map(|a| f[a][a]).sum();
    let margins: Vec<f64> = (0..k).map(|a| f[a].iter().sum::<f64>()).collect();
    let sq: f64 = margins.iter().map(|m| m * m).sum();
    let denom = 1.0 - sq;
    (denom.abs() > 1e-12).then(|| (trace - sq) / denom)
}

/// Node count per degree, sparse (absent degrees omitted).
pub fn degree_distribution(graph: &Graph) -> BTreeMap<usize, usize> {
    let mut out = BTreeMap::new();
    for i in 0..graph.n_nodes() as u32 {
        *out.entry(graph.degree(i)).or_insert(0) += 1;
    }
    out
}

/// Edgewise (EP) and dyadwise (DP) shared-partner counts: `EP[k]` is the
/// number of edges whose endpoints have exactly `k` common neighbors,
/// `DP[k]` the same over all dyads. Zero-count bins are omitted.
pub fn shared_partner_counts(
    graph: &Graph,
) -> (BTreeMap<usize, usize>, BTreeMap<usize, usize>) {
    let mut ep = BTreeMap::new();
    let mut dp = BTreeMap::new();
    let n = graph.n_nodes() as u32;
    for i in 0..n {
        for j in (i + 1)..n {
            let k = graph.shared_partners(i, j);
            *dp.entry(k).or_insert(0) += 1;
            if graph.has_edge(i, j) {
                *ep.entry(k).or_insert(0) += 1;
            }
        }
    }
    (ep, dp)
}

/// Parse an edge list: one `i j` pair per line (0-based, `i < j`),
/// blank lines and `#` comments skipped.
pub fn parse_edge_list<R: BufRead>(reader: R) -> Result<Vec<(u32, u32)>> {
    let mut edges = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let (a, b) = (it.next(), it.next());
        match (a, b, it.next()) {
            (Some(a), Some(b), None) => {
                let i: u32 = a.parse().map_err(|_| Error::Parse {
                    line: idx + 1,
                    reason: format!("bad node id {a:?}"),
                })?;
                let j: u32 = b.parse().map_err(|_| Error::Parse {
                    line: idx + 1,
                    reason: format!("bad node id {b:?}"),
                })?;
                edges.push((i, j));
            }
            _ => {
                return Err(Error::Parse {
                    line: idx + 1,
                    reason: "want exactly two node ids".into(),
                })
            }
        }
    }
    Ok(edges)
}

/// Read a graph from an edge-list file; node count defaults to
/// `max id + 1` when not given.
pub fn read_edge_list<P: AsRef<Path>>(path: P, n_nodes: Option<usize>) -> Result<Graph> {
    let file = std::fs::File::open(path)?;
    let edges = parse_edge_list(std::io::BufReader::new(file))?;
    let n = n_nodes
        .unwrap_or_else(|| edges.iter().map(|&(_, j)| j as usize + 1).max().unwrap_or(0));
    Graph::from_edges(n, &edges)
}

/// Write the sorted edge list, one `i j` pair per line.
pub fn write_edge_list<W: Write>(graph: &Graph, mut writer: W) -> Result<()> {
    for (i, j) in graph.edges() {
        writeln!(writer, "{i} {j}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k3() -> Graph {
        Graph::from_edges(3, &[(0, 1), (0, 2), (1, 2)]).unwrap()
    }

    #[test]
    fn triangle_summary() {
        let s = summarize(&k3(), None).unwrap();
        assert_eq!(s.n_edges, 3);
        assert_eq!(s.density, 1.0);
        assert_eq!(s.mean_degree, 2.0);
        assert_eq!(s.sd_degree, 0.0);
        assert_eq!(s.transitivity, Some(1.0));
        assert_eq!(s.assortativity, None);
    }

    #[test]
    fn path_summary() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let s = summarize(&g, None).unwrap();
        assert!((s.density - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.transitivity, Some(0.0));
        assert!((s.mean_degree - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn four_cycle_alternating_attr_is_perfectly_disassortative() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        let r = assortativity(&g, &[0, 1, 0, 1]).unwrap();
        assert!((r - (-1.0)).abs() < 1e-12);
        // single category: denominator vanishes
        assert_eq!(assortativity(&g, &[0, 0, 0, 0]), None);
    }

    #[test]
    fn matching_has_undefined_transitivity() {
        let g = Graph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        assert_eq!(summarize(&g, None).unwrap().transitivity, None);
    }

    #[test]
    fn tiny_graphs_are_rejected() {
        assert!(summarize(&Graph::empty(1), None).is_err());
        assert!(summarize(&Graph::empty(0), None).is_err());
    }

    #[test]
    fn distributions() {
        assert_eq!(degree_distribution(&k3()), BTreeMap::from([(2, 3)]));
        let (ep, dp) = shared_partner_counts(&k3());
        assert_eq!(ep, BTreeMap::from([(1, 3)]));
        assert_eq!(dp, BTreeMap::from([(1, 3)]));

        let empty = Graph::empty(3);
        let (ep, dp) = shared_partner_counts(&empty);
        assert!(ep.is_empty());
        assert_eq!(dp, BTreeMap::from([(0, 3)]));
    }

    #[test]
    fn transitivity_matches_shared_partner_identity() {
        // triangles*3 == sum_k k*EP_k for any graph
        let g = Graph::from_edges(
            6,
            &[(0, 1), (0, 2), (1, 2), (1, 3), (2, 3), (3, 4), (0, 4), (4, 5)],
        )
        .unwrap();
        let (ep, _) = shared_partner_counts(&g);
        let from_ep: usize = ep.iter().map(|(k, c)| k * c).sum();
        let direct: usize = g.edges().iter().map(|&(i, j)| g.shared_partners(i, j)).sum();
        assert_eq!(from_ep, direct);
        let s = summarize(&g, None).unwrap();
        let triples: usize = (0..6u32).map(|i| binom2(g.degree(i))).sum();
        assert!((s.transitivity.unwrap() - direct as f64 / triples as f64).abs() < 1e-15);
    }

    #[test]
    fn toggle_is_an_involution() {
        let mut g = k3();
        let orig = g.clone();
        g.toggle(0, 1);
        assert!(!g.has_edge(0, 1));
        assert_eq!(g.n_edges(), 2);
        g.toggle(0, 1);
        assert_eq!(g, orig);
    }

    #[test]
    fn edge_validation() {
        assert!(Graph::from_edges(3, &[(0, 0)]).is_err());
        assert!(Graph::from_edges(3, &[(1, 0)]).is_err());
        assert!(Graph::from_edges(3, &[(0, 3)]).is_err());
        assert!(Graph::from_edges(3, &[(0, 1), (0, 1)]).is_err());
    }

    #[test]
    fn edge_list_round_trip() {
        let g = Graph::from_edges(5, &[(0, 3), (1, 2), (2, 4)]).unwrap();
        let mut buf = Vec::new();
        write_edge_list(&g, &mut buf).unwrap();
        let edges = parse_edge_list(&buf[..]).unwrap();
        assert_eq!(Graph::from_edges(5, &edges).unwrap(), g);
    }

    #[test]
    fn edge_list_parse_errors() {
        assert!(parse_edge_list("0 1 2\n".as_bytes()).is_err());
        assert!(parse_edge_list("0 x\n".as_bytes()).is_err());
        assert!(parse_edge_list("0\n".as_bytes()).is_err());
        assert_eq!(parse_edge_list("# c\n\n0 1\n".as_bytes()).unwrap(), vec![(0, 1)]);
    }

    #[test]
    fn summary_is_relabel_invariant() {
        let g = Graph::from_edges(6, &[(0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (2, 5)]).unwrap();
        let perm: [u32; 6] = [3, 0, 5, 1, 4, 2];
        let edges: Vec<(u32, u32)> = g
            .edges()
            .iter()
            .map(|&(i, j)| {
                let (a, b) = (perm[i as usize], perm[j as usize]);
                (a.min(b), a.max(b))
            })
            .collect();
        let h = Graph::from_edges(6, &edges).unwrap();
        let (sg, sh) = (summarize(&g, None).unwrap(), summarize(&h, None).unwrap());
        assert_eq!(sg.density, sh.density);
        assert_eq!(sg.transitivity, sh.transitivity);
        assert!((sg.sd_degree - sh.sd_degree).abs() < 1e-12);
        assert_eq!(degree_distribution(&g), degree_distribution(&h));
        let (ep_g, dp_g) = shared_partner_counts(&g);
        let (ep_h, dp_h) = shared_partner_counts(&h);
        assert_eq!(ep_g, ep_h);
        assert_eq!(dp_g, dp_h);
    }
}
