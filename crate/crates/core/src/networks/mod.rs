//! Export-similarity network (maximum spanning tree plus a correlation
//! threshold), benchmark-partner network, and summary statistics.

mod benchmark;
pub mod export;
mod stats;

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::similarity::CorrelationMatrix;

pub use benchmark::{
    benchmark_network, improvement_potential, BenchmarkConfig, BenchmarkEdge, BenchmarkNetwork,
    CountryGain, ImprovementSummary, PartnerRule, RELATIVE_GAIN_FLOOR,
};
pub use stats::{group_stats, GroupStats, GroupSummary};

#[derive(Debug, Error, PartialEq)]
pub enum NetworkError {
    #[error("network needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("target average degree {target} unreachable: {reason}")]
    TargetUnreachable { target: f64, reason: String },
    #[error("no REPR score for {0}")]
    MissingRepr(String),
    #[error("benchmark network has no nodes")]
    NoPartners,
    #[error("invalid threshold {0}")]
    InvalidThreshold(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    /// Maximum-spanning-tree backbone edge.
    Tree,
    /// Added because its correlation reaches the threshold.
    Threshold,
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeKind::Tree => "tree",
            EdgeKind::Threshold => "threshold",
        })
    }
}

/// Undirected edge; `a < b` lexicographically.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilarityEdge {
    pub a: String,
    pub b: String,
    pub rho: f64,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityNetwork {
    pub nodes: Vec<String>,
    pub edges: Vec<SimilarityEdge>,
    /// Correlation threshold actually applied (`+∞` when only the tree is kept).
    pub threshold: f64,
}

impl SimilarityNetwork {
    pub fn average_degree(&self) -> f64 {
        average_degree(self.nodes.len(), self.edges.len())
    }

    pub fn tree_edges(&self) -> impl Iterator<Item = &SimilarityEdge> {
        self.edges.iter().filter(|e| e.kind == EdgeKind::Tree)
    }
}

pub fn average_degree(nodes: usize, edges: usize) -> f64 {
    if nodes == 0 {
        0.0
    } else {
        2.0 * edges as f64 / nodes as f64
    }
}

/// How the correlation threshold is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdSpec {
    Fixed(f64),
    /// Pick the largest threshold whose network has average degree within ±0.5 of the target.
    TargetDegree(f64),
}

impl Default for ThresholdSpec {
    fn default() -> Self {
        ThresholdSpec::TargetDegree(4.0)
    }
}

/// Off-diagonal pair `(i, j)`, `i < j` in matrix order, with its weight.
#[derive(Debug, Clone, Copy)]
struct Pair {
    i: usize,
    j: usize,
    w: f64,
}

/// Pairs sorted by weight descending, ties by the lexicographic label pair.
fn sorted_pairs(corr: &CorrelationMatrix) -> Vec<Pair> {
    let n = corr.len();
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            pairs.push(Pair { i, j, w: corr.values[(i, j)] });
        }
    }
    let key = |p: &Pair| {
        let (a, b) = (&corr.countries[p.i], &corr.countries[p.j]);
        if a <= b {
            (a.clone(), b.clone())
        } else {
            (b.clone(), a.clone())
        }
    };
    pairs.sort_by(|x, y| y.w.total_cmp(&x.w).then_with(|| key(x).cmp(&key(y))));
    pairs
}

struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), rank: vec![0; n] }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            Ordering::Less => self.parent[ra] = rb,
            Ordering::Greater => self.parent[rb] = ra,
            Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

fn edge(corr: &CorrelationMatrix, p: &Pair, kind: EdgeKind) -> SimilarityEdge {
    let (x, y) = (&corr.countries[p.i], &corr.countries[p.j]);
    let (a, b) = if x <= y { (x, y) } else { (y, x) };
    SimilarityEdge { a: a.clone(), b: b.clone(), rho: p.w, kind }
}

/// Kruskal on the complete graph, heaviest edges first.
fn kruskal(corr: &CorrelationMatrix, pairs: &[Pair]) -> Vec<bool> {
    let mut ds = DisjointSet::new(corr.len());
    let mut in_tree = vec![false; pairs.len()];
    let mut count = 0;
    for (k, p) in pairs.iter().enumerate() {
        if count + 1 == corr.len() {
            break;
        }
        if ds.union(p.i, p.j) {
            in_tree[k] = true;
            count += 1;
        }
    }
    in_tree
}

/// Maximum spanning tree of the complete correlation graph.
pub fn max_spanning_tree(corr: &CorrelationMatrix) -> Result<Vec<SimilarityEdge>, NetworkError> {
    if corr.len() < 2 {
        return Err(NetworkError::TooFewNodes(corr.len()));
    }
    let pairs = sorted_pairs(corr);
    let in_tree = kruskal(corr, &pairs);
    Ok(pairs
        .iter()
        .zip(in_tree)
        .filter(|(_, t)| *t)
        .map(|(p, _)| edge(corr, p, EdgeKind::Tree))
        .collect())
}

/// Spanning tree plus every other edge with `ρ ≥ τ`.
pub fn threshold_network(corr: &CorrelationMatrix, spec: ThresholdSpec) -> Result<SimilarityNetwork, NetworkError> {
    let n = corr.len();
    if n < 2 {
        return Err(NetworkError::TooFewNodes(n));
    }
    let pairs = sorted_pairs(corr);
    let in_tree = kruskal(corr, &pairs);
    // Non-tree pairs keep the descending-weight order of `pairs`.
    let extra: Vec<&Pair> = pairs.iter().zip(&in_tree).filter(|(_, t)| !**t).map(|(p, _)| p).collect();

    let threshold = match spec {
        ThresholdSpec::Fixed(t) => {
            if t.is_nan() {
                return Err(NetworkError::InvalidThreshold(t));
            }
            t
        }
        ThresholdSpec::TargetDegree(target) => choose_threshold(n, &extra, target)?,
    };

    let added = extra.partition_point(|p| p.w >= threshold);
    let mut edges: Vec<SimilarityEdge> = pairs
        .iter()
        .zip(&in_tree)
        .filter(|(_, t)| **t)
        .map(|(p, _)| edge(corr, p, EdgeKind::Tree))
        .chain(extra[..added].iter().map(|p| edge(corr, p, EdgeKind::Threshold)))
        .collect();
    edges.sort_by(|x, y| {
        y.rho
            .total_cmp(&x.rho)
            .then_with(|| (&x.a, &x.b).cmp(&(&y.a, &y.b)))
    });

    let mut nodes = corr.countries.clone();
    nodes.sort();
    Ok(SimilarityNetwork { nodes, edges, threshold })
}

fn choose_threshold(n: usize, extra: &[&Pair], target: f64) -> Result<f64, NetworkError> {
    if !target.is_finite() || target < 0.0 {
        return Err(NetworkError::InvalidThreshold(target));
    }
    let (lo, hi) = (target - 0.5, target + 0.5);
    let degree = |added: usize| average_degree(n, n - 1 + added);
    let tree_only = degree(0);
    if tree_only > hi {
        return Err(NetworkError::TargetUnreachable {
            target,
            reason: format!("spanning tree alone has average degree {tree_only:.4}"),
        });
    }
    if tree_only >= lo {
        return Ok(f64::INFINITY);
    }

    // Distinct weights, descending; adding every edge with weight ≥ weights[k]
    // includes the prefix of `extra` up to the end of that weight's run.
    let mut weights: Vec<f64> = extra.iter().map(|p| p.w).collect();
    weights.dedup();
    let added_at = |k: usize| extra.partition_point(|p| p.w >= weights[k]);
    let k = (0..weights.len()).collect::<Vec<_>>().partition_point(|&k| degree(added_at(k)) < lo);
    if k == weights.len() {
        return Err(NetworkError::TargetUnreachable {
            target,
            reason: format!("complete graph has average degree {:.4}", degree(extra.len())),
        });
    }
    let d = degree(added_at(k));
    if d > hi {
        return Err(NetworkError::TargetUnreachable {
            target,
            reason: format!("tied weights at {} jump the average degree to {d:.4}", weights[k]),
        });
    }
    Ok(weights[k])
}
