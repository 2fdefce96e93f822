//! Correlation clustering of usage graphs.
//!
//! The objective is the conflict loss: the sum of shifted weights of positive
//! edges running between clusters plus the absolute shifted weights of
//! negative edges inside clusters. It is minimized by simulated annealing over
//! several cluster-count caps and initial states; a brute-force enumerator
//! serves as the exactness oracle for small graphs.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{NodeId, Pair, UsageGraph};
use crate::seed;

mod anneal;
mod brute_force;

pub use brute_force::{brute_force_cluster, BRUTE_FORCE_LIMIT};

/// A partition of graph nodes. Cluster ids are canonical: they are numbered
/// in order of first appearance when nodes are visited in id order, so two
/// clusterings describing the same partition compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Clustering {
    assignment: BTreeMap<NodeId, usize>,
    cluster_count: usize,
}

impl Clustering {
    pub fn from_assignment<L: Ord + Clone>(assignment: impl IntoIterator<Item = (NodeId, L)>) -> Self {
        let raw: BTreeMap<NodeId, L> = assignment.into_iter().collect();
        let mut relabel: BTreeMap<L, usize> = BTreeMap::new();
        let mut out = BTreeMap::new();
        for (id, label) in raw {
            let next = relabel.len();
            let canon = *relabel.entry(label).or_insert(next);
            out.insert(id, canon);
        }
        Clustering { cluster_count: relabel.len(), assignment: out }
    }

    pub fn from_groups<I, G>(groups: I) -> Self
    where
        I: IntoIterator<Item = G>,
        G: IntoIterator<Item = NodeId>,
    {
        Self::from_assignment(
            groups.into_iter().enumerate().flat_map(|(label, g)| g.into_iter().map(move |id| (id, label))),
        )
    }

    pub fn singletons<'a>(ids: impl IntoIterator<Item = &'a NodeId>) -> Self {
        Self::from_assignment(ids.into_iter().cloned().enumerate().map(|(i, id)| (id, i)))
    }

    pub fn one_cluster<'a>(ids: impl IntoIterator<Item = &'a NodeId>) -> Self {
        Self::from_assignment(ids.into_iter().cloned().map(|id| (id, 0usize)))
    }

    pub fn cluster_of(&self, id: &NodeId) -> Option<usize> {
        self.assignment.get(id).copied()
    }

    pub fn assignment(&self) -> &BTreeMap<NodeId, usize> {
        &self.assignment
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn cluster_count(&self) -> usize {
        self.cluster_count
    }

    /// Member lists indexed by cluster id.
    pub fn clusters(&self) -> Vec<Vec<NodeId>> {
        let mut out = vec![Vec::new(); self.cluster_count];
        for (id, &c) in &self.assignment {
            out[c].push(id.clone());
        }
        out
    }

    /// Labels in node-id order.
    pub fn labels(&self) -> Vec<usize> {
        self.assignment.values().copied().collect()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = &NodeId> {
        self.assignment.keys()
    }

    /// The clustering restricted to `keep`, relabelled canonically.
    pub fn restricted_to<'a>(&self, keep: impl IntoIterator<Item = &'a NodeId>) -> Clustering {
        Self::from_assignment(keep.into_iter().filter_map(|id| self.cluster_of(id).map(|c| (id.clone(), c))))
    }

    /// `node-id<TAB>cluster-id` lines in node-id order.
    pub fn to_tsv(&self) -> String {
        self.assignment.iter().map(|(id, c)| format!("{id}\t{c}\n")).collect()
    }

    /// Reads `node-id<TAB>label` lines; labels may be any strings and are
    /// renumbered canonically.
    pub fn parse_tsv(text: &str) -> Result<Self> {
        let mut assignment = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (id, label) = line
                .split_once('\t')
                .ok_or_else(|| Error::Parse { line: i + 1, msg: "expected `node<TAB>cluster`".into() })?;
            assignment.push((NodeId::new(id), label.trim().to_owned()));
        }
        Ok(Self::from_assignment(assignment))
    }
}

fn endpoints(c: &Clustering, pair: &Pair) -> Result<(usize, usize)> {
    let a = c.cluster_of(pair.first()).ok_or_else(|| Error::MissingAssignment(pair.first().to_string()))?;
    let b = c.cluster_of(pair.second()).ok_or_else(|| Error::MissingAssignment(pair.second().to_string()))?;
    Ok((a, b))
}

/// Conflict loss of `c` on `graph`'s shifted weights.
pub fn loss(graph: &UsageGraph, c: &Clustering) -> Result<f64> {
    let mut total = 0.0;
    for (pair, w) in graph.weighted_edges() {
        let (a, b) = endpoints(c, pair)?;
        total += edge_cost(a == b, w);
    }
    Ok(total)
}

#[inline]
pub(crate) fn edge_cost(same_cluster: bool, shifted: f64) -> f64 {
    match (same_cluster, shifted >= 0.0) {
        (false, true) => shifted,
        (true, false) => -shifted,
        _ => 0.0,
    }
}

/// Loss divided by the sum of absolute shifted weights over all weighted
/// edges, the loss of a clustering in which every edge is in conflict.
pub fn normalized_loss(graph: &UsageGraph, c: &Clustering) -> Result<f64> {
    if graph.weighted_edge_count() == 0 {
        return Err(Error::NoWeightedEdges);
    }
    let max: f64 = graph.weighted_edges().map(|(_, w)| w.abs()).sum();
    if max == 0.0 {
        return Err(Error::ZeroMaximumLoss);
    }
    Ok(loss(graph, c)? / max)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Conflicts {
    /// Positive edges between clusters.
    pub across_positive: Vec<Pair>,
    /// Negative edges inside clusters.
    pub within_negative: Vec<Pair>,
}

impl Conflicts {
    pub fn is_empty(&self) -> bool {
        self.across_positive.is_empty() && self.within_negative.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = &Pair> {
        self.across_positive.iter().chain(self.within_negative.iter())
    }
}

pub fn conflicts(graph: &UsageGraph, c: &Clustering) -> Result<Conflicts> {
    let mut out = Conflicts::default();
    for (pair, w) in graph.weighted_edges() {
        let (a, b) = endpoints(c, pair)?;
        if a != b && w >= 0.0 {
            out.across_positive.push(pair.clone());
        } else if a == b && w < 0.0 {
            out.within_negative.push(pair.clone());
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialState {
    Random,
    Singletons,
    PositiveComponents,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealingSchedule {
    pub initial_temperature: f64,
    pub decay: f64,
    pub iterations: usize,
}

impl Default for AnnealingSchedule {
    fn default() -> Self {
        AnnealingSchedule { initial_temperature: 1.0, decay: 0.99, iterations: 20_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusterConfig {
    pub max_clusters: Vec<usize>,
    pub restarts: usize,
    pub initial_states: Vec<InitialState>,
    pub schedule: AnnealingSchedule,
    pub seed: u64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            max_clusters: vec![2, 4, 8, 16],
            restarts: 5,
            initial_states: vec![InitialState::Random, InitialState::Singletons, InitialState::PositiveComponents],
            schedule: AnnealingSchedule::default(),
            seed: 0,
        }
    }
}

impl ClusterConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.max_clusters.is_empty() || self.max_clusters.contains(&0) {
            return bad("max_clusters values must be non-empty and >= 1");
        }
        if self.restarts == 0 {
            return bad("restarts must be >= 1");
        }
        if self.initial_states.is_empty() {
            return bad("at least one initial state is required");
        }
        let s = &self.schedule;
        if !(s.decay > 0.0 && s.decay < 1.0) {
            return bad("decay factor must lie in (0, 1)");
        }
        if s.iterations == 0 {
            return bad("iterations must be >= 1");
        }
        if s.initial_temperature.is_nan() || s.initial_temperature <= 0.0 {
            return bad("initial temperature must be positive");
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        ClusterConfig { seed, ..self.clone() }
    }
}

/// Index-based view of the weighted part of a usage graph.
pub(crate) struct Compact {
    pub ids: Vec<NodeId>,
    /// (neighbor, shifted weight), zero-weight edges included.
    pub adjacency: Vec<Vec<(usize, f64)>>,
}

impl Compact {
    pub fn new(graph: &UsageGraph) -> Self {
        let ids: Vec<NodeId> = graph.weighted_nodes().into_iter().cloned().collect();
        let index: BTreeMap<&NodeId, usize> = ids.iter().enumerate().map(|(i, id)| (id, i)).collect();
        let mut adjacency = vec![Vec::new(); ids.len()];
        for (pair, w) in graph.weighted_edges() {
            let (a, b) = (index[pair.first()], index[pair.second()]);
            adjacency[a].push((b, w));
            adjacency[b].push((a, w));
        }
        Compact { ids, adjacency }
    }

    pub fn loss(&self, labels: &[usize]) -> f64 {
        let mut total = 0.0;
        for (a, adj) in self.adjacency.iter().enumerate() {
            for &(b, w) in adj {
                if a < b {
                    total += edge_cost(labels[a] == labels[b], w);
                }
            }
        }
        total
    }

    /// Connected components over edges with shifted weight >= 0, restricted
    /// to node pairs that share a label in `within` (all pairs when `None`).
    pub fn positive_components(&self, within: Option<&[usize]>) -> Vec<usize> {
        let n = self.ids.len();
        let mut comp = vec![usize::MAX; n];
        let mut next = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = next;
            stack.push(start);
            while let Some(v) = stack.pop() {
                for &(u, w) in &self.adjacency[v] {
                    let same = within.is_none_or(|l| l[u] == l[v]);
                    if w >= 0.0 && same && comp[u] == usize::MAX {
                        comp[u] = next;
                        stack.push(u);
                    }
                }
            }
            next += 1;
        }
        comp
    }
}

/// Relabels so that labels appear in order of first occurrence.
pub(crate) fn canonical(labels: &[usize]) -> Vec<usize> {
    let mut map = BTreeMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}

struct Candidate {
    loss: f64,
    count: usize,
    labels: Vec<usize>,
}

impl Candidate {
    fn better_than(&self, other: &Candidate) -> bool {
        (self.loss, self.count, &self.labels) < (other.loss, other.count, &other.labels)
    }
}

/// Minimizes the conflict loss by simulated annealing.
///
/// Every (cap, initial state, restart) combination runs independently with a
/// derived seed; each result is split into the positive-edge components of its
/// clusters (which never raises the loss) and the best one wins, ties going to
/// fewer clusters and then to the lexicographically smallest labelling.
/// Nodes without weighted edges end up as singletons.
pub fn cluster(graph: &UsageGraph, cfg: &ClusterConfig) -> Result<Clustering> {
    if graph.is_empty() {
        return Err(Error::EmptyGraph);
    }
    cfg.validate()?;
    let compact = Compact::new(graph);

    let mut best_labels = Vec::new();
    if !compact.ids.is_empty() {
        let mut jobs = Vec::new();
        for (mi, &cap) in cfg.max_clusters.iter().enumerate() {
            for (si, &state) in cfg.initial_states.iter().enumerate() {
                for r in 0..cfg.restarts {
                    let seed = seed::derive(cfg.seed, &[mi as u64, si as u64, r as u64]);
                    jobs.push((cap, state, seed));
                }
            }
        }
        let candidates: Vec<Candidate> = jobs
            .par_iter()
            .map(|&(cap, state, seed)| {
                let labels = anneal::run(&compact, cap, state, &cfg.schedule, seed);
                let refined = canonical(&compact.positive_components(Some(&labels)));
                let count = refined.iter().max().map_or(0, |m| m + 1);
                Candidate { loss: compact.loss(&refined), count, labels: refined }
            })
            .collect();
        let mut best = &candidates[0];
        for c in &candidates[1..] {
            if c.better_than(best) {
                best = c;
            }
        }
        best_labels = best.labels.clone();
    }

    let weighted: BTreeSet<&NodeId> = compact.ids.iter().collect();
    let offset = best_labels.iter().max().map_or(0, |m| m + 1);
    let assignment = compact
        .ids
        .iter()
        .cloned()
        .zip(best_labels)
        .chain(graph.node_ids().filter(|id| !weighted.contains(id)).cloned().enumerate().map(|(i, id)| (id, offset + i)));
    Ok(Clustering::from_assignment(assignment))
}
