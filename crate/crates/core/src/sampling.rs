//! Round-based edge sampling.
//!
//! Round one explores a small node sample densely. Later rounds combine
//! every unclustered use with each multi-cluster, explore among uses that
//! fit none of them, re-send disagreeing pairs to fresh annotators, probe
//! around clustering conflicts and add a few confirmation edges. Sampling
//! stops once every pair of clusters is connected by a judged edge.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::{IndexedRandom, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::clustering::{self, Clustering};
use crate::error::{Error, Result};
use crate::graph::{Node, NodeId, Pair, UsageGraph};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    /// Share of all uses sampled in round one.
    pub node_fraction: f64,
    /// Floor on the round-one sample size.
    pub min_sample: usize,
    /// Share of all pairs over a node set that exploration annotates.
    pub edge_fraction: f64,
    /// Random confirmation pairs per round, relative to judged edges.
    pub confirm_fraction: f64,
    /// Share of pairs given a second annotator.
    pub multi_annotation_rate: f64,
    pub max_rounds: u32,
    pub annotators: Vec<String>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            node_fraction: 0.10,
            min_sample: 5,
            edge_fraction: 0.30,
            confirm_fraction: 0.02,
            multi_annotation_rate: 0.5,
            max_rounds: 5,
            annotators: (1..=4).map(|i| format!("annotator{i}")).collect(),
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let frac = |x: f64| x > 0.0 && x <= 1.0;
        if !frac(self.node_fraction) || !frac(self.edge_fraction) || !frac(self.confirm_fraction) {
            return Err(Error::InvalidConfig("sampling fractions must lie in (0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.multi_annotation_rate) {
            return Err(Error::InvalidConfig("multi-annotation rate must lie in [0, 1]".into()));
        }
        if self.max_rounds == 0 {
            return Err(Error::InvalidConfig("max_rounds must be >= 1".into()));
        }
        check_roster(&self.annotators, self.multi_annotation_rate)
    }
}

fn check_roster(roster: &[String], rate: f64) -> Result<()> {
    if roster.is_empty() {
        return Err(Error::InvalidConfig("annotator roster is empty".into()));
    }
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::InvalidConfig("multi-annotation rate must lie in [0, 1]".into()));
    }
    if rate > 0.0 && roster.len() < 2 {
        return Err(Error::InvalidConfig("multi-annotation needs at least two annotators".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reason {
    Explore,
    Combine,
    Disagree,
    Conflict,
    Confirm,
}

impl Reason {
    pub fn as_str(self) -> &'static str {
        match self {
            Reason::Explore => "explore",
            Reason::Combine => "combine",
            Reason::Disagree => "disagree",
            Reason::Conflict => "conflict",
            Reason::Confirm => "confirm",
        }
    }
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Reason {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "explore" => Reason::Explore,
            "combine" => Reason::Combine,
            "disagree" => Reason::Disagree,
            "conflict" => Reason::Conflict,
            "confirm" => Reason::Confirm,
            other => return Err(Error::InvalidConfig(format!("unknown reason tag `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedPair {
    pub pair: Pair,
    pub annotators: Vec<String>,
    pub reason: Reason,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundPlan {
    pub round: u32,
    pub items: Vec<PlannedPair>,
}

impl RoundPlan {
    pub fn pairs(&self) -> impl Iterator<Item = &Pair> {
        self.items.iter().map(|i| &i.pair)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn count(&self, reason: Reason) -> usize {
        self.items.iter().filter(|i| i.reason == reason).count()
    }

    /// Tab-separated plan lines: `pair<TAB>annotators<TAB>reason`, with the
    /// two node ids and the annotator ids comma-separated.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for item in &self.items {
            out.push_str(&format!("{}\t{}\t{}\n", item.pair, item.annotators.join(","), item.reason));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerState {
    pub graph: UsageGraph,
    pub clustering: Clustering,
    /// Number of the last completed round.
    pub round: u32,
    pub config: SamplerConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NextRound {
    Plan(RoundPlan),
    Done,
}

fn scaled_ceil(fraction: f64, count: usize) -> usize {
    // The epsilon absorbs binary representation error (0.3 * 10 must be 3).
    ((fraction * count as f64) - 1e-9).ceil().max(0.0) as usize
}

/// Number of pairs exploration targets over `m` nodes.
pub fn exploration_budget(fraction: f64, m: usize) -> usize {
    scaled_ceil(fraction, m * m.saturating_sub(1) / 2)
}

/// Size of the round-one node sample out of `n` nodes.
pub fn round_one_sample_size(cfg: &SamplerConfig, n: usize) -> usize {
    scaled_ceil(cfg.node_fraction, n).max(cfg.min_sample).min(n)
}

/// Random-walk exploration over `nodes`: a random Hamiltonian path keeps the
/// set connected, then random pairs fill the budget. Pairs already weighted
/// in `graph` are never emitted; they still count as walk connections.
fn explore(nodes: &[NodeId], graph: Option<&UsageGraph>, fraction: f64, rng: &mut seed::Rng) -> Vec<Pair> {
    let m = nodes.len();
    if m < 2 {
        return Vec::new();
    }
    let budget = exploration_budget(fraction, m);
    let weighted = |p: &Pair| graph.is_some_and(|g| g.is_weighted(p));
    let mut walk = nodes.to_vec();
    walk.shuffle(rng);
    let mut chosen: BTreeSet<Pair> = BTreeSet::new();
    let mut out = Vec::new();
    for w in walk.windows(2) {
        let p = Pair::new(w[0].clone(), w[1].clone()).expect("node sets hold distinct ids");
        if !weighted(&p) && chosen.insert(p.clone()) {
            out.push(p);
        }
    }
    if out.len() < budget {
        let mut rest: Vec<Pair> = Vec::new();
        for (i, a) in nodes.iter().enumerate() {
            for b in &nodes[i + 1..] {
                let p = Pair::new(a.clone(), b.clone()).expect("distinct ids");
                if !weighted(&p) && !chosen.contains(&p) {
                    rest.push(p);
                }
            }
        }
        rest.shuffle(rng);
        out.extend(rest.into_iter().take(budget - out.len()));
    }
    out
}

/// Spreads pairs over the roster: one uniformly drawn annotator each, plus a
/// second distinct one on a random subset of `round(rate * len)` pairs.
pub fn assign_annotators(pairs: &[Pair], roster: &[String], rate: f64, seed: u64) -> Result<Vec<Vec<String>>> {
    check_roster(roster, rate)?;
    let mut rng = seed::rng(seed);
    let mut out: Vec<Vec<String>> =
        pairs.iter().map(|_| vec![roster.choose(&mut rng).expect("non-empty roster").clone()]).collect();
    let doubles = (rate * pairs.len() as f64).round() as usize;
    let mut idx: Vec<usize> = (0..pairs.len()).collect();
    idx.shuffle(&mut rng);
    for &i in idx.iter().take(doubles) {
        let first = out[i][0].clone();
        let others: Vec<&String> = roster.iter().filter(|a| **a != first).collect();
        out[i].push((*others.choose(&mut rng).expect("roster has >= 2 annotators")).clone());
    }
    Ok(out)
}

fn to_plan(round: u32, tagged: Vec<(Pair, Reason)>, cfg: &SamplerConfig, seed: u64) -> Result<RoundPlan> {
    let pairs: Vec<Pair> = tagged.iter().map(|(p, _)| p.clone()).collect();
    let annotators = assign_annotators(&pairs, &cfg.annotators, cfg.multi_annotation_rate, seed)?;
    Ok(RoundPlan {
        round,
        items: tagged
            .into_iter()
            .zip(annotators)
            .map(|((pair, reason), annotators)| PlannedPair { pair, annotators, reason })
            .collect(),
    })
}

/// The first round: a node sample of `max(min_sample, ceil(fraction * n))`
/// explored by random walk.
pub fn round_one(nodes: &[NodeId], cfg: &SamplerConfig, seed: u64) -> Result<RoundPlan> {
    cfg.validate()?;
    if nodes.len() < 2 {
        return Err(Error::TooFewNodes { need: 2, got: nodes.len() });
    }
    let mut rng = seed::rng(seed::derive(seed, &[1]));
    let size = round_one_sample_size(cfg, nodes.len());
    let mut sample: Vec<NodeId> = nodes.choose_multiple(&mut rng, size).cloned().collect();
    sample.sort();
    let pairs = explore(&sample, None, cfg.edge_fraction, &mut rng);
    to_plan(1, pairs.into_iter().map(|p| (p, Reason::Explore)).collect(), cfg, seed::derive(seed, &[2]))
}

/// Multi-clusters (clusters with at least two uses) and, per use node, the
/// set of clusters it has a weighted edge into.
struct Structure<'a> {
    multi: Vec<Vec<&'a NodeId>>,
    multi_of: BTreeMap<&'a NodeId, usize>,
    touched: BTreeMap<&'a NodeId, BTreeSet<usize>>,
}

impl<'a> Structure<'a> {
    fn new(graph: &'a UsageGraph, clustering: &Clustering) -> Self {
        let mut members: BTreeMap<usize, Vec<&'a NodeId>> = BTreeMap::new();
        for u in graph.uses() {
            if let Some(c) = clustering.cluster_of(&u.id) {
                members.entry(c).or_default().push(&u.id);
            }
        }
        let multi: Vec<Vec<&NodeId>> = members.into_values().filter(|m| m.len() >= 2).collect();
        let multi_of: BTreeMap<&NodeId, usize> =
            multi.iter().enumerate().flat_map(|(i, m)| m.iter().map(move |id| (*id, i))).collect();
        let mut touched: BTreeMap<&NodeId, BTreeSet<usize>> = BTreeMap::new();
        for (pair, _) in graph.weighted_edges() {
            for (a, b) in [(pair.first(), pair.second()), (pair.second(), pair.first())] {
                let entry = touched.entry(a).or_default();
                if let Some(&m) = multi_of.get(b) {
                    entry.insert(m);
                }
            }
        }
        Structure { multi, multi_of, touched }
    }

    fn singles(&self, graph: &'a UsageGraph) -> impl Iterator<Item = &'a NodeId> + '_ {
        graph.uses().map(|u| &u.id).filter(|id| !self.multi_of.contains_key(id))
    }
}

/// Pairs each use outside every multi-cluster with a random member of each
/// multi-cluster it has not been compared to.
pub fn combination_step(graph: &UsageGraph, clustering: &Clustering, seed: u64) -> Vec<Pair> {
    let s = Structure::new(graph, clustering);
    let mut rng = seed::rng(seed);
    let mut out = Vec::new();
    for u in s.singles(graph) {
        let seen = s.touched.get(u);
        for (i, members) in s.multi.iter().enumerate() {
            if seen.is_some_and(|t| t.contains(&i)) {
                continue;
            }
            let partner = *members.choose(&mut rng).expect("multi-clusters are non-empty");
            out.push(Pair::new(u.clone(), partner.clone()).expect("singles are outside the cluster"));
        }
    }
    out
}

/// Uses compared to every multi-cluster but placed in none of them. Without
/// any multi-cluster, every judged use outside one qualifies.
pub fn non_assignable(graph: &UsageGraph, clustering: &Clustering) -> Vec<NodeId> {
    let s = Structure::new(graph, clustering);
    s.singles(graph)
        .filter(|u| s.touched.get(u).is_some_and(|t| t.len() == s.multi.len()))
        .cloned()
        .collect()
}

/// Random-walk exploration over the non-assignable uses.
pub fn exploration_step(graph: &UsageGraph, clustering: &Clustering, edge_fraction: f64, seed: u64) -> Vec<Pair> {
    let nodes = non_assignable(graph, clustering);
    explore(&nodes, Some(graph), edge_fraction, &mut seed::rng(seed))
}

/// Pairs whose non-zero judgments differ by two or more scale points or
/// whose median sits exactly on the 2.5 boundary.
pub fn disagreement_pairs(graph: &UsageGraph) -> Vec<Pair> {
    graph
        .edges()
        .filter(|e| {
            let values: Vec<u8> = e.nonzero_values().collect();
            let spread = match (values.iter().min(), values.iter().max()) {
                (Some(lo), Some(hi)) => hi - lo,
                _ => 0,
            };
            spread >= 2 || e.weight() == Some(2.5)
        })
        .map(|e| e.pair().clone())
        .collect()
}

/// One fresh pair per node touching a clustering conflict, the partner drawn
/// from the nodes it shares no edge with.
pub fn conflict_pairs(graph: &UsageGraph, clustering: &Clustering, seed: u64) -> Result<Vec<Pair>> {
    let conflicts = clustering::conflicts(graph, clustering)?;
    let anchors: BTreeSet<&NodeId> = conflicts.pairs().flat_map(|p| [p.first(), p.second()]).collect();
    if anchors.is_empty() {
        return Ok(Vec::new());
    }
    let mut neighbors: BTreeMap<&NodeId, BTreeSet<&NodeId>> = BTreeMap::new();
    for e in graph.edges() {
        let p = e.pair();
        neighbors.entry(p.first()).or_default().insert(p.second());
        neighbors.entry(p.second()).or_default().insert(p.first());
    }
    let mut rng = seed::rng(seed);
    let mut out = BTreeSet::new();
    let mut ordered = Vec::new();
    for a in anchors {
        let adj = neighbors.get(a);
        let candidates: Vec<&NodeId> =
            graph.node_ids().filter(|b| *b != a && !adj.is_some_and(|n| n.contains(b))).collect();
        if let Some(&b) = candidates.choose(&mut rng) {
            let p = Pair::new(a.clone(), b.clone()).expect("distinct");
            if out.insert(p.clone()) {
                ordered.push(p);
            }
        }
    }
    Ok(ordered)
}

/// Confirmation pairs: a few random unjudged pairs plus one pair between
/// every two multi-clusters joined by fewer than two weighted edges.
pub fn confirmation_pairs(graph: &UsageGraph, clustering: &Clustering, fraction: f64, seed: u64) -> Vec<Pair> {
    let mut rng = seed::rng(seed);
    let ids: Vec<&NodeId> = graph.uses().map(|u| &u.id).collect();
    let mut out = Vec::new();
    let mut chosen = BTreeSet::new();
    if ids.len() >= 2 {
        let wanted = scaled_ceil(fraction, graph.weighted_edge_count()).max(1);
        let mut attempts = 0;
        while out.len() < wanted && attempts < 50 * wanted {
            attempts += 1;
            let a = *ids.choose(&mut rng).expect("non-empty");
            let b = *ids.choose(&mut rng).expect("non-empty");
            let Ok(p) = Pair::new(a.clone(), b.clone()) else { continue };
            if graph.edge(&p).is_none() && chosen.insert(p.clone()) {
                out.push(p);
            }
        }
    }

    let s = Structure::new(graph, clustering);
    let mut links: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (pair, _) in graph.weighted_edges() {
        if let (Some(&a), Some(&b)) = (s.multi_of.get(pair.first()), s.multi_of.get(pair.second())) {
            if a != b {
                *links.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
    }
    for a in 0..s.multi.len() {
        for b in a + 1..s.multi.len() {
            if links.get(&(a, b)).copied().unwrap_or(0) >= 2 {
                continue;
            }
            let mut options: Vec<Pair> = Vec::new();
            for x in &s.multi[a] {
                for y in &s.multi[b] {
                    let p = Pair::new((*x).clone(), (*y).clone()).expect("disjoint clusters");
                    if graph.edge(&p).is_none() && !chosen.contains(&p) {
                        options.push(p);
                    }
                }
            }
            if let Some(p) = options.choose(&mut rng) {
                chosen.insert(p.clone());
                out.push(p.clone());
            }
        }
    }
    out
}

/// True when every pair of clusters is joined by at least one weighted edge.
pub fn clusters_fully_compared(graph: &UsageGraph, clustering: &Clustering) -> bool {
    let k = clustering.cluster_count();
    let mut covered = BTreeSet::new();
    for (pair, _) in graph.weighted_edges() {
        if let (Some(a), Some(b)) = (clustering.cluster_of(pair.first()), clustering.cluster_of(pair.second())) {
            if a != b {
                covered.insert((a.min(b), a.max(b)));
            }
        }
    }
    covered.len() == k * k.saturating_sub(1) / 2
}

/// Plans the round after `state.round`, or reports that sampling is done.
pub fn next_round(state: &SamplerState, seed: u64) -> Result<NextRound> {
    let cfg = &state.config;
    cfg.validate()?;
    if state.round >= cfg.max_rounds || clusters_fully_compared(&state.graph, &state.clustering) {
        return Ok(NextRound::Done);
    }
    let (graph, clustering) = (&state.graph, &state.clustering);
    let sub = |tag: u64| seed::derive(seed, &[u64::from(state.round), tag]);

    let mut seen: BTreeSet<Pair> = BTreeSet::new();
    let mut fresh: Vec<(Pair, Reason)> = Vec::new();
    let mut push_fresh = |pairs: Vec<Pair>, reason: Reason, seen: &mut BTreeSet<Pair>| {
        for p in pairs {
            if !graph.is_weighted(&p) && seen.insert(p.clone()) {
                fresh.push((p, reason));
            }
        }
    };
    push_fresh(combination_step(graph, clustering, sub(1)), Reason::Combine, &mut seen);
    push_fresh(exploration_step(graph, clustering, cfg.edge_fraction, sub(2)), Reason::Explore, &mut seen);
    let disagreements: Vec<Pair> = disagreement_pairs(graph).into_iter().filter(|p| !seen.contains(p)).collect();
    seen.extend(disagreements.iter().cloned());
    push_fresh(conflict_pairs(graph, clustering, sub(3))?, Reason::Conflict, &mut seen);
    push_fresh(confirmation_pairs(graph, clustering, cfg.confirm_fraction, sub(4)), Reason::Confirm, &mut seen);

    let mut plan = to_plan(state.round + 1, fresh, cfg, sub(5))?;

    // Redistributed pairs go to one annotator who has not judged them yet.
    let mut rng = seed::rng(sub(6));
    for p in disagreements {
        let edge = graph.edge(&p).expect("disagreements come from existing edges");
        let fresh_annotators: Vec<&String> = cfg.annotators.iter().filter(|a| !edge.has_annotator(a)).collect();
        if let Some(a) = fresh_annotators.choose(&mut rng) {
            plan.items.push(PlannedPair { pair: p, annotators: vec![(*a).clone()], reason: Reason::Disagree });
        }
    }

    if plan.is_empty() {
        return Ok(NextRound::Done);
    }
    Ok(NextRound::Plan(plan))
}

/// Use-node ids of a graph, the node set round one draws from.
pub fn use_ids(graph: &UsageGraph) -> Vec<NodeId> {
    graph.nodes().filter(|n| matches!(n, Node::Use(_))).map(|n| n.id().clone()).collect()
}
