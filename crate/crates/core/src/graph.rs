//! Usage graphs: word uses (and optional sense definitions) connected by
//! edges that aggregate pairwise relatedness judgments.
//!
//! Judgments are on the four-point relatedness scale (4 identical, 3 closely
//! related, 2 distantly related, 1 unrelated) plus 0 for "cannot decide".
//! An edge's weight is the median of its non-zero judgments; clustering works
//! on the weight shifted by 2.5 so that 3 and 4 pull uses together while 1 and
//! 2 push them apart.

use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod format;

/// Offset subtracted from edge weights before clustering.
pub const WEIGHT_SHIFT: f64 = 2.5;

/// Largest value on the judgment scale.
pub const MAX_JUDGMENT: u8 = 4;

/// The two time-specific corpora.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Epoch {
    C1,
    C2,
}

impl Epoch {
    pub const ALL: [Epoch; 2] = [Epoch::C1, Epoch::C2];

    pub fn as_str(self) -> &'static str {
        match self {
            Epoch::C1 => "C1",
            Epoch::C2 => "C2",
        }
    }
}

impl fmt::Display for Epoch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Epoch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "C1" | "c1" | "1" => Ok(Epoch::C1),
            "C2" | "c2" | "2" => Ok(Epoch::C2),
            other => Err(Error::InvalidNode(format!("unknown epoch tag `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        NodeId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_owned())
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        NodeId(s)
    }
}

impl Borrow<str> for NodeId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

/// An unordered pair of distinct nodes, stored with the smaller id first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "[NodeId; 2]", into = "[NodeId; 2]")]
pub struct Pair {
    first: NodeId,
    second: NodeId,
}

impl Pair {
    pub fn new(a: impl Into<NodeId>, b: impl Into<NodeId>) -> Result<Self> {
        let (a, b) = (a.into(), b.into());
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Ok(Pair { first: a, second: b }),
            std::cmp::Ordering::Greater => Ok(Pair { first: b, second: a }),
            std::cmp::Ordering::Equal => Err(Error::SelfLoop(a.0)),
        }
    }

    pub fn first(&self) -> &NodeId {
        &self.first
    }

    pub fn second(&self) -> &NodeId {
        &self.second
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        &self.first == id || &self.second == id
    }

    /// The endpoint that is not `id`, if `id` is an endpoint.
    pub fn other(&self, id: &NodeId) -> Option<&NodeId> {
        if &self.first == id {
            Some(&self.second)
        } else if &self.second == id {
            Some(&self.first)
        } else {
            None
        }
    }
}

impl TryFrom<[NodeId; 2]> for Pair {
    type Error = Error;

    fn try_from([a, b]: [NodeId; 2]) -> Result<Self> {
        Pair::new(a, b)
    }
}

impl From<Pair> for [NodeId; 2] {
    fn from(p: Pair) -> Self {
        [p.first, p.second]
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.first, self.second)
    }
}

/// One occurrence of the target word in a sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UseNode {
    pub id: NodeId,
    pub corpus: Epoch,
    pub word: String,
    pub tokens: Vec<String>,
    pub target_index: usize,
}

impl UseNode {
    pub fn new(
        id: impl Into<NodeId>,
        corpus: Epoch,
        word: impl Into<String>,
        tokens: Vec<String>,
        target_index: usize,
    ) -> Result<Self> {
        let node = UseNode { id: id.into(), corpus, word: word.into(), tokens, target_index };
        node.validate()?;
        Ok(node)
    }

    pub fn validate(&self) -> Result<()> {
        if self.target_index >= self.tokens.len() {
            return Err(Error::InvalidNode(format!(
                "target index {} out of bounds for {} tokens in `{}`",
                self.target_index,
                self.tokens.len(),
                self.id
            )));
        }
        Ok(())
    }
}

/// A dictionary sense definition used as an extra node (use-vs-gloss
/// annotation).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SenseDefNode {
    pub id: NodeId,
    pub word: String,
    pub gloss: String,
}

impl SenseDefNode {
    pub fn new(id: impl Into<NodeId>, word: impl Into<String>, gloss: impl Into<String>) -> Result<Self> {
        let node = SenseDefNode { id: id.into(), word: word.into(), gloss: gloss.into() };
        node.validate()?;
        Ok(node)
    }

    pub fn validate(&self) -> Result<()> {
        if self.gloss.trim().is_empty() {
            return Err(Error::InvalidNode(format!("empty gloss on `{}`", self.id)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Node {
    Use(UseNode),
    Sense(SenseDefNode),
}

impl Node {
    pub fn id(&self) -> &NodeId {
        match self {
            Node::Use(u) => &u.id,
            Node::Sense(s) => &s.id,
        }
    }

    /// Epoch tag of a use; sense definitions carry none.
    pub fn corpus(&self) -> Option<Epoch> {
        match self {
            Node::Use(u) => Some(u.corpus),
            Node::Sense(_) => None,
        }
    }

    pub fn is_use(&self) -> bool {
        matches!(self, Node::Use(_))
    }

    fn validate(&self) -> Result<()> {
        match self {
            Node::Use(u) => u.validate(),
            Node::Sense(s) => s.validate(),
        }
    }
}

impl From<UseNode> for Node {
    fn from(u: UseNode) -> Self {
        Node::Use(u)
    }
}

impl From<SenseDefNode> for Node {
    fn from(s: SenseDefNode) -> Self {
        Node::Sense(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Judgment {
    pub pair: Pair,
    pub annotator: String,
    pub value: u8,
    pub round: u32,
}

impl Judgment {
    pub fn new(pair: Pair, annotator: impl Into<String>, value: u8, round: u32) -> Result<Self> {
        let j = Judgment { pair, annotator: annotator.into(), value, round };
        j.validate()?;
        Ok(j)
    }

    pub fn validate(&self) -> Result<()> {
        if self.value > MAX_JUDGMENT {
            return Err(Error::JudgmentOutOfRange(self.value));
        }
        if self.round == 0 {
            return Err(Error::InvalidJudgment("round numbers start at 1".into()));
        }
        Ok(())
    }
}

/// Median of the non-zero values; `None` when every value is 0 (or there
/// are no values). Even counts average the two central values.
pub fn median_weight(values: impl IntoIterator<Item = u8>) -> Option<f64> {
    let mut v: Vec<u8> = values.into_iter().filter(|&x| x != 0).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_unstable();
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        f64::from(v[mid])
    } else {
        (f64::from(v[mid - 1]) + f64::from(v[mid])) / 2.0
    })
}

/// All judgments on one unordered pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pair: Pair,
    judgments: Vec<Judgment>,
    weight: Option<f64>,
}

impl Edge {
    fn new(pair: Pair) -> Self {
        Edge { pair, judgments: Vec::new(), weight: None }
    }

    fn push(&mut self, j: Judgment) {
        self.judgments.push(j);
        self.weight = median_weight(self.judgments.iter().map(|j| j.value));
    }

    pub fn pair(&self) -> &Pair {
        &self.pair
    }

    pub fn judgments(&self) -> &[Judgment] {
        &self.judgments
    }

    /// Median of the non-zero judgments, unset when all are 0.
    pub fn weight(&self) -> Option<f64> {
        self.weight
    }

    pub fn shifted_weight(&self) -> Option<f64> {
        self.weight.map(|w| w - WEIGHT_SHIFT)
    }

    pub fn is_positive(&self) -> bool {
        self.shifted_weight().is_some_and(|w| w >= 0.0)
    }

    pub fn is_negative(&self) -> bool {
        self.shifted_weight().is_some_and(|w| w < 0.0)
    }

    pub fn nonzero_values(&self) -> impl Iterator<Item = u8> + '_ {
        self.judgments.iter().map(|j| j.value).filter(|&v| v != 0)
    }

    pub fn has_annotator(&self, annotator: &str) -> bool {
        self.judgments.iter().any(|j| j.annotator == annotator)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct UsageGraph {
    word: String,
    nodes: BTreeMap<NodeId, Node>,
    edges: BTreeMap<Pair, Edge>,
}

impl UsageGraph {
    pub fn new(word: impl Into<String>) -> Self {
        UsageGraph { word: word.into(), nodes: BTreeMap::new(), edges: BTreeMap::new() }
    }

    pub fn with_nodes(word: impl Into<String>, nodes: impl IntoIterator<Item = Node>) -> Result<Self> {
        let mut g = UsageGraph::new(word);
        for n in nodes {
            g.add_node(n)?;
        }
        Ok(g)
    }

    pub fn word(&self) -> &str {
        &self.word
    }

    pub fn add_node(&mut self, node: impl Into<Node>) -> Result<()> {
        let node = node.into();
        node.validate()?;
        if self.nodes.contains_key(node.id()) {
            return Err(Error::DuplicateNode(node.id().to_string()));
        }
        self.nodes.insert(node.id().clone(), node);
        Ok(())
    }

    /// Records a judgment and recomputes the pair's median weight.
    pub fn add_judgment(&mut self, j: Judgment) -> Result<()> {
        j.validate()?;
        for id in [j.pair.first(), j.pair.second()] {
            if !self.nodes.contains_key(id) {
                return Err(Error::UnknownNode(id.to_string()));
            }
        }
        self.edges.entry(j.pair.clone()).or_insert_with(|| Edge::new(j.pair.clone())).push(j);
        Ok(())
    }

    /// Non-mutating variant of [`UsageGraph::add_judgment`].
    pub fn with_judgment(&self, j: Judgment) -> Result<Self> {
        let mut g = self.clone();
        g.add_judgment(j)?;
        Ok(g)
    }

    pub fn node(&self, id: &NodeId) -> Option<&Node> {
        self.nodes.get(id)
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = &NodeId> {
        self.nodes.keys()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn uses(&self) -> impl Iterator<Item = &UseNode> {
        self.nodes.values().filter_map(|n| match n {
            Node::Use(u) => Some(u),
            Node::Sense(_) => None,
        })
    }

    pub fn use_count(&self, epoch: Epoch) -> usize {
        self.uses().filter(|u| u.corpus == epoch).count()
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.values()
    }

    pub fn edge(&self, pair: &Pair) -> Option<&Edge> {
        self.edges.get(pair)
    }

    /// Edges carrying a weight, with their shifted weights.
    pub fn weighted_edges(&self) -> impl Iterator<Item = (&Pair, f64)> {
        self.edges.values().filter_map(|e| e.shifted_weight().map(|w| (&e.pair, w)))
    }

    pub fn weighted_edge_count(&self) -> usize {
        self.weighted_edges().count()
    }

    pub fn is_weighted(&self, pair: &Pair) -> bool {
        self.edges.get(pair).is_some_and(|e| e.weight.is_some())
    }

    pub fn judgment_count(&self) -> usize {
        self.edges.values().map(|e| e.judgments.len()).sum()
    }

    pub fn judgments(&self) -> impl Iterator<Item = &Judgment> {
        self.edges.values().flat_map(|e| e.judgments.iter())
    }

    /// Nodes with at least one weighted edge.
    pub fn weighted_nodes(&self) -> BTreeSet<&NodeId> {
        self.weighted_edges().flat_map(|(p, _)| [p.first(), p.second()]).collect()
    }

    /// Induced subgraph on the uses of one epoch; sense definitions are dropped.
    pub fn subgraph(&self, epoch: Epoch) -> UsageGraph {
        let nodes: BTreeMap<NodeId, Node> = self
            .nodes
            .iter()
            .filter(|(_, n)| n.corpus() == Some(epoch))
            .map(|(k, n)| (k.clone(), n.clone()))
            .collect();
        self.restricted_to(nodes)
    }

    /// Drops every node whose 0-judgments are more than half of all the
    /// judgments touching it, together with its incident edges.
    pub fn remove_undecidable_nodes(&self) -> UsageGraph {
        let mut tally: BTreeMap<&NodeId, (usize, usize)> = BTreeMap::new();
        for e in self.edges.values() {
            let zeros = e.judgments.iter().filter(|j| j.value == 0).count();
            for id in [e.pair.first(), e.pair.second()] {
                let t = tally.entry(id).or_default();
                t.0 += zeros;
                t.1 += e.judgments.len();
            }
        }
        let nodes = self
            .nodes
            .iter()
            .filter(|(id, _)| tally.get(id).is_none_or(|&(zeros, total)| 2 * zeros <= total))
            .map(|(k, n)| (k.clone(), n.clone()))
            .collect();
        self.restricted_to(nodes)
    }

    fn restricted_to(&self, nodes: BTreeMap<NodeId, Node>) -> UsageGraph {
        let edges = self
            .edges
            .iter()
            .filter(|(p, _)| nodes.contains_key(p.first()) && nodes.contains_key(p.second()))
            .map(|(p, e)| (p.clone(), e.clone()))
            .collect();
        UsageGraph { word: self.word.clone(), nodes, edges }
    }
}
