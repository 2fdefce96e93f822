//! Campaign state as a pure function of its event history.
//!
//! Every mutation is an [`Event`]. A change is first staged against a copy of
//! the affected word, then persisted, then committed, so the in-memory state
//! never runs ahead of the log. Replaying the log through the same staging
//! code rebuilds the state exactly.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use semchange_core::clustering::Clustering;
use semchange_core::graph::{format, Judgment, Node, NodeId, Pair, SenseDefNode, UsageGraph, UseNode};
use semchange_core::measures::ChangeScores;
use semchange_core::pipeline::{self, PipelineConfig, Step, WordRun};

use crate::error::{Result, ServiceError};

/// Version of the log record and API payload schemas.
pub const SCHEMA_VERSION: u32 = 1;

pub fn token_digest(token: &str) -> String {
    hex(&Sha256::digest(token.as_bytes()))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatorEntry {
    pub id: String,
    /// SHA-256 of the annotator's bearer token, hex encoded.
    pub token_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordSpec {
    pub word: String,
    pub uses: Vec<UseNode>,
    #[serde(default)]
    pub senses: Vec<SenseDefNode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSpec {
    pub id: String,
    pub seed: u64,
    pub annotators: Vec<AnnotatorEntry>,
    #[serde(default)]
    pub config: PipelineConfig,
    pub words: Vec<WordSpec>,
}

impl CampaignSpec {
    pub fn validate(&self) -> Result<()> {
        let valid_id = !self.id.is_empty()
            && self.id.len() <= 64
            && self.id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
        if !valid_id {
            return Err(ServiceError::Invalid("campaign id must be 1-64 characters of [A-Za-z0-9_-]".into()));
        }
        if self.annotators.is_empty() {
            return Err(ServiceError::Invalid("annotator roster is empty".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for a in &self.annotators {
            if a.id.is_empty() || !seen.insert(&a.id) {
                return Err(ServiceError::Invalid(format!("annotator id `{}` is empty or repeated", a.id)));
            }
        }
        if self.words.is_empty() {
            return Err(ServiceError::Invalid("campaign has no words".into()));
        }
        let mut words = std::collections::BTreeSet::new();
        for w in &self.words {
            if !words.insert(&w.word) {
                return Err(ServiceError::Invalid(format!("word `{}` listed twice", w.word)));
            }
            if w.uses.len() < 2 {
                return Err(ServiceError::Invalid(format!("word `{}` needs at least two uses", w.word)));
            }
        }
        self.config.validate()?;
        Ok(())
    }

    pub fn roster(&self) -> Vec<String> {
        self.annotators.iter().map(|a| a.id.clone()).collect()
    }

    /// Pipeline settings with the sampler roster set to the campaign's.
    pub fn pipeline(&self) -> PipelineConfig {
        let mut cfg = self.config.clone();
        cfg.sampler.annotators = self.roster();
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Created { spec: CampaignSpec },
    Judged { word: String, pair: Pair, annotator: String, value: u8 },
    Advanced { word: String },
    Reassigned { word: String, pair: Pair, from: String, to: String },
    Expired { word: String, pair: Pair, annotator: String },
}

/// One line of the campaign log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub v: u32,
    pub seq: u64,
    #[serde(flatten)]
    pub event: Event,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentStatus {
    Pending,
    Judged,
    Expired,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WordStatus {
    Collecting,
    RoundComplete,
    Done,
}

#[derive(Debug, Clone)]
pub struct WordState {
    pub index: usize,
    pub run: WordRun,
    /// Assignments of the current round: pair -> annotator -> status.
    pub assignments: BTreeMap<Pair, BTreeMap<String, AssignmentStatus>>,
    /// Serialized graph at the close of each finished round.
    pub snapshots: Vec<String>,
}

impl WordState {
    fn count(&self, status: AssignmentStatus) -> usize {
        self.assignments.values().flat_map(|m| m.values()).filter(|s| **s == status).count()
    }

    pub fn pending(&self) -> usize {
        self.count(AssignmentStatus::Pending)
    }

    pub fn judged(&self) -> usize {
        self.count(AssignmentStatus::Judged)
    }

    pub fn assigned(&self) -> usize {
        self.assignments.values().map(BTreeMap::len).sum()
    }

    pub fn status(&self) -> WordStatus {
        if self.run.is_done() {
            WordStatus::Done
        } else if self.pending() == 0 {
            WordStatus::RoundComplete
        } else {
            WordStatus::Collecting
        }
    }

    pub fn scores(&self) -> Option<&ChangeScores> {
        self.run.outcome().map(|o| &o.scores)
    }

    pub fn clustering(&self) -> Option<&Clustering> {
        self.run.clustering()
    }

    fn assign_plan(&mut self) {
        self.assignments.clear();
        if let Some(plan) = self.run.plan() {
            for item in &plan.items {
                let slot = self.assignments.entry(item.pair.clone()).or_default();
                for a in &item.annotators {
                    slot.insert(a.clone(), AssignmentStatus::Pending);
                }
            }
        }
    }
}

/// A staged change: the replacement state of one word, ready to commit.
#[derive(Debug)]
pub struct Staged {
    pub event: Event,
    word: Option<(String, WordState)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueueItem {
    pub word: String,
    pub round: u32,
    pub pair: Pair,
    pub nodes: [Node; 2],
}

#[derive(Debug, Clone)]
pub struct Campaign {
    pub spec: CampaignSpec,
    pub words: BTreeMap<String, WordState>,
    /// Sequence number of the last applied event.
    pub seq: u64,
}

impl Campaign {
    pub fn create(spec: CampaignSpec) -> Result<Self> {
        spec.validate()?;
        let cfg = spec.pipeline();
        let mut words = BTreeMap::new();
        for (index, w) in spec.words.iter().enumerate() {
            let mut graph = UsageGraph::new(w.word.clone());
            for u in &w.uses {
                if u.word != w.word {
                    return Err(ServiceError::Invalid(format!("use `{}` is not a use of `{}`", u.id, w.word)));
                }
                graph.add_node(u.clone())?;
            }
            for s in &w.senses {
                graph.add_node(s.clone())?;
            }
            let run = WordRun::start(graph, &cfg, pipeline::word_seed(spec.seed, &w.word))?;
            let mut state = WordState { index, run, assignments: BTreeMap::new(), snapshots: Vec::new() };
            state.assign_plan();
            words.insert(w.word.clone(), state);
        }
        Ok(Campaign { spec, words, seq: 1 })
    }

    pub fn id(&self) -> &str {
        &self.spec.id
    }

    pub fn word(&self, word: &str) -> Result<&WordState> {
        self.words.get(word).ok_or_else(|| ServiceError::NotFound(format!("word `{word}`")))
    }

    pub fn has_annotator(&self, annotator: &str) -> bool {
        self.spec.annotators.iter().any(|a| a.id == annotator)
    }

    /// The annotator whose token hashes to the stored digest, if any.
    pub fn authenticate(&self, token: &str) -> Option<&str> {
        let digest = token_digest(token);
        self.spec.annotators.iter().find(|a| a.token_sha256 == digest).map(|a| a.id.as_str())
    }

    fn order_key(&self, annotator: &str, word: &str, pair: &Pair) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(self.spec.seed.to_le_bytes());
        for part in [annotator, word, pair.first().as_str(), pair.second().as_str()] {
            h.update((part.len() as u64).to_le_bytes());
            h.update(part.as_bytes());
        }
        h.finalize().into()
    }

    /// Pending items of an annotator in their personal random order. The
    /// order depends only on the seed and the item, so the head stays put
    /// until it is judged, expired or reassigned.
    pub fn queue(&self, annotator: &str) -> Vec<(String, Pair)> {
        let mut items: Vec<([u8; 32], String, Pair)> = Vec::new();
        for (word, state) in &self.words {
            for (pair, slots) in &state.assignments {
                if slots.get(annotator) == Some(&AssignmentStatus::Pending) {
                    items.push((self.order_key(annotator, word, pair), word.clone(), pair.clone()));
                }
            }
        }
        items.sort();
        items.into_iter().map(|(_, w, p)| (w, p)).collect()
    }

    pub fn next_item(&self, annotator: &str) -> Result<Option<QueueItem>> {
        if !self.has_annotator(annotator) {
            return Err(ServiceError::NotFound(format!("annotator `{annotator}`")));
        }
        let Some((word, pair)) = self.queue(annotator).into_iter().next() else { return Ok(None) };
        let state = &self.words[&word];
        let node = |id: &NodeId| state.run.graph().node(id).cloned().expect("planned pairs reference graph nodes");
        Ok(Some(QueueItem {
            round: state.run.round(),
            nodes: [node(pair.first()), node(pair.second())],
            word,
            pair,
        }))
    }

    /// Validates an event and computes its effect without applying it.
    pub fn stage(&self, event: Event) -> Result<Staged> {
        let word = match &event {
            Event::Created { .. } => return Err(ServiceError::Conflict(format!("campaign `{}` exists", self.id()))),
            Event::Judged { word, pair, annotator, value } => {
                let mut state = self.word(word)?.clone();
                if state.run.is_done() {
                    return Err(ServiceError::Conflict(format!("word `{word}` is finished")));
                }
                match state.assignments.get(pair).and_then(|s| s.get(annotator)) {
                    Some(AssignmentStatus::Pending) => {}
                    Some(AssignmentStatus::Judged) => {
                        return Err(ServiceError::Conflict(format!("`{annotator}` already judged {pair} this round")))
                    }
                    Some(AssignmentStatus::Expired) => {
                        return Err(ServiceError::Conflict(format!("assignment of {pair} to `{annotator}` expired")))
                    }
                    None => return Err(ServiceError::Conflict(format!("{pair} is not assigned to `{annotator}`"))),
                }
                let round = state.run.round();
                state.run.record(Judgment::new(pair.clone(), annotator.clone(), *value, round)?)?;
                state.assignments.get_mut(pair).expect("checked").insert(annotator.clone(), AssignmentStatus::Judged);
                (word.clone(), state)
            }
            Event::Advanced { word } => {
                let mut state = self.word(word)?.clone();
                if state.run.is_done() {
                    return Err(ServiceError::Conflict(format!("word `{word}` is finished")));
                }
                let pending = state.pending();
                if pending > 0 {
                    return Err(ServiceError::RoundIncomplete { pending });
                }
                state.snapshots.push(format::graph_to_string(state.run.graph()));
                match state.run.advance(&self.spec.pipeline())? {
                    Step::Plan(_) => state.assign_plan(),
                    Step::Done(_) => state.assignments.clear(),
                }
                (word.clone(), state)
            }
            Event::Reassigned { word, pair, from, to } => {
                let mut state = self.word(word)?.clone();
                if !self.has_annotator(to) {
                    return Err(ServiceError::NotFound(format!("annotator `{to}`")));
                }
                let slots = state.assignments.get_mut(pair).ok_or_else(|| ServiceError::NotFound(format!("assignment {pair}")))?;
                if slots.get(from) != Some(&AssignmentStatus::Pending) {
                    return Err(ServiceError::Conflict(format!("{pair} is not pending for `{from}`")));
                }
                let already = slots.contains_key(to)
                    || state.run.graph().edge(pair).is_some_and(|e| e.has_annotator(to));
                if already {
                    return Err(ServiceError::Conflict(format!("`{to}` already has {pair}")));
                }
                slots.insert(from.clone(), AssignmentStatus::Expired);
                slots.insert(to.clone(), AssignmentStatus::Pending);
                (word.clone(), state)
            }
            Event::Expired { word, pair, annotator } => {
                let mut state = self.word(word)?.clone();
                let slots = state.assignments.get_mut(pair).ok_or_else(|| ServiceError::NotFound(format!("assignment {pair}")))?;
                if slots.get(annotator) != Some(&AssignmentStatus::Pending) {
                    return Err(ServiceError::Conflict(format!("{pair} is not pending for `{annotator}`")));
                }
                slots.insert(annotator.clone(), AssignmentStatus::Expired);
                (word.clone(), state)
            }
        };
        Ok(Staged { event, word: Some(word) })
    }

    pub fn commit(&mut self, staged: Staged) -> Event {
        if let Some((word, state)) = staged.word {
            self.words.insert(word, state);
        }
        self.seq += 1;
        staged.event
    }

    /// Next log record for a staged event.
    pub fn record_for(&self, staged: &Staged) -> LogRecord {
        LogRecord { v: SCHEMA_VERSION, seq: self.seq + 1, event: staged.event.clone() }
    }

    /// Rebuilds a campaign from its log records.
    pub fn replay(records: impl IntoIterator<Item = LogRecord>) -> Result<Self> {
        let mut records = records.into_iter();
        let first = records.next().ok_or_else(|| ServiceError::Invalid("empty campaign log".into()))?;
        let Event::Created { spec } = first.event else {
            return Err(ServiceError::Invalid("campaign log must start with a creation event".into()));
        };
        check_record(&first.v, first.seq, 1)?;
        let mut campaign = Campaign::create(spec)?;
        for r in records {
            check_record(&r.v, r.seq, campaign.seq + 1)?;
            let staged = campaign.stage(r.event)?;
            campaign.commit(staged);
        }
        Ok(campaign)
    }
}

fn check_record(v: &u32, seq: u64, expected: u64) -> Result<()> {
    if *v != SCHEMA_VERSION {
        return Err(ServiceError::Invalid(format!("unsupported log schema version {v}")));
    }
    if seq != expected {
        return Err(ServiceError::Invalid(format!("log sequence gap: expected {expected}, found {seq}")));
    }
    Ok(())
}
