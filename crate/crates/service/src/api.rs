//! Request and response bodies of the HTTP API, schema version 1.
//!
//! Every response object carries `api_version`. Requests may send it too;
//! a request naming another version is rejected.

use serde::{Deserialize, Serialize};

use semchange_core::graph::{Node, NodeId, Pair, SenseDefNode, UseNode};
use semchange_core::measures::Thresholds;
use semchange_core::pipeline::PipelineConfig;

use crate::campaign::{AssignmentStatus, QueueItem, WordStatus, SCHEMA_VERSION};

pub const API_VERSION: u32 = SCHEMA_VERSION;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatorSpec {
    pub id: String,
    pub token: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordInput {
    pub word: String,
    pub uses: Vec<UseNode>,
    #[serde(default)]
    pub senses: Vec<SenseDefNode>,
}

/// `POST /campaigns`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateCampaign {
    #[serde(default)]
    pub api_version: Option<u32>,
    pub id: String,
    #[serde(default)]
    pub seed: u64,
    pub annotators: Vec<AnnotatorSpec>,
    #[serde(default)]
    pub config: PipelineConfig,
    pub words: Vec<WordInput>,
}

/// `POST /campaigns/{id}/judgments`, sent with the annotator's token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmitJudgment {
    #[serde(default)]
    pub api_version: Option<u32>,
    pub word: String,
    pub pair: Pair,
    pub value: u8,
}

/// `POST /campaigns/{id}/reassign`: moves a pending assignment to `to`, or
/// expires it when `to` is absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reassign {
    #[serde(default)]
    pub api_version: Option<u32>,
    pub word: String,
    pub pair: Pair,
    pub annotator: String,
    #[serde(default)]
    pub to: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordSummary {
    pub word: String,
    pub status: WordStatus,
    pub round: u32,
    pub assigned: usize,
    pub judged: usize,
    pub pending: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignStatus {
    pub api_version: u32,
    pub id: String,
    pub annotators: Vec<String>,
    pub words: Vec<WordSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NextItem {
    pub api_version: u32,
    pub item: Option<QueueItem>,
    /// Items left in the annotator's queue, the returned one included.
    pub remaining: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgmentAck {
    pub api_version: u32,
    pub word: String,
    pub pair: Pair,
    pub round: u32,
    /// Edge weight after this judgment; null while all judgments are 0.
    pub weight: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoresBody {
    pub binary: u8,
    pub graded: f64,
    pub thresholds: Thresholds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvanceResult {
    pub api_version: u32,
    pub word: String,
    pub status: WordStatus,
    pub round: u32,
    pub assigned: usize,
    pub scores: Option<ScoresBody>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignAdvance {
    pub api_version: u32,
    pub advanced: Vec<AdvanceResult>,
    /// Words skipped because their round still has pending pairs or they are done.
    pub skipped: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeBody {
    pub pair: Pair,
    pub weight: f64,
    pub judgments: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphBody {
    pub api_version: u32,
    pub word: String,
    pub round: u32,
    pub nodes: Vec<Node>,
    pub edges: Vec<EdgeBody>,
    /// Clusters from the last closed round; null before the first advance.
    pub clusters: Option<Vec<Vec<NodeId>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordScores {
    pub api_version: u32,
    pub word: String,
    #[serde(flatten)]
    pub scores: ScoresBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReassignResult {
    pub api_version: u32,
    pub word: String,
    pub pair: Pair,
    pub annotator: String,
    pub status: AssignmentStatus,
    pub to: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorDetail {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub api_version: u32,
    pub error: ErrorDetail,
}
