//! The per-word annotation loop: sample a round, collect judgments, clean and
//! cluster the graph, sample again until the sampler is done, then score.
//!
//! Both the simulation study and the annotation service drive words through
//! this type, so a campaign fed the same judgments reaches the same result.

use serde::{Deserialize, Serialize};

use crate::clustering::{self, ClusterConfig, Clustering};
use crate::error::{Error, Result};
use crate::graph::{Judgment, UsageGraph};
use crate::measures::{ChangeScores, Thresholds};
use crate::sampling::{self, NextRound, RoundPlan, SamplerConfig, SamplerState};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub sampler: SamplerConfig,
    pub clustering: ClusterConfig,
    /// Fixed change thresholds; picked from the sample size when absent.
    pub thresholds: Option<Thresholds>,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.sampler.validate()?;
        self.clustering.validate()
    }
}

/// Seed of one word's run within a campaign or study seeded with `base`.
pub fn word_seed(base: u64, word: &str) -> u64 {
    seed::derive(base, &[seed::hash_str(word)])
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub clustering: Clustering,
    pub scores: ChangeScores,
    /// False when the round limit stopped sampling before every pair of
    /// clusters had been compared.
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Step<'a> {
    Plan(&'a RoundPlan),
    Done(&'a Outcome),
}

#[derive(Debug, Clone)]
pub struct WordRun {
    graph: UsageGraph,
    seed: u64,
    round: u32,
    plan: Option<RoundPlan>,
    clustering: Option<Clustering>,
    outcome: Option<Outcome>,
}

impl WordRun {
    /// Plans round one over the graph's uses. The graph may already carry
    /// judgments; they count toward the first clustering.
    pub fn start(graph: UsageGraph, cfg: &PipelineConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let plan = sampling::round_one(&sampling::use_ids(&graph), &cfg.sampler, seed::derive(seed, &[1]))?;
        Ok(WordRun { graph, seed, round: 1, plan: Some(plan), clustering: None, outcome: None })
    }

    pub fn graph(&self) -> &UsageGraph {
        &self.graph
    }

    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn plan(&self) -> Option<&RoundPlan> {
        self.plan.as_ref()
    }

    /// Clustering from the most recent advance, if any.
    pub fn clustering(&self) -> Option<&Clustering> {
        self.clustering.as_ref()
    }

    pub fn outcome(&self) -> Option<&Outcome> {
        self.outcome.as_ref()
    }

    pub fn is_done(&self) -> bool {
        self.outcome.is_some()
    }

    pub fn record(&mut self, judgment: Judgment) -> Result<()> {
        if self.is_done() {
            return Err(Error::InvalidJudgment(format!("word `{}` is finished", self.graph.word())));
        }
        self.graph.add_judgment(judgment)
    }

    /// The graph that clustering and sampling see: undecidable nodes removed.
    pub fn working_graph(&self) -> UsageGraph {
        self.graph.remove_undecidable_nodes()
    }

    /// Closes the current round: cleans and clusters the graph, then plans
    /// the next round or finishes the word with its change scores.
    pub fn advance(&mut self, cfg: &PipelineConfig) -> Result<Step<'_>> {
        if self.is_done() {
            return Ok(Step::Done(self.outcome.as_ref().expect("checked")));
        }
        let working = self.working_graph();
        if working.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let clustering =
            clustering::cluster(&working, &cfg.clustering.with_seed(seed::derive(self.seed, &[u64::from(self.round), 1])))?;
        let state = SamplerState {
            graph: working,
            clustering: clustering.clone(),
            round: self.round,
            config: cfg.sampler.clone(),
        };
        self.clustering = Some(clustering);
        match sampling::next_round(&state, seed::derive(self.seed, &[u64::from(self.round), 2]))? {
            NextRound::Plan(plan) => {
                self.round = plan.round;
                self.plan = Some(plan);
                Ok(Step::Plan(self.plan.as_ref().expect("just set")))
            }
            NextRound::Done => {
                let converged = self.round < cfg.sampler.max_rounds
                    || sampling::clusters_fully_compared(&state.graph, &state.clustering);
                let sfd = crate::measures::sfd_from_clustering(&state.graph, &state.clustering);
                let scores = ChangeScores::from_sfd(self.graph.word(), &sfd, cfg.thresholds)?;
                self.plan = None;
                self.outcome = Some(Outcome { clustering: state.clustering, scores, converged });
                Ok(Step::Done(self.outcome.as_ref().expect("just set")))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Epoch, UseNode};

    #[test]
    fn runs_to_completion_with_a_perfect_annotator() {
        let mut g = UsageGraph::new("w");
        for i in 0..30 {
            let epoch = if i < 15 { Epoch::C1 } else { Epoch::C2 };
            g.add_node(UseNode::new(format!("u{i:02}"), epoch, "w", vec!["w".into()], 0).unwrap()).unwrap();
        }
        // Sense = index mod 3, except C2 lacks sense 2.
        let sense = |id: &str| {
            let i: usize = id[1..].parse().unwrap();
            if i >= 15 && i % 3 == 2 { 0 } else { i % 3 }
        };
        let cfg = PipelineConfig::default();
        let mut run = WordRun::start(g, &cfg, 11).unwrap();
        loop {
            let plan = run.plan().unwrap().clone();
            for item in &plan.items {
                for a in &item.annotators {
                    let same = sense(item.pair.first().as_str()) == sense(item.pair.second().as_str());
                    run.record(Judgment::new(item.pair.clone(), a.clone(), if same { 4 } else { 1 }, plan.round).unwrap())
                        .unwrap();
                }
            }
            if let Step::Done(out) = run.advance(&cfg).unwrap() {
                assert_eq!(out.clustering.cluster_count(), 3);
                assert_eq!(out.scores.binary, 1);
                assert!(out.converged);
                break;
            }
        }
        assert!(run.record(Judgment::new(crate::graph::Pair::new("u00", "u01").unwrap(), "x", 4, 9).unwrap()).is_err());
    }
}
