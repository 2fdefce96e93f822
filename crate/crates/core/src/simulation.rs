//! Simulated annotation campaigns over synthetic words with known senses.
//!
//! Ground-truth words get zipfian sense frequencies per epoch, some of them
//! lose a sense in one epoch, and noisy annotators judge the pairs the
//! sampler asks for. Recovery is scored with the adjusted Rand index.

use std::collections::BTreeMap;

use rand::seq::IteratorRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{ClusterConfig, Clustering};
use crate::error::{Error, Result};
use crate::graph::{Epoch, Judgment, NodeId, UsageGraph, UseNode};
use crate::pipeline::{PipelineConfig, Step, WordRun};
use crate::sampling::SamplerConfig;
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub word: String,
    pub nodes: Vec<UseNode>,
    pub senses: BTreeMap<NodeId, usize>,
    pub first: Vec<u64>,
    pub second: Vec<u64>,
    pub changed: bool,
}

impl GroundTruth {
    pub fn graph(&self) -> UsageGraph {
        UsageGraph::with_nodes(self.word.clone(), self.nodes.iter().cloned().map(Into::into))
            .expect("generated ids are unique")
    }

    pub fn sense_of(&self, id: &NodeId) -> Option<usize> {
        self.senses.get(id).copied()
    }

    pub fn clustering(&self) -> Clustering {
        Clustering::from_assignment(self.senses.iter().map(|(id, &s)| (id.clone(), s)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnotatorModel {
    pub sigma: f64,
    pub seed: u64,
}

impl AnnotatorModel {
    pub fn new(sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!("noise sigma must be finite and >= 0, got {sigma}")));
        }
        Ok(AnnotatorModel { sigma, seed })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationConfig {
    pub n_words: usize,
    /// Inclusive range of uses per epoch.
    pub freq_range: (u64, u64),
    pub zipf_exponent: f64,
    /// Inclusive range of senses per word.
    pub senses: (usize, usize),
    pub change_share: f64,
    pub sigma: f64,
    pub annotators: usize,
    pub sampler: SamplerConfig,
    pub clustering: ClusterConfig,
    pub seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            n_words: 40,
            freq_range: (50, 1000),
            zipf_exponent: 1.0,
            senses: (1, 5),
            change_share: 0.5,
            sigma: 0.5,
            annotators: 4,
            sampler: SamplerConfig::default(),
            clustering: ClusterConfig::default(),
            seed: 0,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.freq_range;
        if lo < 2 || lo > hi {
            return Err(Error::InvalidConfig(format!("frequency range [{lo}, {hi}] needs 2 <= low <= high")));
        }
        let (klo, khi) = self.senses;
        if klo < 1 || klo > khi {
            return Err(Error::InvalidConfig(format!("sense range [{klo}, {khi}] needs 1 <= low <= high")));
        }
        if !(0.0..=1.0).contains(&self.change_share) {
            return Err(Error::InvalidConfig("change_share must lie in [0, 1]".into()));
        }
        if self.change_share > 0.0 && khi < 2 {
            return Err(Error::InvalidConfig("changed words need at least two senses".into()));
        }
        if !(self.zipf_exponent >= 0.0 && self.zipf_exponent.is_finite()) {
            return Err(Error::InvalidConfig("zipf exponent must be finite and >= 0".into()));
        }
        AnnotatorModel::new(self.sigma, 0)?;
        self.pipeline().validate()
    }

    pub fn roster(&self) -> Vec<String> {
        (1..=self.annotators).map(|i| format!("annotator{i}")).collect()
    }

    /// The per-word pipeline settings, with the roster built from the
    /// annotator count.
    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            sampler: SamplerConfig { annotators: self.roster(), ..self.sampler.clone() },
            clustering: self.clustering.clone(),
            thresholds: None,
        }
    }

    pub fn changed_words(&self) -> usize {
        ((self.change_share * self.n_words as f64) - 1e-9).ceil().max(0.0) as usize
    }
}

/// Splits `total` over weights by the largest remainder method. Ties in the
/// remainder go to the earlier index.
pub fn largest_remainder(total: u64, weights: &[f64]) -> Vec<u64> {
    let sum: f64 = weights.iter().sum();
    if weights.is_empty() || sum <= 0.0 {
        return vec![0; weights.len()];
    }
    let quotas: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut out: Vec<u64> = quotas.iter().map(|q| q.floor() as u64).collect();
    let assigned: u64 = out.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (quotas[a] - quotas[a].floor(), quotas[b] - quotas[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned) as usize) {
        out[i] += 1;
    }
    out
}

pub fn zipf_weights(k: usize, exponent: f64) -> Vec<f64> {
    (1..=k).map(|r| 1.0 / (r as f64).powf(exponent)).collect()
}

/// True iff some sense is attested in exactly one epoch.
fn gains_or_loses(d: &[u64], e: &[u64]) -> bool {
    d.iter().zip(e).any(|(&a, &b)| (a == 0) != (b == 0))
}

fn generate_word(cfg: &SimulationConfig, index: usize, change: bool, seed: u64) -> GroundTruth {
    let mut rng = seed::rng(seed);
    let (klo, khi) = cfg.senses;
    let k = rng.random_range(if change { klo.max(2) } else { klo }..=khi);
    let weights = zipf_weights(k, cfg.zipf_exponent);
    let mut freqs: [Vec<u64>; 2] = [0, 1].map(|_| {
        let total = rng.random_range(cfg.freq_range.0..=cfg.freq_range.1);
        largest_remainder(total, &weights)
    });
    if change {
        let side = rng.random_range(0..2);
        let lost = rng.random_range(1..k);
        let total: u64 = freqs[side].iter().sum();
        let kept: Vec<f64> = weights.iter().enumerate().map(|(i, &w)| if i == lost { 0.0 } else { w }).collect();
        freqs[side] = largest_remainder(total, &kept);
    }

    let word = format!("word{index:02}");
    let mut nodes = Vec::new();
    let mut senses = BTreeMap::new();
    for (epoch, counts) in Epoch::ALL.iter().zip(&freqs) {
        let mut i = 0;
        for (sense, &count) in counts.iter().enumerate() {
            for _ in 0..count {
                let id = NodeId::new(format!("{}-{}-{i:04}", word, epoch.as_str().to_lowercase()));
                nodes.push(UseNode::new(id.clone(), *epoch, word.clone(), vec![word.clone()], 0).expect("valid use"));
                senses.insert(id, sense);
                i += 1;
            }
        }
    }
    let [first, second] = freqs;
    GroundTruth { changed: gains_or_loses(&first, &second), word, nodes, senses, first, second }
}

/// Synthetic words with zipfian sense frequencies. A uniformly chosen
/// `ceil(change_share * n_words)` of them lose a non-dominant sense in one
/// epoch; that epoch's total is re-split over the remaining senses.
pub fn generate_ground_truth(cfg: &SimulationConfig, seed: u64) -> Result<Vec<GroundTruth>> {
    cfg.validate()?;
    let mut rng = seed::rng(seed::derive(seed, &[u64::MAX]));
    let changed: Vec<usize> = (0..cfg.n_words).choose_multiple(&mut rng, cfg.changed_words());
    Ok((0..cfg.n_words)
        .map(|i| generate_word(cfg, i, changed.contains(&i), seed::derive(seed, &[i as u64])))
        .collect())
}

/// One noisy judgment: 4 for same-sense pairs and 1 otherwise, plus
/// Gaussian noise, clipped to [1, 4] and rounded half up.
pub fn simulate_judgment(model: &AnnotatorModel, sense_u: usize, sense_v: usize, seed: u64) -> u8 {
    let base = if sense_u == sense_v { 4.0 } else { 1.0 };
    let noise = if model.sigma > 0.0 {
        let mut rng = seed::rng(seed::derive(model.seed, &[seed]));
        Normal::new(0.0, model.sigma).expect("sigma validated").sample(&mut rng)
    } else {
        0.0
    };
    ((base + noise).clamp(1.0, 4.0) + 0.5).floor() as u8
}

fn choose2(x: u64) -> f64 {
    (x * x.saturating_sub(1)) as f64 / 2.0
}

/// Permutation-adjusted Rand index between two clusterings of the same nodes.
/// Two trivial partitions that agree score 1.
pub fn adjusted_rand_index(a: &Clustering, b: &Clustering) -> Result<f64> {
    if !a.node_ids().eq(b.node_ids()) {
        return Err(Error::NodeSetMismatch);
    }
    let n = a.len() as u64;
    let mut table: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let mut rows = vec![0u64; a.cluster_count()];
    let mut cols = vec![0u64; b.cluster_count()];
    for (id, &la) in a.assignment() {
        let lb = b.cluster_of(id).expect("node sets match");
        *table.entry((la, lb)).or_default() += 1;
        rows[la] += 1;
        cols[lb] += 1;
    }
    let index: f64 = table.values().map(|&c| choose2(c)).sum();
    let sa: f64 = rows.iter().map(|&c| choose2(c)).sum();
    let sb: f64 = cols.iter().map(|&c| choose2(c)).sum();
    let total = choose2(n);
    if total == 0.0 {
        return Ok(1.0);
    }
    let expected = sa * sb / total;
    let max = (sa + sb) / 2.0;
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordReport {
    pub word: String,
    pub uses: usize,
    pub senses: usize,
    pub changed: bool,
    pub ari: f64,
    pub rounds: u32,
    pub judgments: usize,
    pub converged: bool,
    pub binary: u8,
    pub graded: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub words: Vec<WordReport>,
    pub mean_ari: f64,
    pub mean_judgments_per_annotator: f64,
}

impl SimulationReport {
    pub fn all_converged(&self) -> bool {
        self.words.iter().all(|w| w.converged)
    }

    pub fn max_rounds(&self) -> u32 {
        self.words.iter().map(|w| w.rounds).max().unwrap_or(0)
    }

    /// Tab-separated table with a header and a trailing summary line.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("word\tuses\tsenses\tchanged\tari\trounds\tjudgments\tconverged\tbinary\tgraded\n");
        for w in &self.words {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{:.6}\t{}\t{}\t{}\t{}\t{:.6}\n",
                w.word, w.uses, w.senses, w.changed, w.ari, w.rounds, w.judgments, w.converged, w.binary, w.graded
            ));
        }
        out.push_str(&format!(
            "# mean_ari={:.6} mean_judgments_per_annotator={:.1} words={}\n",
            self.mean_ari,
            self.mean_judgments_per_annotator,
            self.words.len()
        ));
        out
    }
}

/// Seed for the judgment `annotator` gives `pair` in a word run.
pub fn judgment_seed(word_seed: u64, pair: &crate::graph::Pair, annotator: &str) -> u64 {
    seed::derive(word_seed, &[seed::hash_str(&pair.to_string()), seed::hash_str(annotator)])
}

/// Annotator models of a word run, one per roster entry.
pub fn annotator_models(roster: &[String], sigma: f64, word_seed: u64) -> Result<BTreeMap<String, AnnotatorModel>> {
    roster
        .iter()
        .map(|a| Ok((a.clone(), AnnotatorModel::new(sigma, seed::derive(word_seed, &[seed::hash_str(a), 7]))?)))
        .collect()
}

/// Runs one ground-truth word through the full annotation loop.
pub fn simulate_word(truth: &GroundTruth, cfg: &SimulationConfig, word_seed: u64) -> Result<WordReport> {
    let pipeline = cfg.pipeline();
    let models = annotator_models(&pipeline.sampler.annotators, cfg.sigma, word_seed)?;
    let mut run = WordRun::start(truth.graph(), &pipeline, word_seed)?;
    let outcome = loop {
        let plan = run.plan().expect("running words have a plan").clone();
        for item in &plan.items {
            let (su, sv) = (truth.senses[item.pair.first()], truth.senses[item.pair.second()]);
            for a in &item.annotators {
                let value = simulate_judgment(&models[a], su, sv, judgment_seed(word_seed, &item.pair, a));
                run.record(Judgment::new(item.pair.clone(), a.clone(), value, plan.round)?)?;
            }
        }
        if let Step::Done(out) = run.advance(&pipeline)? {
            break out.clone();
        }
    };
    let survivors = outcome.clustering.node_ids().collect::<Vec<_>>();
    let truth_clustering = truth.clustering().restricted_to(survivors);
    Ok(WordReport {
        word: truth.word.clone(),
        uses: truth.nodes.len(),
        senses: truth.first.len(),
        changed: truth.changed,
        ari: adjusted_rand_index(&outcome.clustering, &truth_clustering)?,
        rounds: run.round(),
        judgments: run.graph().judgment_count(),
        converged: outcome.converged,
        binary: outcome.scores.binary,
        graded: outcome.scores.graded,
    })
}

/// Generates ground truth from the master seed and simulates every word.
pub fn run_simulation(cfg: &SimulationConfig) -> Result<SimulationReport> {
    let truths = generate_ground_truth(cfg, cfg.seed)?;
    let words: Vec<WordReport> = truths
        .par_iter()
        .enumerate()
        .map(|(i, t)| simulate_word(t, cfg, seed::derive(cfg.seed, &[i as u64, 0x5157])))
        .collect::<Result<_>>()?;
    let n = words.len().max(1) as f64;
    let mean_ari = words.iter().map(|w| w.ari).sum::<f64>() / n;
    let total: usize = words.iter().map(|w| w.judgments).sum();
    Ok(SimulationReport {
        mean_judgments_per_annotator: total as f64 / cfg.annotators.max(1) as f64,
        mean_ari,
        words,
    })
}
