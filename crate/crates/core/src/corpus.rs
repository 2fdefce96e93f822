//! Corpus files, preprocessing, use sampling, control-word selection and
//! corpus statistics.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use rand::seq::index;
use rand::seq::IndexedRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Epoch, UseNode};
use crate::seed;

/// Sentences of whitespace-separated tokens from one epoch.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Corpus {
    pub sentences: Vec<Vec<String>>,
    pub epoch: Option<Epoch>,
}

impl Corpus {
    pub fn new(sentences: Vec<Vec<String>>, epoch: Option<Epoch>) -> Result<Self> {
        if sentences.iter().flatten().any(|t| t.is_empty() || t.chars().any(char::is_whitespace)) {
            return Err(Error::InvalidConfig("tokens must be non-empty and contain no whitespace".into()));
        }
        Ok(Corpus { sentences, epoch })
    }

    /// One sentence per line; blank lines are skipped.
    pub fn parse(text: &str, epoch: Option<Epoch>) -> Self {
        let sentences = text
            .lines()
            .map(|l| l.split_whitespace().map(str::to_owned).collect::<Vec<_>>())
            .filter(|s| !s.is_empty())
            .collect();
        Corpus { sentences, epoch }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.sentences {
            out.push_str(&s.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn with_epoch(mut self, epoch: Epoch) -> Self {
        self.epoch = Some(epoch);
        self
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }

    pub fn vocabulary(&self) -> BTreeSet<&str> {
        self.sentences.iter().flatten().map(String::as_str).collect()
    }

    pub fn profile(&self) -> FrequencyProfile {
        let mut counts = HashMap::new();
        for t in self.sentences.iter().flatten() {
            *counts.entry(t.clone()).or_insert(0) += 1;
        }
        FrequencyProfile { counts, total: self.token_count() as u64 }
    }

    fn mentions(&self, sentence: usize, targets: &BTreeSet<&str>) -> bool {
        self.sentences[sentence].iter().any(|t| targets.contains(t.as_str()))
    }
}

/// Reads a corpus file: UTF-8, one sentence per line.
pub fn load_corpus(path: &Path) -> Result<Corpus> {
    let bytes = std::fs::read(path)?;
    let text = String::from_utf8(bytes).map_err(|e| Error::Io(format!("{}: not UTF-8: {e}", path.display())))?;
    Ok(Corpus::parse(&text, None))
}

pub fn write_corpus(corpus: &Corpus, path: &Path) -> Result<()> {
    std::fs::write(path, corpus.to_text())?;
    Ok(())
}

/// Targets file: one lemma per line.
pub fn load_targets(path: &Path) -> Result<Vec<String>> {
    Ok(std::fs::read_to_string(path)?.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_owned).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FrequencyProfile {
    pub counts: HashMap<String, u64>,
    pub total: u64,
}

impl FrequencyProfile {
    pub fn count(&self, word: &str) -> u64 {
        self.counts.get(word).copied().unwrap_or(0)
    }

    pub fn relative(&self, word: &str) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.count(word) as f64 / self.total as f64
        }
    }

    pub fn types(&self) -> usize {
        self.counts.len()
    }
}

pub fn filter_sentences(corpus: &Corpus, min_tokens: usize) -> Corpus {
    Corpus {
        sentences: corpus.sentences.iter().filter(|s| s.len() >= min_tokens).cloned().collect(),
        epoch: corpus.epoch,
    }
}

/// Types per thousand tokens.
pub fn ttr(corpus: &Corpus) -> Result<f64> {
    let p = corpus.profile();
    ttr_from_counts(p.types() as f64, p.total as f64)
}

pub fn ttr_from_counts(types: f64, tokens: f64) -> Result<f64> {
    if tokens <= 0.0 {
        return Err(Error::EmptyCorpus);
    }
    Ok(types / tokens * 1000.0)
}

/// Up to `n` occurrences of `target`, drawn uniformly without replacement.
/// Each occurrence is its own use, so a sentence can contribute several.
/// Node ids are `<epoch>-<sentence>-<token>`; uses come back in corpus order.
pub fn sample_uses(corpus: &Corpus, target: &str, n: usize, seed: u64) -> Vec<UseNode> {
    let epoch = corpus.epoch.unwrap_or(Epoch::C1);
    let occurrences: Vec<(usize, usize)> = corpus
        .sentences
        .iter()
        .enumerate()
        .flat_map(|(s, toks)| toks.iter().enumerate().filter(|(_, t)| *t == target).map(move |(i, _)| (s, i)))
        .collect();
    let mut rng = seed::rng(seed);
    let mut picked = index::sample(&mut rng, occurrences.len(), n.min(occurrences.len())).into_vec();
    picked.sort_unstable();
    picked
        .into_iter()
        .map(|k| {
            let (s, i) = occurrences[k];
            let id = format!("{}-{s}-{i}", epoch.as_str().to_lowercase());
            UseNode::new(id, epoch, target, corpus.sentences[s].clone(), i).expect("occurrence index is in range")
        })
        .collect()
}

/// Shrinks the larger corpus to the smaller one's sentence count. Every
/// sentence mentioning a target is kept and the rest of the quota is a
/// uniform sample of the other sentences; original order is preserved.
pub fn downsample_matched(a: &Corpus, b: &Corpus, targets: &[String], seed: u64) -> Result<(Corpus, Corpus)> {
    if a.len() == b.len() {
        return Ok((a.clone(), b.clone()));
    }
    let (large, quota) = if a.len() > b.len() { (a, b.len()) } else { (b, a.len()) };
    let set: BTreeSet<&str> = targets.iter().map(String::as_str).collect();
    let (with, without): (Vec<usize>, Vec<usize>) = (0..large.len()).partition(|&i| large.mentions(i, &set));
    if with.len() > quota {
        return Err(Error::QuotaExceeded { targets: with.len(), quota });
    }
    let mut rng = seed::rng(seed);
    let mut keep: Vec<usize> = with;
    keep.extend(without.choose_multiple(&mut rng, quota - keep.len()).copied());
    keep.sort_unstable();
    let reduced = Corpus { sentences: keep.into_iter().map(|i| large.sentences[i].clone()).collect(), epoch: large.epoch };
    Ok(if a.len() > b.len() { (reduced, b.clone()) } else { (a.clone(), reduced) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlCandidate {
    pub word: String,
    pub freq1: f64,
    pub freq2: f64,
    pub pos: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlGrid {
    pub p_min: f64,
    pub p_max: f64,
    pub step: f64,
}

impl Default for ControlGrid {
    fn default() -> Self {
        ControlGrid { p_min: 0.03, p_max: 0.15, step: 0.01 }
    }
}

impl ControlGrid {
    /// Grid values `p_min + i * step` up to `p_max`, computed from integer
    /// steps so no rounding drift accumulates.
    pub fn values(&self) -> Result<Vec<f64>> {
        if [self.step, self.p_min, self.p_max].iter().any(|v| v.is_nan()) || self.step <= 0.0 || self.p_min < 0.0 || self.p_min > self.p_max {
            return Err(Error::InvalidConfig("control grid needs 0 <= p_min <= p_max and step > 0".into()));
        }
        let steps = ((self.p_max - self.p_min) / self.step + 1e-9).floor() as usize;
        Ok((0..=steps).map(|i| self.p_min + i as f64 * self.step).collect())
    }
}

/// Whether a candidate's frequencies lie within `p` times the changed
/// word's frequency in both epochs.
pub fn within_tolerance(target: (f64, f64), candidate: (f64, f64), p: f64) -> bool {
    const EPS: f64 = 1e-9;
    let fits = |t: f64, c: f64| (c - t).abs() <= p * t + EPS;
    fits(target.0, candidate.0) && fits(target.1, candidate.1)
}

/// Finds the smallest grid `p` at which a same-POS candidate matches the
/// changed word's frequency development, and picks one such candidate.
pub fn select_control(
    target: (f64, f64),
    candidates: &[ControlCandidate],
    pos: &str,
    grid: ControlGrid,
    seed: u64,
) -> Result<(String, f64)> {
    let same_pos: Vec<&ControlCandidate> = candidates.iter().filter(|c| c.pos == pos).collect();
    let mut rng = seed::rng(seed);
    for p in grid.values()? {
        let fits: Vec<&&ControlCandidate> =
            same_pos.iter().filter(|c| within_tolerance(target, (c.freq1, c.freq2), p)).collect();
        if let Some(c) = fits.choose(&mut rng) {
            return Ok((c.word.clone(), p));
        }
    }
    Err(Error::NoControlCandidate(grid.p_max))
}
