//! Scoring of change predictions, baselines, and bias and difficulty
//! analyses over system answers.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};

/// Predictions or gold values for one subtask: 0/1 labels for subtask 1,
/// real change scores for subtask 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerSet {
    pub subtask: u8,
    pub entries: BTreeMap<String, f64>,
}

impl AnswerSet {
    pub fn new(subtask: u8, entries: impl IntoIterator<Item = (String, f64)>) -> Result<Self> {
        let set = AnswerSet { subtask, entries: entries.into_iter().collect() };
        set.validate()?;
        Ok(set)
    }

    pub fn labels(entries: impl IntoIterator<Item = (String, u8)>) -> Result<Self> {
        Self::new(1, entries.into_iter().map(|(w, l)| (w, f64::from(l))))
    }

    pub fn scores(entries: impl IntoIterator<Item = (String, f64)>) -> Result<Self> {
        Self::new(2, entries)
    }

    pub fn validate(&self) -> Result<()> {
        match self.subtask {
            1 => {
                if let Some((w, v)) = self.entries.iter().find(|(_, &v)| v != 0.0 && v != 1.0) {
                    return Err(Error::InvalidConfig(format!("label for `{w}` must be 0 or 1, got {v}")));
                }
            }
            2 => {
                if let Some((w, _)) = self.entries.iter().find(|(_, v)| !v.is_finite()) {
                    return Err(Error::InvalidConfig(format!("score for `{w}` is not finite")));
                }
            }
            other => return Err(Error::InvalidConfig(format!("unknown subtask {other}"))),
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<f64> {
        self.entries.get(word).copied()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.values().copied().collect()
    }

    fn expect_subtask(&self, expected: u8) -> Result<()> {
        if self.subtask != expected {
            return Err(Error::WrongSubtask { expected, got: self.subtask });
        }
        Ok(())
    }

    /// One `word<TAB>value` line per entry, in word order.
    pub fn to_tsv(&self) -> String {
        self.entries
            .iter()
            .map(|(w, v)| if self.subtask == 1 { format!("{w}\t{v:.0}\n") } else { format!("{w}\t{v}\n") })
            .collect()
    }

    pub fn parse(subtask: u8, text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |msg: String| Error::Parse { line: i + 1, msg };
            let (word, value) = line
                .split_once('\t')
                .ok_or_else(|| parse_err("expected `word<TAB>value`".into()))?;
            let value = value.trim();
            let v: f64 = if subtask == 1 {
                match value {
                    "0" => 0.0,
                    "1" => 1.0,
                    _ => return Err(parse_err(format!("label must be 0 or 1, got `{value}`"))),
                }
            } else {
                value.parse().map_err(|_| parse_err(format!("invalid score `{value}`")))?
            };
            if entries.insert(word.to_owned(), v).is_some() {
                return Err(parse_err(format!("duplicate word `{word}`")));
            }
        }
        AnswerSet::new(subtask, entries)
    }

    pub fn load(subtask: u8, path: &Path) -> Result<Self> {
        Self::parse(subtask, &std::fs::read_to_string(path)?)
    }
}

fn aligned(pred: &AnswerSet, gold: &AnswerSet) -> Result<(Vec<f64>, Vec<f64>)> {
    if !pred.entries.keys().eq(gold.entries.keys()) {
        return Err(Error::WordSetMismatch);
    }
    Ok((pred.values(), gold.values()))
}

pub fn accuracy(pred: &AnswerSet, gold: &AnswerSet) -> Result<f64> {
    pred.expect_subtask(1)?;
    gold.expect_subtask(1)?;
    let (p, g) = aligned(pred, gold)?;
    if p.is_empty() {
        return Err(Error::Undefined("accuracy over zero words"));
    }
    Ok(p.iter().zip(&g).filter(|(a, b)| a == b).count() as f64 / p.len() as f64)
}

/// Ranks starting at 1; tied values share the mean of the ranks they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Spearman correlation of two aligned vectors with tie-averaged ranks.
pub fn spearman_vectors(pred: &[f64], gold: &[f64]) -> Result<f64> {
    if pred.len() != gold.len() {
        return Err(Error::LengthMismatch(pred.len(), gold.len()));
    }
    if pred.len() < 3 {
        return Err(Error::TooFewWords { need: 3, got: pred.len() });
    }
    let constant = |v: &[f64]| v.iter().all(|x| *x == v[0]);
    if constant(gold) {
        return Err(Error::ConstantVector("gold"));
    }
    if constant(pred) {
        return Err(Error::ConstantVector("prediction"));
    }
    Ok(pearson(&average_ranks(pred), &average_ranks(gold)).expect("non-constant ranks"))
}

pub fn spearman(pred: &AnswerSet, gold: &AnswerSet) -> Result<f64> {
    pred.expect_subtask(2)?;
    gold.expect_subtask(2)?;
    let (p, g) = aligned(pred, gold)?;
    spearman_vectors(&p, &g)
}

/// Precision, recall and F1; a component is `None` where it is undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

/// Harmonic mean of precision and recall, undefined when both are 0.
pub fn f1(precision: f64, recall: f64) -> Option<f64> {
    if precision + recall == 0.0 {
        None
    } else {
        Some(2.0 * precision * recall / (precision + recall))
    }
}

pub fn precision_recall_f1(pred: &AnswerSet, gold: &AnswerSet, positive: u8) -> Result<Prf> {
    pred.expect_subtask(1)?;
    gold.expect_subtask(1)?;
    let (p, g) = aligned(pred, gold)?;
    let pos = f64::from(positive);
    let tp = p.iter().zip(&g).filter(|(a, b)| **a == pos && **b == pos).count();
    let predicted = p.iter().filter(|a| **a == pos).count();
    let actual = g.iter().filter(|b| **b == pos).count();
    let precision = (predicted > 0).then(|| tp as f64 / predicted as f64);
    let recall = (actual > 0).then(|| tp as f64 / actual as f64);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) => f1(p, r),
        _ => None,
    };
    Ok(Prf { precision, recall, f1 })
}

/// Metric values per language and their mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_language: BTreeMap<String, f64>,
    pub average: f64,
}

impl EvalReport {
    pub fn new(per_language: BTreeMap<String, f64>) -> Result<Self> {
        if per_language.is_empty() {
            return Err(Error::Undefined("average over zero languages"));
        }
        let average = per_language.values().sum::<f64>() / per_language.len() as f64;
        Ok(EvalReport { per_language, average })
    }
}

/// Absolute difference of the targets' relative frequencies.
pub fn freq_baseline(c1: &Corpus, c2: &Corpus, targets: &[String]) -> Result<AnswerSet> {
    let (p1, p2) = (c1.profile(), c2.profile());
    if p1.total == 0 || p2.total == 0 {
        return Err(Error::EmptyCorpus);
    }
    AnswerSet::scores(targets.iter().map(|t| (t.clone(), (p1.relative(t) - p2.relative(t)).abs())))
}

/// Symmetric co-occurrence counts within `window` tokens of each target
/// occurrence, never crossing a sentence boundary.
pub fn cooccurrence(corpus: &Corpus, target: &str, window: usize) -> HashMap<String, u64> {
    let mut counts = HashMap::new();
    for sentence in &corpus.sentences {
        for (i, tok) in sentence.iter().enumerate() {
            if tok != target {
                continue;
            }
            let lo = i.saturating_sub(window);
            let hi = (i + window).min(sentence.len() - 1);
            for (j, ctx) in sentence.iter().enumerate().take(hi + 1).skip(lo) {
                if j != i {
                    *counts.entry(ctx.clone()).or_insert(0) += 1;
                }
            }
        }
    }
    counts
}

pub fn cosine_distance(a: &[f64], b: &[f64]) -> Option<f64> {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some((1.0 - dot / (na * nb)).max(0.0))
}

/// Scores with the words whose score is undefined kept apart.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineOutput {
    pub answers: AnswerSet,
    pub undefined: BTreeMap<String, Error>,
}

/// Cosine distance between a target's count vectors in both corpora. The
/// columns are the context words present in both corpora's vocabularies.
pub fn count_baseline(c1: &Corpus, c2: &Corpus, targets: &[String], window: usize) -> Result<BaselineOutput> {
    if window == 0 {
        return Err(Error::InvalidConfig("window must be >= 1".into()));
    }
    if c1.token_count() == 0 || c2.token_count() == 0 {
        return Err(Error::EmptyCorpus);
    }
    let v1 = c1.vocabulary();
    let v2 = c2.vocabulary();
    let shared: BTreeSet<&str> = v1.intersection(&v2).copied().collect();
    let mut scores = Vec::new();
    let mut undefined = BTreeMap::new();
    for t in targets {
        let (a, b) = (cooccurrence(c1, t, window), cooccurrence(c2, t, window));
        let column = |m: &HashMap<String, u64>, w: &str| m.get(w).copied().unwrap_or(0) as f64;
        let x: Vec<f64> = shared.iter().map(|w| column(&a, w)).collect();
        let y: Vec<f64> = shared.iter().map(|w| column(&b, w)).collect();
        match cosine_distance(&x, &y) {
            Some(d) => scores.push((t.clone(), d)),
            None => {
                undefined.insert(t.clone(), Error::ZeroVector(t.clone()));
            }
        }
    }
    Ok(BaselineOutput { answers: AnswerSet::scores(scores)?, undefined })
}

pub fn majority_baseline(targets: &[String]) -> AnswerSet {
    AnswerSet { subtask: 1, entries: targets.iter().map(|t| (t.clone(), 0.0)).collect() }
}

/// Labels a word 1 iff its score exceeds the mean score.
pub fn binarize_scores(scores: &AnswerSet) -> Result<AnswerSet> {
    scores.expect_subtask(2)?;
    if scores.is_empty() {
        return Ok(AnswerSet { subtask: 1, entries: BTreeMap::new() });
    }
    let mean = scores.entries.values().sum::<f64>() / scores.len() as f64;
    Ok(AnswerSet {
        subtask: 1,
        entries: scores.entries.iter().map(|(w, &s)| (w.clone(), if s > mean { 1.0 } else { 0.0 })).collect(),
    })
}

/// Per-word corpus statistics for the bias analysis: relative frequency
/// and sense count in each epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WordStats {
    pub freq1: f64,
    pub freq2: f64,
    pub senses1: u32,
    pub senses2: u32,
}

impl WordStats {
    /// Absolute log-frequency difference, natural log.
    pub fn frq_d(&self) -> f64 {
        (self.freq1.ln() - self.freq2.ln()).abs()
    }

    pub fn frq_m(&self) -> f64 {
        self.freq1.ln().min(self.freq2.ln())
    }

    pub fn ply_m(&self) -> f64 {
        f64::from(self.senses1.min(self.senses2))
    }
}

pub fn parse_stats(text: &str) -> Result<BTreeMap<String, WordStats>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: &str| Error::Parse { line: i + 1, msg: msg.to_owned() };
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 5 {
            return Err(err("expected `word<TAB>freq1<TAB>freq2<TAB>senses1<TAB>senses2`"));
        }
        let f = |s: &str| s.parse::<f64>().map_err(|_| err("invalid frequency"));
        let k = |s: &str| s.parse::<u32>().map_err(|_| err("invalid sense count"));
        out.insert(
            cols[0].to_owned(),
            WordStats { freq1: f(cols[1])?, freq2: f(cols[2])?, senses1: k(cols[3])?, senses2: k(cols[4])? },
        );
    }
    Ok(out)
}

/// Spearman correlations of scores with the frequency-difference,
/// minimum-frequency and minimum-polysemy statistics. A statistic that is
/// constant over the words gets `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasCorrelations {
    pub frq_d: Option<f64>,
    pub frq_m: Option<f64>,
    pub ply_m: Option<f64>,
    /// Words left out because they are absent from a corpus.
    pub excluded: Vec<String>,
}

pub fn bias_correlations(scores: &AnswerSet, stats: &BTreeMap<String, WordStats>) -> Result<BiasCorrelations> {
    let mut excluded = Vec::new();
    let mut rows = Vec::new();
    for (w, &score) in &scores.entries {
        let s = stats.get(w).ok_or_else(|| Error::InvalidConfig(format!("no statistics for `{w}`")))?;
        if s.freq1 <= 0.0 || s.freq2 <= 0.0 {
            excluded.push(w.clone());
        } else {
            rows.push((score, *s));
        }
    }
    let x: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let corr = |f: fn(&WordStats) -> f64| -> Result<Option<f64>> {
        let y: Vec<f64> = rows.iter().map(|r| f(&r.1)).collect();
        match spearman_vectors(&x, &y) {
            Ok(v) => Ok(Some(v)),
            Err(Error::ConstantVector("gold")) => Ok(None),
            Err(e) => Err(e),
        }
    };
    Ok(BiasCorrelations { frq_d: corr(WordStats::frq_d)?, frq_m: corr(WordStats::frq_m)?, ply_m: corr(WordStats::ply_m)?, excluded })
}

/// Expected absolute rank error of a word with gold rank `r` among `n`
/// under uniformly random prediction ranks.
pub fn expected_rank_error(r: f64, n: usize) -> f64 {
    (1..=n).map(|j| (r - j as f64).abs()).sum::<f64>() / n as f64
}

/// Mean error of all systems per word. Subtask 1 uses label differences;
/// subtask 2 uses rank differences normalized by the expected rank error.
pub fn prediction_difficulty(systems: &[AnswerSet], gold: &AnswerSet) -> Result<BTreeMap<String, f64>> {
    if systems.is_empty() {
        return Err(Error::Undefined("difficulty needs at least one system"));
    }
    let words: Vec<String> = gold.entries.keys().cloned().collect();
    let mut totals = vec![0.0; words.len()];
    match gold.subtask {
        1 => {
            for s in systems {
                s.expect_subtask(1)?;
                let (p, g) = aligned(s, gold)?;
                for (t, (a, b)) in totals.iter_mut().zip(p.iter().zip(&g)) {
                    *t += (a - b).abs();
                }
            }
        }
        2 => {
            if words.len() < 2 {
                return Err(Error::TooFewWords { need: 2, got: words.len() });
            }
            let gold_ranks = average_ranks(&gold.values());
            let expected: Vec<f64> = gold_ranks.iter().map(|&r| expected_rank_error(r, words.len())).collect();
            for s in systems {
                s.expect_subtask(2)?;
                let (p, _) = aligned(s, gold)?;
                let ranks = average_ranks(&p);
                for (i, t) in totals.iter_mut().enumerate() {
                    *t += (ranks[i] - gold_ranks[i]).abs() / expected[i];
                }
            }
        }
        other => return Err(Error::WrongSubtask { expected: 2, got: other }),
    }
    let n = systems.len() as f64;
    Ok(words.into_iter().zip(totals).map(|(w, t)| (w, t / n)).collect())
}
