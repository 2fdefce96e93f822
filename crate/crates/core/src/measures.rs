//! Change scores derived from a clustered usage graph: per-epoch sense
//! frequency distributions, the binary change label and the graded
//! Jensen-Shannon distance.

use serde::{Deserialize, Serialize};

use crate::clustering::Clustering;
use crate::error::{Error, Result};
use crate::graph::{Epoch, Node, UsageGraph};

/// Per-cluster use counts for each epoch; both vectors are indexed by
/// cluster id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SenseFrequencyDistribution {
    pub first: Vec<u64>,
    pub second: Vec<u64>,
}

impl SenseFrequencyDistribution {
    pub fn new(first: Vec<u64>, second: Vec<u64>) -> Result<Self> {
        if first.len() != second.len() {
            return Err(Error::LengthMismatch(first.len(), second.len()));
        }
        Ok(SenseFrequencyDistribution { first, second })
    }

    pub fn get(&self, epoch: Epoch) -> &[u64] {
        match epoch {
            Epoch::C1 => &self.first,
            Epoch::C2 => &self.second,
        }
    }

    /// Senses attested in a given epoch.
    pub fn attested(&self, epoch: Epoch) -> usize {
        self.get(epoch).iter().filter(|&&c| c > 0).count()
    }

    /// Larger of the two per-epoch sample sizes.
    pub fn max_sample_size(&self) -> u64 {
        self.first.iter().sum::<u64>().max(self.second.iter().sum())
    }
}

/// Counts uses per cluster and epoch. Sense-definition nodes are skipped and
/// uses absent from the clustering are not counted.
pub fn sfd_from_clustering(graph: &UsageGraph, clustering: &Clustering) -> SenseFrequencyDistribution {
    let k = clustering.cluster_count();
    let mut sfd = SenseFrequencyDistribution { first: vec![0; k], second: vec![0; k] };
    for node in graph.nodes() {
        let Node::Use(u) = node else { continue };
        let Some(c) = clustering.cluster_of(&u.id) else { continue };
        match u.corpus {
            Epoch::C1 => sfd.first[c] += 1,
            Epoch::C2 => sfd.second[c] += 1,
        }
    }
    sfd
}

/// Lower frequency thresholds `(k, n)` for the binary label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thresholds {
    pub k: u64,
    pub n: u64,
}

impl Thresholds {
    pub const SMALL_SAMPLE: Thresholds = Thresholds { k: 0, n: 1 };
    pub const LARGE_SAMPLE: Thresholds = Thresholds { k: 2, n: 5 };
}

/// Samples of at most 30 uses per epoch use (0, 1); larger ones (2, 5).
pub fn thresholds_for_sample_size(max_sample_size: u64) -> Thresholds {
    if max_sample_size <= 30 {
        Thresholds::SMALL_SAMPLE
    } else {
        Thresholds::LARGE_SAMPLE
    }
}

/// 1 iff some sense is attested at most `k` times in one epoch and at least
/// `n` times in the other.
pub fn binary_change(d: &[u64], e: &[u64], t: Thresholds) -> Result<u8> {
    if d.len() != e.len() {
        return Err(Error::LengthMismatch(d.len(), e.len()));
    }
    if t.k >= t.n {
        return Err(Error::InvalidConfig(format!("threshold k ({}) must be below n ({})", t.k, t.n)));
    }
    let changed = d.iter().zip(e).any(|(&di, &ei)| (di <= t.k && ei >= t.n) || (ei <= t.k && di >= t.n));
    Ok(u8::from(changed))
}

/// Jensen-Shannon distance (base-2 logarithms) between the normalized
/// distributions; lies in [0, 1].
pub fn graded_change(d: &[u64], e: &[u64]) -> Result<f64> {
    if d.len() != e.len() {
        return Err(Error::LengthMismatch(d.len(), e.len()));
    }
    let (sd, se) = (d.iter().sum::<u64>(), e.iter().sum::<u64>());
    if sd == 0 || se == 0 {
        return Err(Error::EmptyDistribution);
    }
    let (sd, se) = (sd as f64, se as f64);
    let mut divergence = 0.0;
    for (&di, &ei) in d.iter().zip(e) {
        if di == 0 && ei == 0 {
            continue;
        }
        let (p, q) = (di as f64 / sd, ei as f64 / se);
        let m = 0.5 * (p + q);
        if p > 0.0 {
            divergence += 0.5 * p * (p / m).log2();
        }
        if q > 0.0 {
            divergence += 0.5 * q * (q / m).log2();
        }
    }
    Ok(divergence.clamp(0.0, 1.0).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeScores {
    pub word: String,
    pub binary: u8,
    pub graded: f64,
    pub thresholds: Thresholds,
}

impl ChangeScores {
    /// Scores a distribution, picking thresholds from its sample size unless
    /// given explicitly.
    pub fn from_sfd(word: impl Into<String>, sfd: &SenseFrequencyDistribution, thresholds: Option<Thresholds>) -> Result<Self> {
        let thresholds = thresholds.unwrap_or_else(|| thresholds_for_sample_size(sfd.max_sample_size()));
        Ok(ChangeScores {
            word: word.into(),
            binary: binary_change(&sfd.first, &sfd.second, thresholds)?,
            graded: graded_change(&sfd.first, &sfd.second)?,
            thresholds,
        })
    }

    pub fn from_clustering(graph: &UsageGraph, clustering: &Clustering) -> Result<Self> {
        let sfd = sfd_from_clustering(graph, clustering);
        Self::from_sfd(graph.word(), &sfd, None)
    }
}

fn parse_counts(field: &str, line: usize) -> Result<Vec<u64>> {
    field
        .split(',')
        .map(|c| c.trim().parse::<u64>().map_err(|_| Error::Parse { line, msg: format!("invalid count `{c}`") }))
        .collect()
}

/// Reads `word<TAB>d1,d2,..<TAB>e1,e2,..` lines of per-sense counts.
pub fn parse_sfd_table(text: &str) -> Result<Vec<(String, SenseFrequencyDistribution)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(Error::Parse { line: i + 1, msg: "expected `word<TAB>counts<TAB>counts`".into() });
        }
        let sfd = SenseFrequencyDistribution::new(parse_counts(cols[1], i + 1)?, parse_counts(cols[2], i + 1)?)?;
        out.push((cols[0].to_owned(), sfd));
    }
    Ok(out)
}
