use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use semchange_core::clustering::{self, ClusterConfig, Clustering};
use semchange_core::corpus::{self, Corpus};
use semchange_core::evaluation::{self, AnswerSet};
use semchange_core::graph::{format, Epoch, UsageGraph};
use semchange_core::measures::{self, ChangeScores, Thresholds};
use semchange_core::sampling::{self, NextRound, SamplerConfig, SamplerState};
use semchange_core::seed;
use semchange_core::simulation::{self, SimulationConfig};

use crate::BaselineKind;

pub fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_graph(path: &Path) -> Result<UsageGraph> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    format::read_graph(BufReader::new(file)).with_context(|| format!("parsing {}", path.display()))
}

fn load_corpus(path: &Path) -> Result<Corpus> {
    corpus::load_corpus(path).with_context(|| format!("reading corpus {}", path.display()))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_owned(), |x| format!("{x:.6}"))
}

fn fmt_res(v: semchange_core::Result<f64>) -> String {
    fmt_opt(v.ok())
}

pub fn cluster(graph: &Path, seed: u64, max_clusters: Vec<usize>, restarts: usize) -> Result<String> {
    let graph = load_graph(graph)?.remove_undecidable_nodes();
    let cfg = ClusterConfig { max_clusters, restarts, seed, ..ClusterConfig::default() };
    let c = clustering::cluster(&graph, &cfg)?;
    let mut out = c.to_tsv();
    writeln!(
        out,
        "# loss={} normalized_loss={} clusters={}",
        clustering::loss(&graph, &c)?,
        fmt_res(clustering::normalized_loss(&graph, &c)),
        c.cluster_count()
    )?;
    Ok(out)
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct RoundState {
    /// Last completed round; 0 before any annotation.
    round: u32,
    sampler: SamplerConfig,
    clustering: ClusterConfig,
}

pub fn sample_round(dir: &Path, seed: u64) -> Result<String> {
    let graph = load_graph(&dir.join("graph.jsonl"))?;
    let state_file = dir.join("state.toml");
    let state: RoundState = if state_file.exists() { toml::from_str(&read(&state_file)?)? } else { RoundState::default() };
    state.sampler.validate()?;
    if state.round == 0 {
        return Ok(sampling::round_one(&sampling::use_ids(&graph), &state.sampler, seed)?.to_tsv());
    }
    let working = graph.remove_undecidable_nodes();
    let clustering_file = dir.join("clustering.tsv");
    let clustering = if clustering_file.exists() {
        Clustering::parse_tsv(&read(&clustering_file)?)?.restricted_to(working.node_ids())
    } else {
        let cfg = state.clustering.with_seed(seed::derive(seed, &[u64::from(state.round), 1]));
        clustering::cluster(&working, &cfg)?
    };
    let round = state.round;
    let sampler_state = SamplerState { graph: working, clustering, round, config: state.sampler };
    Ok(match sampling::next_round(&sampler_state, seed)? {
        NextRound::Plan(plan) => plan.to_tsv(),
        NextRound::Done => format!("# done after round {round}\n"),
    })
}

pub fn simulate(config: Option<&Path>, seed: Option<u64>, report: &Path) -> Result<String> {
    let mut cfg: SimulationConfig = match config {
        Some(path) => toml::from_str(&read(path)?).with_context(|| format!("parsing {}", path.display()))?,
        None => SimulationConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let result = simulation::run_simulation(&cfg)?;
    emit(Some(report), &result.to_tsv())?;
    Ok(format!(
        "words={} mean_ari={:.6} mean_judgments_per_annotator={:.1} max_rounds={} all_converged={}\n",
        result.words.len(),
        result.mean_ari,
        result.mean_judgments_per_annotator,
        result.max_rounds(),
        result.all_converged()
    ))
}

pub fn score_change(sfd: &Path, thresholds: Option<&[u64]>) -> Result<String> {
    let thresholds = match thresholds {
        None => None,
        Some(&[k, n]) => Some(Thresholds { k, n }),
        Some(other) => bail!("--thresholds takes `k,n`, got {} values", other.len()),
    };
    let mut out = String::new();
    for (word, dist) in measures::parse_sfd_table(&read(sfd)?)? {
        let s = ChangeScores::from_sfd(&word, &dist, thresholds).with_context(|| format!("scoring `{word}`"))?;
        writeln!(out, "{}\t{}\t{:.6}", s.word, s.binary, s.graded)?;
    }
    Ok(out)
}

pub fn score(subtask: u8, answers: &Path, gold: &Path) -> Result<String> {
    let pred = AnswerSet::load(subtask, answers)?;
    let gold = AnswerSet::load(subtask, gold)?;
    let mut out = String::new();
    if subtask == 1 {
        let prf = evaluation::precision_recall_f1(&pred, &gold, 1)?;
        writeln!(out, "accuracy\t{:.6}", evaluation::accuracy(&pred, &gold)?)?;
        writeln!(out, "precision\t{}", fmt_opt(prf.precision))?;
        writeln!(out, "recall\t{}", fmt_opt(prf.recall))?;
        writeln!(out, "f1\t{}", fmt_opt(prf.f1))?;
    } else {
        writeln!(out, "spearman\t{:.6}", evaluation::spearman(&pred, &gold)?)?;
    }
    Ok(out)
}

pub fn baseline(kind: BaselineKind, c1: &Path, c2: &Path, targets: &Path, window: usize, binarize: bool) -> Result<String> {
    let targets = corpus::load_targets(targets)?;
    let answers = match kind {
        BaselineKind::Majority => return Ok(evaluation::majority_baseline(&targets).to_tsv()),
        BaselineKind::Freq => evaluation::freq_baseline(&load_corpus(c1)?, &load_corpus(c2)?, &targets)?,
        BaselineKind::Count => {
            let output = evaluation::count_baseline(&load_corpus(c1)?, &load_corpus(c2)?, &targets, window)?;
            for (word, err) in &output.undefined {
                tracing::warn!(word = %word, "no score: {err}");
            }
            output.answers
        }
    };
    Ok(if binarize { evaluation::binarize_scores(&answers)? } else { answers }.to_tsv())
}

pub fn analyze(dir: &Path, gold: &Path, stats: &Path, subtask: u8) -> Result<String> {
    let gold = AnswerSet::load(subtask, gold)?;
    let stats = evaluation::parse_stats(&read(stats)?)?;
    let mut files: Vec<_> = fs::read_dir(dir)?.filter_map(|e| e.ok()).map(|e| e.path()).filter(|p| p.is_file()).collect();
    files.sort();
    if files.is_empty() {
        bail!("no answer files in {}", dir.display());
    }
    let metric = if subtask == 1 { "accuracy" } else { "spearman" };
    let mut out = format!("# system\t{metric}\tfrq_d\tfrq_m\tply_m\n");
    let mut systems = Vec::new();
    for path in files {
        let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let answers = AnswerSet::load(subtask, &path).with_context(|| format!("reading {}", path.display()))?;
        let score =
            if subtask == 1 { evaluation::accuracy(&answers, &gold) } else { evaluation::spearman(&answers, &gold) };
        let bias = evaluation::bias_correlations(&answers, &stats).ok();
        let col = |f: fn(&evaluation::BiasCorrelations) -> Option<f64>| fmt_opt(bias.as_ref().and_then(f));
        writeln!(
            out,
            "{name}\t{}\t{}\t{}\t{}",
            fmt_res(score),
            col(|b| b.frq_d),
            col(|b| b.frq_m),
            col(|b| b.ply_m)
        )?;
        if let Some(b) = &bias {
            if !b.excluded.is_empty() {
                tracing::warn!(system = %name, "excluded from bias correlations: {}", b.excluded.join(", "));
            }
        }
        systems.push(answers);
    }
    out.push_str("# word\tdifficulty\n");
    for (word, d) in evaluation::prediction_difficulty(&systems, &gold)? {
        writeln!(out, "{word}\t{d:.6}")?;
    }
    Ok(out)
}

pub fn stats(path: &Path) -> Result<String> {
    let c = load_corpus(path)?;
    let p = c.profile();
    Ok(format!("tokens\t{}\ntypes\t{}\nttr\t{}\n", p.total, p.types(), fmt_res(corpus::ttr(&c))))
}

pub fn sample_uses(path: &Path, target: &str, n: usize, seed: u64, epoch: &str) -> Result<String> {
    let epoch: Epoch = epoch.parse()?;
    let c = load_corpus(path)?.with_epoch(epoch);
    let uses = corpus::sample_uses(&c, target, n, seed);
    if uses.is_empty() {
        bail!("`{target}` does not occur in {}", path.display());
    }
    let graph = UsageGraph::with_nodes(target, uses.into_iter().map(Into::into))?;
    Ok(format::graph_to_string(&graph))
}
