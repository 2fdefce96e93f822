use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};

mod commands;

#[derive(Parser, Debug)]
#[command(name = "semchange", version, about = "Usage-graph annotation and lexical semantic change tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    Freq,
    Count,
    Majority,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Cluster a usage graph by correlation clustering.
    Cluster {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated caps on the number of clusters.
        #[arg(long, value_delimiter = ',', default_values_t = [2, 4, 8, 16])]
        max_clusters: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        restarts: usize,
        /// Assignment file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plan the next annotation round for a word.
    ///
    /// The state directory holds `graph.jsonl`, and optionally
    /// `clustering.tsv` and `state.toml` (`round = N` plus a `[sampler]` table).
    SampleRound {
        #[arg(long)]
        state: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the annotation simulation and report recovery per word.
    Simulate {
        /// TOML simulation settings; defaults when absent.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        report: PathBuf,
    },
    /// Binary and graded change from per-sense counts.
    ScoreChange {
        /// Lines of `word<TAB>d1,d2,..<TAB>e1,e2,..`.
        #[arg(long)]
        sfd: PathBuf,
        /// Fixed `k,n` thresholds instead of picking them by sample size.
        #[arg(long, value_delimiter = ',')]
        thresholds: Option<Vec<u64>>,
    },
    /// Score an answer file against gold.
    Score {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        subtask: u8,
        #[arg(long)]
        answers: PathBuf,
        #[arg(long)]
        gold: PathBuf,
    },
    /// Compute a baseline answer file.
    Baseline {
        kind: BaselineKind,
        #[arg(long)]
        corpus1: PathBuf,
        #[arg(long)]
        corpus2: PathBuf,
        #[arg(long)]
        targets: PathBuf,
        #[arg(long, default_value_t = 4)]
        window: usize,
        /// Threshold graded scores at their mean to produce 0/1 labels.
        #[arg(long)]
        binarize: bool,
    },
    /// Correlation tables and per-word difficulty over many answer files.
    Analyze {
        #[arg(long)]
        answers_dir: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        /// Lines of `word<TAB>freq1<TAB>freq2<TAB>senses1<TAB>senses2`.
        #[arg(long)]
        stats: PathBuf,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
        subtask: u8,
    },
    /// Token count, type count and types per thousand tokens.
    Stats {
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Sample uses of a target word and write them as a graph file.
    SampleUses {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        target: String,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Corpus the uses belong to, C1 or C2.
        #[arg(long, default_value = "C1")]
        epoch: String,
    },
    /// Run the annotation service, configured from the environment.
    Serve,
}

fn main() -> Result<()> {
    tracing_subscriber::fmt().with_writer(std::io::stderr).init();
    let out = match Cli::parse().command {
        Command::Cluster { graph, seed, max_clusters, restarts, out } => {
            let text = commands::cluster(&graph, seed, max_clusters, restarts)?;
            return commands::emit(out.as_deref(), &text);
        }
        Command::SampleRound { state, seed, out } => {
            let text = commands::sample_round(&state, seed)?;
            return commands::emit(out.as_deref(), &text);
        }
        Command::Simulate { config, seed, report } => commands::simulate(config.as_deref(), seed, &report)?,
        Command::ScoreChange { sfd, thresholds } => commands::score_change(&sfd, thresholds.as_deref())?,
        Command::Score { subtask, answers, gold } => commands::score(subtask, &answers, &gold)?,
        Command::Baseline { kind, corpus1, corpus2, targets, window, binarize } => {
            commands::baseline(kind, &corpus1, &corpus2, &targets, window, binarize)?
        }
        Command::Analyze { answers_dir, gold, stats, subtask } => commands::analyze(&answers_dir, &gold, &stats, subtask)?,
        Command::Stats { corpus } => commands::stats(&corpus)?,
        Command::SampleUses { corpus, target, n, seed, epoch } => commands::sample_uses(&corpus, &target, n, seed, &epoch)?,
        Command::Serve => {
            let cfg = semchange_service::ServiceConfig::from_env()?;
            tokio::runtime::Runtime::new()?.block_on(semchange_service::serve(cfg))?;
            return Ok(());
        }
    };
    print!("{out}");
    Ok(())
}
