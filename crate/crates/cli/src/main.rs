use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use citerec::config::{ExperimentConfig, Method};
use citerec::corpus::load_corpus;
use citerec::pipeline::{run_experiment, set_workers, Experiment};
use citerec::synth::{generate_corpus, write_synth, SynthConfig};
use citerec::{Error, Result};

#[derive(Parser)]
#[command(
    name = "citerec",
    version,
    about = "Evaluate citation recommenders on relevance, novelty and diversity"
)]
struct Cli {
    /// Experiment configuration (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured global seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Extra setting, e.g. `--set scorer.epochs=3`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct MethodArg {
    /// Restrict to one method; defaults to every configured method.
    #[arg(long)]
    method: Option<Method>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic block-structured corpus and its truth sidecar.
    Synth(SynthArgs),
    /// Load a corpus and print its counts.
    IngestCheck {
        /// Corpus file; defaults to `corpus.path` from the config.
        corpus: Option<PathBuf>,
    },
    /// Learn candidate and query embeddings.
    Embed(MethodArg),
    /// Train the pairwise scorer on co-citation pairs.
    TrainScorer(MethodArg),
    /// Write top-k recommendation lists.
    Recommend(MethodArg),
    /// Compute per-query metrics.
    Evaluate(MethodArg),
    /// Merge per-query metrics into the text report.
    Report,
    /// Run every stage for every configured method.
    Run,
}

#[derive(Args)]
struct SynthArgs {
    /// Output corpus (JSONL); truth goes next to it with a `.truth` extension.
    #[arg(long, value_name = "PATH")]
    corpus: PathBuf,
    #[arg(long, default_value_t = SynthConfig::default().blocks)]
    blocks: usize,
    #[arg(long, default_value_t = SynthConfig::default().papers_per_block_per_year)]
    papers_per_block_per_year: usize,
    #[arg(long, default_value_t = SynthConfig::default().first_year)]
    first_year: i32,
    #[arg(long, default_value_t = SynthConfig::default().years)]
    years: usize,
    #[arg(long, default_value_t = SynthConfig::default().p_intra)]
    p_intra: f64,
    #[arg(long, default_value_t = SynthConfig::default().p_inter)]
    p_inter: f64,
    #[arg(long, default_value_t = SynthConfig::default().bridge_fraction)]
    bridge_fraction: f64,
    /// Target mean reference count; 0 keeps the raw probabilities.
    #[arg(long, default_value_t = 20.0)]
    references_per_paper: f64,
    #[arg(long, default_value_t = SynthConfig::default().vocab_per_block)]
    vocab_per_block: usize,
    #[arg(long, default_value_t = SynthConfig::default().vocab_overlap)]
    vocab_overlap: f64,
}

fn experiment_config(cli: &Cli) -> Result<ExperimentConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("this command needs --config".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    for kv in &cli.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    if cli.workers.is_some() {
        cfg.workers = cli.workers;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn methods(exp: &Experiment, arg: &MethodArg) -> Vec<Method> {
    arg.method
        .map_or_else(|| exp.cfg.methods.clone(), |m| vec![m])
}

fn synth(cli: &Cli, a: &SynthArgs) -> Result<()> {
    let cfg = SynthConfig {
        blocks: a.blocks,
        papers_per_block_per_year: a.papers_per_block_per_year,
        first_year: a.first_year,
        years: a.years,
        p_intra: a.p_intra,
        p_inter: a.p_inter,
        bridge_fraction: a.bridge_fraction,
        references_per_paper: (a.references_per_paper > 0.0).then_some(a.references_per_paper),
        vocab_per_block: a.vocab_per_block,
        vocab_overlap: a.vocab_overlap,
        seed: cli.seed.unwrap_or(0),
        ..SynthConfig::default()
    };
    let corpus = generate_corpus(&cfg)?;
    write_synth(&a.corpus, &corpus)?;
    println!(
        "{} papers written to {}",
        corpus.papers.len(),
        a.corpus.display()
    );
    Ok(())
}

fn plural(n: usize, word: &str) -> String {
    if n == 1 {
        format!("{n} {word}")
    } else {
        format!("{n} {word}s")
    }
}

fn ingest_check(cli: &Cli, corpus: &Option<PathBuf>) -> Result<()> {
    let path = match corpus {
        Some(p) => p.clone(),
        None => experiment_config(cli)?.corpus_path,
    };
    let c = load_corpus(&path).map_err(|e| e.in_stage("ingest"))?;
    let s = c.stats();
    println!(
        "{}, {}, {} dangling",
        plural(s.papers, "paper"),
        plural(s.edges, "edge"),
        s.dangling_references
    );
    println!(
        "{} out-of-range years dropped, {} removed",
        s.year_anomalies,
        plural(s.self_citations, "self-citation")
    );
    if let Some((lo, hi)) = c.year_range() {
        println!("years {lo}..={hi}");
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.workers {
        set_workers(n)?;
    }
    match &cli.command {
        Command::Synth(a) => return synth(cli, a),
        Command::IngestCheck { corpus } => return ingest_check(cli, corpus),
        _ => {}
    }
    let cfg = experiment_config(cli)?;
    if cli.workers.is_none() {
        if let Some(n) = cfg.workers {
            set_workers(n)?;
        }
    }
    if matches!(cli.command, Command::Run) {
        let report = run_experiment(&cfg)?;
        print!("{}", report.to_text()?);
        return Ok(());
    }
    let exp = Experiment::open(cfg)?;
    match &cli.command {
        Command::Embed(a) => methods(&exp, a).into_iter().try_for_each(|m| exp.embed(m)),
        Command::TrainScorer(a) => methods(&exp, a)
            .into_iter()
            .try_for_each(|m| exp.train_scorer(m)),
        Command::Recommend(a) => methods(&exp, a)
            .into_iter()
            .try_for_each(|m| exp.recommend(m)),
        Command::Evaluate(a) => methods(&exp, a).into_iter().try_for_each(|m| {
            exp.evaluate(m)
                .map(|e| log::info!("{m}: {} queries evaluated", e.queries.len()))
        }),
        Command::Report => {
            let report = exp.report()?;
            print!("{}", report.to_text()?);
            Ok(())
        }
        Command::Synth(_) | Command::IngestCheck { .. } | Command::Run => unreachable!(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
