use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qvbench::config::PipelineConfig;
use qvbench::{exit_code, report, stages};
use qvbench_core::Result;

#[derive(Parser)]
#[command(
    name = "qvbench",
    version,
    about = "Generate query variants and measure their effect on retrieval evaluation"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Pipeline configuration file (key = value lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed topics, TSV or JSONL.
    #[arg(long, global = true)]
    topics: Option<String>,
    /// Passage collection, TSV or JSONL.
    #[arg(long, global = true)]
    corpus: Option<String>,
    /// Profile JSON file; the bundled profiles when omitted.
    #[arg(long, global = true)]
    profiles: Option<String>,
    /// Directory of TREC run files for import-runs.
    #[arg(long, global = true)]
    runs: Option<String>,
    /// Human relevance judgments in TREC qrels format.
    #[arg(long, global = true)]
    qrels: Option<String>,
    /// Annotation records (JSONL) for consensus reports.
    #[arg(long, global = true)]
    annotations: Option<String>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<String>,
    /// Comma-separated methods: persona, group, textual, neutral.
    #[arg(long, global = true)]
    methods: Option<String>,
    /// nDCG cutoff.
    #[arg(long, global = true)]
    k: Option<String>,
    /// Significance level.
    #[arg(long, global = true)]
    alpha: Option<String>,
    /// linear or exp.
    #[arg(long, global = true)]
    gain: Option<String>,
    /// Seed for generation, sampling and mock labels.
    #[arg(long, global = true)]
    seed: Option<String>,
    /// mock or http.
    #[arg(long, global = true)]
    provider: Option<String>,
    /// human, llm or human-preferred.
    #[arg(long, global = true)]
    merge: Option<String>,
    /// Parallel provider and search workers.
    #[arg(long, global = true)]
    workers: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate query variants for every topic and profile.
    Generate,
    /// Check variants and compute features, feature tests and annotation consensus.
    Validate,
    /// Build the BM25 index over the corpus.
    Index,
    /// Run the configured BM25 systems over seeds and variants.
    Search,
    /// Import external TREC run files.
    ImportRuns,
    /// Label top-k passages with the model.
    Judge,
    /// Compute nDCG@k for every run and query.
    Evaluate,
    /// ANOVA, Tukey HSD, Kendall tau and agreement over the nDCG matrix.
    Analyze,
    /// Summary tables and charts.
    Report,
    /// Every stage in order.
    All,
}

fn configure(g: &Global) -> Result<PipelineConfig> {
    let mut cfg = match &g.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    let overrides = [
        ("topics", &g.topics),
        ("corpus", &g.corpus),
        ("profiles", &g.profiles),
        ("runs", &g.runs),
        ("qrels", &g.qrels),
        ("annotations", &g.annotations),
        ("out", &g.out),
        ("methods", &g.methods),
        ("k", &g.k),
        ("alpha", &g.alpha),
        ("gain", &g.gain),
        ("seed", &g.seed),
        ("provider", &g.provider),
        ("merge", &g.merge),
        ("workers", &g.workers),
    ];
    for (key, value) in overrides {
        if let Some(v) = value {
            cfg.set(key, v, None)?;
        }
    }
    cfg.check()?;
    Ok(cfg)
}

fn generate(cfg: &PipelineConfig) -> Result<()> {
    let provider = stages::make_provider(cfg)?;
    let s = stages::generate(cfg, provider.as_ref())?;
    println!(
        "generate: {} expected, {} reused, {} generated, {} failed pairs",
        s.expected,
        s.reused,
        s.generated,
        s.failures.len()
    );
    if let Some(f) = s.failures.into_iter().next() {
        return Err(f.error);
    }
    Ok(())
}

fn judge(cfg: &PipelineConfig) -> Result<()> {
    let provider = stages::make_provider(cfg)?;
    let s = stages::judge(cfg, provider.as_ref())?;
    println!(
        "judge: {} pairs, {} provider calls",
        s.pairs, s.provider_calls
    );
    if let Some(a) = &s.agreement {
        println!(
            "judge: binary kappa {:.3}, graded alpha {:.3}, graded MAE {:.3} over {} pairs",
            a.kappa_binary, a.alpha_graded, a.mae_graded, a.n
        );
    }
    if let Some(e) = s.failures.into_iter().next() {
        return Err(e);
    }
    Ok(())
}

fn run(command: &Command, cfg: &PipelineConfig) -> Result<()> {
    match command {
        Command::Generate => generate(cfg),
        Command::Validate => {
            let s = stages::validate(cfg)?;
            println!(
                "validate: {}/{} checks passed, {} feature rows",
                s.valid, s.verdicts, s.features
            );
            Ok(())
        }
        Command::Index => stages::index(cfg).map(|_| ()),
        Command::Search => {
            let ids = stages::search_stage(cfg)?;
            println!("search: {}", ids.join(", "));
            Ok(())
        }
        Command::ImportRuns => {
            let ids = stages::import_runs(cfg)?;
            println!("import-runs: {} systems", ids.len());
            Ok(())
        }
        Command::Judge => judge(cfg),
        Command::Evaluate => {
            let m = stages::evaluate(cfg)?;
            println!("evaluate: {} cells", m.len());
            Ok(())
        }
        Command::Analyze => {
            let s = stages::analyze(cfg)?;
            println!("analyze: {} profiles, {} systems", s.profiles, s.systems);
            Ok(())
        }
        Command::Report => report::report(cfg).map(|_| ()),
        Command::All => {
            generate(cfg)?;
            run(&Command::Validate, cfg)?;
            run(&Command::Index, cfg)?;
            run(&Command::Search, cfg)?;
            if cfg.runs.is_some() {
                run(&Command::ImportRuns, cfg)?;
            }
            judge(cfg)?;
            run(&Command::Evaluate, cfg)?;
            run(&Command::Analyze, cfg)?;
            run(&Command::Report, cfg)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = configure(&cli.global).and_then(|cfg| run(&cli.command, &cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
