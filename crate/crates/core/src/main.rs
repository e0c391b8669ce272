//! constraint-forge: build curriculum-ordered preference datasets for
//! soft-constraint instruction following.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use constraint_forge::analytics::VerbLexicon;
use constraint_forge::config::{PipelineConfig, ProviderKind};
use constraint_forge::jsonl;
use constraint_forge::judger::JudgeMode;
use constraint_forge::pipeline::{self, PipelineError};
use constraint_forge::validate::validate_tree;

#[derive(Parser)]
#[command(
    name = "constraint-forge",
    version,
    about = "Curriculum-ordered preference dataset construction for soft-constraint instruction following"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every subcommand. Flags override config fields.
#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// Pipeline config file (JSON). Omitted fields take defaults.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Seed instruction JSONL.
    #[arg(long, value_name = "PATH")]
    seeds_path: Option<PathBuf>,
    /// Artifact tree root.
    #[arg(long, value_name = "DIR")]
    output_dir: Option<PathBuf>,
    /// Root seed for all derived random streams.
    #[arg(long)]
    rng_seed: Option<u64>,
    /// Constraints added per chain.
    #[arg(long)]
    n_constraints: Option<usize>,
    /// Judge mode: single or both_orders.
    #[arg(long)]
    judger_mode: Option<String>,
    /// Replay conversation pool JSONL.
    #[arg(long, value_name = "PATH")]
    replay_path: Option<PathBuf>,
    /// Total replay examples to mix across stages.
    #[arg(long)]
    replay_budget: Option<usize>,
    /// Provider kind: mock or http.
    #[arg(long)]
    provider_kind: Option<String>,
    /// Script table for the mock provider.
    #[arg(long, value_name = "PATH")]
    mock_script: Option<PathBuf>,
    /// Response cache directory.
    #[arg(long, value_name = "DIR")]
    cache_dir: Option<PathBuf>,
    /// Keep at most this many seeds after dedup.
    #[arg(long)]
    max_seeds: Option<usize>,
}

impl CommonArgs {
    fn resolve(&self) -> Result<PipelineConfig, String> {
        let mut config = match &self.config {
            Some(path) => PipelineConfig::from_file(path).map_err(|e| e.to_string())?,
            None => PipelineConfig::default(),
        };
        if let Some(v) = &self.seeds_path {
            config.seeds_path = v.clone();
        }
        if let Some(v) = &self.output_dir {
            config.output_dir = v.clone();
        }
        if let Some(v) = self.rng_seed {
            config.rng_seed = v;
        }
        if let Some(v) = self.n_constraints {
            config.n_constraints = v;
        }
        if let Some(v) = &self.judger_mode {
            config.judger_mode = match v.as_str() {
                "single" => JudgeMode::Single,
                "both_orders" => JudgeMode::BothOrders,
                other => {
                    return Err(format!(
                        "unknown judger mode {other:?} (single | both_orders)"
                    ))
                }
            };
        }
        if let Some(v) = &self.replay_path {
            config.replay_path = Some(v.clone());
        }
        if let Some(v) = self.replay_budget {
            config.replay_budget = v;
        }
        if let Some(v) = &self.provider_kind {
            config.provider.kind = match v.as_str() {
                "mock" => ProviderKind::Mock,
                "http" => ProviderKind::Http,
                other => return Err(format!("unknown provider kind {other:?} (mock | http)")),
            };
        }
        if let Some(v) = &self.mock_script {
            config.provider.mock_script = Some(v.clone());
        }
        if let Some(v) = &self.cache_dir {
            config.provider.cache_dir = Some(v.clone());
        }
        if let Some(v) = self.max_seeds {
            config.max_seeds = v;
        }
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Load, filter, and deduplicate seed instructions.
    Seeds(CommonArgs),
    /// Build instruction chains from the ingested seeds.
    Build(CommonArgs),
    /// Run the judge tournament over built chains.
    Judge(CommonArgs),
    /// Bin preference pairs into curriculum stages and write the manifest.
    Assemble(CommonArgs),
    /// Emit the per-stage statistics report.
    Stats(CommonArgs),
    /// Emit the verb-frequency report.
    Verbs {
        #[command(flatten)]
        common: CommonArgs,
        /// Histogram length.
        #[arg(long, default_value_t = 20)]
        top_n: usize,
        /// Verb lexicon file, one word per line.
        #[arg(long, value_name = "PATH")]
        lexicon: Option<PathBuf>,
    },
    /// Validate an artifact tree against its schemas and invariants.
    Validate {
        #[command(flatten)]
        common: CommonArgs,
        /// Tree to validate; defaults to the config's output_dir.
        #[arg(long, value_name = "DIR")]
        dir: Option<PathBuf>,
    },
    /// Run the whole pipeline: seeds through reports.
    Run(CommonArgs),
}

fn fail(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::FAILURE
}

fn validated_config(common: &CommonArgs) -> Result<PipelineConfig, String> {
    let config = common.resolve()?;
    config.validate().map_err(|e| e.to_string())?;
    Ok(config)
}

fn stage_failure(config: &PipelineConfig, error: PipelineError) -> ExitCode {
    pipeline::write_error_report(&config.output_dir, &error);
    fail(error)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();

    match cli.command {
        Command::Seeds(common) => {
            let config = match validated_config(&common) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            match pipeline::stage_seeds(&config) {
                Ok(seeds) => {
                    println!(
                        "ingested {} seeds -> {}",
                        seeds.len(),
                        config.output_dir.join("seeds.jsonl").display()
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => stage_failure(&config, e),
            }
        }
        Command::Build(common) => {
            let config = match validated_config(&common) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            let seeds = match jsonl::read(config.output_dir.join("seeds.jsonl")) {
                Ok(seeds) => seeds,
                Err(e) => return fail(format!("{e} (run the seeds subcommand first)")),
            };
            let provider = match pipeline::build_provider(&config.provider) {
                Ok(p) => p,
                Err(e) => return stage_failure(&config, e),
            };
            match pipeline::stage_build(&config, &seeds, &provider) {
                Ok((chains, warnings)) => {
                    for warning in &warnings {
                        eprintln!("warning: {warning}");
                    }
                    println!(
                        "built {} chains -> {}",
                        chains.len(),
                        config.output_dir.join("chains.jsonl").display()
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => stage_failure(&config, e),
            }
        }
        Command::Judge(common) => {
            let config = match validated_config(&common) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            let chains = match jsonl::read(config.output_dir.join("chains.jsonl")) {
                Ok(chains) => chains,
                Err(e) => return fail(format!("{e} (run the build subcommand first)")),
            };
            let provider = match pipeline::build_provider(&config.provider) {
                Ok(p) => p,
                Err(e) => return stage_failure(&config, e),
            };
            match pipeline::stage_judge(&config, &chains, &provider) {
                Ok((pairs, records, warnings)) => {
                    for warning in &warnings {
                        eprintln!("warning: {warning}");
                    }
                    println!(
                        "judged {} comparisons, emitted {} pairs",
                        records.len(),
                        pairs.len()
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => stage_failure(&config, e),
            }
        }
        Command::Assemble(common) => {
            let config = match validated_config(&common) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            let pairs = match jsonl::read(config.output_dir.join("pairs.jsonl")) {
                Ok(pairs) => pairs,
                Err(e) => return fail(format!("{e} (run the judge subcommand first)")),
            };
            match pipeline::stage_assemble(&config, &pairs) {
                Ok((manifest, warnings)) => {
                    for warning in &warnings {
                        eprintln!("warning: {warning}");
                    }
                    for descriptor in &manifest.stages {
                        println!(
                            "stage {} (k {}..{}): {} dpo, {} sft ({} replay)",
                            descriptor.stage_id,
                            descriptor.k_min,
                            descriptor.k_max,
                            descriptor.dpo_count,
                            descriptor.sft_count,
                            descriptor.replay_count
                        );
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => stage_failure(&config, e),
            }
        }
        Command::Stats(common) => {
            let config = match common.resolve() {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            match pipeline::stage_stats(&config) {
                Ok(report) => {
                    print!("{}", report.to_text());
                    ExitCode::SUCCESS
                }
                Err(e) => stage_failure(&config, e),
            }
        }
        Command::Verbs {
            common,
            top_n,
            lexicon,
        } => {
            let config = match common.resolve() {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            let lexicon = match lexicon {
                Some(path) => match VerbLexicon::from_file(&path) {
                    Ok(l) => l,
                    Err(e) => return fail(e),
                },
                None => VerbLexicon::default(),
            };
            match pipeline::stage_verbs(&config, top_n, &lexicon) {
                Ok(histogram) => {
                    print!("{}", constraint_forge::analytics::verbs_to_text(&histogram));
                    ExitCode::SUCCESS
                }
                Err(e) => stage_failure(&config, e),
            }
        }
        Command::Validate { common, dir } => {
            let config = match common.resolve() {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            let dir = dir.unwrap_or_else(|| config.output_dir.clone());
            let violations = validate_tree(&dir);
            if violations.is_empty() {
                println!("ok: {} passes validation", dir.display());
                ExitCode::SUCCESS
            } else {
                for violation in &violations {
                    println!("violation: {violation}");
                }
                eprintln!("{} violation(s) in {}", violations.len(), dir.display());
                ExitCode::FAILURE
            }
        }
        Command::Run(common) => {
            let config = match validated_config(&common) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            match pipeline::run_all(&config) {
                Ok(summary) => {
                    for warning in &summary.warnings {
                        eprintln!("warning: {warning}");
                    }
                    println!(
                        "run complete: {} seeds, {} chains ({} failed), {} pairs",
                        summary.seeds_used,
                        summary.chains_built,
                        summary.chains_failed,
                        summary.pairs
                    );
                    for stage in &summary.stages {
                        println!(
                            "  stage {} (k {}..{}): {} dpo, {} sft ({} replay)",
                            stage.stage_id,
                            stage.k_min,
                            stage.k_max,
                            stage.dpo,
                            stage.sft,
                            stage.replay
                        );
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => stage_failure(&config, e),
            }
        }
    }
}
