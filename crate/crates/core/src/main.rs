//! Command-line entry point.

use clap::{Parser, Subcommand};
use panelsim::agent::Variant;
use panelsim::corpus::{read_response_set, Corpus, CorpusError, SourceId};
use panelsim::pipeline::{self, PipelineError, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "panelsim",
    version,
    about = "Interview-grounded participant simulation and concept-test fidelity evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a corpus directory; prints a per-record error table and
    /// exits non-zero on any violation.
    Validate {
        /// Corpus directory (participants.jsonl, concepts.json, questions.json, responses_*.jsonl)
        path: PathBuf,
        /// Warn instead of reject on unknown scratchpad keys
        #[arg(long)]
        lenient: bool,
    },
    /// Simulate one agent variant over every participant.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        variant: Variant,
        #[arg(long)]
        k_memories: Option<usize>,
        #[arg(long)]
        n_reflections: Option<usize>,
        #[arg(long)]
        include_image: Option<bool>,
        #[arg(long)]
        seed: Option<u64>,
        /// Override the output responses file (defaults into the output dir)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate response sets into report tables.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Judge open-ended answers of an agent response file against the
    /// human answers.
    Judge {
        #[arg(long)]
        config: PathBuf,
        /// Agent (or session-2) response JSONL to compare against the human file
        #[arg(long)]
        responses: PathBuf,
        /// Human response JSONL (defaults to the corpus's human_s1 set)
        #[arg(long)]
        human: Option<PathBuf>,
    },
    /// Optimal one-to-one re-matching between participants and agents.
    Rematch {
        #[arg(long)]
        config: PathBuf,
        /// Agent response JSONL
        #[arg(long)]
        responses: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-render report.md from an existing report.json.
    Report {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the whole pipeline: validate → memories → simulate → evaluate →
    /// judge → report.
    RunAll {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write the bundled synthetic demo corpus (and a matching config).
    Demo {
        /// Directory to create (corpus goes in <out>/corpus)
        #[arg(long, default_value = "demo")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load_variant_set(
    config: &RunConfig,
    path: &PathBuf,
) -> Result<panelsim::corpus::ResponseSet, PipelineError> {
    let set = read_response_set(path)?;
    if let Some(hash) = &set.meta.config_hash {
        if hash != &config.config_hash() {
            return Err(PipelineError::Config(format!(
                "{} was produced under config {hash}, current config is {}",
                path.display(),
                config.config_hash()
            )));
        }
    }
    Ok(set)
}

fn run(cli: Cli) -> Result<ExitCode, PipelineError> {
    match cli.command {
        Command::Validate { path, lenient } => {
            match Corpus::load_with_mode(&path, !lenient) {
                Ok(corpus) => {
                    if lenient {
                        // unknown scratchpad keys only warn in lenient mode
                        let mut strict_violations = Vec::new();
                        corpus.validate(true, &mut strict_violations);
                        for v in strict_violations {
                            eprintln!("warning: {v}");
                        }
                    }
                    println!(
                        "ok: {} participants, {} concepts, {} questions, {} response sets",
                        corpus.participants.len(),
                        corpus.concepts.len(),
                        corpus.questions.len(),
                        corpus.response_sets.len()
                    );
                    Ok(ExitCode::SUCCESS)
                }
                Err(CorpusError::Validation(violations)) => {
                    eprintln!("{:<28} {:<22} {:<24} error", "file", "record", "field");
                    for v in &violations {
                        eprintln!("{:<28} {:<22} {:<24} {}", v.file, v.record, v.field, v.message);
                    }
                    eprintln!("{} violation(s)", violations.len());
                    Ok(ExitCode::from(3))
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::Simulate {
            config,
            variant,
            k_memories,
            n_reflections,
            include_image,
            seed,
            out,
        } => {
            let mut config = RunConfig::load(&config)?;
            if let Some(k) = k_memories {
                config.agents.k_memories = k;
            }
            if let Some(n) = n_reflections {
                config.agents.n_reflections = n;
            }
            if let Some(flag) = include_image {
                config.agents.include_image = flag;
            }
            if let Some(seed) = seed {
                config.gateway.seed = seed;
            }
            let corpus = Corpus::load_with_mode(&config.corpus.path, config.corpus.strict)?;
            std::fs::create_dir_all(&config.output.dir)
                .map_err(|e| pipeline::io_err(&config.output.dir, e))?;
            let gateway = config.build_gateway()?;
            let stores = if variant == Variant::InterviewBased {
                pipeline::build_memories(&corpus, &gateway, &config.output.dir, &config.config_hash())?.0
            } else {
                Default::default()
            };
            let outcome = pipeline::simulate_variant(
                &corpus,
                &config,
                variant,
                &stores,
                &gateway,
                &config.output.dir,
            )?;
            if let Some(out) = out {
                panelsim::corpus::write_response_set(&out, &outcome.set)?;
            }
            println!(
                "simulated {} participants ({} responses), {} failed; spent ${:.4}",
                outcome.completed_participants.len(),
                outcome.set.len(),
                outcome.failed_participants.len(),
                gateway.total_spent()
            );
            for (p, e) in &outcome.failed_participants {
                eprintln!("failed {p}: {e}");
            }
            Ok(if outcome.completed_participants.is_empty() {
                ExitCode::from(4)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Evaluate { config } => {
            let config = RunConfig::load(&config)?;
            let corpus = Corpus::load_with_mode(&config.corpus.path, config.corpus.strict)?;
            let human_s1 = corpus
                .response_sets
                .get(&SourceId::HumanS1)
                .cloned()
                .ok_or_else(|| PipelineError::Config("corpus has no human_s1 responses".into()))?;
            let human_s2 = corpus.response_sets.get(&SourceId::HumanS2).cloned();
            let mut agent_sets = Vec::new();
            for variant in &config.agents.variants {
                let source = config.agents.agent_config(*variant, 0).source_id();
                let path = config
                    .output
                    .dir
                    .join(format!("responses_{}.jsonl", source.slug()));
                if path.exists() {
                    agent_sets.push(load_variant_set(&config, &path)?);
                }
            }
            let mut evaluation = pipeline::report::evaluate(
                &config,
                &corpus,
                &human_s1,
                human_s2.as_ref(),
                &agent_sets,
            )?;
            let scores_path = config.output.dir.join("judge_scores.jsonl");
            if scores_path.exists() {
                let (_, scores) = pipeline::read_judge_scores(&scores_path)?;
                pipeline::report::attach_judgments(&mut evaluation, &scores, &config)?;
            }
            let artifacts = pipeline::report::emit_report(
                &evaluation,
                &panelsim::gateway::CostLedger::default(),
                &config.output.dir,
            )?;
            println!("wrote {} artifacts under {}", artifacts.len(), config.output.dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Judge {
            config,
            responses,
            human,
        } => {
            let config = RunConfig::load(&config)?;
            let corpus = Corpus::load_with_mode(&config.corpus.path, config.corpus.strict)?;
            let human_s1 = match human {
                Some(path) => read_response_set(&path)?,
                None => corpus
                    .response_sets
                    .get(&SourceId::HumanS1)
                    .cloned()
                    .ok_or_else(|| {
                        PipelineError::Config("corpus has no human_s1 responses".into())
                    })?,
            };
            let other = read_response_set(&responses)?;
            std::fs::create_dir_all(&config.output.dir)
                .map_err(|e| pipeline::io_err(&config.output.dir, e))?;
            let gateway = config.build_gateway()?;
            let outcome = pipeline::judge_pairs(
                &corpus,
                &config,
                &human_s1,
                &[&other],
                &gateway,
                &config.output.dir,
            )?;
            println!(
                "judged {} scores into {}",
                outcome.scores.len(),
                config.output.dir.join("judge_scores.jsonl").display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Rematch {
            config,
            responses,
            out,
        } => {
            let config = RunConfig::load(&config)?;
            let corpus = Corpus::load_with_mode(&config.corpus.path, config.corpus.strict)?;
            let human_s1 = corpus
                .response_sets
                .get(&SourceId::HumanS1)
                .cloned()
                .ok_or_else(|| PipelineError::Config("corpus has no human_s1 responses".into()))?;
            let agent = read_response_set(&responses)?;
            let result = panelsim::metrics::rematch_optimal(&human_s1, &agent, &corpus)?;
            println!(
                "optimal total MAE {:.4} vs identity {:.4}",
                result.total_cost, result.identity_cost
            );
            for pair in &result.pairs {
                println!(
                    "{} -> agent of {} (MAE {:.4})",
                    pair.participant_id, pair.matched_agent_of, pair.pair_mae
                );
            }
            if let Some(out) = out {
                let json = serde_json::to_string_pretty(&result).expect("rematch serializes");
                std::fs::write(&out, json).map_err(|e| pipeline::io_err(&out, e))?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { config } => {
            let config = RunConfig::load(&config)?;
            let path = config.output.dir.join("report.json");
            let text = std::fs::read_to_string(&path).map_err(|e| pipeline::io_err(&path, e))?;
            let report: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
            println!(
                "report for config {} with {} artifacts",
                report["config_hash"].as_str().unwrap_or("?"),
                report["artifacts"].as_array().map(|a| a.len()).unwrap_or(0)
            );
            println!("see {}", config.output.dir.join("report.md").display());
            Ok(ExitCode::SUCCESS)
        }
        Command::RunAll { config } => {
            let config = RunConfig::load(&config)?;
            let manifest = pipeline::run_all(&config)?;
            for stage in &manifest.stages {
                println!(
                    "{:<28} {:<10} {:>7} ms  {}",
                    stage.name,
                    format!("{:?}", stage.status).to_lowercase(),
                    stage.wall_ms,
                    stage.detail
                );
            }
            println!(
                "cost: ${:.4} over {} calls; manifest at {}",
                manifest.cost.dollars,
                manifest.cost.calls,
                config.output.dir.join("run_manifest.json").display()
            );
            Ok(if manifest.failed() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Demo { out } => {
            let corpus_dir = out.join("corpus");
            panelsim::demo::demo_corpus().save(&corpus_dir)?;
            let config = RunConfig::demo(&corpus_dir, &out.join("run"));
            let config_path = out.join("run.toml");
            let text = toml::to_string_pretty(&config)
                .map_err(|e| PipelineError::Config(e.to_string()))?;
            std::fs::write(&config_path, text).map_err(|e| pipeline::io_err(&config_path, e))?;
            println!(
                "wrote demo corpus to {} and config to {}",
                corpus_dir.display(),
                config_path.display()
            );
            println!("run it with: panelsim run-all --config {}", config_path.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}
