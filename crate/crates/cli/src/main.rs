use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use squash_core::pipeline::ingest::{self, DatasetFormat};
use squash_core::pipeline::stats::corpus_stats;
use squash_core::pipeline::{self, BackendConfig, PipelineConfig, MOCK};
use squash_core::taxonomy::{Classifier, LabeledQuestion};
use squash_service::{AppState, ResolvedBackends};

#[derive(Parser)]
#[command(name = "squash", version, about = "Turn documents into question-answer hierarchies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Squash a document (blank-line separated text or JSON) into QA trees.
    Run {
        #[arg(long)]
        input: PathBuf,
        /// TOML config, or JSON with a .json extension.
        #[arg(long)]
        config: Option<PathBuf>,
        /// `mock` or a backend base URL.
        #[arg(long, env = "SQUASH_BACKEND_URL")]
        backend: Option<String>,
        #[arg(long)]
        general_fraction: Option<f64>,
        #[arg(long)]
        specific_fraction: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Label questions: a reading-comprehension dataset or one question per line.
    Classify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        format: Option<Format>,
        /// Fallback classifier: `mock` or a backend base URL.
        #[arg(long, env = "SQUASH_BACKEND_URL")]
        backend: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Label distribution of a labeled corpus, TSV file or dataset.
    Stats {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        report: Report,
        #[arg(long, env = "SQUASH_BACKEND_URL")]
        backend: Option<String>,
    },
    /// Run the job API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, env = "SQUASH_DATA_DIR")]
        data_dir: Option<PathBuf>,
        #[arg(long, env = "SQUASH_BACKEND_URL")]
        backend: Option<String>,
    },
    /// Serve the deterministic mock backends over the wire protocol.
    MockBackend {
        #[arg(long, default_value_t = 8081)]
        port: u16,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Squad,
    Quac,
    Coqa,
    /// One question per line.
    Lines,
}

#[derive(Clone, Copy, ValueEnum)]
enum Report {
    Json,
    Csv,
}

fn write_out(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn backend_config(backend: Option<&str>) -> BackendConfig {
    BackendConfig::all(backend.unwrap_or(MOCK))
}

#[allow(clippy::too_many_arguments)]
fn run(
    input: &Path,
    config: Option<&Path>,
    backend: Option<&str>,
    general_fraction: Option<f64>,
    specific_fraction: Option<f64>,
    seed: Option<u64>,
    workers: Option<usize>,
    out: Option<&Path>,
) -> Result<()> {
    let mut cfg = match config {
        Some(p) => PipelineConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => PipelineConfig::default(),
    };
    if let Some(b) = backend {
        cfg.backend = BackendConfig {
            generator: b.into(),
            answerer: b.into(),
            classifier: b.into(),
            ..cfg.backend
        };
    }
    if let Some(f) = general_fraction {
        cfg.budget.general_fraction = f;
    }
    if let Some(f) = specific_fraction {
        cfg.budget.specific_fraction = f;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(w) = workers {
        cfg.workers = w;
    }
    cfg.validate()?;
    let raw = std::fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let document = pipeline::parse_document(&raw, &cfg)?;
    let backends = ResolvedBackends::new(&cfg.backend, cfg.seed)?;
    let output = pipeline::squash(&document, &cfg, backends.backends())?;
    write_out(out, &output.to_json())
}

fn labeled(input: &Path, format: Option<Format>, backend: Option<&str>) -> Result<Vec<LabeledQuestion>> {
    let text = std::fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let backends = ResolvedBackends::new(&backend_config(backend), 0)?;
    let classifier = Classifier::default();
    let looks_json = text.trim_start().starts_with('{');
    match format {
        Some(Format::Lines) => {}
        Some(f) => {
            let f = match f {
                Format::Squad => DatasetFormat::Squad,
                Format::Quac => DatasetFormat::Quac,
                _ => DatasetFormat::Coqa,
            };
            return Ok(ingest::ingest_rc_dataset(input, Some(f), &classifier, backends.classifier())?.questions);
        }
        None if looks_json => {
            return Ok(ingest::ingest_rc_dataset(input, None, &classifier, backends.classifier())?.questions);
        }
        None => {}
    }
    let questions: Vec<String> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect();
    let labels = classifier.classify_batch(&questions, backends.classifier())?;
    Ok(questions
        .into_iter()
        .zip(labels)
        .map(|(question, c)| LabeledQuestion {
            question,
            label: c.label,
            source: c.source,
            template_id: c.rule.map(|r| r.template_id),
            answer: None,
            context_id: None,
        })
        .collect())
}

fn stats(input: &Path, report: Report, backend: Option<&str>) -> Result<()> {
    let text = std::fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let trimmed = text.trim_start();
    let corpus = if trimmed.starts_with('[') {
        serde_json::from_str::<Vec<LabeledQuestion>>(trimmed).context("parsing labeled corpus")?
    } else if trimmed.starts_with('{') {
        labeled(input, None, backend)?
    } else if text.lines().any(|l| l.contains('\t')) {
        ingest::parse_labeled_tsv(&text)?
    } else {
        bail!(
            "{}: expected a labeled corpus, a TSV file or a dataset",
            input.display()
        );
    };
    let r = corpus_stats(&corpus);
    match report {
        Report::Json => write_out(None, &r.to_json()),
        Report::Csv => {
            print!("{}", r.to_csv()?);
            Ok(())
        }
    }
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()))
        .with_writer(std::io::stderr)
        .init();

    match Cli::parse().command {
        Command::Run {
            input,
            config,
            backend,
            general_fraction,
            specific_fraction,
            seed,
            workers,
            out,
        } => run(
            &input,
            config.as_deref(),
            backend.as_deref(),
            general_fraction,
            specific_fraction,
            seed,
            workers,
            out.as_deref(),
        ),
        Command::Classify {
            input,
            format,
            backend,
            out,
        } => {
            let corpus = labeled(&input, format, backend.as_deref())?;
            write_out(out.as_deref(), &serde_json::to_string_pretty(&corpus)?)
        }
        Command::Stats { input, report, backend } => stats(&input, report, backend.as_deref()),
        Command::Serve {
            port,
            data_dir,
            backend,
        } => {
            let state = Arc::new(AppState::new(data_dir, backend.filter(|b| b != MOCK))?);
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
                tracing::info!(port, "serving job API");
                eprintln!("listening on {}", listener.local_addr()?);
                squash_service::serve(listener, state).await?;
                Ok(())
            })
        }
        Command::MockBackend { port, seed } => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind(("127.0.0.1", port)).await?;
                eprintln!("mock backends on {}", listener.local_addr()?);
                squash_service::serve_mock_backend(listener, seed).await?;
                Ok(())
            })
        }
    }
}
