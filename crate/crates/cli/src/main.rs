use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use critiq_core::analyzers::RuleConfig;
use critiq_core::harness::{self, compare_modes, format_delta, run_critique, Report, SeededCorpus};
use critiq_core::perspectives::CritiqueMode;
use critiq_core::remediation::{apply_patch, Patch};
use critiq_core::{parse_document, serialize_document, DesignContext, Severity};
use critiq_service::{provider_from_env, AppState, ServeConfig, Store};

/// Multi-perspective design critique.
///
/// Exit status: 0 on success, 1 when `run --fail-on` finds issues at or
/// above the given severity, 2 on any error.
#[derive(Parser)]
#[command(name = "critiq", version)]
struct Cli {
    /// Rule thresholds and keyword lists (JSON); defaults apply otherwise.
    #[arg(long, global = true)]
    rules: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Critique a document and write a report.
    Run {
        document: PathBuf,
        #[arg(long)]
        context: Option<PathBuf>,
        /// multi or unified
        #[arg(long, default_value = "multi")]
        mode: CritiqueMode,
        /// Report path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit 1 if any issue is at least this severe.
        #[arg(long)]
        fail_on: Option<Severity>,
        /// Attach a coverage section scored against the document's `.seeds` sidecar.
        #[arg(long)]
        score: bool,
        /// Keep going when some roles fail; they are listed as degraded.
        #[arg(long)]
        allow_partial: bool,
    },
    /// Score a report's issues against a seeded corpus.
    Score {
        #[arg(long)]
        report: PathBuf,
        /// Corpus document; seeds are read from the sidecar `.seeds` file.
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run both modes on a corpus and print the coverage delta.
    Compare {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        context: Option<PathBuf>,
        /// Write the full comparison as JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Start the session service.
    Serve {
        #[arg(long)]
        host: Option<String>,
        #[arg(long)]
        port: Option<u16>,
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
    /// Apply a patch file to a document.
    Apply {
        document: PathBuf,
        patch: PathBuf,
        /// Patched document path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the patch that reverts this one.
        #[arg(long)]
        inverse: Option<PathBuf>,
    },
    /// Undo the last applied patch of a stored session.
    Undo {
        #[arg(long)]
        session: String,
        #[arg(long)]
        data_dir: Option<PathBuf>,
        /// Restored document path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_out(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_context(path: Option<&Path>) -> Result<DesignContext> {
    match path {
        Some(p) => DesignContext::from_json(&read(p)?)
            .with_context(|| format!("parsing context {}", p.display())),
        None => Ok(DesignContext::default()),
    }
}

fn load_rules(path: Option<&Path>) -> Result<RuleConfig> {
    match path {
        Some(p) => RuleConfig::from_json(&read(p)?)
            .with_context(|| format!("parsing rules {}", p.display())),
        None => Ok(RuleConfig::default()),
    }
}

fn data_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("CRITIQ_DATA_DIR").map(PathBuf::from))
        .unwrap_or_else(|| critiq_service::DEFAULT_DATA_DIR.into())
}

fn execute(cli: Cli) -> Result<ExitCode> {
    let rules = load_rules(cli.rules.as_deref())?;
    match cli.command {
        Command::Run {
            document,
            context,
            mode,
            out,
            fail_on,
            score,
            allow_partial,
        } => {
            let doc = parse_document(&read(&document)?)
                .with_context(|| format!("parsing {}", document.display()))?;
            let context = load_context(context.as_deref())?;
            let provider = provider_from_env(&rules)?;
            let run = run_critique(&doc, &context, mode, provider.as_ref(), allow_partial)?;
            let coverage = if score {
                let corpus = SeededCorpus::load(&document)?;
                Some(harness::score(&run.issues(), &corpus, mode))
            } else {
                None
            };
            let report = Report::new(&run, coverage);
            write_out(out.as_deref(), &report.to_json())?;
            let worst = report.issues.iter().map(|i| i.severity).max();
            log::info!(
                "{} issue(s), score {}",
                report.issues.len(),
                report.agenda.overall_score
            );
            match (fail_on, worst) {
                (Some(limit), Some(worst)) if worst >= limit => {
                    eprintln!("critiq: found {worst} issue(s), failing at {limit}");
                    Ok(ExitCode::from(1))
                }
                _ => Ok(ExitCode::SUCCESS),
            }
        }
        Command::Score {
            report,
            corpus,
            out,
        } => {
            let report: Report = serde_json::from_str(&read(&report)?)
                .with_context(|| format!("parsing report {}", report.display()))?;
            let corpus = SeededCorpus::load(&corpus)?;
            let coverage = harness::score(&report.issues, &corpus, report.mode);
            let mut text = serde_json::to_string_pretty(&coverage)?;
            text.push('\n');
            write_out(out.as_deref(), &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare {
            corpus,
            context,
            out,
        } => {
            let corpus = SeededCorpus::load(&corpus)?;
            let context = load_context(context.as_deref())?;
            let provider = provider_from_env(&rules)?;
            let comparison = compare_modes(&corpus, &context, provider.as_ref())?;
            print!("{}", format_delta(&comparison.delta));
            if let Some(path) = out {
                let mut text = serde_json::to_string_pretty(&comparison)?;
                text.push('\n');
                write_out(Some(&path), &text)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Serve {
            host,
            port,
            data_dir: dir,
        } => {
            let mut config = ServeConfig::from_env().map_err(anyhow::Error::msg)?;
            if let Some(host) = host {
                config.addr = format!("{host}:{}", config.addr.port())
                    .parse()
                    .context("invalid --host")?;
            }
            if let Some(port) = port {
                config.addr.set_port(port);
            }
            if dir.is_some() {
                config.data_dir = data_dir(dir);
            }
            let store = Store::open(&config.data_dir)?;
            let state = AppState::new(store, provider_from_env(&rules)?, rules);
            let runtime = tokio::runtime::Builder::new_multi_thread()
                .enable_all()
                .build()?;
            runtime.block_on(critiq_service::serve(config, state))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Apply {
            document,
            patch,
            out,
            inverse,
        } => {
            let doc = parse_document(&read(&document)?)
                .with_context(|| format!("parsing {}", document.display()))?;
            let patch = Patch::from_json(&read(&patch)?)
                .with_context(|| format!("parsing patch {}", patch.display()))?;
            let (next, undo) = apply_patch(&doc, &patch)?;
            write_out(out.as_deref(), &serialize_document(&next))?;
            if let Some(path) = inverse {
                let mut text = serde_json::to_string_pretty(&undo)?;
                text.push('\n');
                write_out(Some(&path), &text)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Undo {
            session,
            data_dir: dir,
            out,
        } => {
            let dir = data_dir(dir);
            if !dir.is_dir() {
                bail!("no session directory at {}", dir.display());
            }
            let store = Store::open(&dir)?;
            let handle = store.get(&session)?;
            let mut session = handle.write().expect("session lock");
            session.undo()?;
            store.persist(&session)?;
            write_out(out.as_deref(), &serialize_document(&session.document))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("critiq: {e:#}");
            ExitCode::from(2)
        }
    }
}
