mod query;

use std::fs::File;
use std::io::Write;
use std::net::IpAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use fluentkb::indexer::{self, IndexConfig};
use fluentkb::kres::{self, ImportOptions, KresConfig, KresError, ResourceKind};
use fluentkb::rdf_io::{load_snapshot, parse_turtle, serialize_nquads};
use fluentkb::rules::{self, DEFAULT_MAX_ROUNDS};
use fluentkb::{Dataset, Term};
use fluentkb_api::{persist, ApiConfig, DEFAULT_PORT};

#[derive(Parser)]
#[command(name = "fluentkb", version, about = "Knowledge base for dated manuscripts, terminologies and fluents")]
struct Cli {
    /// Snapshot file holding the whole dataset (created if missing).
    #[arg(long, env = "FLUENTKB_DB", global = true)]
    db: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Import a knowledge resource from a Turtle file.
    Import {
        #[arg(long)]
        kind: ResourceKind,
        /// Resource IRI; also the named graph the resource is stored in.
        #[arg(long)]
        id: String,
        #[arg(long)]
        label: Option<String>,
        /// Replace an already imported resource with the same id.
        #[arg(long)]
        replace: bool,
        file: PathBuf,
    },
    /// Load plain Turtle data (people, manuscripts, letters) into a graph.
    Load {
        #[arg(long)]
        graph: String,
        file: PathBuf,
    },
    /// Add correspondences from a CSV file (entity1,entity2,relation,confidence).
    Align { file: PathBuf },
    /// Index transcriptions against the imported terminologies.
    Index {
        #[arg(long, default_value_t = 0.35)]
        theta: f64,
        #[arg(long, default_value_t = 0.3)]
        lambda: f64,
        #[arg(long, default_value_t = 5)]
        window: usize,
        /// JSON Lines file of transcriptions to add before indexing.
        #[arg(long)]
        transcriptions: Option<PathBuf>,
        /// Replacement stopword list, one token per line.
        #[arg(long)]
        stopwords: Option<PathBuf>,
    },
    /// Saturate with the given rules, then infer writing times.
    Infer {
        /// Rule file; may be repeated.
        #[arg(long, required = true)]
        rules: Vec<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_MAX_ROUNDS)]
        max_rounds: usize,
    },
    /// Print quads matching "S P O G"; `?` matches anything.
    Query { pattern: String },
    /// Report consistency clashes.
    Check,
    /// Write the dataset as canonical N-Quads (`-` for stdout).
    Export { out: PathBuf },
    /// Serve the JSON API over the snapshot.
    Serve {
        #[arg(long, default_value_t = DEFAULT_PORT, value_parser = clap::value_parser!(u16).range(1..))]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: IpAddr,
        #[arg(long)]
        read_only: bool,
        /// Require this bearer token on every endpoint except /health.
        #[arg(long, env = "FLUENTKB_TOKEN")]
        token: Option<String>,
        #[arg(long)]
        cors_origin: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

/// Holds an exclusive lock next to the snapshot while a command runs.
struct Db {
    path: PathBuf,
    _lock: File,
}

impl Db {
    fn open(path: &Path) -> Result<(Db, Dataset)> {
        let mut lock_path = path.as_os_str().to_owned();
        lock_path.push(".lock");
        let lock = File::options()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&lock_path)
            .with_context(|| format!("cannot open lock file {}", PathBuf::from(&lock_path).display()))?;
        if lock.try_lock().is_err() {
            bail!("{} is locked by another process", path.display());
        }
        let ds = if path.exists() {
            let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            load_snapshot(&text).map_err(|d| anyhow::anyhow!("{}:{d}", path.display()))?
        } else {
            Dataset::new()
        };
        Ok((
            Db {
                path: path.to_path_buf(),
                _lock: lock,
            },
            ds,
        ))
    }

    fn save(&self, ds: &Dataset) -> Result<()> {
        persist(&self.path, ds).with_context(|| format!("cannot write {}", self.path.display()))
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn parse_file(path: &Path, graph: &str) -> Result<Vec<fluentkb::Quad>> {
    let g = Term::iri(graph);
    g.validate().with_context(|| format!("invalid graph IRI {graph}"))?;
    let out = parse_turtle(&read(path)?, &g);
    if !out.is_ok() {
        for d in &out.diagnostics {
            eprintln!("{}:{d}", path.display());
        }
        bail!("{} has {} syntax error(s)", path.display(), out.diagnostics.len());
    }
    Ok(out.quads)
}

fn run(cli: Cli) -> Result<()> {
    let Some(db_path) = cli.db else {
        bail!("no database: pass --db PATH or set FLUENTKB_DB");
    };
    let (db, mut ds) = Db::open(&db_path)?;
    let mut stdout = std::io::stdout().lock();
    match cli.command {
        Command::Import {
            kind,
            id,
            label,
            replace,
            file,
        } => {
            let quads = parse_file(&file, &id)?;
            let options = ImportOptions { replace, label };
            match kres::import_resource(&mut ds, quads, kind, &id, &options, &KresConfig::default()) {
                Ok(report) => {
                    db.save(&ds)?;
                    writeln!(stdout, "imported {} ({}): {} entities", report.resource, report.kind, report.entity_count)?;
                }
                Err(KresError::Rejected(report)) => {
                    for c in &report.clashes {
                        eprintln!("clash: {c}");
                    }
                    bail!("import of {} rejected: {} clash(es)", report.resource, report.clashes.len());
                }
                Err(e) => return Err(e.into()),
            }
        }
        Command::Load { graph, file } => {
            let quads = parse_file(&file, &graph)?;
            let mut added = 0;
            for q in quads {
                added += ds.insert(q)? as usize;
            }
            db.save(&ds)?;
            writeln!(stdout, "loaded {added} quads into <{graph}>")?;
        }
        Command::Align { file } => {
            let rows = kres::parse_alignment_csv(&read(&file)?).with_context(|| file.display().to_string())?;
            let mut changed = 0;
            for (i, c) in rows.iter().enumerate() {
                changed += kres::add_correspondence(&mut ds, c).with_context(|| format!("{} row {}", file.display(), i + 2))?
                    as usize;
            }
            db.save(&ds)?;
            writeln!(stdout, "{} correspondences read, {changed} stored or updated", rows.len())?;
        }
        Command::Index {
            theta,
            lambda,
            window,
            transcriptions,
            stopwords,
        } => {
            let mut config = IndexConfig {
                theta,
                lambda,
                window,
                ..IndexConfig::default()
            };
            if let Some(path) = stopwords {
                config.stopwords = std::sync::Arc::new(indexer::parse_stopwords(&read(&path)?));
            }
            config.validate()?;
            if let Some(path) = transcriptions {
                let list = indexer::parse_transcriptions_jsonl(&read(&path)?).with_context(|| path.display().to_string())?;
                for t in &list {
                    indexer::add_transcription(&mut ds, t)?;
                }
            }
            let kept = indexer::index_all(&mut ds, &config)?;
            db.save(&ds)?;
            for a in &kept {
                writeln!(
                    stdout,
                    "{:.3}\t{}\t{}\t{}..{}\t{}",
                    a.score, a.occurrence.surface_form, a.concept, a.occurrence.start, a.occurrence.end, a.id
                )?;
            }
            writeln!(stdout, "proposed associations: {}", kept.len())?;
        }
        Command::Infer { rules: files, max_rounds } => {
            if max_rounds == 0 {
                bail!("--max-rounds must be at least 1");
            }
            let mut text = String::new();
            for f in &files {
                text.push_str(&read(f)?);
                text.push('\n');
            }
            let rule_set = rules::compile_rules(&text).map_err(|d| {
                anyhow::anyhow!("{}: {d}", files.iter().map(|f| f.display().to_string()).collect::<Vec<_>>().join(" + "))
            })?;
            rules::store_rules(&mut ds, &rule_set)?;
            let report = rules::saturate(&mut ds, &rule_set, max_rounds)?;
            let times = rules::infer_writing_times(&mut ds)?;
            db.save(&ds)?;
            writeln!(stdout, "{report}")?;
            writeln!(stdout, "writing times updated: {}", times.updated)?;
            for c in &times.contradictions {
                writeln!(stdout, "contradictory bounds on {}: not before {}, not after {}", c.manuscript, c.not_before, c.not_after)?;
            }
            for d in &report.diagnostics {
                eprintln!("warning: {d}");
            }
        }
        Command::Query { pattern } => {
            let pattern = query::parse_pattern(&pattern)?;
            query::print_matches(&ds, &pattern, &mut stdout)?;
        }
        Command::Check => {
            let clashes = kres::check_dataset(&ds, &KresConfig::default());
            if clashes.is_empty() {
                writeln!(stdout, "consistent")?;
            } else {
                for c in &clashes {
                    writeln!(stdout, "clash: {c}")?;
                }
                writeln!(stdout, "{} clash(es)", clashes.len())?;
            }
        }
        Command::Export { out } => {
            let text = serialize_nquads(ds.iter());
            if out.as_os_str() == "-" {
                stdout.write_all(text.as_bytes())?;
            } else {
                std::fs::write(&out, text).with_context(|| format!("cannot write {}", out.display()))?;
                writeln!(stdout, "exported {} quads to {}", ds.len(), out.display())?;
            }
        }
        Command::Serve {
            port,
            bind,
            read_only,
            token,
            cors_origin,
        } => {
            drop(ds);
            tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
                )
                .with_writer(std::io::stderr)
                .init();
            let config = ApiConfig {
                bind,
                port,
                snapshot: Some(db.path.clone()),
                read_only,
                token,
                cors_origin,
            };
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(fluentkb_api::serve(config))?;
        }
    }
    Ok(())
}
