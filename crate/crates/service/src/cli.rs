use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use slopesim_core::agent::{AgentKind, SystemClock, Upload};
use slopesim_core::emit::{emit, lint, parse_script, TargetProfile};
use slopesim_core::kb::KbDocument;
use slopesim_core::model::{
    canonical_hash, fill_defaults, normalize_units, read_problem_file, to_canonical_pretty,
    validate, DefaultsTable, Method, ModelError, ProvenanceSource, SlopeProblem, Target,
};
use slopesim_core::solver::{render_svg, search_critical, solve_circle, ResultFile, SlipCircle};

use crate::config::{BackendKind, ServiceConfig};
use crate::error::ErrorPayload;
use crate::state::{backend_for, AppState};

#[derive(Debug, Parser)]
#[command(
    name = "slopesim",
    version,
    about = "Slope stability problems: check, compile, solve and chat"
)]
pub struct Cli {
    /// Directory for the knowledge base, sessions and artifacts.
    #[arg(long, global = true, env = crate::config::DATA_DIR_ENV)]
    pub data_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Complete a problem file with defaults and check it.
    Validate { problem: PathBuf },
    /// Compile a problem file into a target script.
    Emit {
        problem: PathBuf,
        #[arg(long, value_parser = parse_target)]
        target: Target,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Read a target script back into a canonical problem file.
    Parse {
        script: PathBuf,
        #[arg(long, value_parser = parse_target)]
        target: Target,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Find the critical slip circle, or evaluate one given circle.
    Solve {
        problem: PathBuf,
        #[arg(long)]
        method: Option<MethodArg>,
        /// Fixed circle as `x,y,r`; skips the search.
        #[arg(long, value_parser = parse_circle)]
        circle: Option<SlipCircle>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Render a result file as SVG.
    Plot {
        result: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Manage the knowledge base.
    Kb {
        #[command(subcommand)]
        command: KbCommand,
    },
    /// Talk to the assistant on the terminal.
    Chat(ChatArgs),
    /// Run the HTTP API.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the configured bind address.
        #[arg(long)]
        bind: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Bishop,
    Fellenius,
}

#[derive(Debug, Subcommand)]
pub enum KbCommand {
    /// Add text or markdown files; the document id is the file stem.
    Ingest {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long = "tag")]
        tags: Vec<String>,
    },
    Delete {
        doc_id: String,
    },
    Search {
        query: String,
        #[arg(short, default_value_t = 5)]
        k: usize,
    },
    List,
}

#[derive(Debug, Args)]
pub struct ChatArgs {
    #[arg(long, value_enum)]
    pub backend: Option<BackendKind>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = parse_target, default_value = "hyrcan")]
    pub target: Target,
    /// Resume an existing session.
    #[arg(long)]
    pub session: Option<String>,
}

fn parse_target(s: &str) -> Result<Target, String> {
    Target::parse(s).ok_or_else(|| format!("unknown target `{s}` (adonis, hyrcan, none)"))
}

fn parse_circle(s: &str) -> Result<SlipCircle, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [x, y, r] if v.iter().all(|c| c.is_finite()) && r > 0.0 => Ok(SlipCircle::new(x, y, r)),
        _ => Err("expected `x,y,r` with a positive radius".into()),
    }
}

/// Loads a problem file, converts units, fills defaults and validates.
pub fn load_problem(path: &Path) -> anyhow::Result<SlopeProblem> {
    let partial = read_problem_file(path).with_context(|| format!("reading {}", path.display()))?;
    let partial = normalize_units(&partial)?;
    let problem = fill_defaults(&partial, &DefaultsTable::shipped())?;
    let report = validate(&problem);
    if !report.is_empty() {
        return Err(ModelError::InvalidProblem(report).into());
    }
    Ok(problem)
}

fn write_out(output: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match output {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn service_config(cli_dir: Option<&PathBuf>, file: Option<&Path>) -> anyhow::Result<ServiceConfig> {
    let mut cfg = match file {
        Some(f) => ServiceConfig::load(f)?,
        None => {
            let mut c = ServiceConfig::default();
            c.apply_env();
            c
        }
    };
    if let Some(d) = cli_dir {
        cfg.data_dir = d.clone();
    }
    Ok(cfg)
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let data_dir = cli.data_dir.as_ref();
    match cli.command {
        Command::Validate { problem } => {
            let p = load_problem(&problem)?;
            println!("ok {}", canonical_hash(&p)?);
            for prov in p
                .provenance
                .iter()
                .filter(|p| p.source == ProvenanceSource::Defaulted)
            {
                println!(
                    "defaulted {} ({})",
                    prov.field_path,
                    prov.default_key.as_deref().unwrap_or("-")
                );
            }
        }
        Command::Emit {
            problem,
            target,
            output,
        } => {
            let p = load_problem(&problem)?;
            let profile = TargetProfile::for_target(target)?;
            let script = emit(&p, &profile)?;
            for w in lint(&script.text, &profile)? {
                eprintln!("warning[{}] {}: {}", w.code, w.field_path, w.message);
            }
            write_out(output.as_deref(), &script.text)?;
        }
        Command::Parse {
            script,
            target,
            output,
        } => {
            let profile = TargetProfile::for_target(target)?;
            let text = std::fs::read_to_string(&script)
                .with_context(|| format!("reading {}", script.display()))?;
            let p = parse_script(&text, &profile)?;
            write_out(output.as_deref(), &to_canonical_pretty(&p))?;
        }
        Command::Solve {
            problem,
            method,
            circle,
            output,
        } => {
            let mut p = load_problem(&problem)?;
            if let Some(m) = method {
                p.analysis.method = match m {
                    MethodArg::Bishop => Method::BishopSimplified,
                    MethodArg::Fellenius => Method::Fellenius,
                };
            }
            let r = match circle {
                Some(c) => solve_circle(&p, &c)?,
                None => search_critical(&p)?,
            };
            let file = ResultFile::new(&p, &r);
            match output {
                Some(path) => {
                    write_out(Some(&path), &file.to_text())?;
                    let c = r.critical;
                    println!(
                        "fos {} method {} circle {},{},{}",
                        r.fos,
                        r.method.label(),
                        c.center.x,
                        c.center.y,
                        c.radius
                    );
                }
                None => write_out(None, &file.to_text())?,
            }
        }
        Command::Plot { result, output } => {
            let text = std::fs::read_to_string(&result)
                .with_context(|| format!("reading {}", result.display()))?;
            let file = ResultFile::from_text(&text)
                .map_err(|e| ErrorPayload::new("MALFORMED_RESULT", e.to_string()))?;
            write_out(Some(&output), &render_svg(&file))?;
        }
        Command::Kb { command } => kb(service_config(data_dir, None)?, command)?,
        Command::Chat(args) => chat(service_config(data_dir, args.config.as_deref())?, args)?,
        Command::Serve { config, bind } => {
            let mut cfg = service_config(data_dir, config.as_deref())?;
            if let Some(b) = bind {
                cfg.bind = b;
            }
            serve(cfg)?;
        }
    }
    Ok(())
}

fn kb(cfg: ServiceConfig, command: KbCommand) -> anyhow::Result<()> {
    cfg.check()?;
    let embedder = slopesim_core::kb::HashingEmbedder::default();
    let mut kb = crate::state::open_kb(&cfg, &embedder)?;
    match command {
        KbCommand::Ingest { files, tags } => {
            for f in files {
                let body = std::fs::read_to_string(&f)
                    .with_context(|| format!("reading {}", f.display()))?;
                let doc_id = f
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .context("file name is not valid UTF-8")?
                    .to_string();
                let title = body
                    .lines()
                    .map(str::trim)
                    .find(|l| !l.is_empty())
                    .map(|l| l.trim_start_matches('#').trim().to_string())
                    .unwrap_or_else(|| doc_id.clone());
                let n = kb.ingest(
                    KbDocument {
                        doc_id: doc_id.clone(),
                        title,
                        source_path: f.display().to_string(),
                        body,
                        tags: tags.clone(),
                    },
                    &embedder,
                )?;
                println!("ingested {doc_id} ({n} chunks)");
            }
        }
        KbCommand::Delete { doc_id } => {
            if kb.document(&doc_id).is_none() {
                return Err(ErrorPayload::new(
                    "UNKNOWN_DOCUMENT",
                    format!("no document `{doc_id}`"),
                )
                .into());
            }
            let n = kb.delete(&doc_id)?;
            println!("deleted {doc_id} ({n} chunks)");
        }
        KbCommand::Search { query, k } => {
            for h in kb.search(&query, k, &embedder)? {
                let preview: String = h
                    .text
                    .chars()
                    .take(80)
                    .collect::<String>()
                    .replace('\n', " ");
                println!(
                    "{:.4}\t{}\t{}\t{preview}",
                    h.score, h.chunk_id, h.citation.title
                );
            }
        }
        KbCommand::List => {
            for id in kb.document_ids() {
                let d = kb.document(&id).expect("listed");
                println!("{id}\t{}\t{} chunks", d.title, kb.chunks(&id).len());
            }
        }
    }
    Ok(())
}

fn media_type_for(path: &Path) -> &'static str {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        Some("png") => "image/png",
        Some("jpg" | "jpeg") => "image/jpeg",
        Some("json") => "application/json",
        Some("txt" | "md") => "text/plain",
        _ => "application/octet-stream",
    }
}

/// Line-oriented chat. `:attach PATH` queues a file for the next message and
/// `:quit` ends the session.
fn chat(mut cfg: ServiceConfig, args: ChatArgs) -> anyhow::Result<()> {
    if let Some(b) = args.backend {
        cfg.backend = b;
    }
    let backend = backend_for(&cfg)?;
    let state = AppState::with_backend(cfg, backend, Arc::new(SystemClock))?;
    let orch = &state.orchestrator;
    let mut session = match &args.session {
        Some(id) => orch.load_session(id)?,
        None => {
            let id = uuid::Uuid::new_v4().simple().to_string();
            orch.create_session(&id, AgentKind::SlopeStability, args.target)?
        }
    };
    println!(
        "session {} (backend {})",
        session.session_id,
        orch.backend_id()
    );
    let mut pending: Vec<Upload> = Vec::new();
    let stdin = std::io::stdin();
    let mut out = std::io::stdout();
    for line in stdin.lock().lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line == ":quit" {
            break;
        }
        if let Some(path) = line.strip_prefix(":attach ") {
            let path = PathBuf::from(path.trim());
            let bytes =
                std::fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
            if bytes.len() > state.config.upload_limit_bytes {
                bail!(ErrorPayload::new(
                    "UPLOAD_TOO_LARGE",
                    format!("{} is too large", path.display())
                ));
            }
            pending.push(Upload {
                filename: path
                    .file_name()
                    .and_then(|n| n.to_str())
                    .unwrap_or("upload")
                    .to_string(),
                media_type: media_type_for(&path).to_string(),
                bytes,
            });
            writeln!(out, "attached {}", path.display())?;
            continue;
        }
        let before = session.artifacts.len();
        let reply = orch.handle_turn(&mut session, line, std::mem::take(&mut pending))?;
        writeln!(out, "{}", reply.text)?;
        for a in &session.artifacts[before..] {
            writeln!(
                out,
                "artifact {} {}",
                a.artifact_id,
                state.config.data_dir.join(&a.path).display()
            )?;
        }
        out.flush()?;
    }
    Ok(())
}

fn serve(cfg: ServiceConfig) -> anyhow::Result<()> {
    let state = Arc::new(AppState::new(cfg)?);
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&state.config.bind)
            .await
            .with_context(|| format!("binding {}", state.config.bind))?;
        let addr = listener.local_addr()?;
        tracing::info!(%addr, backend = state.orchestrator.backend_id(), "serving");
        println!("listening on {addr}");
        std::io::stdout().flush()?;
        axum::serve(listener, crate::api::router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}
