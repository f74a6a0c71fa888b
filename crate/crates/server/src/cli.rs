//! Command-line entry points.

use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;
use trackmark_core::metrics::{
    emit_report, generate_fixture, session_labels, simulate_operator, FixtureSpec, OperatorPolicy,
};
use trackmark_core::store::{load_manifest, load_session, read_cache, save_session, write_cache};
use trackmark_core::track::{refresh_track, Provenance};
use trackmark_core::{AnnotationStyle, DescriptorCache, Session, SessionFile, TrackReport};

use crate::http::{router, AppState};
use crate::render::write_fixture_frames;

#[derive(Debug, Parser)]
#[command(
    name = "trackmark",
    version,
    about = "Assisted video annotation: server and offline tools"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Serve one annotation session over HTTP.
    Serve {
        /// Frame manifest; without it frame images are not served.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        cache: PathBuf,
        #[arg(long)]
        style: AnnotationStyle,
        /// Session file, resumed if it exists and autosaved on every change.
        #[arg(long)]
        session: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Seed for random frame order and random jumps of a new session.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Generate a synthetic descriptor cache from a fixture spec.
    PrecomputeFixture {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also render PNG frames and a manifest into this directory.
        #[arg(long)]
        frames_dir: Option<PathBuf>,
    },
    /// Refresh a session's track offline and write it as CSV.
    Track {
        #[arg(long)]
        session: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the cache recorded in the session.
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Score sessions against a ground-truth session.
    Eval {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long, num_args = 1.., required = true)]
        pred: Vec<PathBuf>,
        #[arg(long)]
        report: PathBuf,
        /// Video name for the report; defaults to the truth session's.
        #[arg(long)]
        video: Option<String>,
    },
    /// Run the scripted operator on a fixture and save the session.
    Simulate {
        /// Fixture spec (JSON).
        #[arg(long)]
        fixture: PathBuf,
        #[arg(long)]
        style: AnnotationStyle,
        /// Operator policy (JSON).
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Cache to reference; generated from the fixture when missing.
        /// Defaults to the fixture path with a `.dtc` extension.
        #[arg(long)]
        cache: Option<PathBuf>,
    },
}

pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Serve {
            manifest,
            cache,
            style,
            session,
            port,
            host,
            seed,
        } => serve(manifest, &cache, style, &session, &host, port, seed),
        Command::PrecomputeFixture { spec, out, frames_dir } => precompute_fixture(&spec, &out, frames_dir.as_deref()),
        Command::Track { session, out, cache } => track(&session, &out, cache.as_deref()),
        Command::Eval {
            truth,
            pred,
            report,
            video,
        } => eval(&truth, &pred, &report, video),
        Command::Simulate {
            fixture,
            style,
            policy,
            seed,
            out,
            cache,
        } => simulate(&fixture, style, &policy, seed, &out, cache.as_deref()),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Path recorded in a session for `cache`: absolute, so the session can be
/// read from any working directory.
fn cache_ref(cache: &Path) -> Result<String> {
    let abs = fs::canonicalize(cache).with_context(|| format!("resolving {}", cache.display()))?;
    Ok(abs.to_string_lossy().into_owned())
}

/// Resolves a session's cache reference: relative references are tried
/// against the session's directory first, then the working directory.
fn resolve_cache(session_path: &Path, reference: &str) -> PathBuf {
    let r = Path::new(reference);
    if r.is_absolute() {
        return r.to_path_buf();
    }
    if let Some(dir) = session_path.parent() {
        let candidate = dir.join(r);
        if candidate.exists() {
            return candidate;
        }
    }
    r.to_path_buf()
}

fn load_with_cache(session_path: &Path, cache: Option<&Path>) -> Result<(SessionFile, DescriptorCache)> {
    let file = load_session(session_path)?;
    let cache_path = match cache {
        Some(c) => c.to_path_buf(),
        None => resolve_cache(session_path, &file.cache),
    };
    let cache = read_cache(&cache_path)?;
    Ok((file, cache))
}

fn serve(
    manifest: Option<PathBuf>,
    cache_path: &Path,
    style: AnnotationStyle,
    session_path: &Path,
    host: &str,
    port: u16,
    seed: u64,
) -> Result<()> {
    let cache = Arc::new(read_cache(cache_path)?);
    let manifest = match manifest {
        Some(m) => {
            let m = load_manifest(m)?;
            m.check_against(&cache)?;
            Some(m)
        }
        None => None,
    };
    let session = if session_path.exists() {
        let file = load_session(session_path)?;
        if file.style != style {
            bail!(
                "{} was recorded with style '{}', not '{}'",
                session_path.display(),
                file.style,
                style
            );
        }
        Session::resume(file, cache)?
    } else {
        let s = Session::create(style, cache, cache_ref(cache_path)?, seed);
        s.save(session_path)?;
        s
    };
    let addr: SocketAddr = format!("{host}:{port}")
        .parse()
        .with_context(|| format!("bad listen address {host}:{port}"))?;
    let state = AppState::new(session, manifest, Some(session_path.to_path_buf()));
    let app = router(state.clone());

    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .with_context(|| format!("binding {addr}"))?;
        eprintln!(
            "serving {} on http://{}",
            session_path.display(),
            listener.local_addr()?
        );
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        anyhow::Ok(())
    })?;
    save_session(&state.snapshot(), session_path)?;
    Ok(())
}

fn precompute_fixture(spec_path: &Path, out: &Path, frames_dir: Option<&Path>) -> Result<()> {
    let spec: FixtureSpec = read_json(spec_path)?;
    let fixture = generate_fixture(&spec, spec.seed)?;
    write_cache(&fixture.cache, out)?;
    if let Some(dir) = frames_dir {
        write_fixture_frames(&fixture, dir)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct TrackRow {
    frame: usize,
    x: f64,
    y: f64,
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
    provenance: &'static str,
    match_distance: f64,
}

fn track(session_path: &Path, out: &Path, cache: Option<&Path>) -> Result<()> {
    let (file, cache) = load_with_cache(session_path, cache)?;
    let track = refresh_track(&cache, &file.annotations)?;
    let mut w = csv::Writer::from_path(out).with_context(|| format!("writing {}", out.display()))?;
    for e in &track {
        w.serialize(TrackRow {
            frame: e.frame,
            x: e.point.x,
            y: e.point.y,
            x_min: e.bbox.x_min,
            y_min: e.bbox.y_min,
            x_max: e.bbox.x_max,
            y_max: e.bbox.y_max,
            provenance: match e.provenance {
                Provenance::Annotated => "annotated",
                Provenance::Predicted => "predicted",
            },
            match_distance: e.match_distance,
        })?;
    }
    w.flush()?;
    Ok(())
}

fn eval(truth_path: &Path, preds: &[PathBuf], report: &Path, video: Option<String>) -> Result<()> {
    let (truth_file, truth_cache) = load_with_cache(truth_path, None)?;
    let truth =
        session_labels(&truth_file, &truth_cache).with_context(|| format!("labels of {}", truth_path.display()))?;
    let video = video
        .or_else(|| truth_file.video.clone())
        .unwrap_or_else(|| truth_cache.source_id().to_string());
    let mut reports: Vec<TrackReport> = Vec::with_capacity(preds.len());
    for p in preds {
        let (file, cache) = load_with_cache(p, None)?;
        let labels = session_labels(&file, &cache).with_context(|| format!("labels of {}", p.display()))?;
        let r = TrackReport::evaluate(video.clone(), &file, &labels, &truth)
            .with_context(|| format!("evaluating {}", p.display()))?;
        reports.push(r);
    }
    emit_report(&reports, report)?;
    Ok(())
}

fn simulate(
    fixture_path: &Path,
    style: AnnotationStyle,
    policy_path: &Path,
    seed: u64,
    out: &Path,
    cache: Option<&Path>,
) -> Result<()> {
    let spec: FixtureSpec = read_json(fixture_path)?;
    let policy: OperatorPolicy = read_json(policy_path)?;
    let fixture = generate_fixture(&spec, spec.seed)?;
    let cache_path = cache.map_or_else(|| fixture_path.with_extension("dtc"), Path::to_path_buf);
    if cache_path.exists() {
        let existing = fs::read(&cache_path).with_context(|| format!("reading {}", cache_path.display()))?;
        if existing != fixture.cache.to_bytes() {
            bail!("{} does not hold this fixture's cache", cache_path.display());
        }
    } else {
        write_cache(&fixture.cache, &cache_path)?;
    }
    let file = simulate_operator(&fixture, style, &policy, seed, &cache_ref(&cache_path)?)?;
    save_session(&file, out)?;
    Ok(())
}
