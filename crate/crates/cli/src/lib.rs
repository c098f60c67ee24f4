//! The `partsketch` command line: index building, offline queries, the
//! evaluation harness, the server launcher and corpus generation.

pub mod eval;

use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::Vector3;
use partsketch_core::config::EngineConfig;
use partsketch_core::dataset::load_dataset;
use partsketch_core::engine::{default_index_path, Engine};
use partsketch_core::render::{normalize_image, normalize_strokes, LineImage, ViewDirection};
use partsketch_core::retrieval::{ContextSet, Retrieval};
use partsketch_core::synth::{desk_corpus, style_corpus};
use partsketch_service::session::DEFAULT_CANVAS;
use partsketch_service::{
    canvas_strokes, default_view, ServiceError, SessionService, StrokeRequest,
};

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_USER: i32 = 1;
pub const EXIT_INTERNAL: i32 = 2;

#[derive(Debug)]
pub enum CliError {
    User(String),
    Internal(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::User(_) => EXIT_USER,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::User(m) | CliError::Internal(m) => f.write_str(m),
        }
    }
}

impl From<partsketch_core::Error> for CliError {
    fn from(e: partsketch_core::Error) -> Self {
        CliError::User(e.to_string())
    }
}

impl From<ServiceError> for CliError {
    fn from(e: ServiceError) -> Self {
        if e.status() >= 500 {
            CliError::Internal(e.to_string())
        } else {
            CliError::User(e.to_string())
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "partsketch",
    version,
    about = "Sketch-driven part retrieval and assembly"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Dataset manifest (JSON).
    #[arg(long)]
    pub manifest: PathBuf,
    /// Index file; defaults to `<manifest>.index.bin`.
    #[arg(long)]
    pub index: Option<PathBuf>,
    /// Engine configuration (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl Common {
    pub fn engine_config(&self) -> CliResult<EngineConfig> {
        let mut cfg = match &self.config {
            Some(p) => EngineConfig::load(p)?,
            None => EngineConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn index_path(&self) -> PathBuf {
        self.index
            .clone()
            .unwrap_or_else(|| default_index_path(&self.manifest))
    }

    /// Loads the dataset and an existing, up-to-date index.
    pub fn load_engine(&self) -> CliResult<Engine> {
        let cfg = self.engine_config()?;
        let path = self.index_path();
        if !path.exists() {
            return Err(CliError::User(format!(
                "index file {} not found; run `partsketch build` first",
                path.display()
            )));
        }
        let db = load_dataset(&self.manifest)?;
        Ok(Engine::load(db, cfg, &path)?)
    }
}

#[derive(Debug, Args, Clone)]
pub struct Weights {
    #[arg(long)]
    pub lambda1: Option<f64>,
    #[arg(long)]
    pub lambda2: Option<f64>,
    /// Number of results.
    #[arg(long)]
    pub topn: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CorpusKind {
    /// Chairs with varied seats, backs, legs and optional armrests.
    Desk,
    /// Two style families for context experiments.
    Style,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Renders, trains and indexes a dataset.
    Build {
        #[command(flatten)]
        common: Common,
    },
    /// Ranks the parts of a category for a sketch.
    Query {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        weights: Weights,
        /// Sketch as a PNG line image or a stroke JSON document.
        #[arg(long)]
        sketch: PathBuf,
        #[arg(long)]
        category: String,
        /// Comma-separated part ids placed next to the sketched part.
        #[arg(long, value_delimiter = ',')]
        context: Vec<String>,
        /// View the sketch was drawn from, as `x,y,z`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        view: Option<Vec<f64>>,
        /// Canvas size stroke documents are mapped onto.
        #[arg(long, default_value_t = DEFAULT_CANVAS)]
        canvas: usize,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Runs a query set plus the self-retrieval, oracle and λ-sweep suites.
    Eval {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        weights: Weights,
        /// JSON list of `{sketch, category, context, expected}`.
        #[arg(long)]
        queries: PathBuf,
        /// λ values swept for both weights.
        #[arg(long, value_delimiter = ',', default_value = "0,0.5,1")]
        sweep: Vec<f64>,
        /// Writes the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_CANVAS)]
        canvas: usize,
    },
    /// Runs the design-session HTTP service.
    Serve {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = DEFAULT_CANVAS)]
        canvas: usize,
    },
    /// Writes a synthetic corpus (manifest plus OBJ files).
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = CorpusKind::Desk)]
        kind: CorpusKind,
        /// Chairs (desk) or chairs per family (style).
        #[arg(long, default_value_t = 75)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

/// Loads a sketch file as a canonical query image. PNG files are cropped
/// to their ink; JSON files hold a stroke document.
pub fn load_sketch(path: &Path, image_size: usize, canvas: usize) -> CliResult<LineImage> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::User(format!("cannot read {}: {e}", path.display())))?;
    if path
        .extension()
        .is_some_and(|x| x.eq_ignore_ascii_case("json"))
    {
        let req: StrokeRequest = serde_json::from_slice(&bytes).map_err(|e| {
            CliError::User(format!("{} is not a stroke document: {e}", path.display()))
        })?;
        let strokes = canvas_strokes(&req, canvas)?;
        Ok(normalize_strokes(&strokes, image_size))
    } else {
        let img = LineImage::from_png(&bytes)
            .map_err(|e| CliError::User(format!("{} is not a line image: {e}", path.display())))?;
        if img.is_blank() {
            return Err(CliError::User(format!("{} has no ink", path.display())));
        }
        Ok(normalize_image(&img, image_size))
    }
}

pub fn parse_view(v: Option<&[f64]>) -> CliResult<ViewDirection> {
    match v {
        None => Ok(default_view()),
        Some(&[x, y, z]) => {
            let d = Vector3::new(x, y, z);
            if !d.iter().all(|c| c.is_finite()) || d.norm() < 1e-9 {
                return Err(CliError::User(format!(
                    "view {x},{y},{z} is not a usable direction"
                )));
            }
            Ok(ViewDirection::new(d))
        }
        Some(other) => Err(CliError::User(format!(
            "view needs three components, got {}",
            other.len()
        ))),
    }
}

pub fn context_set(engine: &Engine, ids: &[String]) -> CliResult<ContextSet> {
    let parts = ids
        .iter()
        .filter(|s| !s.is_empty())
        .map(|id| {
            engine
                .db
                .part_index(id)
                .ok_or_else(|| CliError::User(format!("unknown context part `{id}`")))
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(ContextSet::new(parts))
}

pub fn resolve_weights(engine: &Engine, w: &Weights) -> (f64, f64, usize) {
    let rc = &engine.config.retrieval;
    (
        w.lambda1.unwrap_or(rc.lambda1),
        w.lambda2.unwrap_or(rc.lambda2),
        w.topn.unwrap_or(rc.top_n),
    )
}

/// The query path shared with the session gallery.
#[allow(clippy::too_many_arguments)]
pub fn run_query(
    engine: &Engine,
    sketch: &LineImage,
    view: &ViewDirection,
    category: &str,
    ctx: &ContextSet,
    lambda1: f64,
    lambda2: f64,
    n: usize,
) -> CliResult<Retrieval> {
    Ok(engine.query(sketch, view, category, ctx, lambda1, lambda2, n)?)
}

pub fn format_table(r: &Retrieval, lambda1: f64, lambda2: f64) -> String {
    let mut out = format!(
        "{:>4}  {:<24} {:>9} {:>9} {:>9} {:>9}\n",
        "rank", "part", "score", "sketch", "l1*detail", "l2*style"
    );
    for (i, s) in r.results.iter().enumerate() {
        out.push_str(&format!(
            "{:>4}  {:<24} {:>9.5} {:>9.5} {:>9.5} {:>9.5}\n",
            i + 1,
            s.part_id,
            s.score,
            s.sketch_term,
            lambda1 * s.detail_term,
            lambda2 * s.style_term
        ));
    }
    out.push_str(&format!(
        "candidates: {}  fallback: {:?}\n",
        r.candidates, r.fallback
    ));
    out
}

fn write_out(text: &str) -> CliResult<()> {
    let mut stdout = std::io::stdout().lock();
    stdout
        .write_all(text.as_bytes())
        .and_then(|_| stdout.flush())
        .map_err(|e| CliError::Internal(format!("cannot write output: {e}")))
}

fn build(common: &Common) -> CliResult<()> {
    let cfg = common.engine_config()?;
    let db = load_dataset(&common.manifest)?;
    let path = common.index_path();
    if path.exists() {
        if let Ok(e) = Engine::load(db.clone(), cfg.clone(), &path) {
            return write_out(&format!(
                "index {} is up to date ({} parts); nothing to do\n",
                path.display(),
                e.db.parts.len()
            ));
        }
    }
    let t0 = Instant::now();
    let engine = Engine::build(db, cfg)?;
    engine.save(&path)?;
    let s = &engine.data.stats;
    write_out(&format!(
        "built index {}: {} parts, {} views, images sketch/detail/overall = {}/{}/{}, {:.1} s\n",
        path.display(),
        engine.db.parts.len(),
        engine.views().len(),
        s.images[0],
        s.images[1],
        s.images[2],
        t0.elapsed().as_secs_f64()
    ))
}

#[allow(clippy::too_many_arguments)]
fn query(
    common: &Common,
    weights: &Weights,
    sketch: &Path,
    category: &str,
    context: &[String],
    view: Option<&[f64]>,
    canvas: usize,
    json: bool,
) -> CliResult<()> {
    let engine = common.load_engine()?;
    let img = load_sketch(sketch, engine.config.render.image_size, canvas)?;
    let view = parse_view(view)?;
    let ctx = context_set(&engine, context)?;
    let (l1, l2, n) = resolve_weights(&engine, weights);
    let r = run_query(&engine, &img, &view, category, &ctx, l1, l2, n)?;
    if json {
        let text =
            serde_json::to_string_pretty(&r).map_err(|e| CliError::Internal(e.to_string()))?;
        write_out(&(text + "\n"))
    } else {
        write_out(&format_table(&r, l1, l2))
    }
}

fn serve(common: &Common, host: &str, port: u16, canvas: usize) -> CliResult<()> {
    let cfg = common.engine_config()?;
    let path = common.index_path();
    let engine = Engine::open(&common.manifest, cfg, Some(&path))?;
    let addr: SocketAddr = format!("{host}:{port}")
        .parse()
        .map_err(|e| CliError::User(format!("bad address {host}:{port}: {e}")))?;
    let service = Arc::new(SessionService::with_canvas(Arc::new(engine), canvas));
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Internal(e.to_string()))?;
    rt.block_on(partsketch_service::serve(service, addr))
        .map_err(|e| CliError::User(format!("cannot serve on {addr}: {e}")))
}

fn synth(out: &Path, kind: CorpusKind, count: usize, seed: u64) -> CliResult<()> {
    if count == 0 {
        return Err(CliError::User("count must be positive".into()));
    }
    let corpus = match kind {
        CorpusKind::Desk => desk_corpus(count, seed),
        CorpusKind::Style => style_corpus(count, seed),
    };
    let manifest = corpus.write(out)?;
    write_out(&format!("{}\n", manifest.display()))
}

pub fn run(cli: Cli) -> CliResult<()> {
    match &cli.command {
        Command::Build { common } => build(common),
        Command::Query {
            common,
            weights,
            sketch,
            category,
            context,
            view,
            canvas,
            json,
        } => query(
            common,
            weights,
            sketch,
            category,
            context,
            view.as_deref(),
            *canvas,
            *json,
        ),
        Command::Eval {
            common,
            weights,
            queries,
            sweep,
            out,
            canvas,
        } => {
            let engine = common.load_engine()?;
            let report = eval::evaluate(&engine, queries, weights, sweep, *canvas)?;
            let text = serde_json::to_string_pretty(&report)
                .map_err(|e| CliError::Internal(e.to_string()))?
                + "\n";
            match out {
                Some(p) => std::fs::write(p, text)
                    .map_err(|e| CliError::User(format!("cannot write {}: {e}", p.display()))),
                None => write_out(&text),
            }
        }
        Command::Serve {
            common,
            port,
            host,
            canvas,
        } => serve(common, host, *port, *canvas),
        Command::Synth {
            out,
            kind,
            count,
            seed,
        } => synth(out, *kind, *count, *seed),
    }
}

/// Parses arguments, runs, and maps the outcome to an exit code. Panics
/// count as internal errors.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USER } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => EXIT_OK,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            e.code()
        }
        Err(_) => {
            eprintln!("error: internal failure");
            EXIT_INTERNAL
        }
    }
}
