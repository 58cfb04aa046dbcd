//! The `netevo` command-line driver.
//!
//! Data goes to stdout (or `--out`), logs and summaries to stderr. Exit
//! codes: 0 success, 1 usage or configuration error, 2 data error, 3
//! numerical failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::error::Error;
use crate::estimation::{fit_pair, FitConfig};
use crate::events::{reindex, stream_hash, EdgeEvent, EventFile};
use crate::generator::{empirical_outer_from, grow_with, GrowOptions, OuterModel};
use crate::graph::EvolvingGraph;
use crate::ingest::{ingest, split_warmup, IngestConfig, RawFormat};
use crate::likelihood::{score_many, LikelihoodReport, Scope, ScoreOptions, SpecPair};
use crate::models::{EdgeMode, ModelSpec};
use crate::stats::{even_checkpoints, long_form, parse_trajectory_csv, trajectory, trajectory_csv};

#[derive(Debug, Parser)]
#[command(name = "netevo", version, about = "Likelihood-based fitting and growth of network evolution models")]
pub struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a raw edge list or co-authorship file into an event file.
    Ingest(IngestArgs),
    /// Score one or more model specs against an event file.
    Likelihood(LikelihoodArgs),
    /// Fit the best mixture for new-node and internal choices.
    Fit(FitArgs),
    /// Grow an artificial network from a starting graph.
    Grow(GrowArgs),
    /// Statistics trajectory of an event file.
    Stats(StatsArgs),
    /// Merge trajectory CSVs into one long-form table.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Edges2,
    Edges3,
    Edges4,
    Coauth,
}

impl From<FormatArg> for RawFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Edges2 => RawFormat::Edges2,
            FormatArg::Edges3 => RawFormat::Edges3,
            FormatArg::Edges4 => RawFormat::Edges4,
            FormatArg::Coauth => RawFormat::Coauth,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OuterArg {
    Replay,
    Empirical,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScopeArg {
    All,
    NewNode,
    Internal,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub raw: PathBuf,
    #[arg(long, value_enum)]
    pub format: FormatArg,
    /// Fraction of events used to build the starting graph.
    #[arg(long, default_value_t = 0.05)]
    pub warmup: f64,
    /// Drop records last seen before this time (edges4 only).
    #[arg(long)]
    pub cutoff: Option<f64>,
    #[arg(long, default_value_t = 59)]
    pub max_clique: usize,
    /// Report disconnected edges as residual instead of delaying them.
    #[arg(long)]
    pub no_delay: bool,
    /// Keep repeated sightings of a pair (they are still skipped on replay).
    #[arg(long)]
    pub keep_duplicates: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SpecArgs {
    /// Spec used for both roles; repeatable.
    #[arg(long)]
    pub spec: Vec<String>,
    #[arg(long)]
    pub spec_new: Option<String>,
    #[arg(long)]
    pub spec_int: Option<String>,
}

impl SpecArgs {
    fn pairs(&self) -> Result<Vec<SpecPair>, CliError> {
        let mut out = Vec::new();
        for s in &self.spec {
            out.push(SpecPair::same(parse_spec(s)?));
        }
        if self.spec_new.is_some() || self.spec_int.is_some() {
            let fallback = match self.spec.first() {
                Some(s) => parse_spec(s)?,
                None => ModelSpec::null(),
            };
            let pick =
                |s: &Option<String>| s.as_deref().map(parse_spec).transpose().map(|o| o.unwrap_or(fallback.clone()));
            out.push(SpecPair::new(pick(&self.spec_new)?, pick(&self.spec_int)?));
        }
        Ok(out)
    }
}

fn parse_spec(s: &str) -> Result<ModelSpec, CliError> {
    s.parse().map_err(CliError::from)
}

#[derive(Debug, Args)]
pub struct LikelihoodArgs {
    #[arg(long)]
    pub events: PathBuf,
    #[command(flatten)]
    pub specs: SpecArgs,
    /// Warm-up fraction; overrides the count recorded in the file header.
    #[arg(long)]
    pub warmup: Option<f64>,
    /// Score internal edges with the recorded endpoint order.
    #[arg(long)]
    pub ordered_pairs: bool,
    #[arg(long, value_enum, default_value_t = ScopeArg::All)]
    pub scope: ScopeArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub events: PathBuf,
    /// key=value file; defaults are used for missing keys.
    #[arg(long)]
    pub fit_config: Option<PathBuf>,
    #[arg(long)]
    pub warmup: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GrowArgs {
    /// Observed event file: its warm-up prefix is the starting graph and its
    /// tail drives the outer model.
    #[arg(long)]
    pub events: Option<PathBuf>,
    /// Event file whose full replay is the starting graph.
    #[arg(long)]
    pub g0: Option<PathBuf>,
    #[command(flatten)]
    pub specs: SpecArgs,
    #[arg(long, value_enum, default_value_t = OuterArg::Replay)]
    pub outer: OuterArg,
    /// Defaults to the edge count of the observed stream.
    #[arg(long)]
    pub target_edges: Option<usize>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub warmup: Option<f64>,
    /// Fail instead of skipping internal edges on a complete graph.
    #[arg(long)]
    pub strict: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub events: PathBuf,
    /// Comma-separated edge counts, or a single number of evenly spaced
    /// checkpoints after the warm-up.
    #[arg(long, default_value = "20")]
    pub checkpoints: String,
    #[arg(long)]
    pub warmup: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Trajectory CSVs, at least two.
    #[arg(required = true, num_args = 2..)]
    pub trajectories: Vec<PathBuf>,
    /// Comma-separated labels; defaults to file stems.
    #[arg(long)]
    pub labels: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lib(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Lib(e) if e.is_numeric() => 3,
            CliError::Lib(
                Error::SpecParse { .. } | Error::BadWeights(_) | Error::DuplicateComponent(_) | Error::Config(_),
            ) => 1,
            CliError::Lib(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Lib(e) => e.fmt(f),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// Parses `args` (including the program name) and runs the command,
/// writing data to `stdout` unless `--out` is given. Returns the exit code.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("netevo: {e}");
            e.exit_code()
        }
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout().lock())
}

pub fn execute(cli: Cli, stdout: &mut dyn Write) -> CliResult<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Usage(e.to_string()))?;
    let output = pool.install(|| match cli.command {
        Command::Ingest(a) => cmd_ingest(a),
        Command::Likelihood(a) => cmd_likelihood(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Grow(a) => cmd_grow(a),
        Command::Stats(a) => cmd_stats(a),
        Command::Compare(a) => cmd_compare(a),
    })?;
    match output.out {
        Some(path) => std::fs::write(path, output.text).map_err(Error::from)?,
        None => stdout.write_all(output.text.as_bytes()).map_err(Error::from)?,
    }
    Ok(())
}

/// Command output and where it goes (stdout when `out` is unset).
struct Output {
    out: Option<PathBuf>,
    text: String,
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Lib(Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))))
}

/// An event file split into starting graph and scored tail.
struct Loaded {
    all: Vec<EdgeEvent>,
    warm: usize,
    g0: EvolvingGraph,
    tail: Vec<EdgeEvent>,
}

fn load_events(path: &Path, warmup: Option<f64>) -> CliResult<Loaded> {
    let file = EventFile::parse(&read(path)?)?;
    if file.events.is_empty() {
        return Err(Error::EmptyStream.into());
    }
    let (g0, tail) = match warmup {
        Some(w) => split_warmup(&file.events, w)?,
        None => {
            let warm = match file.header_value("warmup_events") {
                Some(v) => v
                    .parse::<usize>()
                    .map_err(|_| Error::Parse { line: 1, reason: format!("bad warmup_events `{v}`") })?,
                None => 1,
            };
            if warm == 0 || warm >= file.events.len() {
                return Err(Error::WarmupTooLarge { warm, total: file.events.len() }.into());
            }
            let g0 = crate::events::build_graph(&file.events[..warm])?;
            (g0, file.events[warm..].to_vec())
        }
    };
    let warm = file.events.len() - tail.len();
    Ok(Loaded { all: file.events, warm, g0, tail })
}

fn cmd_ingest(a: IngestArgs) -> CliResult<Output> {
    let config = IngestConfig {
        warmup: a.warmup,
        final_window_cutoff: a.cutoff,
        delay_disconnected: !a.no_delay,
        dedupe: !a.keep_duplicates,
        max_clique: a.max_clique,
    };
    let out = ingest(&read(&a.raw)?, a.format.into(), &config)?;
    eprintln!("{}", out.summary);
    for r in out.ordered.residual.iter().take(10) {
        log::warn!("residual edge from line {}", r.line);
    }
    Ok(Output { out: a.out, text: out.file.to_text() })
}

fn cmd_likelihood(a: LikelihoodArgs) -> CliResult<Output> {
    let specs = a.specs.pairs()?;
    if specs.is_empty() {
        return Err(CliError::Usage("give at least one --spec, --spec-new or --spec-int".into()));
    }
    let data = load_events(&a.events, a.warmup)?;
    let opts = ScoreOptions {
        scope: match a.scope {
            ScopeArg::All => Scope::All,
            ScopeArg::NewNode => Scope::NewNode,
            ScopeArg::Internal => Scope::Internal,
        },
        edge_mode: if a.ordered_pairs { EdgeMode::Ordered } else { EdgeMode::Unordered },
        count_windows: false,
    };
    let per_worker = specs.len().div_ceil(rayon::current_num_threads()).max(1);
    let reports: Vec<Vec<LikelihoodReport>> = specs
        .par_chunks(per_worker)
        .map(|chunk| score_many(chunk, &data.g0, &data.tail, opts))
        .collect::<Result<_, _>>()?;
    let mut text = format!("# stream={} warmup_events={}\n", stream_hash(&data.g0, &data.tail), data.warm);
    text.push_str(LikelihoodReport::CSV_HEADER);
    text.push('\n');
    for r in reports.iter().flatten() {
        text.push_str(&r.to_csv_row());
        text.push('\n');
    }
    Ok(Output { out: a.out, text })
}

fn cmd_fit(a: FitArgs) -> CliResult<Output> {
    let cfg = match &a.fit_config {
        Some(p) => FitConfig::parse(&read(p)?)?,
        None => FitConfig::default(),
    };
    let data = load_events(&a.events, a.warmup)?;
    let fit = fit_pair(&data.g0, &data.tail, &cfg)?;
    let trace = |t: &[f64]| t.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(" ");
    let mut text = String::new();
    text.push_str(&format!("spec_new={}\n", fit.specs.new_node));
    text.push_str(&format!("spec_internal={}\n", fit.specs.internal));
    for (name, r) in [("new_node", &fit.new_node), ("internal", &fit.internal)] {
        text.push_str(&format!(
            "# {name}: t={} c0={} aic={} grid_points={} degenerate={}\n",
            r.report.t, r.report.c0, r.report.aic, r.evaluated, r.degenerate
        ));
        text.push_str(&format!("# {name} em_trace: {}\n", trace(&r.trace)));
    }
    text.push_str(LikelihoodReport::CSV_HEADER);
    text.push('\n');
    text.push_str(&fit.report.to_csv_row());
    text.push('\n');
    Ok(Output { out: a.out, text })
}

fn cmd_grow(a: GrowArgs) -> CliResult<Output> {
    let specs = a.specs.pairs()?;
    let specs = match specs.as_slice() {
        [] => return Err(CliError::Usage("give --spec or --spec-new/--spec-int".into())),
        [one] => one.clone(),
        _ => return Err(CliError::Usage("grow takes a single spec pair".into())),
    };
    let observed = a.events.as_deref().map(|p| load_events(p, a.warmup)).transpose()?;
    let (prefix, g0) = match (&a.g0, &observed) {
        (Some(p), _) => {
            let f = EventFile::read(p)?;
            let g0 = crate::events::build_graph(&f.events)?;
            (f.events, g0)
        }
        (None, Some(o)) => (o.all[..o.warm].to_vec(), o.g0.clone()),
        (None, None) => return Err(CliError::Usage("grow needs --events or --g0".into())),
    };
    let Some(observed) = observed else {
        return Err(CliError::Usage("grow needs --events to drive the outer model".into()));
    };
    let outer = match a.outer {
        OuterArg::Replay => OuterModel::replay_from(&observed.tail),
        OuterArg::Empirical => empirical_outer_from(&observed.tail)?,
    };
    let target =
        a.target_edges.unwrap_or_else(|| crate::events::build_graph(&observed.all).map_or(0, |g| g.edge_count()));
    let result = grow_with(&g0, &outer, &specs, target, a.seed, GrowOptions { strict: a.strict })?;
    if result.skipped_internal > 0 {
        log::warn!("skipped {} internal edges on a complete graph", result.skipped_internal);
    }
    let mut events = prefix;
    let warm = events.len();
    events.extend(result.events);
    reindex(&mut events);
    let outer_name = match a.outer {
        OuterArg::Replay => "replay",
        OuterArg::Empirical => "empirical",
    };
    let header = vec![
        "netevo events v1".to_string(),
        format!("generated seed={} outer={outer_name} target_edges={target}", a.seed),
        format!("spec_new={}", specs.new_node),
        format!("spec_internal={}", specs.internal),
        format!("warmup_events={warm}"),
    ];
    Ok(Output { out: a.out, text: EventFile::new(header, events).to_text() })
}

fn cmd_stats(a: StatsArgs) -> CliResult<Output> {
    let data = load_events(&a.events, a.warmup)?;
    let final_edges: usize = data.g0.edge_count() + data.tail.iter().map(EdgeEvent::edges).sum::<usize>();
    let spec = a.checkpoints.trim();
    let checkpoints = if spec.contains(',') {
        spec.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.trim().parse::<usize>().map_err(|_| CliError::Usage(format!("bad checkpoint `{s}`"))))
            .collect::<CliResult<Vec<_>>>()?
    } else {
        let count: usize = spec.parse().map_err(|_| CliError::Usage(format!("bad checkpoint count `{spec}`")))?;
        if count == 0 {
            return Err(CliError::Usage("checkpoint count must be positive".into()));
        }
        even_checkpoints(data.g0.edge_count(), final_edges, count)
    };
    let rows = trajectory(&EvolvingGraph::with_root(), &data.all, &checkpoints)?;
    Ok(Output { out: a.out, text: trajectory_csv(&rows) })
}

fn cmd_compare(a: CompareArgs) -> CliResult<Output> {
    let labels: Vec<String> = match &a.labels {
        Some(l) => l.split(',').map(|s| s.trim().to_string()).collect(),
        None => a
            .trajectories
            .iter()
            .map(|p| p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned()))
            .collect(),
    };
    if labels.len() != a.trajectories.len() {
        return Err(CliError::Usage(format!("{} labels for {} files", labels.len(), a.trajectories.len())));
    }
    let mut sources = Vec::new();
    for (label, path) in labels.into_iter().zip(&a.trajectories) {
        sources.push((label, parse_trajectory_csv(&read(path)?)?));
    }
    Ok(Output { out: a.out, text: long_form(&sources) })
}
