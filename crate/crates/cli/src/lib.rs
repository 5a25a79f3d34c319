//! Command-line front end for `uniadic-core`.
//!
//! Every command reads and writes the JSON documents in [`formats`], so
//! commands compose through files. [`run`] is the whole program minus
//! process exit; the binary is a thin wrapper around it.

pub mod dot;
pub mod formats;

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::thread;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use num_traits::Zero;
use uniadic_core::adic::{self, PathPrefix};
use uniadic_core::builders::{self, BuilderSpec};
use uniadic_core::coloring::{self, ColoredDefiniteness, Coloring};
use uniadic_core::graph::{GradedGraph, VertexRef};
use uniadic_core::measures::{self, CentralWeights, PathSampler, Weight, DEFAULT_FLOAT_TOLERANCE};
use uniadic_core::scheme::{self, SchemeKeys};
use uniadic_core::{trees, uniadic};

use formats::WeightsFile;

/// Package version followed by the version of the file formats.
pub const VERSION_TEXT: &str = concat!(env!("CARGO_PKG_VERSION"), " (format 1)");

#[derive(Parser, Debug)]
#[command(name = "uniadic", version = VERSION_TEXT, about = "Ordered graded graphs, adic paths and uniadic embeddings")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build an example graph (and optionally its canonical weights).
    Gen(GenArgs),
    /// Report structural problems of a graph file.
    Validate(InArgs),
    /// Emit the uniadic graph truncated to a depth.
    Ua(UaArgs),
    /// Refine a graph into the uniadic graph and write the embedding.
    Embed(EmbedArgs),
    /// Check an embedding file against its graph.
    Verify(VerifyArgs),
    /// Contract a graph to a list of levels.
    Telescope(TelescopeArgs),
    /// Merge vertices with equal ordered trees.
    Quotient(QuotientArgs),
    /// Print the ordered-tree key of every vertex.
    Trees(TreesArgs),
    /// Print the adic successor (or predecessor) of a path.
    Shift(ShiftArgs),
    /// Check that weights are central.
    Check(CheckArgs),
    /// Draw paths from the Markov measure of central weights.
    Sample(SampleArgs),
    /// Distribution of marked trees, exact or sampled.
    Scheme(SchemeArgs),
    /// Emit a vertex coloring.
    Color(ColorArgs),
    /// Check whether colored marked trees separate all paths of a length.
    CheckColored(CheckColoredArgs),
    /// Print the integer hierarchy read off a path.
    Hierarchy(HierarchyArgs),
    /// Export a graph in Graphviz format.
    Dot(DotArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Kind {
    Odometer,
    Pascal,
    DoubledOdometer,
    Random,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Dot,
}

#[derive(Args, Debug)]
struct InArgs {
    /// Graph file.
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
}

#[derive(Args, Debug)]
struct OutArgs {
    /// Output file; standard output when absent.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long)]
    depth: usize,
    /// Odometer base (number of parallel edges).
    #[arg(long, default_value_t = 2)]
    base: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    max_width: usize,
    #[arg(long, default_value_t = 2)]
    min_in_degree: usize,
    /// Bernoulli parameter for Pascal weights, as `p/q`.
    #[arg(long, default_value = "1/2")]
    p: String,
    /// Also write the canonical weights of the family here.
    #[arg(long, value_name = "FILE")]
    weights_out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct UaArgs {
    #[arg(long)]
    depth: usize,
    #[arg(long, value_enum, default_value_t = Format::Json, conflicts_with_all = ["dot", "json"])]
    format: Format,
    /// Shorthand for `--format dot`.
    #[arg(long)]
    dot: bool,
    /// Shorthand for `--format json`.
    #[arg(long, conflicts_with = "dot")]
    json: bool,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct EmbedArgs {
    #[command(flatten)]
    input: InArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    input: InArgs,
    #[arg(long, value_name = "FILE")]
    embedding: PathBuf,
}

#[derive(Args, Debug)]
struct TelescopeArgs {
    #[command(flatten)]
    input: InArgs,
    /// Kept levels, comma separated, starting at 0.
    #[arg(long, value_delimiter = ',', required = true)]
    levels: Vec<usize>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct QuotientArgs {
    #[command(flatten)]
    input: InArgs,
    /// Last level to include; the graph depth when absent.
    #[arg(long)]
    upto: Option<usize>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct TreesArgs {
    #[command(flatten)]
    input: InArgs,
    /// Only this level; all levels when absent.
    #[arg(long)]
    level: Option<usize>,
}

#[derive(Args, Debug)]
struct PathArgs {
    /// Ranks, comma separated (`0,1,1`); empty for the root.
    #[arg(long, allow_hyphen_values = true)]
    path: String,
    /// Index of the endpoint on the path's last level.
    #[arg(long, default_value_t = 0)]
    end: usize,
}

#[derive(Args, Debug)]
struct ShiftArgs {
    #[command(flatten)]
    input: InArgs,
    #[command(flatten)]
    path: PathArgs,
    /// Step backwards instead.
    #[arg(long)]
    inverse: bool,
}

#[derive(Args, Debug)]
struct WeightedArgs {
    #[command(flatten)]
    input: InArgs,
    #[arg(long, value_name = "FILE")]
    weights: PathBuf,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[command(flatten)]
    source: WeightedArgs,
    /// Largest accepted residual in float mode.
    #[arg(long, default_value_t = DEFAULT_FLOAT_TOLERANCE)]
    tolerance: f64,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[command(flatten)]
    source: WeightedArgs,
    #[arg(long)]
    depth: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Threads sharing the sample chunks; output does not depend on it.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Args, Debug)]
struct SchemeArgs {
    #[command(flatten)]
    source: WeightedArgs,
    #[arg(long)]
    depth: usize,
    /// Enumerate cylinders instead of sampling.
    #[arg(long, conflicts_with = "samples")]
    exact: bool,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Print the definiteness diagnostic instead of the distribution.
    #[arg(long, conflicts_with = "samples")]
    diagnostic: bool,
}

#[derive(Args, Debug)]
#[group(id = "method", required = true, multiple = false, args = ["canonical", "separating", "uniform"])]
struct ColorArgs {
    #[command(flatten)]
    input: InArgs,
    /// Every vertex its own color.
    #[arg(long)]
    canonical: bool,
    /// Colors from classes of initial segments of length `--cut`.
    #[arg(long, requires = "cut")]
    separating: bool,
    /// A single color.
    #[arg(long)]
    uniform: bool,
    #[arg(long)]
    cut: Option<usize>,
    /// Deepest colored level; the graph depth when absent.
    #[arg(long)]
    depth: Option<usize>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct CheckColoredArgs {
    #[command(flatten)]
    input: InArgs,
    #[arg(long, value_name = "FILE")]
    coloring: PathBuf,
    #[arg(long)]
    depth: usize,
}

#[derive(Args, Debug)]
struct HierarchyArgs {
    #[command(flatten)]
    input: InArgs,
    #[command(flatten)]
    path: PathArgs,
    /// Levels to report; the path length when absent.
    #[arg(long)]
    depth: Option<usize>,
}

#[derive(Args, Debug)]
struct DotArgs {
    #[command(flatten)]
    input: InArgs,
    #[command(flatten)]
    out: OutArgs,
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code: 0 on success, 1 for domain errors and failed checks,
/// 2 for usage errors.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { out } else { err };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            1
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_graph(path: &Path) -> Result<GradedGraph> {
    formats::graph_from_json(&read(path)?).with_context(|| format!("in {}", path.display()))
}

fn load_weights(path: &Path) -> Result<WeightsFile> {
    formats::weights_from_json(&read(path)?).with_context(|| format!("in {}", path.display()))
}

fn emit(out: &mut dyn Write, target: &OutArgs, text: &str) -> Result<()> {
    match &target.out {
        Some(path) => fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => Ok(out.write_all(text.as_bytes())?),
    }
}

fn render(graph: &GradedGraph, format: Format) -> String {
    match format {
        Format::Json => formats::graph_to_json(graph),
        Format::Dot => dot::to_dot(graph),
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Gen(a) => gen(a, out),
        Command::Validate(a) => validate(a, out),
        Command::Ua(a) => {
            let g = uniadic::ua_graph(a.depth)?;
            let format = if a.dot { Format::Dot } else { a.format };
            emit(out, &a.out, &render(&g, format))?;
            Ok(0)
        }
        Command::Embed(a) => {
            let g = load_graph(&a.input.input)?;
            let e = uniadic::embed(&g)?;
            emit(out, &a.out, &formats::embedding_to_json(&e))?;
            Ok(0)
        }
        Command::Verify(a) => {
            let g = load_graph(&a.input.input)?;
            let e = formats::embedding_from_json(&read(&a.embedding)?)?;
            let report = uniadic::verify_embedding(&g, &e);
            if report.passed() {
                writeln!(out, "embedding verified")?;
                return Ok(0);
            }
            for p in &report.problems {
                writeln!(out, "{p}")?;
            }
            Ok(1)
        }
        Command::Telescope(a) => {
            let g = load_graph(&a.input.input)?;
            emit(out, &a.out, &render(&g.telescope(&a.levels)?, a.format))?;
            Ok(0)
        }
        Command::Quotient(a) => {
            let g = load_graph(&a.input.input)?;
            let q = trees::minimal_quotient(&g, a.upto.unwrap_or(g.depth()))?;
            emit(out, &a.out, &formats::graph_to_json(&q.graph))?;
            Ok(0)
        }
        Command::Trees(a) => {
            let g = load_graph(&a.input.input)?;
            let top = a.level.unwrap_or(g.depth());
            let all = trees::vertex_trees(&g, top)?;
            let first = if a.level.is_some() { top } else { 0 };
            for (level, row) in all.iter().enumerate().skip(first) {
                for (index, t) in row.iter().enumerate() {
                    writeln!(out, "{} {}", VertexRef::new(level, index), t.encode())?;
                }
            }
            Ok(0)
        }
        Command::Shift(a) => {
            let g = load_graph(&a.input.input)?;
            let p = formats::parse_path(&a.path.path, a.path.end)?;
            let next = if a.inverse { adic::predecessor(&g, &p)? } else { adic::successor(&g, &p)? };
            match next {
                Some(q) => writeln!(out, "{q}")?,
                None => writeln!(out, "none")?,
            }
            Ok(0)
        }
        Command::Check(a) => check(a, out),
        Command::Sample(a) => sample(a, out),
        Command::Scheme(a) => scheme_command(a, out),
        Command::Color(a) => color(a, out),
        Command::CheckColored(a) => {
            let g = load_graph(&a.input.input)?;
            let c = formats::coloring_from_json(&read(&a.coloring)?)?;
            match coloring::colored_definiteness_check(&g, &c, a.depth)? {
                ColoredDefiniteness::Injective => {
                    writeln!(out, "injective at depth {}", a.depth)?;
                    Ok(0)
                }
                ColoredDefiniteness::Collision { first, second } => {
                    writeln!(
                        out,
                        "collision at depth {}: path {} to {} and path {} to {}",
                        a.depth,
                        first,
                        first.endpoint_ref(),
                        second,
                        second.endpoint_ref()
                    )?;
                    Ok(1)
                }
            }
        }
        Command::Hierarchy(a) => {
            let g = load_graph(&a.input.input)?;
            let p = formats::parse_path(&a.path.path, a.path.end)?;
            let h = scheme::hierarchy_of_path(&g, &p, a.depth.unwrap_or(p.len()))?;
            out.write_all(formats::hierarchy_to_json(&h).as_bytes())?;
            Ok(0)
        }
        Command::Dot(a) => {
            let g = load_graph(&a.input.input)?;
            emit(out, &a.out, &dot::to_dot(&g))?;
            Ok(0)
        }
    }
}

fn gen(a: GenArgs, out: &mut dyn Write) -> Result<i32> {
    let spec = match a.kind {
        Kind::Odometer => BuilderSpec::Odometer { base: a.base, depth: a.depth },
        Kind::Pascal => BuilderSpec::Pascal { depth: a.depth },
        Kind::DoubledOdometer => BuilderSpec::DoubledOdometer { depth: a.depth },
        Kind::Random => BuilderSpec::Random {
            seed: a.seed,
            max_width: a.max_width,
            min_in_degree: a.min_in_degree,
            depth: a.depth,
        },
    };
    let g = spec.build()?;
    if let Some(path) = &a.weights_out {
        let w = match spec {
            BuilderSpec::Pascal { depth } => {
                let (num, den) = parse_fraction(&a.p)?;
                builders::pascal_weights(depth, &builders::bernoulli(num, den)?)
            }
            _ => match spec.default_weights() {
                Some(w) => w,
                None => bail!("random graphs have no canonical weights"),
            },
        };
        fs::write(path, formats::rational_weights_to_json(&w))
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    emit(out, &a.out, &render(&g, a.format))?;
    Ok(0)
}

fn parse_fraction(text: &str) -> Result<(i64, i64)> {
    let (num, den) = text.split_once('/').unwrap_or((text, "1"));
    let parsed = (num.trim().parse(), den.trim().parse());
    match parsed {
        (Ok(n), Ok(d)) => Ok((n, d)),
        _ => bail!("invalid fraction {text:?}"),
    }
}

fn validate(a: InArgs, out: &mut dyn Write) -> Result<i32> {
    let g = formats::graph_from_json_unchecked(&read(&a.input)?)?;
    let problems = g.validate();
    if problems.is_empty() {
        writeln!(out, "valid: {} levels, sizes {:?}", g.num_levels(), g.level_sizes())?;
        return Ok(0);
    }
    for p in problems {
        writeln!(out, "{p}")?;
    }
    Ok(1)
}

fn check(a: CheckArgs, out: &mut dyn Write) -> Result<i32> {
    let g = load_graph(&a.source.input.input)?;
    let w = load_weights(&a.source.weights)?;
    let passed = match w {
        WeightsFile::Rational(w) => report_central(&g, &w, &BigRational::zero(), out)?,
        WeightsFile::Float(w) => report_central(&g, &w, &a.tolerance, out)?,
    };
    Ok(if passed { 0 } else { 1 })
}

fn report_central<W: Weight + std::fmt::Display>(
    g: &GradedGraph,
    w: &CentralWeights<W>,
    tol: &W,
    out: &mut dyn Write,
) -> Result<bool> {
    let g = g.truncated(w.levels.len());
    let report = measures::check_central(&g, w, tol)?;
    writeln!(out, "root residual {}", report.root_residual)?;
    for (n, l) in report.levels.iter().enumerate() {
        writeln!(out, "level {n}: harmonic {} normalization {}", l.harmonic, l.normalization)?;
    }
    writeln!(out, "{}", if report.passed { "central" } else { "not central" })?;
    Ok(report.passed)
}

/// Runs `job` on every chunk index, spread over `workers` threads, and
/// returns the results in chunk order.
fn sharded<T: Send>(
    chunks: usize,
    workers: usize,
    job: impl Fn(usize) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    let workers = workers.clamp(1, chunks.max(1));
    let mut slots: Vec<Option<T>> = (0..chunks).map(|_| None).collect();
    thread::scope(|scope| -> Result<()> {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let job = &job;
                scope.spawn(move || -> Result<Vec<(usize, T)>> {
                    (w..chunks).step_by(workers).map(|c| Ok((c, job(c)?))).collect()
                })
            })
            .collect();
        for h in handles {
            for (c, value) in h.join().expect("worker panicked")? {
                slots[c] = Some(value);
            }
        }
        Ok(())
    })?;
    Ok(slots.into_iter().map(|s| s.expect("every chunk ran")).collect())
}

fn sample_chunks(
    sampler: &PathSampler<'_>,
    seed: u64,
    count: usize,
    workers: usize,
) -> Result<Vec<Vec<PathPrefix>>> {
    let sizes: Vec<usize> = measures::chunk_sizes(count).collect();
    sharded(sizes.len(), workers, |c| Ok(sampler.sample_chunk(seed, c as u64, sizes[c])?))
}

fn sample(a: SampleArgs, out: &mut dyn Write) -> Result<i32> {
    let g = load_graph(&a.source.input.input)?;
    let chunks = match load_weights(&a.source.weights)? {
        WeightsFile::Rational(w) => sample_chunks(&PathSampler::new(&g, &w, a.depth)?, a.seed, a.count, a.workers)?,
        WeightsFile::Float(w) => sample_chunks(&PathSampler::new(&g, &w, a.depth)?, a.seed, a.count, a.workers)?,
    };
    let mut text = String::new();
    for p in chunks.iter().flatten() {
        text.push_str(&format!("{} {}\n", p.endpoint_ref(), p));
    }
    out.write_all(text.as_bytes())?;
    Ok(0)
}

fn scheme_command(a: SchemeArgs, out: &mut dyn Write) -> Result<i32> {
    let g = load_graph(&a.source.input.input)?;
    let w = load_weights(&a.source.weights)?;
    if a.diagnostic {
        let lines = match &w {
            WeightsFile::Rational(w) => diagnostic_lines(&g, w, a.depth)?,
            WeightsFile::Float(w) => diagnostic_lines(&g, w, a.depth)?,
        };
        out.write_all(lines.as_bytes())?;
        return Ok(0);
    }
    if a.exact {
        let text = match &w {
            WeightsFile::Rational(w) => formats::exact_scheme_to_json(&scheme::exact_scheme(&g, w, a.depth)?),
            WeightsFile::Float(w) => {
                formats::float_scheme_to_json(&scheme::exact_scheme(&g, w, a.depth)?, "exact", None, None)
            }
        };
        out.write_all(text.as_bytes())?;
        return Ok(0);
    }
    let Some(samples) = a.samples else {
        bail!("either --exact or --samples N is required");
    };
    if samples == 0 {
        bail!("--samples must be positive");
    }
    let keys = SchemeKeys::new(&g, a.depth)?;
    let counts = match &w {
        WeightsFile::Rational(w) => sampled_counts(&g, &PathSampler::new(&g, w, a.depth)?, &keys, a.seed, samples, a.workers)?,
        WeightsFile::Float(w) => sampled_counts(&g, &PathSampler::new(&g, w, a.depth)?, &keys, a.seed, samples, a.workers)?,
    };
    let d = scheme::counts_to_distribution(a.depth, &counts);
    out.write_all(formats::float_scheme_to_json(&d, "empirical", Some(samples), Some(a.seed)).as_bytes())?;
    Ok(0)
}

fn sampled_counts(
    g: &GradedGraph,
    sampler: &PathSampler<'_>,
    keys: &SchemeKeys,
    seed: u64,
    samples: usize,
    workers: usize,
) -> Result<BTreeMap<String, u64>> {
    let sizes: Vec<usize> = measures::chunk_sizes(samples).collect();
    let per_chunk = sharded(sizes.len(), workers, |c| {
        let paths = sampler.sample_chunk(seed, c as u64, sizes[c])?;
        Ok(scheme::count_keys(g, keys, &paths)?)
    })?;
    let mut total = BTreeMap::new();
    for counts in per_chunk {
        scheme::merge_counts(&mut total, counts);
    }
    Ok(total)
}

fn diagnostic_lines<W: Weight + std::fmt::Display>(
    g: &GradedGraph,
    w: &CentralWeights<W>,
    depth: usize,
) -> Result<String> {
    let r = scheme::definiteness_diagnostic(g, w, depth)?;
    Ok(format!(
        "depth {}\ndistinct keys {}\ncylinders {}\nresolution {}\nkey collision {}\ncylinder collision {}\n",
        r.depth,
        r.distinct_keys,
        r.cylinders,
        r.resolution(),
        r.key_collision,
        r.cylinder_collision
    ))
}

fn color(a: ColorArgs, out: &mut dyn Write) -> Result<i32> {
    let g = load_graph(&a.input.input)?;
    let depth = a.depth.unwrap_or(g.depth());
    if depth > g.depth() {
        bail!("depth {depth} exceeds the graph depth {}", g.depth());
    }
    let c: Coloring = if a.separating {
        coloring::separating_coloring(&g, depth, a.cut.expect("clap requires --cut"))?
    } else {
        let t = g.truncated(depth + 1);
        if a.canonical {
            coloring::canonical_coloring(&t)
        } else {
            coloring::uniform_coloring(&t)
        }
    };
    emit(out, &a.out, &formats::coloring_to_json(&c))?;
    Ok(0)
}
