//! `atlas-geo` command-line surface.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analytic::{make_atlas, oracle_distance, sample_manifold, sample_manifold_stream, AnalyticName};
use crate::error::{Error, Result};
use crate::geometry::{AmbientPoint, Atlas, LatentCoord};
use crate::graph::{build_graph, graph_stats, BuildConfig, EdgeKind};
use crate::io::{load_dataset, load_graph, save_graph, write_pgm, DataFormat, PathFile};
use crate::metric::{pullback_metric, DEFAULT_FD_STEP};
use crate::neural::load_neural_atlas;
use crate::search::{astar, chart_transitions, geodesic_between, resample_equidistant};

/// Environment variable capping graph-construction threads.
pub const THREADS_ENV: &str = "ATLAS_GEO_THREADS";

/// RNG stream for evaluation endpoints, distinct from the sampler's stream 0.
const EVAL_STREAM: u64 = 1;

#[derive(Debug, Parser)]
#[command(name = "atlas-geo", version, about = "Graph geodesics across the charts of atlas generative models")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the multi-chart latent graph and print its statistics.
    BuildGraph(BuildGraphArgs),
    /// Find a graph geodesic and resample it equidistantly.
    Interpolate(InterpolateArgs),
    /// Compare graph geodesic lengths on random pairs against the exact distance.
    Eval(EvalArgs),
    /// Chart assignment confidence max_y psi_y(x) per data point.
    Confidence(ConfidenceArgs),
    /// Print the pullback metric at a latent point.
    Metric(MetricArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Dataset file; analytic atlases sample their manifold when omitted.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Dataset format: csv, raw_f32 or idx.
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Debug, Args)]
struct BuildGraphArgs {
    /// `flat`, `circle`, `sphere` or `neural:<weights.json>`.
    #[arg(long)]
    atlas: String,
    #[command(flatten)]
    data: DataArgs,
    /// Number of data points sampled into the graph.
    #[arg(long = "n", default_value_t = 2000)]
    samples: usize,
    #[arg(long, default_value_t = 20)]
    k: usize,
    /// Chords per edge weight.
    #[arg(long, default_value_t = 15)]
    steps: usize,
    /// Chart membership threshold.
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct InterpolateArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    atlas: String,
    /// Start node id in the graph.
    #[arg(long, requires = "to_index", conflicts_with = "from_coords")]
    from_index: Option<usize>,
    #[arg(long, requires = "from_index")]
    to_index: Option<usize>,
    /// Start ambient point, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, requires = "to_coords")]
    from_coords: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, requires = "from_coords")]
    to_coords: Option<Vec<f64>>,
    /// Neighbours for query endpoints (defaults to the graph's k).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 10)]
    samples: usize,
    #[arg(long)]
    out: PathBuf,
    /// Directory receiving one PGM frame per sample.
    #[arg(long, requires = "frame_shape")]
    frames: Option<PathBuf>,
    /// Frame size as WIDTHxHEIGHT.
    #[arg(long)]
    frame_shape: Option<String>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    atlas: String,
    #[arg(long, default_value_t = 100)]
    pairs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    k: Option<usize>,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ConfidenceArgs {
    #[arg(long)]
    atlas: String,
    #[command(flatten)]
    data: DataArgs,
    /// Points to sample when no dataset is given.
    #[arg(long = "n", default_value_t = 2000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct MetricArgs {
    #[arg(long)]
    atlas: String,
    /// Chart number, starting from 1.
    #[arg(long)]
    chart: usize,
    /// Latent point, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    point: Vec<f64>,
    /// Finite-difference step.
    #[arg(long, default_value_t = DEFAULT_FD_STEP)]
    h: f64,
}

/// Resolves `flat`, `circle`, `sphere` or `neural:<path>`.
pub fn resolve_atlas(spec: &str) -> Result<Box<dyn Atlas>> {
    match spec.strip_prefix("neural:") {
        Some(path) if path.is_empty() => Err(Error::usage("neural atlas spec needs a path")),
        Some(path) => Ok(Box::new(load_neural_atlas(path)?)),
        None => Ok(make_atlas(spec.parse()?)),
    }
}

fn analytic_name(spec: &str) -> Option<AnalyticName> {
    spec.parse().ok()
}

fn dataset_points(args: &DataArgs, atlas: &dyn Atlas) -> Result<Option<Vec<AmbientPoint>>> {
    let Some(path) = &args.data else {
        return Ok(None);
    };
    let matrix = load_dataset(path, args.format.parse::<DataFormat>()?)?;
    let ambient = atlas.dims().ambient;
    if matrix.rows > 0 && matrix.dim != ambient {
        return Err(Error::usage(format!(
            "dataset rows have {} values, atlas ambient dimension is {ambient}",
            matrix.dim
        )));
    }
    Ok(Some(matrix.points()))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn chart_label(chart: usize) -> String {
    format!("y{}", chart + 1)
}

fn cmd_build_graph(args: BuildGraphArgs, out: &mut dyn Write) -> Result<()> {
    let atlas = resolve_atlas(&args.atlas)?;
    let data = match dataset_points(&args.data, atlas.as_ref())? {
        Some(points) => points,
        None => match analytic_name(&args.atlas) {
            Some(name) => sample_manifold(name, args.samples, args.seed)?,
            None => return Err(Error::usage("--data is required for neural atlases")),
        },
    };
    let cfg = BuildConfig {
        samples: args.samples,
        k: args.k,
        steps: args.steps,
        eps: args.eps,
        seed: args.seed,
        ..BuildConfig::default()
    };
    let graph = build_graph(atlas.as_ref(), &data, &cfg)?;
    save_graph(&graph, &args.out)?;
    let stats = graph_stats(&graph);
    let mut text = String::new();
    let _ = writeln!(text, "atlas: {}", graph.fingerprint());
    let _ = writeln!(text, "charts: {}", stats.chart_nodes.len());
    let _ = writeln!(
        text,
        "nodes / edges / diameter: {} / {} / {}",
        stats.nodes, stats.edges, stats.diameter
    );
    let _ = writeln!(text, "intra-chart edges: {}", stats.intra_chart_edges);
    let _ = writeln!(text, "cross-chart edges: {}", stats.cross_chart_edges);
    let _ = writeln!(text, "components: {} (largest {})", stats.components, stats.largest_component);
    let per_chart: Vec<String> = stats
        .chart_nodes
        .iter()
        .enumerate()
        .map(|(c, n)| format!("{}={n}", chart_label(c)))
        .collect();
    let _ = writeln!(text, "chart nodes: {}", per_chart.join(" "));
    for w in graph.warnings() {
        let _ = writeln!(text, "warning: {w}");
    }
    out.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e))
}

fn parse_shape(shape: &str) -> Result<(usize, usize)> {
    let parse = |s: &str| s.trim().parse::<usize>().ok().filter(|v| *v > 0);
    shape
        .split_once(['x', 'X'])
        .and_then(|(w, h)| Some((parse(w)?, parse(h)?)))
        .ok_or_else(|| Error::usage(format!("frame shape '{shape}' is not WIDTHxHEIGHT")))
}

fn cmd_interpolate(args: InterpolateArgs, out: &mut dyn Write) -> Result<()> {
    let atlas = resolve_atlas(&args.atlas)?;
    let graph = load_graph(&args.graph)?;
    graph.check_atlas(atlas.as_ref())?;
    let shape = args.frame_shape.as_deref().map(parse_shape).transpose()?;
    let k = args.k.unwrap_or(graph.config().k);
    let path = match (args.from_index, args.to_index, args.from_coords, args.to_coords) {
        (Some(a), Some(b), _, _) => astar(&graph, a, b)?,
        (_, _, Some(x0), Some(x1)) => geodesic_between(
            &graph,
            atlas.as_ref(),
            &AmbientPoint::new(x0)?,
            &AmbientPoint::new(x1)?,
            k,
        )?,
        _ => {
            return Err(Error::usage(
                "give either --from-index/--to-index or --from-coords/--to-coords",
            ))
        }
    };
    let samples = resample_equidistant(&path, atlas.as_ref(), args.samples)?;
    PathFile::new(&path, &samples).save(&args.out)?;

    if let Some(dir) = &args.frames {
        let (width, height) = shape.expect("clap requires --frame-shape with --frames");
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (j, s) in samples.iter().enumerate() {
            write_pgm(&s.ambient, width, height, dir.join(format!("frame_{j:03}.pgm")))?;
        }
    }

    let mut text = String::new();
    let _ = writeln!(text, "total length: {}", path.total_length);
    let _ = writeln!(text, "hops: {} (cross-chart: {})", path.hops(), path.cross_chart_segments());
    let labels: Vec<String> = samples.iter().map(|s| chart_label(s.coord.chart)).collect();
    let _ = writeln!(text, "sample charts: {}", labels.join(" "));
    for (j, from, to) in chart_transitions(&samples) {
        let _ = writeln!(
            text,
            "samples {j}-{}: {}/{}",
            j + 1,
            chart_label(from),
            chart_label(to)
        );
    }
    for (i, kind) in path.segment_kinds.iter().enumerate() {
        if *kind == EdgeKind::CrossChart {
            let (a, b) = (&path.nodes[i], &path.nodes[i + 1]);
            let _ = writeln!(
                text,
                "segment {i}: {}/{} jump {:.3e}",
                chart_label(a.chart),
                chart_label(b.chart),
                path.segment_lengths[i]
            );
        }
    }
    out.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e))
}

fn cmd_eval(args: EvalArgs, out: &mut dyn Write) -> Result<()> {
    let atlas = resolve_atlas(&args.atlas)?;
    let graph = load_graph(&args.graph)?;
    graph.check_atlas(atlas.as_ref())?;
    let k = args.k.unwrap_or(graph.config().k);
    let analytic = analytic_name(&args.atlas);
    let endpoints: Vec<(AmbientPoint, AmbientPoint)> = match dataset_points(&args.data, atlas.as_ref())? {
        Some(points) => {
            if points.len() < 2 {
                return Err(Error::usage("evaluation needs a dataset with at least 2 rows"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
            rng.set_stream(EVAL_STREAM);
            (0..args.pairs)
                .map(|_| {
                    let pick = index::sample(&mut rng, points.len(), 2);
                    (points[pick.index(0)].clone(), points[pick.index(1)].clone())
                })
                .collect()
        }
        None => {
            let name = analytic.ok_or_else(|| Error::usage("--data is required for neural atlases"))?;
            if args.pairs == 0 {
                Vec::new()
            } else {
                let pts = sample_manifold_stream(name, 2 * args.pairs, args.seed, EVAL_STREAM)?;
                pts.chunks(2).map(|c| (c[0].clone(), c[1].clone())).collect()
            }
        }
    };

    let mut csv = String::from("pair,oracle_distance,graph_length,hops,cross_chart_segments\n");
    let mut ratios = Vec::new();
    for (i, (x0, x1)) in endpoints.iter().enumerate() {
        let path = geodesic_between(&graph, atlas.as_ref(), x0, x1, k)?;
        let oracle = match analytic {
            Some(name) => {
                let d = oracle_distance(name, x0, x1)?;
                if d > 0.0 {
                    ratios.push(path.total_length / d);
                }
                d.to_string()
            }
            None => String::new(),
        };
        let _ = writeln!(
            csv,
            "{i},{oracle},{},{},{}",
            path.total_length,
            path.hops(),
            path.cross_chart_segments()
        );
    }
    write_file(&args.out, &csv)?;
    let mut text = format!("pairs: {}\n", endpoints.len());
    if !ratios.is_empty() {
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let _ = writeln!(text, "length / oracle: mean {mean:.4} max {max:.4}");
    }
    out.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e))
}

fn cmd_confidence(args: ConfidenceArgs, out: &mut dyn Write) -> Result<()> {
    let atlas = resolve_atlas(&args.atlas)?;
    let points = match dataset_points(&args.data, atlas.as_ref())? {
        Some(points) => points,
        None => match analytic_name(&args.atlas) {
            Some(name) => sample_manifold(name, args.samples, args.seed)?,
            None => return Err(Error::usage("--data is required for neural atlases")),
        },
    };
    let mut csv = String::from("index,confidence,chart\n");
    for (i, x) in points.iter().enumerate() {
        let w = atlas.partition(x)?;
        let best = w.argmax();
        let _ = writeln!(csv, "{i},{},{}", w.as_slice()[best], best + 1);
    }
    write_file(&args.out, &csv)?;
    writeln!(out, "points: {}", points.len()).map_err(|e| Error::io("<stdout>", e))
}

fn cmd_metric(args: MetricArgs, out: &mut dyn Write) -> Result<()> {
    let atlas = resolve_atlas(&args.atlas)?;
    let chart = args
        .chart
        .checked_sub(1)
        .ok_or_else(|| Error::usage("charts are numbered from 1"))?;
    let g = pullback_metric(atlas.as_ref(), &LatentCoord::new(chart, args.point), args.h)?;
    let mut text = String::new();
    for i in 0..g.dim() {
        let row: Vec<String> = (0..g.dim()).map(|j| format!("{:.12}", g.get(i, j))).collect();
        let _ = writeln!(text, "{}", row.join(" "));
    }
    out.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e))
}

/// Parses `argv` and runs the selected command, writing reports to `out`.
pub fn run<I, T>(argv: I, out: &mut dyn Write) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| Error::usage(e.to_string()))?;
    dispatch(cli, out)
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::BuildGraph(args) => cmd_build_graph(args, out),
        Command::Interpolate(args) => cmd_interpolate(args, out),
        Command::Eval(args) => cmd_eval(args, out),
        Command::Confidence(args) => cmd_confidence(args, out),
        Command::Metric(args) => cmd_metric(args, out),
    }
}

/// Entry point of the `atlas-geo` binary; returns the process exit code.
pub fn main() -> i32 {
    if let Some(threads) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        if threads > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
        }
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let mut stdout = std::io::stdout().lock();
    match dispatch(cli, &mut stdout) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("atlas-geo: {e}");
            e.exit_code()
        }
    }
}
