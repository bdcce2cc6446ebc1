//! Command line front end: exact rank computations, cover validation and
//! enumeration, Hurwitz numbers, and certified Weierstrass point counts.
//!
//! Every command emits machine-readable JSON (or a bare JSON scalar) on
//! stdout, or into `--out`; `--pretty` switches to indented output and, for
//! the weight report, a text table.  Identical inputs and seed produce
//! byte-identical output.  Exit codes: 0 on success, 1 on a module error,
//! 2 on a usage error.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use tropweier::divisors::{
    is_weierstrass, metric_from_lengths, rank, MetricGraph, Point, DEFAULT_SUBDIVISION_BUDGET,
};
use tropweier::enumeration::{enumerate_all_capped, EnumerationMode, DEFAULT_GENUS_CAP};
use tropweier::error::Error;
use tropweier::graphs::trees::{double_factorial_count, labelled_trivalent_trees, tree_shapes};
use tropweier::graphs::{families, DiscreteGraph, Flag};
use tropweier::hurwitz::{hurwitz_genus0, standard_weight, Partition};
use tropweier::json::{
    cover_from_json, divisor_from_json, enumeration_to_json, graph_to_json, metric_from_json,
    metric_to_json, render, report_to_json,
};
use tropweier::rational::{fmt_rat, parse_rat, rat_uint, Rat};
use tropweier::weierstrass::{count_gwp_with, generic_lengths, GwpReport};
use tropweier::{Cover, Result};

#[derive(Parser)]
#[command(
    name = "tropweier",
    version,
    about = "Exact divisor ranks, admissible covers, and Weierstrass point counts on metric graphs"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Indent JSON output (and render tables as text where available).
    #[arg(long, global = true)]
    pretty: bool,
    /// Write the payload to this file instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Enumerate trivalent trees with marked legs.
    Trees(TreesArgs),
    /// Baker-Norine rank of a divisor on a metric graph.
    Rank(RankArgs),
    /// Test whether a point of a metric graph is a Weierstrass point.
    Weierstrass(WeierstrassArgs),
    /// Genus-zero Hurwitz numbers and cover weight reports.
    Hurwitz(HurwitzArgs),
    /// Validate or enumerate discrete admissible covers.
    #[command(subcommand)]
    Covers(CoversCmd),
    /// Geometric Weierstrass points.
    #[command(subcommand)]
    Gwp(GwpCmd),
    /// Emit graphs and covers as JSON or DOT.
    Export(ExportArgs),
}

#[derive(Args)]
struct TreesArgs {
    /// Number of marked legs.
    #[arg(long)]
    legs: u32,
    /// Collapse legs 2..m to shape classes and record orbit sizes.
    #[arg(long)]
    shapes: bool,
}

#[derive(Args)]
struct RankArgs {
    /// Metric graph document (graph JSON with "lengths").
    #[arg(long, value_name = "FILE")]
    graph: PathBuf,
    /// Divisor document.
    #[arg(long, value_name = "FILE")]
    divisor: PathBuf,
    /// Subdivision vertex budget for the exact computation.
    #[arg(long, default_value_t = DEFAULT_SUBDIVISION_BUDGET)]
    budget: u64,
}

#[derive(Args)]
struct WeierstrassArgs {
    /// Metric graph document (graph JSON with "lengths").
    #[arg(long, value_name = "FILE")]
    graph: PathBuf,
    /// A vertex id, or "edgeId:offset" with a rational offset (e.g. "2:3/2").
    #[arg(long)]
    point: String,
    /// Subdivision vertex budget for the exact computation.
    #[arg(long, default_value_t = DEFAULT_SUBDIVISION_BUDGET)]
    budget: u64,
}

#[derive(Args)]
struct HurwitzArgs {
    /// Degree of the covers.
    #[arg(long, conflicts_with = "cover")]
    d: Option<u64>,
    /// Ramification profiles, e.g. "(2,1,1);(2,1,1);(4)".
    #[arg(long, requires = "d")]
    profiles: Option<String>,
    /// Print the weight report of this cover document instead.
    #[arg(long, value_name = "FILE")]
    cover: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CoversCmd {
    /// Validate a cover document and print its degree, the local
    /// Riemann-Hurwitz table, and both edge-length matrices.
    Validate {
        #[arg(long, value_name = "FILE")]
        cover: PathBuf,
    },
    /// Enumerate all covers with the Weierstrass profile for a genus.
    Enumerate {
        #[arg(long)]
        genus: u64,
        #[arg(long, value_enum, default_value_t = Mode::Quotient)]
        mode: Mode,
        /// Raise the built-in genus cap.
        #[arg(long, default_value_t = DEFAULT_GENUS_CAP)]
        cap: u64,
    },
}

#[derive(Subcommand)]
enum GwpCmd {
    /// Count the geometric Weierstrass points of a metric graph and
    /// certify the total g³ − g.
    Count(GwpCountArgs),
}

#[derive(Args)]
struct GwpCountArgs {
    /// Metric graph document; "lengths" may be omitted when --lengths or
    /// --seed supplies them.
    #[arg(long, value_name = "FILE", conflicts_with = "family")]
    graph: Option<PathBuf>,
    /// Built-in model family.
    #[arg(long, value_enum, requires = "genus")]
    family: Option<Family>,
    /// Genus of the built-in model.
    #[arg(long)]
    genus: Option<u64>,
    /// Comma-separated rational edge lengths in canonical edge order.
    #[arg(long)]
    lengths: Option<String>,
    /// Draw generic lengths from this seed instead.
    #[arg(long, conflicts_with = "lengths")]
    seed: Option<u64>,
    /// Cross-check every reported point with the exact rank test.
    #[arg(long)]
    verify_rank: bool,
    /// Subdivision vertex budget for the rank cross-check.
    #[arg(long, default_value_t = DEFAULT_SUBDIVISION_BUDGET)]
    budget: u64,
    /// Also write a DOT rendering of the graph with the reported points
    /// annotated by multiplicity.
    #[arg(long, value_name = "FILE")]
    dot: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    /// Built-in family to emit.
    #[arg(long, value_enum, requires = "genus", conflicts_with_all = ["graph", "cover"])]
    family: Option<Family>,
    /// Genus parameter of the family.
    #[arg(long)]
    genus: Option<u64>,
    /// Graph (or metric graph) document to re-emit.
    #[arg(long, value_name = "FILE", conflicts_with = "cover")]
    graph: Option<PathBuf>,
    /// Cover document to re-emit.
    #[arg(long, value_name = "FILE")]
    cover: Option<PathBuf>,
    /// Attach these comma-separated rational edge lengths.
    #[arg(long)]
    lengths: Option<String>,
    /// Attach generic lengths drawn from this seed.
    #[arg(long, conflicts_with = "lengths")]
    seed: Option<u64>,
    /// Write DOT instead of JSON.  For covers, writes `FILE.source` and
    /// `FILE.target`.
    #[arg(long, value_name = "FILE")]
    dot: Option<PathBuf>,
}

#[derive(Copy, Clone, ValueEnum)]
enum Mode {
    Labelled,
    Quotient,
}

impl From<Mode> for EnumerationMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Labelled => EnumerationMode::FullyLabelled,
            Mode::Quotient => EnumerationMode::Quotient,
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum Family {
    /// The garland of g loops (the dumbbell at genus 2).
    #[value(name = "O", alias = "o")]
    O,
    /// The trivalent tree with 3g marked legs.
    #[value(name = "T", alias = "t")]
    T,
    /// The theta graph (genus 2 only).
    Theta,
}

fn usage(msg: impl Into<String>) -> Error {
    Error::UsageError(msg.into())
}

fn read_value(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{} is not JSON: {e}", path.display())))
}

fn parse_lengths(s: &str) -> Result<Vec<Rat>> {
    s.split(',')
        .map(|t| parse_rat(t.trim()))
        .collect::<Result<Vec<_>>>()
}

fn parse_profiles(s: &str) -> Result<Vec<Partition>> {
    let mut out = Vec::new();
    for part in s.split(';') {
        let inner = part
            .trim()
            .strip_prefix('(')
            .and_then(|p| p.strip_suffix(')'))
            .ok_or_else(|| usage(format!("profile {part:?} must look like (2,1,1)")))?;
        let mut parts = Vec::new();
        for n in inner.split(',') {
            parts.push(
                n.trim()
                    .parse::<u64>()
                    .map_err(|_| usage(format!("bad partition part {n:?}")))?,
            );
        }
        parts.sort_unstable_by(|a, b| b.cmp(a));
        out.push(parts);
    }
    Ok(out)
}

fn parse_point(g: &DiscreteGraph, s: &str) -> Result<Point> {
    let index: BTreeMap<u64, Flag> = g
        .ext_ids()
        .iter()
        .enumerate()
        .map(|(f, &id)| (id, f))
        .collect();
    if let Some((edge, offset)) = s.split_once(':') {
        let id = edge
            .trim()
            .parse::<u64>()
            .map_err(|_| usage(format!("bad edge id {edge:?}")))?;
        let &f = index
            .get(&id)
            .ok_or_else(|| usage(format!("unknown flag id {id}")))?;
        return Ok(Point::Interior {
            edge: g.edge_of(f).0,
            offset: parse_rat(offset.trim())?,
        });
    }
    let id = s
        .trim()
        .parse::<u64>()
        .map_err(|_| usage(format!("point {s:?} is neither a vertex id nor edge:offset")))?;
    let &f = index
        .get(&id)
        .ok_or_else(|| usage(format!("unknown flag id {id}")))?;
    Ok(Point::Vertex(f))
}

/// Deterministic fallback lengths: pairwise-distinct odd primes.
fn odd_prime_lengths(n: usize) -> Vec<Rat> {
    let mut out = Vec::with_capacity(n);
    let mut c = 3u64;
    while out.len() < n {
        if (3..c).step_by(2).all(|p| p * p > c || c % p != 0) {
            out.push(rat_uint(c));
        }
        c += 2;
    }
    out
}

fn family_graph(family: Family, genus: u64) -> Result<DiscreteGraph> {
    match family {
        Family::O => families::loop_garland(genus),
        Family::T => families::garland_tree(genus),
        Family::Theta => {
            if genus != 2 {
                return Err(usage("the theta graph has genus 2"));
            }
            Ok(families::theta())
        }
    }
}

/// DOT rendering per the documented convention: vertices as nodes, edges as
/// undirected edges labelled with identifiers (and lengths when metric),
/// legs as half-edges into point-shaped anonymous nodes with marking and
/// weight labels.  Annotated points become diamond nodes, splicing their
/// edge when interior.
fn graph_dot(
    g: &DiscreteGraph,
    lengths: Option<&BTreeMap<Flag, Rat>>,
    annotations: &[(Point, u64)],
) -> String {
    let ids = g.ext_ids();
    let mut s = String::from("graph {\n");
    let mut vertex_note: BTreeMap<Flag, u64> = BTreeMap::new();
    let mut edge_note: BTreeMap<Flag, (Rat, u64)> = BTreeMap::new();
    for (p, m) in annotations {
        match p {
            Point::Vertex(v) => {
                vertex_note.insert(*v, *m);
            }
            Point::Interior { edge, offset } => {
                edge_note.insert(*edge, (offset.clone(), *m));
            }
        }
    }
    for &v in g.vertices() {
        let mut label = format!("{}", ids[v]);
        if let Some(m) = vertex_note.get(&v) {
            label.push_str(&format!("\\nmult {m}"));
        }
        s.push_str(&format!("  v{} [label=\"{label}\"];\n", ids[v]));
    }
    for &(a, b) in g.edges() {
        let mut label = format!("e{}", ids[a]);
        if let Some(lens) = lengths {
            label.push_str(&format!(" ({})", fmt_rat(&lens[&a])));
        }
        let (u, w) = (ids[g.root(a)], ids[g.root(b)]);
        if let Some((offset, m)) = edge_note.get(&a) {
            s.push_str(&format!(
                "  p{} [shape=diamond, label=\"mult {m} at {}\"];\n",
                ids[a],
                fmt_rat(offset)
            ));
            s.push_str(&format!("  v{u} -- p{} [label=\"{label}\"];\n", ids[a]));
            s.push_str(&format!("  p{} -- v{w};\n", ids[a]));
        } else {
            s.push_str(&format!("  v{u} -- v{w} [label=\"{label}\"];\n"));
        }
    }
    for &l in g.legs() {
        let mut label = format!("l{}", ids[l]);
        if let Some(i) = g.marking_of(l) {
            label.push_str(&format!(" m{i}"));
        }
        if !g.leg_weights().is_empty() {
            label.push_str(&format!(" w{}", g.leg_weight(l)));
        }
        s.push_str(&format!("  h{} [shape=point, label=\"\"];\n", ids[l]));
        s.push_str(&format!(
            "  v{} -- h{} [label=\"{label}\", style=dashed];\n",
            ids[g.root(l)],
            ids[l]
        ));
    }
    s.push_str("}\n");
    s
}

fn weight_report_table(pi: &Cover) -> Result<String> {
    let r = standard_weight(pi)?;
    let mut s = String::new();
    s.push_str(&format!("weight          {}\n", fmt_rat(&r.weight)));
    s.push_str(&format!("edge product    {}\n", r.edge_product));
    s.push_str(&format!("lcm denominator {}\n", r.lcm_denominator));
    s.push_str("vertex  hurwitz  cf\n");
    for (v, h, cf) in &r.per_vertex {
        s.push_str(&format!(
            "{:<7} {:<8} {}\n",
            pi.source().ext_ids()[*v],
            fmt_rat(h),
            cf
        ));
    }
    Ok(s)
}

fn weight_report_json(pi: &Cover) -> Result<Value> {
    let r = standard_weight(pi)?;
    Ok(json!({
        "weight": fmt_rat(&r.weight),
        "perVertex": r
            .per_vertex
            .iter()
            .map(|(v, h, cf)| json!({
                "vertex": pi.source().ext_ids()[*v],
                "hurwitz": fmt_rat(h),
                "cf": cf,
            }))
            .collect::<Vec<_>>(),
        "edgeProduct": r.edge_product,
        "lcmDenominator": r.lcm_denominator,
    }))
}

fn matrix_json(m: &[Vec<Rat>]) -> Value {
    Value::Array(
        m.iter()
            .map(|row| Value::Array(row.iter().map(|x| Value::String(fmt_rat(x))).collect()))
            .collect(),
    )
}

fn gwp_metric(args: &GwpCountArgs) -> Result<(MetricGraph, Option<u64>)> {
    let (graph, stored): (DiscreteGraph, Option<BTreeMap<Flag, Rat>>) = match (&args.graph, args.family) {
        (Some(path), None) => {
            let doc = read_value(path)?;
            match metric_from_json(&doc) {
                Ok(mg) => {
                    let lens = mg.lengths().clone();
                    (mg.graph().clone(), Some(lens))
                }
                Err(_) => (tropweier::json::graph_from_json(&doc)?, None),
            }
        }
        (None, Some(family)) => {
            let genus = args.genus.ok_or_else(|| usage("--family needs --genus"))?;
            (family_graph(family, genus)?, None)
        }
        _ => return Err(usage("supply exactly one of --graph or --family")),
    };
    let n = graph.edges().len();
    let (lens, seed) = if let Some(spec) = &args.lengths {
        (parse_lengths(spec)?, None)
    } else if let Some(seed) = args.seed {
        (generic_lengths(n, seed), Some(seed))
    } else if let Some(stored) = stored {
        let lens = graph.edges().iter().map(|&(a, _)| stored[&a].clone()).collect();
        (lens, None)
    } else {
        (odd_prime_lengths(n), None)
    };
    Ok((metric_from_lengths(graph, &lens)?, seed))
}

fn gwp_payload(args: &GwpCountArgs, pretty: bool) -> Result<(String, Option<(MetricGraph, GwpReport)>)> {
    let (gamma, seed) = gwp_metric(args)?;
    let budget = args.verify_rank.then_some(args.budget);
    let report = count_gwp_with(&gamma, budget)?;
    let mut doc = report_to_json(&gamma, &report);
    doc.as_object_mut().expect("report is an object").insert(
        "config".into(),
        json!({
            "seed": seed,
            "subdivisionBudget": budget,
            "workers": std::env::var("TW_WORKERS").ok().and_then(|w| w.parse::<u64>().ok()),
        }),
    );
    Ok((render(&doc, pretty), Some((gamma, report))))
}

fn run(cli: &Cli) -> Result<String> {
    match &cli.cmd {
        Cmd::Trees(a) => {
            let doc = if a.shapes {
                let shapes = tree_shapes(a.legs)?;
                json!({
                    "legs": a.legs,
                    "count": shapes.len(),
                    "labelledCount": double_factorial_count(a.legs),
                    "shapes": shapes
                        .iter()
                        .map(|s| json!({"tree": graph_to_json(&s.tree), "orbit": s.orbit}))
                        .collect::<Vec<_>>(),
                })
            } else {
                let trees = labelled_trivalent_trees(a.legs)?;
                json!({
                    "legs": a.legs,
                    "count": trees.len(),
                    "trees": trees.iter().map(graph_to_json).collect::<Vec<_>>(),
                })
            };
            Ok(render(&doc, cli.pretty))
        }
        Cmd::Rank(a) => {
            let gamma = metric_from_json(&read_value(&a.graph)?)?;
            let d = divisor_from_json(gamma.graph(), &read_value(&a.divisor)?)?;
            let r = rank(&gamma, &d, a.budget)?;
            Ok(format!("{r}\n"))
        }
        Cmd::Weierstrass(a) => {
            let gamma = metric_from_json(&read_value(&a.graph)?)?;
            let p = parse_point(gamma.graph(), &a.point)?;
            let w = is_weierstrass(&gamma, &p, a.budget)?;
            Ok(format!("{w}\n"))
        }
        Cmd::Hurwitz(a) => match (&a.cover, a.d, &a.profiles) {
            (Some(path), None, None) => {
                let pi = cover_from_json(&read_value(path)?)?;
                if cli.pretty {
                    weight_report_table(&pi)
                } else {
                    Ok(render(&weight_report_json(&pi)?, false))
                }
            }
            (None, Some(d), Some(profiles)) => {
                let h = hurwitz_genus0(d, &parse_profiles(profiles)?)?;
                Ok(format!("{}\n", fmt_rat(&h)))
            }
            _ => Err(usage("supply either --cover, or --d with --profiles")),
        },
        Cmd::Covers(CoversCmd::Validate { cover }) => {
            let pi = cover_from_json(&read_value(cover)?)?;
            let rh = pi.rh_identity();
            let doc = json!({
                "degree": pi.deg(),
                "rh": {
                    "sourceEuler": rh.source_euler,
                    "targetEuler": rh.target_euler,
                    "expectedSourceEuler": rh.expected_source_euler,
                    "localDefects": rh
                        .local_defects
                        .iter()
                        .map(|(v, d)| (pi.source().ext_ids()[*v].to_string(), json!(d)))
                        .collect::<serde_json::Map<_, _>>(),
                    "holds": rh.holds,
                },
                "lengthMatrixHarmonic": matrix_json(
                    &pi.length_matrix(tropweier::MetricConvention::Harmonic),
                ),
                "lengthMatrixRescaled": matrix_json(
                    &pi.length_matrix(tropweier::MetricConvention::Rescaled),
                ),
            });
            Ok(render(&doc, cli.pretty))
        }
        Cmd::Covers(CoversCmd::Enumerate { genus, mode, cap }) => {
            let entries = enumerate_all_capped(*genus, (*mode).into(), *cap)?;
            let doc = json!({
                "genus": genus,
                "mode": match mode { Mode::Labelled => "labelled", Mode::Quotient => "quotient" },
                "count": entries.len(),
                "covers": enumeration_to_json(&entries),
            });
            Ok(render(&doc, cli.pretty))
        }
        Cmd::Gwp(GwpCmd::Count(a)) => {
            let (payload, extra) = gwp_payload(a, cli.pretty)?;
            if let Some(dot_path) = &a.dot {
                let (gamma, report) = extra.expect("report accompanies payload");
                let notes: Vec<(Point, u64)> = report
                    .point_table
                    .iter()
                    .map(|(p, m)| (p.clone(), *m))
                    .collect();
                let dot = graph_dot(gamma.graph(), Some(gamma.lengths()), &notes);
                std::fs::write(dot_path, dot)
                    .map_err(|e| usage(format!("cannot write {}: {e}", dot_path.display())))?;
            }
            Ok(payload)
        }
        Cmd::Export(a) => {
            if let Some(path) = &a.cover {
                let pi = cover_from_json(&read_value(path)?)?;
                if let Some(dot) = &a.dot {
                    let src = graph_dot(pi.source(), None, &[]);
                    let tgt = graph_dot(pi.target(), None, &[]);
                    let write = |suffix: &str, text: &str| {
                        let p = dot.with_extension(suffix);
                        std::fs::write(&p, text)
                            .map_err(|e| usage(format!("cannot write {}: {e}", p.display())))
                    };
                    write("source.dot", &src)?;
                    write("target.dot", &tgt)?;
                    return Ok(String::new());
                }
                return Ok(render(&tropweier::json::cover_to_json(&pi), cli.pretty));
            }
            let graph = if let Some(path) = &a.graph {
                let doc = read_value(path)?;
                match metric_from_json(&doc) {
                    Ok(mg) => {
                        if let Some(dot) = &a.dot {
                            let text = graph_dot(mg.graph(), Some(mg.lengths()), &[]);
                            std::fs::write(dot, text).map_err(|e| {
                                usage(format!("cannot write {}: {e}", dot.display()))
                            })?;
                            return Ok(String::new());
                        }
                        return Ok(render(&metric_to_json(&mg), cli.pretty));
                    }
                    Err(_) => tropweier::json::graph_from_json(&doc)?,
                }
            } else if let Some(family) = a.family {
                let genus = a.genus.ok_or_else(|| usage("--family needs --genus"))?;
                family_graph(family, genus)?
            } else {
                return Err(usage("supply one of --family, --graph, or --cover"));
            };
            let lens = if let Some(spec) = &a.lengths {
                Some(parse_lengths(spec)?)
            } else {
                a.seed.map(|s| generic_lengths(graph.edges().len(), s))
            };
            if let Some(dot) = &a.dot {
                let metric_lens = match &lens {
                    Some(l) => Some(
                        graph
                            .edges()
                            .iter()
                            .zip(l)
                            .map(|(&(x, _), r)| (x, r.clone()))
                            .collect::<BTreeMap<_, _>>(),
                    ),
                    None => None,
                };
                let text = graph_dot(&graph, metric_lens.as_ref(), &[]);
                std::fs::write(dot, text)
                    .map_err(|e| usage(format!("cannot write {}: {e}", dot.display())))?;
                return Ok(String::new());
            }
            let doc = match lens {
                Some(l) => metric_to_json(&metric_from_lengths(graph, &l)?),
                None => graph_to_json(&graph),
            };
            Ok(render(&doc, cli.pretty))
        }
    }
}

fn main() -> ExitCode {
    if let Ok(w) = std::env::var("TW_WORKERS") {
        if let Ok(n) = w.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    match run(&cli) {
        Ok(payload) => {
            if let Some(path) = &cli.out {
                if let Err(e) = std::fs::write(path, &payload) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            } else {
                print!("{payload}");
            }
            ExitCode::SUCCESS
        }
        Err(Error::UsageError(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
