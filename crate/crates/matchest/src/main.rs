use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;

use matchest::acceptance::{run_acceptance, AcceptanceOptions, Fault};
use matchest::divergence::{exact_coupling, stream_coupling_experiment, CouplingSpec, PrefixMode, Reference};
use matchest::estimator::{alg_iid, permutation_peeling, EstimatorConfig, DEFAULT_BETA};
use matchest::graph::save_graph;
use matchest::greedy::{depth_tail, scaling_exponent, second_moment, simulate_root, tree_size_summary, RootSpec};
use matchest::hard::group::default_catalog;
use matchest::hard::{
    build_distributions, build_pair, distinguishability_experiment, find_high_girth_generators, lift_with_girth,
    verify_indistinguishable,
};
use matchest::harness::{in_pool, run_trials, write_outputs, ConfigFile, ReportFormat, RunReport};
use matchest::lca::{oracle_all_edges, oracle_edge, oracle_vertex, OracleConfig};
use matchest::matching::exact_mm;
use matchest::peeling::{alg_global, PeelingConfig};
use matchest::prf::prf_u64;
use matchest::stats::median;
use matchest::stream::EdgeStream;
use matchest::{load_graph, Graph};

#[derive(Parser)]
#[command(name = "matchest", version, about = "Maximum matching size estimation workbench")]
struct Cli {
    /// Master seed for every random choice.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 uses one per core.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for report files.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Smaller trial counts.
    #[arg(long, global = true)]
    quick: bool,
    /// TOML file with defaults; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<ReportFormat>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Offline peeling: fractional matching and vertex cover.
    Peel(PeelArgs),
    /// Streaming estimate of the maximum matching size.
    Estimate(EstimateArgs),
    /// Local oracle queries against a consistent matching.
    Lca(LcaArgs),
    /// Hard instance pairs and the lower-bound experiment.
    #[command(subcommand)]
    Forge(ForgeCommand),
    /// Exploration-tree sizes of randomized greedy on infinite trees.
    Greedy(GreedyArgs),
    /// Level-test outcome distance between IID and permutation streams.
    Coupling(CouplingArgs),
    /// Run the acceptance suite.
    Accept(AcceptArgs),
}

#[derive(Args)]
struct GraphArgs {
    /// Edge-list file: a header `n m`, then one `u v` line per edge.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Args)]
struct PeelArgs {
    #[command(flatten)]
    g: GraphArgs,
    /// Number of rounds; defaults to `J + 1`.
    #[arg(long)]
    rounds: Option<u32>,
    /// Degree bound `d`; defaults to the maximum degree.
    #[arg(long)]
    degree_bound: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
enum StreamKind {
    Iid,
    #[value(alias = "permutation")]
    #[serde(alias = "permutation")]
    Perm,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    g: GraphArgs,
    #[arg(long, value_enum)]
    mode: Option<StreamKind>,
    #[arg(long)]
    trials: Option<u64>,
    /// IID sample budget; defaults to `m`.
    #[arg(long)]
    budget: Option<u64>,
    /// IID sample budget in units of `m`, used when `--budget` is absent.
    #[arg(long)]
    budget_factor: Option<f64>,
    /// Permutation budget constant: `beta m / ln^2 n` samples.
    #[arg(long)]
    beta: Option<f64>,
}

#[derive(Args)]
struct LcaArgs {
    #[command(flatten)]
    g: GraphArgs,
    #[arg(long)]
    lambda: Option<f64>,
    /// `edge:U,V`, `vertex:V` or `all-edges`.
    #[arg(long)]
    query: Option<String>,
    /// Same as `--query all-edges`.
    #[arg(long)]
    all_edges: bool,
}

#[derive(Subcommand)]
enum ForgeCommand {
    /// Build the padded pair (G, H) and write both edge lists.
    BuildPair {
        #[arg(long)]
        c: Option<usize>,
        #[arg(long)]
        k: Option<u32>,
        /// Output prefix; files are `<prefix>-g.el`, `<prefix>-h.el` and
        /// `<prefix>-trace.json`. Defaults to `<out-dir>/pair-c<c>-k<k>`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also lift both graphs through a searched Cayley graph.
        #[arg(long)]
        lift: bool,
        /// Girth required of the lifts.
        #[arg(long)]
        girth: Option<usize>,
    },
    /// Compare subgraph counts of two graphs for patterns up to `k` edges.
    Verify {
        #[arg(long)]
        g: PathBuf,
        #[arg(long)]
        h: PathBuf,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Classifier accuracy on YES/NO gadget distributions.
    LbExperiment {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        c: Option<usize>,
        #[arg(long)]
        k: Option<u32>,
        /// Clique size added to both distributions.
        #[arg(long)]
        w: Option<usize>,
        #[arg(long)]
        stream_len: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
enum KindArg {
    Hd,
    Hde,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
enum Measure {
    Mean,
    DepthTail,
    SecondMoment,
    Scaling,
}

#[derive(Args)]
struct GreedyArgs {
    #[arg(long, value_enum)]
    kind: Option<KindArg>,
    #[arg(long)]
    d: Option<u32>,
    /// Root branching is `eps d` for `hde`.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    lmax: Option<u32>,
    #[arg(long, value_enum)]
    measure: Option<Measure>,
    /// Depth threshold for `depth-tail`.
    #[arg(long)]
    level: Option<u32>,
    /// Degrees for `scaling`, comma-separated.
    #[arg(long, value_delimiter = ',')]
    ds: Option<Vec<u32>>,
}

#[derive(Args)]
struct CouplingArgs {
    #[command(flatten)]
    g: GraphArgs,
    /// Level of the vertex test.
    #[arg(long)]
    level: Option<u32>,
    #[arg(long)]
    vertex: Option<usize>,
    /// Prefix length of the permutation stream.
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    trials: Option<u64>,
    /// Compare against IID samples from the residual graph.
    #[arg(long)]
    residual: bool,
    /// Enumerate all stream realisations instead of sampling.
    #[arg(long)]
    exact: bool,
}

#[derive(Args)]
struct AcceptArgs {
    /// Comma-separated criterion ids.
    #[arg(long, value_delimiter = ',')]
    only: Option<Vec<u32>>,
    /// Break a constant on purpose; every affected check should fail.
    #[arg(long, value_enum)]
    fault: Option<FaultArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    BadDelta,
}

struct Ctx {
    seed: u64,
    threads: usize,
    out_dir: PathBuf,
    quick: bool,
    format: ReportFormat,
    file: ConfigFile,
}

impl Ctx {
    /// The flag value, else the config-file value, else `default`.
    fn pick<T: DeserializeOwned>(&self, section: &str, key: &str, flag: Option<T>, default: T) -> anyhow::Result<T> {
        Ok(match flag {
            Some(v) => v,
            None => self.file.get(section, key)?.unwrap_or(default),
        })
    }

    fn graph(&self, section: &str, flag: &Option<PathBuf>) -> anyhow::Result<Graph> {
        let path: Option<PathBuf> = match flag {
            Some(p) => Some(p.clone()),
            None => self.file.get(section, "graph")?,
        };
        let Some(path) = path else { bail!(UsageError("--graph is required".into())) };
        load_graph(&path).with_context(|| format!("reading {}", path.display()))
    }

    fn finish<R: Serialize>(&self, mut report: RunReport, rows: &[R], start: Instant) -> anyhow::Result<bool> {
        report.wall_time = start.elapsed();
        let written = write_outputs(&self.out_dir, &report.command, &report, rows, self.format)?;
        out(&serde_json::to_string_pretty(&report.summary)?);
        for f in &report.failures {
            eprintln!("FAILED: {f}");
        }
        for p in written {
            eprintln!("wrote {}", p.display());
        }
        Ok(report.ok())
    }
}

#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            let usage = e.downcast_ref::<UsageError>().is_some()
                || matches!(e.downcast_ref::<matchest::Error>(), Some(matchest::Error::Config(_)));
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let file = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let ctx = Ctx {
        seed: cli.seed.or(file.seed).unwrap_or(0),
        threads: cli.threads.or(file.threads).unwrap_or(0),
        out_dir: cli.out_dir.clone().or(file.out_dir.clone()).unwrap_or_else(|| PathBuf::from("out")),
        quick: cli.quick || file.quick.unwrap_or(false),
        format: cli.format.or(file.format).unwrap_or_default(),
        file,
    };
    let threads = ctx.threads;
    in_pool(threads, || dispatch(&ctx, cli.command))?
}

fn dispatch(ctx: &Ctx, command: Command) -> anyhow::Result<bool> {
    let start = Instant::now();
    match command {
        Command::Peel(a) => peel(ctx, a, start),
        Command::Estimate(a) => estimate(ctx, a, start),
        Command::Lca(a) => lca(ctx, a, start),
        Command::Forge(f) => forge(ctx, f, start),
        Command::Greedy(a) => greedy(ctx, a, start),
        Command::Coupling(a) => coupling(ctx, a, start),
        Command::Accept(a) => accept(ctx, a, start),
    }
}

fn peel(ctx: &Ctx, a: PeelArgs, start: Instant) -> anyhow::Result<bool> {
    let g = ctx.graph("peel", &a.g.graph)?;
    let c = ctx.pick("peel", "c", a.g.c, 2.0)?;
    let delta = ctx.pick("peel", "delta", a.g.delta, 0.5)?;
    let mut cfg = PeelingConfig::for_graph(&g, c, delta);
    if let Some(d) = ctx.pick("peel", "degree_bound", a.degree_bound.map(Some), None)? {
        cfg = PeelingConfig { d, ..cfg }.with_levels(matchest::peeling::default_levels(c, d));
    }
    if let Some(rounds) = ctx.pick("peel", "rounds", a.rounds.map(Some), None)? {
        if rounds == 0 {
            bail!(UsageError("--rounds must be at least 1".into()));
        }
        cfg = cfg.with_levels(rounds - 1);
    }
    let r = alg_global(&g, &cfg)?;
    let mut report = RunReport::new("peel", ctx.seed, &cfg)?;
    report.summary = json!({
        "n": g.n(), "m": g.m(), "sum_M": r.sum_m, "cover_size": r.cover_size,
        "per_round_peels": r.per_round_peels, "max_load": r.max_load,
        "cover_is_valid": r.cover.covers(&g), "maximum_matching": exact_mm(&g).ok(),
    });
    if !r.cover.covers(&g) && cfg.surviving_edge_weight() >= delta {
        report.failures.push("peeled vertices do not cover every edge".into());
    }
    #[derive(Serialize)]
    struct Row {
        round: usize,
        peeled: usize,
    }
    let rows: Vec<Row> = r.per_round_peels.iter().enumerate().map(|(i, &peeled)| Row { round: i + 1, peeled }).collect();
    ctx.finish(report, &rows, start)
}

fn estimate(ctx: &Ctx, a: EstimateArgs, start: Instant) -> anyhow::Result<bool> {
    let g = ctx.graph("estimate", &a.g.graph)?;
    let c = ctx.pick("estimate", "c", a.g.c, 2.0)?;
    let delta = ctx.pick("estimate", "delta", a.g.delta, 0.5)?;
    let mode = ctx.pick("estimate", "mode", a.mode, StreamKind::Iid)?;
    let trials = ctx.pick("estimate", "trials", a.trials, if ctx.quick { 5 } else { 21 })?;
    let factor = ctx.pick("estimate", "budget_factor", a.budget_factor, 1.0)?;
    let budget = ctx.pick("estimate", "budget", a.budget, (factor * g.m() as f64).ceil() as u64)?;
    let beta = ctx.pick("estimate", "beta", a.beta, DEFAULT_BETA)?;
    if trials == 0 {
        bail!(UsageError("--trials must be positive".into()));
    }
    let cfg = EstimatorConfig::for_graph(&g, c, delta).with_budget(budget);
    cfg.validate()?;
    let mm = exact_mm(&g).ok();
    #[derive(Serialize)]
    struct Row {
        trial: u64,
        estimate: f64,
        samples_used: u64,
        mm_exact: Option<usize>,
        last_batch: u64,
    }
    let rows = run_trials(trials, ctx.seed, |i, s| {
        let out = match mode {
            StreamKind::Iid => alg_iid(&mut EdgeStream::iid(&g, s), &cfg)?,
            StreamKind::Perm => permutation_peeling(&mut EdgeStream::permutation(&g, s), &cfg, beta)?,
        };
        Ok(Row { trial: i, estimate: out.estimate, samples_used: out.samples_used, mm_exact: mm, last_batch: out.last_batch })
    })?;
    let estimates: Vec<f64> = rows.iter().map(|r| r.estimate).collect();
    let mut report = RunReport::new("estimate", ctx.seed, &json!({"estimator": cfg, "mode": mode, "beta": beta}))?;
    report.summary = json!({
        "n": g.n(), "m": g.m(), "trials": trials, "median_estimate": median(&estimates),
        "maximum_matching": mm,
    });
    ctx.finish(report, &rows, start)
}

fn lca(ctx: &Ctx, a: LcaArgs, start: Instant) -> anyhow::Result<bool> {
    let g = ctx.graph("lca", &a.g.graph)?;
    let base = OracleConfig::for_graph(&g, ctx.seed);
    let cfg = OracleConfig {
        c: ctx.pick("lca", "c", a.g.c, base.c)?,
        delta: ctx.pick("lca", "delta", a.g.delta, base.delta)?,
        lambda: ctx.pick("lca", "lambda", a.lambda, base.lambda)?,
        ..base
    };
    cfg.validate(&g)?;
    let mut report = RunReport::new("lca", ctx.seed, &cfg)?;
    let rows: Vec<()> = Vec::new();
    let query = match (a.query, a.all_edges) {
        (Some(_), true) => bail!(UsageError("give either --query or --all-edges".into())),
        (Some(q), false) => q,
        (None, _) => ctx.pick("lca", "query", None, "all-edges".to_string())?,
    };
    match parse_query(&query, &g)? {
        Query::Edge(e) => report.summary = serde_json::to_value(oracle_edge(e, &g, &cfg)?)?,
        Query::Vertex(v) => report.summary = serde_json::to_value(oracle_vertex(v, &g, &cfg)?)?,
        Query::AllEdges => {
            let all = oracle_all_edges(&g, &cfg)?;
            if !all.is_matching {
                report.failures.push("oracle answers do not form a matching".into());
            }
            report.summary = json!({
                "matching_size": all.matching.len(), "maximum_matching": exact_mm(&g).ok(),
                "max_probes": all.max_probes, "over_budget": all.over_budget, "queries": all.queries,
                "query_budget": cfg.query_budget(g.n()), "is_matching": all.is_matching,
            });
        }
    }
    ctx.finish(report, &rows, start)
}

enum Query {
    Edge(usize),
    Vertex(usize),
    AllEdges,
}

fn parse_query(q: &str, g: &Graph) -> anyhow::Result<Query> {
    let bad = || UsageError(format!("bad query {q:?}; expected edge:U,V, vertex:V or all-edges"));
    if q == "all-edges" {
        return Ok(Query::AllEdges);
    }
    if let Some(v) = q.strip_prefix("vertex:") {
        let v: usize = v.trim().parse().map_err(|_| bad())?;
        if v >= g.n() {
            bail!(UsageError(format!("vertex {v} out of range for n = {}", g.n())));
        }
        return Ok(Query::Vertex(v));
    }
    if let Some(uv) = q.strip_prefix("edge:") {
        let (u, v) = uv.split_once(',').ok_or_else(bad)?;
        let (u, v): (usize, usize) = (u.trim().parse().map_err(|_| bad())?, v.trim().parse().map_err(|_| bad())?);
        if u >= g.n() || v >= g.n() {
            bail!(UsageError(format!("edge ({u}, {v}) out of range for n = {}", g.n())));
        }
        let e = g.find_edge(u, v).ok_or_else(|| UsageError(format!("({u}, {v}) is not an edge")))?;
        return Ok(Query::Edge(e));
    }
    bail!(bad())
}

fn forge(ctx: &Ctx, f: ForgeCommand, start: Instant) -> anyhow::Result<bool> {
    let rows: Vec<()> = Vec::new();
    match f {
        ForgeCommand::BuildPair { c, k, out, lift, girth } => {
            let c = ctx.pick("forge", "c", c, 4)?;
            let k = ctx.pick("forge", "k", k, 1)?;
            let pair = build_pair(c, k)?;
            let prefix = out.unwrap_or_else(|| ctx.out_dir.join(format!("pair-c{c}-k{k}")));
            let config = json!({"c": c, "k": k, "lift": lift, "girth": girth, "out": prefix});
            let mut report = RunReport::new("forge-build-pair", ctx.seed, &config)?;
            if let Err(e) = pair.check_witnesses() {
                report.failures.push(e.to_string());
            }
            let with_suffix = |s: &str| PathBuf::from(format!("{}{s}", prefix.display()));
            if let Some(dir) = with_suffix("").parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            let (gp, hp) = (with_suffix("-g.el"), with_suffix("-h.el"));
            save_graph(&pair.g, &gp)?;
            save_graph(&pair.h, &hp)?;
            let mut summary = json!({
                "n": pair.g.n(), "m_g": pair.g.m(), "m_h": pair.h.m(),
                "witness_matching": pair.witness_matching.len(), "witness_cover": pair.witness_cover.len(),
                "structure": pair.trace, "g": gp, "h": hp,
            });
            if lift {
                let girth = girth.unwrap_or(2 * k as usize + 2);
                let group = find_high_girth_generators(pair.g.m(), girth, 2000, &default_catalog(), ctx.seed)
                    .ok_or_else(|| anyhow::anyhow!("no catalog group reaches girth {girth}"))?;
                let mut lifts = Vec::new();
                for (name, base, tag) in [("g", &pair.g, 0u64), ("h", &pair.h, 1)] {
                    let l = lift_with_girth(base, &group, girth, 50, prf_u64(ctx.seed, "lift", &[tag]))?
                        .ok_or_else(|| anyhow::anyhow!("no lift of {name} reached girth {girth}"))?;
                    let path = with_suffix(&format!("-{name}-lift.el"));
                    save_graph(&l.lifted, &path)?;
                    lifts.push(json!({"graph": name, "n": l.lifted.n(), "m": l.lifted.m(), "path": path}));
                }
                summary["lift"] = json!({"group": group.name, "order": group.order, "girth": girth, "graphs": lifts});
            }
            std::fs::write(with_suffix("-trace.json"), format!("{}\n", serde_json::to_string_pretty(&summary)?))?;
            report.summary = summary;
            ctx.finish(report, &rows, start)
        }
        ForgeCommand::Verify { g, h, k } => {
            let k = ctx.pick("forge", "k", k, 2)?;
            let (gg, hh) = (read(&g)?, read(&h)?);
            let r = verify_indistinguishable(&gg, &hh, k)?;
            let mut report = RunReport::new("forge-verify", ctx.seed, &json!({"g": g, "h": h, "k": k}))?;
            if !r.all_equal {
                report.failures.push(format!("counts differ: {:?}", r.first_difference));
            }
            report.summary = serde_json::to_value(&r)?;
            ctx.finish(report, &r.rows, start)
        }
        ForgeCommand::LbExperiment { n, c, k, w, stream_len, trials } => {
            let n = ctx.pick("forge", "n", n, 900)?;
            let c = ctx.pick("forge", "c", c, 2)?;
            let k = ctx.pick("forge", "k", k, 1)?;
            let w = ctx.pick("forge", "w", w, 10)?;
            let trials = ctx.pick("forge", "trials", trials, if ctx.quick { 200 } else { 400 })?;
            let (yes, no) = build_distributions(n, c, k, w)?;
            let stream_len = ctx.pick("forge", "stream_len", stream_len, yes.m() as u64)?;
            let r = distinguishability_experiment(&yes, &no, stream_len, trials, ctx.seed)?;
            let mut report = RunReport::new(
                "forge-lb-experiment",
                ctx.seed,
                &json!({"n": n, "c": c, "k": k, "w": w, "stream_len": stream_len, "trials": trials}),
            )?;
            report.summary = json!({"m": yes.m(), "gadgets": yes.r, "result": r});
            ctx.finish(report, &rows, start)
        }
    }
}

/// Prints a line, ignoring a closed stdout.
fn out(line: &str) {
    let _ = writeln!(std::io::stdout(), "{line}");
}

fn read(path: &Path) -> anyhow::Result<Graph> {
    load_graph(path).with_context(|| format!("reading {}", path.display()))
}

fn greedy(ctx: &Ctx, a: GreedyArgs, start: Instant) -> anyhow::Result<bool> {
    let eps_flag = ctx.pick("greedy", "eps", a.eps.map(Some), None)?;
    let default_kind = if eps_flag.is_some() { KindArg::Hde } else { KindArg::Hd };
    let kind = ctx.pick("greedy", "kind", a.kind, default_kind)?;
    let d = ctx.pick("greedy", "d", a.d, 8)?;
    let eps = eps_flag.unwrap_or(0.125);
    let measure = ctx.pick("greedy", "measure", a.measure, Measure::Mean)?;
    let tail = matches!(measure, Measure::DepthTail | Measure::SecondMoment);
    let trials = ctx.pick("greedy", "trials", a.trials, if ctx.quick && !tail { 1000 } else { 10_000 })?;
    let mut spec = match kind {
        KindArg::Hd => RootSpec::hd(d),
        KindArg::Hde => RootSpec::hde(d, eps),
    };
    spec.lmax = ctx.pick("greedy", "lmax", a.lmax, spec.lmax)?;
    let hde_eps = (kind == KindArg::Hde).then_some(eps);
    let config = json!({"spec": spec, "trials": trials, "measure": measure});
    let mut report = RunReport::new("greedy", ctx.seed, &config)?;
    #[derive(Serialize)]
    struct Row {
        trial: usize,
        #[serde(rename = "T")]
        t: u64,
        #[serde(rename = "D")]
        depth: u32,
        truncated: bool,
    }
    let mut rows = Vec::new();
    match measure {
        Measure::Mean => {
            let sample = simulate_root(&spec, trials, ctx.seed)?;
            report.summary = json!({
                "tree_size": tree_size_summary(&sample),
                "max_depth": sample.iter().map(|s| s.depth).max(),
                "truncated": sample.iter().filter(|s| s.truncated).count(),
            });
            rows = sample
                .iter()
                .enumerate()
                .map(|(trial, s)| Row { trial, t: s.tree_size, depth: s.depth, truncated: s.truncated })
                .collect();
        }
        Measure::DepthTail => {
            let level = ctx.pick("greedy", "level", a.level, 12)?;
            report.summary = serde_json::to_value(depth_tail(d, level, trials, ctx.seed)?)?;
        }
        Measure::SecondMoment => {
            report.summary = serde_json::to_value(second_moment(d, hde_eps, trials, ctx.seed)?)?;
        }
        Measure::Scaling => {
            let ds = ctx.pick("greedy", "ds", a.ds, vec![16, 32, 64, 128])?;
            report.summary = serde_json::to_value(scaling_exponent(&ds, eps, trials, ctx.seed)?)?;
        }
    }
    ctx.finish(report, &rows, start)
}

fn coupling(ctx: &Ctx, a: CouplingArgs, start: Instant) -> anyhow::Result<bool> {
    let g = ctx.graph("coupling", &a.g.graph)?;
    let c = ctx.pick("coupling", "c", a.g.c, 2.0)?;
    let delta = ctx.pick("coupling", "delta", a.g.delta, 0.5)?;
    let level = ctx.pick("coupling", "level", a.level, 1)?;
    let vertex = ctx.pick("coupling", "vertex", a.vertex, 0)?;
    let t = ctx.pick("coupling", "t", a.t, 0)?;
    let trials = ctx.pick("coupling", "trials", a.trials, if ctx.quick { 10_000 } else { 40_000 })?;
    let reference = if a.residual || ctx.pick("coupling", "residual", None, false)? {
        Reference::Residual
    } else {
        Reference::Full
    };
    let cfg = EstimatorConfig::for_graph(&g, c, delta);
    let rows: Vec<()> = Vec::new();
    let config = json!({"estimator": cfg, "level": level, "vertex": vertex, "t": t, "reference": reference});
    let mut report = RunReport::new("coupling", ctx.seed, &config)?;
    if a.exact {
        let prefix: Vec<usize> = (0..t).map(|i| prf_u64(ctx.seed, "exact-prefix", &[i as u64]) as usize).collect();
        let mut seen = Vec::new();
        for p in prefix {
            let mut e = p % g.m();
            while seen.contains(&e) {
                e = (e + 1) % g.m();
            }
            seen.push(e);
        }
        report.summary = serde_json::to_value(exact_coupling(&g, level, vertex, &seen, reference, &cfg)?)?;
    } else {
        let spec = CouplingSpec { level, vertex, t, trials, prefix: PrefixMode::Random, reference };
        report.summary = serde_json::to_value(stream_coupling_experiment(&g, &spec, &cfg, ctx.seed)?)?;
    }
    ctx.finish(report, &rows, start)
}

fn accept(ctx: &Ctx, a: AcceptArgs, start: Instant) -> anyhow::Result<bool> {
    let only = match a.only {
        Some(ids) => Some(ids),
        None => ctx.file.get("accept", "only")?,
    };
    let opts = AcceptanceOptions {
        seed: ctx.seed,
        quick: ctx.quick,
        only,
        fault: a.fault.map(|FaultArg::BadDelta| Fault::BadDelta),
        threads: ctx.threads,
    };
    let r = run_acceptance(&opts)?;
    for line in r.lines() {
        out(&line);
    }
    let rows: Vec<_> = r.criteria.iter().flat_map(|c| c.rows.clone()).collect();
    let mut report = RunReport::new("accept", ctx.seed, &opts)?;
    report.failures = r.criteria.iter().filter(|c| !c.passed).map(|c| c.line()).collect();
    report.summary = serde_json::to_value(&r)?;
    report.wall_time = start.elapsed();
    let written = write_outputs(&ctx.out_dir, "accept", &report, &rows, ctx.format)?;
    std::fs::write(ctx.out_dir.join("accept.digest"), format!("{}\n", r.digest()?))?;
    for p in written {
        eprintln!("wrote {}", p.display());
    }
    Ok(report.ok())
}
