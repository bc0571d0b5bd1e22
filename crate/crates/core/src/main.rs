use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use gammaclust::hardness::{self, Graph, ThreeDmInstance};
use gammaclust::laminar;
use gammaclust::metric::{Clustering, MetricSpace, SpaceFile};
use gammaclust::oracle::{self, PlantedSpec};
use gammaclust::sampler::{self, montecarlo, SamplerConfig};
use gammaclust::verify;
use gammaclust::Error;

const EXIT_DOMAIN: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_IO: u8 = 74;

#[derive(Parser)]
#[command(
    name = "gammaclust",
    version,
    about = "Find and verify (alpha, gamma)-clusterings of finite metric spaces"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Wrap the result in a run record echoing the configuration.
    #[arg(long, global = true)]
    json: bool,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Include wall-clock timing in the run record.
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a metric space.
    Gen(GenArgs),
    /// Check a clustering (or a single cluster).
    Verify(VerifyArgs),
    /// Search for all clusterings by sampling.
    Find(FindArgs),
    /// Ball clusters and their inclusion forest (gamma > 3).
    Balls(SpaceParams),
    /// Partition into ball clusters (gamma > 3).
    Partition(PartitionArgs),
    /// Build the gadget graph metric of a 3DM instance.
    Gadget(GadgetArgs),
    /// Check the gadget reduction on one or all small instances.
    CheckReduction(CheckReductionArgs),
    /// Partition a graph metric at gamma = 2.5 + eps.
    Match25(Match25Args),
    /// Closed-form separation, count and sample-size bounds.
    Bounds(BoundsArgs),
    /// Monte-Carlo check of the sampling concentration bound.
    Montecarlo(MonteCarloArgs),
    /// Brute-force all clusterings (or clusters) of a small space.
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, Debug, Serialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
enum GenKind {
    Uniform,
    Paired,
    Cycle4,
    Planted,
    Euclidean,
    Blobs,
}

#[derive(Args, Serialize)]
struct GenArgs {
    kind: GenKind,
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Distance between different pairs (paired).
    #[arg(long, default_value_t = 4.0)]
    far: f64,
    /// Comma-separated part sizes (planted).
    #[arg(long, default_value = "50,50,50,50")]
    parts: String,
    #[arg(long, default_value_t = 1.0)]
    intra: f64,
    #[arg(long, default_value_t = 0.5)]
    jitter: f64,
    #[arg(long, default_value_t = 6.0)]
    inter: f64,
    /// Gamma the planted labels must reach.
    #[arg(long, default_value_t = 2.0)]
    gamma: f64,
    #[arg(long, default_value_t = 3)]
    centers: usize,
    #[arg(long, default_value_t = 0.05)]
    spread: f64,
    /// Where to write the planted labels.
    #[arg(long)]
    labels_out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct SpaceParams {
    #[arg(long)]
    space: PathBuf,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    gamma: f64,
}

#[derive(Args, Serialize)]
struct VerifyArgs {
    #[command(flatten)]
    base: SpaceParams,
    /// Labels file: a JSON array, or an object with a "labels" field.
    #[arg(long, required_unless_present = "cluster")]
    labels: Option<PathBuf>,
    /// Comma-separated point indices of a single cluster to check instead.
    #[arg(long, conflicts_with = "labels")]
    cluster: Option<String>,
    /// Allowed exceptional mass (labels -1).
    #[arg(long)]
    eps: Option<f64>,
    /// Also check the pairwise distance bounds.
    #[arg(long)]
    regularity: bool,
}

#[derive(Args, Serialize)]
struct FindArgs {
    #[command(flatten)]
    base: SpaceParams,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = sampler::DEFAULT_REPETITIONS)]
    reps: usize,
    #[arg(long, default_value_t = sampler::DEFAULT_BUDGET)]
    budget: u64,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    fail_prob: Option<f64>,
    /// Fixed sample size instead of the derived one.
    #[arg(long)]
    sample_size: Option<usize>,
}

#[derive(Args, Serialize)]
struct PartitionArgs {
    #[command(flatten)]
    base: SpaceParams,
    /// Partition into minimal clusters.
    #[arg(long)]
    minimal: bool,
    #[arg(long, default_value_t = 1)]
    min_parts: usize,
}

#[derive(Args, Serialize)]
struct InstanceArgs {
    /// 3DM instance JSON: {"q": .., "triples": [[y,z,w], ..]}, 1-based.
    #[arg(long, conflicts_with_all = ["q", "triples"])]
    instance: Option<PathBuf>,
    #[arg(long, requires = "triples")]
    q: Option<usize>,
    /// Triples as "y,z,w;y,z,w;..".
    #[arg(long, requires = "q")]
    triples: Option<String>,
}

#[derive(Args, Serialize)]
struct GadgetArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    /// Emit the graph and vertex names instead of the metric.
    #[arg(long)]
    graph: bool,
}

#[derive(Args, Serialize)]
struct CheckReductionArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    /// Check every instance with q <= 2 and at most 4 triples.
    #[arg(long)]
    all_small: bool,
}

#[derive(Args, Serialize)]
struct Match25Args {
    /// Graph JSON: {"n": .., "edges": [[a,b], ..]}.
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    eps: f64,
}

#[derive(Args, Serialize)]
struct BoundsArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    gamma: f64,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    fail_prob: Option<f64>,
}

#[derive(Args, Serialize)]
struct MonteCarloArgs {
    /// Space to sample; a planted instance is generated when absent.
    #[arg(long, requires = "labels")]
    space: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long, default_value = "50,50,50,50")]
    parts: String,
    #[arg(long, default_value_t = 2.0)]
    gamma: f64,
    /// Defaults to the smallest part mass.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    /// Comma-separated sample sizes.
    #[arg(long, default_value = "20,50,100")]
    m: String,
    #[arg(long, default_value_t = 2000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Serialize)]
struct OracleArgs {
    #[command(flatten)]
    base: SpaceParams,
    /// List clusters instead of clusterings.
    #[arg(long)]
    clusters: bool,
}

#[derive(Serialize)]
struct RunRecord<'a> {
    command: &'a str,
    config: Value,
    result: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    seconds: Option<f64>,
    version: &'static str,
}

enum Failure {
    Domain(Error),
    Io(String),
    Input(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

type Out = Result<Value, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn parse<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Failure> {
    serde_json::from_str(&read(path)?)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn load_space(path: &Path) -> Result<MetricSpace, Failure> {
    Ok(MetricSpace::from_file(parse::<SpaceFile>(path)?)?)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum LabelsFile {
    Plain(Vec<i32>),
    Wrapped { labels: Vec<i32> },
}

fn load_labels(path: &Path) -> Result<Clustering, Failure> {
    let labels = match parse::<LabelsFile>(path)? {
        LabelsFile::Plain(l) | LabelsFile::Wrapped { labels: l } => l,
    };
    Ok(Clustering::new(labels)?)
}

fn list<T: std::str::FromStr>(s: &str, sep: char) -> Result<Vec<T>, Failure> {
    s.split(sep)
        .map(|x| x.trim())
        .filter(|x| !x.is_empty())
        .map(|x| {
            x.parse()
                .map_err(|_| Failure::Input(format!("cannot parse {x:?} in {s:?}")))
        })
        .collect()
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn instance(a: &InstanceArgs) -> Result<ThreeDmInstance, Failure> {
    if let Some(path) = &a.instance {
        let inst: ThreeDmInstance = parse(path)?;
        inst.validate()?;
        return Ok(inst);
    }
    match (a.q, &a.triples) {
        (Some(q), Some(t)) => {
            let triples = t
                .split(';')
                .filter(|s| !s.trim().is_empty())
                .map(|s| {
                    let v: Vec<usize> = list(s, ',')?;
                    <[usize; 3]>::try_from(v)
                        .map_err(|_| Failure::Input(format!("triple {s:?} needs 3 entries")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(ThreeDmInstance::new(q, triples)?)
        }
        _ => Err(Failure::Input(
            "give --instance or --q with --triples".into(),
        )),
    }
}

fn planted_spec(
    parts: &str,
    intra: f64,
    jitter: f64,
    inter: f64,
    gamma: f64,
    seed: u64,
) -> Result<PlantedSpec, Failure> {
    Ok(PlantedSpec {
        part_sizes: list(parts, ',')?,
        intra_scale: intra,
        intra_jitter: jitter,
        inter_distance: inter,
        target_gamma: gamma,
        seed,
    })
}

fn gen(a: &GenArgs) -> Out {
    let space = match a.kind {
        GenKind::Uniform => oracle::gen_uniform(a.n)?,
        GenKind::Paired => oracle::gen_paired(a.n, a.far)?,
        GenKind::Cycle4 => oracle::gen_cycle4(),
        GenKind::Euclidean => oracle::gen_random_euclidean(a.n, a.dim, a.seed)?,
        GenKind::Blobs => oracle::gen_blobs(a.n, a.dim, a.centers, a.spread, a.seed)?,
        GenKind::Planted => {
            let p = oracle::gen_planted(&planted_spec(
                &a.parts, a.intra, a.jitter, a.inter, a.gamma, a.seed,
            )?)?;
            if let Some(path) = &a.labels_out {
                write(path, &pretty(&to_value(&p.clustering)))?;
            }
            p.space
        }
    };
    Ok(to_value(&space.to_file()))
}

fn verify_cmd(a: &VerifyArgs) -> Out {
    let space = load_space(&a.base.space)?;
    if let Some(c) = &a.cluster {
        let set: Vec<usize> = list(c, ',')?;
        return Ok(to_value(&verify::is_cluster(
            &space,
            &set,
            a.base.alpha,
            a.base.gamma,
        )?));
    }
    let c = load_labels(a.labels.as_ref().expect("clap requires labels"))?;
    let report = match a.eps {
        Some(eps) => verify::is_eps_clustering(&space, &c, eps, a.base.alpha, a.base.gamma)?,
        None => verify::is_clustering(&space, &c, a.base.alpha, a.base.gamma)?,
    };
    let mut v = to_value(&report);
    if a.regularity {
        v["regularity"] = to_value(&verify::check_regularity(&space, &c, a.base.gamma)?);
    }
    Ok(v)
}

fn find(a: &FindArgs, full: bool) -> Out {
    let space = load_space(&a.base.space)?;
    let base = sampler::find_config(&space, a.base.alpha, a.base.gamma, a.seed, a.reps);
    let cfg = SamplerConfig {
        delta: a.delta.unwrap_or(base.delta),
        t: a.t.unwrap_or(base.t),
        eps: a.eps.or(base.eps),
        fail_prob: a.fail_prob.unwrap_or(base.fail_prob),
        sample_size: a.sample_size,
        budget: a.budget,
        ..base
    };
    let report = sampler::find_with_config(&space, &cfg)?;
    Ok(if full {
        to_value(&report)
    } else {
        to_value(&report.clusterings)
    })
}

fn balls(a: &SpaceParams) -> Out {
    let space = load_space(&a.space)?;
    let clusters = laminar::enumerate_ball_clusters(&space, a.alpha, a.gamma)?;
    let forest = laminar::build_forest(space.n(), &clusters)?;
    Ok(json!({
        "clusters": forest.nodes,
        "parent": forest.adjacency().iter().map(|&(_, p)| p).collect::<Vec<_>>(),
        "roots": forest.roots,
    }))
}

fn partition(a: &PartitionArgs) -> Out {
    let space = load_space(&a.base.space)?;
    let clusters = laminar::enumerate_ball_clusters(&space, a.base.alpha, a.base.gamma)?;
    let forest = laminar::build_forest(space.n(), &clusters)?;
    let p = if a.minimal {
        forest.minimal_partition()
    } else {
        forest.find_partition(a.min_parts)
    };
    let report = match &p {
        Some(c) => Some(verify::is_clustering(
            &space,
            c,
            a.base.alpha,
            a.base.gamma,
        )?),
        None => None,
    };
    Ok(json!({
        "partition": p,
        "clustering_report": report,
        "partitions_into_clusters": forest.count_partitions(),
    }))
}

fn gadget(a: &GadgetArgs) -> Out {
    let g = hardness::gadget_graph(&instance(&a.inst)?)?;
    if !g.connected {
        eprintln!(
            "warning: gadget graph is disconnected; unreachable pairs are at distance {}",
            g.graph.n
        );
    }
    Ok(if a.graph {
        to_value(&g)
    } else {
        to_value(&g.graph.metric()?.to_file())
    })
}

fn check_reduction(a: &CheckReductionArgs) -> Out {
    if a.all_small {
        let mut reports = Vec::new();
        for inst in hardness::small_instances(2, 4) {
            let r = hardness::check_reduction(&inst)?;
            reports.push(json!({ "instance": inst, "report": r }));
        }
        let ok = reports
            .iter()
            .all(|r| r["report"]["ok"] == Value::Bool(true));
        return Ok(json!({ "instances": reports.len(), "ok": ok, "reports": reports }));
    }
    Ok(to_value(&hardness::check_reduction(&instance(&a.inst)?)?))
}

#[derive(Deserialize)]
struct GraphFile {
    n: usize,
    edges: Vec<(usize, usize)>,
}

fn match25(a: &Match25Args) -> Out {
    let gf: GraphFile = parse(&a.graph)?;
    let g = Graph::new(gf.n, &gf.edges)?;
    Ok(to_value(&hardness::graph_partition_25plus(
        &g, a.alpha, a.eps,
    )?))
}

fn bounds(a: &BoundsArgs) -> Out {
    let b = verify::theory_bounds(a.alpha, a.gamma)?;
    let base = SamplerConfig::new(a.alpha, a.gamma);
    let cfg = SamplerConfig {
        delta: a.delta.unwrap_or(base.delta),
        t: a.t.unwrap_or(base.t),
        fail_prob: a.fail_prob.unwrap_or(base.fail_prob),
        ..base
    };
    let mut v = to_value(&b);
    v["sample_size"] = json!(sampler::sample_size(&cfg)?);
    v["sampler"] = json!({ "delta": cfg.delta, "t": cfg.t, "fail_prob": cfg.fail_prob });
    Ok(v)
}

fn montecarlo_cmd(a: &MonteCarloArgs) -> Out {
    let (space, clustering) = match &a.space {
        Some(path) => (
            load_space(path)?,
            load_labels(a.labels.as_ref().expect("clap requires labels"))?,
        ),
        None => {
            let p = oracle::gen_planted(&planted_spec(&a.parts, 1.0, 0.5, 6.0, a.gamma, a.seed)?)?;
            (p.space, p.clustering)
        }
    };
    let alpha = match a.alpha {
        Some(v) => v,
        None => clustering
            .part_masses(&space)
            .into_iter()
            .fold(1.0, f64::min),
    };
    let cfg = montecarlo::MonteCarloConfig {
        alpha,
        gamma: a.gamma,
        eps: a.eps,
        sample_sizes: list(&a.m, ',')?,
        trials: a.trials,
        seed: a.seed,
        points: montecarlo::default_points(&clustering),
    };
    Ok(to_value(&montecarlo::run(&space, &clustering, &cfg)?))
}

fn oracle_cmd(a: &OracleArgs) -> Out {
    let space = load_space(&a.base.space)?;
    Ok(if a.clusters {
        to_value(&oracle::enumerate_all_clusters(
            &space,
            a.base.alpha,
            a.base.gamma,
            oracle::MAX_CLUSTER_N,
        )?)
    } else {
        let all = oracle::enumerate_all_clusterings(
            &space,
            a.base.alpha,
            a.base.gamma,
            oracle::MAX_CLUSTERING_N,
        )?;
        to_value(&all)
    })
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let start = Instant::now();
    let (name, config, result) = match &cli.cmd {
        Cmd::Gen(a) => ("gen", to_value(a), gen(a)?),
        Cmd::Verify(a) => ("verify", to_value(a), verify_cmd(a)?),
        Cmd::Find(a) => ("find", to_value(a), find(a, cli.json)?),
        Cmd::Balls(a) => ("balls", to_value(a), balls(a)?),
        Cmd::Partition(a) => ("partition", to_value(a), partition(a)?),
        Cmd::Gadget(a) => ("gadget", to_value(a), gadget(a)?),
        Cmd::CheckReduction(a) => ("check-reduction", to_value(a), check_reduction(a)?),
        Cmd::Match25(a) => ("match25", to_value(a), match25(a)?),
        Cmd::Bounds(a) => ("bounds", to_value(a), bounds(a)?),
        Cmd::Montecarlo(a) => ("montecarlo", to_value(a), montecarlo_cmd(a)?),
        Cmd::Oracle(a) => ("oracle", to_value(a), oracle_cmd(a)?),
    };
    let value = if cli.json {
        to_value(&RunRecord {
            command: name,
            config,
            result,
            seconds: cli.timing.then(|| start.elapsed().as_secs_f64()),
            version: env!("CARGO_PKG_VERSION"),
        })
    } else {
        result
    };
    let text = pretty(&value);
    match &cli.out {
        Some(path) => write(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Some(n) = std::env::var("GAMMACLUST_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Domain(e)) => {
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
            ExitCode::from(EXIT_DOMAIN)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("{}", json!({ "error": "invalid_input", "message": msg }));
            ExitCode::from(EXIT_DOMAIN)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("{}", json!({ "error": "io", "message": msg }));
            ExitCode::from(EXIT_IO)
        }
    }
}
