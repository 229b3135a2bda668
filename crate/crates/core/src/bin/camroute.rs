use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::Serialize;

use camroute::bench::{frequent_categories, run_experiment, Algorithm, ExperimentConfig, SuiteOptions};
use camroute::dominance::{preprocess, PartnerRule, PruneOptions};
use camroute::index::DEFAULT_FANOUT;
use camroute::oracle::{exact_route, rank_once_greedy, DEFAULT_ORACLE_LIMIT, DEFAULT_RANK_K};
use camroute::routing::{load_queries, save_queries, GcnnConfig, RouteReport};
use camroute::venue::io::{load_objects, load_venue, save_objects, save_venue};
use camroute::workload::{
    bucket_categories, category_catalogue, generate_query_mix, generate_venue, place_objects, replicate_dataset,
    Bucket, WorkloadSpec,
};
use camroute::{gcnn, CamQuery, CategoryId, CategoryIndex, IndoorSpace, Location, PartitionId};

#[derive(Debug, Parser)]
#[command(name = "camroute", version, about = "Category-aware indoor route planning")]
struct Cli {
    /// Master seed. Generators draw from it; the other commands are
    /// deterministic and record it where they write a summary.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a venue (geometry and category catalogue) as JSON.
    GenVenue {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Place objects in a venue and write them as CSV.
    GenObjects {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        venue: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a query set (JSON Lines) over the categories of one bucket.
    GenQueries {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write `k` relocated copies of every object.
    Replicate {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 4)]
        k: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the category index and print its shape.
    BuildIndex {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = DEFAULT_FANOUT)]
        fanout: usize,
    },
    /// Prune objects of frequent categories and print a JSON report.
    Prune {
        #[command(flatten)]
        input: Input,
        /// Categories to prune, comma separated.
        #[arg(long, value_delimiter = ',', conflicts_with = "delta")]
        categories: Vec<u32>,
        /// Percentage of the query set's categories to prune, most frequent first.
        #[arg(long, requires = "queries")]
        delta: Option<u32>,
        #[arg(long)]
        queries: Option<PathBuf>,
        #[command(flatten)]
        prune: PruneArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plan routes with a greedy planner.
    Query {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        query: QueryArgs,
        #[arg(long, value_enum, default_value_t = Planner::Gcnn)]
        algorithm: Planner,
        #[arg(long, default_value_t = DEFAULT_RANK_K)]
        rank_k: usize,
        #[command(flatten)]
        prune: PruneArgs,
    },
    /// Solve queries exactly.
    Oracle {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        query: QueryArgs,
        #[arg(long, default_value_t = DEFAULT_ORACLE_LIMIT)]
        limit: usize,
        /// Ignore the category-count limit.
        #[arg(long)]
        force: bool,
    },
    /// Run an experiment and write the results CSV and summary JSON.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct Input {
    /// Venue JSON.
    #[arg(long)]
    venue: PathBuf,
    /// Objects CSV replacing the venue's own objects.
    #[arg(long)]
    objects: Option<PathBuf>,
}

impl Input {
    fn space(&self) -> Result<IndoorSpace> {
        let mut venue = load_venue(&self.venue).with_context(|| format!("reading {}", self.venue.display()))?;
        if let Some(p) = &self.objects {
            venue = venue.with_points(load_objects(p).with_context(|| format!("reading {}", p.display()))?);
        }
        Ok(IndoorSpace::new(venue)?)
    }
}

#[derive(Debug, Args)]
struct SpecArgs {
    /// Workload spec JSON; flags below override its fields.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    floors: Option<u32>,
    #[arg(long)]
    rooms_per_floor: Option<u32>,
    #[arg(long)]
    hallway_segments: Option<u32>,
    #[arg(long)]
    doors_per_room: Option<u32>,
    #[arg(long)]
    categories: Option<u32>,
    #[arg(long)]
    bucket: Option<Bucket>,
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long)]
    shops: Option<u32>,
    #[arg(long)]
    stockists: Option<u32>,
    /// Place objects in every room, ignoring shops and stockists.
    #[arg(long)]
    uniform: bool,
    #[arg(long)]
    queries: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    query_sizes: Vec<usize>,
    #[arg(long)]
    alpha: Option<f64>,
}

impl SpecArgs {
    fn resolve(&self, seed: u64) -> Result<WorkloadSpec> {
        let mut s: WorkloadSpec = match &self.spec {
            Some(p) => serde_json::from_reader(File::open(p).with_context(|| format!("reading {}", p.display()))?)?,
            None => WorkloadSpec::default(),
        };
        s.seed = seed;
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { s.$f = v; })* };
        }
        set!(
            floors,
            rooms_per_floor,
            hallway_segments,
            doors_per_room,
            categories,
            bucket,
            scale,
            queries,
            alpha
        );
        if self.shops.is_some() {
            s.shops = self.shops;
        }
        if self.stockists.is_some() {
            s.stockists = self.stockists;
        }
        if self.uniform {
            s.shops = None;
            s.stockists = None;
        }
        if !self.query_sizes.is_empty() {
            s.query_sizes = self.query_sizes.clone();
        }
        s.validate()?;
        Ok(s)
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Rule {
    AllPartners,
    Nearest,
}

#[derive(Debug, Args)]
struct PruneArgs {
    /// Weight of static scores in the pruning arithmetic.
    #[arg(long, default_value_t = 1.0)]
    static_weight: f64,
    #[arg(long, value_enum, default_value_t = Rule::AllPartners)]
    partner_rule: Rule,
}

impl PruneArgs {
    fn options(&self) -> PruneOptions {
        PruneOptions {
            static_weight: self.static_weight,
            partner_rule: match self.partner_rule {
                Rule::AllPartners => PartnerRule::AllPartners,
                Rule::Nearest => PartnerRule::Nearest,
            },
        }
    }
}

#[derive(Debug, Args)]
struct QueryArgs {
    /// Query file (JSON Lines); one report line per query.
    #[arg(long, conflicts_with_all = ["source", "target", "categories"])]
    queries: Option<PathBuf>,
    /// `x,y,floor` or `x,y,floor,partition`.
    #[arg(long, value_parser = parse_location, required_unless_present = "queries")]
    source: Option<Location>,
    #[arg(long, value_parser = parse_location, required_unless_present = "queries")]
    target: Option<Location>,
    #[arg(long, value_delimiter = ',', required_unless_present = "queries")]
    categories: Vec<u32>,
    /// Preference between travel (1) and static cost (0); overrides query files.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl QueryArgs {
    fn load(&self) -> Result<Vec<CamQuery>> {
        if let Some(p) = &self.queries {
            let mut qs = load_queries(p).with_context(|| format!("reading {}", p.display()))?;
            if let Some(a) = self.alpha {
                qs.iter_mut().for_each(|q| q.alpha = a);
            }
            return Ok(qs);
        }
        Ok(vec![CamQuery {
            source: self.source.expect("required by clap"),
            target: self.target.expect("required by clap"),
            categories: self.categories.iter().copied().map(CategoryId).collect(),
            alpha: self.alpha.unwrap_or(0.5),
        }])
    }
}

fn parse_location(s: &str) -> std::result::Result<Location, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |i: usize| parts[i].parse::<f64>().map_err(|e| format!("{:?}: {e}", parts[i]));
    match parts.len() {
        3 | 4 => {
            let floor = parts[2]
                .parse::<i32>()
                .map_err(|e| format!("floor {:?}: {e}", parts[2]))?;
            let mut loc = Location::new(num(0)?, num(1)?, floor);
            if parts.len() == 4 {
                let p = parts[3]
                    .parse::<u32>()
                    .map_err(|e| format!("partition {:?}: {e}", parts[3]))?;
                loc.partition = Some(PartitionId(p));
            }
            Ok(loc)
        }
        _ => Err(format!("expected x,y,floor[,partition], got {s:?}")),
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Planner {
    Gcnn,
    GcnnDom,
    RankOnce,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Experiment config JSON; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    venue: Option<PathBuf>,
    #[arg(long)]
    objects: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    queries: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    out: Option<PathBuf>,
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    algorithms: Vec<Algorithm>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    delta: Option<u32>,
    /// Accept a delta outside 0, 10, 20, 50, 80, 100.
    #[arg(long)]
    any_delta: bool,
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long)]
    oracle_limit: Option<usize>,
    #[arg(long)]
    rank_k: Option<usize>,
    #[arg(long)]
    fanout: Option<usize>,
    #[arg(long, value_enum)]
    partner_rule: Option<Rule>,
}

impl BenchArgs {
    fn config(&self, seed: u64) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
            None => ExperimentConfig {
                venue: PathBuf::new(),
                objects: None,
                queries: PathBuf::new(),
                output: PathBuf::new(),
                summary: None,
                seed,
                suite: SuiteOptions::default(),
            },
        };
        c.seed = seed;
        if let Some(v) = &self.venue {
            c.venue = v.clone();
        }
        if self.objects.is_some() {
            c.objects = self.objects.clone();
        }
        if let Some(q) = &self.queries {
            c.queries = q.clone();
        }
        if let Some(o) = &self.out {
            c.output = o.clone();
        }
        if self.summary.is_some() {
            c.summary = self.summary.clone();
        }
        let s = &mut c.suite;
        if !self.algorithms.is_empty() {
            s.algorithms = self.algorithms.clone();
        }
        if self.alpha.is_some() {
            s.alpha = self.alpha;
        }
        if let Some(d) = self.delta {
            s.delta = d;
        }
        s.any_delta |= self.any_delta;
        if let Some(r) = self.repetitions {
            s.repetitions = r;
        }
        if let Some(l) = self.oracle_limit {
            s.oracle_limit = l;
        }
        if let Some(k) = self.rank_k {
            s.rank_k = k;
        }
        if let Some(f) = self.fanout {
            s.fanout = f;
        }
        if let Some(r) = self.partner_rule {
            s.prune.partner_rule = PruneArgs {
                static_weight: 1.0,
                partner_rule: r,
            }
            .options()
            .partner_rule;
        }
        Ok(c)
    }
}

fn writer(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    let mut w = writer(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct IndexShape {
    partitions: usize,
    fanout: usize,
    nodes: usize,
    leaves: usize,
    levels: usize,
    live_points: BTreeMap<CategoryId, usize>,
}

/// Runs `plan` on every query, writing one JSON line per success. Returns
/// the number of failed queries.
fn run_queries<F>(queries: &[CamQuery], out: Option<&Path>, mut plan: F) -> Result<usize>
where
    F: FnMut(&CamQuery) -> camroute::Result<RouteReport>,
{
    let mut w = writer(out)?;
    let mut failed = 0;
    for (i, q) in queries.iter().enumerate() {
        match plan(q) {
            Ok(r) => {
                serde_json::to_writer(&mut w, &r)?;
                w.write_all(b"\n")?;
            }
            Err(e) => {
                eprintln!("query {i}: {e}");
                failed += 1;
            }
        }
    }
    w.flush()?;
    Ok(failed)
}

fn run(cli: Cli) -> Result<usize> {
    let seed = cli.seed;
    match cli.command {
        Command::GenVenue { spec, out } => {
            let spec = spec.resolve(seed)?;
            let venue = generate_venue(&spec)?.with_categories(category_catalogue(spec.categories));
            save_venue(&out, &venue)?;
            info!("{} partitions, {} doors", venue.partitions().len(), venue.doors().len());
        }
        Command::GenObjects { spec, venue, out } => {
            let spec = spec.resolve(seed)?;
            let points = place_objects(&load_venue(&venue)?, &spec)?;
            save_objects(&out, &points)?;
            info!("{} objects", points.len());
        }
        Command::GenQueries { spec, input, out } => {
            let spec = spec.resolve(seed)?;
            let space = input.space()?;
            let buckets = bucket_categories(space.venue().points(), spec.scale)?;
            let queries = generate_query_mix(
                &buckets[&spec.bucket],
                spec.queries,
                &spec.query_sizes,
                spec.alpha,
                space.venue(),
                seed,
            )?;
            save_queries(&out, &queries)?;
        }
        Command::Replicate { input, k, out } => {
            let space = input.space()?;
            save_objects(
                &out,
                &replicate_dataset(space.venue(), space.venue().points(), k, seed)?,
            )?;
        }
        Command::BuildIndex { input, fanout } => {
            let space = input.space()?;
            let start = Instant::now();
            let ix = CategoryIndex::build(&space, fanout)?;
            info!("index built in {:?}", start.elapsed());
            let shape = IndexShape {
                partitions: space.venue().partitions().len(),
                fanout,
                nodes: ix.nodes().len(),
                leaves: ix.leaves().count(),
                levels: ix.node(ix.root())?.level + 1,
                live_points: space
                    .venue()
                    .category_ids()
                    .into_iter()
                    .map(|c| (c, ix.live_count(c)))
                    .collect(),
            };
            write_json(None, &shape)?;
        }
        Command::Prune {
            input,
            categories,
            delta,
            queries,
            prune,
            out,
        } => {
            let space = input.space()?;
            let frequent: BTreeSet<CategoryId> = match (delta, &queries) {
                (Some(d), Some(q)) => frequent_categories(&load_queries(q)?, d),
                _ if !categories.is_empty() => categories.into_iter().map(CategoryId).collect(),
                _ => bail!("give --categories or --delta with --queries"),
            };
            let ix = CategoryIndex::build(&space, DEFAULT_FANOUT)?;
            let (_, report) = preprocess(&space, &ix, &frequent, prune.options())?;
            write_json(out.as_deref(), &report)?;
        }
        Command::Query {
            input,
            query,
            algorithm,
            rank_k,
            prune,
        } => {
            let space = input.space()?;
            let queries = query.load()?;
            let ix = CategoryIndex::build(&space, DEFAULT_FANOUT)?;
            let ix = match algorithm {
                Planner::GcnnDom => {
                    let cats: BTreeSet<CategoryId> =
                        queries.iter().flat_map(|q| q.categories.iter().copied()).collect();
                    preprocess(&space, &ix, &cats, prune.options())?.0
                }
                _ => ix,
            };
            let name = algorithm
                .to_possible_value()
                .expect("no skipped variants")
                .get_name()
                .to_string();
            return run_queries(&queries, query.out.as_deref(), |q| {
                let plan = match algorithm {
                    Planner::Gcnn | Planner::GcnnDom => gcnn(&space, &ix, q, GcnnConfig::default())?,
                    Planner::RankOnce => rank_once_greedy(&space, &ix, q, rank_k)?,
                };
                Ok(RouteReport::new(&space, &name, &plan.route, q.alpha))
            });
        }
        Command::Oracle {
            input,
            query,
            limit,
            force,
        } => {
            let space = input.space()?;
            let queries = query.load()?;
            let limit = if force { usize::MAX } else { limit };
            return run_queries(&queries, query.out.as_deref(), |q| {
                let sol = exact_route(&space, q, limit)?;
                Ok(RouteReport::new(&space, "oracle", &sol.route, q.alpha))
            });
        }
        Command::Bench(args) => {
            let config = args.config(seed)?;
            let outcome = run_experiment(&config)?;
            for a in &outcome.summary.algorithms {
                eprintln!(
                    "{:<10} rows {:>4}  errors {:>3}  mean ratio {}  points {}",
                    a.algorithm.to_string(),
                    a.rows,
                    a.errors,
                    a.mean_ratio.map(|r| format!("{r:.4}")).unwrap_or_else(|| "-".into()),
                    a.total_points_evaluated
                );
            }
            return Ok(outcome.errors());
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(n) => {
            eprintln!("camroute: {n} failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("camroute: {e:#}");
            ExitCode::FAILURE
        }
    }
}
