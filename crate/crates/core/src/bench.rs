//! Experiment harness: runs planners over a query set and records cost,
//! runtime, work and approximation ratio per query.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dominance::{preprocess, PruneOptions, PruneReport};
use crate::error::{Error, Result};
use crate::index::{CategoryIndex, DEFAULT_FANOUT};
use crate::oracle::{exact_route, rank_once_greedy, DEFAULT_ORACLE_LIMIT, DEFAULT_RANK_K};
use crate::routing::{gcnn, CamQuery, GcnnConfig, Route};
use crate::venue::io::{load_objects, load_venue};
use crate::venue::{CategoryId, IndoorSpace};

pub const CSV_HEADER: [&str; 8] = [
    "query_id",
    "algorithm",
    "cost",
    "travel",
    "static",
    "runtime_us",
    "points_evaluated",
    "ratio",
];

/// Percentages of frequent query categories accepted without an override.
pub const STANDARD_DELTAS: [u32; 6] = [0, 10, 20, 50, 80, 100];

/// Ratios this close below 1 come from summing the same route in a
/// different order and are reported as 1.
const RATIO_ROUNDING: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Gcnn,
    GcnnDom,
    Oracle,
    RankOnce,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Gcnn,
        Algorithm::GcnnDom,
        Algorithm::Oracle,
        Algorithm::RankOnce,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Gcnn => "gcnn",
            Algorithm::GcnnDom => "gcnn-dom",
            Algorithm::Oracle => "oracle",
            Algorithm::RankOnce => "rank-once",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm {s:?}")))
    }
}

/// `cost / optimal`.
pub fn approximation_ratio(cost: f64, optimal: f64) -> Result<f64> {
    if !(optimal > 0.0 && optimal.is_finite()) {
        return Err(Error::ZeroOptimalCost);
    }
    Ok(cost / optimal)
}

/// Settings shared by the in-memory and file-based runners.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteOptions {
    pub algorithms: Vec<Algorithm>,
    /// Overrides every query's own preference when set.
    pub alpha: Option<f64>,
    /// Percentage of the query set's categories, most frequent first,
    /// pruned before the dominance-aware planner runs.
    pub delta: u32,
    /// Accept a `delta` outside [`STANDARD_DELTAS`].
    pub any_delta: bool,
    pub repetitions: usize,
    pub fanout: usize,
    pub oracle_limit: usize,
    pub rank_k: usize,
    pub gcnn: GcnnConfig,
    pub prune: PruneOptions,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            algorithms: vec![Algorithm::Gcnn, Algorithm::GcnnDom, Algorithm::Oracle],
            alpha: None,
            delta: 50,
            any_delta: false,
            repetitions: 1,
            fanout: DEFAULT_FANOUT,
            oracle_limit: DEFAULT_ORACLE_LIMIT,
            rank_k: DEFAULT_RANK_K,
            gcnn: GcnnConfig::default(),
            prune: PruneOptions::default(),
        }
    }
}

impl SuiteOptions {
    pub fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() {
            return Err(Error::Config("no algorithm selected".into()));
        }
        if self.delta > 100 {
            return Err(Error::Config(format!("delta {} exceeds 100", self.delta)));
        }
        if !self.any_delta && !STANDARD_DELTAS.contains(&self.delta) {
            return Err(Error::Config(format!(
                "delta {} is not one of {STANDARD_DELTAS:?}; pass the override to use it",
                self.delta
            )));
        }
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be positive".into()));
        }
        if let Some(a) = self.alpha {
            crate::index::check_alpha(a)?;
        }
        Ok(())
    }
}

/// One line of the results CSV. Numeric fields are empty on error rows.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub query_id: usize,
    pub algorithm: Algorithm,
    pub repetition: usize,
    pub cost: Option<f64>,
    pub travel: Option<f64>,
    pub static_cost: Option<f64>,
    pub runtime_us: Option<u64>,
    pub points_evaluated: Option<u64>,
    pub ratio: Option<f64>,
    pub error: Option<String>,
}

impl ResultRow {
    fn record(&self) -> [String; 8] {
        let f = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let u = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
        [
            self.query_id.to_string(),
            self.algorithm.to_string(),
            f(self.cost),
            f(self.travel),
            f(self.static_cost),
            u(self.runtime_us),
            u(self.points_evaluated),
            f(self.ratio),
        ]
    }
}

pub fn write_results<W: Write>(writer: W, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    w.flush()?;
    Ok(())
}

/// Aggregates of one algorithm's rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSummary {
    pub algorithm: Algorithm,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub rows: usize,
    pub errors: usize,
    pub mean_cost: Option<f64>,
    pub mean_runtime_us: Option<f64>,
    pub median_runtime_us: Option<f64>,
    pub total_points_evaluated: u64,
    pub mean_ratio: Option<f64>,
    pub median_ratio: Option<f64>,
    pub max_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreprocessingSummary {
    pub delta: u32,
    pub frequent: Vec<CategoryId>,
    pub runtime_us: u64,
    pub points_before: usize,
    pub points_after: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// Seed of the experiment configuration; zero for in-memory runs.
    pub seed: u64,
    pub queries: usize,
    pub index_build_us: u64,
    pub preprocessing: Option<PreprocessingSummary>,
    pub algorithms: Vec<AlgorithmSummary>,
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn median(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    Some(if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    })
}

/// Per-algorithm aggregates, in algorithm order.
pub fn summarize(rows: &[ResultRow]) -> Vec<AlgorithmSummary> {
    let mut by: BTreeMap<Algorithm, Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        by.entry(r.algorithm).or_default().push(r);
    }
    by.into_iter()
        .map(|(algorithm, rs)| {
            let costs: Vec<f64> = rs.iter().filter_map(|r| r.cost).collect();
            let times: Vec<f64> = rs.iter().filter_map(|r| r.runtime_us).map(|t| t as f64).collect();
            let ratios: Vec<f64> = rs.iter().filter_map(|r| r.ratio).collect();
            AlgorithmSummary {
                algorithm,
                note: (algorithm == Algorithm::RankOnce)
                    .then(|| "stand-in baseline that ranks each category once from the source".to_string()),
                rows: rs.len(),
                errors: rs.iter().filter(|r| r.error.is_some()).count(),
                mean_cost: mean(&costs),
                mean_runtime_us: mean(&times),
                median_runtime_us: median(&times),
                total_points_evaluated: rs.iter().filter_map(|r| r.points_evaluated).sum(),
                mean_ratio: mean(&ratios),
                median_ratio: median(&ratios),
                max_ratio: ratios.iter().copied().reduce(f64::max),
            }
        })
        .collect()
}

/// The `round(delta·k/100)` most frequent of the `k` categories used by
/// `queries`; ties go to the lower id.
pub fn frequent_categories(queries: &[CamQuery], delta: u32) -> BTreeSet<CategoryId> {
    let mut freq: BTreeMap<CategoryId, usize> = BTreeMap::new();
    for q in queries {
        for &c in &q.categories {
            *freq.entry(c).or_default() += 1;
        }
    }
    let take = (delta.min(100) as f64 * freq.len() as f64 / 100.0).round() as usize;
    let mut ranked: Vec<(CategoryId, usize)> = freq.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.into_iter().take(take).map(|(c, _)| c).collect()
}

/// Output of a suite run.
#[derive(Clone, Debug)]
pub struct SuiteOutcome {
    pub rows: Vec<ResultRow>,
    pub summary: Summary,
    pub prune_report: Option<PruneReport>,
}

impl SuiteOutcome {
    pub fn errors(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }
}

fn elapsed_us(start: Instant) -> u64 {
    (start.elapsed().as_micros() as u64).max(1)
}

struct Run {
    route: Route,
    evaluated: u64,
}

fn run_one(
    space: &IndoorSpace,
    index: &CategoryIndex,
    pruned: Option<&CategoryIndex>,
    query: &CamQuery,
    algorithm: Algorithm,
    opts: &SuiteOptions,
) -> Result<Run> {
    match algorithm {
        Algorithm::Gcnn => gcnn(space, index, query, opts.gcnn).map(|p| Run {
            route: p.route,
            evaluated: p.points_evaluated,
        }),
        Algorithm::GcnnDom => gcnn(space, pruned.unwrap_or(index), query, opts.gcnn).map(|p| Run {
            route: p.route,
            evaluated: p.points_evaluated,
        }),
        Algorithm::RankOnce => rank_once_greedy(space, index, query, opts.rank_k).map(|p| Run {
            route: p.route,
            evaluated: p.points_evaluated,
        }),
        Algorithm::Oracle => exact_route(space, query, opts.oracle_limit).map(|s| Run {
            route: s.route,
            evaluated: s.evaluations,
        }),
    }
}

/// Runs every selected algorithm on every query. Queries run in parallel
/// against immutable index snapshots; rows come back sorted by query id,
/// algorithm and repetition.
pub fn run_suite(space: &IndoorSpace, queries: &[CamQuery], opts: &SuiteOptions) -> Result<SuiteOutcome> {
    opts.validate()?;
    let algorithms: Vec<Algorithm> = opts
        .algorithms
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let queries: Vec<CamQuery> = queries
        .iter()
        .map(|q| CamQuery {
            alpha: opts.alpha.unwrap_or(q.alpha),
            ..q.clone()
        })
        .collect();

    let start = Instant::now();
    let index = CategoryIndex::build(space, opts.fanout)?;
    let index_build_us = elapsed_us(start);

    let mut preprocessing = None;
    let mut prune_report = None;
    let pruned = if algorithms.contains(&Algorithm::GcnnDom) {
        let frequent = frequent_categories(&queries, opts.delta);
        let start = Instant::now();
        let (ix, report) = if frequent.is_empty() {
            (index.clone(), None)
        } else {
            let (ix, report) = preprocess(space, &index, &frequent, opts.prune)?;
            (ix, Some(report))
        };
        let live = |i: &CategoryIndex| frequent.iter().map(|&c| i.live_count(c)).sum();
        preprocessing = Some(PreprocessingSummary {
            delta: opts.delta,
            frequent: frequent.iter().copied().collect(),
            runtime_us: elapsed_us(start),
            points_before: live(&index),
            points_after: live(&ix),
        });
        prune_report = report;
        Some(ix)
    } else {
        None
    };

    let mut rows: Vec<ResultRow> = queries
        .par_iter()
        .enumerate()
        .flat_map_iter(|(qid, q)| {
            let mut out = Vec::new();
            for &alg in &algorithms {
                for rep in 0..opts.repetitions {
                    let start = Instant::now();
                    let result = run_one(space, &index, pruned.as_ref(), q, alg, opts);
                    let runtime = elapsed_us(start);
                    out.push(match result {
                        Ok(run) => ResultRow {
                            query_id: qid,
                            algorithm: alg,
                            repetition: rep,
                            cost: Some(run.route.cost(q.alpha)),
                            travel: Some(run.route.travel),
                            static_cost: Some(run.route.static_cost),
                            runtime_us: Some(runtime),
                            points_evaluated: Some(run.evaluated),
                            ratio: None,
                            error: None,
                        },
                        Err(e) => {
                            warn!("query {qid} {alg}: {e}");
                            ResultRow {
                                query_id: qid,
                                algorithm: alg,
                                repetition: rep,
                                cost: None,
                                travel: None,
                                static_cost: None,
                                runtime_us: None,
                                points_evaluated: None,
                                ratio: None,
                                error: Some(e.to_string()),
                            }
                        }
                    });
                }
            }
            out
        })
        .collect();
    rows.sort_by_key(|r| (r.query_id, r.algorithm, r.repetition));

    let optimal: BTreeMap<usize, f64> = rows
        .iter()
        .filter(|r| r.algorithm == Algorithm::Oracle && r.repetition == 0)
        .filter_map(|r| r.cost.map(|c| (r.query_id, c)))
        .collect();
    for r in rows.iter_mut() {
        if let (Some(cost), Some(&opt)) = (r.cost, optimal.get(&r.query_id)) {
            match approximation_ratio(cost, opt) {
                Ok(ratio) if ratio < 1.0 && ratio > 1.0 - RATIO_ROUNDING => r.ratio = Some(1.0),
                Ok(ratio) => {
                    if ratio < 1.0 {
                        warn!("query {} {}: ratio {ratio} below 1", r.query_id, r.algorithm);
                    }
                    r.ratio = Some(ratio);
                }
                Err(e) => warn!("query {}: {e}", r.query_id),
            }
        }
    }

    let summary = Summary {
        seed: 0,
        queries: queries.len(),
        index_build_us,
        preprocessing,
        algorithms: summarize(&rows),
    };
    Ok(SuiteOutcome {
        rows,
        summary,
        prune_report,
    })
}

/// File-based experiment description, loadable from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub venue: PathBuf,
    /// Objects CSV; when absent the venue's own objects are used.
    #[serde(default)]
    pub objects: Option<PathBuf>,
    pub queries: PathBuf,
    pub output: PathBuf,
    /// Summary JSON; defaults to the output path with a `.summary.json` suffix.
    #[serde(default)]
    pub summary: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, flatten)]
    pub suite: SuiteOptions,
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_reader(File::open(path)?)?)
    }

    pub fn summary_path(&self) -> PathBuf {
        self.summary.clone().unwrap_or_else(|| {
            let mut s = self.output.clone().into_os_string();
            s.push(".summary.json");
            PathBuf::from(s)
        })
    }
}

/// Loads the inputs, runs the suite, writes the CSV and the summary.
pub fn run_experiment(config: &ExperimentConfig) -> Result<SuiteOutcome> {
    let mut venue = load_venue(&config.venue)?;
    if let Some(objects) = &config.objects {
        venue = venue.with_points(load_objects(objects)?);
    }
    let queries = crate::routing::load_queries(&config.queries)?;
    let space = IndoorSpace::new(venue)?;
    let mut outcome = run_suite(&space, &queries, &config.suite)?;
    outcome.summary.seed = config.seed;
    write_results(BufWriter::new(File::create(&config.output)?), &outcome.rows)?;
    let mut w = BufWriter::new(File::create(config.summary_path())?);
    serde_json::to_writer_pretty(&mut w, &outcome.summary)?;
    w.write_all(b"\n")?;
    w.flush()?;
    info!(
        "wrote {} rows to {} ({} errors)",
        outcome.rows.len(),
        config.output.display(),
        outcome.errors()
    );
    Ok(outcome)
}
