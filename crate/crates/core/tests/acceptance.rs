//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use camroute::bench::{run_experiment, run_suite, Algorithm, ExperimentConfig, SuiteOptions, SuiteOutcome};
use camroute::dominance::{prune_instance, LocalPoint, PartitionInstance, PruneOptions};
use camroute::index::{QueryContext, DEFAULT_FANOUT};
use camroute::oracle::{exact_route, naive_exact_route};
use camroute::routing::{point_score, save_queries};
use camroute::venue::io::{save_objects, save_venue};
use camroute::venue::{IndoorPoint, Partition, PartitionKind, Position, Rect};
use camroute::workload::{build_workload, Bucket, Workload, WorkloadSpec};
use camroute::{CamQuery, CategoryId, CategoryIndex, DoorId, IndoorSpace, Location, PartitionId, PointId, Venue};

type Check<'a> = Box<dyn Fn() -> Verdict + 'a>;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn random_location(rng: &mut ChaCha8Rng, venue: &Venue) -> Location {
    let p = &venue.partitions()[rng.random_range(0..venue.partitions().len())];
    let b = p.bounds;
    Location::in_partition(
        rng.random_range(b.x_min..=b.x_max),
        rng.random_range(b.y_min..=b.y_max),
        p.floor,
        p.id,
    )
}

/// Venues with varied door counts, object placement and category density.
fn test_specs() -> Vec<WorkloadSpec> {
    let mut out = Vec::new();
    for seed in 1..=4 {
        out.push(WorkloadSpec {
            seed,
            ..Default::default()
        });
        out.push(WorkloadSpec {
            seed,
            doors_per_room: 2,
            shops: None,
            stockists: None,
            ..Default::default()
        });
        out.push(WorkloadSpec {
            seed,
            floors: 2,
            rooms_per_floor: 6,
            bucket: Bucket::S,
            scale: 0.05,
            shops: None,
            stockists: None,
            ..Default::default()
        });
    }
    out
}

fn default_workload() -> (IndoorSpace, Workload) {
    let w = build_workload(&WorkloadSpec::default()).expect("default workload");
    (IndoorSpace::new(w.venue.clone()).expect("default venue"), w)
}

fn cnn_equivalence() -> Verdict {
    let mut trials = 0;
    let mut mismatches = Vec::new();
    for spec in test_specs() {
        let w = build_workload(&spec).expect("workload");
        let space = IndoorSpace::new(w.venue).expect("venue");
        let index = CategoryIndex::build(&space, DEFAULT_FANOUT).expect("index");
        let cats = space.venue().category_ids();
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed * 1000 + spec.doors_per_room as u64);
        for _ in 0..100 {
            let v = space.venue();
            let (s, t, from) = (
                random_location(&mut rng, v),
                random_location(&mut rng, v),
                random_location(&mut rng, v),
            );
            let alpha = if rng.random_bool(0.2) {
                [0.0, 1.0][rng.random_range(0..2)]
            } else {
                rng.random_range(0.0..=1.0)
            };
            let c = cats[rng.random_range(0..cats.len())];
            let ctx = QueryContext::new(s, t, alpha).expect("context");
            let hit = index.cnn_at(&space, &from, c, &ctx).expect("cnn");
            let best = v
                .points()
                .iter()
                .filter(|p| p.category == c)
                .map(|p| (point_score(&space, &ctx, &from, p.id).expect("score"), p.id))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                .expect("non-empty category");
            trials += 1;
            if hit.id != best.1 {
                mismatches.push(format!(
                    "seed {} cat {}: index {} vs scan {}",
                    spec.seed, c.0, hit.id.0, best.1 .0
                ));
            }
        }
    }
    verdict(
        trials >= 1000 && mismatches.is_empty(),
        format!(
            "{trials} trials, {} mismatches {:?}",
            mismatches.len(),
            mismatches.iter().take(3).collect::<Vec<_>>()
        ),
    )
}

/// Keeps at most `per_category` objects of each of the first `m` categories.
fn thin(venue: &Venue, m: u32, per_category: usize, rng: &mut ChaCha8Rng) -> Vec<IndoorPoint> {
    let mut by_cat: BTreeMap<CategoryId, Vec<IndoorPoint>> = BTreeMap::new();
    for p in venue.points().iter().filter(|p| p.category.0 < m) {
        by_cat.entry(p.category).or_default().push(p.clone());
    }
    let mut out = Vec::new();
    for (_, mut pts) in by_cat {
        let keep = rng.random_range(1..=per_category.min(pts.len()));
        while pts.len() > keep {
            pts.swap_remove(rng.random_range(0..pts.len()));
        }
        out.extend(pts);
    }
    out.sort_by_key(|p| p.id);
    out
}

fn exact_self_consistency() -> Verdict {
    let mut instances = 0;
    let mut worst: f64 = 0.0;
    let mut bitwise = 0;
    let mut failures = Vec::new();
    for seed in 0..25u64 {
        let spec = WorkloadSpec {
            seed,
            floors: 2,
            rooms_per_floor: 4,
            categories: 3,
            bucket: Bucket::XS,
            scale: 0.2,
            shops: None,
            stockists: None,
            queries: 1,
            query_sizes: vec![2],
            ..Default::default()
        };
        let w = build_workload(&spec).expect("workload");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..8 {
            let m = rng.random_range(1..=3u32);
            let venue = w.venue.clone().with_points(thin(&w.venue, m, 5, &mut rng));
            let space = IndoorSpace::new(venue).expect("venue");
            let query = CamQuery {
                source: random_location(&mut rng, space.venue()),
                target: random_location(&mut rng, space.venue()),
                categories: (0..m).map(CategoryId).collect(),
                alpha: [0.0, 0.5, 1.0, rng.random_range(0.0..1.0)][rng.random_range(0..4)],
            };
            let dp = exact_route(&space, &query, 3).expect("dp");
            let naive = naive_exact_route(&space, &query).expect("naive");
            instances += 1;
            if dp.objective.to_bits() == naive.objective.to_bits() {
                bitwise += 1;
            }
            let rel = (dp.objective - naive.objective).abs() / naive.objective.abs().max(1e-300);
            worst = worst.max(rel);
            if rel > 1e-9 {
                failures.push((seed, dp.objective, naive.objective));
            }
        }
    }
    verdict(
        instances >= 200 && failures.is_empty(),
        format!(
            "{instances} instances, {bitwise} bitwise equal, worst relative gap {worst:.1e}, failures {failures:?}"
        ),
    )
}

/// Default workload with every algorithm and all frequent categories pruned.
fn default_suite(space: &IndoorSpace, w: &Workload, delta: u32, oracle: bool) -> SuiteOutcome {
    let mut algorithms = vec![Algorithm::Gcnn, Algorithm::GcnnDom];
    if oracle {
        algorithms.push(Algorithm::Oracle);
    }
    let opts = SuiteOptions {
        algorithms,
        delta,
        ..Default::default()
    };
    run_suite(space, &w.queries, &opts).expect("suite")
}

fn mean_ratio(out: &SuiteOutcome, a: Algorithm) -> f64 {
    out.summary
        .algorithms
        .iter()
        .find(|s| s.algorithm == a)
        .and_then(|s| s.mean_ratio)
        .unwrap_or(f64::INFINITY)
}

fn approximation(out: &SuiteOutcome, w: &Workload, space: &IndoorSpace) -> Verdict {
    let (g, d) = (mean_ratio(out, Algorithm::Gcnn), mean_ratio(out, Algorithm::GcnnDom));
    let max_cat = space
        .venue()
        .category_ids()
        .into_iter()
        .map(|c| space.venue().points().iter().filter(|p| p.category == c).count())
        .max()
        .unwrap_or(0);
    verdict(
        out.errors() == 0 && g <= 1.20 && d <= 1.25,
        format!(
            "{} partitions, {} queries, at most {max_cat} objects per category: gcnn {g:.4} (<= 1.20), gcnn-dom {d:.4} (<= 1.25)",
            space.venue().partitions().len(),
            w.queries.len()
        ),
    )
}

fn pruning_fidelity(out: &SuiteOutcome) -> Verdict {
    let gap = mean_ratio(out, Algorithm::GcnnDom) - mean_ratio(out, Algorithm::Gcnn);
    verdict(
        gap <= 0.05,
        format!("gcnn-dom minus gcnn mean ratio {gap:.4} (<= 0.05)"),
    )
}

#[derive(Serialize)]
struct SoundnessFixture {
    seed: u64,
    doors: Vec<(u32, f64, f64)>,
    /// `(id, category, x, y, static score)`.
    points: Vec<(u32, u32, f64, f64, f64)>,
    best_all: f64,
    best_surviving: f64,
}

/// Cheapest `entry -> a -> b -> exit` over the given objects, both orders,
/// every ordered door pair, with α = 0.5.
fn best_two_stop(doors: &[(u32, f64, f64)], pts: &[(u32, u32, f64, f64, f64)]) -> BTreeMap<(u32, u32, u32), f64> {
    let d = |ax: f64, ay: f64, bx: f64, by: f64| ((ax - bx).powi(2) + (ay - by).powi(2)).sqrt();
    let mut best = BTreeMap::new();
    for &(ei, ex, ey) in doors {
        for &(oi, ox, oy) in doors {
            for first in 0..2u32 {
                let mut b = f64::INFINITY;
                for p in pts.iter().filter(|p| p.1 == first) {
                    for q in pts.iter().filter(|q| q.1 == 1 - first) {
                        let travel = d(ex, ey, p.2, p.3) + d(p.2, p.3, q.2, q.3) + d(q.2, q.3, ox, oy);
                        b = f64::min(b, 0.5 * travel + 0.5 * (p.4 + q.4));
                    }
                }
                best.insert((ei, oi, first), b);
            }
        }
    }
    best
}

fn pairwise_soundness() -> Verdict {
    let dump = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("soundness-exceptions");
    let _ = fs::remove_dir_all(&dump);
    let n = 600;
    let mut exceptions = 0;
    let mut eliminated = 0;
    for seed in 0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (w, h) = (rng.random_range(5.0..30.0), rng.random_range(5.0..30.0));
        let side = |rng: &mut ChaCha8Rng| -> (f64, f64) {
            match rng.random_range(0..4) {
                0 => (0.0, rng.random_range(0.0..h)),
                1 => (w, rng.random_range(0.0..h)),
                2 => (rng.random_range(0.0..w), 0.0),
                _ => (rng.random_range(0.0..w), h),
            }
        };
        let doors: Vec<(u32, f64, f64)> = (0..2)
            .map(|i| {
                let (x, y) = side(&mut rng);
                (i, x, y)
            })
            .collect();
        let mut points = Vec::new();
        for c in 0..2 {
            for _ in 0..rng.random_range(1..=15) {
                let id = points.len() as u32;
                points.push((
                    id,
                    c,
                    rng.random_range(0.0..w),
                    rng.random_range(0.0..h),
                    rng.random_range(0.0..(w + h)),
                ));
            }
        }
        let partition = Partition {
            id: PartitionId(0),
            floor: 0,
            upper_floor: None,
            bounds: Rect::new(0.0, 0.0, w, h),
            kind: PartitionKind::Room,
            door_ids: vec![DoorId(0), DoorId(1)],
        };
        let instance = PartitionInstance::new(
            partition,
            doors
                .iter()
                .map(|&(i, x, y)| (DoorId(i), Position::new(x, y, 0)))
                .collect(),
            points
                .iter()
                .map(|&(i, c, x, y, s)| LocalPoint {
                    id: PointId(i),
                    category: CategoryId(c),
                    position: Position::new(x, y, 0),
                    score: s,
                })
                .collect(),
        );
        let cats: BTreeSet<CategoryId> = [CategoryId(0), CategoryId(1)].into();
        let result = prune_instance(&instance, &cats, PruneOptions::default()).expect("prune");
        let kept: BTreeSet<u32> = result.after.values().flatten().map(|p| p.0).collect();
        eliminated += points.len() - kept.len();
        let surviving: Vec<_> = points.iter().copied().filter(|p| kept.contains(&p.0)).collect();
        let all = best_two_stop(&doors, &points);
        let after = best_two_stop(&doors, &surviving);
        let worst = all
            .iter()
            .map(|(k, v)| (after[k], *v))
            .max_by(|a, b| (a.0 - a.1).total_cmp(&(b.0 - b.1)))
            .expect("door pairs");
        if worst.0 > worst.1 + 1e-9 * worst.1.max(1.0) {
            exceptions += 1;
            fs::create_dir_all(&dump).expect("fixture dir");
            let fixture = SoundnessFixture {
                seed,
                doors: doors.clone(),
                points: points.clone(),
                best_all: worst.1,
                best_surviving: worst.0,
            };
            fs::write(
                dump.join(format!("seed-{seed}.json")),
                serde_json::to_string_pretty(&fixture).expect("json"),
            )
            .expect("fixture");
        }
    }
    let rate = (n as usize - exceptions) as f64 / n as f64;
    let where_ = if exceptions > 0 {
        format!(", fixtures in {}", dump.display())
    } else {
        String::new()
    };
    verdict(
        rate >= 0.99,
        format!(
            "{n} instances, {eliminated} objects eliminated, {exceptions} exceptions ({:.2}% sound){where_}",
            rate * 100.0
        ),
    )
}

fn work(out: &SuiteOutcome, a: Algorithm) -> BTreeMap<usize, u64> {
    out.rows
        .iter()
        .filter(|r| r.algorithm == a)
        .map(|r| (r.query_id, r.points_evaluated.unwrap_or(u64::MAX)))
        .collect()
}

fn work_reduction(out: &SuiteOutcome) -> Verdict {
    let (g, d) = (work(out, Algorithm::Gcnn), work(out, Algorithm::GcnnDom));
    let strict = g.iter().filter(|(q, w)| d[q] < **w).count();
    let (tg, td): (u64, u64) = (g.values().sum(), d.values().sum());
    let runtime = |a: Algorithm| {
        out.summary
            .algorithms
            .iter()
            .find(|s| s.algorithm == a)
            .and_then(|s| s.mean_runtime_us)
            .unwrap_or(0.0)
    };
    verdict(
        strict == g.len() && tg as f64 >= 2.0 * td as f64,
        format!(
            "strictly lower on {strict}/{} queries, total {tg} -> {td} ({:.2}x); mean runtime {:.0}us -> {:.0}us",
            g.len(),
            tg as f64 / td as f64,
            runtime(Algorithm::Gcnn),
            runtime(Algorithm::GcnnDom)
        ),
    )
}

/// `n` is the largest category size among the query's categories.
fn work_bound(out: &SuiteOutcome, w: &Workload, space: &IndoorSpace) -> Verdict {
    const C: u64 = 0;
    let sizes: BTreeMap<CategoryId, u64> = space.venue().points().iter().fold(BTreeMap::new(), |mut m, p| {
        *m.entry(p.category).or_default() += 1;
        m
    });
    let g = work(out, Algorithm::Gcnn);
    let mut worst: f64 = 0.0;
    let mut violations = 0;
    for (i, q) in w.queries.iter().enumerate() {
        let m = q.categories.len() as u64;
        let n = q.categories.iter().map(|c| sizes[c]).max().unwrap_or(0);
        let bound = n * m * m + C * m;
        worst = worst.max(g[&i] as f64 / bound as f64);
        if g[&i] > bound {
            violations += 1;
        }
    }
    verdict(
        violations == 0,
        format!(
            "evaluations <= n*m^2 + {C}*m on every query, worst use {:.1}% of the bound",
            worst * 100.0
        ),
    )
}

fn metric_properties() -> Verdict {
    let mut worst_triangle: f64 = 0.0;
    let mut asym = 0;
    let mut venues = 0;
    for spec in test_specs().into_iter().step_by(2) {
        let w = build_workload(&spec).expect("workload");
        let space = IndoorSpace::new(w.venue).expect("venue");
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed + 99);
        for _ in 0..10_000 {
            let [a, b, c] = [(); 3].map(|_| {
                space
                    .resolve(&random_location(&mut rng, space.venue()))
                    .expect("resolve")
            });
            let (ab, ba) = (space.indoor_distance(&a, &b), space.indoor_distance(&b, &a));
            if ab.to_bits() != ba.to_bits() {
                asym += 1;
            }
            let ac = space.indoor_distance(&a, &c);
            let bc = space.indoor_distance(&b, &c);
            worst_triangle = worst_triangle.max(ac - (ab + bc));
        }
        venues += 1;
    }
    verdict(
        asym == 0 && worst_triangle <= 1e-9,
        format!("{venues} venues x 10000 triples, {asym} asymmetric, worst triangle excess {worst_triangle:.1e}"),
    )
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().expect("tempdir");
    let w = build_workload(&WorkloadSpec::default()).expect("workload");
    let (venue, objects, queries) = (
        dir.path().join("venue.json"),
        dir.path().join("objects.csv"),
        dir.path().join("queries.jsonl"),
    );
    save_venue(&venue, &w.venue.clone().with_points(Vec::new())).expect("venue");
    save_objects(&objects, w.venue.points()).expect("objects");
    save_queries(&queries, &w.queries).expect("queries");
    let run = |name: &str| -> String {
        let config = ExperimentConfig {
            venue: venue.clone(),
            objects: Some(objects.clone()),
            queries: queries.clone(),
            output: dir.path().join(name),
            summary: None,
            seed: 7,
            suite: SuiteOptions {
                algorithms: vec![
                    Algorithm::Gcnn,
                    Algorithm::GcnnDom,
                    Algorithm::RankOnce,
                    Algorithm::Oracle,
                ],
                repetitions: 2,
                ..Default::default()
            },
        };
        run_experiment(&config).expect("experiment");
        let text = fs::read_to_string(&config.output).expect("csv");
        // Drop runtime_us, the sixth column.
        text.lines()
            .map(|l| {
                l.split(',')
                    .enumerate()
                    .filter(|(i, _)| *i != 5)
                    .map(|(_, f)| f)
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect::<Vec<_>>()
            .join("\n")
    };
    let (a, b) = (run("a.csv"), run("b.csv"));
    verdict(
        a == b,
        format!(
            "{} lines, identical excluding runtime_us: {}",
            a.lines().count(),
            a == b
        ),
    )
}

fn delta_monotonicity(space: &IndoorSpace, w: &Workload) -> Verdict {
    let totals: Vec<u64> = [0, 50, 100]
        .into_iter()
        .map(|d| {
            work(&default_suite(space, w, d, false), Algorithm::GcnnDom)
                .values()
                .sum()
        })
        .collect();
    verdict(
        totals.windows(2).all(|p| p[1] <= p[0]),
        format!("gcnn-dom points evaluated at delta 0/50/100: {totals:?}"),
    )
}

fn main() -> ExitCode {
    let (space, w) = default_workload();
    let suite = default_suite(&space, &w, 100, true);
    let criteria: Vec<(&str, Check<'_>)> = vec![
        ("cnn oracle equivalence", Box::new(cnn_equivalence)),
        ("exact oracle self-consistency", Box::new(exact_self_consistency)),
        ("approximation quality", Box::new(|| approximation(&suite, &w, &space))),
        ("pruning fidelity", Box::new(|| pruning_fidelity(&suite))),
        ("pairwise pruning soundness", Box::new(pairwise_soundness)),
        ("work reduction", Box::new(|| work_reduction(&suite))),
        ("gcnn work bound", Box::new(|| work_bound(&suite, &w, &space))),
        ("metric properties", Box::new(metric_properties)),
        ("determinism", Box::new(determinism)),
        ("delta monotonicity", Box::new(|| delta_monotonicity(&space, &w))),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = check();
        failed += usize::from(!v.pass);
        println!(
            "{} {:>2} {name}: {} [{:.1}s]",
            if v.pass { "PASS" } else { "FAIL" },
            i + 1,
            v.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
