use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};

use super::{route_cost, CamQuery, Route};
use crate::error::Result;
use crate::index::{CategoryIndex, ScoringContext};
use crate::venue::{CategoryId, IndoorSpace, PointId, Site};

/// Priority used when a partial route is extended by one object `p`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtensionKey {
    /// `Cost(R) + dist(p_s, p) + dist(p, p_t)`.
    #[default]
    WithEndpoints,
    /// `Cost(R)` alone. Only meant for sensitivity comparisons.
    CostOnly,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GcnnConfig {
    pub key: ExtensionKey,
}

/// One extension offered in a round.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate {
    pub category: CategoryId,
    pub point: PointId,
    /// Cost of the extended partial route.
    pub cost: f64,
    pub key: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RoundTrace {
    pub candidates: Vec<Candidate>,
}

impl RoundTrace {
    /// The candidate that wins the round under the queue order.
    pub fn winner(&self) -> Option<&Candidate> {
        self.candidates.iter().min_by(|a, b| {
            a.key
                .total_cmp(&b.key)
                .then(a.category.cmp(&b.category))
                .then(a.point.cmp(&b.point))
        })
    }
}

/// Output of a planner run.
#[derive(Clone, Debug, PartialEq)]
pub struct Plan {
    pub route: Route,
    /// Number of object scores computed by category nearest neighbour searches.
    pub points_evaluated: u64,
    pub rounds: Vec<RoundTrace>,
}

#[derive(Clone, Debug)]
struct Partial {
    stops: Vec<usize>,
    covered: BTreeSet<CategoryId>,
    travel: f64,
    static_sum: f64,
    end: Site,
}

struct Entry {
    key: f64,
    tag: Option<(CategoryId, PointId)>,
    route: Partial,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl Ord for Entry {
    // Reversed so `BinaryHeap` pops the smallest key, then the lowest
    // category id, then the lowest point id.
    fn cmp(&self, other: &Self) -> Ordering {
        other.key.total_cmp(&self.key).then_with(|| other.tag.cmp(&self.tag))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Greedy planner: repeatedly dequeue the best partial route, discard the
/// rest of the queue, and enqueue one extension per uncovered category using
/// that category's nearest neighbour from the route's current end.
pub fn gcnn(space: &IndoorSpace, index: &CategoryIndex, query: &CamQuery, config: GcnnConfig) -> Result<Plan> {
    query.validate(index)?;
    let source = space.resolve(&query.source)?;
    let target = space.resolve(&query.target)?;
    let ctx = ScoringContext::from_sites(space, &source, &target, query.alpha);
    let alpha = query.alpha;
    let wanted = query.sorted_categories();
    let points = space.venue().points();

    let mut queue = BinaryHeap::new();
    queue.push(Entry {
        key: 0.0,
        tag: None,
        route: Partial {
            stops: Vec::new(),
            covered: BTreeSet::new(),
            travel: 0.0,
            static_sum: 0.0,
            end: source,
        },
    });

    let mut evaluated = 0u64;
    let mut rounds = Vec::new();
    let mut finished = None;
    while let Some(Entry { route: best, .. }) = queue.pop() {
        queue.clear();
        let uncovered: Vec<CategoryId> = wanted.iter().copied().filter(|c| !best.covered.contains(c)).collect();
        if uncovered.is_empty() {
            finished = Some(best);
            break;
        }
        let from = if best.stops.is_empty() {
            ctx.source.clone()
        } else {
            space.field(&best.end)
        };
        let mut round = RoundTrace::default();
        for c in uncovered {
            let (hit, trace) = index.cnn(&ctx, &from, c)?;
            evaluated += trace.evaluated;
            let site = space.point_site(hit.point);
            let travel = best.travel + space.field_distance(&from, &site);
            let static_sum = best.static_sum + points[hit.point].static_score;
            let cost = route_cost(travel, static_sum, alpha);
            let key = match config.key {
                ExtensionKey::WithEndpoints => {
                    cost + space.field_distance(&ctx.source, &site) + space.field_distance(&ctx.target, &site)
                }
                ExtensionKey::CostOnly => cost,
            };
            round.candidates.push(Candidate {
                category: c,
                point: hit.id,
                cost,
                key,
            });
            let mut stops = best.stops.clone();
            stops.push(hit.point);
            let mut covered = best.covered.clone();
            covered.insert(c);
            queue.push(Entry {
                key,
                tag: Some((c, hit.id)),
                route: Partial {
                    stops,
                    covered,
                    travel,
                    static_sum,
                    end: site,
                },
            });
        }
        rounds.push(round);
    }

    let done = finished.expect("every round enqueues at least one extension");
    Ok(Plan {
        route: Route::assemble(space, source, &done.stops, Some(target)),
        points_evaluated: evaluated,
        rounds,
    })
}
