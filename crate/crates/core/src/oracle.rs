//! Exact brute-force planner and the rank-once greedy baseline.
//!
//! The exact planner enumerates every category visiting order and solves
//! each order by dynamic programming over layers of candidate objects.
//! A naive enumeration over orders × object tuples is kept for
//! cross-checking on tiny instances; both accumulate the route objective
//! with the same per-step arithmetic, so their optima agree bit for bit.

use std::collections::BTreeMap;

use itertools::Itertools;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::index::{check_alpha, CategoryIndex, ScoringContext};
use crate::routing::{CamQuery, Plan, Route};
use crate::venue::{CategoryId, IndoorSpace, PointId, Site};

pub const DEFAULT_ORACLE_LIMIT: usize = 7;
pub const DEFAULT_RANK_K: usize = 8;

/// Optimal route found by exhaustive search.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactSolution {
    pub route: Route,
    pub order: Vec<CategoryId>,
    /// Objective as accumulated by the search: for each stop,
    /// `α·dist(prev, p) + (1−α)·s(p)`, plus `α·dist(last, p_t)`.
    pub objective: f64,
    /// Number of layer transitions evaluated.
    pub evaluations: u64,
}

/// Dynamic programming table for one fixed category order.
#[derive(Clone, Debug, PartialEq)]
pub struct LayeredPlan {
    pub order: Vec<CategoryId>,
    /// Candidate objects of each layer, ascending id.
    pub layers: Vec<Vec<PointId>>,
    /// `table[k][j]`: cheapest prefix cost from the source ending at
    /// `layers[k][j]`.
    pub table: Vec<Vec<f64>>,
    pub objective: f64,
    pub stops: Vec<PointId>,
    pub evaluations: u64,
}

/// Distances among the source, the target and every object of the query
/// categories.
struct QueryTable {
    alpha: f64,
    source: Site,
    target: Site,
    /// Venue point index of each local candidate.
    points: Vec<usize>,
    scores: Vec<f64>,
    members: BTreeMap<CategoryId, Vec<usize>>,
    from_source: Vec<f64>,
    to_target: Vec<f64>,
    pair: Vec<f64>,
}

impl QueryTable {
    fn new(space: &IndoorSpace, query: &CamQuery) -> Result<Self> {
        check_alpha(query.alpha)?;
        if query.categories.is_empty() {
            return Err(Error::InvalidQuery("empty category set".into()));
        }
        let cats = query.sorted_categories();
        if cats.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidQuery("repeated category".into()));
        }
        let source = space.resolve(&query.source)?;
        let target = space.resolve(&query.target)?;
        let venue = space.venue();
        let mut members: BTreeMap<CategoryId, Vec<usize>> = BTreeMap::new();
        let mut points = Vec::new();
        for &c in &cats {
            let mut idx: Vec<usize> = venue
                .points()
                .iter()
                .enumerate()
                .filter(|(_, p)| p.category == c)
                .map(|(i, _)| i)
                .collect();
            if idx.is_empty() {
                return Err(Error::EmptyCategory(c));
            }
            idx.sort_by_key(|&i| venue.points()[i].id);
            let local: Vec<usize> = (points.len()..points.len() + idx.len()).collect();
            points.extend(idx);
            members.insert(c, local);
        }
        let n = points.len();
        let sites: Vec<Site> = points.iter().map(|&i| space.point_site(i)).collect();
        let scores = points.iter().map(|&i| venue.points()[i].static_score).collect();
        let from_source = sites.iter().map(|s| space.indoor_distance(&source, s)).collect();
        let to_target = sites.iter().map(|s| space.indoor_distance(s, &target)).collect();
        let mut pair = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = space.indoor_distance(&sites[i], &sites[j]);
                pair[i * n + j] = d;
                pair[j * n + i] = d;
            }
        }
        Ok(QueryTable {
            alpha: query.alpha,
            source,
            target,
            points,
            scores,
            members,
            from_source,
            to_target,
            pair,
        })
    }

    #[inline]
    fn step(&self, dist: f64, to: usize) -> f64 {
        self.alpha * dist + (1.0 - self.alpha) * self.scores[to]
    }

    #[inline]
    fn between(&self, a: usize, b: usize) -> f64 {
        self.pair[a * self.points.len() + b]
    }

    fn check_order(&self, order: &[CategoryId]) -> Result<()> {
        let mut sorted = order.to_vec();
        sorted.sort();
        let expected: Vec<CategoryId> = self.members.keys().copied().collect();
        if sorted != expected {
            return Err(Error::InvalidQuery(format!(
                "order {order:?} is not a permutation of the query categories"
            )));
        }
        Ok(())
    }

    /// Layered DP for one order. Returns the table and the local stop indices.
    fn solve(&self, space: &IndoorSpace, order: &[CategoryId]) -> (LayeredPlan, Vec<usize>) {
        let layers: Vec<&Vec<usize>> = order.iter().map(|c| &self.members[c]).collect();
        let mut table: Vec<Vec<f64>> = Vec::with_capacity(layers.len());
        let mut back: Vec<Vec<usize>> = Vec::with_capacity(layers.len());
        let mut evaluations = 0u64;

        table.push(layers[0].iter().map(|&p| self.step(self.from_source[p], p)).collect());
        back.push(vec![usize::MAX; layers[0].len()]);
        evaluations += layers[0].len() as u64;
        for k in 1..layers.len() {
            let prev = &table[k - 1];
            let mut row = Vec::with_capacity(layers[k].len());
            let mut row_back = Vec::with_capacity(layers[k].len());
            for &p in layers[k] {
                let mut best = f64::INFINITY;
                let mut arg = 0;
                for (j, &q) in layers[k - 1].iter().enumerate() {
                    let v = prev[j] + self.step(self.between(q, p), p);
                    if v < best {
                        best = v;
                        arg = j;
                    }
                }
                evaluations += layers[k - 1].len() as u64;
                row.push(best);
                row_back.push(arg);
            }
            table.push(row);
            back.push(row_back);
        }
        let last = layers.len() - 1;
        let mut objective = f64::INFINITY;
        let mut arg = 0;
        for (j, &q) in layers[last].iter().enumerate() {
            let v = table[last][j] + self.alpha * self.to_target[q];
            if v < objective {
                objective = v;
                arg = j;
            }
        }
        evaluations += layers[last].len() as u64;

        let mut local = vec![0; layers.len()];
        let mut j = arg;
        for k in (0..layers.len()).rev() {
            local[k] = layers[k][j];
            j = back[k][j];
        }
        let ids =
            |l: &[usize]| -> Vec<PointId> { l.iter().map(|&p| space.venue().points()[self.points[p]].id).collect() };
        let plan = LayeredPlan {
            order: order.to_vec(),
            layers: layers.iter().map(|l| ids(l)).collect(),
            table,
            objective,
            stops: ids(&local),
            evaluations,
        };
        (plan, local)
    }

    fn route(&self, space: &IndoorSpace, local: &[usize]) -> Route {
        let stops: Vec<usize> = local.iter().map(|&p| self.points[p]).collect();
        Route::assemble(space, self.source, &stops, Some(self.target))
    }
}

/// Dynamic programming table and optimum for one fixed visiting order.
pub fn layered_plan(space: &IndoorSpace, query: &CamQuery, order: &[CategoryId]) -> Result<LayeredPlan> {
    let table = QueryTable::new(space, query)?;
    table.check_order(order)?;
    Ok(table.solve(space, order).0)
}

/// Cheapest route that visits the query categories exactly in `order`.
pub fn fixed_order_best(space: &IndoorSpace, query: &CamQuery, order: &[CategoryId]) -> Result<ExactSolution> {
    let table = QueryTable::new(space, query)?;
    table.check_order(order)?;
    let (plan, local) = table.solve(space, order);
    Ok(ExactSolution {
        route: table.route(space, &local),
        order: plan.order,
        objective: plan.objective,
        evaluations: plan.evaluations,
    })
}

/// Globally optimal route: the best fixed-order solution over every
/// permutation. Equal objectives resolve to the lexicographically smallest
/// order.
pub fn exact_route(space: &IndoorSpace, query: &CamQuery, limit: usize) -> Result<ExactSolution> {
    if query.categories.len() > limit {
        return Err(Error::OracleScale {
            categories: query.categories.len(),
            limit,
        });
    }
    let table = QueryTable::new(space, query)?;
    let cats = query.sorted_categories();
    let orders: Vec<Vec<CategoryId>> = cats.iter().copied().permutations(cats.len()).collect();
    let solved: Vec<(LayeredPlan, Vec<usize>)> = orders.par_iter().map(|order| table.solve(space, order)).collect();
    let evaluations = solved.iter().map(|(p, _)| p.evaluations).sum();
    let (best, local) = solved
        .into_iter()
        .enumerate()
        .min_by(|(i, (a, _)), (j, (b, _))| a.objective.total_cmp(&b.objective).then(i.cmp(j)))
        .map(|(_, s)| s)
        .expect("at least one permutation");
    Ok(ExactSolution {
        route: table.route(space, &local),
        order: best.order,
        objective: best.objective,
        evaluations,
    })
}

/// Exhaustive search over every order and every object tuple. Exponential
/// in the number of categories; meant for cross-checking tiny instances.
pub fn naive_exact_route(space: &IndoorSpace, query: &CamQuery) -> Result<ExactSolution> {
    let table = QueryTable::new(space, query)?;
    let cats = query.sorted_categories();
    let mut best: Option<(f64, Vec<CategoryId>, Vec<usize>)> = None;
    let mut evaluations = 0u64;
    for order in cats.iter().copied().permutations(cats.len()) {
        let layers: Vec<&Vec<usize>> = order.iter().map(|c| &table.members[c]).collect();
        for tuple in layers.iter().map(|l| l.iter().copied()).multi_cartesian_product() {
            let mut acc = table.step(table.from_source[tuple[0]], tuple[0]);
            for w in tuple.windows(2) {
                acc += table.step(table.between(w[0], w[1]), w[1]);
            }
            let total = acc + table.alpha * table.to_target[tuple[tuple.len() - 1]];
            evaluations += tuple.len() as u64;
            if best.as_ref().is_none_or(|(b, _, _)| total < *b) {
                best = Some((total, order.clone(), tuple));
            }
        }
    }
    let (objective, order, local) = best.expect("non-empty categories");
    Ok(ExactSolution {
        route: table.route(space, &local),
        order,
        objective,
        evaluations,
    })
}

/// Baseline that ranks each category once from the source and then builds
/// the route greedily from the frozen top-`k` lists. A stand-in for a
/// rank-once competitor, not a reimplementation of one.
pub fn rank_once_greedy(space: &IndoorSpace, index: &CategoryIndex, query: &CamQuery, k: usize) -> Result<Plan> {
    query.validate(index)?;
    if k == 0 {
        return Err(Error::Config("rank-once list length must be positive".into()));
    }
    let source = space.resolve(&query.source)?;
    let target = space.resolve(&query.target)?;
    let ctx = ScoringContext::from_sites(space, &source, &target, query.alpha);
    let venue = space.venue();
    let alpha = query.alpha;
    let mut evaluated = 0u64;

    let mut ranked: BTreeMap<CategoryId, Vec<usize>> = BTreeMap::new();
    for c in query.sorted_categories() {
        let mut scored: Vec<(f64, PointId, usize)> = index
            .live_points(space, c)
            .into_iter()
            .map(|i| (ctx.score(&ctx.source, i), venue.points()[i].id, i))
            .collect();
        evaluated += scored.len() as u64;
        scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        ranked.insert(c, scored.into_iter().take(k).map(|(_, _, i)| i).collect());
    }

    let mut stops = Vec::new();
    let mut from = ctx.source.clone();
    while !ranked.is_empty() {
        let mut choice: Option<(f64, CategoryId, PointId, usize)> = None;
        for (&c, list) in &ranked {
            for &i in list {
                evaluated += 1;
                let site = space.point_site(i);
                let v = alpha * space.field_distance(&from, &site) + (1.0 - alpha) * venue.points()[i].static_score;
                let cand = (v, c, venue.points()[i].id, i);
                let better = match &choice {
                    None => true,
                    Some(b) => v.total_cmp(&b.0).then((c, cand.2).cmp(&(b.1, b.2))).is_lt(),
                };
                if better {
                    choice = Some(cand);
                }
            }
        }
        let (_, c, _, i) = choice.expect("ranked lists are non-empty");
        ranked.remove(&c);
        stops.push(i);
        from = space.field(&space.point_site(i));
    }

    Ok(Plan {
        route: Route::assemble(space, source, &stops, Some(target)),
        points_evaluated: evaluated,
        rounds: Vec::new(),
    })
}
