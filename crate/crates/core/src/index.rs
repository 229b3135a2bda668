//! Hierarchical partition index with per-node inverted category files.
//!
//! Leaves group adjacent partitions, inner nodes group adjacent children.
//! Every node keeps, per category, the partitions (below it) that still hold
//! a live point of that category and the minimum static score among those
//! points. The two summaries give an admissible lower bound on the query
//! point score, which drives a best-first category nearest neighbour search.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::venue::{CategoryId, DistanceField, IndoorSpace, Location, PartitionId, PointId, Site};

pub const DEFAULT_FANOUT: usize = 4;

/// Relative slack applied to node lower bounds so that rounding in the
/// door-distance matrix can never cause an optimal point to be skipped.
const BOUND_SLACK: f64 = 1e-12;

/// Source, target and preference of a query; the fixed part of every score.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryContext {
    pub source: Location,
    pub target: Location,
    pub alpha: f64,
}

impl QueryContext {
    pub fn new(source: Location, target: Location, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(QueryContext { source, target, alpha })
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::InvalidQuery(format!("alpha {alpha} outside [0, 1]")))
    }
}

/// A [`QueryContext`] resolved against a space, with distance fields from
/// the source and the target.
#[derive(Clone, Debug)]
pub struct ScoringContext<'a> {
    pub space: &'a IndoorSpace,
    pub alpha: f64,
    pub source: DistanceField,
    pub target: DistanceField,
}

impl<'a> ScoringContext<'a> {
    pub fn new(space: &'a IndoorSpace, ctx: &QueryContext) -> Result<Self> {
        check_alpha(ctx.alpha)?;
        let s = space.resolve(&ctx.source)?;
        let t = space.resolve(&ctx.target)?;
        Ok(Self::from_sites(space, &s, &t, ctx.alpha))
    }

    pub fn from_sites(space: &'a IndoorSpace, source: &Site, target: &Site, alpha: f64) -> Self {
        ScoringContext {
            space,
            alpha,
            source: space.field(source),
            target: space.field(target),
        }
    }

    /// `α·(dist(p_s,p) + dist(from,p) + dist(p,p_t)) + (1−α)·s(p)` for the
    /// point stored at `point` in `venue.points()`.
    pub fn score(&self, from: &DistanceField, point: usize) -> f64 {
        let site = self.space.point_site(point);
        let s = self.space.venue().points()[point].static_score;
        let ds = self.space.field_distance(&self.source, &site);
        let df = self.space.field_distance(from, &site);
        let dt = self.space.field_distance(&self.target, &site);
        self.alpha * (ds + df + dt) + (1.0 - self.alpha) * s
    }

    fn bound(&self, from: &DistanceField, inside: [bool; 3], boundary: &[usize], min_static: f64) -> f64 {
        let ls = self.space.entry_bound(&self.source, inside[0], boundary);
        let lf = self.space.entry_bound(from, inside[1], boundary);
        let lt = self.space.entry_bound(&self.target, inside[2], boundary);
        self.alpha * (ls + lf + lt) + (1.0 - self.alpha) * min_static
    }
}

/// Result of a category nearest neighbour search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CnnHit {
    /// Index into `venue.points()`.
    pub point: usize,
    pub id: PointId,
    pub score: f64,
}

/// Work record of one cnn search.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CnnTrace {
    pub evaluated: u64,
    /// Nodes discarded by their lower bound, with that bound.
    pub skipped_nodes: Vec<(usize, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexNode {
    pub id: usize,
    pub level: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Partition indices covered by this node, ascending.
    pub partitions: Vec<usize>,
    /// Door vertices joining this node's region to the rest of the venue.
    pub boundary_doors: Vec<usize>,
    /// Category → partitions (indices) below this node holding a live point.
    pub inverted: BTreeMap<CategoryId, BTreeSet<usize>>,
    /// Category → minimum static score of live points below this node.
    pub min_static: BTreeMap<CategoryId, f64>,
}

impl IndexNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Index snapshot. `remove_points` produces a new snapshot and leaves this
/// one untouched, so queries may keep reading an old snapshot.
#[derive(Clone, Debug, PartialEq)]
pub struct CategoryIndex {
    nodes: Vec<IndexNode>,
    root: usize,
    fanout: usize,
    leaf_of: Vec<usize>,
    /// (partition index, category) → live point indices ordered by point id.
    buckets: BTreeMap<(usize, CategoryId), Vec<usize>>,
    live: Vec<bool>,
    live_count: BTreeMap<CategoryId, usize>,
}

#[derive(Clone, Copy, PartialEq)]
struct Pending {
    bound: f64,
    node: usize,
}

impl Eq for Pending {}

impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Breadth-first order over `items` following `adjacent`, chunked into
/// groups of at most `fanout`.
fn group_adjacent(items: &[usize], adjacent: &BTreeMap<usize, BTreeSet<usize>>, fanout: usize) -> Vec<Vec<usize>> {
    let mut visited = BTreeSet::new();
    let mut order = Vec::with_capacity(items.len());
    for &start in items {
        if !visited.insert(start) {
            continue;
        }
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            order.push(i);
            if let Some(next) = adjacent.get(&i) {
                for &j in next {
                    if visited.insert(j) {
                        queue.push_back(j);
                    }
                }
            }
        }
    }
    order.chunks(fanout).map(<[usize]>::to_vec).collect()
}

impl CategoryIndex {
    /// Builds the index over every point of the space's venue.
    pub fn build(space: &IndoorSpace, fanout: usize) -> Result<Self> {
        if fanout < 2 {
            return Err(Error::Config(format!("index fanout must be at least 2, got {fanout}")));
        }
        let venue = space.venue();
        let n_parts = venue.partitions().len();

        let mut part_adj: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
        for door in venue.doors() {
            let idx: Vec<usize> = door
                .partition_ids
                .iter()
                .filter_map(|p| venue.partition_index(*p))
                .collect();
            for &a in &idx {
                for &b in &idx {
                    if a != b {
                        part_adj.entry(a).or_default().insert(b);
                    }
                }
            }
        }

        let mut nodes: Vec<IndexNode> = Vec::new();
        let mut leaf_of = vec![usize::MAX; n_parts];
        let all_parts: Vec<usize> = (0..n_parts).collect();
        let mut level_nodes = Vec::new();
        for group in group_adjacent(&all_parts, &part_adj, fanout) {
            let id = nodes.len();
            for &p in &group {
                leaf_of[p] = id;
            }
            let mut partitions = group;
            partitions.sort_unstable();
            nodes.push(IndexNode {
                id,
                level: 0,
                parent: None,
                children: Vec::new(),
                partitions,
                boundary_doors: Vec::new(),
                inverted: BTreeMap::new(),
                min_static: BTreeMap::new(),
            });
            level_nodes.push(id);
        }

        let mut level = 0;
        while level_nodes.len() > 1 {
            level += 1;
            let mut node_adj: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
            let owner: BTreeMap<usize, usize> = level_nodes
                .iter()
                .flat_map(|&n| nodes[n].partitions.iter().map(move |&p| (p, n)))
                .collect();
            for (&a, next) in &part_adj {
                for &b in next {
                    let (na, nb) = (owner[&a], owner[&b]);
                    if na != nb {
                        node_adj.entry(na).or_default().insert(nb);
                    }
                }
            }
            let mut next_level = Vec::new();
            for group in group_adjacent(&level_nodes, &node_adj, fanout) {
                let id = nodes.len();
                let mut partitions: Vec<usize> = group
                    .iter()
                    .flat_map(|&c| nodes[c].partitions.iter().copied())
                    .collect();
                partitions.sort_unstable();
                for &c in &group {
                    nodes[c].parent = Some(id);
                }
                nodes.push(IndexNode {
                    id,
                    level,
                    parent: None,
                    children: group,
                    partitions,
                    boundary_doors: Vec::new(),
                    inverted: BTreeMap::new(),
                    min_static: BTreeMap::new(),
                });
                next_level.push(id);
            }
            level_nodes = next_level;
        }
        let root = level_nodes.first().copied().unwrap_or(0);

        for node in &mut nodes {
            let mut inside = vec![false; n_parts];
            for &p in &node.partitions {
                inside[p] = true;
            }
            let mut boundary = BTreeSet::new();
            for &p in &node.partitions {
                for &d in space.doors_of(p) {
                    let crosses = venue.doors()[d]
                        .partition_ids
                        .iter()
                        .filter_map(|q| venue.partition_index(*q))
                        .any(|q| !inside[q]);
                    if crosses {
                        boundary.insert(d);
                    }
                }
            }
            node.boundary_doors = boundary.into_iter().collect();
        }

        let mut buckets: BTreeMap<(usize, CategoryId), Vec<usize>> = BTreeMap::new();
        let mut live_count: BTreeMap<CategoryId, usize> = BTreeMap::new();
        for (i, p) in venue.points().iter().enumerate() {
            let part = space.point_site(i).partition_index();
            buckets.entry((part, p.category)).or_default().push(i);
            *live_count.entry(p.category).or_default() += 1;
        }
        for list in buckets.values_mut() {
            list.sort_by_key(|&i| venue.points()[i].id);
        }

        let mut index = CategoryIndex {
            nodes,
            root,
            fanout,
            leaf_of,
            buckets,
            live: vec![true; venue.points().len()],
            live_count,
        };
        // Leaves first (lower ids), so children are always summarised before parents.
        for id in 0..index.nodes.len() {
            let categories: BTreeSet<CategoryId> = if index.nodes[id].is_leaf() {
                index.nodes[id]
                    .partitions
                    .iter()
                    .flat_map(|&p| {
                        index
                            .buckets
                            .range((p, CategoryId(0))..=(p, CategoryId(u32::MAX)))
                            .map(|((_, c), _)| *c)
                    })
                    .collect()
            } else {
                index.nodes[id]
                    .children
                    .iter()
                    .flat_map(|&c| index.nodes[c].inverted.keys().copied())
                    .collect()
            };
            for c in categories {
                index.refresh(space, id, c);
            }
        }
        Ok(index)
    }

    /// Recomputes one node's summaries for one category from its children
    /// (inner node) or its partitions' live points (leaf).
    fn refresh(&mut self, space: &IndoorSpace, node: usize, category: CategoryId) {
        let (parts, min) = if self.nodes[node].is_leaf() {
            let mut parts = BTreeSet::new();
            let mut min = f64::INFINITY;
            for &p in &self.nodes[node].partitions {
                if let Some(list) = self.buckets.get(&(p, category)) {
                    if !list.is_empty() {
                        parts.insert(p);
                        for &i in list {
                            min = min.min(space.venue().points()[i].static_score);
                        }
                    }
                }
            }
            (parts, min)
        } else {
            let mut parts = BTreeSet::new();
            let mut min = f64::INFINITY;
            for &c in &self.nodes[node].children {
                let child = &self.nodes[c];
                if let Some(ps) = child.inverted.get(&category) {
                    parts.extend(ps.iter().copied());
                }
                if let Some(&m) = child.min_static.get(&category) {
                    min = min.min(m);
                }
            }
            (parts, min)
        };
        let n = &mut self.nodes[node];
        if parts.is_empty() {
            n.inverted.remove(&category);
            n.min_static.remove(&category);
        } else {
            n.inverted.insert(category, parts);
            n.min_static.insert(category, min);
        }
    }

    pub fn nodes(&self) -> &[IndexNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> Result<&IndexNode> {
        self.nodes.get(id).ok_or(Error::UnknownNode(id))
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn fanout(&self) -> usize {
        self.fanout
    }

    pub fn leaves(&self) -> impl Iterator<Item = &IndexNode> {
        self.nodes.iter().filter(|n| n.is_leaf())
    }

    pub fn leaf_of(&self, partition: usize) -> usize {
        self.leaf_of[partition]
    }

    pub fn is_live(&self, point: usize) -> bool {
        self.live[point]
    }

    /// Number of live points of `category`.
    pub fn live_count(&self, category: CategoryId) -> usize {
        self.live_count.get(&category).copied().unwrap_or(0)
    }

    pub fn total_live(&self) -> usize {
        self.live.iter().filter(|l| **l).count()
    }

    /// Live point indices of `category` in partition `partition`, by point id.
    pub fn live_in_partition(&self, partition: usize, category: CategoryId) -> &[usize] {
        self.buckets
            .get(&(partition, category))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Live point indices of `category`, ordered by point id.
    pub fn live_points(&self, space: &IndoorSpace, category: CategoryId) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .buckets
            .iter()
            .filter(|((_, c), _)| *c == category)
            .flat_map(|(_, list)| list.iter().copied())
            .collect();
        out.sort_by_key(|&i| space.venue().points()[i].id);
        out
    }

    /// Categories (ascending) that have at least one live point in `partition`.
    pub fn categories_in_partition(&self, partition: usize) -> Vec<CategoryId> {
        self.buckets
            .range((partition, CategoryId(0))..=(partition, CategoryId(u32::MAX)))
            .filter(|(_, list)| !list.is_empty())
            .map(|((_, c), _)| *c)
            .collect()
    }

    /// Minimum static score of `category` below `node`; `None` when the
    /// category has no live point there.
    pub fn min_static_score(&self, node: usize, category: CategoryId) -> Result<Option<f64>> {
        Ok(self.node(node)?.min_static.get(&category).copied())
    }

    /// Partition ids listed under `category` in a node's inverted file.
    pub fn inverted_partitions(
        &self,
        space: &IndoorSpace,
        node: usize,
        category: CategoryId,
    ) -> Result<Vec<PartitionId>> {
        Ok(self
            .node(node)?
            .inverted
            .get(&category)
            .map(|set| set.iter().map(|&p| space.venue().partitions()[p].id).collect())
            .unwrap_or_default())
    }

    fn node_contains(&self, node: usize, partition: usize) -> bool {
        let mut cur = Some(self.leaf_of[partition]);
        while let Some(n) = cur {
            if n == node {
                return true;
            }
            cur = self.nodes[n].parent;
        }
        false
    }

    /// Category nearest neighbour of `from`: the live point of `category`
    /// minimising the query score, ties broken by smallest point id.
    pub fn cnn(
        &self,
        ctx: &ScoringContext<'_>,
        from: &DistanceField,
        category: CategoryId,
    ) -> Result<(CnnHit, CnnTrace)> {
        let mut trace = CnnTrace::default();
        let hit = self.search(ctx, from, category, &mut trace)?;
        Ok((hit, trace))
    }

    /// Convenience form of [`CategoryIndex::cnn`] taking file-level locations.
    pub fn cnn_at(
        &self,
        space: &IndoorSpace,
        from: &Location,
        category: CategoryId,
        ctx: &QueryContext,
    ) -> Result<CnnHit> {
        let scoring = ScoringContext::new(space, ctx)?;
        let from = space.field(&space.resolve(from)?);
        Ok(self.cnn(&scoring, &from, category)?.0)
    }

    pub(crate) fn search(
        &self,
        ctx: &ScoringContext<'_>,
        from: &DistanceField,
        category: CategoryId,
        trace: &mut CnnTrace,
    ) -> Result<CnnHit> {
        let space = ctx.space;
        let points = space.venue().points();
        let root = &self.nodes[self.root];
        let Some(&root_min) = root.min_static.get(&category) else {
            return Err(Error::EmptyCategory(category));
        };
        let parts = [
            ctx.source.origin().partition_index(),
            from.origin().partition_index(),
            ctx.target.origin().partition_index(),
        ];
        let inside = |node: usize| parts.map(|p| self.node_contains(node, p));

        let mut best: Option<CnnHit> = None;
        let prunable = |bound: f64, best: &Option<CnnHit>| match best {
            Some(b) => bound > b.score * (1.0 + BOUND_SLACK) + BOUND_SLACK,
            None => false,
        };

        let mut heap = BinaryHeap::new();
        heap.push(Pending {
            bound: ctx.bound(from, inside(self.root), &root.boundary_doors, root_min),
            node: self.root,
        });
        while let Some(Pending { bound, node }) = heap.pop() {
            if prunable(bound, &best) {
                trace.skipped_nodes.push((node, bound));
                trace.skipped_nodes.extend(heap.drain().map(|p| (p.node, p.bound)));
                break;
            }
            let n = &self.nodes[node];
            if n.is_leaf() {
                let Some(partitions) = n.inverted.get(&category) else {
                    continue;
                };
                for &p in partitions {
                    let list = self.live_in_partition(p, category);
                    let part_min = list
                        .iter()
                        .map(|&i| points[i].static_score)
                        .fold(f64::INFINITY, f64::min);
                    let doors = space.doors_of(p);
                    let part_inside = parts.map(|q| q == p);
                    if prunable(ctx.bound(from, part_inside, doors, part_min), &best) {
                        continue;
                    }
                    for &i in list {
                        trace.evaluated += 1;
                        let score = ctx.score(from, i);
                        let id = points[i].id;
                        let better = match &best {
                            None => true,
                            Some(b) => score < b.score || (score == b.score && id < b.id),
                        };
                        if better {
                            best = Some(CnnHit { point: i, id, score });
                        }
                    }
                }
            } else {
                for &c in &n.children {
                    let child = &self.nodes[c];
                    if let Some(&m) = child.min_static.get(&category) {
                        let b = ctx.bound(from, inside(c), &child.boundary_doors, m);
                        if prunable(b, &best) {
                            trace.skipped_nodes.push((c, b));
                        } else {
                            heap.push(Pending { bound: b, node: c });
                        }
                    }
                }
            }
        }
        best.ok_or(Error::EmptyCategory(category))
    }

    /// Returns a new snapshot with the given points removed. Summaries are
    /// recomputed along every affected leaf-to-root path.
    pub fn remove_points(&self, space: &IndoorSpace, ids: &[PointId]) -> Result<Self> {
        let venue = space.venue();
        let mut next = self.clone();
        let mut touched: BTreeSet<(usize, CategoryId)> = BTreeSet::new();
        for &id in ids {
            let i = venue.point_index(id).ok_or(Error::UnknownPoint(id))?;
            if !next.live[i] {
                return Err(Error::PointNotLive(id));
            }
            next.live[i] = false;
            let part = space.point_site(i).partition_index();
            let category = venue.points()[i].category;
            if let Some(list) = next.buckets.get_mut(&(part, category)) {
                list.retain(|&j| j != i);
                if list.is_empty() {
                    next.buckets.remove(&(part, category));
                }
            }
            if let Some(c) = next.live_count.get_mut(&category) {
                *c -= 1;
                if *c == 0 {
                    next.live_count.remove(&category);
                }
            }
            touched.insert((part, category));
        }
        for (part, category) in touched {
            let mut cur = Some(next.leaf_of[part]);
            while let Some(n) = cur {
                next.refresh(space, n, category);
                cur = next.nodes[n].parent;
            }
        }
        Ok(next)
    }
}
