use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{PartitionInstance, PruneOptions, SelectionResult};
use crate::error::{Error, Result};
use crate::index::CategoryIndex;
use crate::venue::{CategoryId, DoorId, IndoorSpace, PartitionId, PointId};

/// Partitions with more doors than this are pruned over the doors nearest
/// the partition centre only.
pub const MAX_PRUNING_DOORS: usize = 8;

/// Before/after object sets of one partition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionPruning {
    pub partition: PartitionId,
    pub before: BTreeMap<CategoryId, Vec<PointId>>,
    pub after: BTreeMap<CategoryId, Vec<PointId>>,
    /// Number of selection runs performed.
    pub runs: usize,
    /// Doors used when the partition exceeded [`MAX_PRUNING_DOORS`].
    pub capped_doors: Option<Vec<DoorId>>,
}

impl PartitionPruning {
    /// Points present before and absent after, ascending.
    pub fn eliminated(&self) -> Vec<PointId> {
        let mut out: Vec<PointId> = self
            .before
            .iter()
            .flat_map(|(c, before)| {
                let kept: BTreeSet<_> = self.after.get(c).into_iter().flatten().collect();
                before.iter().filter(move |p| !kept.contains(p)).copied()
            })
            .collect();
        out.sort();
        out
    }
}

/// Unions the selections of several runs per category. Categories that
/// appear in `before` but in no run keep all their points.
pub fn merge_selections(
    before: &BTreeMap<CategoryId, Vec<PointId>>,
    runs: &[SelectionResult],
) -> BTreeMap<CategoryId, Vec<PointId>> {
    let mut kept: BTreeMap<CategoryId, BTreeSet<PointId>> = BTreeMap::new();
    for r in runs {
        kept.entry(r.category_a).or_default().extend(&r.selected_a);
        kept.entry(r.category_b).or_default().extend(&r.selected_b);
    }
    before
        .iter()
        .map(|(c, pts)| {
            let after = match kept.get(c) {
                Some(set) => pts.iter().copied().filter(|p| set.contains(p)).collect(),
                None => pts.clone(),
            };
            (*c, after)
        })
        .collect()
}

fn pruning_doors(instance: &PartitionInstance) -> (Vec<DoorId>, bool) {
    let doors = instance.door_ids();
    if doors.len() <= MAX_PRUNING_DOORS {
        return (doors, false);
    }
    let (cx, cy) = instance.partition().bounds.centroid();
    let picked: Vec<DoorId> = doors
        .iter()
        .map(|&d| {
            let p = instance.door_position(d).expect("listed door");
            ((p.x - cx).hypot(p.y - cy), d)
        })
        .sorted_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .take(MAX_PRUNING_DOORS)
        .map(|(_, d)| d)
        .sorted()
        .collect();
    warn!(
        "partition {} has {} doors; pruning over {} nearest its centre",
        instance.partition().id,
        doors.len(),
        MAX_PRUNING_DOORS
    );
    (picked, true)
}

/// Runs the selection for every ordered door pair (including a door paired
/// with itself) and every pair of `categories` present in the instance, and
/// keeps the union of the selections.
pub fn prune_instance(
    instance: &PartitionInstance,
    categories: &BTreeSet<CategoryId>,
    options: PruneOptions,
) -> Result<PartitionPruning> {
    let present: Vec<CategoryId> = instance
        .categories()
        .into_iter()
        .filter(|c| categories.contains(c))
        .collect();
    let before: BTreeMap<CategoryId, Vec<PointId>> = present.iter().map(|&c| (c, instance.points_of(c))).collect();
    let id = instance.partition().id;
    if present.len() < 2 {
        return Ok(PartitionPruning {
            partition: id,
            after: before.clone(),
            before,
            runs: 0,
            capped_doors: None,
        });
    }

    let (doors, capped) = pruning_doors(instance);
    let mut runs = Vec::new();
    for (&entry, &exit) in doors.iter().cartesian_product(doors.iter()) {
        for (&a, &b) in present.iter().tuple_combinations() {
            let ctx = instance.context(entry, exit, a, b, options)?;
            runs.push(ctx.select_points(&before[&a], &before[&b])?);
        }
    }
    Ok(PartitionPruning {
        partition: id,
        after: merge_selections(&before, &runs),
        before,
        runs: runs.len(),
        capped_doors: capped.then_some(doors),
    })
}

/// [`prune_instance`] over the live objects of `categories` in partition
/// `part`.
pub fn prune_partition(
    space: &IndoorSpace,
    index: &CategoryIndex,
    part: usize,
    categories: &BTreeSet<CategoryId>,
    options: PruneOptions,
) -> Result<PartitionPruning> {
    if part >= space.venue().partitions().len() {
        return Err(Error::Dominance(format!("no partition at index {part}")));
    }
    let live: Vec<usize> = index
        .categories_in_partition(part)
        .into_iter()
        .filter(|c| categories.contains(c))
        .flat_map(|c| index.live_in_partition(part, c).iter().copied())
        .collect();
    prune_instance(&PartitionInstance::from_space(space, part, &live), categories, options)
}

/// Per partition and category object counts of a pruning pass.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneRow {
    pub partition: PartitionId,
    pub category: CategoryId,
    pub before: usize,
    pub after: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PruneReport {
    pub frequent: Vec<CategoryId>,
    pub options: PruneOptions,
    pub rows: Vec<PruneRow>,
    pub partitions_pruned: usize,
    pub points_before: usize,
    pub points_after: usize,
    pub eliminated: Vec<PointId>,
}

/// Prunes every partition holding at least two of the `frequent`
/// categories and returns the index with the eliminated objects removed.
pub fn preprocess(
    space: &IndoorSpace,
    index: &CategoryIndex,
    frequent: &BTreeSet<CategoryId>,
    options: PruneOptions,
) -> Result<(CategoryIndex, PruneReport)> {
    if frequent.is_empty() {
        return Err(Error::Config("no frequent categories given".into()));
    }
    if !(options.static_weight.is_finite() && options.static_weight >= 0.0) {
        return Err(Error::Config(format!(
            "static weight {} must be finite and non-negative",
            options.static_weight
        )));
    }
    let candidates: Vec<usize> = (0..space.venue().partitions().len())
        .filter(|&p| {
            index
                .categories_in_partition(p)
                .iter()
                .filter(|c| frequent.contains(c))
                .count()
                >= 2
        })
        .collect();
    let results: Vec<PartitionPruning> = candidates
        .par_iter()
        .map(|&p| prune_partition(space, index, p, frequent, options))
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut eliminated = Vec::new();
    for r in &results {
        for (c, before) in &r.before {
            rows.push(PruneRow {
                partition: r.partition,
                category: *c,
                before: before.len(),
                after: r.after[c].len(),
            });
        }
        eliminated.extend(r.eliminated());
    }
    eliminated.sort();
    let pruned = index.remove_points(space, &eliminated)?;
    let count = |ix: &CategoryIndex| frequent.iter().map(|&c| ix.live_count(c)).sum::<usize>();
    let report = PruneReport {
        frequent: frequent.iter().copied().collect(),
        options,
        rows,
        partitions_pruned: results.len(),
        points_before: count(index),
        points_after: count(&pruned),
        eliminated,
    };
    info!(
        "pruned {} partitions: {} -> {} frequent-category objects",
        report.partitions_pruned, report.points_before, report.points_after
    );
    Ok((pruned, report))
}
