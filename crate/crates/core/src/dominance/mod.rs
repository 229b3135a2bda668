//! Dominance-based pruning of objects inside one partition.
//!
//! Within a partition entered at door `d_s` and left at `d_t`, a two-stop
//! route `⟨d_s, a, b, d_t⟩` costs `dist(d_s,a) + s(a) + dist(a,b) +
//! dist(b,d_t) + s(b)` (the unweighted form; equal to twice the mixed cost
//! at `α = 0.5`). Objects that can never be part of a cheapest such route,
//! for any door pair and category pair, are eliminated ahead of query time.

mod prune;
mod select;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use prune::{
    merge_selections, preprocess, prune_instance, prune_partition, PartitionPruning, PruneReport, PruneRow,
    MAX_PRUNING_DOORS,
};
pub use select::SelectionResult;

use crate::error::{Error, Result};
use crate::venue::{CategoryId, DoorId, IndoorSpace, Partition, PointId, Position};

/// How the second threshold test (both legs dominated, partner closer than
/// the selected pair) quantifies over competing first-category partners.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartnerRule {
    /// Prune only if the selected pair beats the route through every
    /// remaining first-category point.
    #[default]
    AllPartners,
    /// Test only the geometrically nearest remaining first-category point.
    Nearest,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PruneOptions {
    /// Multiplier on static scores in the pruning arithmetic (1 = unweighted).
    pub static_weight: f64,
    pub partner_rule: PartnerRule,
}

impl Default for PruneOptions {
    fn default() -> Self {
        PruneOptions {
            static_weight: 1.0,
            partner_rule: PartnerRule::AllPartners,
        }
    }
}

/// An object as seen by the pruning code.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalPoint {
    pub id: PointId,
    pub category: CategoryId,
    pub position: Position,
    pub score: f64,
}

/// Route inside one partition from `entry` through `stops` to `exit`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionRoute {
    pub entry: DoorId,
    pub exit: DoorId,
    pub stops: Vec<PointId>,
}

/// One partition's doors and live objects.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionInstance {
    partition: Partition,
    doors: BTreeMap<DoorId, Position>,
    points: BTreeMap<PointId, LocalPoint>,
}

impl PartitionInstance {
    pub fn new(partition: Partition, doors: Vec<(DoorId, Position)>, points: Vec<LocalPoint>) -> Self {
        PartitionInstance {
            partition,
            doors: doors.into_iter().collect(),
            points: points.into_iter().map(|p| (p.id, p)).collect(),
        }
    }

    /// Instance over the given objects (indices into `venue.points()`) of
    /// partition `part`.
    pub fn from_space(space: &IndoorSpace, part: usize, point_indices: &[usize]) -> Self {
        let venue = space.venue();
        let partition = venue.partitions()[part].clone();
        let doors = space
            .doors_of(part)
            .iter()
            .map(|&d| (venue.doors()[d].id, venue.doors()[d].position))
            .collect();
        let points = point_indices
            .iter()
            .map(|&i| {
                let p = &venue.points()[i];
                LocalPoint {
                    id: p.id,
                    category: p.category,
                    position: p.position,
                    score: p.static_score,
                }
            })
            .collect();
        Self::new(partition, doors, points)
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn door_ids(&self) -> Vec<DoorId> {
        self.doors.keys().copied().collect()
    }

    pub fn point(&self, id: PointId) -> Result<&LocalPoint> {
        self.points
            .get(&id)
            .ok_or_else(|| Error::Dominance(format!("point {id} is not in partition {}", self.partition.id)))
    }

    pub fn points(&self) -> impl Iterator<Item = &LocalPoint> {
        self.points.values()
    }

    /// Ids of the points of `category`, ascending.
    pub fn points_of(&self, category: CategoryId) -> Vec<PointId> {
        self.points
            .values()
            .filter(|p| p.category == category)
            .map(|p| p.id)
            .collect()
    }

    pub fn categories(&self) -> Vec<CategoryId> {
        let mut c: Vec<CategoryId> = self.points.values().map(|p| p.category).collect();
        c.sort();
        c.dedup();
        c
    }

    pub fn door_position(&self, id: DoorId) -> Result<Position> {
        self.door(id)
    }

    fn door(&self, id: DoorId) -> Result<Position> {
        self.doors
            .get(&id)
            .copied()
            .ok_or_else(|| Error::Dominance(format!("door {id} does not belong to partition {}", self.partition.id)))
    }

    /// Distance between two objects of this partition.
    pub fn dist(&self, a: PointId, b: PointId) -> Result<f64> {
        Ok(self
            .partition
            .intra_distance(self.point(a)?.position, self.point(b)?.position))
    }

    /// Distance between a door and an object of this partition.
    pub fn door_dist(&self, door: DoorId, p: PointId) -> Result<f64> {
        Ok(self.partition.intra_distance(self.door(door)?, self.point(p)?.position))
    }

    /// `a` dominates `b` w.r.t. `door`: strictly closer to the door and
    /// strictly cheaper. Both must share a category.
    pub fn dominates_point(&self, a: PointId, b: PointId, door: DoorId) -> Result<bool> {
        let (pa, pb) = (self.point(a)?, self.point(b)?);
        if pa.category != pb.category {
            return Err(Error::Dominance(format!("{a} and {b} have different categories")));
        }
        Ok(self.door_dist(door, a)? < self.door_dist(door, b)? && pa.score < pb.score)
    }

    /// Every point of `pool` dominated by `a` w.r.t. `door`.
    pub fn dominated_set(&self, a: PointId, door: DoorId, pool: &[PointId]) -> Result<Vec<PointId>> {
        let mut out = Vec::new();
        for &p in pool {
            if self.dominates_point(a, p, door)? {
                out.push(p);
            }
        }
        Ok(out)
    }

    /// Travel and static totals of an in-partition route.
    pub fn route_totals(&self, route: &PartitionRoute) -> Result<(f64, f64)> {
        let mut travel = 0.0;
        let mut stat = 0.0;
        let mut prev = self.door(route.entry)?;
        for &s in &route.stops {
            let p = self.point(s)?;
            travel += self.partition.intra_distance(prev, p.position);
            stat += p.score;
            prev = p.position;
        }
        travel += self.partition.intra_distance(prev, self.door(route.exit)?);
        Ok((travel, stat))
    }

    pub fn route_cost(&self, route: &PartitionRoute, alpha: f64) -> Result<f64> {
        let (t, s) = self.route_totals(route)?;
        Ok(crate::routing::route_cost(t, s, alpha))
    }

    /// `ra` dominates `rb` when both share doors and covered categories and
    /// `ra` is strictly cheaper.
    pub fn dominates_route(&self, ra: &PartitionRoute, rb: &PartitionRoute, alpha: f64) -> Result<bool> {
        if ra.entry != rb.entry || ra.exit != rb.exit {
            return Err(Error::Dominance("routes use different doors".into()));
        }
        let cats = |r: &PartitionRoute| -> Result<Vec<CategoryId>> {
            let mut c = r
                .stops
                .iter()
                .map(|&s| self.point(s).map(|p| p.category))
                .collect::<Result<Vec<_>>>()?;
            c.sort();
            Ok(c)
        };
        if cats(ra)? != cats(rb)? {
            return Err(Error::Dominance("routes cover different categories".into()));
        }
        Ok(self.route_cost(ra, alpha)? < self.route_cost(rb, alpha)?)
    }

    /// Pruning context for one ordered door pair and category pair.
    pub fn context(
        &self,
        entry: DoorId,
        exit: DoorId,
        cat_a: CategoryId,
        cat_b: CategoryId,
        options: PruneOptions,
    ) -> Result<DominanceContext<'_>> {
        if cat_a == cat_b {
            return Err(Error::Dominance("category pair must be distinct".into()));
        }
        let ds = self.door(entry)?;
        let dt = self.door(exit)?;
        let cache = self
            .points
            .values()
            .filter(|p| p.category == cat_a || p.category == cat_b)
            .map(|p| {
                (
                    p.id,
                    Cached {
                        from_entry: self.partition.intra_distance(ds, p.position),
                        to_exit: self.partition.intra_distance(p.position, dt),
                        score: p.score,
                    },
                )
            })
            .collect();
        Ok(DominanceContext {
            instance: self,
            entry,
            exit,
            cat_a,
            cat_b,
            options,
            cache,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Cached {
    from_entry: f64,
    to_exit: f64,
    score: f64,
}

/// Entry door, exit door and the ordered category pair of one pruning run,
/// with door distances and scores cached per point.
#[derive(Clone, Debug)]
pub struct DominanceContext<'a> {
    instance: &'a PartitionInstance,
    pub entry: DoorId,
    pub exit: DoorId,
    pub cat_a: CategoryId,
    pub cat_b: CategoryId,
    pub options: PruneOptions,
    cache: BTreeMap<PointId, Cached>,
}

/// Which of the four route-dominance configurations certify that
/// `⟨d_s, p_a, p_x, d_t⟩` beats the competitor route.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuardVerdicts {
    /// Competitor `⟨d_s, p_b, p_x, d_t⟩`; `p_a ≺ p_b` and `p_a` nearer to `p_x`.
    pub shared_closer: bool,
    /// Competitor `⟨d_s, p_b, p_x, d_t⟩`; `p_b` nearer to `p_x` but outside
    /// the threshold `dist(p_a,p_x) − φ`.
    pub shared_threshold: bool,
    /// Competitor `⟨d_s, p_b, p_y, d_t⟩`; both legs dominated and the
    /// selected pair is closer together.
    pub paired_closer: bool,
    /// Competitor `⟨d_s, p_b, p_y, d_t⟩`; both legs dominated, competitor pair
    /// closer together but outside the threshold `dist(p_a,p_x) − φ̂`.
    pub paired_threshold: bool,
}

impl GuardVerdicts {
    pub fn shared_certified(&self) -> bool {
        self.shared_closer || self.shared_threshold
    }

    pub fn paired_certified(&self) -> bool {
        self.paired_closer || self.paired_threshold
    }
}

impl<'a> DominanceContext<'a> {
    pub fn instance(&self) -> &'a PartitionInstance {
        self.instance
    }

    fn cached(&self, p: PointId) -> Result<Cached> {
        self.cache
            .get(&p)
            .copied()
            .ok_or_else(|| Error::Dominance(format!("point {p} is not of category {} or {}", self.cat_a, self.cat_b)))
    }

    fn expect_category(&self, p: PointId, c: CategoryId) -> Result<()> {
        if self.instance.point(p)?.category == c {
            Ok(())
        } else {
            Err(Error::Dominance(format!("point {p} is not of category {c}")))
        }
    }

    /// Entry-side rank `dist(d_s, p) + w·s(p)`; its ascending order is a
    /// dominance order w.r.t. `d_s`.
    pub fn entry_rank(&self, p: PointId) -> f64 {
        let c = self.cache[&p];
        c.from_entry + self.options.static_weight * c.score
    }

    /// Exit-side rank `dist(p, d_t) + w·s(p)`.
    pub fn exit_rank(&self, p: PointId) -> f64 {
        let c = self.cache[&p];
        c.to_exit + self.options.static_weight * c.score
    }

    pub(crate) fn dist(&self, a: PointId, b: PointId) -> f64 {
        self.instance.dist(a, b).expect("cached point")
    }

    /// Dominance w.r.t. the entry door.
    pub fn dominates_at_entry(&self, a: PointId, b: PointId) -> Result<bool> {
        let (ca, cb) = (self.cached(a)?, self.cached(b)?);
        Ok(ca.from_entry < cb.from_entry && ca.score < cb.score)
    }

    /// Dominance w.r.t. the exit door.
    pub fn dominates_at_exit(&self, a: PointId, b: PointId) -> Result<bool> {
        let (ca, cb) = (self.cached(a)?, self.cached(b)?);
        Ok(ca.to_exit < cb.to_exit && ca.score < cb.score)
    }

    /// `φ = f(p_b) − f(p_a)` with `f` the entry-side rank.
    pub fn phi(&self, pa: PointId, pb: PointId) -> f64 {
        self.entry_rank(pb) - self.entry_rank(pa)
    }

    /// `φ̂ = f(p_b) + g(p_y) − f(p_a) − g(p_x)` with `g` the exit-side rank.
    pub fn phi_hat(&self, pa: PointId, pb: PointId, px: PointId, py: PointId) -> f64 {
        self.entry_rank(pb) + self.exit_rank(py) - self.entry_rank(pa) - self.exit_rank(px)
    }

    /// Evaluates the four dominance configurations for `p_a, p_b` of the
    /// first category and `p_x, p_y` of the second.
    pub fn theorem_guards(&self, pa: PointId, pb: PointId, px: PointId, py: PointId) -> Result<GuardVerdicts> {
        self.expect_category(pa, self.cat_a)?;
        self.expect_category(pb, self.cat_a)?;
        self.expect_category(px, self.cat_b)?;
        self.expect_category(py, self.cat_b)?;
        let a_dom_b = self.dominates_at_entry(pa, pb)?;
        let x_dom_y = self.dominates_at_exit(px, py)?;
        let ax = self.dist(pa, px);
        let bx = self.dist(pb, px);
        let by = self.dist(pb, py);

        let shared_closer = a_dom_b && ax < bx;
        let shared_threshold = a_dom_b && ax >= bx && ax - self.phi(pa, pb) < bx;
        let paired_closer = a_dom_b && x_dom_y && ax < by;
        let paired_threshold = a_dom_b && x_dom_y && ax >= by && ax - self.phi_hat(pa, pb, px, py) < by;
        Ok(GuardVerdicts {
            shared_closer,
            shared_threshold,
            paired_closer,
            paired_threshold,
        })
    }
}
