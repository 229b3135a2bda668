//! Synthetic venues, objects and query sets.
//!
//! Every generator takes a master seed and draws from its own ChaCha8
//! stream, so changing one stage's parameters never perturbs another.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::routing::CamQuery;
use crate::venue::{
    Category, CategoryId, Door, DoorId, IndoorPoint, IndoorSpace, Location, Partition, PartitionId, PartitionKind,
    PointId, Position, Rect, Venue,
};

const ROOM_DEPTH: f64 = 8.0;
const HALL_WIDTH: f64 = 4.0;
const STAIR_LENGTH: f64 = 4.0;
/// Room widths are drawn in half-metre steps from this range.
const ROOM_HALF_METRES: std::ops::RangeInclusive<u32> = 16..=28;

#[derive(Clone, Copy, Debug)]
#[repr(u64)]
enum Stage {
    Venue = 1,
    Objects = 2,
    Queries = 3,
    Replicate = 4,
}

fn stage_rng(seed: u64, stage: Stage) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stage as u64);
    rng
}

/// Objects-per-category size classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Bucket {
    XS,
    S,
    M,
    L,
    XL,
}

impl Bucket {
    pub const ALL: [Bucket; 5] = [Bucket::XS, Bucket::S, Bucket::M, Bucket::L, Bucket::XL];

    /// Object count range of a category at full venue scale.
    pub fn full_range(self) -> (u32, u32) {
        match self {
            Bucket::XS => (80, 120),
            Bucket::S => (450, 550),
            Bucket::M => (950, 1050),
            Bucket::L => (1450, 1550),
            Bucket::XL => (1950, 2050),
        }
    }

    /// Closed range scaled by `factor`: `[ceil(lo·f), floor(hi·f)]`.
    pub fn range(self, factor: f64) -> Result<(usize, usize)> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::Workload(format!("scale factor {factor} must be positive")));
        }
        let (lo, hi) = self.full_range();
        // The epsilon keeps products such as 0.1·80 from rounding past an integer.
        let lo = (lo as f64 * factor - 1e-9).ceil().max(1.0) as usize;
        let hi = (hi as f64 * factor + 1e-9).floor() as usize;
        if lo > hi {
            return Err(Error::Workload(format!("bucket {self} is empty at scale {factor}")));
        }
        Ok((lo, hi))
    }

    pub fn label(self) -> &'static str {
        match self {
            Bucket::XS => "XS",
            Bucket::S => "S",
            Bucket::M => "M",
            Bucket::L => "L",
            Bucket::XL => "XL",
        }
    }
}

impl std::fmt::Display for Bucket {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Bucket {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Bucket::ALL
            .into_iter()
            .find(|b| b.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Workload(format!("unknown bucket {s:?}")))
    }
}

/// Parameters of a synthetic workload.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorkloadSpec {
    pub seed: u64,
    pub floors: u32,
    /// Rooms per floor, split over two rows facing a central hallway.
    pub rooms_per_floor: u32,
    /// Hallway segments per floor (ignored for a single-room venue).
    pub hallway_segments: u32,
    /// Doors from each room onto the hallway.
    pub doors_per_room: u32,
    pub categories: u32,
    pub bucket: Bucket,
    /// Multiplier applied to the full-scale bucket ranges.
    pub scale: f64,
    /// When set, only this many rooms (chosen at random) hold objects.
    pub shops: Option<u32>,
    /// When set, each category is stocked in only this many of the
    /// object-holding rooms.
    pub stockists: Option<u32>,
    pub queries: usize,
    /// Query sizes, assigned round robin over the query set.
    pub query_sizes: Vec<usize>,
    pub alpha: f64,
}

impl Default for WorkloadSpec {
    /// Desk-scale workload: 51 partitions over four floors, eight
    /// categories of 34-36 objects stocked by six shops (two per
    /// category), 50 queries of 2-4 categories.
    fn default() -> Self {
        WorkloadSpec {
            seed: 7,
            floors: 4,
            rooms_per_floor: 10,
            hallway_segments: 2,
            doors_per_room: 1,
            categories: 8,
            bucket: Bucket::M,
            scale: 0.035,
            shops: Some(6),
            stockists: Some(2),
            queries: 50,
            query_sizes: vec![2, 3, 4],
            alpha: 0.5,
        }
    }
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("floors", self.floors),
            ("rooms_per_floor", self.rooms_per_floor),
            ("hallway_segments", self.hallway_segments),
            ("doors_per_room", self.doors_per_room),
            ("categories", self.categories),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Workload(format!("{name} must be positive")));
            }
        }
        if self.doors_per_room > 4 {
            return Err(Error::Workload("at most 4 doors per room fit on a hallway wall".into()));
        }
        if self.stockists == Some(0) || self.shops == Some(0) {
            return Err(Error::Workload("shops and stockists must be positive".into()));
        }
        if self.query_sizes.is_empty() || self.query_sizes.contains(&0) {
            return Err(Error::Workload("query sizes must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Workload(format!("alpha {} outside [0, 1]", self.alpha)));
        }
        self.bucket.range(self.scale)?;
        Ok(())
    }
}

struct Builder {
    partitions: Vec<Partition>,
    doors: Vec<Door>,
}

impl Builder {
    fn partition(&mut self, floor: i32, upper: Option<i32>, bounds: Rect, kind: PartitionKind) -> usize {
        let id = PartitionId(self.partitions.len() as u32);
        self.partitions.push(Partition {
            id,
            floor,
            upper_floor: upper,
            bounds,
            kind,
            door_ids: Vec::new(),
        });
        self.partitions.len() - 1
    }

    fn door(&mut self, position: Position, parts: &[usize]) {
        let id = DoorId(self.doors.len() as u32);
        let partition_ids = parts.iter().map(|&p| self.partitions[p].id).collect();
        for &p in parts {
            self.partitions[p].door_ids.push(id);
        }
        self.doors.push(Door {
            id,
            position,
            partition_ids,
        });
    }
}

/// Grid-of-rooms venue: on each floor two rows of rooms face a hallway
/// split into segments; consecutive floors are joined by a staircase at
/// alternating hallway ends. A single-floor, single-room spec yields one
/// room with one exterior door.
pub fn generate_venue(spec: &WorkloadSpec) -> Result<Venue> {
    spec.validate()?;
    let mut rng = stage_rng(spec.seed, Stage::Venue);
    let mut b = Builder {
        partitions: Vec::new(),
        doors: Vec::new(),
    };

    if spec.floors == 1 && spec.rooms_per_floor == 1 {
        let w = rng.random_range(ROOM_HALF_METRES) as f64 * 0.5;
        let room = b.partition(0, None, Rect::new(0.0, 0.0, w, ROOM_DEPTH), PartitionKind::Room);
        b.door(Position::new(w / 2.0, 0.0, 0), &[room]);
        return Ok(Venue::new(b.partitions, b.doors, Vec::new(), Vec::new()));
    }

    let bottom = spec.rooms_per_floor.div_ceil(2) as usize;
    let top = spec.rooms_per_floor as usize - bottom;
    let mut rows: Vec<[Vec<f64>; 2]> = Vec::new();
    for _ in 0..spec.floors {
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n)
                .map(|_| rng.random_range(ROOM_HALF_METRES) as f64 * 0.5)
                .collect()
        };
        let lower = draw(bottom);
        let upper = draw(top);
        rows.push([lower, upper]);
    }
    // Every floor shares the widest row's length so staircases line up;
    // the last room of a shorter row absorbs the slack.
    let width = rows
        .iter()
        .flat_map(|r| r.iter().map(|w| w.iter().sum::<f64>()))
        .fold(0.0, f64::max);
    let hall_lo = ROOM_DEPTH;
    let hall_hi = ROOM_DEPTH + HALL_WIDTH;
    let hall_mid = (hall_lo + hall_hi) / 2.0;
    let segs = spec.hallway_segments as usize;
    let seg_edges: Vec<f64> = (0..=segs).map(|i| width * i as f64 / segs as f64).collect();

    let mut halls: Vec<Vec<usize>> = Vec::new();
    for (f, floor_rows) in rows.iter().enumerate() {
        let floor = f as i32;
        let hall: Vec<usize> = (0..segs)
            .map(|s| {
                b.partition(
                    floor,
                    None,
                    Rect::new(seg_edges[s], hall_lo, seg_edges[s + 1], hall_hi),
                    PartitionKind::Hallway,
                )
            })
            .collect();
        for s in 1..segs {
            b.door(Position::new(seg_edges[s], hall_mid, floor), &[hall[s - 1], hall[s]]);
        }
        let segment_at = |x: f64| seg_edges[1..].iter().position(|&e| x <= e).unwrap_or(segs - 1);
        for (r, widths) in floor_rows.iter().enumerate() {
            let (y0, y1, wall) = if r == 0 {
                (0.0, ROOM_DEPTH, ROOM_DEPTH)
            } else {
                (hall_hi, hall_hi + ROOM_DEPTH, hall_hi)
            };
            let mut x = 0.0;
            for (i, &w) in widths.iter().enumerate() {
                let x1 = if i + 1 == widths.len() { width } else { x + w };
                let room = b.partition(floor, None, Rect::new(x, y0, x1, y1), PartitionKind::Room);
                let k = spec.doors_per_room as usize;
                for j in 0..k {
                    let dx = x + (x1 - x) * (j as f64 + 1.0) / (k as f64 + 1.0);
                    b.door(Position::new(dx, wall, floor), &[room, hall[segment_at(dx)]]);
                }
                x = x1;
            }
        }
        halls.push(hall);
    }

    for f in 0..spec.floors as usize - 1 {
        let (lo, hi) = (f as i32, f as i32 + 1);
        let right = f % 2 == 0;
        let (x0, x1, edge, seg) = if right {
            (width, width + STAIR_LENGTH, width, segs - 1)
        } else {
            (-STAIR_LENGTH, 0.0, 0.0, 0)
        };
        let stairs = b.partition(lo, Some(hi), Rect::new(x0, hall_lo, x1, hall_hi), PartitionKind::Stairs);
        b.door(Position::new(edge, hall_mid, lo), &[stairs, halls[f][seg]]);
        b.door(Position::new(edge, hall_mid, hi), &[stairs, halls[f + 1][seg]]);
    }

    Ok(Venue::new(b.partitions, b.doors, Vec::new(), Vec::new()))
}

/// Category catalogue `c0 … c{n-1}`.
pub fn category_catalogue(count: u32) -> Vec<Category> {
    (0..count)
        .map(|i| Category {
            id: CategoryId(i),
            name: format!("category-{i:03}"),
        })
        .collect()
}

fn placement_partitions(venue: &Venue) -> Vec<usize> {
    let rooms: Vec<usize> = (0..venue.partitions().len())
        .filter(|&i| venue.partitions()[i].kind == PartitionKind::Room)
        .collect();
    if rooms.is_empty() {
        (0..venue.partitions().len())
            .filter(|&i| venue.partitions()[i].kind != PartitionKind::Stairs)
            .collect()
    } else {
        rooms
    }
}

fn random_position(rng: &mut ChaCha8Rng, part: &Partition) -> Position {
    let r = &part.bounds;
    Position::new(
        rng.random_range(r.x_min..r.x_max),
        rng.random_range(r.y_min..r.y_max),
        part.floor,
    )
}

/// Places `spec.categories` categories of objects in the venue's rooms.
/// Each category's count is drawn from the scaled bucket range and static
/// scores are uniform on `[0, D]` with `D` the largest door-to-door distance.
pub fn place_objects(venue: &Venue, spec: &WorkloadSpec) -> Result<Vec<IndoorPoint>> {
    spec.validate()?;
    let (lo, hi) = spec.bucket.range(spec.scale)?;
    let space = IndoorSpace::new(venue.clone().with_points(Vec::new()))?;
    let diameter = space.graph().diameter();
    let mut rng = stage_rng(spec.seed, Stage::Objects);
    let mut domain = placement_partitions(venue);
    if domain.is_empty() {
        return Err(Error::Workload("venue has no partition to place objects in".into()));
    }
    if let Some(k) = spec.shops {
        domain = domain
            .choose_multiple(&mut rng, (k as usize).min(domain.len()))
            .copied()
            .collect();
        domain.sort_unstable();
    }

    let mut points = Vec::new();
    for c in 0..spec.categories {
        let count = rng.random_range(lo..=hi);
        let shops: Vec<usize> = match spec.stockists {
            Some(k) => domain
                .choose_multiple(&mut rng, (k as usize).min(domain.len()))
                .copied()
                .collect(),
            None => domain.clone(),
        };
        for _ in 0..count {
            let part = &venue.partitions()[*shops.choose(&mut rng).expect("non-empty")];
            let position = random_position(&mut rng, part);
            points.push(IndoorPoint {
                id: PointId(points.len() as u32),
                partition_id: part.id,
                position,
                category: CategoryId(c),
                static_score: rng.random_range(0.0..=diameter),
            });
        }
    }
    Ok(points)
}

/// Buckets whose scaled range contains each category's object count.
/// Categories outside every range are left out; all buckets are present
/// in the map.
pub fn bucket_categories(points: &[IndoorPoint], scale: f64) -> Result<BTreeMap<Bucket, Vec<CategoryId>>> {
    let mut counts: BTreeMap<CategoryId, usize> = BTreeMap::new();
    for p in points {
        *counts.entry(p.category).or_default() += 1;
    }
    let mut out = BTreeMap::new();
    for bucket in Bucket::ALL {
        let members = match bucket.range(scale) {
            Ok((lo, hi)) => counts
                .iter()
                .filter(|(_, &n)| (lo..=hi).contains(&n))
                .map(|(&c, _)| c)
                .collect(),
            Err(_) => Vec::new(),
        };
        out.insert(bucket, members);
    }
    Ok(out)
}

fn random_location(rng: &mut ChaCha8Rng, venue: &Venue, domain: &[usize]) -> Location {
    let part = &venue.partitions()[*domain.choose(rng).expect("non-empty")];
    let p = random_position(rng, part);
    Location::in_partition(p.x, p.y, p.floor, part.id)
}

/// `count` queries of `m` distinct categories drawn from `categories`, with
/// source and target uniform in random non-staircase partitions.
pub fn generate_queries(
    categories: &[CategoryId],
    count: usize,
    m: usize,
    alpha: f64,
    venue: &Venue,
    seed: u64,
) -> Result<Vec<CamQuery>> {
    generate_query_mix(categories, count, &[m], alpha, venue, seed)
}

/// Like [`generate_queries`], with query `i` using `sizes[i % sizes.len()]`
/// categories.
pub fn generate_query_mix(
    categories: &[CategoryId],
    count: usize,
    sizes: &[usize],
    alpha: f64,
    venue: &Venue,
    seed: u64,
) -> Result<Vec<CamQuery>> {
    let pool: Vec<CategoryId> = categories
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(Error::Workload("query sizes must be positive".into()));
    }
    if let Some(&m) = sizes.iter().find(|&&m| m > pool.len()) {
        return Err(Error::Workload(format!(
            "bucket has {} categories, fewer than the {m} a query needs",
            pool.len()
        )));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Workload(format!("alpha {alpha} outside [0, 1]")));
    }
    let domain: Vec<usize> = (0..venue.partitions().len())
        .filter(|&i| venue.partitions()[i].kind != PartitionKind::Stairs)
        .collect();
    if domain.is_empty() {
        return Err(Error::Workload("venue has no partition for query endpoints".into()));
    }
    let mut rng = stage_rng(seed, Stage::Queries);
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let m = sizes[i % sizes.len()];
        let mut cats: Vec<CategoryId> = pool.choose_multiple(&mut rng, m).copied().collect();
        cats.shuffle(&mut rng);
        let source = random_location(&mut rng, venue, &domain);
        let target = random_location(&mut rng, venue, &domain);
        out.push(CamQuery {
            source,
            target,
            categories: cats,
            alpha,
        });
    }
    Ok(out)
}

/// `k` relocated copies of every object: each copy keeps its category and
/// score, moves to a random position in a random room, and gets a new id.
pub fn replicate_dataset(venue: &Venue, points: &[IndoorPoint], k: usize, seed: u64) -> Result<Vec<IndoorPoint>> {
    if k == 0 {
        return Err(Error::Workload("replication factor must be at least 1".into()));
    }
    let domain = placement_partitions(venue);
    if domain.is_empty() && !points.is_empty() {
        return Err(Error::Workload("venue has no partition to place objects in".into()));
    }
    let mut rng = stage_rng(seed, Stage::Replicate);
    let mut out = Vec::with_capacity(points.len() * k);
    for _ in 0..k {
        for p in points {
            let part = &venue.partitions()[*domain.choose(&mut rng).expect("non-empty")];
            out.push(IndoorPoint {
                id: PointId(out.len() as u32),
                partition_id: part.id,
                position: random_position(&mut rng, part),
                category: p.category,
                static_score: p.static_score,
            });
        }
    }
    Ok(out)
}

/// A generated venue with its objects and queries.
#[derive(Clone, Debug)]
pub struct Workload {
    pub venue: Venue,
    pub queries: Vec<CamQuery>,
}

/// Runs the whole pipeline: venue, objects, then queries over every
/// category in `spec.bucket`.
pub fn build_workload(spec: &WorkloadSpec) -> Result<Workload> {
    let geometry = generate_venue(spec)?;
    let points = place_objects(&geometry, spec)?;
    let buckets = bucket_categories(&points, spec.scale)?;
    let venue = geometry
        .with_points(points)
        .with_categories(category_catalogue(spec.categories));
    let queries = generate_query_mix(
        &buckets[&spec.bucket],
        spec.queries,
        &spec.query_sizes,
        spec.alpha,
        &venue,
        spec.seed,
    )?;
    Ok(Workload { venue, queries })
}
