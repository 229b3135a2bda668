//! The static indoor world: partitions, doors, objects and the door-to-door
//! graph that all indoor distances are measured on.

mod graph;
pub mod io;
mod space;
mod validate;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use graph::{D2DGraph, Edge};
pub use space::{DistanceField, IndoorSpace, Location, Site};
pub use validate::{validate_venue, Finding, FindingKind, ValidationReport};

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident, $prefix:literal) => {
        $(#[$meta])*
        #[derive(
            Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

id_type!(
    /// Identifier of an indoor partition (room, hallway or staircase).
    PartitionId,
    "I"
);
id_type!(DoorId, "d");
id_type!(PointId, "p");
id_type!(CategoryId, "c");

/// Axis-aligned rectangle in meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        Rect {
            x_min,
            y_min,
            x_max,
            y_max,
        }
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn centroid(&self) -> (f64, f64) {
        (0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }

    /// True when `(x, y)` lies on one of the four edges, within `tol` meters.
    pub fn on_boundary(&self, x: f64, y: f64, tol: f64) -> bool {
        let inside_x = x >= self.x_min - tol && x <= self.x_max + tol;
        let inside_y = y >= self.y_min - tol && y <= self.y_max + tol;
        let on_vertical = inside_y && ((x - self.x_min).abs() <= tol || (x - self.x_max).abs() <= tol);
        let on_horizontal = inside_x && ((y - self.y_min).abs() <= tol || (y - self.y_max).abs() <= tol);
        on_vertical || on_horizontal
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartitionKind {
    Room,
    Hallway,
    Stairs,
}

/// A planar position on a floor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
    pub floor: i32,
}

impl Position {
    pub fn new(x: f64, y: f64, floor: i32) -> Self {
        Position { x, y, floor }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub id: PartitionId,
    pub floor: i32,
    /// Second floor of a staircase; absent (equal to `floor`) otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper_floor: Option<i32>,
    pub bounds: Rect,
    pub kind: PartitionKind,
    pub door_ids: Vec<DoorId>,
}

impl Partition {
    pub fn upper(&self) -> i32 {
        self.upper_floor.unwrap_or(self.floor)
    }

    pub fn spans_floor(&self, floor: i32) -> bool {
        floor == self.floor || floor == self.upper()
    }

    /// Obstacle-free distance between two positions inside this partition.
    ///
    /// Positions on different floors (only possible in a staircase) are
    /// separated by the staircase diagonal.
    pub fn intra_distance(&self, a: Position, b: Position) -> f64 {
        if a.floor == b.floor {
            (a.x - b.x).hypot(a.y - b.y)
        } else {
            self.bounds.diagonal()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Door {
    pub id: DoorId,
    pub position: Position,
    pub partition_ids: Vec<PartitionId>,
}

/// A category-tagged indoor object.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndoorPoint {
    pub id: PointId,
    pub partition_id: PartitionId,
    pub position: Position,
    pub category: CategoryId,
    pub static_score: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Category {
    pub id: CategoryId,
    pub name: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
struct RawVenue {
    partitions: Vec<Partition>,
    doors: Vec<Door>,
    #[serde(default)]
    points: Vec<IndoorPoint>,
    #[serde(default)]
    categories: Vec<Category>,
}

/// Partitions, doors, objects and the category catalogue.
///
/// Id lookups are rebuilt whenever the collections change, so a `Venue`
/// is always internally indexed; referential integrity is checked
/// separately by [`validate_venue`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawVenue")]
pub struct Venue {
    partitions: Vec<Partition>,
    doors: Vec<Door>,
    points: Vec<IndoorPoint>,
    categories: Vec<Category>,
    #[serde(skip)]
    lookup: Lookup,
}

#[derive(Clone, Debug, Default, PartialEq)]
struct Lookup {
    partitions: HashMap<PartitionId, usize>,
    doors: HashMap<DoorId, usize>,
    points: HashMap<PointId, usize>,
}

impl From<RawVenue> for Venue {
    fn from(raw: RawVenue) -> Self {
        Venue::new(raw.partitions, raw.doors, raw.points, raw.categories)
    }
}

impl Venue {
    pub fn new(
        partitions: Vec<Partition>,
        doors: Vec<Door>,
        points: Vec<IndoorPoint>,
        categories: Vec<Category>,
    ) -> Self {
        let mut venue = Venue {
            partitions,
            doors,
            points,
            categories,
            lookup: Lookup::default(),
        };
        venue.reindex();
        venue
    }

    fn reindex(&mut self) {
        // First occurrence wins; duplicates are reported by validation.
        let mut lookup = Lookup::default();
        for (i, p) in self.partitions.iter().enumerate() {
            lookup.partitions.entry(p.id).or_insert(i);
        }
        for (i, d) in self.doors.iter().enumerate() {
            lookup.doors.entry(d.id).or_insert(i);
        }
        for (i, p) in self.points.iter().enumerate() {
            lookup.points.entry(p.id).or_insert(i);
        }
        self.lookup = lookup;
    }

    /// Replaces the object set, keeping the geometry.
    pub fn with_points(mut self, points: Vec<IndoorPoint>) -> Self {
        self.points = points;
        self.reindex();
        self
    }

    pub fn with_categories(mut self, categories: Vec<Category>) -> Self {
        self.categories = categories;
        self
    }

    pub fn partitions(&self) -> &[Partition] {
        &self.partitions
    }

    pub fn doors(&self) -> &[Door] {
        &self.doors
    }

    pub fn points(&self) -> &[IndoorPoint] {
        &self.points
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    pub fn partition_index(&self, id: PartitionId) -> Option<usize> {
        self.lookup.partitions.get(&id).copied()
    }

    pub fn door_index(&self, id: DoorId) -> Option<usize> {
        self.lookup.doors.get(&id).copied()
    }

    pub fn point_index(&self, id: PointId) -> Option<usize> {
        self.lookup.points.get(&id).copied()
    }

    pub fn partition(&self, id: PartitionId) -> Option<&Partition> {
        self.partition_index(id).map(|i| &self.partitions[i])
    }

    pub fn door(&self, id: DoorId) -> Option<&Door> {
        self.door_index(id).map(|i| &self.doors[i])
    }

    pub fn point(&self, id: PointId) -> Option<&IndoorPoint> {
        self.point_index(id).map(|i| &self.points[i])
    }

    /// Category ids present in the catalogue or carried by any object, sorted.
    pub fn category_ids(&self) -> Vec<CategoryId> {
        let mut ids: Vec<CategoryId> = self
            .categories
            .iter()
            .map(|c| c.id)
            .chain(self.points.iter().map(|p| p.category))
            .collect();
        ids.sort();
        ids.dedup();
        ids
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::error::Error;
    use crate::testkit::{corridor, corridor_geometry, door, partition, point, small};

    /// Floyd-Warshall over door pairs sharing a partition, with the
    /// Euclidean (or staircase-diagonal) leg lengths computed afresh.
    fn floyd(venue: &Venue) -> Vec<Vec<f64>> {
        let n = venue.doors().len();
        let mut d = vec![vec![f64::INFINITY; n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        for part in venue.partitions() {
            for a in &part.door_ids {
                for b in &part.door_ids {
                    let (i, j) = (venue.door_index(*a).unwrap(), venue.door_index(*b).unwrap());
                    let (pa, pb) = (venue.doors()[i].position, venue.doors()[j].position);
                    let w = if pa.floor == pb.floor {
                        ((pa.x - pb.x).powi(2) + (pa.y - pb.y).powi(2)).sqrt()
                    } else {
                        (part.bounds.width().powi(2) + part.bounds.height().powi(2)).sqrt()
                    };
                    d[i][j] = d[i][j].min(w);
                }
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = d[i][k] + d[k][j];
                    if via < d[i][j] {
                        d[i][j] = via;
                    }
                }
            }
        }
        d
    }

    #[test]
    fn corridor_distances() {
        let s = corridor();
        let d = |a: (f64, f64), b: (f64, f64)| {
            s.distance(&Location::new(a.0, a.1, 0), &Location::new(b.0, b.1, 0))
                .unwrap()
        };
        assert_eq!(d((5.0, 5.0), (25.0, 5.0)), 20.0);
        assert_eq!(d((5.0, 5.0), (5.0, 8.0)), 3.0);
        // Straight line to the door then on: (7,1)->(10,5) is 5.
        assert_eq!(d((7.0, 1.0), (20.0, 5.0)), 15.0);
        assert_eq!(s.graph().door_distance(s.venue(), DoorId(0), DoorId(1)).unwrap(), 10.0);
        assert_eq!(s.graph().diameter(), 10.0);
    }

    #[test]
    fn door_distances_match_floyd_warshall() {
        for seed in [1, 2, 3] {
            let (s, _) = small(seed);
            let want = floyd(s.venue());
            for (i, row) in want.iter().enumerate() {
                for (j, &w) in row.iter().enumerate() {
                    let got = s.graph().between(i, j);
                    assert!((got - w).abs() <= 1e-9 * w.max(1.0), "{i}->{j}: {got} vs {w}");
                    assert_eq!(got.to_bits(), s.graph().between(j, i).to_bits());
                }
            }
        }
    }

    #[test]
    fn resolve_prefers_rooms_and_lowest_id() {
        let s = corridor();
        // x = 10 lies on the shared wall of partitions 0 and 1.
        let site = s.resolve(&Location::new(10.0, 3.0, 0)).unwrap();
        assert_eq!(site.partition_index(), 0);
        let pinned = s
            .resolve(&Location::in_partition(10.0, 3.0, 0, PartitionId(1)))
            .unwrap();
        assert_eq!(pinned.partition_index(), 1);
        assert!(matches!(
            s.resolve(&Location::new(40.0, 3.0, 0)),
            Err(Error::Unlocated { .. })
        ));
        assert!(matches!(
            s.resolve(&Location::in_partition(25.0, 3.0, 0, PartitionId(0))),
            Err(Error::OutsidePartition { .. })
        ));
        assert!(matches!(
            s.resolve(&Location::in_partition(5.0, 3.0, 0, PartitionId(9))),
            Err(Error::UnknownPartition(_))
        ));
    }

    #[test]
    fn field_agrees_with_direct_distance() {
        let (s, _) = small(4);
        let n = s.venue().points().len();
        for i in (0..n).step_by(3) {
            let a = s.point_site(i);
            let field = s.field(&a);
            for j in 0..n {
                let b = s.point_site(j);
                let direct = s.indoor_distance(&a, &b);
                assert!((s.field_distance(&field, &b) - direct).abs() < 1e-9);
                assert_eq!(direct.to_bits(), s.indoor_distance(&b, &a).to_bits());
            }
        }
    }

    #[test]
    fn validation_reports_each_kind() {
        let good = corridor_geometry();
        assert!(validate_venue(&good).is_valid());

        let mut parts = good.partitions().to_vec();
        parts.push(partition(0, Rect::new(0.0, 0.0, 0.0, 5.0), PartitionKind::Room, &[]));
        let mut doors = good.doors().to_vec();
        doors.push(door(7, 15.0, 4.0, &[1]));
        doors.push(door(8, 30.0, 5.0, &[2, 5]));
        let points = vec![point(0, 0, 50.0, 5.0, 0, -1.0), point(0, 4, 1.0, 1.0, 0, 1.0)];
        let bad = Venue::new(parts, doors, points, Vec::new());
        let r = validate_venue(&bad);
        for kind in [
            FindingKind::DuplicateId,
            FindingKind::DegenerateBounds,
            FindingKind::PartitionWithoutDoors,
            FindingKind::DoorOffBoundary,
            FindingKind::DanglingReference,
            FindingKind::PointOutsideBounds,
            FindingKind::NegativeScore,
        ] {
            assert!(r.count(kind) > 0, "{kind:?} missing from {r}");
        }
        assert!(matches!(IndoorSpace::new(bad), Err(Error::InvalidVenue(_))));
    }

    #[test]
    fn disconnected_venue_is_rejected() {
        let v = Venue::new(
            vec![
                partition(0, Rect::new(0.0, 0.0, 10.0, 10.0), PartitionKind::Room, &[0]),
                partition(1, Rect::new(20.0, 0.0, 30.0, 10.0), PartitionKind::Room, &[1]),
            ],
            vec![door(0, 10.0, 5.0, &[0]), door(1, 20.0, 5.0, &[1])],
            Vec::new(),
            Vec::new(),
        );
        assert_eq!(validate_venue(&v).count(FindingKind::Disconnected), 1);
    }

    #[test]
    fn door_arity() {
        let mut doors = corridor_geometry().doors().to_vec();
        doors[0].partition_ids = vec![PartitionId(0), PartitionId(1), PartitionId(2)];
        let v = Venue::new(corridor_geometry().partitions().to_vec(), doors, Vec::new(), Vec::new());
        assert!(validate_venue(&v).count(FindingKind::DoorArity) > 0);
    }

    #[test]
    fn venue_json_round_trip() {
        let (s, _) = small(5);
        let mut buf = Vec::new();
        io::write_venue(&mut buf, s.venue()).unwrap();
        let back = io::read_venue(buf.as_slice()).unwrap();
        assert_eq!(&back, s.venue());
        assert_eq!(back.point(PointId(0)), s.venue().point(PointId(0)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn distance_is_a_metric(ax in 0.0..30.0f64, ay in 0.0..10.0f64, bx in 0.0..30.0f64, by in 0.0..10.0f64, cx in 0.0..30.0f64, cy in 0.0..10.0f64) {
            let s = corridor();
            let l = |x, y| s.resolve(&Location::new(x, y, 0)).unwrap();
            let (a, b, c) = (l(ax, ay), l(bx, by), l(cx, cy));
            let ab = s.indoor_distance(&a, &b);
            prop_assert_eq!(ab.to_bits(), s.indoor_distance(&b, &a).to_bits());
            prop_assert!(ab >= 0.0);
            prop_assert!(s.indoor_distance(&a, &a) == 0.0);
            prop_assert!(s.indoor_distance(&a, &c) <= ab + s.indoor_distance(&b, &c) + 1e-9);
            // Never shorter than the straight line.
            prop_assert!(ab >= (ax - bx).hypot(ay - by) - 1e-9);
        }
    }
}
