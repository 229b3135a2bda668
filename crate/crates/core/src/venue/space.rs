use serde::{Deserialize, Serialize};

use super::{validate_venue, D2DGraph, PartitionId, PartitionKind, Position, Venue};
use crate::error::{Error, Result};

const CONTAIN_TOL: f64 = 1e-9;

/// A location as it appears in query files: a position, optionally pinned
/// to a partition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub x: f64,
    pub y: f64,
    pub floor: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<PartitionId>,
}

impl Location {
    pub fn new(x: f64, y: f64, floor: i32) -> Self {
        Location {
            x,
            y,
            floor,
            partition: None,
        }
    }

    pub fn in_partition(x: f64, y: f64, floor: i32, partition: PartitionId) -> Self {
        Location {
            x,
            y,
            floor,
            partition: Some(partition),
        }
    }
}

/// A location resolved to its owning partition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Site {
    pub(crate) part: usize,
    pub position: Position,
}

impl Site {
    /// Index of the owning partition in `venue.partitions()`.
    pub fn partition_index(&self) -> usize {
        self.part
    }

    pub fn to_location(&self, venue: &Venue) -> Location {
        Location {
            x: self.position.x,
            y: self.position.y,
            floor: self.position.floor,
            partition: Some(venue.partitions()[self.part].id),
        }
    }
}

/// Shortest-path distances from one site to every door of the venue.
#[derive(Clone, Debug)]
pub struct DistanceField {
    origin: Site,
    to_door: Vec<f64>,
}

impl DistanceField {
    pub fn origin(&self) -> &Site {
        &self.origin
    }

    /// Distance from the origin to door vertex `door`.
    #[inline]
    pub fn to_door(&self, door: usize) -> f64 {
        self.to_door[door]
    }
}

/// A validated venue together with its door-to-door graph.
///
/// Immutable after construction and safe to share between threads.
#[derive(Clone, Debug)]
pub struct IndoorSpace {
    venue: Venue,
    graph: D2DGraph,
    partition_doors: Vec<Vec<usize>>,
    point_sites: Vec<Site>,
}

impl IndoorSpace {
    /// Validates the venue and builds its door-to-door graph.
    pub fn new(venue: Venue) -> Result<Self> {
        let report = validate_venue(&venue);
        if !report.is_valid() {
            return Err(Error::InvalidVenue(report));
        }
        let graph = D2DGraph::build(&venue)?;
        let partition_doors = venue
            .partitions()
            .iter()
            .map(|p| {
                p.door_ids
                    .iter()
                    .map(|d| venue.door_index(*d).expect("validated door reference"))
                    .collect()
            })
            .collect();
        let point_sites = venue
            .points()
            .iter()
            .map(|p| Site {
                part: venue
                    .partition_index(p.partition_id)
                    .expect("validated partition reference"),
                position: p.position,
            })
            .collect();
        Ok(IndoorSpace {
            venue,
            graph,
            partition_doors,
            point_sites,
        })
    }

    pub fn venue(&self) -> &Venue {
        &self.venue
    }

    pub fn graph(&self) -> &D2DGraph {
        &self.graph
    }

    /// Door vertex indices of the partition at `part`.
    pub fn doors_of(&self, part: usize) -> &[usize] {
        &self.partition_doors[part]
    }

    /// Site of the point stored at `index` in `venue.points()`.
    pub fn point_site(&self, index: usize) -> Site {
        self.point_sites[index]
    }

    /// Resolves a location to the partition containing it.
    ///
    /// Without an explicit partition, rooms and hallways are preferred over
    /// staircases, then the lowest partition id wins.
    pub fn resolve(&self, loc: &Location) -> Result<Site> {
        let position = Position::new(loc.x, loc.y, loc.floor);
        if let Some(pid) = loc.partition {
            let part = self.venue.partition_index(pid).ok_or(Error::UnknownPartition(pid))?;
            let p = &self.venue.partitions()[part];
            if !p.spans_floor(loc.floor) || !contains(p.bounds, loc.x, loc.y) {
                return Err(Error::OutsidePartition {
                    x: loc.x,
                    y: loc.y,
                    partition: pid,
                });
            }
            return Ok(Site { part, position });
        }
        self.venue
            .partitions()
            .iter()
            .enumerate()
            .filter(|(_, p)| p.spans_floor(loc.floor) && contains(p.bounds, loc.x, loc.y))
            .min_by_key(|(_, p)| (p.kind == PartitionKind::Stairs, p.id))
            .map(|(part, _)| Site { part, position })
            .ok_or(Error::Unlocated {
                x: loc.x,
                y: loc.y,
                floor: loc.floor,
            })
    }

    #[inline]
    fn intra(&self, part: usize, a: Position, b: Position) -> f64 {
        self.venue.partitions()[part].intra_distance(a, b)
    }

    #[inline]
    fn door_position(&self, door: usize) -> Position {
        self.venue.doors()[door].position
    }

    /// Indoor distance between two sites.
    ///
    /// Minimum of the straight line (same partition only) and every
    /// door-to-door route `p -> d_a ~> d_b -> q`. The two intra-partition
    /// legs are summed before the graph distance is added, which makes the
    /// result exactly symmetric in its arguments.
    pub fn indoor_distance(&self, p: &Site, q: &Site) -> f64 {
        let mut best = if p.part == q.part {
            self.intra(p.part, p.position, q.position)
        } else {
            f64::INFINITY
        };
        let q_legs: Vec<(usize, f64)> = self.partition_doors[q.part]
            .iter()
            .map(|&db| (db, self.intra(q.part, self.door_position(db), q.position)))
            .collect();
        for &da in &self.partition_doors[p.part] {
            let pa = self.intra(p.part, p.position, self.door_position(da));
            for &(db, qb) in &q_legs {
                let d = (pa + qb) + self.graph.between(da, db);
                if d < best {
                    best = d;
                }
            }
        }
        best
    }

    /// Indoor distance between two query-file locations.
    pub fn distance(&self, a: &Location, b: &Location) -> Result<f64> {
        let p = self.resolve(a)?;
        let q = self.resolve(b)?;
        Ok(self.indoor_distance(&p, &q))
    }

    /// Distances from `origin` to every door, for repeated one-to-many use.
    pub fn field(&self, origin: &Site) -> DistanceField {
        let n = self.graph.door_count();
        let mut to_door = vec![f64::INFINITY; n];
        for &da in &self.partition_doors[origin.part] {
            let leg = self.intra(origin.part, origin.position, self.door_position(da));
            for (d, slot) in to_door.iter_mut().enumerate() {
                let v = leg + self.graph.between(da, d);
                if v < *slot {
                    *slot = v;
                }
            }
        }
        DistanceField {
            origin: *origin,
            to_door,
        }
    }

    /// Distance from a field's origin to `q`. Agrees with
    /// [`IndoorSpace::indoor_distance`] up to floating-point rounding.
    pub fn field_distance(&self, field: &DistanceField, q: &Site) -> f64 {
        let origin = &field.origin;
        let mut best = if origin.part == q.part {
            self.intra(q.part, origin.position, q.position)
        } else {
            f64::INFINITY
        };
        for &db in &self.partition_doors[q.part] {
            let d = field.to_door[db] + self.intra(q.part, self.door_position(db), q.position);
            if d < best {
                best = d;
            }
        }
        best
    }

    /// Lower bound on the distance from a field's origin to anything inside
    /// the region entered only through `boundary` doors. Zero when the
    /// origin's partition is inside the region.
    pub fn entry_bound(&self, field: &DistanceField, origin_inside: bool, boundary: &[usize]) -> f64 {
        if origin_inside {
            return 0.0;
        }
        boundary.iter().map(|&b| field.to_door[b]).fold(f64::INFINITY, f64::min)
    }
}

fn contains(bounds: super::Rect, x: f64, y: f64) -> bool {
    x >= bounds.x_min - CONTAIN_TOL
        && x <= bounds.x_max + CONTAIN_TOL
        && y >= bounds.y_min - CONTAIN_TOL
        && y <= bounds.y_max + CONTAIN_TOL
}
