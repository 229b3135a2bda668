//! Fixtures shared by unit tests.

use crate::routing::CamQuery;
use crate::venue::{
    Category, CategoryId, Door, DoorId, IndoorPoint, IndoorSpace, Location, Partition, PartitionId, PartitionKind,
    PointId, Position, Rect, Venue,
};
use crate::workload::{build_workload, Bucket, Workload, WorkloadSpec};

pub fn partition(id: u32, bounds: Rect, kind: PartitionKind, doors: &[u32]) -> Partition {
    Partition {
        id: PartitionId(id),
        floor: 0,
        upper_floor: None,
        bounds,
        kind,
        door_ids: doors.iter().copied().map(DoorId).collect(),
    }
}

pub fn door(id: u32, x: f64, y: f64, parts: &[u32]) -> Door {
    Door {
        id: DoorId(id),
        position: Position::new(x, y, 0),
        partition_ids: parts.iter().copied().map(PartitionId).collect(),
    }
}

pub fn point(id: u32, part: u32, x: f64, y: f64, category: u32, score: f64) -> IndoorPoint {
    IndoorPoint {
        id: PointId(id),
        partition_id: PartitionId(part),
        position: Position::new(x, y, 0),
        category: CategoryId(category),
        static_score: score,
    }
}

/// Rooms `0` (x 0..10) and `2` (x 20..30) either side of hallway `1`,
/// all 10 deep, joined by doors at `(10, 5)` and `(20, 5)`.
pub fn corridor_geometry() -> Venue {
    Venue::new(
        vec![
            partition(0, Rect::new(0.0, 0.0, 10.0, 10.0), PartitionKind::Room, &[0]),
            partition(1, Rect::new(10.0, 0.0, 20.0, 10.0), PartitionKind::Hallway, &[0, 1]),
            partition(2, Rect::new(20.0, 0.0, 30.0, 10.0), PartitionKind::Room, &[1]),
        ],
        vec![door(0, 10.0, 5.0, &[0, 1]), door(1, 20.0, 5.0, &[1, 2])],
        Vec::new(),
        Vec::new(),
    )
}

/// [`corridor_geometry`] with two objects of each of three categories.
pub fn corridor() -> IndoorSpace {
    let points = vec![
        point(0, 0, 5.0, 5.0, 0, 2.0),
        point(1, 2, 25.0, 5.0, 0, 0.0),
        point(2, 1, 15.0, 5.0, 1, 4.0),
        point(3, 2, 28.0, 9.0, 1, 1.0),
        point(4, 0, 2.0, 2.0, 2, 1.0),
        point(5, 2, 22.0, 1.0, 2, 3.0),
    ];
    let cats = (0..3)
        .map(|i| Category {
            id: CategoryId(i),
            name: format!("c{i}"),
        })
        .collect();
    IndoorSpace::new(corridor_geometry().with_points(points).with_categories(cats)).unwrap()
}

pub fn corridor_query(categories: &[u32], alpha: f64) -> CamQuery {
    CamQuery {
        source: Location::new(1.0, 5.0, 0),
        target: Location::new(29.0, 5.0, 0),
        categories: categories.iter().copied().map(CategoryId).collect(),
        alpha,
    }
}

/// Two floors of four rooms, three categories of a few objects each.
pub fn small_spec(seed: u64) -> WorkloadSpec {
    WorkloadSpec {
        seed,
        floors: 2,
        rooms_per_floor: 4,
        categories: 3,
        bucket: Bucket::XS,
        scale: 0.1,
        shops: None,
        stockists: None,
        queries: 6,
        query_sizes: vec![2, 3],
        ..Default::default()
    }
}

pub fn small(seed: u64) -> (IndoorSpace, Workload) {
    let w = build_workload(&small_spec(seed)).unwrap();
    (IndoorSpace::new(w.venue.clone()).unwrap(), w)
}
