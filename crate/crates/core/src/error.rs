use crate::venue::{CategoryId, DoorId, PartitionId, PointId, ValidationReport};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("venue failed validation: {0}")]
    InvalidVenue(ValidationReport),

    #[error("door {0} is unreachable in the door-to-door graph")]
    UnreachableDoor(DoorId),

    #[error("unknown door {0}")]
    UnknownDoor(DoorId),

    #[error("unknown partition {0}")]
    UnknownPartition(PartitionId),

    #[error("unknown point {0}")]
    UnknownPoint(PointId),

    #[error("point {0} has already been removed")]
    PointNotLive(PointId),

    #[error("unknown index node {0}")]
    UnknownNode(usize),

    #[error("location ({x}, {y}, floor {floor}) is outside every partition")]
    Unlocated { x: f64, y: f64, floor: i32 },

    #[error("location ({x}, {y}) is outside partition {partition}")]
    OutsidePartition { x: f64, y: f64, partition: PartitionId },

    #[error("category {0} has no live points")]
    EmptyCategory(CategoryId),

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("oracle refuses {categories} categories (limit {limit})")]
    OracleScale { categories: usize, limit: usize },

    #[error("dominance precondition violated: {0}")]
    Dominance(String),

    #[error("invalid workload: {0}")]
    Workload(String),

    #[error("invalid experiment configuration: {0}")]
    Config(String),

    #[error("optimal cost is zero; approximation ratio is undefined")]
    ZeroOptimalCost,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
