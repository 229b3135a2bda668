//! Cost-aware multi-category route planning in indoor venues.
//!
//! A venue is a set of partitions (rooms, hallway segments, staircases)
//! connected by doors. Objects of several categories sit inside partitions,
//! each with a static cost. A query asks for a route from a source to a
//! target that visits one object of every requested category while
//! minimising `α·travel + (1−α)·static`.
//!
//! * [`venue`]: model, validation, door-to-door graph and indoor distances.
//! * [`index`]: hierarchical category index with nearest-neighbour search.
//! * [`routing`]: the cost model and the greedy planner.
//! * [`dominance`]: object pruning inside partitions.
//! * [`oracle`]: exact search and a rank-once baseline.
//! * [`workload`]: synthetic venues, objects and queries.
//! * [`bench`]: experiment runner writing per-query CSV results.

pub mod bench;
pub mod dominance;
pub mod error;
pub mod index;
pub mod oracle;
pub mod routing;
#[cfg(test)]
pub(crate) mod testkit;
pub mod venue;
pub mod workload;

pub use error::{Error, Result};
pub use index::{CategoryIndex, QueryContext};
pub use routing::{gcnn, CamQuery, Route};
pub use venue::{CategoryId, DoorId, IndoorSpace, Location, PartitionId, PointId, Venue};
