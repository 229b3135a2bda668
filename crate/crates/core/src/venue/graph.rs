use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use serde::{Deserialize, Serialize};

use super::{DoorId, Venue};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: DoorId,
    pub b: DoorId,
    pub length: f64,
}

/// Door-to-door graph with all-pairs door distances.
///
/// Vertex `i` is `venue.doors()[i]`. The distance matrix is symmetric by
/// construction: entry `(i, j)` and `(j, i)` both come from the Dijkstra run
/// rooted at `min(i, j)`, so `door_distance(a, b) == door_distance(b, a)`
/// bit for bit.
#[derive(Clone, Debug, PartialEq)]
pub struct D2DGraph {
    door_ids: Vec<DoorId>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(usize, f64)>>,
    dist: Vec<f64>,
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem {
    dist: f64,
    vertex: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl D2DGraph {
    /// Builds the graph: one edge per unordered door pair sharing a
    /// partition, weighted by the intra-partition distance. A pair shared by
    /// two partitions keeps the shorter weight.
    pub fn build(venue: &Venue) -> Result<Self> {
        let doors = venue.doors();
        let mut weights: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for part in venue.partitions() {
            let idx: Vec<usize> = part
                .door_ids
                .iter()
                .map(|d| venue.door_index(*d).ok_or(Error::UnknownDoor(*d)))
                .collect::<Result<_>>()?;
            for (k, &i) in idx.iter().enumerate() {
                for &j in &idx[k + 1..] {
                    if i == j {
                        continue;
                    }
                    let w = part.intra_distance(doors[i].position, doors[j].position);
                    let key = (i.min(j), i.max(j));
                    weights.entry(key).and_modify(|old| *old = old.min(w)).or_insert(w);
                }
            }
        }

        let n = doors.len();
        let mut adjacency = vec![Vec::new(); n];
        let mut edges = Vec::with_capacity(weights.len());
        for (&(i, j), &w) in &weights {
            adjacency[i].push((j, w));
            adjacency[j].push((i, w));
            edges.push(Edge {
                a: doors[i].id,
                b: doors[j].id,
                length: w,
            });
        }

        let mut dist = vec![f64::INFINITY; n * n];
        for src in 0..n {
            let row = dijkstra(&adjacency, src);
            for (dst, d) in row.into_iter().enumerate().skip(src) {
                dist[src * n + dst] = d;
                dist[dst * n + src] = d;
            }
        }
        if let Some(j) = (0..n).find(|&j| !dist[j].is_finite()) {
            return Err(Error::UnreachableDoor(doors[j].id));
        }

        Ok(D2DGraph {
            door_ids: doors.iter().map(|d| d.id).collect(),
            edges,
            adjacency,
            dist,
        })
    }

    pub fn door_count(&self) -> usize {
        self.door_ids.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, door: usize) -> &[(usize, f64)] {
        &self.adjacency[door]
    }

    pub fn door_id(&self, index: usize) -> DoorId {
        self.door_ids[index]
    }

    /// Shortest-path length between two doors given by vertex index.
    #[inline]
    pub fn between(&self, a: usize, b: usize) -> f64 {
        self.dist[a * self.door_ids.len() + b]
    }

    /// Shortest-path length between two doors given by id.
    pub fn door_distance(&self, venue: &Venue, a: DoorId, b: DoorId) -> Result<f64> {
        let i = venue.door_index(a).ok_or(Error::UnknownDoor(a))?;
        let j = venue.door_index(b).ok_or(Error::UnknownDoor(b))?;
        let d = self.between(i, j);
        if d.is_finite() {
            Ok(d)
        } else {
            Err(Error::UnreachableDoor(b))
        }
    }

    /// Largest finite door-to-door distance.
    pub fn diameter(&self) -> f64 {
        self.dist.iter().copied().filter(|d| d.is_finite()).fold(0.0, f64::max)
    }
}

fn dijkstra(adjacency: &[Vec<(usize, f64)>], src: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adjacency.len()];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(HeapItem { dist: 0.0, vertex: src });
    while let Some(HeapItem { dist: d, vertex }) = heap.pop() {
        if d > dist[vertex] {
            continue;
        }
        for &(next, w) in &adjacency[vertex] {
            let nd = d + w;
            if nd < dist[next] {
                dist[next] = nd;
                heap.push(HeapItem { dist: nd, vertex: next });
            }
        }
    }
    dist
}
