use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::Venue;

/// Tolerance (meters) for "door lies on the partition boundary".
const BOUNDARY_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingKind {
    DuplicateId,
    DanglingReference,
    DegenerateBounds,
    DoorArity,
    DoorOffBoundary,
    PartitionWithoutDoors,
    PointOutsideBounds,
    NegativeScore,
    Disconnected,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub kind: FindingKind,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn count(&self, kind: FindingKind) -> usize {
        self.findings.iter().filter(|f| f.kind == kind).count()
    }

    fn push(&mut self, kind: FindingKind, message: String) {
        self.findings.push(Finding { kind, message });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, finding) in self.findings.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{:?}: {}", finding.kind, finding.message)?;
        }
        Ok(())
    }
}

/// Checks every structural invariant of a venue and reports all violations.
pub fn validate_venue(venue: &Venue) -> ValidationReport {
    let mut report = ValidationReport::default();

    let mut seen = HashSet::new();
    for p in venue.partitions() {
        if !seen.insert(p.id) {
            report.push(FindingKind::DuplicateId, format!("partition {} repeated", p.id));
        }
    }
    let mut seen = HashSet::new();
    for d in venue.doors() {
        if !seen.insert(d.id) {
            report.push(FindingKind::DuplicateId, format!("door {} repeated", d.id));
        }
    }
    let mut seen = HashSet::new();
    for p in venue.points() {
        if !seen.insert(p.id) {
            report.push(FindingKind::DuplicateId, format!("point {} repeated", p.id));
        }
    }

    for part in venue.partitions() {
        let b = part.bounds;
        if !(b.width() > 0.0 && b.height() > 0.0) {
            report.push(
                FindingKind::DegenerateBounds,
                format!("partition {} has non-positive area", part.id),
            );
        }
        if part.door_ids.is_empty() {
            report.push(
                FindingKind::PartitionWithoutDoors,
                format!("partition {} has no doors", part.id),
            );
        }
        for door_id in &part.door_ids {
            match venue.door(*door_id) {
                None => report.push(
                    FindingKind::DanglingReference,
                    format!("partition {} lists unknown door {}", part.id, door_id),
                ),
                Some(door) if !door.partition_ids.contains(&part.id) => report.push(
                    FindingKind::DanglingReference,
                    format!(
                        "partition {} lists door {} which does not list it back",
                        part.id, door_id
                    ),
                ),
                Some(_) => {}
            }
        }
    }

    for door in venue.doors() {
        let n = door.partition_ids.len();
        if n == 0 || n > 2 {
            report.push(
                FindingKind::DoorArity,
                format!("door {} references {} partitions", door.id, n),
            );
        }
        for pid in &door.partition_ids {
            match venue.partition(*pid) {
                None => report.push(
                    FindingKind::DanglingReference,
                    format!("door {} references unknown partition {}", door.id, pid),
                ),
                Some(part) => {
                    let pos = door.position;
                    if !part.spans_floor(pos.floor) || !part.bounds.on_boundary(pos.x, pos.y, BOUNDARY_TOL) {
                        report.push(
                            FindingKind::DoorOffBoundary,
                            format!("door {} is not on the boundary of partition {}", door.id, pid),
                        );
                    }
                    if !part.door_ids.contains(&door.id) {
                        report.push(
                            FindingKind::DanglingReference,
                            format!("door {} references partition {} which does not list it", door.id, pid),
                        );
                    }
                }
            }
        }
    }

    let known_categories: HashSet<_> = venue.categories().iter().map(|c| c.id).collect();
    for point in venue.points() {
        match venue.partition(point.partition_id) {
            None => report.push(
                FindingKind::DanglingReference,
                format!("point {} references unknown partition {}", point.id, point.partition_id),
            ),
            Some(part) => {
                let pos = point.position;
                if !part.spans_floor(pos.floor) || !part.bounds.contains(pos.x, pos.y) {
                    report.push(
                        FindingKind::PointOutsideBounds,
                        format!("point {} lies outside partition {}", point.id, part.id),
                    );
                }
            }
        }
        if !known_categories.is_empty() && !known_categories.contains(&point.category) {
            report.push(
                FindingKind::DanglingReference,
                format!("point {} has unknown category {}", point.id, point.category),
            );
        }
        if point.static_score < 0.0 || !point.static_score.is_finite() {
            report.push(
                FindingKind::NegativeScore,
                format!("point {} has static score {}", point.id, point.static_score),
            );
        }
    }

    if let Some(unreached) = first_unreachable_partition(venue) {
        report.push(
            FindingKind::Disconnected,
            format!(
                "partition {} is unreachable from partition {}",
                unreached,
                venue.partitions()[0].id
            ),
        );
    }

    report
}

fn first_unreachable_partition(venue: &Venue) -> Option<super::PartitionId> {
    let parts = venue.partitions();
    if parts.is_empty() {
        return None;
    }
    let mut adjacency: HashMap<usize, Vec<usize>> = HashMap::new();
    for door in venue.doors() {
        let idx: Vec<usize> = door
            .partition_ids
            .iter()
            .filter_map(|p| venue.partition_index(*p))
            .collect();
        for &a in &idx {
            for &b in &idx {
                if a != b {
                    adjacency.entry(a).or_default().push(b);
                }
            }
        }
    }
    let mut reached = vec![false; parts.len()];
    let mut stack = vec![0usize];
    reached[0] = true;
    while let Some(i) = stack.pop() {
        for &j in adjacency.get(&i).map(Vec::as_slice).unwrap_or(&[]) {
            if !reached[j] {
                reached[j] = true;
                stack.push(j);
            }
        }
    }
    reached.iter().position(|r| !r).map(|i| parts[i].id)
}
