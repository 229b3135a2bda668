//! Venue JSON and object CSV files.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CategoryId, IndoorPoint, PartitionId, PointId, Position, Venue};
use crate::error::Result;

pub const OBJECTS_CSV_HEADER: [&str; 7] = ["id", "partition_id", "x", "y", "floor", "category", "static_score"];

#[derive(Debug, Serialize, Deserialize)]
struct ObjectRow {
    id: u32,
    partition_id: u32,
    x: f64,
    y: f64,
    floor: i32,
    category: u32,
    static_score: f64,
}

impl From<&IndoorPoint> for ObjectRow {
    fn from(p: &IndoorPoint) -> Self {
        ObjectRow {
            id: p.id.0,
            partition_id: p.partition_id.0,
            x: p.position.x,
            y: p.position.y,
            floor: p.position.floor,
            category: p.category.0,
            static_score: p.static_score,
        }
    }
}

impl From<ObjectRow> for IndoorPoint {
    fn from(r: ObjectRow) -> Self {
        IndoorPoint {
            id: PointId(r.id),
            partition_id: PartitionId(r.partition_id),
            position: Position::new(r.x, r.y, r.floor),
            category: CategoryId(r.category),
            static_score: r.static_score,
        }
    }
}

pub fn read_venue<R: Read>(reader: R) -> Result<Venue> {
    Ok(serde_json::from_reader(reader)?)
}

pub fn write_venue<W: Write>(writer: W, venue: &Venue) -> Result<()> {
    serde_json::to_writer_pretty(writer, venue)?;
    Ok(())
}

pub fn load_venue(path: impl AsRef<Path>) -> Result<Venue> {
    read_venue(BufReader::new(File::open(path)?))
}

pub fn save_venue(path: impl AsRef<Path>, venue: &Venue) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_venue(&mut w, venue)?;
    w.flush()?;
    Ok(())
}

pub fn read_objects<R: Read>(reader: R) -> Result<Vec<IndoorPoint>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize::<ObjectRow>() {
        out.push(row?.into());
    }
    Ok(out)
}

pub fn write_objects<W: Write>(writer: W, points: &[IndoorPoint]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for p in points {
        wtr.serialize(ObjectRow::from(p))?;
    }
    if points.is_empty() {
        wtr.write_record(OBJECTS_CSV_HEADER)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn load_objects(path: impl AsRef<Path>) -> Result<Vec<IndoorPoint>> {
    read_objects(BufReader::new(File::open(path)?))
}

pub fn save_objects(path: impl AsRef<Path>, points: &[IndoorPoint]) -> Result<()> {
    write_objects(BufWriter::new(File::create(path)?), points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn objects_csv_header_is_fixed() {
        let p = IndoorPoint {
            id: PointId(3),
            partition_id: PartitionId(1),
            position: Position::new(1.5, 2.0, 0),
            category: CategoryId(7),
            static_score: 4.25,
        };
        let mut buf = Vec::new();
        write_objects(&mut buf, std::slice::from_ref(&p)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "id,partition_id,x,y,floor,category,static_score"
        );
        let back = read_objects(text.as_bytes()).unwrap();
        assert_eq!(back, vec![p]);
    }

    #[test]
    fn empty_object_file_still_has_header() {
        let mut buf = Vec::new();
        write_objects(&mut buf, &[]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap().trim(),
            "id,partition_id,x,y,floor,category,static_score"
        );
    }
}
