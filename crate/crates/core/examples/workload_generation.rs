//! Generates a venue, objects and queries from a seed and serialises them.

use camroute::routing::write_queries;
use camroute::venue::io::write_objects;
use camroute::workload::{bucket_categories, build_workload, replicate_dataset, WorkloadSpec};

pub fn run_example() -> camroute::Result<()> {
    let spec = WorkloadSpec {
        queries: 4,
        ..Default::default()
    };
    let w = build_workload(&spec)?;
    let v = &w.venue;
    println!(
        "{} partitions, {} doors, {} objects",
        v.partitions().len(),
        v.doors().len(),
        v.points().len()
    );
    for (bucket, cats) in bucket_categories(v.points(), spec.scale)? {
        println!("bucket {}: {} categories", bucket.label(), cats.len());
    }

    let mut csv = Vec::new();
    write_objects(&mut csv, &v.points()[..3])?;
    print!("{}", String::from_utf8_lossy(&csv));
    let mut jsonl = Vec::new();
    write_queries(&mut jsonl, &w.queries[..1])?;
    print!("{}", String::from_utf8_lossy(&jsonl));

    let doubled = replicate_dataset(v, v.points(), 2, spec.seed)?;
    println!("replicated twice: {} objects", doubled.len());

    // Same seed, same workload.
    assert_eq!(build_workload(&spec)?.queries, w.queries);
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
