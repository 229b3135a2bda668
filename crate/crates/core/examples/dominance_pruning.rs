//! Removes dominated objects of the most frequent query categories.

use camroute::bench::frequent_categories;
use camroute::dominance::{preprocess, PruneOptions};
use camroute::index::DEFAULT_FANOUT;
use camroute::workload::{build_workload, WorkloadSpec};
use camroute::{CategoryIndex, IndoorSpace};

pub fn run_example() -> camroute::Result<()> {
    let w = build_workload(&WorkloadSpec::default())?;
    let space = IndoorSpace::new(w.venue)?;
    let index = CategoryIndex::build(&space, DEFAULT_FANOUT)?;
    for delta in [50, 100] {
        let frequent = frequent_categories(&w.queries, delta);
        let (pruned, report) = preprocess(&space, &index, &frequent, PruneOptions::default())?;
        println!(
            "delta {delta}: {} categories, {} partitions pruned, {} -> {} objects ({} live in the index)",
            frequent.len(),
            report.partitions_pruned,
            report.points_before,
            report.points_after,
            pruned.total_live()
        );
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
