//! Runs every algorithm over a query set and reports approximation ratios.

use camroute::bench::{run_suite, write_results, Algorithm, SuiteOptions};
use camroute::workload::{build_workload, WorkloadSpec};
use camroute::IndoorSpace;

pub fn run_example() -> camroute::Result<()> {
    let w = build_workload(&WorkloadSpec {
        queries: 8,
        ..Default::default()
    })?;
    let space = IndoorSpace::new(w.venue)?;
    let opts = SuiteOptions {
        algorithms: vec![
            Algorithm::Gcnn,
            Algorithm::GcnnDom,
            Algorithm::RankOnce,
            Algorithm::Oracle,
        ],
        delta: 100,
        ..Default::default()
    };
    let out = run_suite(&space, &w.queries, &opts)?;
    for a in &out.summary.algorithms {
        let ratio = a.mean_ratio.map(|r| format!("{r:.4}")).unwrap_or_default();
        println!(
            "{:<10} mean ratio {ratio:<8} points {}",
            a.algorithm.to_string(),
            a.total_points_evaluated
        );
    }
    let mut csv = Vec::new();
    write_results(&mut csv, &out.rows[..4])?;
    print!("{}", String::from_utf8_lossy(&csv));
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
