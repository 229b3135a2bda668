//! Plans routes greedily and compares them with the exact optimum.

use camroute::index::DEFAULT_FANOUT;
use camroute::oracle::{exact_route, DEFAULT_ORACLE_LIMIT};
use camroute::routing::GcnnConfig;
use camroute::workload::{build_workload, WorkloadSpec};
use camroute::{gcnn, CategoryIndex, IndoorSpace};

pub fn run_example() -> camroute::Result<()> {
    let w = build_workload(&WorkloadSpec {
        queries: 5,
        ..Default::default()
    })?;
    let space = IndoorSpace::new(w.venue)?;
    let index = CategoryIndex::build(&space, DEFAULT_FANOUT)?;
    for (i, q) in w.queries.iter().enumerate() {
        let plan = gcnn(&space, &index, q, GcnnConfig::default())?;
        let best = exact_route(&space, q, DEFAULT_ORACLE_LIMIT)?;
        let (c, opt) = (plan.route.cost(q.alpha), best.route.cost(q.alpha));
        let stops: Vec<u32> = plan.route.point_ids().iter().map(|p| p.0).collect();
        println!(
            "query {i}: {} categories, stops {stops:?}, cost {c:.2}, optimal {opt:.2}, ratio {:.3}, {} points scored",
            q.categories.len(),
            c / opt,
            plan.points_evaluated
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
