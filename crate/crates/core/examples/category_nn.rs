//! Category nearest neighbour search through the hierarchical index.

use camroute::index::{QueryContext, DEFAULT_FANOUT};
use camroute::workload::{build_workload, WorkloadSpec};
use camroute::{CategoryIndex, IndoorSpace, Location};

pub fn run_example() -> camroute::Result<()> {
    let w = build_workload(&WorkloadSpec::default())?;
    let space = IndoorSpace::new(w.venue)?;
    let index = CategoryIndex::build(&space, DEFAULT_FANOUT)?;
    println!("{} nodes, {} leaves", index.nodes().len(), index.leaves().count());

    let source = Location::new(2.0, 2.0, 0);
    let target = Location::new(30.0, 18.0, 1);
    // Lower alpha favours cheap objects over close ones.
    for alpha in [1.0, 0.5, 0.0] {
        let ctx = QueryContext::new(source, target, alpha)?;
        for c in space.venue().category_ids().into_iter().take(3) {
            let hit = index.cnn_at(&space, &source, c, &ctx)?;
            println!(
                "alpha {alpha}: category {} -> point {} (score {:.2})",
                c.0, hit.id.0, hit.score
            );
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
