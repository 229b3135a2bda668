//! Builds a generated venue and inspects its door graph and indoor distances.

use camroute::venue::validate_venue;
use camroute::workload::{build_workload, WorkloadSpec};
use camroute::{IndoorSpace, Location};

pub fn run_example() -> camroute::Result<()> {
    let w = build_workload(&WorkloadSpec::default())?;
    let report = validate_venue(&w.venue);
    println!("valid venue: {}", report.is_valid());

    let space = IndoorSpace::new(w.venue)?;
    let g = space.graph();
    println!(
        "{} doors, {} edges, diameter {:.2}",
        g.door_count(),
        g.edges().len(),
        g.diameter()
    );

    let a = Location::new(2.0, 2.0, 0);
    let b = Location::new(30.0, 18.0, 3);
    let d = space.distance(&a, &b)?;
    println!("distance ground floor -> top floor: {d:.3}");
    assert_eq!(d, space.distance(&b, &a)?);
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
