//! The `verify` norms of a built-in example, as the command line reports them.

use std::collections::BTreeMap;

use minsurf::cli::verify_grid;
use minsurf::surfaces::{build_example, example_grid};

fn main() -> minsurf::Result<()> {
    let id = std::env::args().nth(1).unwrap_or_else(|| "paraholo:z2".into());
    let f = build_example(&id, example_grid(&id, 65, 65)?)?;
    let r = verify_grid(&f, &BTreeMap::new(), 42);
    for n in &r.norms {
        let reference = n.reference.map_or(String::new(), |c| format!("  (coarse {c:.2e})"));
        println!("{:<26} {:.3e} <= {:.3e}{reference}", n.name, n.value, n.tol);
    }
    println!("complex fraction {:.3}, pass {}", r.complex_fraction, r.pass);
    Ok(())
}
