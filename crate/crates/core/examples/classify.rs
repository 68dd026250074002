//! Point classification (Lagrangian, complex, generic) over the built-in examples.

use minsurf::immersion::classify_point;
use minsurf::surfaces::{build_example, example_grid, EXAMPLE_IDS};

fn main() -> minsurf::Result<()> {
    println!("{:<22} {:>6} {:>6} {:>6} {:>6} {:>6} {:>8}", "example", "lag1", "lag2", "cx1", "cx2", "deg", "generic");
    for id in EXAMPLE_IDS {
        let f = build_example(id, example_grid(id, 33, 33)?)?;
        let tol = 10.0 * f.spec.h().powi(2);
        let mut n = [0usize; 6];
        for i in 1..f.spec.nx - 1 {
            for j in 1..f.spec.ny - 1 {
                let Ok(c) = classify_point(&f, i, j, tol) else {
                    n[4] += 1;
                    continue;
                };
                let flags = [c.is_lagrangian_1, c.is_lagrangian_2, c.is_complex_1, c.is_complex_2, c.is_degenerate];
                for (k, &b) in flags.iter().enumerate() {
                    n[k] += b as usize;
                }
                n[5] += !flags.iter().any(|&b| b) as usize;
            }
        }
        println!("{id:<22} {:>6} {:>6} {:>6} {:>6} {:>6} {:>8}", n[0], n[1], n[2], n[3], n[4], n[5]);
    }
    Ok(())
}
