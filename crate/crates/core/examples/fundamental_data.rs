//! Reads the fundamental data off a para-holomorphic graph and checks its compatibility equations.

use minsurf::fundata::{compat_residuals, extract, ExtractOptions, FundamentalData};
use minsurf::surfaces::{build_example, example_grid};

fn main() -> minsurf::Result<()> {
    for n in [33, 65] {
        let f = build_example("paraholo:z2", example_grid("paraholo:z2", n, n)?)?;
        let d = extract(&f, ExtractOptions::for_grid(&f, 1))?;
        let r = compat_residuals(&d)?;
        println!("n = {n}: p = {}, eps = {}, b = {}, {} samples", d.p, d.eps, d.b, d.count());
        for (name, v) in r.named() {
            println!("  {name:<16} {v:.3e}");
        }
        let back = FundamentalData::from_json(&d.to_json())?;
        assert_eq!(back, d);
    }
    Ok(())
}
