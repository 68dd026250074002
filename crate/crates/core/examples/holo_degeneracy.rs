//! Graph of w = z^2 in S^2 x S^2: where its induced metric degenerates.

use minsurf::surfaces::{build_example, degeneracy_locus, example_grid, hausdorff_to_circle};

fn main() -> minsurf::Result<()> {
    let spec = example_grid("holo:z2", 129, 129)?;
    let f = build_example("holo:z2", spec)?;
    let loc = degeneracy_locus(&f);
    let straddling = loc.straddle.iter().filter(|&&b| b).count();
    println!("{} contour segments, {straddling} samples next to a sign change", loc.segments.len());
    // G(F_x,F_x) vanishes on the circles |z|^2 = 1 + sqrt(3) -+ sqrt(3 + 2 sqrt(3))
    let s3 = 3f64.sqrt();
    let radii = [(1.0 + s3 - (3.0 + 2.0 * s3).sqrt()).sqrt(), (1.0 + s3 + (3.0 + 2.0 * s3).sqrt()).sqrt()];
    let off = loc
        .segments
        .iter()
        .flatten()
        .map(|&(x, y)| radii.iter().map(|r| (x.hypot(y) - r).abs()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    println!("radii {:.5}, {:.5}: largest contour offset {off:.2e} (h = {:.4})", radii[0], radii[1], spec.h());
    println!("Hausdorff distance to |z + 1| = 1: {:.3}", hausdorff_to_circle(&loc.segments, &spec, (-1.0, 0.0), 1.0));
    Ok(())
}
