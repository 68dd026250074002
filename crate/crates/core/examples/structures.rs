//! The two (para-)Kähler structures of the product and the neutral metric at one point.

use minsurf::algebra::{QuadricPoint, Vec3P};
use minsurf::product::{apply_j, g_signature, metric_g, omega_k, tangent_project, ProductPoint};

fn main() -> minsurf::Result<()> {
    for p in [0u8, 1] {
        let (a, b) = if p == 0 {
            ([0.0, 0.6, 0.8], [1.0, 0.0, 0.0])
        } else {
            ([0.0, 1.0, 0.0], [0.5f64.sinh(), 0.0, 0.5f64.cosh()])
        };
        let base = ProductPoint::new(QuadricPoint::new(Vec3P::new(a, p)?)?, QuadricPoint::new(Vec3P::new(b, p)?)?)?;
        let x = tangent_project(&base, &Vec3P::new([1.0, 0.3, -0.2], p)?, &Vec3P::new([0.2, 1.0, 0.4], p)?)?;
        let y = tangent_project(&base, &Vec3P::new([-0.4, 0.1, 0.9], p)?, &Vec3P::new([0.7, -0.3, 0.1], p)?)?;
        println!("p = {p}: G signature {:?}", g_signature(p, &base.flat()));
        for k in 1..=2u8 {
            let jx = apply_j(k, &x)?;
            let jjx = apply_j(k, &jx)?;
            println!(
                "  J_{k}: Omega(X,Y) = {:+.6}, G(JX,Y) = {:+.6}, J^2 X = {:?}",
                omega_k(k, &x, &y)?,
                metric_g(&jx, &y)?,
                jjx.flat().map(|c| (c * 1e6).round() / 1e6)
            );
        }
        println!("  X = {:?}", x.flat().map(|c| (c * 1e6).round() / 1e6));
    }
    Ok(())
}
