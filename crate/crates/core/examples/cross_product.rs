//! Lorentzian cross product and the para-complex structure on de Sitter space.

use minsurf::algebra::{cross_p, inner_p, j_apply, QuadricPoint, Vec3P};

fn main() -> minsurf::Result<()> {
    let a = Vec3P::new([0.3, -1.1, 0.4], 1)?;
    let b = Vec3P::new([1.0, 0.2, -0.7], 1)?;
    let d = Vec3P::new([-0.5, 0.9, 1.3], 1)?;
    let lhs = inner_p(&cross_p(&a, &b)?, &cross_p(&a, &d)?)?;
    let rhs = -inner_p(&a, &a)? * inner_p(&b, &d)? + inner_p(&a, &b)? * inner_p(&a, &d)?;
    println!("<a x b, a x d> = {lhs:.15}");
    println!("-<a,a><b,d> + <a,b><a,d> = {rhs:.15}");

    // x = (sinh 0.4, cosh 0.4, 0) lies on dS^2
    let x = QuadricPoint::new(Vec3P::new([0.4f64.sinh(), 0.4f64.cosh(), 0.0], 1)?)?;
    let v = Vec3P::new([0.0, 0.0, 1.0], 1)?;
    let jv = j_apply(&x, &v)?;
    let jjv = j_apply(&x, &jv)?;
    println!("j v = {:?}, j j v = {:?}", jv.x, jjv.x);
    println!("g(jv, jv) = {:.3}, g(v, v) = {:.3}", inner_p(&jv, &jv)?, inner_p(&v, &v)?);
    Ok(())
}
