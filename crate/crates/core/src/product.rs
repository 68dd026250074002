//! The product S^2_p x S^2_p with its neutral metric G and the structures J_k, Omega_k.
//!
//! Points and tangent vectors are stored flat in R^6 as `(first factor, second factor)`.

use nalgebra::{Matrix4, SymmetricEigen};

use crate::algebra::{dot_p, j_raw, QuadricPoint, ScalarEps, Vec3P, V3, TAU_TAN};
use crate::error::{Error, Result};

pub type V6 = [f64; 6];

#[inline]
pub fn split(a: &V6) -> (V3, V3) {
    ([a[0], a[1], a[2]], [a[3], a[4], a[5]])
}

#[inline]
pub fn join(a: &V3, b: &V3) -> V6 {
    [a[0], a[1], a[2], b[0], b[1], b[2]]
}

#[inline]
pub fn add6(a: &V6, b: &V6) -> V6 {
    std::array::from_fn(|k| a[k] + b[k])
}

#[inline]
pub fn sub6(a: &V6, b: &V6) -> V6 {
    std::array::from_fn(|k| a[k] - b[k])
}

#[inline]
pub fn scale6(s: f64, a: &V6) -> V6 {
    std::array::from_fn(|k| s * a[k])
}

/// `a + s b`.
#[inline]
pub fn axpy6(a: &V6, s: f64, b: &V6) -> V6 {
    std::array::from_fn(|k| a[k] + s * b[k])
}

pub fn norm_inf6(a: &V6) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Flat neutral form `<a1,b1>_p - <a2,b2>_p`; equals G on tangent vectors.
#[inline]
pub fn g6(p: u8, a: &V6, b: &V6) -> f64 {
    let (a1, a2) = split(a);
    let (b1, b2) = split(b);
    dot_p(p, &a1, &b1) - dot_p(p, &a2, &b2)
}

/// `F^ = (F1, -F2)`.
#[inline]
pub fn hat(f: &V6) -> V6 {
    [f[0], f[1], f[2], -f[3], -f[4], -f[5]]
}

/// `J_1 = j + j`, `J_2 = j + (-j)` at the base point `f`.
#[inline]
pub fn j6(k: u8, p: u8, f: &V6, x: &V6) -> V6 {
    let (f1, f2) = split(f);
    let (x1, x2) = split(x);
    let a = j_raw(p, &f1, &x1);
    let mut b = j_raw(p, &f2, &x2);
    if k == 2 {
        b = [-b[0], -b[1], -b[2]];
    }
    join(&a, &b)
}

/// `Omega_1 = omega - omega`, `Omega_2 = omega + omega` with `omega(a,b) = g(ja,b)`.
#[inline]
pub fn omega6(k: u8, p: u8, f: &V6, x: &V6, y: &V6) -> f64 {
    let (f1, f2) = split(f);
    let (x1, x2) = split(x);
    let (y1, y2) = split(y);
    let w1 = dot_p(p, &j_raw(p, &f1, &x1), &y1);
    let w2 = dot_p(p, &j_raw(p, &f2, &x2), &y2);
    if k == 1 {
        w1 - w2
    } else {
        w1 + w2
    }
}

/// Removes the position components of each factor from a raw vector.
pub fn project6(p: u8, f: &V6, v: &V6) -> V6 {
    let (f1, f2) = split(f);
    let (v1, v2) = split(v);
    let c1 = dot_p(p, &v1, &f1) / dot_p(p, &f1, &f1);
    let c2 = dot_p(p, &v2, &f2) / dot_p(p, &f2, &f2);
    join(
        &[v1[0] - c1 * f1[0], v1[1] - c1 * f1[1], v1[2] - c1 * f1[2]],
        &[v2[0] - c2 * f2[0], v2[1] - c2 * f2[1], v2[2] - c2 * f2[2]],
    )
}

/// An orthonormal (Euclidean) basis of `{v : <x,v>_p = 0}`.
pub fn tangent_basis3(p: u8, x: &V3) -> [V3; 2] {
    let n = [
        crate::algebra::eta(p, 0) * x[0],
        crate::algebra::eta(p, 1) * x[1],
        crate::algebra::eta(p, 2) * x[2],
    ];
    let nn = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    let n = [n[0] / nn, n[1] / nn, n[2] / nn];
    let k = (0..3).min_by(|&a, &b| n[a].abs().total_cmp(&n[b].abs())).unwrap();
    let mut e = [0.0; 3];
    e[k] = 1.0;
    let d = e[0] * n[0] + e[1] * n[1] + e[2] * n[2];
    let mut t1 = [e[0] - d * n[0], e[1] - d * n[1], e[2] - d * n[2]];
    let l = (t1[0] * t1[0] + t1[1] * t1[1] + t1[2] * t1[2]).sqrt();
    t1 = [t1[0] / l, t1[1] / l, t1[2] / l];
    let t2 = [
        n[1] * t1[2] - n[2] * t1[1],
        n[2] * t1[0] - n[0] * t1[2],
        n[0] * t1[1] - n[1] * t1[0],
    ];
    [t1, t2]
}

/// Basis of the tangent space of the product at `f`.
pub fn tangent_basis6(p: u8, f: &V6) -> [V6; 4] {
    let (f1, f2) = split(f);
    let [a, b] = tangent_basis3(p, &f1);
    let [c, d] = tangent_basis3(p, &f2);
    let z = [0.0; 3];
    [join(&a, &z), join(&b, &z), join(&z, &c), join(&z, &d)]
}

/// Counts (positive, negative) eigenvalues of the Gram matrix of G on the tangent space.
pub fn g_signature(p: u8, f: &V6) -> (usize, usize) {
    let basis = tangent_basis6(p, f);
    let m = Matrix4::from_fn(|r, c| g6(p, &basis[r], &basis[c]));
    let eig = SymmetricEigen::new(m);
    let pos = eig.eigenvalues.iter().filter(|&&l| l > 1e-10).count();
    let neg = eig.eigenvalues.iter().filter(|&&l| l < -1e-10).count();
    (pos, neg)
}

// ---------------------------------------------------------------------------
// Typed API

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProductPoint {
    pub a: QuadricPoint,
    pub b: QuadricPoint,
}

impl ProductPoint {
    pub fn new(a: QuadricPoint, b: QuadricPoint) -> Result<Self> {
        if a.p() != b.p() {
            return Err(Error::Signature { left: a.p(), right: b.p() });
        }
        Ok(Self { a, b })
    }

    pub fn p(&self) -> u8 {
        self.a.p()
    }

    pub fn flat(&self) -> V6 {
        join(&self.a.pos().x, &self.b.pos().x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProductTangent {
    pub x1: Vec3P,
    pub x2: Vec3P,
    pub base: ProductPoint,
}

impl ProductTangent {
    pub fn new(x1: Vec3P, x2: Vec3P, base: ProductPoint) -> Result<Self> {
        base.a.is_tangent(&x1)?;
        base.b.is_tangent(&x2)?;
        Ok(Self { x1, x2, base })
    }

    pub fn flat(&self) -> V6 {
        join(&self.x1.x, &self.x2.x)
    }

    fn from_flat(v: &V6, base: ProductPoint) -> Self {
        let p = base.p();
        let (a, b) = split(v);
        Self { x1: Vec3P { x: a, p }, x2: Vec3P { x: b, p }, base }
    }
}

fn same_base(x: &ProductTangent, y: &ProductTangent) -> Result<()> {
    let (a, b) = (x.base.flat(), y.base.flat());
    if a.iter().zip(b.iter()).all(|(s, t)| (s - t).abs() <= TAU_TAN) {
        Ok(())
    } else {
        Err(Error::BaseMismatch)
    }
}

pub fn apply_j(k: u8, x: &ProductTangent) -> Result<ProductTangent> {
    if !(k == 1 || k == 2) {
        return Err(Error::Invalid(format!("structure index {k}")));
    }
    let p = x.base.p();
    if p > 1 {
        return Err(Error::UnsupportedSignature(p));
    }
    Ok(ProductTangent::from_flat(&j6(k, p, &x.base.flat(), &x.flat()), x.base))
}

pub fn metric_g(x: &ProductTangent, y: &ProductTangent) -> Result<f64> {
    same_base(x, y)?;
    Ok(g6(x.base.p(), &x.flat(), &y.flat()))
}

pub fn omega_k(k: u8, x: &ProductTangent, y: &ProductTangent) -> Result<f64> {
    same_base(x, y)?;
    let p = x.base.p();
    if p > 1 {
        return Err(Error::UnsupportedSignature(p));
    }
    Ok(omega6(k, p, &x.base.flat(), &x.flat(), &y.flat()))
}

pub fn tangent_project(base: &ProductPoint, v1: &Vec3P, v2: &Vec3P) -> Result<ProductTangent> {
    let p = base.p();
    if v1.p != p || v2.p != p {
        return Err(Error::Signature { left: p, right: if v1.p != p { v1.p } else { v2.p } });
    }
    let v = project6(p, &base.flat(), &join(&v1.x, &v2.x));
    Ok(ProductTangent::from_flat(&v, *base))
}

// ---------------------------------------------------------------------------
// eps-complex vectors in R^6

/// `re + i im` with `re, im` in R^6 and `i^2 = -eps`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CVec6 {
    pub re: V6,
    pub im: V6,
    pub eps: i8,
}

impl CVec6 {
    pub fn new(re: V6, im: V6, eps: i8) -> Self {
        Self { re, im, eps }
    }

    pub fn real(re: V6, eps: i8) -> Self {
        Self { re, im: [0.0; 6], eps }
    }

    pub fn conj(&self) -> Self {
        Self { re: self.re, im: scale6(-1.0, &self.im), eps: self.eps }
    }

    pub fn add(&self, o: &Self) -> Self {
        Self { re: add6(&self.re, &o.re), im: add6(&self.im, &o.im), eps: self.eps }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self { re: sub6(&self.re, &o.re), im: sub6(&self.im, &o.im), eps: self.eps }
    }

    pub fn mul(&self, s: ScalarEps) -> Self {
        debug_assert_eq!(s.eps, self.eps);
        let e = self.eps as f64;
        Self {
            re: std::array::from_fn(|k| s.re * self.re[k] - e * s.im * self.im[k]),
            im: std::array::from_fn(|k| s.re * self.im[k] + s.im * self.re[k]),
            eps: self.eps,
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { re: scale6(s, &self.re), im: scale6(s, &self.im), eps: self.eps }
    }

    /// Complex-bilinear extension of the flat neutral form.
    pub fn g(&self, p: u8, o: &Self) -> ScalarEps {
        let e = self.eps as f64;
        ScalarEps::new(
            g6(p, &self.re, &o.re) - e * g6(p, &self.im, &o.im),
            g6(p, &self.re, &o.im) + g6(p, &self.im, &o.re),
            self.eps,
        )
    }

    pub fn j(&self, k: u8, p: u8, f: &V6) -> Self {
        Self { re: j6(k, p, f, &self.re), im: j6(k, p, f, &self.im), eps: self.eps }
    }
}

/// `F_z = (F_x - eps i F_y)/2`.
pub fn dz_vec(fx: &V6, fy: &V6, eps: i8) -> CVec6 {
    CVec6::new(scale6(0.5, fx), scale6(-0.5 * eps as f64, fy), eps)
}

/// Inverse of [`dz_vec`]: `(F_x, F_y) = (2 Re F_z, -2 eps Im F_z)`.
pub fn xy_from_dz(fz: &CVec6) -> (V6, V6) {
    (scale6(2.0, &fz.re), scale6(-2.0 * fz.eps as f64, &fz.im))
}

/// `xi = (N - i eps Nt)/sqrt 2`.
pub fn xi_vec(n: &V6, nt: &V6, eps: i8) -> CVec6 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CVec6::new(scale6(s, n), scale6(-s * eps as f64, nt), eps)
}

/// Inverse of [`xi_vec`].
pub fn normals_from_xi(xi: &CVec6) -> (V6, V6) {
    let s = std::f64::consts::SQRT_2;
    (scale6(s, &xi.re), scale6(-s * xi.eps as f64, &xi.im))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn q(x: V3, p: u8) -> QuadricPoint {
        QuadricPoint::new(Vec3P::new(x, p).unwrap()).unwrap()
    }

    fn v(x: V3, p: u8) -> Vec3P {
        Vec3P::new(x, p).unwrap()
    }

    /// Random point on the p-quadric and random tangent vectors there.
    pub(crate) fn random_config(rng: &mut ChaCha8Rng, p: u8) -> (V6, V6, V6) {
        let pt = |rng: &mut ChaCha8Rng| loop {
            let x: V3 = std::array::from_fn(|_| rng.random_range(-2.0..2.0));
            let n = dot_p(p, &x, &x);
            if n > 0.1 {
                let s = n.sqrt();
                break [x[0] / s, x[1] / s, x[2] / s];
            }
        };
        let f = join(&pt(rng), &pt(rng));
        let raw = |rng: &mut ChaCha8Rng| -> V6 { std::array::from_fn(|_| rng.random_range(-2.0..2.0)) };
        let x = project6(p, &f, &raw(rng));
        let y = project6(p, &f, &raw(rng));
        (f, x, y)
    }

    #[test]
    fn j_examples() {
        let base = ProductPoint::new(q([0., 0., 1.], 0), q([0., 0., 1.], 0)).unwrap();
        let x = ProductTangent::new(v([1., 0., 0.], 0), v([1., 0., 0.], 0), base).unwrap();
        let j2 = apply_j(2, &x).unwrap();
        assert_eq!(j2.x1.x, [0., -1., 0.]);
        assert_eq!(j2.x2.x, [0., 1., 0.]);
        let jj = apply_j(1, &apply_j(1, &x).unwrap()).unwrap();
        assert_eq!(jj.flat(), scale6(-1.0, &x.flat()));
    }

    #[test]
    fn metric_examples() {
        let base = ProductPoint::new(q([0., 0., 1.], 0), q([0., 0., 1.], 0)).unwrap();
        let z = v([0., 0., 0.], 0);
        let e = v([1., 0., 0.], 0);
        let a = ProductTangent::new(e, z, base).unwrap();
        let b = ProductTangent::new(z, e, base).unwrap();
        assert_eq!(metric_g(&a, &a).unwrap(), 1.0);
        assert_eq!(metric_g(&b, &b).unwrap(), -1.0);
        let other = ProductPoint::new(q([1., 0., 0.], 0), q([0., 0., 1.], 0)).unwrap();
        let c = ProductTangent::new(v([0., 1., 0.], 0), z, other).unwrap();
        assert_eq!(metric_g(&a, &c), Err(Error::BaseMismatch));
    }

    #[test]
    fn omega_examples() {
        let base = ProductPoint::new(q([0., 0., 1.], 0), q([0., 0., 1.], 0)).unwrap();
        let z = v([0., 0., 0.], 0);
        let s1 = v([1., 0., 0.], 0);
        let s2 = j_apply_v(&base, &s1);
        let a = ProductTangent::new(s1, z, base).unwrap();
        let b = ProductTangent::new(s2, z, base).unwrap();
        assert_eq!(omega_k(1, &a, &b).unwrap(), 1.0);
        assert_eq!(omega_k(1, &a, &a).unwrap(), 0.0);
    }

    fn j_apply_v(base: &ProductPoint, s: &Vec3P) -> Vec3P {
        crate::algebra::j_apply(&base.a, s).unwrap()
    }

    #[test]
    fn project_examples() {
        let base = ProductPoint::new(q([0., 0.6, 0.8], 0), q([1., 0., 0.], 0)).unwrap();
        let t = tangent_project(&base, &v([0., 0.6, 0.8], 0), &v([1., 0., 0.], 0)).unwrap();
        assert!(norm_inf6(&t.flat()) < 1e-15);
        let t0 = ProductTangent::new(v([1., 0., 0.], 0), v([0., 1., 0.], 0), base).unwrap();
        let t1 = tangent_project(&base, &t0.x1, &t0.x2).unwrap();
        assert_eq!(t0.flat(), t1.flat());
    }

    #[test]
    fn structure_identities_sampled() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for p in [0u8, 1] {
            let sgn = if p == 0 { -1.0 } else { 1.0 };
            for _ in 0..500 {
                let (f, x, y) = random_config(&mut rng, p);
                for k in [1u8, 2] {
                    let jj = j6(k, p, &f, &j6(k, p, &f, &x));
                    assert!(norm_inf6(&sub6(&jj, &scale6(sgn, &x))) < 1e-9);
                    let om = omega6(k, p, &f, &x, &y);
                    assert!((om - g6(p, &j6(k, p, &f, &x), &y)).abs() < 1e-9);
                    // G = (-1)^{p+1} Omega_k(J_k ., .)
                    let gg = sgn * omega6(k, p, &f, &j6(k, p, &f, &x), &y);
                    assert!((gg - g6(p, &x, &y)).abs() < 1e-9);
                    // J_k preserves G up to the sign (-1)^p
                    let gj = g6(p, &j6(k, p, &f, &x), &j6(k, p, &f, &y));
                    let expected = if p == 0 { g6(p, &x, &y) } else { -g6(p, &x, &y) };
                    assert!((gj - expected).abs() < 1e-9);
                }
                assert_eq!(g_signature(p, &f), (2, 2));
            }
        }
    }

    proptest! {
        #[test]
        fn projection_idempotent(seed in any::<u64>(), p in 0u8..2) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (f, x, _) = random_config(&mut rng, p);
            let raw: V6 = std::array::from_fn(|k| x[k] + (k as f64) * 0.3);
            let once = project6(p, &f, &raw);
            let twice = project6(p, &f, &once);
            prop_assert!(norm_inf6(&sub6(&once, &twice)) < 1e-12 * (1.0 + norm_inf6(&once)));
        }

        #[test]
        fn omega_antisymmetric(seed in any::<u64>(), p in 0u8..2, k in 1u8..3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (f, x, y) = random_config(&mut rng, p);
            let s = omega6(k, p, &f, &x, &y) + omega6(k, p, &f, &y, &x);
            prop_assert!(s.abs() < 1e-10);
            let sum = omega6(1, p, &f, &x, &y) + omega6(2, p, &f, &x, &y);
            let (f1, _) = split(&f);
            let (x1, _) = split(&x);
            let (y1, _) = split(&y);
            let w1 = dot_p(p, &j_raw(p, &f1, &x1), &y1);
            prop_assert!((sum - 2.0 * w1).abs() < 1e-10);
        }

        #[test]
        fn dz_roundtrip(fx in prop::array::uniform6(-3.0f64..3.0), fy in prop::array::uniform6(-3.0f64..3.0), e in prop::sample::select(vec![1i8, -1])) {
            let (a, b) = xy_from_dz(&dz_vec(&fx, &fy, e));
            prop_assert_eq!(a, fx);
            prop_assert_eq!(b, fy);
            let (n, nt) = normals_from_xi(&xi_vec(&fx, &fy, e));
            for k in 0..6 {
                prop_assert!((n[k] - fx[k]).abs() < 1e-14 && (nt[k] - fy[k]).abs() < 1e-14);
            }
        }
    }
}
