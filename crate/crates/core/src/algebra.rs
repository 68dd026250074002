//! Signature-aware linear algebra of R^3 and the unified scalar with i^2 = -eps.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use crate::error::{check_sign, Error, Result};

pub type V3 = [f64; 3];

/// Tolerance for on-quadric checks.
pub const TAU_PT: f64 = 1e-9;
/// Tolerance for tangency checks.
pub const TAU_TAN: f64 = 1e-8;

#[inline]
pub(crate) fn eta(p: u8, k: usize) -> f64 {
    if k < p as usize {
        -1.0
    } else {
        1.0
    }
}

/// Raw pseudo-inner product `<u,v>_p` without signature bookkeeping.
#[inline]
pub fn dot_p(p: u8, u: &V3, v: &V3) -> f64 {
    (0..3).map(|k| eta(p, k) * u[k] * v[k]).sum()
}

/// Raw cross product: Euclidean for p=0, `I_{1,2}(u x v)` for p=1.
///
/// Panics for p=2; use [`cross_p`] for the checked version.
#[inline]
pub fn cross_raw(p: u8, u: &V3, v: &V3) -> V3 {
    let c = [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ];
    match p {
        0 => c,
        1 => [-c[0], c[1], c[2]],
        _ => panic!("cross product undefined for p={p}"),
    }
}

/// Raw complex structure `j_x(v) = -x cross_p v`.
#[inline]
pub fn j_raw(p: u8, x: &V3, v: &V3) -> V3 {
    let c = cross_raw(p, x, v);
    [-c[0], -c[1], -c[2]]
}

// ---------------------------------------------------------------------------
// ScalarEps

/// Scalar `a + ib` with `i^2 = -eps`: complex for eps=+1, para-complex for eps=-1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalarEps {
    pub re: f64,
    pub im: f64,
    pub eps: i8,
}

impl ScalarEps {
    /// Panics unless `eps` is +1 or -1.
    pub fn new(re: f64, im: f64, eps: i8) -> Self {
        assert!(eps == 1 || eps == -1, "eps must be +1 or -1, got {eps}");
        Self { re, im, eps }
    }

    pub fn try_new(re: f64, im: f64, eps: i64) -> Result<Self> {
        Ok(Self { re, im, eps: check_sign(eps)? })
    }

    pub fn real(re: f64, eps: i8) -> Self {
        Self::new(re, 0.0, eps)
    }

    pub fn zero(eps: i8) -> Self {
        Self::new(0.0, 0.0, eps)
    }

    pub fn one(eps: i8) -> Self {
        Self::new(1.0, 0.0, eps)
    }

    /// The unit `i`.
    pub fn i(eps: i8) -> Self {
        Self::new(0.0, 1.0, eps)
    }

    #[inline]
    pub fn e(self) -> f64 {
        self.eps as f64
    }

    pub fn conj(self) -> Self {
        Self { im: -self.im, ..self }
    }

    /// `z zbar = a^2 + eps b^2`; negative values occur for eps=-1.
    pub fn modulus2(self) -> f64 {
        self.re * self.re + self.e() * self.im * self.im
    }

    /// `sqrt(|z zbar|)`, the gauge-invariant size used in reports.
    pub fn abs(self) -> f64 {
        self.modulus2().abs().sqrt()
    }

    pub fn scale(self, s: f64) -> Self {
        Self { re: self.re * s, im: self.im * s, eps: self.eps }
    }

    pub fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    fn same(self, o: Self) -> Result<()> {
        if self.eps == o.eps {
            Ok(())
        } else {
            Err(Error::EpsMismatch { left: self.eps, right: o.eps })
        }
    }

    pub fn checked_add(self, o: Self) -> Result<Self> {
        self.same(o)?;
        Ok(Self { re: self.re + o.re, im: self.im + o.im, eps: self.eps })
    }

    pub fn checked_sub(self, o: Self) -> Result<Self> {
        self.same(o)?;
        Ok(Self { re: self.re - o.re, im: self.im - o.im, eps: self.eps })
    }

    pub fn checked_mul(self, o: Self) -> Result<Self> {
        self.same(o)?;
        Ok(Self {
            re: self.re * o.re - self.e() * self.im * o.im,
            im: self.re * o.im + self.im * o.re,
            eps: self.eps,
        })
    }

    pub fn inv(self) -> Result<Self> {
        let n = self.modulus2();
        let scale = self.re.abs().max(self.im.abs());
        if n == 0.0 || n.abs() <= 1e-14 * scale * scale {
            return Err(Error::ZeroDivisor { re: self.re, im: self.im, eps: self.eps });
        }
        Ok(Self { re: self.re / n, im: -self.im / n, eps: self.eps })
    }

    pub fn checked_div(self, o: Self) -> Result<Self> {
        self.same(o)?;
        self.checked_mul(o.inv()?)
    }

    /// Principal square root of a real number `x`: `sqrt(x)` for x >= 0,
    /// `i sqrt(-x)` for x < 0 and eps=-1 (where `(i a)^2 = a^2` flips sign of the modulus).
    pub fn sqrt_real(x: f64, eps: i8) -> Self {
        if x >= 0.0 {
            Self::real(x.sqrt(), eps)
        } else {
            Self::new(0.0, (-x).sqrt(), eps)
        }
    }
}

impl fmt::Display for ScalarEps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}i (eps={})", self.re, self.im, self.eps)
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $checked:ident) => {
        impl $tr for ScalarEps {
            type Output = ScalarEps;
            /// Panics when the operands carry different eps.
            fn $m(self, o: ScalarEps) -> ScalarEps {
                self.$checked(o).unwrap_or_else(|e| panic!("{e}"))
            }
        }
    };
}
binop!(Add, add, checked_add);
binop!(Sub, sub, checked_sub);
binop!(Mul, mul, checked_mul);
binop!(Div, div, checked_div);

impl Mul<f64> for ScalarEps {
    type Output = ScalarEps;
    fn mul(self, s: f64) -> ScalarEps {
        self.scale(s)
    }
}

impl Neg for ScalarEps {
    type Output = ScalarEps;
    fn neg(self) -> ScalarEps {
        self.scale(-1.0)
    }
}

impl AddAssign for ScalarEps {
    fn add_assign(&mut self, o: ScalarEps) {
        *self = *self + o;
    }
}

impl SubAssign for ScalarEps {
    fn sub_assign(&mut self, o: ScalarEps) {
        *self = *self - o;
    }
}

/// The gauge table `exp_eps(i theta)`: `cos + i sin` for eps=+1 and
/// `sinh + i cosh` for eps=-1 (modulus -1).
pub fn exp_eps(theta: f64, eps: i8) -> ScalarEps {
    if eps == 1 {
        ScalarEps::new(theta.cos(), theta.sin(), 1)
    } else {
        ScalarEps::new(theta.sinh(), theta.cosh(), -1)
    }
}

/// The power series exponential of `i theta`: `cos + i sin` or `cosh + i sinh` (modulus +1).
pub fn exp_i(theta: f64, eps: i8) -> ScalarEps {
    if eps == 1 {
        ScalarEps::new(theta.cos(), theta.sin(), 1)
    } else {
        ScalarEps::new(theta.cosh(), theta.sinh(), -1)
    }
}

/// Polar decomposition of a non-null scalar, `z = s r e^{i phi}` (eps=+1 or
/// modulus > 0) or `z = s r i e^{i phi}` (eps=-1, modulus < 0), with `s = +-1`, `r > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Polar {
    pub r: f64,
    pub phi: f64,
    pub sign: f64,
    /// Whether the factor `i` is present (eps=-1 and negative modulus).
    pub imaginary: bool,
}

pub fn polar(z: ScalarEps) -> Result<Polar> {
    if z.eps == 1 {
        let r = z.re.hypot(z.im);
        if r == 0.0 {
            return Err(Error::ZeroDivisor { re: z.re, im: z.im, eps: 1 });
        }
        return Ok(Polar { r, phi: z.im.atan2(z.re), sign: 1.0, imaginary: false });
    }
    let n = z.modulus2();
    let scale = z.re.abs().max(z.im.abs());
    if n.abs() <= 1e-12 * scale * scale || scale == 0.0 {
        return Err(Error::ZeroDivisor { re: z.re, im: z.im, eps: -1 });
    }
    if n > 0.0 {
        Ok(Polar { r: n.sqrt(), phi: (z.im / z.re).atanh(), sign: z.re.signum(), imaginary: false })
    } else {
        Ok(Polar { r: (-n).sqrt(), phi: (z.re / z.im).atanh(), sign: z.im.signum(), imaginary: true })
    }
}

// ---------------------------------------------------------------------------
// Vec3P and quadric points

/// Vector of R^3 carrying the signature index `p` of `<.,.>_p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vec3P {
    pub x: V3,
    pub p: u8,
}

impl Vec3P {
    pub fn new(x: V3, p: u8) -> Result<Self> {
        if p > 2 {
            return Err(Error::UnsupportedSignature(p));
        }
        Ok(Self { x, p })
    }

    fn same(&self, o: &Self) -> Result<()> {
        if self.p == o.p {
            Ok(())
        } else {
            Err(Error::Signature { left: self.p, right: o.p })
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { x: [self.x[0] * s, self.x[1] * s, self.x[2] * s], p: self.p }
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        self.same(o)?;
        Ok(Self { x: [self.x[0] + o.x[0], self.x[1] + o.x[1], self.x[2] + o.x[2]], p: self.p })
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.add(&o.scale(-1.0))
    }
}

/// `<u,v>_p = -sum_{i<=p} u_i v_i + sum_{i>p} u_i v_i`.
pub fn inner_p(u: &Vec3P, v: &Vec3P) -> Result<f64> {
    u.same(v)?;
    Ok(dot_p(u.p, &u.x, &v.x))
}

/// Euclidean cross product (p=0) or the Lorentzian one `I_{1,2}(u x v)` (p=1).
pub fn cross_p(u: &Vec3P, v: &Vec3P) -> Result<Vec3P> {
    u.same(v)?;
    match u.p {
        0 | 1 => Ok(Vec3P { x: cross_raw(u.p, &u.x, &v.x), p: u.p }),
        p => Err(Error::UnsupportedSignature(p)),
    }
}

/// Point of the unit quadric `<x,x>_p = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadricPoint {
    pos: Vec3P,
}

impl QuadricPoint {
    pub fn new(pos: Vec3P) -> Result<Self> {
        let d = dot_p(pos.p, &pos.x, &pos.x) - 1.0;
        if d.abs() > TAU_PT {
            return Err(Error::OffQuadric(d));
        }
        Ok(Self { pos })
    }

    pub fn pos(&self) -> &Vec3P {
        &self.pos
    }

    pub fn p(&self) -> u8 {
        self.pos.p
    }

    pub fn is_tangent(&self, v: &Vec3P) -> Result<f64> {
        self.pos.same(v)?;
        let d = dot_p(v.p, &self.pos.x, &v.x);
        if d.abs() > TAU_TAN {
            return Err(Error::Tangency(d));
        }
        Ok(d)
    }
}

/// `j_x(v) = -x cross_p v` on a tangent vector.
pub fn j_apply(x: &QuadricPoint, v: &Vec3P) -> Result<Vec3P> {
    x.is_tangent(v)?;
    let c = cross_p(x.pos(), v)?;
    Ok(c.scale(-1.0))
}

/// Coordinate flip identifying `<.,.>_2` with minus `<.,.>_1`:
/// `phi(v) = (v3, v1, v2)` satisfies `<phi u, phi v>_1 = -<u, v>_2`.
pub fn anti_isometry_p2(v: &Vec3P) -> Result<Vec3P> {
    if v.p != 2 {
        return Err(Error::UnsupportedSignature(v.p));
    }
    Ok(Vec3P { x: [v.x[2], v.x[0], v.x[1]], p: 1 })
}
