//! Sampled immersions into S^2_p x S^2_p and their pointwise geometry.

use serde::{Deserialize, Serialize};

use crate::algebra::{dot_p, QuadricPoint, ScalarEps, Vec3P, TAU_PT};
use crate::error::{Error, Result};
use crate::grid::{d_x, d_xx, d_y, d_yy, four_dzdzbar, GridSpec};
use crate::product::{
    axpy6, dz_vec, g6, omega6, scale6, split, sub6, tangent_basis6, xi_vec, CVec6, ProductPoint, V6,
};

/// Threshold on `|G(F_x,F_x)|` below which the induced metric counts as degenerate.
pub const TAU_DEG: f64 = 1e-7;

pub const GRID_SCHEMA: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImmersionGrid {
    pub p: u8,
    pub eps: i8,
    #[serde(flatten)]
    pub spec: GridSpec,
    pub values: Vec<V6>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub fx: V6,
    pub fy: V6,
    pub fxx: V6,
    pub fxy: V6,
    pub fyy: V6,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Conformal {
    pub eps: i8,
    pub u: f64,
    pub e2u: f64,
    pub iso_residual: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct PointClass {
    pub is_lagrangian_1: bool,
    pub is_lagrangian_2: bool,
    pub is_complex_1: bool,
    pub is_complex_2: bool,
    pub is_degenerate: bool,
    pub c1: f64,
    pub c2: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SecondFundamentalForm {
    pub h11: V6,
    pub h12: V6,
    pub h22: V6,
    pub mean: V6,
    /// `G(H,H)`.
    pub hnorm2: f64,
    /// Euclidean size of the mean curvature vector, used for minimality tests.
    pub mean_abs: f64,
    /// `|h|^2 = |h11|^2 + |h22|^2 + 2 eps |h12|^2`.
    pub h_sq: f64,
}

impl ImmersionGrid {
    pub fn new(p: u8, eps: i8, spec: GridSpec, values: Vec<V6>) -> Result<Self> {
        Self::with_tolerance(p, eps, spec, values, TAU_PT)
    }

    /// Builds a grid whose samples lie on the quadric within `tol`.
    pub fn with_tolerance(p: u8, eps: i8, spec: GridSpec, values: Vec<V6>, tol: f64) -> Result<Self> {
        if p > 1 {
            return Err(Error::UnsupportedSignature(p));
        }
        crate::error::check_sign(eps as i64)?;
        if values.len() != spec.len() {
            return Err(Error::Invalid(format!("{} samples for a {}x{} grid", values.len(), spec.nx, spec.ny)));
        }
        GridSpec::new(spec.nx, spec.ny, spec.x0, spec.y0, spec.hx, spec.hy)?;
        for v in &values {
            let (a, b) = split(v);
            for f in [a, b] {
                let d = dot_p(p, &f, &f) - 1.0;
                if !(d.abs() <= tol) {
                    return Err(Error::OffQuadric(d));
                }
            }
        }
        Ok(Self { p, eps, spec, values })
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> &V6 {
        &self.values[self.spec.idx(i, j)]
    }

    pub fn point(&self, i: usize, j: usize) -> Result<ProductPoint> {
        let (a, b) = split(self.at(i, j));
        ProductPoint::new(
            QuadricPoint::new(Vec3P::new(a, self.p)?)?,
            QuadricPoint::new(Vec3P::new(b, self.p)?)?,
        )
    }

    /// Every `step`-th sample in both directions.
    pub fn subsample(&self, step: usize) -> Self {
        let s = self.spec;
        let spec = GridSpec { nx: (s.nx - 1) / step + 1, ny: (s.ny - 1) / step + 1, hx: s.hx * step as f64, hy: s.hy * step as f64, ..s };
        let values = (0..spec.nx).flat_map(|i| (0..spec.ny).map(move |j| self.values[s.idx(i * step, j * step)])).collect();
        Self { spec, values, ..*self }
    }

    /// Largest quadric constraint violation over all samples.
    pub fn quadric_drift(&self) -> f64 {
        self.values
            .iter()
            .map(|v| {
                let (a, b) = split(v);
                (dot_p(self.p, &a, &a) - 1.0).abs().max((dot_p(self.p, &b, &b) - 1.0).abs())
            })
            .fold(0.0, f64::max)
    }
}

// ---------------------------------------------------------------------------
// Pointwise geometry

pub fn jet(f: &ImmersionGrid, i: usize, j: usize) -> Result<Jet> {
    f.spec.check_inner(i, j, 1)?;
    let (g, v) = (&f.spec, &f.values);
    Ok(Jet {
        fx: d_x(g, v, i, j),
        fy: d_y(g, v, i, j),
        fxx: d_xx(g, v, i, j),
        fxy: crate::grid::d_xy(g, v, i, j),
        fyy: d_yy(g, v, i, j),
    })
}

/// Conformal data from first derivatives.
pub fn conformal_from(p: u8, fx: &V6, fy: &V6, i: usize, j: usize) -> Result<Conformal> {
    let gxx = g6(p, fx, fx);
    let gyy = g6(p, fy, fy);
    let gxy = g6(p, fx, fy);
    if !(gxx.abs() > TAU_DEG) {
        return Err(Error::DegenerateMetric { i, j, gxx });
    }
    let eps: i8 = if gxx * gyy > 0.0 { 1 } else { -1 };
    if gxx < 0.0 {
        return Err(if eps == 1 {
            Error::NegativeDefinite { i, j }
        } else {
            Error::TimelikeCoordinate { i, j }
        });
    }
    let iso = (gxx - eps as f64 * gyy).abs().max(gxy.abs()) / gxx;
    Ok(Conformal { eps, u: 0.5 * gxx.ln(), e2u: gxx, iso_residual: iso })
}

pub fn conformal_data(f: &ImmersionGrid, i: usize, j: usize) -> Result<Conformal> {
    let jt = jet(f, i, j)?;
    conformal_from(f.p, &jt.fx, &jt.fy, i, j)
}

/// `C_k = Omega_k(F_x, F_y) / (eps e^{2u})`.
pub fn kahler_from(p: u8, pos: &V6, fx: &V6, fy: &V6, c: &Conformal) -> (f64, f64) {
    let d = c.eps as f64 * c.e2u;
    (omega6(1, p, pos, fx, fy) / d, omega6(2, p, pos, fx, fy) / d)
}

pub fn kahler_functions(f: &ImmersionGrid, i: usize, j: usize) -> Result<(f64, f64)> {
    let jt = jet(f, i, j)?;
    let c = conformal_from(f.p, &jt.fx, &jt.fy, i, j)?;
    Ok(kahler_from(f.p, f.at(i, j), &jt.fx, &jt.fy, &c))
}

/// `(Jac F_1, Jac F_2) = ((C1+C2)/2, (C2-C1)/2)`.
pub fn jacobians(c1: f64, c2: f64) -> (f64, f64) {
    ((c1 + c2) / 2.0, (c2 - c1) / 2.0)
}

pub fn classify_values(p: u8, eps: i8, c1: f64, c2: f64, tol: f64) -> PointClass {
    let cx = |c: f64| (eps as f64 * c * c + if p % 2 == 0 { -1.0 } else { 1.0 }).abs() <= tol;
    PointClass {
        is_lagrangian_1: c1.abs() <= tol,
        is_lagrangian_2: c2.abs() <= tol,
        is_complex_1: cx(c1),
        is_complex_2: cx(c2),
        is_degenerate: false,
        c1,
        c2,
    }
}

pub fn classify_point(f: &ImmersionGrid, i: usize, j: usize, tol: f64) -> Result<PointClass> {
    let jt = jet(f, i, j)?;
    match conformal_from(f.p, &jt.fx, &jt.fy, i, j) {
        Ok(c) => {
            let (c1, c2) = kahler_from(f.p, f.at(i, j), &jt.fx, &jt.fy, &c);
            Ok(classify_values(f.p, c.eps, c1, c2, tol))
        }
        Err(Error::DegenerateMetric { .. }) => Ok(PointClass { is_degenerate: true, ..Default::default() }),
        Err(e) => Err(e),
    }
}

/// Component of `v` normal to the surface inside T(S^2_p x S^2_p).
pub fn normal_part(p: u8, pos: &V6, fx: &V6, fy: &V6, v: &V6) -> V6 {
    let w = crate::product::project6(p, pos, v);
    let (gxx, gxy, gyy) = (g6(p, fx, fx), g6(p, fx, fy), g6(p, fy, fy));
    let (bx, by) = (g6(p, &w, fx), g6(p, &w, fy));
    let det = gxx * gyy - gxy * gxy;
    let a = (bx * gyy - by * gxy) / det;
    let b = (by * gxx - bx * gxy) / det;
    let t = axpy6(&scale6(a, fx), b, fy);
    sub6(&w, &t)
}

pub fn sff_from(p: u8, pos: &V6, jt: &Jet, c: &Conformal) -> SecondFundamentalForm {
    let n = |v: &V6| scale6(1.0 / c.e2u, &normal_part(p, pos, &jt.fx, &jt.fy, v));
    let (h11, h12, h22) = (n(&jt.fxx), n(&jt.fxy), n(&jt.fyy));
    let e = c.eps as f64;
    let mean = scale6(0.5, &axpy6(&h11, e, &h22));
    let mean_abs = mean.iter().map(|x| x * x).sum::<f64>().sqrt();
    SecondFundamentalForm {
        h11,
        h12,
        h22,
        mean,
        hnorm2: g6(p, &mean, &mean),
        mean_abs,
        h_sq: g6(p, &h11, &h11) + g6(p, &h22, &h22) + 2.0 * e * g6(p, &h12, &h12),
    }
}

pub fn second_fundamental_form(f: &ImmersionGrid, i: usize, j: usize) -> Result<SecondFundamentalForm> {
    let jt = jet(f, i, j)?;
    let c = conformal_from(f.p, &jt.fx, &jt.fy, i, j)?;
    Ok(sff_from(f.p, f.at(i, j), &jt, &c))
}

/// G-orthonormal normals `(N, Nt)` with `|N|^2 = -eps b`, `|Nt|^2 = -b`, oriented so that
/// `<J_1 F_z, xi> = 0` (or `<J_2 F_z, xibar> = 0` on the J_1-complex locus).
pub fn normal_frame(p: u8, eps: i8, b: i8, pos: &V6, fx: &V6, fy: &V6) -> Result<(V6, V6)> {
    let basis = tangent_basis6(p, pos);
    let mut cands: Vec<V6> = basis.iter().map(|v| normal_part(p, pos, fx, fy, v)).collect();
    // Euclidean Gram-Schmidt with pivoting picks two independent normal directions
    let mut picked: Vec<V6> = Vec::new();
    for _ in 0..2 {
        let (k, _) = cands
            .iter()
            .enumerate()
            .map(|(k, v)| (k, v.iter().map(|x| x * x).sum::<f64>()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let v = cands.swap_remove(k);
        let l = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let v = scale6(1.0 / l, &v);
        for c in cands.iter_mut() {
            let d: f64 = c.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
            *c = axpy6(c, -d, &v);
        }
        picked.push(v);
    }
    // diagonalize the 2x2 Gram matrix of G
    let (a, bb, c) = (g6(p, &picked[0], &picked[0]), g6(p, &picked[0], &picked[1]), g6(p, &picked[1], &picked[1]));
    let th = 0.5 * (2.0 * bb).atan2(a - c);
    let (cs, sn) = (th.cos(), th.sin());
    let v1 = axpy6(&scale6(cs, &picked[0]), sn, &picked[1]);
    let v2 = axpy6(&scale6(-sn, &picked[0]), cs, &picked[1]);
    let want_n = -(eps as f64) * b as f64;
    let (mut nn, mut nt) = if g6(p, &v1, &v1).signum() == want_n.signum() { (v1, v2) } else { (v2, v1) };
    let (sn_, st_) = (g6(p, &nn, &nn), g6(p, &nt, &nt));
    if sn_.signum() != want_n.signum() || st_.signum() != -(b as f64) {
        return Err(Error::Invalid(format!("normal plane signature does not match eps={eps}, b={b}")));
    }
    nn = scale6(1.0 / sn_.abs().sqrt(), &nn);
    nt = scale6(1.0 / st_.abs().sqrt(), &nt);
    let fz = dz_vec(fx, fy, eps);
    let j1 = fz.j(1, p, pos);
    let j2 = fz.j(2, p, pos);
    let xi = xi_vec(&nn, &nt, eps);
    let (s1, s1b) = (j1.g(p, &xi).abs(), j1.g(p, &xi.conj()).abs());
    let (s2, s2b) = (j2.g(p, &xi).abs(), j2.g(p, &xi.conj()).abs());
    // the structure with the larger normal component decides
    let flip = if s1.max(s1b) >= s2.max(s2b) { s1 > s1b } else { s2b > s2 };
    if flip {
        nt = scale6(-1.0, &nt);
    }
    Ok((nn, nt))
}

/// Pointwise extraction core: `(gamma1, gamma2, f1, f2)` for an oriented normal frame.
pub fn frame_coefficients(
    p: u8,
    eps: i8,
    b: i8,
    pos: &V6,
    jt: &Jet,
    xi: &CVec6,
) -> (ScalarEps, ScalarEps, ScalarEps, ScalarEps) {
    let fz = dz_vec(&jt.fx, &jt.fy, eps);
    let bf = b as f64;
    let g1 = fz.j(1, p, pos).g(p, &xi.conj()).scale(-bf);
    let g2 = fz.j(2, p, pos).g(p, xi).scale(-bf);
    let e = eps as f64;
    // F_zz = (F_xx - 2 eps i F_xy - eps F_yy)/4
    let fzz = CVec6::new(scale6(0.25, &axpy6(&jt.fxx, -e, &jt.fyy)), scale6(-0.5 * e, &jt.fxy), eps);
    let d = -e * bf;
    let f1 = fzz.g(p, &xi.conj()).scale(1.0 / d);
    let f2 = fzz.g(p, xi).scale(1.0 / d);
    (g1, g2, f1, f2)
}

/// Everything pointwise about one interior sample.
#[derive(Clone, Copy, Debug)]
pub struct PointGeometry {
    pub jet: Jet,
    pub conf: Conformal,
    pub c1: f64,
    pub c2: f64,
    pub sff: SecondFundamentalForm,
    pub n: V6,
    pub nt: V6,
    pub gamma1: ScalarEps,
    pub gamma2: ScalarEps,
    pub f1: ScalarEps,
    pub f2: ScalarEps,
}

pub fn point_geometry(f: &ImmersionGrid, i: usize, j: usize, b: i8) -> Result<PointGeometry> {
    let jt = jet(f, i, j)?;
    let conf = conformal_from(f.p, &jt.fx, &jt.fy, i, j)?;
    let pos = f.at(i, j);
    let (c1, c2) = kahler_from(f.p, pos, &jt.fx, &jt.fy, &conf);
    let sff = sff_from(f.p, pos, &jt, &conf);
    let b = if conf.eps == 1 { 1 } else { b };
    let (n, nt) = normal_frame(f.p, conf.eps, b, pos, &jt.fx, &jt.fy)?;
    let xi = xi_vec(&n, &nt, conf.eps);
    let (gamma1, gamma2, f1, f2) = frame_coefficients(f.p, conf.eps, b, pos, &jt, &xi);
    Ok(PointGeometry { jet: jt, conf, c1, c2, sff, n, nt, gamma1, gamma2, f1, f2 })
}

fn u_at(f: &ImmersionGrid, i: usize, j: usize) -> Result<f64> {
    Ok(conformal_data(f, i, j)?.u)
}

/// `K = -4 eps e^{-2u} u_{z zbar}` from a 3x3 patch of conformal factors.
pub fn gauss_curvature(f: &ImmersionGrid, i: usize, j: usize) -> Result<f64> {
    f.spec.check_inner(i, j, 2)?;
    let c = conformal_data(f, i, j)?;
    let (hx, hy) = (f.spec.hx, f.spec.hy);
    let uxx = (u_at(f, i + 1, j)? - 2.0 * c.u + u_at(f, i - 1, j)?) / (hx * hx);
    let uyy = (u_at(f, i, j + 1)? - 2.0 * c.u + u_at(f, i, j - 1)?) / (hy * hy);
    Ok(-(c.eps as f64) * four_dzdzbar(uxx, uyy, c.eps) / c.e2u)
}

/// `K_perp = 4 eps e^{-4u} (|f1|^2 - |f2|^2)` for a minimal point.
pub fn normal_curvature_f(g: &PointGeometry) -> f64 {
    4.0 * g.conf.eps as f64 * (g.f1.modulus2() - g.f2.modulus2()) / (g.conf.e2u * g.conf.e2u)
}

/// `K_perp = G([A_{v2}, A_{v1}] e1, e2)` with `v1 = N`, `v2 = Nt` and `e = F/e^u`.
pub fn normal_curvature_ricci(p: u8, g: &PointGeometry) -> f64 {
    let e = g.conf.eps as f64;
    let eps_b = [1.0, e];
    let h = [[g.sff.h11, g.sff.h12], [g.sff.h12, g.sff.h22]];
    let shape = |v: &V6| -> [[f64; 2]; 2] {
        // M[b][a] = eps_b G(h(e_a, e_b), v)
        let mut m = [[0.0; 2]; 2];
        for a in 0..2 {
            for bb in 0..2 {
                m[bb][a] = eps_b[bb] * g6(p, &h[a][bb], v);
            }
        }
        m
    };
    let m1 = shape(&g.n);
    let m2 = shape(&g.nt);
    let mul = |x: &[[f64; 2]; 2], y: &[[f64; 2]; 2]| -> [[f64; 2]; 2] {
        let mut r = [[0.0; 2]; 2];
        for a in 0..2 {
            for c in 0..2 {
                r[a][c] = x[a][0] * y[0][c] + x[a][1] * y[1][c];
            }
        }
        r
    };
    let (ab, ba) = (mul(&m2, &m1), mul(&m1, &m2));
    // G(X, e2) = eps * (e2-coefficient of X)
    e * (ab[1][0] - ba[1][0])
}

/// `(K, K_perp via f, K_perp via the shape-operator commutator)`.
pub fn curvatures(f: &ImmersionGrid, i: usize, j: usize, b: i8, tol_min: f64) -> Result<(f64, f64, f64)> {
    let k = gauss_curvature(f, i, j)?;
    let g = point_geometry(f, i, j, b)?;
    if g.sff.mean_abs > tol_min {
        return Err(Error::NonMinimal { i, j, hnorm2: g.sff.hnorm2 });
    }
    Ok((k, normal_curvature_f(&g), normal_curvature_ricci(f.p, &g)))
}

/// `|K_s - eps (-1)^p C1 C2 - 2|H|^2 + |h|^2/2|` with the sectional curvature `K_s = eps K = -4 e^{-2u} u_{z zbar}`.
pub fn gauss_equation_residual(f: &ImmersionGrid, i: usize, j: usize) -> Result<f64> {
    let jt = jet(f, i, j)?;
    let c = conformal_from(f.p, &jt.fx, &jt.fy, i, j)?;
    let k = c.eps as f64 * gauss_curvature(f, i, j)?;
    let (c1, c2) = kahler_from(f.p, f.at(i, j), &jt.fx, &jt.fy, &c);
    let s = sff_from(f.p, f.at(i, j), &jt, &c);
    let sp = if f.p % 2 == 0 { 1.0 } else { -1.0 };
    Ok((k - c.eps as f64 * sp * c1 * c2 - 2.0 * s.hnorm2 + 0.5 * s.h_sq).abs())
}

/// `theta = <J1 F_z, J2 F_z>/2` and its cross-check value `-(eps b/2) gamma1 gamma2`.
pub fn hopf_value(p: u8, g: &PointGeometry, pos: &V6, b: i8) -> (ScalarEps, ScalarEps) {
    let eps = g.conf.eps;
    let fz = dz_vec(&g.jet.fx, &g.jet.fy, eps);
    let th = fz.j(1, p, pos).g(p, &fz.j(2, p, pos)).scale(0.5);
    let alt = (g.gamma1 * g.gamma2).scale(-0.5 * eps as f64 * b as f64);
    (th, alt)
}

/// `(theta, |d theta / d zbar|)` at an interior sample of a minimal immersion.
pub fn hopf_differential(f: &ImmersionGrid, i: usize, j: usize, b: i8, tol_min: f64) -> Result<(ScalarEps, f64)> {
    f.spec.check_inner(i, j, 2)?;
    let theta = |ii: usize, jj: usize| -> Result<ScalarEps> {
        let g = point_geometry(f, ii, jj, b)?;
        if g.sff.mean_abs > tol_min {
            return Err(Error::NonMinimal { i: ii, j: jj, hnorm2: g.sff.hnorm2 });
        }
        Ok(hopf_value(f.p, &g, f.at(ii, jj), b).0)
    };
    let t0 = theta(i, j)?;
    let tx = (theta(i + 1, j)? - theta(i - 1, j)?).scale(0.5 / f.spec.hx);
    let ty = (theta(i, j + 1)? - theta(i, j - 1)?).scale(0.5 / f.spec.hy);
    let d = crate::grid::dzbar_eps(tx, ty);
    Ok((t0, d.re.abs().max(d.im.abs())))
}

// ---------------------------------------------------------------------------
// Scalar fields over a whole grid

/// Per-sample scalar invariants over the interior; `None` marks boundary or degenerate samples.
#[derive(Clone, Debug)]
pub struct InvariantFields {
    pub spec: GridSpec,
    pub p: u8,
    pub b: i8,
    pub eps: Vec<i8>,
    pub u: Vec<f64>,
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
    pub mean_abs: Vec<f64>,
    pub f1n: Vec<f64>,
    pub f2n: Vec<f64>,
    pub kperp_f: Vec<f64>,
    pub kperp_r: Vec<f64>,
    pub theta: Vec<ScalarEps>,
    pub theta_alt: Vec<ScalarEps>,
    pub valid: Vec<bool>,
}

impl InvariantFields {
    pub fn compute(f: &ImmersionGrid, b: i8) -> Self {
        let s = f.spec;
        let n = s.len();
        let e0 = ScalarEps::zero(f.eps);
        let mut out = InvariantFields {
            spec: s,
            p: f.p,
            b,
            eps: vec![f.eps; n],
            u: vec![f64::NAN; n],
            c1: vec![f64::NAN; n],
            c2: vec![f64::NAN; n],
            mean_abs: vec![f64::NAN; n],
            f1n: vec![f64::NAN; n],
            f2n: vec![f64::NAN; n],
            kperp_f: vec![f64::NAN; n],
            kperp_r: vec![f64::NAN; n],
            theta: vec![e0; n],
            theta_alt: vec![e0; n],
            valid: vec![false; n],
        };
        for i in 1..s.nx - 1 {
            for j in 1..s.ny - 1 {
                let k = s.idx(i, j);
                let Ok(g) = point_geometry(f, i, j, b) else { continue };
                out.eps[k] = g.conf.eps;
                out.u[k] = g.conf.u;
                out.c1[k] = g.c1;
                out.c2[k] = g.c2;
                out.mean_abs[k] = g.sff.mean_abs;
                out.f1n[k] = g.f1.modulus2();
                out.f2n[k] = g.f2.modulus2();
                out.kperp_f[k] = normal_curvature_f(&g);
                out.kperp_r[k] = normal_curvature_ricci(f.p, &g);
                let (t, ta) = hopf_value(f.p, &g, f.at(i, j), b);
                out.theta[k] = t;
                out.theta_alt[k] = ta;
                out.valid[k] = true;
            }
        }
        out
    }

    /// Whether the 3x3 patch around `(i, j)` is valid with a common eps.
    pub fn patch_ok(&self, i: usize, j: usize) -> bool {
        if !self.spec.inner(i, j, 1) {
            return false;
        }
        let e = self.eps[self.spec.idx(i, j)];
        for di in 0..3 {
            for dj in 0..3 {
                let k = self.spec.idx(i + di - 1, j + dj - 1);
                if !self.valid[k] || self.eps[k] != e {
                    return false;
                }
            }
        }
        true
    }

    /// Laplace-Beltrami operator `4 e^{-2u} q_{z zbar}` of the induced metric.
    pub fn laplacian(&self, q: &[f64], i: usize, j: usize) -> f64 {
        let s = &self.spec;
        let k = s.idx(i, j);
        let e2u = (2.0 * self.u[k]).exp();
        four_dzdzbar(d_xx(s, q, i, j), d_yy(s, q, i, j), self.eps[k]) / e2u
    }

    /// `|grad q|^2 = e^{-2u}(q_x^2 + eps q_y^2)` with central differences.
    pub fn grad_sq(&self, q: &[f64], i: usize, j: usize) -> f64 {
        let s = &self.spec;
        let k = s.idx(i, j);
        let qx = (q[s.idx(i + 1, j)] - q[s.idx(i - 1, j)]) / (2.0 * s.hx);
        let qy = (q[s.idx(i, j + 1)] - q[s.idx(i, j - 1)]) / (2.0 * s.hy);
        (qx * qx + self.eps[k] as f64 * qy * qy) / (2.0 * self.u[k]).exp()
    }

    /// `K = -4 eps e^{-2u} u_{z zbar}`.
    pub fn gauss_k(&self, i: usize, j: usize) -> f64 {
        -(self.eps[self.spec.idx(i, j)] as f64) * self.laplacian(&self.u, i, j)
    }
}

// ---------------------------------------------------------------------------
// Import / export

#[derive(Serialize, Deserialize)]
struct GridFile {
    schema_version: u32,
    #[serde(flatten)]
    grid: ImmersionGrid,
}

impl ImmersionGrid {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&GridFile { schema_version: GRID_SCHEMA, grid: self.clone() }).expect("grid serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_json_with_tolerance(s, 1e-6)
    }

    /// Like [`ImmersionGrid::from_json`] with a caller-chosen quadric tolerance.
    pub fn from_json_with_tolerance(s: &str, tol: f64) -> Result<Self> {
        let f: GridFile = serde_json::from_str(s).map_err(|e| Error::Invalid(format!("grid json: {e}")))?;
        if f.schema_version != GRID_SCHEMA {
            return Err(Error::Invalid(format!("unsupported grid schema {}", f.schema_version)));
        }
        let g = f.grid;
        Self::with_tolerance(g.p, g.eps, g.spec, g.values, tol)
    }

    /// One row per sample: `i,j,x,y` then the six ambient coordinates.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,x,y,a1,a2,a3,b1,b2,b3\n");
        for i in 0..self.spec.nx {
            for j in 0..self.spec.ny {
                let v = self.at(i, j);
                out.push_str(&format!(
                    "{i},{j},{},{},{},{},{},{},{},{}\n",
                    self.spec.x(i),
                    self.spec.y(j),
                    v[0],
                    v[1],
                    v[2],
                    v[3],
                    v[4],
                    v[5]
                ));
            }
        }
        out
    }

    /// Triangulated mesh of one factor (`k` = 1 or 2) in Wavefront OBJ format.
    pub fn factor_obj(&self, k: usize) -> String {
        let off = if k == 1 { 0 } else { 3 };
        let mut out = format!("# factor {k} of a {}x{} grid\n", self.spec.nx, self.spec.ny);
        for v in &self.values {
            out.push_str(&format!("v {} {} {}\n", v[off], v[off + 1], v[off + 2]));
        }
        let ny = self.spec.ny;
        for i in 0..self.spec.nx - 1 {
            for j in 0..ny - 1 {
                let a = i * ny + j + 1;
                let (b, c, d) = (a + ny, a + ny + 1, a + 1);
                out.push_str(&format!("f {a} {b} {c}\nf {a} {c} {d}\n"));
            }
        }
        out
    }
}

/// Parses the CSV layout written by [`ImmersionGrid::to_csv`]; spacings are taken from the coordinates.
pub fn grid_from_csv(s: &str, p: u8, eps: i8) -> Result<ImmersionGrid> {
    let mut rows = Vec::new();
    for (ln, line) in s.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 10 {
            return Err(Error::Invalid(format!("csv line {}: expected 10 columns", ln + 1)));
        }
        let num = |k: usize| -> Result<f64> {
            cols[k].trim().parse::<f64>().map_err(|e| Error::Invalid(format!("csv line {}: {e}", ln + 1)))
        };
        let idx = |k: usize| -> Result<usize> {
            cols[k].trim().parse::<usize>().map_err(|e| Error::Invalid(format!("csv line {}: {e}", ln + 1)))
        };
        rows.push((idx(0)?, idx(1)?, num(2)?, num(3)?, [num(4)?, num(5)?, num(6)?, num(7)?, num(8)?, num(9)?]));
    }
    let nx = rows.iter().map(|r| r.0).max().map_or(0, |m| m + 1);
    let ny = rows.iter().map(|r| r.1).max().map_or(0, |m| m + 1);
    if nx * ny != rows.len() || nx < 2 || ny < 2 {
        return Err(Error::Invalid("csv does not describe a full rectangular grid".into()));
    }
    let mut values = vec![[0.0; 6]; nx * ny];
    let (mut x0, mut y0, mut x1, mut y1) = (0.0, 0.0, 0.0, 0.0);
    for (i, j, x, y, v) in rows {
        values[i * ny + j] = v;
        if i == 0 && j == 0 {
            (x0, y0) = (x, y);
        }
        if i == nx - 1 && j == ny - 1 {
            (x1, y1) = (x, y);
        }
    }
    let spec = GridSpec::rect(nx, ny, x0, x1, y0, y1)?;
    ImmersionGrid::with_tolerance(p, eps, spec, values, 1e-6)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surfaces::{build_example, example_grid};

    fn example(id: &str, n: usize) -> ImmersionGrid {
        build_example(id, example_grid(id, n, n).unwrap()).unwrap()
    }

    #[test]
    fn geodesic_product_is_flat_and_lagrangian() {
        let f = example("geodesic-product", 33);
        for (i, j) in [(8, 8), (16, 16), (20, 11)] {
            let c = conformal_data(&f, i, j).unwrap();
            assert_eq!(c.eps, -1);
            assert!(c.u.abs() < f.spec.hx.powi(2) && c.iso_residual < 1e-12, "{c:?}");
            let (c1, c2) = kahler_functions(&f, i, j).unwrap();
            assert!(c1.abs() < 1e-10 && c2.abs() < 1e-10);
            assert!(gauss_curvature(&f, i, j).unwrap().abs() < 1e-4);
        }
    }

    #[test]
    fn slice_is_complex_in_both_structures() {
        let f = example("slice:first", 33);
        let pc = classify_point(&f, 16, 16, 1e-6).unwrap();
        assert!(pc.is_complex_1 && pc.is_complex_2 && !pc.is_degenerate, "{pc:?}");
        let (j1, j2) = jacobians(pc.c1, pc.c2);
        assert!((j1.abs() - 1.0).abs() < 1e-6 && j2.abs() < 1e-6);
    }

    #[test]
    fn classify_values_thresholds() {
        let pc = classify_values(0, 1, 1.0, 0.0, 1e-9);
        assert!(pc.is_complex_1 && pc.is_lagrangian_2 && !pc.is_lagrangian_1 && !pc.is_complex_2);
        // split-complex: eps C^2 - 1 = 0 has no solution for eps = -1, p = 0
        let pc = classify_values(0, -1, 1.0, 1.0, 1e-9);
        assert!(!pc.is_complex_1 && !pc.is_complex_2);
        let pc = classify_values(1, -1, 1.0, -1.0, 1e-9);
        assert!(pc.is_complex_1 && pc.is_complex_2);
    }

    #[test]
    fn jacobians_invert() {
        let (a, b) = jacobians(0.3, -1.1);
        assert!((a - b - 0.3).abs() < 1e-15 && (a + b + 1.1).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_grids() {
        let s = GridSpec::rect(5, 5, 0.0, 1.0, 0.0, 1.0).unwrap();
        let on = [0.0, 0.0, 1.0, 0.0, 0.0, 1.0];
        assert!(ImmersionGrid::new(2, 1, s, vec![on; 25]).is_err());
        assert!(ImmersionGrid::new(0, 0, s, vec![on; 25]).is_err());
        assert!(ImmersionGrid::new(0, 1, s, vec![on; 24]).is_err());
        let mut v = vec![on; 25];
        v[7][2] = 1.0 + 1e-3;
        assert!(matches!(ImmersionGrid::new(0, 1, s, v.clone()), Err(Error::OffQuadric(_))));
        let g = ImmersionGrid::with_tolerance(0, 1, s, v, 1e-2).unwrap();
        assert!((g.quadric_drift() - (2e-3 + 1e-6)).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let f = example("holo:z2", 17);
        let s = f.to_json();
        assert!(s.contains("\"schema_version\":1"));
        assert_eq!(ImmersionGrid::from_json(&s).unwrap(), f);
        let bumped = s.replace("\"schema_version\":1", "\"schema_version\":7");
        assert!(ImmersionGrid::from_json(&bumped).is_err());
    }

    #[test]
    fn csv_round_trip_keeps_samples() {
        let f = example("slice:second", 9);
        let g = grid_from_csv(&f.to_csv(), f.p, f.eps).unwrap();
        assert_eq!(g.values, f.values);
        assert_eq!((g.spec.nx, g.spec.ny), (9, 9));
        assert!((g.spec.hx - f.spec.hx).abs() < 1e-15 && (g.spec.y0 - f.spec.y0).abs() < 1e-15);
        assert!(grid_from_csv("i,j\n0,0,1\n", 0, 1).is_err());
    }

    #[test]
    fn subsample_matches_coarse_build() {
        let fine = example("geodesic-product:p1", 33);
        let coarse = example("geodesic-product:p1", 17);
        let s = fine.subsample(2);
        assert_eq!(s.spec.nx, 17);
        assert!((s.spec.hx - coarse.spec.hx).abs() < 1e-15);
        let d = s.values.iter().zip(&coarse.values).flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs())).fold(0.0, f64::max);
        assert!(d < 1e-14, "{d}");
        assert!(fine.quadric_drift() < 1e-14);
    }

    #[test]
    fn factor_mesh_counts() {
        let f = example("slice:first", 5);
        let obj = f.factor_obj(1);
        assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 25);
        assert_eq!(obj.lines().filter(|l| l.starts_with("f ")).count(), 32);
    }
}
