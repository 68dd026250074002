//! Fundamental data `(u, C_j, gamma_j, f_j, A)` of a minimal immersion.

use serde::{Deserialize, Serialize};

use crate::algebra::{exp_eps, exp_i, polar, ScalarEps};
use crate::error::{Error, Result};
use crate::grid::{d_x, d_xx, d_y, d_yy, dz_eps, dz_real, dzbar_eps, GridSpec};
use crate::immersion::{point_geometry, ImmersionGrid, PointGeometry};
use crate::product::{normals_from_xi, xi_vec, CVec6};

pub const FUNDATA_SCHEMA: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct FundamentalData {
    pub p: u8,
    pub eps: i8,
    pub b: i8,
    pub spec: GridSpec,
    pub u: Vec<f64>,
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
    pub gamma1: Vec<ScalarEps>,
    pub gamma2: Vec<ScalarEps>,
    pub f1: Vec<ScalarEps>,
    pub f2: Vec<ScalarEps>,
    pub a: Vec<ScalarEps>,
    /// Samples that carry data.
    pub mask: Vec<bool>,
    /// Samples on the J_1- and J_2-complex strata, where `gamma_k = f_k = 0`.
    pub complex1: Vec<bool>,
    pub complex2: Vec<bool>,
}

/// Sup-norms of the compatibility residuals over the admissible interior.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CompatReport {
    pub c_gradient: [f64; 2],
    pub f_derivative: [f64; 2],
    pub gamma_derivative: [f64; 2],
    pub gamma_modulus: [f64; 2],
    pub a_expression: [f64; 2],
    pub a_consistency: f64,
    pub gauss_codazzi: [f64; 2],
    pub points: usize,
}

impl CompatReport {
    pub fn named(&self) -> Vec<(String, f64)> {
        let mut v = Vec::new();
        for j in 0..2 {
            v.push((format!("c_gradient_{}", j + 1), self.c_gradient[j]));
            v.push((format!("f_derivative_{}", j + 1), self.f_derivative[j]));
            v.push((format!("gamma_derivative_{}", j + 1), self.gamma_derivative[j]));
            v.push((format!("gamma_modulus_{}", j + 1), self.gamma_modulus[j]));
            v.push((format!("a_expression_{}", j + 1), self.a_expression[j]));
            v.push((format!("gauss_codazzi_{}", j + 1), self.gauss_codazzi[j]));
        }
        v.push(("a_consistency".into(), self.a_consistency));
        v
    }

    pub fn max(&self) -> f64 {
        self.named().iter().map(|x| x.1).fold(0.0, f64::max)
    }

    /// First residual above `tol`, if any.
    pub fn check(&self, tol: f64) -> Result<()> {
        match self.named().into_iter().find(|(_, v)| !(*v <= tol)) {
            Some((name, value)) => Err(Error::CompatViolation { name, value, tol }),
            None => Ok(()),
        }
    }
}

#[inline]
fn sgn(k: i32) -> f64 {
    if k.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

#[inline]
fn sup(z: ScalarEps) -> f64 {
    z.re.abs().max(z.im.abs())
}

/// `max(10 h^2, 1e-8) e^{2u}`.
pub fn tau_fd(h: f64, e2u: f64) -> f64 {
    (10.0 * h * h).max(1e-8) * e2u
}

impl FundamentalData {
    pub fn new(p: u8, eps: i8, b: i8, spec: GridSpec) -> Result<Self> {
        crate::error::check_sign(eps as i64)?;
        crate::error::check_sign(b as i64)?;
        if p > 1 {
            return Err(Error::UnsupportedSignature(p));
        }
        if eps == 1 && b != 1 {
            return Err(Error::Invalid("eps = 1 forces b = 1".into()));
        }
        let n = spec.len();
        let z = ScalarEps::zero(eps);
        Ok(Self {
            p,
            eps,
            b,
            spec,
            u: vec![0.0; n],
            c1: vec![0.0; n],
            c2: vec![0.0; n],
            gamma1: vec![z; n],
            gamma2: vec![z; n],
            f1: vec![z; n],
            f2: vec![z; n],
            a: vec![z; n],
            mask: vec![true; n],
            complex1: vec![false; n],
            complex2: vec![false; n],
        })
    }

    /// Flat Lagrangian data: `u = 0`, `C_j = f_j = A = 0` and constant `gamma_j` of the required norm.
    pub fn lagrangian(p: u8, eps: i8, b: i8, spec: GridSpec) -> Result<Self> {
        let mut d = Self::new(p, eps, b, spec)?;
        let n2 = eps as f64 * b as f64 * sgn(p as i32 + 1) / 2.0;
        if eps == 1 && n2 < 0.0 {
            return Err(Error::Invalid("no Lagrangian data with this signature".into()));
        }
        let g = ScalarEps::sqrt_real(n2, eps);
        d.gamma1.fill(g);
        d.gamma2.fill(g);
        Ok(d)
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// `e^{2u}` at sample `k`.
    #[inline]
    pub fn e2u(&self, k: usize) -> f64 {
        (2.0 * self.u[k]).exp()
    }

    /// The sub-grid `i0..=i1` x `j0..=j1`.
    pub fn crop(&self, i0: usize, i1: usize, j0: usize, j1: usize) -> Result<Self> {
        let s = self.spec;
        if i1 >= s.nx || j1 >= s.ny || i0 > i1 || j0 > j1 {
            return Err(Error::Invalid(format!("crop {i0}..={i1} x {j0}..={j1} outside {}x{}", s.nx, s.ny)));
        }
        let spec = GridSpec::new(i1 - i0 + 1, j1 - j0 + 1, s.x(i0), s.y(j0), s.hx, s.hy)?;
        let mut out = self.clone();
        out.spec = spec;
        let pick = |i: usize, j: usize| s.idx(i0 + i, j0 + j);
        macro_rules! sub {
            ($($f:ident),*) => {$(
                out.$f = (0..spec.nx).flat_map(|i| (0..spec.ny).map(move |j| (i, j))).map(|(i, j)| self.$f[pick(i, j)]).collect();
            )*};
        }
        sub!(u, c1, c2, gamma1, gamma2, f1, f2, a, mask, complex1, complex2);
        Ok(out)
    }

    /// Bounding box `(i0, i1, j0, j1)` of the mask, if the mask is exactly that rectangle.
    pub fn mask_rect(&self) -> Option<(usize, usize, usize, usize)> {
        let s = self.spec;
        let on: Vec<(usize, usize)> = (0..s.len()).filter(|&k| self.mask[k]).map(|k| (k / s.ny, k % s.ny)).collect();
        let i0 = on.iter().map(|x| x.0).min()?;
        let i1 = on.iter().map(|x| x.0).max()?;
        let j0 = on.iter().map(|x| x.1).min()?;
        let j1 = on.iter().map(|x| x.1).max()?;
        ((i1 - i0 + 1) * (j1 - j0 + 1) == on.len()).then_some((i0, i1, j0, j1))
    }

    /// Every `step`-th sample in each direction.
    pub fn subsample(&self, step: usize) -> Self {
        let s = self.spec;
        let spec = GridSpec {
            nx: (s.nx - 1) / step + 1,
            ny: (s.ny - 1) / step + 1,
            hx: s.hx * step as f64,
            hy: s.hy * step as f64,
            ..s
        };
        let pick = |i: usize, j: usize| s.idx(i * step, j * step);
        let mut out = self.clone();
        out.spec = spec;
        macro_rules! sub {
            ($($f:ident),*) => {$(
                out.$f = (0..spec.nx).flat_map(|i| (0..spec.ny).map(move |j| (i, j))).map(|(i, j)| self.$f[pick(i, j)]).collect();
            )*};
        }
        sub!(u, c1, c2, gamma1, gamma2, f1, f2, a, mask, complex1, complex2);
        out
    }
}

// ---------------------------------------------------------------------------
// Extraction

/// Tolerances controlling [`extract`].
#[derive(Clone, Copy, Debug)]
pub struct ExtractOptions {
    /// Sign `b` of the normal norms.
    pub b: i8,
    /// Largest admissible mean curvature size.
    pub tau_min: f64,
    /// Samples with `e^{2u}` below this are left out.
    pub tau_cond: f64,
}

impl ExtractOptions {
    pub fn for_grid(f: &ImmersionGrid, b: i8) -> Self {
        let h = f.spec.h();
        Self { b, tau_min: (100.0 * h * h).max(1e-9), tau_cond: 0.0 }
    }
}

/// Gauge factor `lambda` (with `lambda lambdabar = 1`) that makes `lambdabar z` real or imaginary and positive.
fn gauge_for(z: ScalarEps) -> Option<ScalarEps> {
    let pl = polar(z).ok()?;
    Some(exp_i(pl.phi, z.eps).scale(pl.sign))
}

/// Reads off the fundamental data of a minimal immersion.
///
/// The normal frame is gauge-fixed so that `gamma_1` is real (or para-imaginary) and positive;
/// on a J_1-complex surface `gamma_2` fixes the gauge instead.
pub fn extract(f: &ImmersionGrid, opts: ExtractOptions) -> Result<FundamentalData> {
    let s = f.spec;
    let b = if f.eps == 1 { 1 } else { opts.b };
    let mut d = FundamentalData::new(f.p, f.eps, b, s)?;
    d.mask.fill(false);
    let mut geo: Vec<Option<PointGeometry>> = vec![None; s.len()];
    for i in 1..s.nx - 1 {
        for j in 1..s.ny - 1 {
            match point_geometry(f, i, j, b) {
                Ok(g) if g.conf.eps == f.eps && g.conf.e2u >= opts.tau_cond => {
                    if !(g.sff.mean_abs <= opts.tau_min) {
                        return Err(Error::NonMinimal { i, j, hnorm2: g.sff.hnorm2 });
                    }
                    geo[s.idx(i, j)] = Some(g);
                }
                Ok(_) => {}
                Err(Error::DegenerateMetric { .. })
                | Err(Error::NegativeDefinite { .. })
                | Err(Error::TimelikeCoordinate { .. }) => {}
                Err(e) => return Err(e),
            }
        }
    }
    let h = s.h();
    let small = |g: &PointGeometry, z: ScalarEps| z.abs() <= tau_fd(h, g.conf.e2u);
    let (n1, n2) = geo.iter().flatten().fold((0, 0), |(a, c), g| {
        (a + usize::from(!small(g, g.gamma1)), c + usize::from(!small(g, g.gamma2)))
    });
    let reference = if n1 >= n2 { 1 } else { 2 };

    // gauge-fixed xi per sample
    let mut xi: Vec<Option<CVec6>> = vec![None; s.len()];
    for k in 0..s.len() {
        let Some(g) = geo[k].as_mut() else { continue };
        let raw = xi_vec(&g.n, &g.nt, f.eps);
        let lam = if reference == 1 { gauge_for(g.gamma1) } else { gauge_for(g.gamma2).map(|l| l.conj()) };
        let lam = lam.unwrap_or(ScalarEps::one(f.eps));
        let x = raw.mul(lam);
        g.gamma1 = lam.conj() * g.gamma1;
        g.gamma2 = lam * g.gamma2;
        g.f1 = lam.conj() * g.f1;
        g.f2 = lam * g.f2;
        let (n, nt) = normals_from_xi(&x);
        g.n = n;
        g.nt = nt;
        xi[k] = Some(x);
    }

    for k in 0..s.len() {
        if let Some(g) = &geo[k] {
            d.u[k] = g.conf.u;
            d.c1[k] = g.c1;
            d.c2[k] = g.c2;
            d.gamma1[k] = g.gamma1;
            d.gamma2[k] = g.gamma2;
            d.f1[k] = g.f1;
            d.f2[k] = g.f2;
            if small(g, g.gamma1) {
                d.complex1[k] = true;
                d.gamma1[k] = ScalarEps::zero(f.eps);
                d.f1[k] = ScalarEps::zero(f.eps);
                d.c1[k] = g.c1.signum();
            }
            if small(g, g.gamma2) {
                d.complex2[k] = true;
                d.gamma2[k] = ScalarEps::zero(f.eps);
                d.f2[k] = ScalarEps::zero(f.eps);
                d.c2[k] = g.c2.signum();
            }
        }
    }

    // A needs first derivatives; keep samples whose four neighbours carry a frame
    let e = f.eps as f64;
    let bf = b as f64;
    let i_e = ScalarEps::i(f.eps);
    for i in 2..s.nx.saturating_sub(2) {
        for j in 2..s.ny.saturating_sub(2) {
            let k = s.idx(i, j);
            let nb = [s.idx(i + 1, j), s.idx(i - 1, j), s.idx(i, j + 1), s.idx(i, j - 1)];
            if geo[k].is_none() || nb.iter().any(|&m| geo[m].is_none()) {
                continue;
            }
            let ux = (d.u[nb[0]] - d.u[nb[1]]) / (2.0 * s.hx);
            let uy = (d.u[nb[2]] - d.u[nb[3]]) / (2.0 * s.hy);
            let uz2 = dz_real(ux, uy, f.eps).scale(2.0);
            let deriv = |q: &[ScalarEps]| {
                let qx = (q[nb[0]] - q[nb[1]]).scale(0.5 / s.hx);
                let qy = (q[nb[2]] - q[nb[3]]).scale(0.5 / s.hy);
                dz_eps(qx, qy)
            };
            let a = if !d.complex1[k] && reference == 1 {
                uz2 - (i_e * d.f1[k] * (2.0 * e * d.c1[k]) + deriv(&d.gamma1)) / d.gamma1[k]
            } else if !d.complex2[k] {
                -uz2 + (i_e * d.f2[k] * (2.0 * e * d.c2[k]) + deriv(&d.gamma2)) / d.gamma2[k]
            } else {
                // doubly complex: read A off the frame, xi_z = A xi + ..., <xi, xibar> = -eps b
                let (xp, xm, yp, ym) =
                    (xi[nb[0]].unwrap(), xi[nb[1]].unwrap(), xi[nb[2]].unwrap(), xi[nb[3]].unwrap());
                let xx = xp.sub(&xm).scale(0.5 / s.hx);
                let xy = yp.sub(&ym).scale(0.5 / s.hy);
                // xi_z = (xi_x - eps i xi_y)/2
                let xz = xx.sub(&xy.mul(i_e.scale(e))).scale(0.5);
                xz.g(f.p, &xi[k].unwrap().conj()).scale(-1.0 / (e * bf))
            };
            d.a[k] = a;
            d.mask[k] = true;
        }
    }
    for k in 0..s.len() {
        if !d.mask[k] {
            sanitize(&mut d, k);
        }
    }
    if d.count() == 0 {
        return Err(Error::EmptyInterior);
    }
    Ok(d)
}

fn sanitize(d: &mut FundamentalData, k: usize) {
    let z = ScalarEps::zero(d.eps);
    d.u[k] = 0.0;
    d.c1[k] = 0.0;
    d.c2[k] = 0.0;
    d.gamma1[k] = z;
    d.gamma2[k] = z;
    d.f1[k] = z;
    d.f2[k] = z;
    d.a[k] = z;
}

/// Gauge change `gamma_1 -> exp_eps(-i theta) gamma_1`, `gamma_2 -> exp_eps(i theta) gamma_2`, same for `f_j`.
pub fn gauge_rotate(d: &FundamentalData, theta: &[f64]) -> FundamentalData {
    let mut out = d.clone();
    for k in 0..d.spec.len() {
        let (m, p) = (exp_eps(-theta[k], d.eps), exp_eps(theta[k], d.eps));
        out.gamma1[k] = m * d.gamma1[k];
        out.gamma2[k] = p * d.gamma2[k];
        out.f1[k] = m * d.f1[k];
        out.f2[k] = p * d.f2[k];
    }
    out
}

// ---------------------------------------------------------------------------
// Residuals

/// Residuals of every compatibility equation, sup over samples whose 3x3 patch carries data.
pub fn compat_residuals(d: &FundamentalData) -> Result<CompatReport> {
    compat_residuals_where(d, |_, _| true)
}

/// [`compat_residuals`] restricted to the samples `(i, j)` accepted by `keep`.
pub fn compat_residuals_where(d: &FundamentalData, keep: impl Fn(usize, usize) -> bool) -> Result<CompatReport> {
    let s = d.spec;
    let e = d.eps as f64;
    let bf = d.b as f64;
    let pf = d.p as i32;
    let i_e = ScalarEps::i(d.eps);
    let h = s.h();
    let mut r = CompatReport::default();
    let patch = |i: usize, j: usize| {
        (0..3).all(|a| (0..3).all(|c| d.mask[s.idx(i + a - 1, j + c - 1)]))
    };
    for i in 1..s.nx - 1 {
        for j in 1..s.ny - 1 {
            if !patch(i, j) || !keep(i, j) {
                continue;
            }
            let k = s.idx(i, j);
            r.points += 1;
            let e2u = d.e2u(k);
            let dzr = |q: &[f64]| dz_real(d_x(&s, q, i, j), d_y(&s, q, i, j), d.eps);
            let dze = |q: &[ScalarEps]| dz_eps(d_x(&s, q, i, j), d_y(&s, q, i, j));
            let dzbe = |q: &[ScalarEps]| dzbar_eps(d_x(&s, q, i, j), d_y(&s, q, i, j));
            let conj_field = |q: &[ScalarEps]| -> [ScalarEps; 5] {
                [q[s.idx(i + 1, j)], q[s.idx(i - 1, j)], q[s.idx(i, j + 1)], q[s.idx(i, j - 1)], q[k]]
                    .map(|z| z.conj())
            };
            let dz_conj = |q: &[ScalarEps]| {
                let c = conj_field(q);
                dz_eps((c[0] - c[1]).scale(0.5 / s.hx), (c[2] - c[3]).scale(0.5 / s.hy))
            };
            let uz2 = dzr(&d.u).scale(2.0);
            let uzzb = 0.25 * (d_xx(&s, &d.u, i, j) + e * d_yy(&s, &d.u, i, j));
            let a = d.a[k];
            let azb = dzbe(&d.a);
            let abar_z = azb.conj();
            let cs = [&d.c1, &d.c2];
            let gs = [&d.gamma1, &d.gamma2];
            let fs = [&d.f1, &d.f2];
            let mut amiss = [None, None];
            for jj in 0..2 {
                let jn = jj as i32 + 1;
                let (c, g, f) = (cs[jj], gs[jj], fs[jj]);
                let cother = cs[1 - jj][k];
                let gb = g[k].conj();
                let fb = f[k].conj();
                // (C_j)_z = -2 i eps b e^{-2u} gammabar_j f_j
                let res = dzr(c) + i_e * gb * f[k] * (2.0 * e * bf / e2u);
                r.c_gradient[jj] = r.c_gradient[jj].max(sup(res));
                // (fbar_j)_z = (-1)^{j+1} fbar_j A + i eps (-1)^{p+1} e^{2u} gammabar_j C_j' / 4
                let res = dz_conj(f) - fb * a * sgn(jn + 1) - i_e * gb * (e * sgn(pf + 1) * e2u * cother / 4.0);
                r.f_derivative[jj] = r.f_derivative[jj].max(sup(res));
                // (gammabar_j)_z = (-1)^{j+1} gammabar_j A
                let res = dz_conj(g) - gb * a * sgn(jn + 1);
                r.gamma_derivative[jj] = r.gamma_derivative[jj].max(sup(res));
                // |gamma_j|^2 = (eps b e^{2u}/2)(eps C_j^2 + (-1)^{p+1})
                let res = g[k].modulus2() - e * bf * e2u / 2.0 * (e * c[k] * c[k] + sgn(pf + 1));
                r.gamma_modulus[jj] = r.gamma_modulus[jj].max(res.abs());
                // A = (-1)^{j+1} (2u_z - (2 i eps C_j f_j + (gamma_j)_z)/gamma_j)
                if g[k].abs() > tau_fd(h, e2u) {
                    if let Ok(q) = (i_e * f[k] * (2.0 * e * c[k]) + dze(g)).checked_div(g[k]) {
                        let aj = (uz2 - q).scale(sgn(jn + 1));
                        r.a_expression[jj] = r.a_expression[jj].max(sup(a - aj));
                        amiss[jj] = Some(aj);
                    }
                }
                // 2u_{z zbar} + 4 eps b e^{-2u}|f_j|^2 + (-1)^j (Abar_z + A_zbar) + eps (-1)^p e^{2u} C1 C2 / 2 = 0
                let res = (abar_z + azb).scale(sgn(jn))
                    + ScalarEps::real(
                        2.0 * uzzb
                            + 4.0 * e * bf * f[k].modulus2() / e2u
                            + e * sgn(pf) * e2u * d.c1[k] * d.c2[k] / 2.0,
                        d.eps,
                    );
                r.gauss_codazzi[jj] = r.gauss_codazzi[jj].max(sup(res));
            }
            if let (Some(a1), Some(a2)) = (amiss[0], amiss[1]) {
                r.a_consistency = r.a_consistency.max(sup(a1 - a2));
            }
        }
    }
    if r.points == 0 {
        return Err(Error::EmptyInterior);
    }
    Ok(r)
}

/// Pointwise residuals of `|f_j|^2 = (b e^{4u}/8)(K + eps b (-1)^{j+1} K_perp + (-1)^{p+1} C1 C2)`.
pub fn f_norm_identity(d: &FundamentalData, k_gauss: &[f64], k_perp: &[f64]) -> Result<Vec<[f64; 2]>> {
    let all_zero = (0..d.spec.len())
        .filter(|&k| d.mask[k])
        .all(|k| d.gamma1[k].abs() == 0.0 && d.gamma2[k].abs() == 0.0);
    if all_zero {
        return Err(Error::NotApplicable("data lies on the complex locus (gamma = f = 0)"));
    }
    let e = d.eps as f64;
    let bf = d.b as f64;
    let sp1 = sgn(d.p as i32 + 1);
    Ok((0..d.spec.len())
        .map(|k| {
            if !d.mask[k] || !k_gauss[k].is_finite() || !k_perp[k].is_finite() {
                return [f64::NAN; 2];
            }
            let e4u = d.e2u(k).powi(2);
            let base = k_gauss[k] + sp1 * d.c1[k] * d.c2[k];
            let r1 = d.f1[k].modulus2() - bf * e4u / 8.0 * (base + e * bf * k_perp[k]);
            let r2 = d.f2[k].modulus2() - bf * e4u / 8.0 * (base - e * bf * k_perp[k]);
            [r1, r2]
        })
        .collect())
}

/// Sup-norms of the pointwise curvature identities satisfied by minimal data.
///
/// `K = -4 eps e^{-2u} u_{z zbar}`, `K_perp = 4 eps e^{-4u}(|f_1|^2 - |f_2|^2)`, `Delta q = 4 e^{-2u} q_{z zbar}`
/// (the Laplace-Beltrami operator of the induced metric) and `|grad q|^2 = e^{-2u}(q_x^2 + eps q_y^2)`.
/// `f_norm` is scaled by `e^{-4u}`. `atan_c` is only reported where `eps (-1)^p = -1`, `log_c` only for
/// Riemannian data in `dS^2 x dS^2`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub f_norm: [f64; 2],
    pub grad_c: [f64; 2],
    pub lap_c: [f64; 2],
    pub atan_c: Option<[f64; 2]>,
    pub log_c: Option<[f64; 2]>,
    pub points: usize,
}

impl IdentityReport {
    pub fn named(&self) -> Vec<(String, f64)> {
        let mut v = Vec::new();
        for j in 0..2 {
            v.push((format!("f_norm_{}", j + 1), self.f_norm[j]));
            v.push((format!("grad_c_{}", j + 1), self.grad_c[j]));
            v.push((format!("lap_c_{}", j + 1), self.lap_c[j]));
            if let Some(a) = self.atan_c {
                v.push((format!("atan_c_{}", j + 1), a[j]));
            }
            if let Some(l) = self.log_c {
                v.push((format!("log_c_{}", j + 1), l[j]));
            }
        }
        v
    }

    pub fn max(&self) -> f64 {
        self.named().iter().map(|x| x.1).fold(0.0, f64::max)
    }
}

/// Evaluates the curvature identities on samples accepted by `keep` whose 3x3 patch carries data.
pub fn curvature_identities(d: &FundamentalData, keep: impl Fn(usize, usize) -> bool) -> Result<IdentityReport> {
    let s = d.spec;
    let e = d.eps as f64;
    let bf = d.b as f64;
    let sp1 = sgn(d.p as i32 + 1);
    let with_atan = d.eps as i32 * sgn(d.p as i32) as i32 == -1;
    let with_log = d.p == 1 && d.eps == 1;
    let atan: [Vec<f64>; 2] = [d.c1.iter().map(|c| c.atan()).collect(), d.c2.iter().map(|c| c.atan()).collect()];
    let logc: [Vec<f64>; 2] = [
        d.c1.iter().map(|c| 0.5 * (1.0 + c * c).ln()).collect(),
        d.c2.iter().map(|c| 0.5 * (1.0 + c * c).ln()).collect(),
    ];
    let mut r = IdentityReport {
        atan_c: with_atan.then_some([0.0; 2]),
        log_c: with_log.then_some([0.0; 2]),
        ..Default::default()
    };
    let patch = |i: usize, j: usize| (0..3).all(|a| (0..3).all(|c| d.mask[s.idx(i + a - 1, j + c - 1)]));
    for i in 1..s.nx - 1 {
        for j in 1..s.ny - 1 {
            if !patch(i, j) || !keep(i, j) {
                continue;
            }
            r.points += 1;
            let k = s.idx(i, j);
            let e2u = d.e2u(k);
            let lap = |q: &[f64]| (d_xx(&s, q, i, j) + e * d_yy(&s, q, i, j)) / e2u;
            let grad = |q: &[f64]| (d_x(&s, q, i, j).powi(2) + e * d_y(&s, q, i, j).powi(2)) / e2u;
            let kk = -e * lap(&d.u);
            let kp = 4.0 * e * (d.f1[k].modulus2() - d.f2[k].modulus2()) / (e2u * e2u);
            let cs = [&d.c1, &d.c2];
            let fs = [d.f1[k], d.f2[k]];
            for jj in 0..2 {
                let (c, cp) = (cs[jj][k], cs[1 - jj][k]);
                let kj = kk + e * bf * sgn(jj as i32) * kp;
                // |f_j|^2 = (b e^{4u}/8)(K + eps b (-1)^{j+1} K_perp + (-1)^{p+1} C1 C2)
                let res = fs[jj].modulus2() / (e2u * e2u) - bf / 8.0 * (kj + sp1 * c * cp);
                r.f_norm[jj] = r.f_norm[jj].max(res.abs());
                // |grad C_j|^2 = (eps C_j^2 + (-1)^{p+1})(K + eps b (-1)^{j+1} K_perp + (-1)^{p+1} C_j C_j')
                let res = grad(cs[jj]) - (e * c * c + sp1) * (kj + sp1 * c * cp);
                r.grad_c[jj] = r.grad_c[jj].max(res.abs());
                // Delta C_j = 2 eps C_j (K + eps b (-1)^{j+1} K_perp) - C_j' (1 - eps (-1)^{p+1} C_j^2)
                let res = lap(cs[jj]) - 2.0 * e * c * kj + cp * (1.0 - e * sp1 * c * c);
                r.lap_c[jj] = r.lap_c[jj].max(res.abs());
                if let Some(a) = r.atan_c.as_mut() {
                    // Delta atan C_j = -C_j'
                    a[jj] = a[jj].max((lap(&atan[jj]) + cp).abs());
                }
                if let Some(l) = r.log_c.as_mut() {
                    // Delta log sqrt(1 + C_m'^2) = K + (-1)^m K_perp with m = j
                    let res = lap(&logc[1 - jj]) - (kk + sgn(jj as i32 + 1) * kp);
                    l[jj] = l[jj].max(res.abs());
                }
            }
        }
    }
    if r.points == 0 {
        return Err(Error::EmptyInterior);
    }
    Ok(r)
}

// ---------------------------------------------------------------------------
// JSON

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FundataFile {
    schema_version: u32,
    p: u8,
    eps: i8,
    b: i8,
    #[serde(flatten)]
    spec: GridSpec,
    u: Vec<f64>,
    c1: Vec<f64>,
    c2: Vec<f64>,
    gamma1: Vec<[f64; 2]>,
    gamma2: Vec<[f64; 2]>,
    f1: Vec<[f64; 2]>,
    f2: Vec<[f64; 2]>,
    a: Vec<[f64; 2]>,
    mask: Vec<bool>,
    complex1: Vec<bool>,
    complex2: Vec<bool>,
}

fn pairs(v: &[ScalarEps]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

impl FundamentalData {
    pub fn to_json(&self) -> String {
        let f = FundataFile {
            schema_version: FUNDATA_SCHEMA,
            p: self.p,
            eps: self.eps,
            b: self.b,
            spec: self.spec,
            u: self.u.clone(),
            c1: self.c1.clone(),
            c2: self.c2.clone(),
            gamma1: pairs(&self.gamma1),
            gamma2: pairs(&self.gamma2),
            f1: pairs(&self.f1),
            f2: pairs(&self.f2),
            a: pairs(&self.a),
            mask: self.mask.clone(),
            complex1: self.complex1.clone(),
            complex2: self.complex2.clone(),
        };
        serde_json::to_string(&f).expect("fundamental data serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: FundataFile = serde_json::from_str(s).map_err(|e| Error::Invalid(format!("fundata json: {e}")))?;
        if f.schema_version != FUNDATA_SCHEMA {
            return Err(Error::Invalid(format!("unsupported fundata schema {}", f.schema_version)));
        }
        let spec = GridSpec::new(f.spec.nx, f.spec.ny, f.spec.x0, f.spec.y0, f.spec.hx, f.spec.hy)?;
        let mut d = Self::new(f.p, f.eps, f.b, spec)?;
        let n = spec.len();
        let lens = [
            f.u.len(),
            f.c1.len(),
            f.c2.len(),
            f.gamma1.len(),
            f.gamma2.len(),
            f.f1.len(),
            f.f2.len(),
            f.a.len(),
            f.mask.len(),
            f.complex1.len(),
            f.complex2.len(),
        ];
        if lens.iter().any(|&l| l != n) {
            return Err(Error::Invalid(format!("fundata fields must have {n} samples")));
        }
        let sc = |v: Vec<[f64; 2]>| v.into_iter().map(|[a, b]| ScalarEps::new(a, b, f.eps)).collect::<Vec<_>>();
        d.u = f.u;
        d.c1 = f.c1;
        d.c2 = f.c2;
        d.gamma1 = sc(f.gamma1);
        d.gamma2 = sc(f.gamma2);
        d.f1 = sc(f.f1);
        d.f2 = sc(f.f2);
        d.a = sc(f.a);
        d.mask = f.mask;
        d.complex1 = f.complex1;
        d.complex2 = f.complex2;
        Ok(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gordon::{build_family, solve, SolverSettings, Theorem};
    use crate::surfaces::{build_example, example_grid};
    use proptest::prelude::*;

    fn family(th: Theorem, n: usize) -> FundamentalData {
        let sol = solve(&th.default_problem(n, n).unwrap(), &SolverSettings::default()).unwrap();
        build_family(th, &sol, 0.0).unwrap()
    }

    #[test]
    fn flat_lagrangian_data_is_compatible() {
        let spec = GridSpec::rect(9, 9, 0.0, 1.0, 0.0, 1.0).unwrap();
        for (p, eps, b) in [(1, 1, 1), (1, -1, 1), (1, -1, -1), (0, -1, 1), (0, -1, -1)] {
            let d = FundamentalData::lagrangian(p, eps, b, spec).unwrap();
            let r = compat_residuals(&d).unwrap();
            assert!(r.max() < 1e-14, "p={p} eps={eps} b={b}: {r:?}");
        }
        // Riemannian surfaces in S^2 x S^2 have C_j^2 >= 1
        assert!(FundamentalData::lagrangian(0, 1, 1, spec).is_err());
    }

    #[test]
    fn eps_one_forces_b_one() {
        let spec = GridSpec::rect(5, 5, 0.0, 1.0, 0.0, 1.0).unwrap();
        assert!(FundamentalData::new(0, 1, -1, spec).is_err());
        assert!(FundamentalData::new(2, 1, 1, spec).is_err());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let d = family(Theorem::C2, 17);
        assert_eq!(FundamentalData::from_json(&d.to_json()).unwrap(), d);
        let mut bad: serde_json::Value = serde_json::from_str(&d.to_json()).unwrap();
        bad["schema_version"] = 99.into();
        assert!(FundamentalData::from_json(&bad.to_string()).is_err());
    }

    #[test]
    fn constant_gauge_leaves_residuals_unchanged() {
        let d = family(Theorem::C1, 33);
        let r0 = compat_residuals(&d).unwrap();
        // quarter turns permute real and imaginary parts, so the sup-norms are comparable exactly
        for theta in [std::f64::consts::FRAC_PI_2, std::f64::consts::PI] {
            let r1 = compat_residuals(&gauge_rotate(&d, &vec![theta; d.spec.len()])).unwrap();
            for ((n, a), (_, b)) in r0.named().into_iter().zip(r1.named()) {
                assert!((a - b).abs() <= 1e-12 + 1e-9 * a, "{n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn crop_and_subsample_pick_samples() {
        let d = family(Theorem::A1, 17);
        let c = d.crop(2, 10, 3, 7).unwrap();
        assert_eq!((c.spec.nx, c.spec.ny), (9, 5));
        assert_eq!(c.u[c.spec.idx(4, 2)], d.u[d.spec.idx(6, 5)]);
        assert_eq!(c.spec.x(0), d.spec.x(2));
        assert!(d.crop(0, 17, 0, 3).is_err());
        let s = d.subsample(2);
        assert_eq!((s.spec.nx, s.spec.h()), (9, 2.0 * d.spec.h()));
        assert_eq!(s.gamma1[s.spec.idx(3, 4)], d.gamma1[d.spec.idx(6, 8)]);
        assert_eq!(d.mask_rect(), Some((0, 16, 0, 16)));
    }

    #[test]
    fn slices_extract_as_doubly_complex() {
        let f = build_example("slice:first", example_grid("slice:first", 17, 17).unwrap()).unwrap();
        let d = extract(&f, ExtractOptions::for_grid(&f, 1)).unwrap();
        let h2 = f.spec.h().powi(2);
        for k in (0..d.spec.len()).filter(|&k| d.mask[k]) {
            assert!(d.complex1[k] && d.complex2[k]);
            assert!((d.c1[k].abs() - 1.0).abs() < 10.0 * h2 && (d.c2[k].abs() - 1.0).abs() < 10.0 * h2);
        }
    }

    #[test]
    fn family_identities_converge() {
        let (c, f) = (family(Theorem::C1, 17), family(Theorem::C1, 33));
        let keep_c = |i: usize, j: usize| c.spec.inner(i, j, 2);
        let rc = curvature_identities(&c, keep_c).unwrap();
        let rf = curvature_identities(&f, |i, j| i % 2 == 0 && j % 2 == 0 && keep_c(i / 2, j / 2)).unwrap();
        assert!(rc.atan_c.is_some() && rc.log_c.is_some());
        for ((n, a), (_, b)) in rc.named().into_iter().zip(rf.named()) {
            assert!(b < 1e-10 || a / b > 3.0, "{n}: {a} -> {b}");
        }
    }

    proptest! {
        #[test]
        fn gauge_rotation_inverts(theta in -3.0f64..3.0, phase in -3.0f64..3.0) {
            let spec = GridSpec::rect(5, 5, 0.0, 1.0, 0.0, 1.0).unwrap();
            let mut d = FundamentalData::lagrangian(1, 1, 1, spec).unwrap();
            d.f1.fill(exp_i(phase, 1).scale(0.3));
            let back = gauge_rotate(&gauge_rotate(&d, &[theta; 25]), &[-theta; 25]);
            for k in 0..25 {
                prop_assert!((back.gamma1[k] - d.gamma1[k]).abs() < 1e-12);
                prop_assert!((back.f1[k] - d.f1[k]).abs() < 1e-12);
                prop_assert!((back.gamma1[k].modulus2() - gauge_rotate(&d, &[theta; 25]).gamma1[k].modulus2()).abs() < 1e-12);
            }
        }
    }
}
