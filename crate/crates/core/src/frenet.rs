//! Reconstruction of a minimal immersion from its fundamental data by integrating the Frenet system.
//!
//! The frame `(F, F_x, F_y, N, Nt)` is advanced with classical RK4, first along the base row and then
//! along every column. Data between samples comes from centered cubic interpolation.

use nalgebra::{Matrix2, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::algebra::{exp_i, j_raw, polar, ScalarEps, TAU_PT, V3};
use crate::error::{Error, Result};
use crate::fundata::{compat_residuals, extract, ExtractOptions, FundamentalData};
use crate::grid::{d4_x, d4_y, dz_real, midpoint};
use crate::immersion::{normal_frame, ImmersionGrid};
use crate::product::{dz_vec, g6, hat, join, normals_from_xi, scale6, xi_vec, xy_from_dz, CVec6, V6};

/// Frame of a conformal minimal immersion at one sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameState {
    pub p: u8,
    pub eps: i8,
    pub b: i8,
    pub f: V6,
    pub fz: CVec6,
    pub xi: CVec6,
}

/// Sup-norm violations of the frame constraints.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FrameDefects {
    /// `|<F_k, F_k>_p - 1|`.
    pub quadric: f64,
    /// `|<F_z, F_z>|` and `|<F_z, F_zbar> - e^{2u}/2|`, relative to `e^{2u}`.
    pub conformal: f64,
    /// `|<xi, xibar> + eps b|` and `|<xi, xi>|`.
    pub normal: f64,
}

impl FrameState {
    pub fn from_real(p: u8, eps: i8, b: i8, s: &[V6; 5]) -> Self {
        Self { p, eps, b, f: s[0], fz: dz_vec(&s[1], &s[2], eps), xi: xi_vec(&s[3], &s[4], eps) }
    }

    /// `(F, F_x, F_y, N, Nt)`.
    pub fn to_real(&self) -> [V6; 5] {
        let (fx, fy) = xy_from_dz(&self.fz);
        let (n, nt) = normals_from_xi(&self.xi);
        [self.f, fx, fy, n, nt]
    }

    pub fn defects(&self, u: f64) -> FrameDefects {
        let p = self.p;
        let (f1, f2) = (&self.f[..3], &self.f[3..]);
        let q = |x: &[f64]| {
            let x: V3 = [x[0], x[1], x[2]];
            crate::algebra::dot_p(p, &x, &x) - 1.0
        };
        let e2u = (2.0 * u).exp();
        let fzz = self.fz.g(p, &self.fz);
        let fzb = self.fz.g(p, &self.fz.conj());
        let xx = self.xi.g(p, &self.xi.conj());
        let x2 = self.xi.g(p, &self.xi);
        let big = |z: ScalarEps| z.re.abs().max(z.im.abs());
        FrameDefects {
            quadric: q(f1).abs().max(q(f2).abs()),
            conformal: big(fzz).max((fzb.re - e2u / 2.0).abs()).max(fzb.im.abs()) / e2u,
            normal: (xx.re + (self.eps * self.b) as f64).abs().max(xx.im.abs()).max(big(x2)),
        }
    }

    /// `(gamma_1, gamma_2)` read off the frame.
    pub fn gammas(&self) -> (ScalarEps, ScalarEps) {
        let bf = self.b as f64;
        let g1 = self.fz.j(1, self.p, &self.f).g(self.p, &self.xi.conj()).scale(-bf);
        let g2 = self.fz.j(2, self.p, &self.f).g(self.p, &self.xi).scale(-bf);
        (g1, g2)
    }

    /// `(C_1, C_2) = Omega_k(F_x, F_y) / (eps e^{2u})`.
    pub fn kahler(&self) -> (f64, f64) {
        let [f, fx, fy, _, _] = self.to_real();
        let e2u = self.eps as f64 * g6(self.p, &fx, &fx);
        (
            crate::product::omega6(1, self.p, &f, &fx, &fy) / e2u,
            crate::product::omega6(2, self.p, &f, &fx, &fy) / e2u,
        )
    }
}

// ---------------------------------------------------------------------------
// Initial frame

/// `P` with `P^T diag(eta) P = S` (`eta = 1` for p=0, `(-1, 1)` for p=1).
fn factor(s: Matrix2<f64>, p: u8) -> Result<Matrix2<f64>> {
    let eig = SymmetricEigen::new(s);
    let mut idx = [0usize, 1];
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let w = [eig.eigenvalues[idx[0]], eig.eigenvalues[idx[1]]];
    let q = [eig.eigenvectors.column(idx[0]).into_owned(), eig.eigenvectors.column(idx[1]).into_owned()];
    let tol = 1e-12 * (1.0 + w[0].abs().max(w[1].abs()));
    let (a, b) = if p == 0 {
        if w[0] < -tol {
            return Err(Error::Invalid(format!("factor metric is indefinite: {w:?}")));
        }
        (w[0].max(0.0).sqrt(), w[1].max(0.0).sqrt())
    } else {
        if w[0] > tol || w[1] < -tol {
            return Err(Error::Invalid(format!("factor metric is not Lorentzian: {w:?}")));
        }
        ((-w[0]).max(0.0).sqrt(), w[1].max(0.0).sqrt())
    };
    Ok(Matrix2::new(a * q[0][0], a * q[0][1], b * q[1][0], b * q[1][1]))
}

/// A frame at `F = (e_z, e_z)` with conformal factor `u`, Kahler functions `C_1, C_2` and
/// `gamma_1, gamma_2` equal to the given values.
pub fn adapted_frame(
    p: u8,
    eps: i8,
    b: i8,
    u: f64,
    c: (f64, f64),
    gamma: (ScalarEps, ScalarEps),
) -> Result<FrameState> {
    if p > 1 {
        return Err(Error::UnsupportedSignature(p));
    }
    let (c1, c2) = c;
    let e = eps as f64;
    let m1 = e * (c1 + c2) / 2.0;
    let m2 = e * (c2 - c1) / 2.0;
    let deta = if p == 0 { 1.0 } else { -1.0 };
    let kk = deta * c1 * c2 + e;
    let s = if p == 0 && eps == 1 {
        kk / 2.0
    } else if p == 0 {
        let bb = c1 * c2 - 1.0;
        ((-bb + (bb * bb + 4.0 * m1 * m1).sqrt()) / 2.0).max(1.0)
    } else {
        0.0
    };
    let r = kk - e * s;
    let t = if p == 0 { (s * r - deta * m1 * m1).max(0.0).sqrt() } else { m1 };
    let s1 = Matrix2::new(s, t, t, r);
    let s2 = s1 - Matrix2::new(1.0, 0.0, 0.0, e);
    let mut p1 = factor(s1, p).map_err(|_| Error::NoAdaptedFrame { c1, c2 })?;
    let mut p2 = factor(s2, p).map_err(|_| Error::NoAdaptedFrame { c1, c2 })?;
    if p1.determinant() * m1 < 0.0 {
        p1.set_row(0, &(-p1.row(0)));
    }
    if p2.determinant() * m2 < 0.0 {
        p2.set_row(0, &(-p2.row(0)));
    }
    let ez: V3 = [0.0, 0.0, 1.0];
    let t1: V3 = [1.0, 0.0, 0.0];
    let t2 = j_raw(p, &ez, &t1);
    let comb = |m: &Matrix2<f64>, col: usize| -> V3 { std::array::from_fn(|k| m[(0, col)] * t1[k] + m[(1, col)] * t2[k]) };
    let eu = u.exp();
    let f = join(&ez, &ez);
    let fx = scale6(eu, &join(&comb(&p1, 0), &comb(&p2, 0)));
    let fy = scale6(eu, &join(&comb(&p1, 1), &comb(&p2, 1)));
    let b = if eps == 1 { 1 } else { b };
    let (n, nt) = normal_frame(p, eps, b, &f, &fx, &fy)?;
    let mut st = FrameState { p, eps, b, f, fz: dz_vec(&fx, &fy, eps), xi: xi_vec(&n, &nt, eps) };

    let (g1, g2) = st.gammas();
    let null = |z: ScalarEps| z.abs() <= 1e-12 * (1.0 + (2.0 * u).exp());
    // rotate the coordinate so that gamma_1 gamma_2 has the target phase
    let (prod, tprod) = (g1 * g2, gamma.0 * gamma.1);
    if !null(prod) && !null(tprod) {
        let (a0, a1) = (polar(prod)?, polar(tprod)?);
        if eps == -1 && (a0.sign != a1.sign || a0.imaginary != a1.imaginary) {
            return Err(Error::FrameUnreachable("gamma_1 gamma_2"));
        }
        st.fz = st.fz.mul(exp_i((a1.phi - a0.phi) / 2.0, eps));
    }
    // rotate the normal frame so that gamma_1 (or gamma_2) has the target phase
    let (g1, g2) = st.gammas();
    let (cur, tgt, conj) = if !null(g1) && !null(gamma.0) { (g1, gamma.0, true) } else { (g2, gamma.1, false) };
    if !null(cur) && !null(tgt) {
        let (a0, a1) = (polar(cur)?, polar(tgt)?);
        if eps == -1 && a0.imaginary != a1.imaginary {
            return Err(Error::FrameUnreachable("gamma"));
        }
        // xi -> mu xi multiplies gamma_1 by mubar and gamma_2 by mu
        let mut mu = if conj { exp_i(a0.phi - a1.phi, eps) } else { exp_i(a1.phi - a0.phi, eps) };
        if a0.sign != a1.sign {
            mu = -mu;
        }
        st.xi = st.xi.mul(mu);
    }
    Ok(st)
}

/// [`adapted_frame`] fed with the data at sample `k`.
pub fn adapted_frame_for(d: &FundamentalData, k: usize) -> Result<FrameState> {
    adapted_frame(d.p, d.eps, d.b, d.u[k], (d.c1[k], d.c2[k]), (d.gamma1[k], d.gamma2[k]))
}

// ---------------------------------------------------------------------------
// Frenet system

/// Data needed by the right-hand side: `u, C1, C2, u_z, gamma_1, gamma_2, f_1, f_2, A`.
type Pt = [f64; 15];

fn pack(d: &FundamentalData, uz: &[ScalarEps], k: usize) -> Pt {
    let z = [uz[k], d.gamma1[k], d.gamma2[k], d.f1[k], d.f2[k], d.a[k]];
    let mut out = [0.0; 15];
    out[0] = d.u[k];
    out[1] = d.c1[k];
    out[2] = d.c2[k];
    for (m, w) in z.iter().enumerate() {
        out[3 + 2 * m] = w.re;
        out[4 + 2 * m] = w.im;
    }
    out
}

/// `(d/dx, d/dy)` of the real frame `(F, F_x, F_y, N, Nt)`.
fn frenet_rhs(p: u8, eps: i8, b: i8, s: &[V6; 5], d: &Pt) -> ([V6; 5], [V6; 5]) {
    let e = eps as f64;
    let bf = b as f64;
    let sc = |m: usize| ScalarEps::new(d[3 + 2 * m], d[4 + 2 * m], eps);
    let (uz, g1, g2, f1, f2, a) = (sc(0), sc(1), sc(2), sc(3), sc(4), sc(5));
    let (c1, c2) = (d[1], d[2]);
    let e2u = (2.0 * d[0]).exp();
    let sp = if p % 2 == 0 { 1.0 } else { -1.0 };
    let i_e = ScalarEps::i(eps);

    let f = s[0];
    let fz = dz_vec(&s[1], &s[2], eps);
    let fzb = fz.conj();
    let xi = xi_vec(&s[3], &s[4], eps);
    let xib = xi.conj();
    let fr = CVec6::real(f, eps);

    // F_zz = 2u_z F_z + f1 xi + f2 xibar + eps (-1)^p (b gamma_1 gamma_2 / 2) F
    let fzz = fz
        .mul(uz.scale(2.0))
        .add(&xi.mul(f1))
        .add(&xib.mul(f2))
        .add(&fr.mul((g1 * g2).scale(e * sp * bf / 2.0)));
    // F_zzbar = eps (-1)^{p+1} (e^{2u}/4) C1 C2 F - (e^{2u}/4) F^
    let fzzb: V6 = std::array::from_fn(|k| -e * sp * c1 * c2 * e2u / 4.0 * f[k] - e2u / 4.0 * hat(&f)[k]);
    // xi_z = (2 eps b f2 / e^{2u}) F_zbar + A xi + (-1)^{p+1} (b C1/2) i gamma_2 F
    let xiz = fzb
        .mul(f2.scale(2.0 * e * bf / e2u))
        .add(&xi.mul(a))
        .add(&fr.mul((i_e * g2).scale(-sp * bf * c1 / 2.0)));
    let xibz = fzb
        .mul(f1.scale(2.0 * e * bf / e2u))
        .sub(&xib.mul(a))
        .add(&fr.mul((i_e * g1).scale(-sp * bf * c2 / 2.0)));
    let x = xiz.add(&xibz);
    let y = xiz.sub(&xibz);
    let r2 = std::f64::consts::SQRT_2;
    let v = |a: f64, u: &V6, c: f64, w: &V6| -> V6 { std::array::from_fn(|k| a * u[k] + c * w[k]) };
    let dx = [
        s[1],
        v(2.0, &fzz.re, 2.0, &fzzb),
        scale6(-2.0 * e, &fzz.im),
        scale6(r2, &x.re),
        scale6(-r2 * e, &y.im),
    ];
    let dy = [
        s[2],
        scale6(-2.0 * e, &fzz.im),
        v(-2.0 * e, &fzz.re, 2.0 * e, &fzzb),
        scale6(-r2 * e, &x.im),
        scale6(-r2 * e, &y.re),
    ];
    (dx, dy)
}

type State = [V6; 5];

fn axpy(s: &State, h: f64, k: &State) -> State {
    std::array::from_fn(|m| std::array::from_fn(|c| s[m][c] + h * k[m][c]))
}

/// One RK4 step of size `h` along x (`dir = 0`) or y (`dir = 1`), data at start, midpoint and end.
fn rk4(p: u8, eps: i8, b: i8, s: &State, h: f64, dir: usize, d0: &Pt, dm: &Pt, d1: &Pt) -> State {
    let f = |st: &State, d: &Pt| {
        let (dx, dy) = frenet_rhs(p, eps, b, st, d);
        if dir == 0 {
            dx
        } else {
            dy
        }
    };
    let k1 = f(s, d0);
    let k2 = f(&axpy(s, h / 2.0, &k1), dm);
    let k3 = f(&axpy(s, h / 2.0, &k2), dm);
    let k4 = f(&axpy(s, h, &k3), d1);
    std::array::from_fn(|m| std::array::from_fn(|c| s[m][c] + h / 6.0 * (k1[m][c] + 2.0 * k2[m][c] + 2.0 * k3[m][c] + k4[m][c])))
}

fn project_quadric(p: u8, s: &mut State) {
    for half in 0..2 {
        let x: V3 = std::array::from_fn(|k| s[0][3 * half + k]);
        let n = crate::algebra::dot_p(p, &x, &x);
        if n > 0.0 {
            for k in 0..3 {
                s[0][3 * half + k] /= n.sqrt();
            }
        }
    }
}

/// Settings for [`reconstruct`].
#[derive(Clone, Copy, Debug)]
pub struct ReconstructOptions {
    /// Sample carrying the initial frame.
    pub base: (usize, usize),
    /// Largest admissible compatibility residual; `None` uses `50 h^2`.
    pub tau_compat: Option<f64>,
    /// Renormalize the positions onto the quadric after every step.
    pub project: bool,
    /// Evaluate the per-cell commutator.
    pub commutator: bool,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        Self { base: (0, 0), tau_compat: None, project: false, commutator: true }
    }
}

/// Output of [`reconstruct`].
#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub grid: ImmersionGrid,
    pub frames: Vec<FrameState>,
    /// Largest constraint violations over the grid.
    pub defects: FrameDefects,
    /// Largest number of steps from the base to any sample.
    pub steps: usize,
    /// `100 h^4 steps`.
    pub drift_tol: f64,
    /// Sup over cells of `|x-then-y - y-then-x|` for a single cell.
    pub commutator_cell: f64,
    /// Sup over samples of the difference between the row-first and column-first sweeps.
    pub commutator_path: f64,
}

/// Integrates the Frenet system from `init` at `opts.base`.
///
/// Every sample must carry data; crop extracted data with [`FundamentalData::crop`] first.
pub fn reconstruct(d: &FundamentalData, init: &FrameState, opts: ReconstructOptions) -> Result<Reconstruction> {
    let s = d.spec;
    if d.mask.iter().any(|&m| !m) {
        return Err(Error::Invalid("reconstruction needs data on every sample".into()));
    }
    if init.p != d.p || init.eps != d.eps || init.b != d.b {
        return Err(Error::Invalid("initial frame signature differs from the data".into()));
    }
    let (i0, j0) = opts.base;
    s.check_inner(i0, j0, 0)?;
    let h = s.h();
    let tau = opts.tau_compat.unwrap_or(50.0 * h * h);
    compat_residuals(d)?.check(tau)?;
    let init_def = init.defects(d.u[s.idx(i0, j0)]);
    let exact = 1e-10;
    if init_def.quadric > exact || init_def.conformal > exact || init_def.normal > exact {
        return Err(Error::Invalid(format!("initial frame violates the frame constraints: {init_def:?}")));
    }

    let uz: Vec<ScalarEps> = (0..s.len())
        .map(|k| {
            let (i, j) = (k / s.ny, k % s.ny);
            dz_real(d4_x(&s, &d.u, i, j), d4_y(&s, &d.u, i, j), d.eps)
        })
        .collect();
    let data: Vec<Pt> = (0..s.len()).map(|k| pack(d, &uz, k)).collect();
    let (p, eps, b) = (d.p, d.eps, d.b);
    let mid_x = |i: usize, j: usize| midpoint(|ii| data[s.idx(ii, j)], i, s.nx);
    let mid_y = |i: usize, j: usize| midpoint(|jj| data[s.idx(i, jj)], j, s.ny);
    // step from (i, j) to the neighbour in direction `dir` with sign `fw`
    let step = |st: &State, i: usize, j: usize, dir: usize, fw: bool| -> State {
        let (ni, nj) = match (dir, fw) {
            (0, true) => (i + 1, j),
            (0, false) => (i - 1, j),
            (_, true) => (i, j + 1),
            (_, false) => (i, j - 1),
        };
        let dm = if dir == 0 { mid_x(i.min(ni), j) } else { mid_y(i, j.min(nj)) };
        let hh = if dir == 0 { s.hx } else { s.hy } * if fw { 1.0 } else { -1.0 };
        let mut out = rk4(p, eps, b, st, hh, dir, &data[s.idx(i, j)], &dm, &data[s.idx(ni, nj)]);
        if opts.project {
            project_quadric(p, &mut out);
        }
        out
    };

    let sweep = |first: usize| -> Vec<State> {
        let mut out = vec![[[0.0; 6]; 5]; s.len()];
        out[s.idx(i0, j0)] = init.to_real();
        let (n_first, n_second) = if first == 0 { (s.nx, s.ny) } else { (s.ny, s.nx) };
        let (a0, b0) = if first == 0 { (i0, j0) } else { (j0, i0) };
        let at = |a: usize, c: usize| if first == 0 { (a, c) } else { (c, a) };
        for a in a0 + 1..n_first {
            let (i, j) = at(a - 1, b0);
            let (ni, nj) = at(a, b0);
            out[s.idx(ni, nj)] = step(&out[s.idx(i, j)], i, j, first, true);
        }
        for a in (0..a0).rev() {
            let (i, j) = at(a + 1, b0);
            let (ni, nj) = at(a, b0);
            out[s.idx(ni, nj)] = step(&out[s.idx(i, j)], i, j, first, false);
        }
        let second = 1 - first;
        for a in 0..n_first {
            for c in b0 + 1..n_second {
                let (i, j) = at(a, c - 1);
                let (ni, nj) = at(a, c);
                out[s.idx(ni, nj)] = step(&out[s.idx(i, j)], i, j, second, true);
            }
            for c in (0..b0).rev() {
                let (i, j) = at(a, c + 1);
                let (ni, nj) = at(a, c);
                out[s.idx(ni, nj)] = step(&out[s.idx(i, j)], i, j, second, false);
            }
        }
        out
    };
    let states = sweep(0);
    let other = sweep(1);
    let diff = |a: &State, c: &State| {
        (0..5).flat_map(|m| (0..6).map(move |k| (m, k))).fold(0.0f64, |acc, (m, k)| acc.max((a[m][k] - c[m][k]).abs()))
    };
    let commutator_path = (0..s.len()).fold(0.0f64, |acc, k| acc.max(diff(&states[k], &other[k])));
    let mut commutator_cell = 0.0f64;
    if opts.commutator {
        for i in 0..s.nx - 1 {
            for j in 0..s.ny - 1 {
                let st = &states[s.idx(i, j)];
                let xy = step(&step(st, i, j, 0, true), i + 1, j, 1, true);
                let yx = step(&step(st, i, j, 1, true), i, j + 1, 0, true);
                commutator_cell = commutator_cell.max(diff(&xy, &yx));
            }
        }
    }

    let frames: Vec<FrameState> = states.iter().map(|st| FrameState::from_real(p, eps, b, st)).collect();
    let mut defects = FrameDefects::default();
    for (k, fr) in frames.iter().enumerate() {
        let dd = fr.defects(d.u[k]);
        defects.quadric = defects.quadric.max(dd.quadric);
        defects.conformal = defects.conformal.max(dd.conformal);
        defects.normal = defects.normal.max(dd.normal);
    }
    let steps = i0.max(s.nx - 1 - i0) + j0.max(s.ny - 1 - j0);
    let drift_tol = 100.0 * h.powi(4) * steps as f64;
    if !(defects.quadric <= drift_tol) {
        return Err(Error::DriftExceeded { drift: defects.quadric, tol: drift_tol });
    }
    let grid = ImmersionGrid::with_tolerance(p, eps, s, states.iter().map(|st| st[0]).collect(), drift_tol.max(TAU_PT))?;
    Ok(Reconstruction { grid, frames, defects, steps, drift_tol, commutator_cell, commutator_path })
}

// ---------------------------------------------------------------------------
// Round trip

/// Sup-norm differences of gauge-invariant fields between data and its reconstruction.
///
/// The `_mod` fields compare the scalar moduli `z zbar`, which stay smooth through null values when eps = -1.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RoundTripReport {
    pub u: f64,
    pub c1: f64,
    pub c2: f64,
    pub gamma1_mod: f64,
    pub gamma2_mod: f64,
    pub f1_mod: f64,
    pub f2_mod: f64,
    pub points: usize,
    pub quadric_drift: f64,
    pub drift_tol: f64,
    pub steps: usize,
    pub commutator_cell: f64,
    pub commutator_path: f64,
}

impl RoundTripReport {
    pub fn named(&self) -> Vec<(String, f64)> {
        vec![
            ("u".into(), self.u),
            ("c1".into(), self.c1),
            ("c2".into(), self.c2),
            ("gamma1_mod".into(), self.gamma1_mod),
            ("gamma2_mod".into(), self.gamma2_mod),
            ("f1_mod".into(), self.f1_mod),
            ("f2_mod".into(), self.f2_mod),
        ]
    }

    pub fn max(&self) -> f64 {
        self.named().iter().map(|x| x.1).fold(0.0, f64::max)
    }
}

/// Reconstructs the immersion from `d`, extracts its data again and compares gauge-invariant fields.
pub fn roundtrip_report(d: &FundamentalData, opts: ReconstructOptions) -> Result<(RoundTripReport, Reconstruction, FundamentalData)> {
    let k0 = d.spec.idx(opts.base.0, opts.base.1);
    let init = adapted_frame_for(d, k0)?;
    let rec = reconstruct(d, &init, opts)?;
    let back = extract(&rec.grid, ExtractOptions::for_grid(&rec.grid, d.b))?;
    let r = roundtrip_compare(d, &back, &rec, |_, _| true)?;
    Ok((r, rec, back))
}

/// Round-trip differences restricted to the samples `(i, j)` accepted by `keep`.
pub fn roundtrip_compare(
    d: &FundamentalData,
    back: &FundamentalData,
    rec: &Reconstruction,
    keep: impl Fn(usize, usize) -> bool,
) -> Result<RoundTripReport> {
    let s = d.spec;
    let mut r = RoundTripReport {
        quadric_drift: rec.defects.quadric,
        drift_tol: rec.drift_tol,
        steps: rec.steps,
        commutator_cell: rec.commutator_cell,
        commutator_path: rec.commutator_path,
        ..Default::default()
    };
    for k in 0..s.len() {
        if !(d.mask[k] && back.mask[k] && keep(k / s.ny, k % s.ny)) {
            continue;
        }
        r.points += 1;
        r.u = r.u.max((d.u[k] - back.u[k]).abs());
        r.c1 = r.c1.max((d.c1[k] - back.c1[k]).abs());
        r.c2 = r.c2.max((d.c2[k] - back.c2[k]).abs());
        r.gamma1_mod = r.gamma1_mod.max((d.gamma1[k].modulus2() - back.gamma1[k].modulus2()).abs());
        r.gamma2_mod = r.gamma2_mod.max((d.gamma2[k].modulus2() - back.gamma2[k].modulus2()).abs());
        r.f1_mod = r.f1_mod.max((d.f1[k].modulus2() - back.f1[k].modulus2()).abs());
        r.f2_mod = r.f2_mod.max((d.f2[k].modulus2() - back.f2[k].modulus2()).abs());
    }
    if r.points == 0 {
        return Err(Error::EmptyInterior);
    }
    Ok(r)
}
