//! Gordon-type equations `v_{z zbar} = (sigma/2) N(2v)` and the explicit minimal families built on them.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::{exp_i, ScalarEps};
use crate::error::{Error, Result};
use crate::fundata::FundamentalData;
use crate::grid::{d4_x, d4_y, dz_real, GridSpec};

pub const GORDON_SCHEMA: u32 = 1;

/// Which nonlinearity and which signs act on `(v, w)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GordonKind {
    SinhPlus,
    SinhMinus,
    SinMixed,
    SinhMixed,
}

impl GordonKind {
    /// `(sigma_v, sigma_w)`.
    pub fn sigma(self) -> (f64, f64) {
        match self {
            GordonKind::SinhPlus => (-1.0, -1.0),
            GordonKind::SinhMinus => (1.0, 1.0),
            GordonKind::SinMixed | GordonKind::SinhMixed => (-1.0, 1.0),
        }
    }

    pub fn trig(self) -> bool {
        self == GordonKind::SinMixed
    }

    #[inline]
    pub fn nonlin(self, x: f64) -> f64 {
        if self.trig() {
            x.sin()
        } else {
            x.sinh()
        }
    }

    #[inline]
    pub fn dnonlin(self, x: f64) -> f64 {
        if self.trig() {
            x.cos()
        } else {
            x.cosh()
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GordonKind::SinhPlus => "SinhPlus",
            GordonKind::SinhMinus => "SinhMinus",
            GordonKind::SinMixed => "SinMixed",
            GordonKind::SinhMixed => "SinhMixed",
        }
    }
}

impl fmt::Display for GordonKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

// ---------------------------------------------------------------------------
// Banded LU

/// Square band matrix with `kl` sub- and `ku` super-diagonals, room reserved for pivoting fill-in.
#[derive(Clone, Debug)]
pub struct Banded {
    n: usize,
    kl: usize,
    ku: usize,
    w: usize,
    data: Vec<f64>,
}

impl Banded {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let w = 2 * kl + ku + 1;
        Self { n, kl, ku, w, data: vec![0.0; n * w] }
    }

    #[inline]
    fn pos(&self, r: usize, c: usize) -> usize {
        debug_assert!(c + self.kl >= r && c <= r + self.kl + self.ku);
        r * self.w + (c + self.kl - r)
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        if c + self.kl < r || c > r + self.ku {
            0.0
        } else {
            self.data[self.pos(r, c)]
        }
    }

    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        assert!(c + self.kl >= r && c <= r + self.ku, "entry ({r}, {c}) outside the band");
        let k = self.pos(r, c);
        self.data[k] += v;
    }

    /// Solves `A x = b` by Gaussian elimination with partial pivoting; consumes the matrix.
    pub fn solve(mut self, mut b: Vec<f64>) -> Result<Vec<f64>> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let scale = self.data.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut piv = k;
            for i in k + 1..=last {
                if self.data[self.pos(i, k)].abs() > self.data[self.pos(piv, k)].abs() {
                    piv = i;
                }
            }
            let akk = self.data[self.pos(piv, k)];
            if akk.abs() <= 1e-14 * scale {
                return Err(Error::Singular(k));
            }
            let cmax = (k + kl + ku).min(n - 1);
            if piv != k {
                for c in k..=cmax {
                    let (a, q) = (self.pos(k, c), self.pos(piv, c));
                    self.data.swap(a, q);
                }
                b.swap(k, piv);
            }
            for i in k + 1..=last {
                let l = self.data[self.pos(i, k)] / akk;
                if l == 0.0 {
                    continue;
                }
                let ik = self.pos(i, k);
                self.data[ik] = 0.0;
                for c in k + 1..=cmax {
                    let kc = self.data[self.pos(k, c)];
                    let ic = self.pos(i, c);
                    self.data[ic] -= l * kc;
                }
                b[i] -= l * b[k];
            }
        }
        for k in (0..n).rev() {
            let cmax = (k + kl + ku).min(n - 1);
            let mut s = b[k];
            for c in k + 1..=cmax {
                s -= self.data[self.pos(k, c)] * b[c];
            }
            b[k] = s / self.data[self.pos(k, k)];
        }
        Ok(b)
    }
}

// ---------------------------------------------------------------------------
// Scalar solvers

/// Boundary / initial data: `(x, y) -> [value, d/dy value]`.
pub type DataFn = Arc<dyn Fn(f64, f64) -> [f64; 2] + Send + Sync>;
/// Source term `g` in `v_{z zbar} = (sigma/2) N(2v) + g`.
pub type ForcingFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub newton_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { newton_tol: 1e-11, max_iter: 40 }
    }
}

/// One scalar equation `v_xx + eps v_yy = 2 sigma N(2v) + 4 g`.
#[derive(Clone)]
pub struct ScalarProblem {
    pub eps: i8,
    pub sigma: f64,
    pub kind: GordonKind,
    pub spec: GridSpec,
    pub data: DataFn,
    pub forcing: Option<ForcingFn>,
}

impl ScalarProblem {
    fn g(&self, x: f64, y: f64) -> f64 {
        self.forcing.as_ref().map_or(0.0, |f| f(x, y))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarSolution {
    pub v: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

fn elliptic_residual(pb: &ScalarProblem, v: &[f64]) -> Vec<f64> {
    let s = pb.spec;
    let (mx, my) = (s.nx - 2, s.ny - 2);
    let mut r = vec![0.0; mx * my];
    for i in 1..s.nx - 1 {
        for j in 1..s.ny - 1 {
            let k = s.idx(i, j);
            let lap = (v[s.idx(i + 1, j)] - 2.0 * v[k] + v[s.idx(i - 1, j)]) / (s.hx * s.hx)
                + (v[s.idx(i, j + 1)] - 2.0 * v[k] + v[s.idx(i, j - 1)]) / (s.hy * s.hy);
            r[(i - 1) * my + (j - 1)] =
                lap - 2.0 * pb.sigma * pb.kind.nonlin(2.0 * v[k]) - 4.0 * pb.g(s.x(i), s.y(j));
        }
    }
    r
}

fn inf_norm(r: &[f64]) -> f64 {
    r.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Dirichlet problem for the elliptic equation by damped Newton; initial guess is the harmonic extension.
pub fn solve_elliptic(pb: &ScalarProblem, st: &SolverSettings) -> Result<ScalarSolution> {
    let s = pb.spec;
    let (mx, my) = (s.nx - 2, s.ny - 2);
    let m = mx * my;
    let at = |i: usize, j: usize| (i - 1) * my + (j - 1);
    let (cx, cy) = (1.0 / (s.hx * s.hx), 1.0 / (s.hy * s.hy));
    let mut v = vec![0.0; s.len()];
    for i in 0..s.nx {
        for j in 0..s.ny {
            if !s.inner(i, j, 1) {
                v[s.idx(i, j)] = (pb.data)(s.x(i), s.y(j))[0];
            }
        }
    }
    // Laplacian with constant coefficients; `diag` adds the Newton term
    let assemble = |diag: &dyn Fn(usize, usize) -> f64| {
        let mut a = Banded::zeros(m, my, my);
        for i in 1..s.nx - 1 {
            for j in 1..s.ny - 1 {
                let r = at(i, j);
                a.add(r, r, -2.0 * (cx + cy) + diag(i, j));
                if i > 1 {
                    a.add(r, at(i - 1, j), cx);
                }
                if i + 2 < s.nx {
                    a.add(r, at(i + 1, j), cx);
                }
                if j > 1 {
                    a.add(r, at(i, j - 1), cy);
                }
                if j + 2 < s.ny {
                    a.add(r, at(i, j + 1), cy);
                }
            }
        }
        a
    };
    // harmonic extension
    {
        let mut rhs = vec![0.0; m];
        for i in 1..s.nx - 1 {
            for j in 1..s.ny - 1 {
                let mut b = 0.0;
                if i == 1 {
                    b -= cx * v[s.idx(0, j)];
                }
                if i + 2 == s.nx {
                    b -= cx * v[s.idx(s.nx - 1, j)];
                }
                if j == 1 {
                    b -= cy * v[s.idx(i, 0)];
                }
                if j + 2 == s.ny {
                    b -= cy * v[s.idx(i, s.ny - 1)];
                }
                rhs[at(i, j)] = b;
            }
        }
        let x = assemble(&|_, _| 0.0).solve(rhs)?;
        for i in 1..s.nx - 1 {
            for j in 1..s.ny - 1 {
                v[s.idx(i, j)] = x[at(i, j)];
            }
        }
    }
    let mut r = elliptic_residual(pb, &v);
    let mut rn = inf_norm(&r);
    let mut it = 0;
    while rn > st.newton_tol {
        if it >= st.max_iter || !rn.is_finite() {
            return Err(Error::NewtonDivergence { residual: rn, iterations: it });
        }
        it += 1;
        let vv = v.clone();
        let jac = assemble(&|i, j| -4.0 * pb.sigma * pb.kind.dnonlin(2.0 * vv[s.idx(i, j)]));
        let dx = jac.solve(r.iter().map(|x| -x).collect())?;
        let vmax = inf_norm(&v);
        if inf_norm(&dx) <= 1e-13 * (1.0 + vmax) {
            break;
        }
        let mut alpha = 1.0;
        loop {
            let mut trial = v.clone();
            for i in 1..s.nx - 1 {
                for j in 1..s.ny - 1 {
                    trial[s.idx(i, j)] += alpha * dx[at(i, j)];
                }
            }
            let rt = elliptic_residual(pb, &trial);
            let rtn = inf_norm(&rt);
            // Armijo on the sup-norm
            if rtn <= (1.0 - 1e-4 * alpha) * rn || rtn <= st.newton_tol {
                v = trial;
                r = rt;
                rn = rtn;
                break;
            }
            alpha *= 0.5;
            if alpha < 1e-6 {
                return Err(Error::NewtonDivergence { residual: rn, iterations: it });
            }
        }
    }
    Ok(ScalarSolution { v, residual: rn, iterations: it })
}

/// Cauchy problem for `v_yy = v_xx - 2 sigma N(2v) - 4 g` marched in y by leapfrog.
///
/// Initial data on the row `y = y0`, Dirichlet data on the lateral edges `x = x0`, `x = x_end`.
pub fn solve_hyperbolic(pb: &ScalarProblem) -> Result<ScalarSolution> {
    let s = pb.spec;
    if s.hy > s.hx {
        return Err(Error::CflViolation { hx: s.hx, hy: s.hy });
    }
    let mut v = vec![0.0; s.len()];
    let (cx, hy2) = (1.0 / (s.hx * s.hx), s.hy * s.hy);
    let accel = |v: &[f64], i: usize, j: usize| {
        let k = s.idx(i, j);
        (v[s.idx(i + 1, j)] - 2.0 * v[k] + v[s.idx(i - 1, j)]) * cx
            - 2.0 * pb.sigma * pb.kind.nonlin(2.0 * v[k])
            - 4.0 * pb.g(s.x(i), s.y(j))
    };
    let mut vy0 = vec![0.0; s.nx];
    for i in 0..s.nx {
        let [a, b] = (pb.data)(s.x(i), s.y(0));
        v[s.idx(i, 0)] = a;
        vy0[i] = b;
    }
    for j in 1..s.ny {
        v[s.idx(0, j)] = (pb.data)(s.x(0), s.y(j))[0];
        v[s.idx(s.nx - 1, j)] = (pb.data)(s.x(s.nx - 1), s.y(j))[0];
    }
    for i in 1..s.nx - 1 {
        v[s.idx(i, 1)] = v[s.idx(i, 0)] + s.hy * vy0[i] + 0.5 * hy2 * accel(&v, i, 0);
    }
    for j in 1..s.ny - 1 {
        for i in 1..s.nx - 1 {
            let a = accel(&v, i, j);
            v[s.idx(i, j + 1)] = 2.0 * v[s.idx(i, j)] - v[s.idx(i, j - 1)] + hy2 * a;
        }
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NewtonDivergence { residual: f64::INFINITY, iterations: 0 });
    }
    let mut res = 0.0f64;
    for j in 1..s.ny - 1 {
        for i in 1..s.nx - 1 {
            let vyy = (v[s.idx(i, j + 1)] - 2.0 * v[s.idx(i, j)] + v[s.idx(i, j - 1)]) / hy2;
            res = res.max((vyy - accel(&v, i, j)).abs());
        }
    }
    Ok(ScalarSolution { v, residual: res, iterations: 0 })
}

/// Elliptic for `eps = 1`, hyperbolic for `eps = -1`.
pub fn solve_scalar(pb: &ScalarProblem, st: &SolverSettings) -> Result<ScalarSolution> {
    match pb.eps {
        1 => solve_elliptic(pb, st),
        -1 => solve_hyperbolic(pb),
        e => Err(Error::InvalidSign(e as i64)),
    }
}

// ---------------------------------------------------------------------------
// Pair solutions

#[derive(Clone, Debug, PartialEq)]
pub struct GordonSolution {
    pub kind: GordonKind,
    pub eps: i8,
    pub spec: GridSpec,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    pub mask: Vec<bool>,
    pub residual: f64,
}

/// Boundary data and forcing for both components.
#[derive(Clone)]
pub struct GordonProblem {
    pub kind: GordonKind,
    pub eps: i8,
    pub spec: GridSpec,
    pub data_v: DataFn,
    pub data_w: DataFn,
    pub forcing_v: Option<ForcingFn>,
    pub forcing_w: Option<ForcingFn>,
}

pub fn solve(pb: &GordonProblem, st: &SolverSettings) -> Result<GordonSolution> {
    let (sv, sw) = pb.kind.sigma();
    let one = |sigma: f64, data: &DataFn, forcing: &Option<ForcingFn>| {
        solve_scalar(
            &ScalarProblem {
                eps: pb.eps,
                sigma,
                kind: pb.kind,
                spec: pb.spec,
                data: data.clone(),
                forcing: forcing.clone(),
            },
            st,
        )
    };
    let a = one(sv, &pb.data_v, &pb.forcing_v)?;
    let b = one(sw, &pb.data_w, &pb.forcing_w)?;
    Ok(GordonSolution {
        kind: pb.kind,
        eps: pb.eps,
        spec: pb.spec,
        v: a.v,
        w: b.v,
        mask: vec![true; pb.spec.len()],
        residual: a.residual.max(b.residual),
    })
}

// ---------------------------------------------------------------------------
// Travelling-profile data

/// Solution of `q'' = 2 sigma N(2q)` tabulated finely and read back by cubic Hermite interpolation.
#[derive(Clone, Debug)]
pub struct Profile {
    s0: f64,
    ds: f64,
    q: Vec<f64>,
    dq: Vec<f64>,
}

impl Profile {
    /// Integrates from `q(0) = q0`, `q'(0) = dq0` over `[-half, half]`.
    pub fn new(kind: GordonKind, sigma: f64, q0: f64, dq0: f64, half: f64) -> Result<Self> {
        let n = ((half / 1e-3).ceil() as usize).max(16);
        let ds = half / n as f64;
        let rhs = |y: [f64; 2]| [y[1], 2.0 * sigma * kind.nonlin(2.0 * y[0])];
        let march = |h: f64| {
            let mut out = vec![[q0, dq0]];
            let mut y = [q0, dq0];
            for _ in 0..n {
                let k1 = rhs(y);
                let k2 = rhs([y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
                let k3 = rhs([y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
                let k4 = rhs([y[0] + h * k3[0], y[1] + h * k3[1]]);
                for c in 0..2 {
                    y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
                }
                out.push(y);
            }
            out
        };
        let fwd = march(ds);
        let bwd = march(-ds);
        let all: Vec<[f64; 2]> = bwd.iter().rev().chain(fwd.iter().skip(1)).copied().collect();
        if all.iter().any(|y| !y[0].is_finite() || y[0].abs() > 350.0) {
            return Err(Error::DomainViolation("profile blows up inside the grid".into()));
        }
        Ok(Self { s0: -half, ds, q: all.iter().map(|y| y[0]).collect(), dq: all.iter().map(|y| y[1]).collect() })
    }

    /// `(q(s), q'(s))`.
    pub fn eval(&self, s: f64) -> [f64; 2] {
        let t = ((s - self.s0) / self.ds).clamp(0.0, (self.q.len() - 1) as f64);
        let k = (t.floor() as usize).min(self.q.len() - 2);
        let u = t - k as f64;
        let (p0, p1, m0, m1) = (self.q[k], self.q[k + 1], self.dq[k] * self.ds, self.dq[k + 1] * self.ds);
        let (u2, u3) = (u * u, u * u * u);
        let q = (2.0 * u3 - 3.0 * u2 + 1.0) * p0
            + (u3 - 2.0 * u2 + u) * m0
            + (-2.0 * u3 + 3.0 * u2) * p1
            + (u3 - u2) * m1;
        let dq = ((6.0 * u2 - 6.0 * u) * p0 + (3.0 * u2 - 4.0 * u + 1.0) * m0 + (-6.0 * u2 + 6.0 * u) * p1
            + (3.0 * u2 - 2.0 * u) * m1)
            / self.ds;
        [q, dq]
    }
}

/// Parameters of a travelling profile `q(x cos a + y sin a)` (elliptic) or `q(x cosh a + y sinh a)` (hyperbolic).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileParams {
    pub q0: f64,
    pub dq0: f64,
    pub angle: f64,
}

/// Exact travelling solution of one component, usable as boundary data.
pub fn profile_data(kind: GordonKind, sigma: f64, eps: i8, spec: &GridSpec, pp: ProfileParams) -> Result<DataFn> {
    let (c, sn) = if eps == 1 { (pp.angle.cos(), pp.angle.sin()) } else { (pp.angle.cosh(), pp.angle.sinh()) };
    let xs = [spec.x0, spec.x(spec.nx - 1)];
    let ys = [spec.y0, spec.y(spec.ny - 1)];
    let reach = xs.iter().flat_map(|&x| ys.iter().map(move |&y| (c * x + sn * y).abs())).fold(0.0, f64::max);
    let prof = Profile::new(kind, sigma, pp.q0, pp.dq0, reach + 0.1)?;
    Ok(Arc::new(move |x, y| {
        let [q, dq] = prof.eval(c * x + sn * y);
        [q, sn * dq]
    }))
}

// ---------------------------------------------------------------------------
// Families

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Theorem {
    A1,
    A2,
    B1,
    B2,
    C1,
    C2,
}

pub const THEOREMS: [Theorem; 6] = [Theorem::A1, Theorem::A2, Theorem::B1, Theorem::B2, Theorem::C1, Theorem::C2];

impl FromStr for Theorem {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "A1" => Theorem::A1,
            "A2" => Theorem::A2,
            "B1" => Theorem::B1,
            "B2" => Theorem::B2,
            "C1" => Theorem::C1,
            "C2" => Theorem::C2,
            _ => return Err(Error::Invalid(format!("unknown theorem '{s}' (expected A1|A2|B1|B2|C1|C2)"))),
        })
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How `C_j` depends on `(v, w)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Coth,
    Tanh,
    Tan,
}

impl Theorem {
    pub fn name(self) -> &'static str {
        match self {
            Theorem::A1 => "A1",
            Theorem::A2 => "A2",
            Theorem::B1 => "B1",
            Theorem::B2 => "B2",
            Theorem::C1 => "C1",
            Theorem::C2 => "C2",
        }
    }

    /// `(p, eps, b)`.
    pub fn signature(self) -> (u8, i8, i8) {
        match self {
            Theorem::A1 => (0, 1, 1),
            Theorem::A2 => (1, -1, -1),
            Theorem::B1 => (1, -1, 1),
            Theorem::B2 => (1, -1, 1),
            Theorem::C1 => (1, 1, 1),
            Theorem::C2 => (0, -1, 1),
        }
    }

    /// Equation the pair `(v, w)` must solve for the family to be compatible.
    pub fn kind(self) -> GordonKind {
        match self {
            Theorem::A1 | Theorem::B2 => GordonKind::SinhPlus,
            Theorem::A2 => GordonKind::SinhMinus,
            Theorem::B1 => GordonKind::SinhMixed,
            Theorem::C1 | Theorem::C2 => GordonKind::SinMixed,
        }
    }

    /// Equation as labelled in the published statements; differs from [`Theorem::kind`] for A2, B1 and B2.
    pub fn printed_kind(self) -> GordonKind {
        match self {
            Theorem::A1 | Theorem::A2 => GordonKind::SinhPlus,
            Theorem::B1 | Theorem::B2 => GordonKind::SinhMinus,
            Theorem::C1 | Theorem::C2 => GordonKind::SinMixed,
        }
    }

    pub fn branch(self) -> Branch {
        match self {
            Theorem::A1 | Theorem::A2 | Theorem::B2 => Branch::Coth,
            Theorem::B1 => Branch::Tanh,
            Theorem::C1 | Theorem::C2 => Branch::Tan,
        }
    }

    /// Whether `(v, w)` lies in the admissible region.
    pub fn in_region(self, v: f64, w: f64) -> bool {
        let (a, b) = (v - w, v + w);
        match self {
            Theorem::A1 => v * v - w * w > 0.0,
            Theorem::A2 => v * v - w * w < 0.0,
            Theorem::B1 => a.abs() < 1.0 && b.abs() < 1.0,
            Theorem::B2 => v * v - w * w > 0.0 && a.abs() > 1.0 && b.abs() > 1.0,
            Theorem::C1 | Theorem::C2 => a.abs() < std::f64::consts::FRAC_PI_2 && b.abs() < std::f64::consts::FRAC_PI_2,
        }
    }

    /// Default `(v, w)` profiles and grid; the whole grid lies in the admissible region.
    pub fn default_setup(self, nx: usize, ny: usize) -> Result<(GridSpec, ProfileParams, ProfileParams)> {
        let (_, eps, _) = self.signature();
        let half = match self {
            Theorem::A1 => 0.15,
            Theorem::A2 => 0.25,
            Theorem::B2 => 0.1,
            Theorem::B1 | Theorem::C1 | Theorem::C2 => 0.5,
        };
        // hyperbolic grids keep hy = hx/2
        let spec = if eps == 1 {
            GridSpec::rect(nx, ny, -half, half, -half, half)?
        } else {
            GridSpec::rect(nx, ny, -half, half, 0.0, half * (ny - 1) as f64 / (nx - 1) as f64)?
        };
        let pp = |q0, dq0, angle| ProfileParams { q0, dq0, angle };
        let (a, b) = match self {
            Theorem::A1 => (pp(1.0, 0.0, 0.4), pp(0.0, 0.3, 1.2)),
            Theorem::A2 => (pp(0.0, 0.3, 0.3), pp(1.0, 0.2, -0.2)),
            Theorem::B1 => (pp(0.2, 0.2, 0.3), pp(0.1, 0.3, -0.2)),
            Theorem::B2 => (pp(1.3, 0.2, 0.3), pp(0.0, 0.5, -0.2)),
            Theorem::C1 => (pp(0.4, 0.3, 0.4), pp(0.2, 0.2, 1.2)),
            Theorem::C2 => (pp(0.4, 0.3, 0.3), pp(0.2, 0.2, -0.2)),
        };
        Ok((spec, a, b))
    }

    /// Gordon problem with the default travelling-profile data.
    pub fn default_problem(self, nx: usize, ny: usize) -> Result<GordonProblem> {
        let (spec, a, b) = self.default_setup(nx, ny)?;
        let kind = self.kind();
        let (_, eps, _) = self.signature();
        let (sv, sw) = kind.sigma();
        Ok(GordonProblem {
            kind,
            eps,
            spec,
            data_v: profile_data(kind, sv, eps, &spec, a)?,
            data_w: profile_data(kind, sw, eps, &spec, b)?,
            forcing_v: None,
            forcing_w: None,
        })
    }
}

/// Samples of `sol` inside the admissible region of `th`.
pub fn region_mask(th: Theorem, sol: &GordonSolution) -> Vec<bool> {
    (0..sol.spec.len()).map(|k| sol.mask[k] && th.in_region(sol.v[k], sol.w[k])).collect()
}

/// `(v, w)` from the Kähler functions.
pub fn vw_from_c(c1: f64, c2: f64, branch: Branch) -> Result<(f64, f64)> {
    let acoth = |c: f64| 0.5 * ((c + 1.0) / (c - 1.0)).abs().ln();
    match branch {
        Branch::Coth | Branch::Tanh => {
            if (c1 * c1 - 1.0).abs() < 1e-14 || (c2 * c2 - 1.0).abs() < 1e-14 {
                return Err(Error::BranchMismatch("C_j^2 = 1 has no (v, w) on the coth/tanh branches"));
            }
            let (coth_side, tanh_side) = (c1.abs() > 1.0 && c2.abs() > 1.0, c1.abs() < 1.0 && c2.abs() < 1.0);
            if (branch == Branch::Coth && !coth_side) || (branch == Branch::Tanh && !tanh_side) {
                return Err(Error::BranchMismatch("Kähler functions outside the range of the branch"));
            }
            let (a1, a2) = (acoth(c1), acoth(c2));
            Ok(((a1 + a2) / 2.0, (a2 - a1) / 2.0))
        }
        Branch::Tan => {
            let (a1, a2) = (c1.atan(), c2.atan());
            Ok(((a1 + a2) / 2.0, (a1 - a2) / 2.0))
        }
    }
}

/// Pointwise family values from `(v, w)` and the derivatives of `v +- w`.
struct FamilyPoint {
    c: [f64; 2],
    e2u: f64,
    gamma: [ScalarEps; 2],
    /// coefficients `k_j` with `f_j = k_j i gamma_j d_z(phi_j)`
    phi_sign: [f64; 2],
    /// `d(log ratio)/2` wrt `(v, w)`, so `A = a_v v_z + a_w w_z`
    a_vw: [f64; 2],
}

fn family_point(th: Theorem, v: f64, w: f64) -> FamilyPoint {
    let (_, eps, _) = th.signature();
    let (m, p) = (v - w, v + w);
    let rs = std::f64::consts::SQRT_2;
    let re = |x: f64| ScalarEps::real(x, eps);
    let im = |x: f64| ScalarEps::new(0.0, x, eps);
    let coth = |x: f64| 1.0 / x.tanh();
    match th {
        Theorem::A1 | Theorem::A2 | Theorem::B2 => {
            let (sm, sp) = (m.sinh(), p.sinh());
            let (cm, cp) = (coth(m), coth(p));
            let e2u = if th == Theorem::A2 { -4.0 * sm * sp } else { 4.0 * sm * sp };
            // gamma_j^2 ratio: sinh(v + (-1)^{j+1} w) / sinh(v + (-1)^j w)
            let r1 = sp / sm;
            let g = |r: f64| match th {
                Theorem::A1 => re(rs * r.sqrt()),
                Theorem::A2 => im(rs * r.abs().sqrt()),
                _ => re((2.0 * r).sqrt()),
            };
            FamilyPoint {
                c: [cm, cp],
                e2u,
                gamma: [g(r1), g(1.0 / r1)],
                phi_sign: [-1.0, -1.0],
                // d/dv, d/dw of (1/2) log|sinh(v+w)/sinh(v-w)|
                a_vw: [0.5 * (cp - cm), 0.5 * (cp + cm)],
            }
        }
        Theorem::B1 => {
            let (chm, chp) = (m.cosh(), p.cosh());
            let r1 = chp / chm;
            FamilyPoint {
                c: [m.tanh(), p.tanh()],
                e2u: 4.0 * chm * chp,
                gamma: [im((2.0 * r1).sqrt()), im((2.0 / r1).sqrt())],
                phi_sign: [-1.0, -1.0],
                a_vw: [0.5 * (p.tanh() - m.tanh()), 0.5 * (p.tanh() + m.tanh())],
            }
        }
        Theorem::C1 | Theorem::C2 => {
            let (com, cop) = (m.cos(), p.cos());
            // gamma_j = sqrt2 sqrt(cos(v + (-1)^j w) / cos(v + (-1)^{j+1} w))
            let r1 = com / cop;
            FamilyPoint {
                c: [p.tan(), m.tan()],
                e2u: 4.0 * com * cop,
                gamma: [re(rs * r1.sqrt()), re(rs * (1.0 / r1).sqrt())],
                phi_sign: [1.0, 1.0],
                // (1/2) log(cos(v-w)/cos(v+w))
                a_vw: [0.5 * (p.tan() - m.tan()), 0.5 * (p.tan() + m.tan())],
            }
        }
    }
}

/// Fundamental data of the explicit family over a Gordon solution; `t` is the associated-family parameter.
pub fn build_family(th: Theorem, sol: &GordonSolution, t: f64) -> Result<FundamentalData> {
    if sol.kind != th.kind() {
        return Err(Error::KindMismatch { family: th.name(), expected: th.kind().name(), found: sol.kind.name() });
    }
    let (p, eps, b) = th.signature();
    if sol.eps != eps {
        return Err(Error::EpsMismatch { left: sol.eps, right: eps });
    }
    let s = sol.spec;
    let region = region_mask(th, sol);
    let inside = region.iter().filter(|&&m| m).count();
    if inside == 0 {
        return Err(Error::EmptyMask);
    }
    let total = sol.mask.iter().filter(|&&m| m).count();
    if inside < total {
        return Err(Error::DomainViolation(format!(
            "{} of {total} samples violate the admissible region of {th}",
            total - inside
        )));
    }
    if let Some(k) = (0..s.len()).find(|&k| sol.mask[k] && (sol.v[k].abs() + sol.w[k].abs() > 350.0)) {
        return Err(Error::DomainViolation(format!("|v +- w| too large at sample {k}")));
    }
    let mut d = FundamentalData::new(p, eps, b, s)?;
    let rot = exp_i(t / 2.0, eps);
    let i_e = ScalarEps::i(eps);
    for i in 0..s.nx {
        for j in 0..s.ny {
            let k = s.idx(i, j);
            if !sol.mask[k] {
                d.mask[k] = false;
                continue;
            }
            let fp = family_point(th, sol.v[k], sol.w[k]);
            let vz = dz_real(d4_x(&s, &sol.v, i, j), d4_y(&s, &sol.v, i, j), eps);
            let wz = dz_real(d4_x(&s, &sol.w, i, j), d4_y(&s, &sol.w, i, j), eps);
            d.u[k] = 0.5 * fp.e2u.ln();
            d.c1[k] = fp.c[0];
            d.c2[k] = fp.c[1];
            // phi_j = v + (-1)^j w for A/B, v + (-1)^{j+1} w for C
            let phi = |jj: usize| {
                let sj = if jj == 0 { -1.0 } else { 1.0 };
                let sj = if th.branch() == Branch::Tan { -sj } else { sj };
                vz + wz.scale(sj)
            };
            for jj in 0..2 {
                let g = rot * fp.gamma[jj];
                let f = (i_e * g * phi(jj)).scale(fp.phi_sign[jj]);
                if jj == 0 {
                    d.gamma1[k] = g;
                    d.f1[k] = f;
                } else {
                    d.gamma2[k] = g;
                    d.f2[k] = f;
                }
            }
            d.a[k] = vz.scale(fp.a_vw[0]) + wz.scale(fp.a_vw[1]);
        }
    }
    Ok(d)
}

// ---------------------------------------------------------------------------
// JSON

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GordonFile {
    schema_version: u32,
    kind: GordonKind,
    eps: i8,
    #[serde(flatten)]
    spec: GridSpec,
    v: Vec<f64>,
    w: Vec<f64>,
    /// One string of '0'/'1' per x index.
    mask: Vec<String>,
    residual: f64,
}

impl GordonSolution {
    pub fn to_json(&self) -> String {
        let s = self.spec;
        let mask = (0..s.nx)
            .map(|i| (0..s.ny).map(|j| if self.mask[s.idx(i, j)] { '1' } else { '0' }).collect())
            .collect();
        let f = GordonFile {
            schema_version: GORDON_SCHEMA,
            kind: self.kind,
            eps: self.eps,
            spec: s,
            v: self.v.clone(),
            w: self.w.clone(),
            mask,
            residual: self.residual,
        };
        serde_json::to_string(&f).expect("gordon solution serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: GordonFile = serde_json::from_str(text).map_err(|e| Error::Invalid(format!("gordon json: {e}")))?;
        if f.schema_version != GORDON_SCHEMA {
            return Err(Error::Invalid(format!("unsupported gordon schema {}", f.schema_version)));
        }
        let s = GridSpec::new(f.spec.nx, f.spec.ny, f.spec.x0, f.spec.y0, f.spec.hx, f.spec.hy)?;
        if f.v.len() != s.len() || f.w.len() != s.len() || f.mask.len() != s.nx {
            return Err(Error::Invalid("gordon field sizes do not match the grid".into()));
        }
        let mut mask = Vec::with_capacity(s.len());
        for row in &f.mask {
            if row.len() != s.ny {
                return Err(Error::Invalid("gordon mask row has the wrong length".into()));
            }
            for ch in row.chars() {
                mask.push(match ch {
                    '1' => true,
                    '0' => false,
                    _ => return Err(Error::Invalid(format!("bad mask character '{ch}'"))),
                });
            }
        }
        crate::error::check_sign(f.eps as i64)?;
        Ok(Self { kind: f.kind, eps: f.eps, spec: s, v: f.v, w: f.w, mask, residual: f.residual })
    }
}
