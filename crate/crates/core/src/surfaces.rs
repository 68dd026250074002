//! Explicit surfaces: products of geodesics, slices and (para-)holomorphic graphs,
//! plus detection of the locus where the induced metric degenerates.

use std::fmt;
use std::sync::Arc;

use crate::algebra::{dot_p, ScalarEps, V3};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::immersion::{conformal_from, jet, ImmersionGrid};
use crate::product::{g6, join, V6};

/// Inverse stereographic projection onto the unit sphere.
pub fn stereo(x: f64, y: f64) -> V3 {
    let d = x * x + y * y + 1.0;
    [2.0 * x / d, 2.0 * y / d, (x * x + y * y - 1.0) / d]
}

/// Columns `(d/dx, d/dy)` of [`stereo`].
pub fn stereo_jacobian(x: f64, y: f64) -> [V3; 2] {
    let d = x * x + y * y + 1.0;
    let d2 = d * d;
    [
        [2.0 * (d - 2.0 * x * x) / d2, -4.0 * x * y / d2, 4.0 * x / d2],
        [-4.0 * x * y / d2, 2.0 * (d - 2.0 * y * y) / d2, 4.0 * y / d2],
    ]
}

/// Inverse stereographic projection onto de Sitter space, `sigma(t, s)`.
pub fn para_stereo(t: f64, s: f64) -> V3 {
    let d = s * s - t * t + 1.0;
    [2.0 * t / d, 2.0 * s / d, (s * s - t * t - 1.0) / d]
}

/// Columns `(d/dt, d/ds)` of [`para_stereo`].
pub fn para_stereo_jacobian(t: f64, s: f64) -> [V3; 2] {
    let d = s * s - t * t + 1.0;
    let d2 = d * d;
    [
        [2.0 * (d + 2.0 * t * t) / d2, 4.0 * s * t / d2, -4.0 * t / d2],
        [-4.0 * s * t / d2, 2.0 * (d - 2.0 * s * s) / d2, 4.0 * s / d2],
    ]
}

/// Value and real partials `(u, v, u_x, u_y, v_x, v_y)` of `w = u + i v`.
pub type HoloParts = [f64; 6];

/// A (para-)holomorphic function given by its value and first partials.
#[derive(Clone)]
pub struct HoloFn {
    pub eps: i8,
    pub name: String,
    eval: Arc<dyn Fn(f64, f64) -> HoloParts + Send + Sync>,
}

impl fmt::Debug for HoloFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HoloFn({}, eps={})", self.name, self.eps)
    }
}

impl HoloFn {
    /// Wraps `z -> (w(z), w'(z))`; Cauchy-Riemann holds by construction.
    pub fn from_complex(
        eps: i8,
        name: &str,
        f: impl Fn(ScalarEps) -> (ScalarEps, ScalarEps) + Send + Sync + 'static,
    ) -> Self {
        let eval = move |x: f64, y: f64| {
            let (w, d) = f(ScalarEps::new(x, y, eps));
            // w_x = w', w_y = i w'
            let dy = ScalarEps::i(eps) * d;
            [w.re, w.im, d.re, dy.re, d.im, dy.im]
        };
        Self { eps, name: name.into(), eval: Arc::new(eval) }
    }

    /// Wraps explicit real parts, checking the Cauchy-Riemann relations at `samples`.
    pub fn from_parts(
        eps: i8,
        name: &str,
        f: impl Fn(f64, f64) -> HoloParts + Send + Sync + 'static,
        samples: &[(f64, f64)],
    ) -> Result<Self> {
        let h = Self { eps, name: name.into(), eval: Arc::new(f) };
        for &(x, y) in samples {
            let r = h.cauchy_riemann_residual(x, y);
            if !(r <= 1e-10) {
                return Err(Error::Invalid(format!("{name} violates Cauchy-Riemann at ({x}, {y}): {r:e}")));
            }
        }
        Ok(h)
    }

    /// Unchecked wrapper, for functions that are deliberately not (para-)holomorphic.
    pub fn raw(eps: i8, name: &str, f: impl Fn(f64, f64) -> HoloParts + Send + Sync + 'static) -> Self {
        Self { eps, name: name.into(), eval: Arc::new(f) }
    }

    pub fn eval(&self, x: f64, y: f64) -> HoloParts {
        (self.eval)(x, y)
    }

    /// `max(|u_x - v_y|, |u_y + eps v_x|)`.
    pub fn cauchy_riemann_residual(&self, x: f64, y: f64) -> f64 {
        let [_, _, ux, uy, vx, vy] = self.eval(x, y);
        let scale = 1.0 + ux.abs().max(uy.abs()).max(vx.abs()).max(vy.abs());
        (ux - vy).abs().max((uy + self.eps as f64 * vx).abs()) / scale
    }

    pub fn square(eps: i8) -> Self {
        Self::from_complex(eps, "z^2", move |z| (z * z, z.scale(2.0)))
    }

    /// `w = a z + c`.
    pub fn affine(eps: i8, a: ScalarEps, c: ScalarEps) -> Self {
        Self::from_complex(eps, "affine", move |z| (a * z + c, a))
    }

    /// Para-holomorphic `1/z = (t - i s)/(t^2 - s^2)`.
    pub fn para_inverse() -> Self {
        Self::from_complex(-1, "1/z", |z| {
            let w = z.inv().unwrap_or(ScalarEps::new(f64::NAN, f64::NAN, -1));
            (w, -(w * w))
        })
    }

    /// The pair `u = t/(t^2-s^2)`, `v = s/(t^2-s^2)` as printed, which is `1/zbar`.
    pub fn para_inverse_printed() -> Self {
        Self::raw(-1, "1/zbar", |t, s| {
            let d = t * t - s * s;
            let d2 = d * d;
            [t / d, s / d, -(t * t + s * s) / d2, 2.0 * t * s / d2, -2.0 * t * s / d2, (t * t + s * s) / d2]
        })
    }
}

/// Cut-off for admissible geodesic speeds.
const TAU_NULL: f64 = 1e-12;

/// A geodesic through `a` with initial velocity `b`; `<b,b>_p` fixes its causal type.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Geodesic {
    pub a: V3,
    pub b: V3,
}

impl Geodesic {
    fn eval(&self, p: u8, t: f64) -> Result<V3> {
        let n = dot_p(p, &self.b, &self.b);
        let (c, s) = if n > TAU_NULL {
            let k = n.sqrt();
            ((k * t).cos(), (k * t).sin() / k)
        } else if n < -TAU_NULL {
            let k = (-n).sqrt();
            ((k * t).cosh(), (k * t).sinh() / k)
        } else {
            return Err(Error::Invalid("null geodesic: a product of non-null curves is required".into()));
        };
        Ok(std::array::from_fn(|i| c * self.a[i] + s * self.b[i]))
    }
}

/// `F(x, y) = (gamma1(x), gamma2(y))`; the speeds must have equal modulus so the chart is isothermal.
pub fn make_geodesic_product(p: u8, g1: Geodesic, g2: Geodesic, spec: GridSpec) -> Result<ImmersionGrid> {
    let check = |g: &Geodesic| -> Result<f64> {
        let d = dot_p(p, &g.a, &g.a) - 1.0;
        if d.abs() > crate::algebra::TAU_PT {
            return Err(Error::OffQuadric(d));
        }
        let t = dot_p(p, &g.a, &g.b);
        if t.abs() > crate::algebra::TAU_TAN {
            return Err(Error::Tangency(t));
        }
        Ok(dot_p(p, &g.b, &g.b))
    };
    let (n1, n2) = (check(&g1)?, check(&g2)?);
    if (n1.abs() - n2.abs()).abs() > 1e-12 * n1.abs().max(1.0) {
        return Err(Error::Invalid("geodesic speeds differ; the chart would not be isothermal".into()));
    }
    let mut values = Vec::with_capacity(spec.len());
    for i in 0..spec.nx {
        let a = g1.eval(p, spec.x(i))?;
        for j in 0..spec.ny {
            values.push(join(&a, &g2.eval(p, spec.y(j))?));
        }
    }
    // G(F_x,F_x) = n1, G(F_y,F_y) = -n2
    if n1 < 0.0 {
        return Err(Error::TimelikeCoordinate { i: 0, j: 0 });
    }
    let eps = if -n2 > 0.0 { 1 } else { -1 };
    ImmersionGrid::new(p, eps, spec, values)
}

/// The standard unit-speed great circles `(e3 -> e1)` and `(e3 -> e2)`, or the spacelike
/// de Sitter geodesics `(e2 -> e3)` and `(e3 -> e2)` for p=1.
pub fn standard_geodesics(p: u8) -> (Geodesic, Geodesic) {
    if p == 0 {
        (Geodesic { a: [0., 0., 1.], b: [1., 0., 0.] }, Geodesic { a: [0., 0., 1.], b: [0., 1., 0.] })
    } else {
        (Geodesic { a: [0., 1., 0.], b: [0., 0., 1.] }, Geodesic { a: [0., 0., 1.], b: [0., 1., 0.] })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SliceSide {
    First,
    Second,
}

/// `S^2_p x {q}` or `{q} x S^2_p` through the stereographic chart. For p=1 the chart
/// `(t, s) = (y, x)` is used on the first factor and `(t, s) = (x, y)` on the second, so that x is spacelike.
pub fn make_slice(which: SliceSide, q: V3, p: u8, spec: GridSpec) -> Result<ImmersionGrid> {
    let d = dot_p(p, &q, &q) - 1.0;
    if d.abs() > crate::algebra::TAU_PT {
        return Err(Error::OffQuadric(d));
    }
    // the second factor enters with the opposite sign, which swaps the timelike direction
    let chart = |x: f64, y: f64| match (p, which) {
        (0, _) => stereo(x, y),
        (_, SliceSide::First) => para_stereo(y, x),
        (_, SliceSide::Second) => para_stereo(x, y),
    };
    let values = spec.sample(|x, y| match which {
        SliceSide::First => join(&chart(x, y), &q),
        SliceSide::Second => join(&q, &chart(x, y)),
    });
    let eps = if p == 0 { 1 } else { -1 };
    ImmersionGrid::new(p, eps, spec, values)
}

/// Chart of a (para-)holomorphic graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphChart {
    /// `(x, y) = (t, s)`.
    Direct,
    /// `(x, y) = (s, t)`, used when t is the timelike direction.
    Swapped,
}

fn graph_point(w: &HoloFn, chart: GraphChart, x: f64, y: f64) -> V6 {
    let (t, s) = match chart {
        GraphChart::Direct => (x, y),
        GraphChart::Swapped => (y, x),
    };
    let [u, v, ..] = w.eval(t, s);
    if w.eps == 1 {
        join(&stereo(t, s), &stereo(u, v))
    } else {
        join(&para_stereo(t, s), &para_stereo(u, v))
    }
}

/// Analytic first fundamental form `(G(F_t,F_t), G(F_t,F_s), G(F_s,F_s))` of the graph in the direct chart.
pub fn holo_graph_metric(w: &HoloFn, t: f64, s: f64) -> (f64, f64, f64) {
    let p = if w.eps == 1 { 0 } else { 1 };
    let [u, v, ux, uy, vx, vy] = w.eval(t, s);
    let (d1, d2) = if w.eps == 1 {
        (stereo_jacobian(t, s), stereo_jacobian(u, v))
    } else {
        (para_stereo_jacobian(t, s), para_stereo_jacobian(u, v))
    };
    let col = |a: f64, b: f64| -> V3 { std::array::from_fn(|k| a * d2[0][k] + b * d2[1][k]) };
    let ft = join(&d1[0], &col(ux, vx));
    let fs = join(&d1[1], &col(uy, vy));
    (g6(p, &ft, &ft), g6(p, &ft, &fs), g6(p, &fs, &fs))
}

/// `F = (s(x,y), s(u,v))`, or `(sigma, sigma(u,v))` for eps=-1. The swapped chart is chosen
/// when the metric makes the first coordinate timelike at the grid centre.
pub fn make_holo_graph(w: &HoloFn, spec: GridSpec) -> Result<ImmersionGrid> {
    make_graph(w, spec, None)
}

/// Like [`make_holo_graph`] with an explicit chart and no Cauchy-Riemann requirement.
pub fn make_graph(w: &HoloFn, spec: GridSpec, chart: Option<GraphChart>) -> Result<ImmersionGrid> {
    let p = if w.eps == 1 { 0 } else { 1 };
    let (xc, yc) = (spec.x(spec.nx / 2), spec.y(spec.ny / 2));
    let chart = chart.unwrap_or_else(|| {
        let (gtt, _, gss) = holo_graph_metric(w, xc, yc);
        if w.eps == -1 && gtt < 0.0 && gss > 0.0 {
            GraphChart::Swapped
        } else {
            GraphChart::Direct
        }
    });
    let values = spec.sample(|x, y| graph_point(w, chart, x, y));
    if values.iter().any(|v| v.iter().any(|c| !c.is_finite())) {
        return Err(Error::DomainViolation(format!("{} graph hits a chart singularity on the grid", w.name)));
    }
    let (gxx, _, gyy) = match chart {
        GraphChart::Direct => holo_graph_metric(w, xc, yc),
        GraphChart::Swapped => {
            let (a, b, c) = holo_graph_metric(w, yc, xc);
            (c, b, a)
        }
    };
    let eps = if gxx * gyy >= 0.0 { 1 } else { -1 };
    ImmersionGrid::new(p, eps, spec, values)
}

/// Degeneracy mask and zero contour of `G(F_x, F_x)`.
#[derive(Clone, Debug, Default)]
pub struct DegeneracyLocus {
    pub mask: Vec<bool>,
    /// Samples at either end of a grid edge across which `G(F_x, F_x)` changes sign.
    pub straddle: Vec<bool>,
    pub segments: Vec<[(f64, f64); 2]>,
}

impl DegeneracyLocus {
    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

/// Marks interior samples with `|G(F_x,F_x)| <= TAU_DEG` and traces the zero set of
/// `G(F_x,F_x)` by linear interpolation on cell edges.
pub fn degeneracy_locus(f: &ImmersionGrid) -> DegeneracyLocus {
    let s = f.spec;
    let mut gxx = vec![f64::NAN; s.len()];
    let mut mask = vec![false; s.len()];
    for i in 1..s.nx - 1 {
        for j in 1..s.ny - 1 {
            let jt = jet(f, i, j).expect("interior");
            let g = g6(f.p, &jt.fx, &jt.fx);
            gxx[s.idx(i, j)] = g;
            if matches!(conformal_from(f.p, &jt.fx, &jt.fy, i, j), Err(Error::DegenerateMetric { .. })) {
                mask[s.idx(i, j)] = true;
            }
        }
    }
    let mut straddle = vec![false; s.len()];
    for i in 1..s.nx - 1 {
        for j in 1..s.ny - 1 {
            let k = s.idx(i, j);
            for m in [s.idx(i + 1, j), s.idx(i, j + 1)] {
                if gxx[m].is_finite() && (gxx[k] < 0.0) != (gxx[m] < 0.0) {
                    straddle[k] = true;
                    straddle[m] = true;
                }
            }
        }
    }
    DegeneracyLocus { mask, straddle, segments: zero_contour(&s, &gxx) }
}

/// Marching squares for the zero level of a sampled field; NaN samples are skipped.
pub fn zero_contour(s: &GridSpec, q: &[f64]) -> Vec<[(f64, f64); 2]> {
    let mut segs = Vec::new();
    for i in 0..s.nx - 1 {
        for j in 0..s.ny - 1 {
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let vals: Vec<f64> = corners.iter().map(|&(a, b)| q[s.idx(a, b)]).collect();
            if vals.iter().any(|v| !v.is_finite()) {
                continue;
            }
            let mut pts = Vec::new();
            for k in 0..4 {
                let (a, b) = (vals[k], vals[(k + 1) % 4]);
                if (a < 0.0) != (b < 0.0) {
                    let t = a / (a - b);
                    let (p0, p1) = (corners[k], corners[(k + 1) % 4]);
                    let x = s.x(p0.0) + t * (s.x(p1.0) - s.x(p0.0));
                    let y = s.y(p0.1) + t * (s.y(p1.1) - s.y(p0.1));
                    pts.push((x, y));
                }
            }
            match pts.len() {
                2 => segs.push([pts[0], pts[1]]),
                4 => {
                    segs.push([pts[0], pts[1]]);
                    segs.push([pts[2], pts[3]]);
                }
                _ => {}
            }
        }
    }
    segs
}

/// Symmetric Hausdorff distance between contour segments and the part of the circle
/// `|(x,y) - c| = r` lying inside the grid rectangle. Infinite when exactly one side is empty.
pub fn hausdorff_to_circle(segs: &[[(f64, f64); 2]], s: &GridSpec, c: (f64, f64), r: f64) -> f64 {
    let pts: Vec<(f64, f64)> = segs.iter().flat_map(|sg| [sg[0], sg[1]]).collect();
    let (x1, y1) = (s.x(s.nx - 1), s.y(s.ny - 1));
    let circle: Vec<(f64, f64)> = (0..4096)
        .map(|k| {
            let a = k as f64 * std::f64::consts::TAU / 4096.0;
            (c.0 + r * a.cos(), c.1 + r * a.sin())
        })
        .filter(|&(x, y)| x >= s.x0 && x <= x1 && y >= s.y0 && y <= y1)
        .collect();
    if pts.is_empty() && circle.is_empty() {
        return 0.0;
    }
    if pts.is_empty() || circle.is_empty() {
        return f64::INFINITY;
    }
    let to_circle = pts
        .iter()
        .map(|&(x, y)| (((x - c.0).powi(2) + (y - c.1).powi(2)).sqrt() - r).abs())
        .fold(0.0, f64::max);
    let seg_dist = |(px, py): (f64, f64), sg: &[(f64, f64); 2]| {
        let (ax, ay) = sg[0];
        let (dx, dy) = (sg[1].0 - ax, sg[1].1 - ay);
        let l2 = dx * dx + dy * dy;
        let t = if l2 > 0.0 { (((px - ax) * dx + (py - ay) * dy) / l2).clamp(0.0, 1.0) } else { 0.0 };
        ((px - ax - t * dx).powi(2) + (py - ay - t * dy).powi(2)).sqrt()
    };
    let to_contour = circle
        .iter()
        .map(|&q| segs.iter().map(|sg| seg_dist(q, sg)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    to_circle.max(to_contour)
}

/// Named examples addressable from the command line.
pub const EXAMPLE_IDS: &[&str] =
    &["holo:z2", "geodesic-product", "slice:first", "paraholo:z2", "slice:second", "geodesic-product:p1"];

/// Default grid of a registry example.
pub fn example_grid(id: &str, nx: usize, ny: usize) -> Result<GridSpec> {
    match id {
        "holo:z2" => GridSpec::rect(nx, ny, -2.2, 0.2, -1.2, 1.2),
        "geodesic-product" | "geodesic-product:p1" => GridSpec::rect(nx, ny, -1.0, 1.0, -1.0, 1.0),
        "slice:first" => GridSpec::rect(nx, ny, -1.0, 1.0, -1.0, 1.0),
        "slice:second" => GridSpec::rect(nx, ny, -0.4, 0.4, -0.4, 0.4),
        "paraholo:z2" => GridSpec::rect(nx, ny, -0.1, 0.1, 0.3, 0.5),
        _ => Err(Error::Invalid(format!("unknown example '{id}' (known: {})", EXAMPLE_IDS.join(", ")))),
    }
}

/// Builds a registry example on the given grid.
pub fn build_example(id: &str, spec: GridSpec) -> Result<ImmersionGrid> {
    match id {
        "holo:z2" => make_holo_graph(&HoloFn::square(1), spec),
        "paraholo:z2" => make_holo_graph(&HoloFn::square(-1), spec),
        "geodesic-product" => {
            let (a, b) = standard_geodesics(0);
            make_geodesic_product(0, a, b, spec)
        }
        "geodesic-product:p1" => {
            let (a, b) = standard_geodesics(1);
            make_geodesic_product(1, a, b, spec)
        }
        "slice:first" => make_slice(SliceSide::First, [0.0, 0.0, 1.0], 0, spec),
        "slice:second" => make_slice(SliceSide::Second, [0.0, 0.0, 1.0], 1, spec),
        _ => Err(Error::Invalid(format!("unknown example '{id}' (known: {})", EXAMPLE_IDS.join(", ")))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charts_land_on_quadrics() {
        for (x, y) in [(0.3, -0.2), (1.5, 2.0), (-0.7, 0.1)] {
            let a = stereo(x, y);
            assert!((dot_p(0, &a, &a) - 1.0).abs() < 1e-14);
            let b = para_stereo(x * 0.3, y);
            assert!((dot_p(1, &b, &b) - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn chart_jacobians_match_differences() {
        let h = 1e-6;
        for (x, y) in [(0.3, -0.2), (0.1, 0.6)] {
            for (f, d) in [
                (stereo as fn(f64, f64) -> V3, stereo_jacobian as fn(f64, f64) -> [V3; 2]),
                (para_stereo, para_stereo_jacobian),
            ] {
                let jx: V3 = std::array::from_fn(|k| (f(x + h, y)[k] - f(x - h, y)[k]) / (2.0 * h));
                let jy: V3 = std::array::from_fn(|k| (f(x, y + h)[k] - f(x, y - h)[k]) / (2.0 * h));
                for k in 0..3 {
                    assert!((jx[k] - d(x, y)[0][k]).abs() < 1e-8);
                    assert!((jy[k] - d(x, y)[1][k]).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn holo_fns_satisfy_cauchy_riemann() {
        for w in [HoloFn::square(1), HoloFn::square(-1), HoloFn::para_inverse()] {
            for (x, y) in [(0.3, -0.2), (1.2, 0.4)] {
                assert!(w.cauchy_riemann_residual(x, y) < 1e-12, "{w:?}");
            }
        }
        assert!(HoloFn::para_inverse_printed().cauchy_riemann_residual(1.2, 0.4) > 0.1);
        let bad = HoloFn::from_parts(1, "zbar", |x, y| [x, -y, 1.0, 0.0, 0.0, -1.0], &[(0.1, 0.2)]);
        assert!(bad.is_err());
    }

    #[test]
    fn null_geodesic_rejected() {
        let g = Geodesic { a: [0., 1., 0.], b: [1., 0., 1.] };
        let spec = GridSpec::rect(5, 5, 0.0, 1.0, 0.0, 1.0).unwrap();
        assert!(make_geodesic_product(1, g, g, spec).is_err());
    }

    #[test]
    fn contour_of_a_disc() {
        let s = GridSpec::rect(41, 41, -1.0, 1.0, -1.0, 1.0).unwrap();
        let q = s.sample(|x, y| x * x + y * y - 0.25);
        let segs = zero_contour(&s, &q);
        assert!(hausdorff_to_circle(&segs, &s, (0.0, 0.0), 0.5) < s.hx);
    }

    fn displayed_gxx(x: f64, y: f64) -> f64 {
        let num = 4.0
            * (3.0 * x.powi(4) + 8.0 * x.powi(3) + 6.0 * x * x * (y * y + 1.0) + x * (8.0 * y * y + 4.0)
                + y * y * (3.0 * y * y + 2.0));
        num / ((x * x + y * y + 1.0).powi(2) * (2.0 * x * x + 2.0 * x + 2.0 * y * y + 1.0).powi(2))
    }

    #[test]
    fn square_graph_metric_is_radial() {
        // G(F_x,F_x) = 4/(1+r^2)^2 - 16 r^2/(1+r^4)^2
        let w = HoloFn::square(1);
        for (x, y) in [(0.3, -0.2), (-1.1, 0.7), (0.05, 1.9)] {
            let r2: f64 = x * x + y * y;
            let want = 4.0 / (1.0 + r2).powi(2) - 16.0 * r2 / (1.0 + r2 * r2).powi(2);
            let (gxx, gxy, gyy) = holo_graph_metric(&w, x, y);
            assert!((gxx - want).abs() < 1e-13 && gxy.abs() < 1e-13 && (gyy - gxx).abs() < 1e-13);
        }
    }

    #[test]
    fn displayed_metric_is_that_of_an_affine_map() {
        let w = HoloFn::affine(1, ScalarEps::new(2.0, 0.0, 1), ScalarEps::new(1.0, 0.0, 1));
        for (x, y) in [(0.3, -0.2), (-1.1, 0.7), (0.05, 1.9)] {
            let (gxx, _, _) = holo_graph_metric(&w, x, y);
            assert!((gxx - displayed_gxx(x, y)).abs() < 1e-13 * gxx.abs().max(1.0));
        }
        let (sq, _, _) = holo_graph_metric(&HoloFn::square(1), 0.3, -0.2);
        assert!((sq - displayed_gxx(0.3, -0.2)).abs() > 0.1);
    }

    #[test]
    fn square_graph_degenerates_on_two_circles() {
        let s3 = 3f64.sqrt();
        let radii = [(1.0 + s3 - (3.0 + 2.0 * s3).sqrt()).sqrt(), (1.0 + s3 + (3.0 + 2.0 * s3).sqrt()).sqrt()];
        let spec = GridSpec::rect(65, 65, -2.2, 0.2, -1.2, 1.2).unwrap();
        let f = make_holo_graph(&HoloFn::square(1), spec).unwrap();
        let loc = degeneracy_locus(&f);
        assert!(!loc.segments.is_empty());
        for &(x, y) in loc.segments.iter().flatten() {
            let off = radii.iter().map(|r| (x.hypot(y) - r).abs()).fold(f64::INFINITY, f64::min);
            assert!(off < spec.h() * spec.h(), "({x}, {y}) off by {off}");
        }
        let k = (0..spec.len()).find(|&k| loc.straddle[k]).unwrap();
        let r = spec.x(k / spec.ny).hypot(spec.y(k % spec.ny));
        assert!(radii.iter().any(|q| (r - q).abs() < 2.0 * spec.h()));
    }
}
