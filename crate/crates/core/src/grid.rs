//! Rectangular parameter grids and finite differences on sampled fields.
//!
//! Fields are stored row-major in `i` (the x index): `k = i * ny + j`.

use serde::{Deserialize, Serialize};

use crate::algebra::ScalarEps;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub hx: f64,
    pub hy: f64,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, x0: f64, y0: f64, hx: f64, hy: f64) -> Result<Self> {
        if nx < 5 || ny < 5 {
            return Err(Error::Invalid(format!("grid {nx}x{ny} is smaller than 5x5")));
        }
        if !(hx > 0.0 && hy > 0.0 && hx.is_finite() && hy.is_finite()) {
            return Err(Error::Invalid(format!("spacings must be positive, got {hx}, {hy}")));
        }
        Ok(Self { nx, ny, x0, y0, hx, hy })
    }

    /// Grid covering `[x0, x1] x [y0, y1]` with the given sample counts.
    pub fn rect(nx: usize, ny: usize, x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        Self::new(nx, ny, x0, y0, (x1 - x0) / (nx - 1) as f64, (y1 - y0) / (ny - 1) as f64)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.ny + j
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.hx
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.hy
    }

    pub fn h(&self) -> f64 {
        self.hx.max(self.hy)
    }

    /// Whether `(i, j)` is at least `r` samples away from every edge.
    #[inline]
    pub fn inner(&self, i: usize, j: usize, r: usize) -> bool {
        i >= r && j >= r && i + r < self.nx && j + r < self.ny
    }

    pub fn check_inner(&self, i: usize, j: usize, r: usize) -> Result<()> {
        if self.inner(i, j, r) {
            Ok(())
        } else {
            Err(Error::Boundary { i, j, nx: self.nx, ny: self.ny })
        }
    }

    pub fn sample<T>(&self, f: impl Fn(f64, f64) -> T) -> Vec<T> {
        let mut out = Vec::with_capacity(self.len());
        for i in 0..self.nx {
            for j in 0..self.ny {
                out.push(f(self.x(i), self.y(j)));
            }
        }
        out
    }

    /// Same domain with every spacing halved.
    pub fn refined(&self) -> Self {
        Self {
            nx: 2 * self.nx - 1,
            ny: 2 * self.ny - 1,
            hx: self.hx / 2.0,
            hy: self.hy / 2.0,
            ..*self
        }
    }
}

/// Values that support linear combinations, for generic differencing.
pub trait Lin: Copy {
    fn lin(self, a: f64, o: Self, b: f64) -> Self;
}

impl Lin for f64 {
    #[inline]
    fn lin(self, a: f64, o: f64, b: f64) -> f64 {
        a * self + b * o
    }
}

impl Lin for ScalarEps {
    #[inline]
    fn lin(self, a: f64, o: ScalarEps, b: f64) -> ScalarEps {
        ScalarEps { re: a * self.re + b * o.re, im: a * self.im + b * o.im, eps: self.eps }
    }
}

impl<const N: usize> Lin for [f64; N] {
    #[inline]
    fn lin(self, a: f64, o: Self, b: f64) -> Self {
        std::array::from_fn(|k| a * self[k] + b * o[k])
    }
}

/// Second-order first derivative along x, one-sided at the edges.
pub fn d_x<T: Lin>(g: &GridSpec, f: &[T], i: usize, j: usize) -> T {
    let at = |ii: usize| f[g.idx(ii, j)];
    d1(at, i, g.nx, g.hx)
}

/// Second-order first derivative along y, one-sided at the edges.
pub fn d_y<T: Lin>(g: &GridSpec, f: &[T], i: usize, j: usize) -> T {
    let at = |jj: usize| f[g.idx(i, jj)];
    d1(at, j, g.ny, g.hy)
}

fn d1<T: Lin>(at: impl Fn(usize) -> T, k: usize, n: usize, h: f64) -> T {
    if k == 0 {
        // (-3 f0 + 4 f1 - f2) / 2h
        at(0).lin(-1.5 / h, at(1), 2.0 / h).lin(1.0, at(2), -0.5 / h)
    } else if k == n - 1 {
        at(n - 1).lin(1.5 / h, at(n - 2), -2.0 / h).lin(1.0, at(n - 3), 0.5 / h)
    } else {
        at(k + 1).lin(0.5 / h, at(k - 1), -0.5 / h)
    }
}

/// Fourth-order first derivative along x, one-sided near the edges.
pub fn d4_x<T: Lin>(g: &GridSpec, f: &[T], i: usize, j: usize) -> T {
    let at = |ii: usize| f[g.idx(ii, j)];
    d4(at, i, g.nx, g.hx)
}

/// Fourth-order first derivative along y, one-sided near the edges.
pub fn d4_y<T: Lin>(g: &GridSpec, f: &[T], i: usize, j: usize) -> T {
    let at = |jj: usize| f[g.idx(i, jj)];
    d4(at, j, g.ny, g.hy)
}

fn d4<T: Lin>(at: impl Fn(usize) -> T, k: usize, n: usize, h: f64) -> T {
    const EDGE: [[f64; 5]; 2] = [[-25.0, 48.0, -36.0, 16.0, -3.0], [-3.0, -10.0, 18.0, -6.0, 1.0]];
    let c = 1.0 / (12.0 * h);
    let comb = |idx: [usize; 5], w: [f64; 5], s: f64| {
        (1..5).fold(at(idx[0]).lin(s * c * w[0], at(idx[0]), 0.0), |acc, m| acc.lin(1.0, at(idx[m]), s * c * w[m]))
    };
    if k < 2 {
        comb([0, 1, 2, 3, 4], EDGE[k], 1.0)
    } else if k + 2 >= n {
        let r = n - 1 - k;
        comb([n - 1, n - 2, n - 3, n - 4, n - 5], EDGE[r], -1.0)
    } else {
        comb([k - 2, k - 1, k + 1, k + 2, k], [1.0, -8.0, 8.0, -1.0, 0.0], 1.0)
    }
}

/// Central second derivative along x; interior only.
pub fn d_xx<T: Lin>(g: &GridSpec, f: &[T], i: usize, j: usize) -> T {
    let h2 = g.hx * g.hx;
    f[g.idx(i + 1, j)].lin(1.0 / h2, f[g.idx(i, j)], -2.0 / h2).lin(1.0, f[g.idx(i - 1, j)], 1.0 / h2)
}

/// Central second derivative along y; interior only.
pub fn d_yy<T: Lin>(g: &GridSpec, f: &[T], i: usize, j: usize) -> T {
    let h2 = g.hy * g.hy;
    f[g.idx(i, j + 1)].lin(1.0 / h2, f[g.idx(i, j)], -2.0 / h2).lin(1.0, f[g.idx(i, j - 1)], 1.0 / h2)
}

/// Central mixed derivative; interior only.
pub fn d_xy<T: Lin>(g: &GridSpec, f: &[T], i: usize, j: usize) -> T {
    let s = 0.25 / (g.hx * g.hy);
    f[g.idx(i + 1, j + 1)]
        .lin(s, f[g.idx(i - 1, j - 1)], s)
        .lin(1.0, f[g.idx(i + 1, j - 1)], -s)
        .lin(1.0, f[g.idx(i - 1, j + 1)], -s)
}

/// `d/dz = (d/dx - eps i d/dy)/2` of a real function with partials `fx, fy`.
#[inline]
pub fn dz_real(fx: f64, fy: f64, eps: i8) -> ScalarEps {
    ScalarEps::new(0.5 * fx, -0.5 * eps as f64 * fy, eps)
}

/// `d/dz` of a scalar field `a + ib` from its partials.
#[inline]
pub fn dz_eps(qx: ScalarEps, qy: ScalarEps) -> ScalarEps {
    let e = qx.eps as f64;
    ScalarEps::new(0.5 * (qx.re + qy.im), 0.5 * (qx.im - e * qy.re), qx.eps)
}

/// `d/dzbar = (d/dx + eps i d/dy)/2` of a scalar field from its partials.
#[inline]
pub fn dzbar_eps(qx: ScalarEps, qy: ScalarEps) -> ScalarEps {
    let e = qx.eps as f64;
    ScalarEps::new(0.5 * (qx.re - qy.im), 0.5 * (qx.im + e * qy.re), qx.eps)
}

/// `4 f_{z zbar} = f_xx + eps f_yy`.
#[inline]
pub fn four_dzdzbar(fxx: f64, fyy: f64, eps: i8) -> f64 {
    fxx + eps as f64 * fyy
}

/// Centered 4-point interpolation of `f` at `k + 1/2` along a sampled line.
pub fn midpoint<T: Lin>(at: impl Fn(usize) -> T, k: usize, n: usize) -> T {
    let (a, b, c, d, wa, wb, wc, wd);
    if k == 0 {
        (a, b, c, d) = (0, 1, 2, 3);
        (wa, wb, wc, wd) = (5.0 / 16.0, 15.0 / 16.0, -5.0 / 16.0, 1.0 / 16.0);
    } else if k + 2 >= n {
        (a, b, c, d) = (n - 4, n - 3, n - 2, n - 1);
        (wa, wb, wc, wd) = (1.0 / 16.0, -5.0 / 16.0, 15.0 / 16.0, 5.0 / 16.0);
    } else {
        (a, b, c, d) = (k - 1, k, k + 1, k + 2);
        (wa, wb, wc, wd) = (-1.0 / 16.0, 9.0 / 16.0, 9.0 / 16.0, -1.0 / 16.0);
    }
    at(a).lin(wa, at(b), wb).lin(1.0, at(c), wc).lin(1.0, at(d), wd)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_of_quadratics_are_exact() {
        let g = GridSpec::rect(7, 9, -1.0, 1.0, 0.0, 2.0).unwrap();
        let f = g.sample(|x, y| 3.0 * x * x - 2.0 * x * y + y * y + x);
        for i in 0..g.nx {
            for j in 0..g.ny {
                let (x, y) = (g.x(i), g.y(j));
                assert!((d_x(&g, &f, i, j) - (6.0 * x - 2.0 * y + 1.0)).abs() < 1e-11);
                assert!((d_y(&g, &f, i, j) - (-2.0 * x + 2.0 * y)).abs() < 1e-11);
                if g.inner(i, j, 1) {
                    assert!((d_xx(&g, &f, i, j) - 6.0).abs() < 1e-9);
                    assert!((d_yy(&g, &f, i, j) - 2.0).abs() < 1e-9);
                    assert!((d_xy(&g, &f, i, j) + 2.0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn fourth_order_derivatives_are_exact_for_quartics() {
        let g = GridSpec::rect(9, 7, -1.0, 1.0, 0.0, 1.5).unwrap();
        let f = g.sample(|x, y| x.powi(4) - 2.0 * x * x * y + y.powi(4) + x);
        for i in 0..g.nx {
            for j in 0..g.ny {
                let (x, y) = (g.x(i), g.y(j));
                assert!((d4_x(&g, &f, i, j) - (4.0 * x.powi(3) - 4.0 * x * y + 1.0)).abs() < 1e-10, "{i} {j}");
                assert!((d4_y(&g, &f, i, j) - (-2.0 * x * x + 4.0 * y.powi(3))).abs() < 1e-10, "{i} {j}");
            }
        }
    }

    #[test]
    fn midpoint_is_exact_for_cubics() {
        let f = |t: f64| t * t * t - 2.0 * t + 0.5;
        for k in 0..7 {
            let m = midpoint(|i| f(i as f64), k, 8);
            assert!((m - f(k as f64 + 0.5)).abs() < 1e-12, "{k}");
        }
    }

    #[test]
    fn wirtinger_of_holomorphic_square() {
        // z^2 = (x^2 - y^2) + i 2xy for eps=1; dz = 2z, dzbar = 0
        let (x, y) = (0.3, -0.7);
        let qx = ScalarEps::new(2.0 * x, 2.0 * y, 1);
        let qy = ScalarEps::new(-2.0 * y, 2.0 * x, 1);
        let dz = dz_eps(qx, qy);
        assert!((dz.re - 2.0 * x).abs() < 1e-15 && (dz.im - 2.0 * y).abs() < 1e-15);
        let db = dzbar_eps(qx, qy);
        assert!(db.re.abs() < 1e-15 && db.im.abs() < 1e-15);
        // para-holomorphic z^2 = (x^2 + y^2) + i 2xy for eps=-1
        let qx = ScalarEps::new(2.0 * x, 2.0 * y, -1);
        let qy = ScalarEps::new(2.0 * y, 2.0 * x, -1);
        let db = dzbar_eps(qx, qy);
        assert!(db.re.abs() < 1e-15 && db.im.abs() < 1e-15);
    }
}
