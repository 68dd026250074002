//! Manufactured-solution convergence of the elliptic sinh-Gordon solver.

use std::sync::Arc;

use minsurf::gordon::{solve_scalar, GordonKind, ScalarProblem, SolverSettings};
use minsurf::grid::GridSpec;

fn exact(x: f64, y: f64) -> f64 {
    0.4 * (x + 0.5 * y).sin() * y.cosh()
}

fn main() -> minsurf::Result<()> {
    let mut prev = None;
    for n in [17, 33, 65] {
        let spec = GridSpec::rect(n, n, 0.0, 1.0, 0.0, 1.0)?;
        // v_xx + v_yy = -2 sinh 2v + 4 g with g chosen so that `exact` solves it
        let g = |x: f64, y: f64| {
            let lap = 0.4 * (x + 0.5 * y).sin() * y.cosh() * (-1.25)
                + 0.4 * (x + 0.5 * y).cos() * y.sinh()
                + 0.4 * (x + 0.5 * y).sin() * y.cosh();
            (lap + 2.0 * (2.0 * exact(x, y)).sinh()) / 4.0
        };
        let pb = ScalarProblem {
            eps: 1,
            sigma: -1.0,
            kind: GordonKind::SinhPlus,
            spec,
            data: Arc::new(|x, y| [exact(x, y), 0.0]),
            forcing: Some(Arc::new(g)),
        };
        let sol = solve_scalar(&pb, &SolverSettings::default())?;
        let err = (0..spec.len())
            .map(|k| (sol.v[k] - exact(spec.x(k / spec.ny), spec.y(k % spec.ny))).abs())
            .fold(0.0, f64::max);
        let ratio = prev.map_or(String::new(), |p: f64| format!("  ratio {:.2}", p / err));
        println!("n = {n:>3}: newton iterations {}, error {err:.3e}{ratio}", sol.iterations);
        prev = Some(err);
    }
    Ok(())
}
