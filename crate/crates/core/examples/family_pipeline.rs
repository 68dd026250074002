//! Gordon solution -> explicit family -> compatibility residuals, for every family.

use minsurf::fundata::{compat_residuals, curvature_identities};
use minsurf::gordon::{build_family, solve, SolverSettings, THEOREMS};

fn main() -> minsurf::Result<()> {
    for th in THEOREMS {
        let sol = solve(&th.default_problem(65, 65)?, &SolverSettings::default())?;
        let d = build_family(th, &sol, 0.5)?;
        let c = compat_residuals(&d)?;
        let id = curvature_identities(&d, |_, _| true)?;
        let (p, eps, b) = th.signature();
        println!(
            "{th}: p={p} eps={eps:+} b={b:+} {:<10} residual {:.1e}, compat max {:.2e}, identities max {:.2e}",
            th.kind().name(),
            sol.residual,
            c.max(),
            id.max()
        );
    }
    Ok(())
}
