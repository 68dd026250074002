//! Integrates the Frenet system for a family dataset and extracts the data again.

use minsurf::frenet::{roundtrip_report, ReconstructOptions};
use minsurf::gordon::{build_family, solve, SolverSettings, Theorem};

fn main() -> minsurf::Result<()> {
    for n in [33, 65] {
        let sol = solve(&Theorem::C1.default_problem(n, n)?, &SolverSettings::default())?;
        let d = build_family(Theorem::C1, &sol, 0.0)?;
        let (r, rec, _) = roundtrip_report(&d, ReconstructOptions::default())?;
        println!(
            "n = {n}: {} steps, quadric drift {:.2e} (allowed {:.2e}), cell commutator {:.2e}",
            r.steps, r.quadric_drift, r.drift_tol, r.commutator_cell
        );
        for (name, v) in r.named() {
            println!("  {name:<11} {v:.3e}");
        }
        println!("  reconstructed grid {}x{} in S^2_{} x S^2_{}", rec.grid.spec.nx, rec.grid.spec.ny, rec.grid.p, rec.grid.p);
    }
    Ok(())
}
