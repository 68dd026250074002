//! Curvature identities of the graph of w = z^2 on the disc |z| <= 0.2, where the metric is definite.

use minsurf::grid::GridSpec;
use minsurf::immersion::{gauss_equation_residual, hopf_differential, InvariantFields};
use minsurf::surfaces::{make_holo_graph, HoloFn};

fn main() -> minsurf::Result<()> {
    for n in [33, 65] {
        let spec = GridSpec::rect(n, n, -0.25, 0.25, -0.25, 0.25)?;
        let f = make_holo_graph(&HoloFn::square(1), spec)?;
        let inv = InvariantFields::compute(&f, 1);
        let (mut gauss, mut kperp, mut hopf) = (0.0f64, 0.0f64, 0.0f64);
        for i in 2..n - 2 {
            for j in 2..n - 2 {
                if spec.x(i).hypot(spec.y(j)) > 0.2 {
                    continue;
                }
                let k = spec.idx(i, j);
                gauss = gauss.max(gauss_equation_residual(&f, i, j)?);
                kperp = kperp.max((inv.kperp_f[k] - inv.kperp_r[k]).abs());
                hopf = hopf.max(hopf_differential(&f, i, j, 1, f64::INFINITY)?.1);
            }
        }
        println!("n = {n}: Gauss equation {gauss:.3e}, K_perp two ways {kperp:.3e}, dbar Hopf {hopf:.3e}");
    }
    Ok(())
}
