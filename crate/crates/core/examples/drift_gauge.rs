//! Solves the thin obstacle problem with a capped singular drift and fits
//! the almost-minimizer gauge `omega(r) ~ C r^alpha` around the free
//! boundary, next to the drift-free control.

use signorini_lab::analysis::radius_ladder;
use signorini_lab::certify::{certify_drift, FamilySpec};
use signorini_lab::solve::{DriftField, SolverParams};
use signorini_lab::Grid;

fn main() -> signorini_lab::Result<()> {
    let grid = Grid::new(2, 129, 256)?;
    let radii = radius_ladder(8.0 * grid.h(), 0.5, 2)?;
    let sp = SolverParams::default();
    let family = FamilySpec::default();
    let singular = DriftField::Singular {
        p: 4.0,
        magnitude: 1.0,
        cap: grid.h().powf(-0.5),
        direction: vec![1.0, 0.0],
        center: vec![0.0, 0.0],
    };
    for (label, drift) in [("singular", singular), ("none", DriftField::Zero)] {
        let report = certify_drift(grid, drift, &radii, &family, &sp)?;
        println!("drift {label}: center x1 = {}", report.cylinders[0].0.x[0]);
        for ((_, r), w) in report.cylinders.iter().zip(&report.omega_min) {
            println!("  r = {r:.4}  omega_min = {w:.3e}");
        }
        println!(
            "  alpha {:.4}, C {:.3e}",
            report.fitted_alpha, report.fitted_c
        );
    }
    Ok(())
}
