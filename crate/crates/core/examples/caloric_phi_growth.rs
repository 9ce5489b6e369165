//! Solves the heat equation with quadratic data and measures the growth
//! exponent of the monotonicity functional phi at several centers.

use signorini_lab::analysis::{radius_ladder, regularity_report, FunctionalKind};
use signorini_lab::solve::{heat_solve, CoefficientField, SolverParams};
use signorini_lab::{Grid, PPoint, ScalarField};

fn main() -> signorini_lab::Result<()> {
    let grid = Grid::new(2, 257, 256)?;
    let data = ScalarField::from_fn(grid, |x, t| x[0] * x[0] + 2.0 * t);
    let u = heat_solve(
        &data,
        &CoefficientField::identity(2),
        &SolverParams::default(),
    )?;

    let radii = radius_ladder(8.0 * grid.h(), 0.25, 2)?;
    let centers = [
        PPoint::new(vec![0.5, 0.0], -0.5),
        PPoint::new(vec![-0.5, 0.25], -0.25),
        PPoint::new(vec![0.625, -0.25], -0.75),
    ];
    let report = regularity_report(&u, &centers, FunctionalKind::Phi, &radii)?;
    for r in &report.reports {
        println!(
            "center {:?} t = {}: exponent {:.4}",
            r.center.x, r.center.t, r.fitted_exponent
        );
    }
    println!(
        "min {:.4}, median {:.4} (n + 8 = 10)",
        report.summary.min_exponent, report.summary.median_exponent
    );
    Ok(())
}
