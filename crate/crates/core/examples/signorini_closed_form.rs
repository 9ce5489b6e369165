//! Solves the thin obstacle problem with data from `Re((x1 + i|x2|)^{3/2})`,
//! compares with the profile, and checks complementarity and the
//! oscillation growth around the free boundary.

use signorini_lab::analysis::radius_ladder;
use signorini_lab::certify::free_boundary_point;
use signorini_lab::functionals::signorini_growth;
use signorini_lab::solve::{
    complementarity, signorini_profile, signorini_solve, CoefficientField, SolverParams,
};
use signorini_lab::{Cylinder, Grid, ScalarField};

fn main() -> signorini_lab::Result<()> {
    let grid = Grid::new(2, 65, 128)?;
    let exact = ScalarField::from_fn(grid, |x, _| signorini_profile(x));
    let u = signorini_solve(
        &exact,
        &CoefficientField::identity(2),
        &SolverParams::default(),
    )?;
    println!("max |u - profile| = {:.3e}", u.max_abs_diff(&exact));

    let c = complementarity(&u, &grid.interior_region());
    println!(
        "min u {:.2e}, min flux jump {:.2e}, max |u * jump| {:.2e} on {} thin nodes",
        c.min_value, c.min_flux_jump, c.max_product, c.thin_nodes
    );

    let center =
        free_boundary_point(&u, grid.time_steps(), 1e-9).expect("contact set meets the axis");
    println!("free boundary at x1 = {}", center.x[0]);
    for r in radius_ladder(8.0 * grid.h(), 0.5, 2)? {
        let g = signorini_growth(&u, &Cylinder::new(center.clone(), r), 1e-9)?;
        println!("r = {r:.4}  G = {g:.4e}  G / r^6 = {:.4}", g / r.powi(6));
    }
    Ok(())
}
