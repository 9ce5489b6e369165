//! Builds a lattice, inspects a parabolic cylinder and integrates over it.

use signorini_lab::field::{cyl_integral, measure};
use signorini_lab::{Cylinder, Grid, PPoint, ScalarField};

fn main() -> signorini_lab::Result<()> {
    let grid = Grid::new(2, 33, 64)?;
    println!(
        "n = {}, h = {}, tau = {}, {} nodes, thin index {}",
        grid.n(),
        grid.h(),
        grid.tau(),
        grid.len(),
        grid.thin_index()
    );

    let cylinder = Cylinder::new(PPoint::new(vec![0.25, 0.0], -0.25), 0.5);
    let region = cylinder.nodes(&grid)?;
    println!(
        "Q_0.5((0.25, 0), -0.25): {} nodes over layers {:?}, {} thin",
        region.len(),
        region.layers,
        region.thin(&grid).len()
    );
    println!(
        "measure {:.6} (pi r^4 = {:.6})",
        measure(&grid, &region),
        std::f64::consts::PI * 0.5f64.powi(4)
    );

    let u = ScalarField::from_fn(grid, |x, t| x[0] * x[0] + 2.0 * t);
    println!("integral of x1^2 + 2t: {:.6}", cyl_integral(&u, &cylinder)?);
    Ok(())
}
