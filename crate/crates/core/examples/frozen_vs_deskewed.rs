//! Compares the gauge measured with coefficients frozen on elliptic
//! cylinders against the gauge of the deskewed field on round cylinders.

use signorini_lab::analysis::radius_ladder;
use signorini_lab::certify::{certify_deskewed, certify_frozen, FamilySpec};
use signorini_lab::geometry::Frame;
use signorini_lab::solve::{
    signorini_profile, signorini_solve, CoefficientField, DriftField, SolverParams,
};
use signorini_lab::{Grid, PPoint, ScalarField};

fn main() -> signorini_lab::Result<()> {
    let grid = Grid::new(2, 129, 256)?;
    let sp = SolverParams::default();
    let lattice = CoefficientField::lattice_frame(vec![vec![1, 1], vec![0, 1]])?;
    let frame = Frame::new(&lattice.matrix_at(&[0.0, 0.0], 0.0), PPoint::origin(2))?;
    let data = ScalarField::from_fn(grid, |x, _| signorini_profile(&frame.to_deskewed(x)));
    let drift = DriftField::Singular {
        p: 4.0,
        magnitude: 1.0,
        cap: grid.h().powf(-0.5),
        direction: vec![0.0, 1.0],
        center: vec![0.0, 0.0],
    };
    let u = signorini_solve(&data, &lattice.clone().with_drift(drift)?, &sp)?;

    let radii = radius_ladder(8.0 * grid.h(), 0.5, 2)?;
    let family = FamilySpec::default();
    let z0 = PPoint::origin(2);
    let frozen = certify_frozen(&u, &z0, &radii, &lattice, &family, &sp)?;
    let deskewed = certify_deskewed(&u, &z0, &radii, &lattice, &family, &sp)?;
    for ((r, f), d) in radii.iter().zip(&frozen.omega_min).zip(&deskewed.omega_min) {
        println!(
            "r = {r:.4}  frozen {f:.4e}  deskewed {d:.4e}  gap {:.3}%",
            100.0 * (f - d).abs() / f.max(*d)
        );
    }
    Ok(())
}
