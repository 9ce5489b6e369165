//! Normalizes a constant matrix to the identity with a deskewing frame and
//! resamples a field into the deskewed coordinates.

use signorini_lab::geometry::{align_rotation, deskew, spd_sqrt, Frame, SpdMatrix};
use signorini_lab::solve::signorini_profile;
use signorini_lab::{Grid, PPoint, ScalarField};

fn main() -> signorini_lab::Result<()> {
    let a = SpdMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 1.0]])?;
    let root = spd_sqrt(&a);
    println!("A^(1/2) = {}", root.matrix());
    println!("aligning rotation = {}", align_rotation(&a));

    let frame = Frame::new(&a, PPoint::origin(2))?;
    println!(
        "jacobian {:.6} (det A^(1/2) = {:.6})",
        frame.jacobian(),
        a.det().sqrt()
    );
    let y = frame.to_deskewed(&[0.3, -0.2]);
    println!("(0.3, -0.2) -> {y:?} -> {:?}", frame.to_physical(&y));

    let grid = Grid::new(2, 65, 32)?;
    let u = ScalarField::from_fn(grid, |x, _| signorini_profile(&frame.to_deskewed(x)));
    let v = deskew(&u, &frame, 0.5)?;
    let exact = ScalarField::from_fn(grid, |x, _| signorini_profile(x));
    let region = signorini_lab::Cylinder::new(PPoint::origin(2), 0.5).nodes(&grid)?;
    println!(
        "deskewed field vs profile on Q_0.5: {:.3e}",
        v.max_abs_diff_on(&exact, &region)
    );
    Ok(())
}
