//! Gradient Campanato decay of the profile with and without the even
//! extension across the thin space, and the Holder exponent it implies.

use num_rational::Ratio;
use signorini_lab::analysis::{beta_exponent_exact, growth_report, radius_ladder, FunctionalKind};
use signorini_lab::solve::signorini_profile;
use signorini_lab::{Grid, PPoint, ScalarField};

fn main() -> signorini_lab::Result<()> {
    let grid = Grid::new(2, 65, 64)?;
    let u = ScalarField::from_fn(grid, |x, _| signorini_profile(x));
    let radii = radius_ladder(8.0 * grid.h(), 0.71, 2)?;
    for even_extension in [false, true] {
        let kind = FunctionalKind::CampanatoGrad { even_extension };
        let report = growth_report(&u, &PPoint::origin(2), kind, &radii)?;
        println!(
            "even extension {even_extension}: exponent {:.4}, implied Holder {:.4}",
            report.fitted_exponent,
            kind.implied_holder(2, report.fitted_exponent)
        );
    }
    println!(
        "beta(n = 2, alpha = 1/2) = {}",
        beta_exponent_exact(2, Ratio::new(1, 2))
    );
    Ok(())
}
