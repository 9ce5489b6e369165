//! Checks the iteration lemma on a synthetic decay profile and on one that
//! violates its hypothesis.

use signorini_lab::analysis::{hl_iteration_check, IterationParams};

fn main() -> signorini_lab::Result<()> {
    let params = IterationParams {
        a: 2.0,
        gamma: 4.0,
        beta: 2.0,
        b: 1.0,
        eps: 1e-3,
    };
    let radii: Vec<f64> = (0..12)
        .map(|j| 0.5 * 2f64.powf(-(11 - j) as f64 / 2.0))
        .collect();
    let good: Vec<(f64, f64)> = radii
        .iter()
        .map(|&r| (r, r.powi(4) + 0.5 * r.powi(2)))
        .collect();
    let bad: Vec<(f64, f64)> = radii.iter().map(|&r| (r, r.sqrt())).collect();
    for (label, samples) in [("r^4 + r^2 / 2", good), ("r^(1/2)", bad)] {
        let c = hl_iteration_check(&samples, &params)?;
        println!(
            "{label}: hypothesis {} (worst ratio {:.3}), conclusion constant {:.3} over {} pairs",
            c.hypothesis_holds, c.worst_hypothesis_ratio, c.conclusion_constant, c.pairs
        );
    }
    Ok(())
}
