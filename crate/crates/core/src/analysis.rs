//! Power-law fits, the iteration-lemma check and regularity reports.

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::functionals;
use crate::grid::{Cylinder, PPoint};

/// A fitted power law `value ~ radius^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fit {
    pub exponent: f64,
    /// `max |log value - fitted line|`.
    pub residual: f64,
}

/// Least-squares slope of `log value` against `log radius`.
///
/// A zero value gives the sentinel exponent `+inf` (the field is flat at
/// that scale).
pub fn fit_exponent(radii: &[f64], values: &[f64]) -> Result<Fit> {
    if radii.len() != values.len() {
        return Err(Error::InvalidParameter(
            "radii and values differ in length".into(),
        ));
    }
    if radii.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "{} points, need at least 4",
            radii.len()
        )));
    }
    if radii.iter().any(|&r| !(r > 0.0)) || values.iter().any(|&v| !(v >= 0.0)) {
        return Err(Error::InvalidParameter(
            "radii must be positive and values non-negative".into(),
        ));
    }
    if values.contains(&0.0) {
        return Ok(Fit {
            exponent: f64::INFINITY,
            residual: 0.0,
        });
    }
    let x: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all radii coincide".into()));
    }
    let slope = sxy / sxx;
    let residual = x
        .iter()
        .zip(&y)
        .map(|(a, b)| (b - (my + slope * (a - mx))).abs())
        .fold(0.0, f64::max);
    Ok(Fit {
        exponent: slope,
        residual,
    })
}

/// Radii `r_min * 2^(j / steps_per_octave)` up to `r_max`.
pub fn radius_ladder(r_min: f64, r_max: f64, steps_per_octave: u32) -> Result<Vec<f64>> {
    if !(r_min > 0.0 && r_max >= r_min) || steps_per_octave == 0 {
        return Err(Error::InvalidParameter(format!(
            "bad radius ladder [{r_min}, {r_max}]"
        )));
    }
    Ok((0..)
        .map(|j| r_min * 2f64.powf(j as f64 / steps_per_octave as f64))
        .take_while(|&r| r <= r_max * (1.0 + 1e-12))
        .collect())
}

/// `beta = alpha / (4 (2n + 4 + alpha))`.
pub fn beta_exponent(n: usize, alpha: f64) -> f64 {
    alpha / (4.0 * (2.0 * n as f64 + 4.0 + alpha))
}

/// [`beta_exponent`] in exact rational arithmetic.
pub fn beta_exponent_exact(n: u32, alpha: Ratio<i64>) -> Ratio<i64> {
    alpha / ((Ratio::from_integer(2 * n as i64 + 4) + alpha) * 4)
}

/// Parameters of the iteration lemma
/// `phi(rho) <= a [(rho/r)^gamma + eps] phi(r) + b r^beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationParams {
    pub a: f64,
    pub gamma: f64,
    pub beta: f64,
    pub b: f64,
    pub eps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationCheck {
    pub hypothesis_holds: bool,
    /// Largest `phi(rho) / (hypothesis right-hand side)` over pairs.
    pub worst_hypothesis_ratio: f64,
    /// Smallest `c` with `phi(rho) <= c [(rho/r)^beta phi(r) + b rho^beta]`
    /// on every sampled pair.
    pub conclusion_constant: f64,
    pub pairs: usize,
}

/// Checks the iteration lemma's hypothesis and conclusion on sampled
/// `(rho, phi(rho))` pairs with `rho < r`.
pub fn hl_iteration_check(samples: &[(f64, f64)], p: &IterationParams) -> Result<IterationCheck> {
    if !(p.gamma > p.beta && p.beta > 0.0 && p.a > 0.0 && p.b >= 0.0 && p.eps >= 0.0) {
        return Err(Error::InvalidParameter(
            "need gamma > beta > 0, a > 0, b >= 0, eps >= 0".into(),
        ));
    }
    if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::InvalidParameter(
            "sample radii must increase strictly".into(),
        ));
    }
    if samples.len() < 2 {
        return Err(Error::InsufficientData("need at least two samples".into()));
    }
    let mut worst: f64 = 0.0;
    let mut c: f64 = 0.0;
    let mut pairs = 0;
    for (i, &(rho, f_rho)) in samples.iter().enumerate() {
        for &(r, f_r) in &samples[i + 1..] {
            pairs += 1;
            let q = rho / r;
            let rhs = p.a * (q.powf(p.gamma) + p.eps) * f_r + p.b * r.powf(p.beta);
            worst = worst.max(ratio(f_rho, rhs));
            let concl = q.powf(p.beta) * f_r + p.b * rho.powf(p.beta);
            c = c.max(ratio(f_rho, concl));
        }
    }
    Ok(IterationCheck {
        hypothesis_holds: worst <= 1.0,
        worst_hypothesis_ratio: worst,
        conclusion_constant: c,
        pairs,
    })
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

/// Which growth functional a report measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalKind {
    Phi,
    Dirichlet,
    CampanatoGrad { even_extension: bool },
    MeanOsc,
}

impl FunctionalKind {
    pub fn evaluate(&self, u: &ScalarField, c: &Cylinder) -> Result<f64> {
        match *self {
            FunctionalKind::Phi => Ok(functionals::phi(u, c)?.total),
            FunctionalKind::Dirichlet => functionals::dirichlet(u, c),
            FunctionalKind::CampanatoGrad { even_extension } => {
                functionals::campanato_gradient(u, c, even_extension)
            }
            FunctionalKind::MeanOsc => functionals::mean_oscillation(u, c),
        }
    }

    /// Holder exponent matching a growth exponent `s`: `phi ~ r^(2n+4+2s)`,
    /// Dirichlet `~ r^(n+2s)`, mean oscillations of `u` or `grad u`
    /// `~ r^(n+2+2s)` (the latter measuring the gradient's exponent).
    pub fn implied_holder(&self, n: usize, exponent: f64) -> f64 {
        let n = n as f64;
        match self {
            FunctionalKind::Phi => (exponent - 2.0 * n - 4.0) / 2.0,
            FunctionalKind::Dirichlet => (exponent - n) / 2.0,
            FunctionalKind::CampanatoGrad { .. } | FunctionalKind::MeanOsc => {
                (exponent - n - 2.0) / 2.0
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FunctionalKind::Phi => "phi",
            FunctionalKind::Dirichlet => "dirichlet",
            FunctionalKind::CampanatoGrad {
                even_extension: true,
            } => "campanato_grad_even",
            FunctionalKind::CampanatoGrad {
                even_extension: false,
            } => "campanato_grad",
            FunctionalKind::MeanOsc => "mean_osc",
        }
    }
}

/// Growth of one functional at one center.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    pub center: PPoint,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub fitted_exponent: f64,
    pub fit_residual: f64,
    pub functional_kind: FunctionalKind,
}

pub fn growth_report(
    u: &ScalarField,
    center: &PPoint,
    kind: FunctionalKind,
    radii: &[f64],
) -> Result<GrowthReport> {
    if radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter(
            "radii must increase strictly".into(),
        ));
    }
    let values = radii
        .iter()
        .map(|&r| kind.evaluate(u, &Cylinder::new(center.clone(), r)))
        .collect::<Result<Vec<f64>>>()?;
    let fit = fit_exponent(radii, &values)?;
    Ok(GrowthReport {
        center: center.clone(),
        radii: radii.to_vec(),
        values,
        fitted_exponent: fit.exponent,
        fit_residual: fit.residual,
        functional_kind: kind,
    })
}

/// Aggregate of a set of growth reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportSummary {
    pub min_exponent: f64,
    pub median_exponent: f64,
    /// Holder exponent implied by the smallest finite fitted exponent.
    pub implied_holder: f64,
    /// Every center gave the flat-field sentinel.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityReport {
    pub reports: Vec<GrowthReport>,
    pub summary: ReportSummary,
}

/// One [`GrowthReport`] per center, computed in parallel.
pub fn regularity_report(
    u: &ScalarField,
    centers: &[PPoint],
    kind: FunctionalKind,
    radii: &[f64],
) -> Result<RegularityReport> {
    if centers.is_empty() {
        return Err(Error::InsufficientData("no centers".into()));
    }
    let reports = centers
        .par_iter()
        .map(|c| growth_report(u, c, kind, radii))
        .collect::<Result<Vec<_>>>()?;
    let mut finite: Vec<f64> = reports
        .iter()
        .map(|r| r.fitted_exponent)
        .filter(|e| e.is_finite())
        .collect();
    finite.sort_by(f64::total_cmp);
    let summary = if finite.is_empty() {
        ReportSummary {
            min_exponent: f64::INFINITY,
            median_exponent: f64::INFINITY,
            implied_holder: f64::INFINITY,
            degenerate: true,
        }
    } else {
        let mid = finite.len() / 2;
        let median = if finite.len() % 2 == 1 {
            finite[mid]
        } else {
            0.5 * (finite[mid - 1] + finite[mid])
        };
        ReportSummary {
            min_exponent: finite[0],
            median_exponent: median,
            implied_holder: kind.implied_holder(u.grid().n(), finite[0]),
            degenerate: false,
        }
    };
    Ok(RegularityReport { reports, summary })
}
