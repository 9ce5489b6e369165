//! Implicit Euler time stepping with projected SOR for the heat equation and
//! the thin obstacle problem, plus replacements on cylinders.

mod coefficients;
mod operator;

pub use coefficients::{CoefficientField, DriftField, MatrixField};
pub use operator::variational_energy;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::{Cylinder, Region};
use operator::LayerSystem;

/// Projected SOR parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverParams {
    pub omega: f64,
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            omega: 1.5,
            tol: 1e-10,
            max_sweeps: 20_000,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega < 2.0) {
            return Err(Error::InvalidParameter(format!(
                "omega {} must lie in (0, 2)",
                self.omega
            )));
        }
        if !(self.tol > 0.0) || self.max_sweeps == 0 {
            return Err(Error::InvalidParameter(
                "tol must be > 0 and max_sweeps >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Whether thin-space nodes carry the constraint `u >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    None,
    ThinObstacle,
}

/// Solver bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveStats {
    /// Sweeps spent on each layer of the region.
    pub sweeps: Vec<usize>,
    /// Largest final residual over all layers.
    pub residual: f64,
}

/// Solves on `region`, taking every value outside it from `data`.
///
/// The result is `data` with the nodes of `region` overwritten. Thin nodes
/// of the region are constrained when `constraint` is
/// [`Constraint::ThinObstacle`].
pub fn solve_region(
    data: &ScalarField,
    region: &Region,
    coefficients: &CoefficientField,
    constraint: Constraint,
    params: &SolverParams,
) -> Result<(ScalarField, SolveStats)> {
    let grid = *data.grid();
    params.validate()?;
    region.check_solvable(&grid)?;
    if coefficients.n() != grid.n() {
        return Err(Error::InvalidParameter(
            "coefficient and grid dimensions differ".into(),
        ));
    }
    let constrained = constraint == Constraint::ThinObstacle;
    if constrained {
        for node in region.parabolic_boundary(&grid) {
            let (_, s) = grid.split(node);
            let value = data.get(node);
            if grid.is_thin(s) && value < -1e-12 {
                return Err(Error::IncompatibleBoundary { node, value });
            }
        }
    }

    let m = grid.spatial_len();
    let free = &region.spatial;
    let thin: Vec<bool> = free
        .iter()
        .map(|&s| constrained && grid.is_thin(s))
        .collect();
    let deltas = grid.stencil_deltas();
    let center = grid.stencil_center();
    let mut values = data.values().to_vec();
    let mut stats = SolveStats {
        sweeps: Vec::with_capacity(region.layers.len()),
        residual: 0.0,
    };
    let mut system = None;
    let mut rhs = vec![0.0; free.len()];

    for k in region.layers.clone() {
        if system.is_none() || !coefficients.is_uniform() {
            system = Some(LayerSystem::assemble(&grid, coefficients, k, free));
        }
        let sys = system.as_ref().expect("assembled above");
        let (past, rest) = values.split_at_mut(k * m);
        let prev = &past[(k - 1) * m..];
        let before = (k >= 2 && k > region.layers.start).then(|| &past[(k - 2) * m..(k - 1) * m]);
        let cur = &mut rest[..m];
        for (i, &s) in free.iter().enumerate() {
            let guess = match before {
                Some(b) => 2.0 * prev[s] - b[s],
                None => prev[s],
            };
            cur[s] = if thin[i] { guess.max(0.0) } else { guess };
            rhs[i] = prev[s] / grid.tau();
        }
        let (sweeps, residual) = sweep_layer(sys, free, &thin, &deltas, center, &rhs, cur, params);
        if residual > params.tol {
            return Err(Error::NotConverged {
                layer: k,
                sweeps,
                residual,
            });
        }
        stats.sweeps.push(sweeps);
        stats.residual = stats.residual.max(residual);
    }
    Ok((ScalarField::from_values(grid, values)?, stats))
}

#[allow(clippy::too_many_arguments)]
fn sweep_layer(
    sys: &LayerSystem,
    free: &[usize],
    thin: &[bool],
    deltas: &[isize],
    center: usize,
    rhs: &[f64],
    cur: &mut [f64],
    params: &SolverParams,
) -> (usize, f64) {
    let omega = params.omega;
    let mut residual = f64::INFINITY;
    for sweep in 1..=params.max_sweeps {
        residual = 0.0;
        for (i, &s) in free.iter().enumerate() {
            let row = sys.row(i);
            let mut acc = rhs[i];
            for (c, (&w, &dl)) in row.iter().zip(deltas).enumerate() {
                if c != center && w != 0.0 {
                    acc -= w * cur[(s as isize + dl) as usize];
                }
            }
            let gs = acc / row[center];
            let old = cur[s];
            let target = if thin[i] { gs.max(0.0) } else { gs };
            residual = residual.max((old - target).abs());
            let new = old + omega * (gs - old);
            cur[s] = if thin[i] { new.max(0.0) } else { new };
        }
        if residual <= params.tol {
            return (sweep, residual);
        }
    }
    (params.max_sweeps, residual)
}

/// Heat solve on the grid interior with boundary and initial data from `data`.
pub fn heat_solve(
    data: &ScalarField,
    coefficients: &CoefficientField,
    params: &SolverParams,
) -> Result<ScalarField> {
    let region = data.grid().interior_region();
    Ok(solve_region(data, &region, coefficients, Constraint::None, params)?.0)
}

/// Thin obstacle solve on the grid interior with boundary and initial data
/// from `data`.
pub fn signorini_solve(
    data: &ScalarField,
    coefficients: &CoefficientField,
    params: &SolverParams,
) -> Result<ScalarField> {
    let region = data.grid().interior_region();
    Ok(solve_region(
        data,
        &region,
        coefficients,
        Constraint::ThinObstacle,
        params,
    )?
    .0)
}

/// The caloric replacement of `u` in `cylinder`: agrees with `u` outside the
/// cylinder and solves the heat equation inside.
pub fn caloric_replacement(
    u: &ScalarField,
    cylinder: &Cylinder,
    coefficients: &CoefficientField,
    params: &SolverParams,
) -> Result<ScalarField> {
    let region = cylinder.nodes(u.grid())?;
    Ok(solve_region(u, &region, coefficients, Constraint::None, params)?.0)
}

/// The Signorini replacement of `u` in `cylinder`.
pub fn signorini_replacement(
    u: &ScalarField,
    cylinder: &Cylinder,
    coefficients: &CoefficientField,
    params: &SolverParams,
) -> Result<ScalarField> {
    let region = cylinder.nodes(u.grid())?;
    Ok(solve_region(u, &region, coefficients, Constraint::ThinObstacle, params)?.0)
}

/// Discrete complementarity on the thin nodes of a region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Complementarity {
    /// `min u` over thin nodes (should be `>= 0`).
    pub min_value: f64,
    /// Smallest normal-derivative jump `(2u - u(+h) - u(-h)) / h`.
    pub min_flux_jump: f64,
    /// Largest `|u * jump|`.
    pub max_product: f64,
    pub thin_nodes: usize,
}

pub fn complementarity(u: &ScalarField, region: &Region) -> Complementarity {
    let grid = u.grid();
    let thin = region.thin(grid);
    let mut out = Complementarity {
        min_value: f64::INFINITY,
        min_flux_jump: f64::INFINITY,
        max_product: 0.0,
        thin_nodes: thin.len(),
    };
    for node in thin.nodes(grid) {
        let (below, above) = crate::field::thin_normal_derivatives(u, node);
        let jump = below - above;
        let v = u.get(node);
        out.min_value = out.min_value.min(v);
        out.min_flux_jump = out.min_flux_jump.min(jump);
        out.max_product = out.max_product.max((v * jump).abs());
    }
    out
}

/// `Re((x_1 + i |x_n|)^{3/2})`, the stationary global thin obstacle solution.
pub fn signorini_profile(x: &[f64]) -> f64 {
    let a = x[0];
    let b = x[x.len() - 1].abs();
    let r = (a * a + b * b).sqrt();
    if r == 0.0 || (b == 0.0 && a < 0.0) {
        return 0.0;
    }
    let theta = b.atan2(a);
    r.powf(1.5) * (1.5 * theta).cos()
}
