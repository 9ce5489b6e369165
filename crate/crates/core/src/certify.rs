//! Almost-minimality certificates: energy deficits against admissible
//! competitors, the smallest gauge `omega` they force, and its decay in `r`.

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::fit_exponent;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{deskew, EllipticCylinder, Frame};
use crate::grid::{Cylinder, Grid, PPoint, Region};
use crate::solve::{
    signorini_profile, solve_region, variational_energy, CoefficientField, Constraint, DriftField,
    SolverParams,
};

const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CompetitorKind {
    Replacement,
    BumpPerturbation,
    Deskewed,
}

/// A candidate `v` to compare `u` against on a region.
#[derive(Debug, Clone, PartialEq)]
pub struct Competitor {
    pub field: ScalarField,
    pub kind: CompetitorKind,
    pub admissible: bool,
}

impl Competitor {
    /// Wraps `field`, checking that it equals `u` on the discrete parabolic
    /// boundary of `region` and is non-negative on the region's thin nodes.
    pub fn new(u: &ScalarField, field: ScalarField, kind: CompetitorKind, region: &Region) -> Self {
        let admissible = admissibility(u, &field, region).is_ok();
        Self {
            field,
            kind,
            admissible,
        }
    }
}

fn admissibility(u: &ScalarField, v: &ScalarField, region: &Region) -> Result<()> {
    let grid = u.grid();
    if v.grid() != grid {
        return Err(Error::Inadmissible(
            "competitor lives on a different grid".into(),
        ));
    }
    if let Some(node) = region
        .parabolic_boundary(grid)
        .into_iter()
        .find(|&node| (u.get(node) - v.get(node)).abs() > BOUNDARY_TOL)
    {
        return Err(Error::Inadmissible(format!(
            "differs from u on the parabolic boundary at node {node}"
        )));
    }
    if let Some(node) = region
        .thin(grid)
        .nodes(grid)
        .find(|&node| v.get(node) < 0.0)
    {
        return Err(Error::Inadmissible(format!(
            "negative on the thin space at node {node}"
        )));
    }
    Ok(())
}

/// The three terms of the almost-minimality inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Deficit {
    pub e_u: f64,
    pub e_v: f64,
    /// `2 int d_t u (u - v)`.
    pub p: f64,
}

impl Deficit {
    /// `(E_u + P - E_v) / (E_u + E_v)`, or `None` when both energies vanish.
    pub fn ratio(&self) -> Option<f64> {
        let den = self.e_u + self.e_v;
        (den > 0.0).then(|| (self.e_u + self.p - self.e_v) / den)
    }
}

/// Energies and the time-derivative pairing of `u` and a competitor on
/// `region`, with the solver's discrete Dirichlet form.
pub fn deficit(
    u: &ScalarField,
    v: &Competitor,
    region: &Region,
    coefficients: &CoefficientField,
) -> Result<Deficit> {
    if !v.admissible {
        admissibility(u, &v.field, region)?;
        return Err(Error::Inadmissible(
            "competitor flagged inadmissible".into(),
        ));
    }
    let grid = u.grid();
    let e_u = variational_energy(u, region, coefficients);
    let e_v = variational_energy(&v.field, region, coefficients);
    let m = grid.spatial_len();
    let (uv, vv) = (u.values(), v.field.values());
    let mut pairing = 0.0;
    for node in region.nodes(grid) {
        let dt = uv[node] - uv[node - m];
        pairing += dt * (uv[node] - vv[node]);
    }
    // d_t u = dt / tau and the node weight is h^n tau.
    let p = 2.0 * grid.h().powi(grid.n() as i32) * pairing;
    Ok(Deficit { e_u, e_v, p })
}

/// The smallest `omega >= 0` for which every competitor in `family`
/// satisfies the almost-minimality inequality on `region`.
pub fn omega_min(
    u: &ScalarField,
    region: &Region,
    family: &[Competitor],
    coefficients: &CoefficientField,
) -> Result<f64> {
    if family.is_empty() {
        return Err(Error::InsufficientData("empty competitor family".into()));
    }
    let mut best: Option<f64> = None;
    for v in family {
        if let Some(r) = deficit(u, v, region, coefficients)?.ratio() {
            best = Some(best.unwrap_or(0.0).max(r.max(0.0)));
        }
    }
    best.ok_or_else(|| Error::InsufficientData("every competitor has zero energy".into()))
}

/// Shape of the competitor family: the Signorini replacement plus bumps
/// `u +- eps (1 - |y - c|^2 / s^2)^3_+` in frame coordinates `y`, with
/// centers `c = offset * r * e_1`, scales `s = scale * r`, and
/// `eps = eps_factor * osc(u)` over the region.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FamilySpec {
    pub replacement: bool,
    pub offsets: Vec<f64>,
    pub scales: Vec<f64>,
    pub eps_factor: f64,
}

impl Default for FamilySpec {
    fn default() -> Self {
        Self {
            replacement: true,
            offsets: vec![0.0, 0.3, -0.3],
            scales: vec![0.2, 0.4, 0.6],
            eps_factor: 0.1,
        }
    }
}

impl FamilySpec {
    pub fn size(&self) -> usize {
        usize::from(self.replacement) + 2 * self.offsets.len() * self.scales.len()
    }

    pub fn validate(&self) -> Result<()> {
        for &o in &self.offsets {
            for &s in &self.scales {
                if !(s > 0.0) || o.abs() + s >= 1.0 {
                    return Err(Error::InvalidParameter(format!(
                        "bump at offset {o} with scale {s} leaves the unit ball"
                    )));
                }
            }
        }
        if self.size() == 0 {
            return Err(Error::InvalidParameter("empty competitor family".into()));
        }
        Ok(())
    }
}

/// Bump perturbation of `u` on `region`, in the coordinates of `frame`.
fn bump(
    u: &ScalarField,
    region: &Region,
    frame: &Frame,
    center: &[f64],
    scale: f64,
    eps: f64,
) -> ScalarField {
    let grid = *u.grid();
    let mut v = u.clone();
    let m = grid.spatial_len();
    let weights: Vec<(usize, f64)> = region
        .spatial
        .iter()
        .filter_map(|&s| {
            let y = frame.to_deskewed(&grid.point(s));
            let d2: f64 = y.iter().zip(center).map(|(a, b)| (a - b).powi(2)).sum();
            let w = (1.0 - d2 / (scale * scale)).max(0.0).powi(3);
            (w > 0.0).then_some((s, w))
        })
        .collect();
    let values = v.values_mut();
    for k in region.layers.clone() {
        for &(s, w) in &weights {
            let node = k * m + s;
            let val = values[node] + eps * w;
            values[node] = if grid.is_thin(s) { val.max(0.0) } else { val };
        }
    }
    v
}

/// Builds the family on `region` (a cylinder of radius `r` in the
/// coordinates of `frame`) and returns `omega_min`, streaming competitors
/// one at a time.
#[allow(clippy::too_many_arguments)]
fn gauge_on(
    u: &ScalarField,
    region: &Region,
    frame: &Frame,
    r: f64,
    coefficients: &CoefficientField,
    family: &FamilySpec,
    solver: &SolverParams,
) -> Result<f64> {
    let grid = u.grid();
    let (lo, hi) = region
        .nodes(grid)
        .map(|node| u.get(node))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(v), b.max(v))
        });
    let osc = hi - lo;
    let eps = family.eps_factor * if osc > 0.0 { osc } else { 1.0 };
    let n = grid.n();
    let mut best: Option<f64> = None;
    let mut consider = |v: Competitor| -> Result<()> {
        let single = omega_min(u, region, std::slice::from_ref(&v), coefficients);
        match single {
            Ok(w) => best = Some(best.unwrap_or(0.0).max(w)),
            Err(Error::InsufficientData(_)) => {}
            Err(e) => return Err(e),
        }
        Ok(())
    };
    if family.replacement {
        let (field, _) = solve_region(u, region, coefficients, Constraint::ThinObstacle, solver)?;
        consider(Competitor::new(
            u,
            field,
            CompetitorKind::Replacement,
            region,
        ))?;
    }
    for &o in &family.offsets {
        for &s in &family.scales {
            let mut c = vec![0.0; n];
            c[0] = o * r;
            for sign in [1.0, -1.0] {
                let field = bump(u, region, frame, &c, s * r, sign * eps);
                consider(Competitor::new(
                    u,
                    field,
                    CompetitorKind::BumpPerturbation,
                    region,
                ))?;
            }
        }
    }
    best.ok_or_else(|| Error::InsufficientData("every competitor has zero energy".into()))
}

/// Gauge values over a set of cylinders and the fitted decay
/// `omega(r) ~ C r^alpha`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaugeReport {
    pub cylinders: Vec<(PPoint, f64)>,
    pub omega_min: Vec<f64>,
    pub fitted_alpha: f64,
    pub fitted_c: f64,
    pub fit_residual: f64,
    pub competitors_per_cylinder: usize,
}

impl GaugeReport {
    fn assemble(cylinders: Vec<(PPoint, f64)>, omega_min: Vec<f64>, per: usize) -> Result<Self> {
        let radii: Vec<f64> = cylinders.iter().map(|(_, r)| *r).collect();
        let fit = fit_exponent(&radii, &omega_min)?;
        let fitted_c = if fit.exponent.is_finite() {
            let logs: f64 = radii
                .iter()
                .zip(&omega_min)
                .map(|(r, w)| w.ln() - fit.exponent * r.ln())
                .sum();
            (logs / radii.len() as f64).exp()
        } else {
            0.0
        };
        Ok(Self {
            cylinders,
            omega_min,
            fitted_alpha: fit.exponent,
            fitted_c,
            fit_residual: fit.residual,
            competitors_per_cylinder: per,
        })
    }
}

/// `omega_min` on plain cylinders `Q_r(center)` for each radius.
pub fn certify_cylinders(
    u: &ScalarField,
    center: &PPoint,
    radii: &[f64],
    coefficients: &CoefficientField,
    family: &FamilySpec,
    solver: &SolverParams,
) -> Result<GaugeReport> {
    family.validate()?;
    let frame = Frame::identity(center.clone());
    let omega = radii
        .par_iter()
        .map(|&r| {
            let c = Cylinder::new(center.clone(), r);
            let region = crate::functionals::cylinder_region(u.grid(), &c)?;
            gauge_on(u, &region, &frame, r, coefficients, family, solver)
        })
        .collect::<Result<Vec<f64>>>()?;
    let cylinders = radii.iter().map(|&r| (center.clone(), r)).collect();
    GaugeReport::assemble(cylinders, omega, family.size())
}

/// Thin obstacle solution with drift `b` on the full grid, with boundary and
/// initial data from `Re((x_1 + i |x_n|)^{3/2})`.
pub fn drift_solution(grid: Grid, drift: DriftField, solver: &SolverParams) -> Result<ScalarField> {
    let coefficients = CoefficientField::identity(grid.n()).with_drift(drift)?;
    let data = ScalarField::from_fn(grid, |x, _| signorini_profile(x));
    crate::solve::signorini_solve(&data, &coefficients, solver)
}

/// Free boundary point on the `x_1` axis of the thin space at layer `k`: the
/// contact node (`u <= tol`) whose `+e_1` neighbour is positive, nearest the
/// origin.
pub fn free_boundary_point(u: &ScalarField, k: usize, tol: f64) -> Option<PPoint> {
    let grid = u.grid();
    let n = grid.n();
    let mid = (grid.nodes_per_axis() - 1) / 2;
    let mut idx = vec![mid; n];
    let line: Vec<usize> = (0..grid.nodes_per_axis())
        .map(|i| {
            idx[0] = i;
            grid.spatial_index(&idx)
        })
        .collect();
    let layer = u.layer(k);
    line.windows(2)
        .filter(|w| layer[w[0]] <= tol && layer[w[1]] > tol)
        .map(|w| w[0])
        .min_by_key(|&s| grid.axis_index(s, 0).abs_diff(mid))
        .map(|s| PPoint::new(grid.point(s), grid.time(k)))
}

/// Solves the drift problem and certifies it against the plain (`A = I`,
/// no drift) Signorini energy on thin cylinders centered at the free
/// boundary point at the final time.
pub fn certify_drift(
    grid: Grid,
    drift: DriftField,
    radii: &[f64],
    family: &FamilySpec,
    solver: &SolverParams,
) -> Result<GaugeReport> {
    let u = drift_solution(grid, drift, solver)?;
    let center = free_boundary_point(&u, grid.time_steps(), 1e-9)
        .ok_or_else(|| Error::InsufficientData("no free boundary point on the x_1 axis".into()))?;
    certify_cylinders(
        &u,
        &center,
        radii,
        &CoefficientField::identity(grid.n()),
        family,
        solver,
    )
}

/// `omega_min` with the coefficients frozen at `z0` (drift dropped), on the
/// elliptic cylinders `F_r(z0)`.
pub fn certify_frozen(
    u: &ScalarField,
    z0: &PPoint,
    radii: &[f64],
    coefficients: &CoefficientField,
    family: &FamilySpec,
    solver: &SolverParams,
) -> Result<GaugeReport> {
    family.validate()?;
    if !z0.on_thin_space() {
        return Err(Error::InvalidParameter(
            "frozen certification needs a thin-space center".into(),
        ));
    }
    let frame = Frame::new(&coefficients.matrix_at(&z0.x, z0.t), z0.clone())?;
    let coefficients = coefficients.frozen_at(z0);
    let omega = radii
        .par_iter()
        .map(|&r| {
            let region = EllipticCylinder::new(frame.clone(), r).nodes(u.grid())?;
            region.check_solvable(u.grid())?;
            gauge_on(u, &region, &frame, r, &coefficients, family, solver)
        })
        .collect::<Result<Vec<f64>>>()?;
    let cylinders = radii.iter().map(|&r| (z0.clone(), r)).collect();
    GaugeReport::assemble(cylinders, omega, family.size())
}

/// Deskews `u` with the frame of `A(z0)` and certifies the result on plain
/// cylinders `Q_r(0)` with identity coefficients.
pub fn certify_deskewed(
    u: &ScalarField,
    z0: &PPoint,
    radii: &[f64],
    coefficients: &CoefficientField,
    family: &FamilySpec,
    solver: &SolverParams,
) -> Result<GaugeReport> {
    let frame = Frame::new(&coefficients.matrix_at(&z0.x, z0.t), z0.clone())?;
    let outer = radii.iter().cloned().fold(0.0, f64::max);
    let deskewed = deskew(u, &frame, outer)?;
    certify_cylinders(
        &deskewed,
        &PPoint::origin(u.grid().n()),
        radii,
        &CoefficientField::identity(u.grid().n()),
        family,
        solver,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solve::signorini_solve;

    fn signorini_field(nodes: usize, steps: usize) -> ScalarField {
        let grid = Grid::new(2, nodes, steps).unwrap();
        let data = ScalarField::from_fn(grid, |x, t| {
            signorini_profile(x) + 0.3 * (t + 1.0) * x[0].max(0.0)
        });
        signorini_solve(
            &data,
            &CoefficientField::identity(2),
            &SolverParams::default(),
        )
        .unwrap()
    }

    fn region(u: &ScalarField, r: f64) -> Region {
        Cylinder::new(PPoint::origin(2), r).nodes(u.grid()).unwrap()
    }

    #[test]
    fn self_competitor_has_zero_gauge() {
        let u = signorini_field(33, 32);
        let reg = region(&u, 0.5);
        let id = CoefficientField::identity(2);
        let me = Competitor::new(&u, u.clone(), CompetitorKind::Replacement, &reg);
        let d = deficit(&u, &me, &reg, &id).unwrap();
        assert_eq!(d.p, 0.0);
        assert_eq!(d.e_u, d.e_v);
        assert_eq!(omega_min(&u, &reg, &[me], &id).unwrap(), 0.0);
    }

    #[test]
    fn minimizer_has_negligible_gauge() {
        let u = signorini_field(33, 32);
        let rep = certify_cylinders(
            &u,
            &PPoint::origin(2),
            &[0.25, 0.35, 0.5, 0.7],
            &CoefficientField::identity(2),
            &FamilySpec::default(),
            &SolverParams::default(),
        )
        .unwrap();
        assert!(
            rep.omega_min.iter().all(|&w| w <= 1e-6),
            "{:?}",
            rep.omega_min
        );
        assert_eq!(rep.competitors_per_cylinder, 19);
    }

    #[test]
    fn bumped_candidate_has_positive_deficit() {
        let u = signorini_field(33, 32);
        let reg = region(&u, 0.5);
        let id = CoefficientField::identity(2);
        let candidate = bump(
            &u,
            &reg,
            &Frame::identity(PPoint::origin(2)),
            &[0.0, 0.2],
            0.2,
            0.05,
        );
        let v = Competitor::new(&candidate, u.clone(), CompetitorKind::Replacement, &reg);
        assert!(v.admissible);
        let w = omega_min(&candidate, &reg, &[v], &id).unwrap();
        assert!(w > 0.0);
    }

    #[test]
    fn inadmissible_competitors_are_rejected() {
        let u = signorini_field(17, 16);
        let reg = region(&u, 0.5);
        let shifted = u.map(|v| v + 1.0);
        let v = Competitor::new(&u, shifted, CompetitorKind::BumpPerturbation, &reg);
        assert!(!v.admissible);
        assert!(matches!(
            deficit(&u, &v, &reg, &CoefficientField::identity(2)),
            Err(Error::Inadmissible(_))
        ));
    }

    #[test]
    fn gauge_is_monotone_in_the_family_and_shift_invariant() {
        let grid = Grid::new(2, 33, 32).unwrap();
        let data = ScalarField::from_fn(grid, signorini_like);
        let drift = CoefficientField::identity(2)
            .with_drift(DriftField::Constant(vec![1.0, 0.0]))
            .unwrap();
        let u = signorini_solve(&data, &drift, &SolverParams::default()).unwrap();
        let reg = region(&u, 0.5);
        let id = CoefficientField::identity(2);
        let frame = Frame::identity(PPoint::origin(2));
        let mut family = Vec::new();
        let mut last = 0.0;
        for (i, s) in [0.2, 0.3, 0.4].iter().enumerate() {
            let f = bump(
                &u,
                &reg,
                &frame,
                &[0.0, 0.0],
                *s,
                if i % 2 == 0 { 0.05 } else { -0.05 },
            );
            family.push(Competitor::new(
                &u,
                f,
                CompetitorKind::BumpPerturbation,
                &reg,
            ));
            let w = omega_min(&u, &reg, &family, &id).unwrap();
            assert!(w >= last);
            last = w;
        }
        let shifted_u = u.map(|v| v + 2.0);
        let shifted: Vec<Competitor> = family
            .iter()
            .map(|c| Competitor {
                field: c.field.map(|v| v + 2.0),
                ..c.clone()
            })
            .collect();
        let w = omega_min(&shifted_u, &reg, &shifted, &id).unwrap();
        assert!((w - last).abs() <= 1e-12 * (1.0 + last));
    }

    fn signorini_like(x: &[f64], _t: f64) -> f64 {
        signorini_profile(x)
    }

    #[test]
    fn frozen_identity_matches_plain() {
        let u = signorini_field(33, 32);
        let radii = [0.25, 0.35, 0.5, 0.7];
        let fam = FamilySpec::default();
        let sp = SolverParams::default();
        let plain = certify_cylinders(
            &u,
            &PPoint::origin(2),
            &radii,
            &CoefficientField::identity(2),
            &fam,
            &sp,
        )
        .unwrap();
        let frozen = certify_frozen(
            &u,
            &PPoint::origin(2),
            &radii,
            &CoefficientField::identity(2),
            &fam,
            &sp,
        )
        .unwrap();
        assert_eq!(plain.omega_min, frozen.omega_min);
    }
}
