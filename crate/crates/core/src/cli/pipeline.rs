//! Solve, analyze and certify stages and their artifacts.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{
    point, CenterName, CenterSpec, CertifyMode, ExperimentConfig, FunctionalName, FunctionalSpec,
    GridSpec, ProblemKind,
};
use super::snapshot;
use crate::analysis::{radius_ladder, regularity_report, FunctionalKind, GrowthReport};
use crate::certify::{
    certify_cylinders, certify_deskewed, certify_frozen, free_boundary_point, GaugeReport,
};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::functionals::cylinder_region;
use crate::grid::{Cylinder, PPoint};
use crate::solve::{
    complementarity, heat_solve, signorini_solve, CoefficientField, Complementarity, DriftField,
};

pub const SCHEMA_VERSION: u32 = 1;
pub const SNAPSHOT_FILE: &str = "solution.sgnl";
pub const SUMMARY_FILE: &str = "summary.json";
pub const GAUGE_FILE: &str = "gauge.csv";

/// Contact tolerance for free boundary detection.
const CONTACT_TOL: f64 = 1e-9;

/// Which stages a verb runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stages {
    pub snapshot: bool,
    pub analyze: bool,
    pub certify: bool,
}

impl Stages {
    pub const SOLVE: Self = Self {
        snapshot: true,
        analyze: false,
        certify: false,
    };
    pub const ANALYZE: Self = Self {
        snapshot: false,
        analyze: true,
        certify: false,
    };
    pub const CERTIFY: Self = Self {
        snapshot: false,
        analyze: false,
        certify: true,
    };
    pub const RUN: Self = Self {
        snapshot: true,
        analyze: true,
        certify: true,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveSummary {
    pub kind: ProblemKind,
    pub complementarity: Option<Complementarity>,
    pub snapshot: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalSummary {
    pub functional: String,
    pub centers: usize,
    pub min_exponent: f64,
    pub median_exponent: f64,
    pub max_exponent: f64,
    pub implied_holder: f64,
    pub degenerate: bool,
    pub pass: bool,
    pub csv: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertifySummary {
    pub mode: CertifyMode,
    pub center: PPoint,
    pub radii: Vec<f64>,
    pub omega_min: Vec<f64>,
    pub fitted_alpha: f64,
    pub fitted_c: f64,
    pub fit_residual: f64,
    pub competitors_per_cylinder: usize,
    pub pass: bool,
    pub csv: String,
}

/// The JSON summary written next to the reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub name: String,
    pub seed: u64,
    pub grid: GridSpec,
    pub status: Status,
    pub error: Option<String>,
    pub solve: Option<SolveSummary>,
    pub analysis: Vec<FunctionalSummary>,
    pub certify: Option<CertifySummary>,
    pub pass: bool,
}

impl Summary {
    fn new(config: &ExperimentConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            name: config.name.clone(),
            seed: config.seed,
            grid: config.grid,
            status: Status::Ok,
            error: None,
            solve: None,
            analysis: Vec::new(),
            certify: None,
            pass: true,
        }
    }
}

/// Builds the field: reads the snapshot or solves the configured problem.
pub fn solve(config: &ExperimentConfig) -> Result<ScalarField> {
    let data = match (&config.problem.snapshot, config.problem.data) {
        (Some(path), _) => snapshot::read(path)?,
        (None, Some(family)) => config.data_field(family)?,
        (None, None) => return Err(Error::Config("missing key problem.data".into())),
    };
    let coefficients = config.solve_coefficients()?;
    match config.problem.kind {
        ProblemKind::ClosedForm => Ok(data),
        ProblemKind::Caloric => heat_solve(&data, &coefficients, &config.solver),
        _ => signorini_solve(&data, &coefficients, &config.solver),
    }
}

fn resolve_center(u: &ScalarField, c: &CenterSpec) -> Result<PPoint> {
    let grid = u.grid();
    match c {
        CenterSpec::Named(CenterName::Origin) => Ok(PPoint::origin(grid.n())),
        CenterSpec::Named(CenterName::FreeBoundary) => {
            free_boundary_point(u, grid.time_steps(), CONTACT_TOL).ok_or_else(|| {
                Error::InsufficientData("no free boundary point on the thin x_1 axis".into())
            })
        }
        CenterSpec::Point(p) => point(p, grid.n()),
    }
}

/// Draws `count` grid nodes whose cylinder of radius `r_max` fits.
fn random_centers(u: &ScalarField, r_max: f64, count: usize, seed: u64) -> Result<Vec<PPoint>> {
    let grid = u.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count * 1000 {
        if out.len() == count {
            break;
        }
        let node = rng.gen_range(0..grid.len());
        let p = grid.ppoint(node);
        if cylinder_region(grid, &Cylinder::new(p.clone(), r_max)).is_ok() && !out.contains(&p) {
            out.push(p);
        }
    }
    if out.len() < count {
        return Err(Error::InsufficientData(format!(
            "only {} of {count} random centers fit radius {r_max}",
            out.len()
        )));
    }
    Ok(out)
}

fn functional_kind(spec: &FunctionalSpec) -> FunctionalKind {
    match spec.kind {
        FunctionalName::Phi => FunctionalKind::Phi,
        FunctionalName::Dirichlet => FunctionalKind::Dirichlet,
        FunctionalName::CampanatoGrad => FunctionalKind::CampanatoGrad {
            even_extension: spec.even_extension,
        },
        FunctionalName::MeanOsc => FunctionalKind::MeanOsc,
    }
}

fn file_stem(kind: FunctionalKind) -> String {
    match kind {
        FunctionalKind::CampanatoGrad {
            even_extension: true,
        } => "campanato_grad_even".into(),
        k => k.name().into(),
    }
}

fn within(x: f64, lo: Option<f64>, hi: Option<f64>) -> bool {
    lo.is_none_or(|l| x >= l) && hi.is_none_or(|h| x <= h)
}

fn center_header(n: usize) -> Vec<String> {
    (1..=n)
        .map(|d| format!("center_x{d}"))
        .chain(["center_t".to_string()])
        .collect()
}

fn center_fields(p: &PPoint) -> impl Iterator<Item = String> + '_ {
    p.x.iter().chain([&p.t]).map(|v| v.to_string())
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// CSV columns: `center_x1..center_xn, center_t, radius, value,
/// fitted_exponent, residual`.
fn write_growth_csv(path: &Path, n: usize, reports: &[GrowthReport]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    let mut header = center_header(n);
    header.extend(["radius", "value", "fitted_exponent", "residual"].map(String::from));
    w.write_record(&header).map_err(csv_error)?;
    for r in reports {
        for (radius, value) in r.radii.iter().zip(&r.values) {
            let row: Vec<String> = center_fields(&r.center)
                .chain([radius, value, &r.fitted_exponent, &r.fit_residual].map(|v| v.to_string()))
                .collect();
            w.write_record(&row).map_err(csv_error)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// CSV columns: `center_x1..center_xn, center_t, radius, omega_min,
/// fitted_alpha, fitted_c, residual`.
fn write_gauge_csv(path: &Path, n: usize, report: &GaugeReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    let mut header = center_header(n);
    header.extend(
        [
            "radius",
            "omega_min",
            "fitted_alpha",
            "fitted_c",
            "residual",
        ]
        .map(String::from),
    );
    w.write_record(&header).map_err(csv_error)?;
    for ((center, radius), omega) in report.cylinders.iter().zip(&report.omega_min) {
        let row: Vec<String> = center_fields(center)
            .chain(
                [
                    radius,
                    omega,
                    &report.fitted_alpha,
                    &report.fitted_c,
                    &report.fit_residual,
                ]
                .map(|v| v.to_string()),
            )
            .collect();
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn analyze(
    u: &ScalarField,
    config: &ExperimentConfig,
    out: &Path,
    summary: &mut Summary,
) -> Result<()> {
    let Some(spec) = &config.analysis else {
        return Ok(());
    };
    let radii = radius_ladder(spec.radii.min, spec.radii.max, spec.radii.steps_per_octave)?;
    let mut centers = spec
        .centers
        .iter()
        .map(|c| resolve_center(u, c))
        .collect::<Result<Vec<_>>>()?;
    centers.extend(random_centers(
        u,
        spec.radii.max,
        spec.random_centers,
        config.seed,
    )?);
    let n = u.grid().n();
    for f in &spec.functionals {
        let kind = functional_kind(f);
        let report = regularity_report(u, &centers, kind, &radii)?;
        let csv = format!("growth_{}.csv", file_stem(kind));
        write_growth_csv(&out.join(&csv), n, &report.reports)?;
        let finite = report
            .reports
            .iter()
            .map(|r| r.fitted_exponent)
            .filter(|e| e.is_finite());
        let max_exponent = finite.fold(f64::NEG_INFINITY, f64::max);
        let s = &report.summary;
        let exponents_ok = report
            .reports
            .iter()
            .all(|r| within(r.fitted_exponent, f.min_exponent, f.max_exponent));
        let holder_ok = within(s.implied_holder, f.min_holder, f.max_holder);
        let pass = exponents_ok && holder_ok;
        summary.pass &= pass;
        summary.analysis.push(FunctionalSummary {
            functional: file_stem(kind),
            centers: centers.len(),
            min_exponent: s.min_exponent,
            median_exponent: s.median_exponent,
            max_exponent: if s.degenerate {
                f64::INFINITY
            } else {
                max_exponent
            },
            implied_holder: s.implied_holder,
            degenerate: s.degenerate,
            pass,
            csv,
        });
    }
    Ok(())
}

fn certify(
    u: &ScalarField,
    config: &ExperimentConfig,
    out: &Path,
    summary: &mut Summary,
) -> Result<()> {
    let Some(spec) = &config.certify else {
        return Ok(());
    };
    let radii = radius_ladder(spec.radii.min, spec.radii.max, spec.radii.steps_per_octave)?;
    let center = resolve_center(u, &spec.center)?;
    let coefficients = config.coefficient_field()?;
    let report = match spec.mode {
        CertifyMode::Plain => {
            let plain = CoefficientField::new(
                coefficients.n(),
                coefficients.matrix().clone(),
                DriftField::Zero,
            )?;
            certify_cylinders(u, &center, &radii, &plain, &spec.family, &config.solver)?
        }
        CertifyMode::Frozen => certify_frozen(
            u,
            &center,
            &radii,
            &coefficients,
            &spec.family,
            &config.solver,
        )?,
        CertifyMode::Deskewed => certify_deskewed(
            u,
            &center,
            &radii,
            &coefficients,
            &spec.family,
            &config.solver,
        )?,
    };
    write_gauge_csv(&out.join(GAUGE_FILE), u.grid().n(), &report)?;
    let worst = report.omega_min.iter().cloned().fold(0.0, f64::max);
    let pass = spec.min_alpha.is_none_or(|a| report.fitted_alpha >= a)
        && spec.max_omega.is_none_or(|m| worst <= m);
    summary.pass &= pass;
    summary.certify = Some(CertifySummary {
        mode: spec.mode,
        center,
        radii,
        omega_min: report.omega_min,
        fitted_alpha: report.fitted_alpha,
        fitted_c: report.fitted_c,
        fit_residual: report.fit_residual,
        competitors_per_cylinder: report.competitors_per_cylinder,
        pass,
        csv: GAUGE_FILE.into(),
    });
    Ok(())
}

fn stages(
    config: &ExperimentConfig,
    stages: Stages,
    out: &Path,
    summary: &mut Summary,
) -> Result<()> {
    let u = solve(config)?;
    let thin = match config.problem.kind {
        ProblemKind::Signorini | ProblemKind::SignoriniA | ProblemKind::SignoriniDrift => {
            Some(complementarity(&u, &u.grid().interior_region()))
        }
        _ => None,
    };
    let mut snap = None;
    if stages.snapshot {
        snapshot::write(&out.join(SNAPSHOT_FILE), &u)?;
        snap = Some(SNAPSHOT_FILE.to_string());
    }
    summary.solve = Some(SolveSummary {
        kind: config.problem.kind,
        complementarity: thin,
        snapshot: snap,
    });
    if stages.analyze {
        analyze(&u, config, out, summary)?;
    }
    if stages.certify {
        certify(&u, config, out, summary)?;
    }
    Ok(())
}

/// Runs `stages` and writes the summary to `out`. Failures are recorded in
/// the summary (status `failed`, partial artifacts kept) before the error is
/// returned.
pub fn run(config: &ExperimentConfig, which: Stages, out: &Path) -> Result<Summary> {
    std::fs::create_dir_all(out)?;
    let mut summary = Summary::new(config);
    let result = stages(config, which, out, &mut summary);
    if let Err(e) = &result {
        summary.status = Status::Failed;
        summary.error = Some(e.to_string());
        summary.pass = false;
    }
    write_summary(&out.join(SUMMARY_FILE), &summary)?;
    result.map(|_| summary)
}

pub fn write_summary(path: &Path, summary: &Summary) -> Result<()> {
    let mut text = serde_json::to_string_pretty(summary).map_err(|e| Error::Io(e.into()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
