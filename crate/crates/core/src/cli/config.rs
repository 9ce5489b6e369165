//! Experiment configuration, read from TOML.
//!
//! ```toml
//! name = "caloric_phi"
//! seed = 7
//!
//! [grid]
//! n = 2
//! nodes = 257
//! time_steps = 256
//!
//! [problem]
//! kind = "caloric"
//! data = "x1_squared_plus_2t"
//!
//! [analysis]
//! radii = { min = 0.0625, max = 0.25 }
//! random_centers = 5
//!
//! [[analysis.functional]]
//! kind = "phi"
//! min_exponent = 9.85
//! max_exponent = 10.15
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::certify::FamilySpec;
use crate::error::{Error, Result};
use crate::geometry::{Frame, SpdMatrix};
use crate::grid::{Grid, PPoint};
use crate::solve::{signorini_profile, CoefficientField, DriftField, MatrixField, SolverParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    /// Expected wall-clock budget, reported when exceeded.
    #[serde(default)]
    pub budget_seconds: Option<f64>,
    pub grid: GridSpec,
    pub problem: ProblemSpec,
    #[serde(default)]
    pub coefficients: CoefficientSpec,
    #[serde(default)]
    pub solver: SolverParams,
    #[serde(default)]
    pub analysis: Option<AnalysisSpec>,
    #[serde(default)]
    pub certify: Option<CertifySpec>,
}

fn default_name() -> String {
    "experiment".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: usize,
    pub nodes: usize,
    pub time_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    /// Heat equation with the configured coefficients.
    Caloric,
    /// Thin obstacle problem with `A = I`, no drift.
    Signorini,
    /// Thin obstacle problem with the configured matrix field.
    SignoriniA,
    /// Thin obstacle problem with `A = I` and the configured drift.
    SignoriniDrift,
    /// No solve: the data itself is the field.
    ClosedForm,
}

/// Closed-form data families, used as boundary and initial data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DataFamily {
    #[serde(rename = "zero")]
    Zero,
    #[serde(rename = "one")]
    One,
    #[serde(rename = "x1")]
    X1,
    #[serde(rename = "x1_squared_plus_2t")]
    X1SquaredPlus2t,
    #[serde(rename = "x1_squared_minus_x2_squared")]
    X1SquaredMinusX2Squared,
    /// `Re((x_1 + i |x_n|)^{3/2})`.
    #[serde(rename = "signorini_profile")]
    SignoriniProfile,
    /// The profile composed with the deskewing frame of `A` at the origin.
    #[serde(rename = "deskewed_signorini_profile")]
    DeskewedSignoriniProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    #[serde(default)]
    pub data: Option<DataFamily>,
    /// Snapshot supplying the data instead of a closed form; relative paths
    /// are resolved against the config file.
    #[serde(default)]
    pub snapshot: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSpec {
    #[serde(default)]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub lattice_frame: Option<Vec<Vec<i32>>>,
    #[serde(default)]
    pub holder: Option<HolderSpec>,
    #[serde(default)]
    pub drift: Option<DriftSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolderSpec {
    pub base: Vec<Vec<f64>>,
    pub amplitude: f64,
    pub alpha: f64,
    /// `[x_1, ..., x_n, t]`.
    pub center: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftSpec {
    Constant {
        value: Vec<f64>,
    },
    /// `magnitude * min(|x - center|^(-n/p), cap) * direction`.
    Singular {
        p: f64,
        magnitude: f64,
        #[serde(default = "default_cap")]
        cap: f64,
        direction: Vec<f64>,
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
}

fn default_cap() -> f64 {
    1e3
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadiusSpec {
    pub min: f64,
    pub max: f64,
    #[serde(default = "default_steps")]
    pub steps_per_octave: u32,
}

fn default_steps() -> u32 {
    2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalName {
    Phi,
    Dirichlet,
    CampanatoGrad,
    MeanOsc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalSpec {
    pub kind: FunctionalName,
    #[serde(default)]
    pub even_extension: bool,
    #[serde(default)]
    pub min_exponent: Option<f64>,
    #[serde(default)]
    pub max_exponent: Option<f64>,
    /// Bounds on the Holder exponent implied by the smallest fitted exponent.
    #[serde(default)]
    pub min_holder: Option<f64>,
    #[serde(default)]
    pub max_holder: Option<f64>,
}

/// A center given by name or as `[x_1, ..., x_n, t]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CenterSpec {
    Named(CenterName),
    Point(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CenterName {
    /// The spatial origin at the final time.
    Origin,
    /// The free boundary point on the thin `x_1` axis at the final time.
    FreeBoundary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSpec {
    pub radii: RadiusSpec,
    #[serde(default)]
    pub centers: Vec<CenterSpec>,
    /// Extra centers drawn from the seed among nodes whose largest cylinder
    /// fits in the grid.
    #[serde(default)]
    pub random_centers: usize,
    #[serde(rename = "functional")]
    pub functionals: Vec<FunctionalSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertifyMode {
    /// Plain cylinders with the configured matrix field (drift excluded).
    Plain,
    /// Coefficients frozen at the center, elliptic cylinders.
    Frozen,
    /// Deskewed field, plain cylinders, identity coefficients.
    Deskewed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifySpec {
    pub mode: CertifyMode,
    #[serde(default = "default_center")]
    pub center: CenterSpec,
    pub radii: RadiusSpec,
    #[serde(default)]
    pub family: FamilySpec,
    #[serde(default)]
    pub min_alpha: Option<f64>,
    #[serde(default)]
    pub max_omega: Option<f64>,
}

fn default_center() -> CenterSpec {
    CenterSpec::Named(CenterName::Origin)
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Loads `path`, resolving relative snapshot paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_toml(&text)
            .map_err(|e| Error::Config(format!("{}: {}", path.display(), strip(e))))?;
        if let Some(snap) = &mut config.problem.snapshot {
            if snap.is_relative() {
                *snap = path.parent().unwrap_or(Path::new(".")).join(&*snap);
            }
            if !snap.exists() {
                return Err(Error::Config(format!(
                    "problem.snapshot {} does not exist",
                    snap.display()
                )));
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.grid.n;
        self.grid()?;
        self.solver.validate()?;
        let c = &self.coefficients;
        if let Some(h) = &c.holder {
            if !(h.alpha > 0.0 && h.alpha < 1.0) {
                return Err(Error::Config(format!(
                    "coefficients.holder.alpha = {} must lie in (0, 1)",
                    h.alpha
                )));
            }
        }
        if let Some(DriftSpec::Singular { p, .. }) = &c.drift {
            if !(*p > n as f64) {
                return Err(Error::Config(format!(
                    "coefficients.drift.p = {p} must exceed n = {n}"
                )));
            }
        }
        if [
            c.matrix.is_some(),
            c.lattice_frame.is_some(),
            c.holder.is_some(),
        ]
        .iter()
        .filter(|&&b| b)
        .count()
            > 1
        {
            return Err(Error::Config(
                "at most one of coefficients.matrix, lattice_frame, holder".into(),
            ));
        }
        self.coefficient_field()?;
        match self.problem.kind {
            ProblemKind::SignoriniA if self.matrix_field().is_none() => {
                return Err(Error::Config(
                    "problem.kind = signorini_a needs a coefficient matrix".into(),
                ))
            }
            ProblemKind::SignoriniDrift if c.drift.is_none() => {
                return Err(Error::Config(
                    "problem.kind = signorini_drift needs coefficients.drift".into(),
                ))
            }
            _ => {}
        }
        match (&self.problem.data, &self.problem.snapshot) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "problem.data and problem.snapshot are exclusive".into(),
                ))
            }
            (None, None) => {
                return Err(Error::Config(
                    "missing key problem.data (or problem.snapshot)".into(),
                ))
            }
            _ => {}
        }
        if let Some(a) = &self.analysis {
            check_radii(&a.radii, "analysis.radii")?;
            if a.functionals.is_empty() {
                return Err(Error::Config(
                    "analysis needs at least one [[analysis.functional]]".into(),
                ));
            }
            if a.centers.is_empty() && a.random_centers == 0 {
                return Err(Error::Config(
                    "analysis needs centers or random_centers".into(),
                ));
            }
            for c in &a.centers {
                check_center(c, n)?;
            }
        }
        if let Some(c) = &self.certify {
            check_radii(&c.radii, "certify.radii")?;
            check_center(&c.center, n)?;
            c.family.validate()?;
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.n, self.grid.nodes, self.grid.time_steps)
            .map_err(|e| Error::Config(format!("grid: {e}")))
    }

    fn matrix_field(&self) -> Option<Result<MatrixField>> {
        let c = &self.coefficients;
        if let Some(m) = &c.matrix {
            return Some(SpdMatrix::from_rows(m).map(MatrixField::Constant));
        }
        if let Some(f) = &c.lattice_frame {
            return Some(CoefficientField::lattice_frame(f.clone()).map(|c| c.matrix().clone()));
        }
        c.holder.as_ref().map(|h| {
            let base = SpdMatrix::from_rows(&h.base)?;
            let center = point(&h.center, self.grid.n)?;
            Ok(MatrixField::Holder {
                base,
                amplitude: h.amplitude,
                alpha: h.alpha,
                center,
            })
        })
    }

    fn drift_field(&self) -> DriftField {
        let n = self.grid.n;
        match &self.coefficients.drift {
            None => DriftField::Zero,
            Some(DriftSpec::Constant { value }) => DriftField::Constant(value.clone()),
            Some(DriftSpec::Singular {
                p,
                magnitude,
                cap,
                direction,
                center,
            }) => DriftField::Singular {
                p: *p,
                magnitude: *magnitude,
                cap: *cap,
                direction: direction.clone(),
                center: center.clone().unwrap_or_else(|| vec![0.0; n]),
            },
        }
    }

    /// Every configured coefficient, matrix and drift.
    pub fn coefficient_field(&self) -> Result<CoefficientField> {
        let n = self.grid.n;
        let matrix = self
            .matrix_field()
            .transpose()?
            .unwrap_or(MatrixField::Identity);
        CoefficientField::new(n, matrix, self.drift_field())
            .map_err(|e| Error::Config(format!("coefficients: {e}")))
    }

    /// The coefficients the configured problem kind solves with.
    pub fn solve_coefficients(&self) -> Result<CoefficientField> {
        let n = self.grid.n;
        Ok(match self.problem.kind {
            ProblemKind::Signorini => CoefficientField::identity(n),
            ProblemKind::SignoriniDrift => {
                CoefficientField::identity(n).with_drift(self.drift_field())?
            }
            _ => self.coefficient_field()?,
        })
    }

    /// Evaluates the closed-form data family on the grid.
    pub fn data_field(&self, family: DataFamily) -> Result<crate::field::ScalarField> {
        use crate::field::ScalarField;
        let grid = self.grid()?;
        let n = grid.n();
        Ok(match family {
            DataFamily::Zero => ScalarField::zeros(grid),
            DataFamily::One => ScalarField::from_fn(grid, |_, _| 1.0),
            DataFamily::X1 => ScalarField::from_fn(grid, |x, _| x[0]),
            DataFamily::X1SquaredPlus2t => ScalarField::from_fn(grid, |x, t| x[0] * x[0] + 2.0 * t),
            DataFamily::X1SquaredMinusX2Squared => {
                ScalarField::from_fn(grid, |x, _| x[0] * x[0] - x[1] * x[1])
            }
            DataFamily::SignoriniProfile => ScalarField::from_fn(grid, |x, _| signorini_profile(x)),
            DataFamily::DeskewedSignoriniProfile => {
                let a = self.coefficient_field()?.matrix_at(&vec![0.0; n], 0.0);
                let frame = Frame::new(&a, PPoint::origin(n))?;
                ScalarField::from_fn(grid, |x, _| signorini_profile(&frame.to_deskewed(x)))
            }
        })
    }
}

fn strip(e: Error) -> String {
    match e {
        Error::Config(m) => m,
        e => e.to_string(),
    }
}

fn check_radii(r: &RadiusSpec, key: &str) -> Result<()> {
    if !(r.min > 0.0 && r.max >= r.min && r.steps_per_octave >= 1) {
        return Err(Error::Config(format!(
            "{key}: need 0 < min <= max and steps_per_octave >= 1"
        )));
    }
    Ok(())
}

fn check_center(c: &CenterSpec, n: usize) -> Result<()> {
    match c {
        CenterSpec::Named(_) => Ok(()),
        CenterSpec::Point(p) => point(p, n).map(|_| ()),
    }
}

pub(crate) fn point(p: &[f64], n: usize) -> Result<PPoint> {
    if p.len() != n + 1 {
        return Err(Error::Config(format!(
            "center {p:?} must list n = {n} coordinates and a time"
        )));
    }
    Ok(PPoint::new(p[..n].to_vec(), p[n]))
}
