use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::SpdMatrix;
use crate::grid::{parabolic_distance, Grid, PPoint};

/// The diffusion matrix `A(x, t)`.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixField {
    Identity,
    Constant(SpdMatrix),
    /// Constant `A = F F^T` for an integer matrix `F` (row-major) with
    /// entries in `{-1, 0, 1}` and `|det F| = 1`, discretized on the lattice
    /// cells spanned by the columns of `F` so that `x = F y` maps the
    /// discrete energy of `A` onto the identity energy exactly.
    LatticeFrame {
        frame: Vec<Vec<i32>>,
        matrix: SpdMatrix,
    },
    /// `A(z) = base + amplitude * min(1, d(z, center))^alpha * I`.
    Holder {
        base: SpdMatrix,
        amplitude: f64,
        alpha: f64,
        center: PPoint,
    },
}

/// The drift `b(x, t)`.
#[derive(Debug, Clone, PartialEq)]
pub enum DriftField {
    Zero,
    Constant(Vec<f64>),
    /// `b(x) = magnitude * min(|x - center|^(-n/p), cap) * direction`, a
    /// field in `L^p` with a capped point singularity.
    Singular {
        p: f64,
        magnitude: f64,
        cap: f64,
        direction: Vec<f64>,
        center: Vec<f64>,
    },
}

/// Coefficients of `div(A grad u) + b . grad u - d_t u = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    n: usize,
    matrix: MatrixField,
    drift: DriftField,
}

impl CoefficientField {
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            matrix: MatrixField::Identity,
            drift: DriftField::Zero,
        }
    }

    pub fn constant(a: SpdMatrix) -> Self {
        Self {
            n: a.n(),
            matrix: MatrixField::Constant(a),
            drift: DriftField::Zero,
        }
    }

    /// `A = F F^T` discretized along the lattice frame `F`.
    pub fn lattice_frame(frame: Vec<Vec<i32>>) -> Result<Self> {
        let n = frame.len();
        if frame.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidParameter(
                "lattice frame must be square".into(),
            ));
        }
        if frame.iter().flatten().any(|v| v.abs() > 1) {
            return Err(Error::InvalidParameter(
                "lattice frame entries must lie in {-1, 0, 1}".into(),
            ));
        }
        let f = nalgebra::DMatrix::from_fn(n, n, |i, j| frame[i][j] as f64);
        if (f.determinant().abs() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(
                "lattice frame must be unimodular".into(),
            ));
        }
        let matrix = SpdMatrix::new(&f * f.transpose())?;
        Ok(Self {
            n,
            matrix: MatrixField::LatticeFrame { frame, matrix },
            drift: DriftField::Zero,
        })
    }

    pub fn new(n: usize, matrix: MatrixField, drift: DriftField) -> Result<Self> {
        match &matrix {
            MatrixField::Identity => {}
            MatrixField::Constant(a) => check_dim(n, a.n(), "matrix")?,
            MatrixField::LatticeFrame { frame, .. } => check_dim(n, frame.len(), "lattice frame")?,
            MatrixField::Holder {
                base,
                amplitude,
                alpha,
                center,
            } => {
                check_dim(n, base.n(), "matrix")?;
                check_dim(n, center.n(), "matrix center")?;
                if !(*amplitude >= 0.0 && amplitude.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "amplitude {amplitude} must be >= 0"
                    )));
                }
                if !(*alpha > 0.0 && *alpha <= 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "alpha {alpha} must lie in (0, 1]"
                    )));
                }
            }
        }
        match &drift {
            DriftField::Zero => {}
            DriftField::Constant(b) => check_dim(n, b.len(), "drift")?,
            DriftField::Singular {
                p,
                magnitude,
                cap,
                direction,
                center,
            } => {
                check_dim(n, direction.len(), "drift direction")?;
                check_dim(n, center.len(), "drift center")?;
                if !(*p > n as f64) {
                    return Err(Error::InvalidParameter(format!(
                        "drift exponent p = {p} must exceed n = {n}"
                    )));
                }
                if !(magnitude.is_finite() && *cap > 0.0 && cap.is_finite()) {
                    return Err(Error::InvalidParameter(
                        "drift magnitude and cap must be finite, cap > 0".into(),
                    ));
                }
            }
        }
        Ok(Self { n, matrix, drift })
    }

    pub fn with_drift(self, drift: DriftField) -> Result<Self> {
        Self::new(self.n, self.matrix, drift)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &MatrixField {
        &self.matrix
    }

    pub fn drift(&self) -> &DriftField {
        &self.drift
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.matrix, MatrixField::Identity) && !self.has_drift()
    }

    pub fn has_drift(&self) -> bool {
        !matches!(self.drift, DriftField::Zero)
    }

    /// True when `A` does not depend on the point.
    pub fn matrix_is_constant(&self) -> bool {
        !matches!(self.matrix, MatrixField::Holder { .. })
    }

    /// True when neither `A` nor `b` depends on the point.
    pub fn is_uniform(&self) -> bool {
        self.matrix_is_constant() && !matches!(self.drift, DriftField::Singular { .. })
    }

    /// Holder exponent of `A`, if it varies.
    pub fn alpha(&self) -> Option<f64> {
        match &self.matrix {
            MatrixField::Holder { alpha, .. } => Some(*alpha),
            _ => None,
        }
    }

    /// Writes `A(x, t)` row-major into `out` (length `n^2`).
    pub fn matrix_into(&self, x: &[f64], t: f64, out: &mut [f64]) {
        let n = self.n;
        match &self.matrix {
            MatrixField::Identity => {
                out.fill(0.0);
                for d in 0..n {
                    out[d * n + d] = 1.0;
                }
            }
            MatrixField::Constant(a) | MatrixField::LatticeFrame { matrix: a, .. } => {
                copy_matrix(a, out)
            }
            MatrixField::Holder {
                base,
                amplitude,
                alpha,
                center,
            } => {
                copy_matrix(base, out);
                let d = parabolic_distance(&PPoint::new(x.to_vec(), t), center);
                let bump = amplitude * d.min(1.0).powf(*alpha);
                for i in 0..n {
                    out[i * n + i] += bump;
                }
            }
        }
    }

    pub fn matrix_at(&self, x: &[f64], t: f64) -> SpdMatrix {
        let mut out = vec![0.0; self.n * self.n];
        self.matrix_into(x, t, &mut out);
        let rows: Vec<Vec<f64>> = out.chunks(self.n).map(|r| r.to_vec()).collect();
        SpdMatrix::from_rows(&rows).expect("coefficient matrices are SPD by construction")
    }

    /// Writes `b(x, t)` into `out` (length `n`).
    pub fn drift_into(&self, x: &[f64], _t: f64, out: &mut [f64]) {
        match &self.drift {
            DriftField::Zero => out.fill(0.0),
            DriftField::Constant(b) => out.copy_from_slice(b),
            DriftField::Singular {
                p,
                magnitude,
                cap,
                direction,
                center,
            } => {
                let r = x
                    .iter()
                    .zip(center)
                    .map(|(a, c)| (a - c) * (a - c))
                    .sum::<f64>()
                    .sqrt();
                let size = if r == 0.0 {
                    *cap
                } else {
                    r.powf(-(self.n as f64) / p).min(*cap)
                };
                for (o, d) in out.iter_mut().zip(direction) {
                    *o = magnitude * size * d;
                }
            }
        }
    }

    /// Ellipticity bounds `(lambda, Lambda)` with `0 < lambda <= 1 <= Lambda`.
    pub fn ellipticity_bounds(&self) -> (f64, f64) {
        let (lo, hi) = match &self.matrix {
            MatrixField::Identity => (1.0, 1.0),
            MatrixField::Constant(a) | MatrixField::LatticeFrame { matrix: a, .. } => {
                a.spectrum_bounds()
            }
            MatrixField::Holder {
                base, amplitude, ..
            } => {
                let (lo, hi) = base.spectrum_bounds();
                (lo, hi + amplitude)
            }
        };
        (lo.min(1.0), hi.max(1.0))
    }

    /// The coefficients frozen at `z`: constant `A(z)`, no drift.
    pub fn frozen_at(&self, z: &PPoint) -> Self {
        match &self.matrix {
            MatrixField::Holder { .. } => Self::constant(self.matrix_at(&z.x, z.t)),
            m => Self {
                n: self.n,
                matrix: m.clone(),
                drift: DriftField::Zero,
            },
        }
    }

    /// Integer frame of a [`MatrixField::LatticeFrame`].
    pub fn lattice(&self) -> Option<&[Vec<i32>]> {
        match &self.matrix {
            MatrixField::LatticeFrame { frame, .. } => Some(frame),
            _ => None,
        }
    }

    /// Samples `A` at random grid nodes and checks
    /// `lambda |xi|^2 <= <A xi, xi> <= Lambda |xi|^2` on random directions.
    pub fn check_ellipticity(&self, grid: &Grid, samples: usize, seed: u64) -> Result<()> {
        let (lambda, big) = self.ellipticity_bounds();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.n;
        let mut a = vec![0.0; n * n];
        for _ in 0..samples {
            let p = grid.ppoint(rng.gen_range(0..grid.len()));
            self.matrix_into(&p.x, p.t, &mut a);
            let xi: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm2: f64 = xi.iter().map(|v| v * v).sum();
            let q: f64 = (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .map(|(i, j)| a[i * n + j] * xi[i] * xi[j])
                .sum();
            let slack = 1e-12 * norm2;
            if q < lambda * norm2 - slack || q > big * norm2 + slack {
                return Err(Error::NotSpd(format!("ellipticity fails at {:?}", p)));
            }
        }
        Ok(())
    }
}

fn check_dim(n: usize, got: usize, what: &str) -> Result<()> {
    if n == got {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{what} has dimension {got}, expected {n}"
        )))
    }
}

fn copy_matrix(a: &SpdMatrix, out: &mut [f64]) {
    let n = a.n();
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = a.matrix()[(i, j)];
        }
    }
}
