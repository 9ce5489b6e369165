//! Frozen-coefficient coordinates: `A^{1/2}`, the rotation that keeps the thin
//! space flat, ellipsoidal cylinders and the deskewing change of variables
//! `u(x, t) = U(a_bar x + x0, t + t0)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::{for_each_index, Grid, PPoint, Region, MEMBERSHIP_EPS};

const SYMMETRY_TOL: f64 = 1e-12;

/// A symmetric positive definite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix(DMatrix<f64>);

impl SpdMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSpd(format!(
                "{}x{} is not square",
                m.nrows(),
                m.ncols()
            )));
        }
        let scale = m.amax().max(1.0);
        for i in 0..m.nrows() {
            for j in 0..i {
                if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::NotSpd(format!(
                        "entries ({i},{j}) and ({j},{i}) differ"
                    )));
                }
            }
        }
        let m = (&m + m.transpose()) * 0.5;
        let min = m.clone().symmetric_eigenvalues().min();
        if !(min > 0.0) {
            return Err(Error::NotSpd(format!("smallest eigenvalue {min:e}")));
        }
        Ok(Self(m))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::NotSpd("rows of unequal length".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(DMatrix::from_row_slice(n, n, &flat))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn eigenvalues(&self) -> DVector<f64> {
        self.0.clone().symmetric_eigenvalues()
    }

    /// Smallest and largest eigenvalue.
    pub fn spectrum_bounds(&self) -> (f64, f64) {
        let ev = self.eigenvalues();
        (ev.min(), ev.max())
    }

    pub fn det(&self) -> f64 {
        self.0.determinant()
    }

    pub fn quad(&self, xi: &[f64]) -> f64 {
        let v = DVector::from_column_slice(xi);
        v.dot(&(&self.0 * &v))
    }
}

/// Symmetric eigendecomposition with one refinement pass: `SymmetricEigen`
/// alone can leave off-diagonal residue near 1e-10 when eigenvalues cluster,
/// and re-diagonalizing `Q^T A Q` removes it.
fn refined_eigen(a: &DMatrix<f64>) -> SymmetricEigen<f64, nalgebra::Dyn> {
    let first = SymmetricEigen::new(a.clone());
    let b = first.eigenvectors.transpose() * a * &first.eigenvectors;
    let second = SymmetricEigen::new((&b + b.transpose()) * 0.5);
    SymmetricEigen {
        eigenvectors: &first.eigenvectors * second.eigenvectors,
        eigenvalues: second.eigenvalues,
    }
}

/// Principal square root via the symmetric eigendecomposition.
pub fn spd_sqrt(a: &SpdMatrix) -> SpdMatrix {
    let eig = refined_eigen(&a.0);
    let root = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let q = &eig.eigenvectors;
    let m = q * DMatrix::from_diagonal(&root) * q.transpose();
    SpdMatrix((&m + m.transpose()) * 0.5)
}

/// The minimal rotation taking `e_n` to `a e_n / |a e_n|`.
///
/// With `O` this rotation, `a O` maps `{x_n = 0}` onto itself, so the
/// deskewing map keeps the thin space flat. `<a e_n, e_n> > 0` for SPD `a`,
/// so the two directions are never antipodal.
pub fn align_rotation(a: &SpdMatrix) -> DMatrix<f64> {
    let n = a.n();
    let mut e = DVector::zeros(n);
    e[n - 1] = 1.0;
    let target = a.matrix() * &e;
    let target = &target / target.norm();
    rotation_between(&e, &target)
}

/// Rotation `I + K + K^2 / (1 + <from, to>)`, `K = to from^T - from to^T`.
fn rotation_between(from: &DVector<f64>, to: &DVector<f64>) -> DMatrix<f64> {
    let n = from.len();
    let k = to * from.transpose() - from * to.transpose();
    let c = from.dot(to);
    DMatrix::identity(n, n) + &k + (&k * &k) / (1.0 + c)
}

/// Deskewing frame at a point `z0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    /// `A^{1/2}(z0)`.
    pub sqrt: SpdMatrix,
    pub rotation: DMatrix<f64>,
    /// `A^{1/2}(z0) O`.
    pub a_bar: DMatrix<f64>,
    a_bar_inv: DMatrix<f64>,
    pub center: PPoint,
}

impl Frame {
    pub fn new(a: &SpdMatrix, center: PPoint) -> Result<Self> {
        if a.n() != center.n() {
            return Err(Error::InvalidParameter(
                "matrix and center dimensions differ".into(),
            ));
        }
        let sqrt = spd_sqrt(a);
        let rotation = align_rotation(&sqrt);
        let a_bar = sqrt.matrix() * &rotation;
        let a_bar_inv = a_bar
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::NotSpd("singular frame".into()))?;
        Ok(Self {
            sqrt,
            rotation,
            a_bar,
            a_bar_inv,
            center,
        })
    }

    pub fn identity(center: PPoint) -> Self {
        let n = center.n();
        Self {
            sqrt: SpdMatrix::identity(n),
            rotation: DMatrix::identity(n, n),
            a_bar: DMatrix::identity(n, n),
            a_bar_inv: DMatrix::identity(n, n),
            center,
        }
    }

    pub fn n(&self) -> usize {
        self.center.n()
    }

    /// `det A^{1/2}(z0)`, the Jacobian of the deskewing map.
    pub fn jacobian(&self) -> f64 {
        self.sqrt.det()
    }

    /// `a_bar y + x0`.
    pub fn to_physical(&self, y: &[f64]) -> Vec<f64> {
        let v = &self.a_bar * DVector::from_column_slice(y);
        v.iter().zip(&self.center.x).map(|(a, b)| a + b).collect()
    }

    /// `a_bar^{-1} (x - x0)`.
    pub fn to_deskewed(&self, x: &[f64]) -> Vec<f64> {
        let d: Vec<f64> = x.iter().zip(&self.center.x).map(|(a, b)| a - b).collect();
        (&self.a_bar_inv * DVector::from_vec(d))
            .iter()
            .copied()
            .collect()
    }
}

/// The elliptic cylinder `F_r(z0) = E_r(z0) x (t0 - r^2, t0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipticCylinder {
    pub frame: Frame,
    pub radius: f64,
}

impl EllipticCylinder {
    pub fn new(frame: Frame, radius: f64) -> Self {
        Self { frame, radius }
    }

    pub fn contains_spatial(&self, x: &[f64], grid: &Grid) -> bool {
        let y = self.frame.to_deskewed(x);
        y.iter().map(|v| v * v).sum::<f64>()
            < self.radius * self.radius - MEMBERSHIP_EPS * grid.h() * grid.h()
    }

    pub fn nodes(&self, grid: &Grid) -> Result<Region> {
        let (_, big) = self.frame.sqrt.spectrum_bounds();
        let reach = self.radius * big.sqrt() + grid.h();
        let bounds: Vec<(usize, usize)> = self
            .frame
            .center
            .x
            .iter()
            .map(|&c| {
                let lo = ((c - reach + 1.0) / grid.h()).floor().max(0.0) as usize;
                let hi = (((c + reach + 1.0) / grid.h()).ceil().max(0.0) as usize)
                    .min(grid.nodes_per_axis() - 1);
                (lo, hi)
            })
            .collect();
        let mut spatial = Vec::new();
        let mut x = vec![0.0; grid.n()];
        for_each_index(&bounds, |idx| {
            for (d, &i) in idx.iter().enumerate() {
                x[d] = grid.coord(i);
            }
            if self.contains_spatial(&x, grid) {
                spatial.push(grid.spatial_index(idx));
            }
        });
        let layers =
            crate::grid::Cylinder::new(self.frame.center.clone(), self.radius).layer_range(grid);
        let region = Region::new(spatial, layers);
        if region.is_empty() {
            return Err(Error::EmptyCylinder);
        }
        Ok(region)
    }
}

/// Multilinear interpolation of `u` at `(x, t)`, clamped to the grid.
pub fn interpolate(u: &ScalarField, x: &[f64], t: f64) -> f64 {
    let grid = u.grid();
    let n = grid.n();
    let last = grid.nodes_per_axis() - 1;
    let split = |q: f64, top: usize| -> (usize, f64) {
        let q = q.clamp(0.0, top as f64);
        let mut i = q.floor();
        let mut w = q - i;
        if w > 1.0 - 1e-9 {
            i += 1.0;
            w = 0.0;
        } else if w < 1e-9 {
            w = 0.0;
        }
        let i = (i as usize).min(top);
        if i == top && top > 0 {
            (top - 1, if w == 0.0 { 1.0 } else { w })
        } else {
            (i, w)
        }
    };
    let mut base = vec![0usize; n];
    let mut frac = vec![0.0; n];
    for d in 0..n {
        let (i, w) = split((x[d] + 1.0) / grid.h(), last);
        base[d] = i;
        frac[d] = w;
    }
    let (k, wt) = split((t + 1.0) / grid.tau(), grid.time_steps());
    let mut total = 0.0;
    for dk in 0..2 {
        let tw = if dk == 0 { 1.0 - wt } else { wt };
        if tw == 0.0 {
            continue;
        }
        for corner in 0..(1usize << n) {
            let mut w = tw;
            let mut s = 0;
            for d in 0..n {
                let bit = (corner >> d) & 1;
                w *= if bit == 1 { frac[d] } else { 1.0 - frac[d] };
                s = s * grid.nodes_per_axis() + base[d] + bit;
            }
            if w != 0.0 {
                total += w * u.at(k + dk, s);
            }
        }
    }
    total
}

/// The deskewed field `u(y, t) = U(a_bar y + x0, t + t0)` on a grid with the
/// same spacing as `U`'s.
///
/// Only `Q_R` of the result carries meaning; nodes whose image leaves the
/// source grid are filled by clamped interpolation. Errors if the image of
/// `Q_R` (that is, `F_R(z0)`) is not inside the source grid.
pub fn deskew(u: &ScalarField, frame: &Frame, radius: f64) -> Result<ScalarField> {
    let grid = *u.grid();
    if frame.n() != grid.n() {
        return Err(Error::InvalidParameter(
            "frame and grid dimensions differ".into(),
        ));
    }
    let t0 = frame.center.t;
    if t0 - radius * radius < -1.0 - 1e-12 || t0 > 1e-12 {
        return Err(Error::OutOfGrid(format!(
            "time span of F_{radius} leaves [-1, 0]"
        )));
    }
    let mut y = vec![0.0; grid.n()];
    let mut values = Vec::with_capacity(grid.len());
    for k in 0..grid.layers() {
        let t = grid.time(k);
        let in_span = t > -radius * radius - 1e-12;
        for s in 0..grid.spatial_len() {
            grid.point_into(s, &mut y);
            let x = frame.to_physical(&y);
            if in_span && y.iter().map(|v| v * v).sum::<f64>() < radius * radius {
                if let Some(bad) = x.iter().find(|v| v.abs() > 1.0 + 1e-12) {
                    return Err(Error::OutOfGrid(format!(
                        "image coordinate {bad} of F_{radius} leaves the source grid"
                    )));
                }
            }
            values.push(interpolate(u, &x, t + t0));
        }
    }
    ScalarField::from_values(grid, values)
}

/// Empirical frozen-coefficient constant `C_1 = 2 [A]_alpha / lambda`, with
/// the parabolic Holder seminorm of `A` taken over sampled node pairs.
pub fn frozen_constant(
    coefficients: &crate::solve::CoefficientField,
    grid: &Grid,
    samples: usize,
    seed: u64,
) -> f64 {
    use rand::{Rng, SeedableRng};
    let Some(alpha) = coefficients.alpha() else {
        return 0.0;
    };
    let (lambda, _) = coefficients.ellipticity_bounds();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = grid.n();
    let mut a = vec![0.0; n * n];
    let mut b = vec![0.0; n * n];
    let mut seminorm: f64 = 0.0;
    for _ in 0..samples {
        let p = grid.ppoint(rng.gen_range(0..grid.len()));
        let q = grid.ppoint(rng.gen_range(0..grid.len()));
        let d = crate::grid::parabolic_distance(&p, &q);
        if d < grid.h() {
            continue;
        }
        coefficients.matrix_into(&p.x, p.t, &mut a);
        coefficients.matrix_into(&q.x, q.t, &mut b);
        let diff = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        seminorm = seminorm.max(diff / d.powf(alpha));
    }
    2.0 * seminorm / lambda
}
