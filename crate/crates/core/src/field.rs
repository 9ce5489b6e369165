//! Nodal fields on a [`Grid`] with finite differences and cylinder quadrature.

use crate::error::{Error, Result};
use crate::grid::{Cylinder, Grid, Region};

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            values: vec![0.0; grid.len()],
            grid,
        }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite value at node {i}"
            )));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(x, t)` at every node.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64], f64) -> f64) -> Self {
        let m = grid.spatial_len();
        let mut values = Vec::with_capacity(grid.len());
        let mut x = vec![0.0; grid.n()];
        for k in 0..grid.layers() {
            let t = grid.time(k);
            for s in 0..m {
                grid.point_into(s, &mut x);
                values.push(f(&x, t));
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, node: usize) -> f64 {
        self.values[node]
    }

    pub fn at(&self, k: usize, s: usize) -> f64 {
        self.values[self.grid.node(k, s)]
    }

    pub fn layer(&self, k: usize) -> &[f64] {
        let m = self.grid.spatial_len();
        &self.values[k * m..(k + 1) * m]
    }

    /// Pointwise `a * self + b * other`.
    pub fn axpby(&self, a: f64, other: &ScalarField, b: f64) -> ScalarField {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        ScalarField {
            grid: self.grid,
            values,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Largest absolute difference over the nodes of `region`.
    pub fn max_abs_diff_on(&self, other: &ScalarField, region: &Region) -> f64 {
        region
            .nodes(&self.grid)
            .map(|i| (self.values[i] - other.values[i]).abs())
            .fold(0.0, f64::max)
    }
}

/// An `n`-vector per node, stored node-major.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Grid,
    values: Vec<f64>,
}

impl VectorField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            values: vec![0.0; grid.len() * grid.n()],
            grid,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn get(&self, node: usize) -> &[f64] {
        let n = self.grid.n();
        &self.values[node * n..(node + 1) * n]
    }

    pub fn get_mut(&mut self, node: usize) -> &mut [f64] {
        let n = self.grid.n();
        &mut self.values[node * n..(node + 1) * n]
    }

    /// Component `d` at every node.
    pub fn component(&self, d: usize) -> ScalarField {
        let n = self.grid.n();
        let values = self.values.iter().skip(d).step_by(n).copied().collect();
        ScalarField {
            grid: self.grid,
            values,
        }
    }
}

/// Derivative along axis `d` at spatial node `s` of `layer`: centered in the
/// interior, one-sided on the box faces.
pub(crate) fn partial(grid: &Grid, layer: &[f64], s: usize, d: usize) -> f64 {
    let i = grid.axis_index(s, d);
    let stride = grid.stride(d);
    let h = grid.h();
    let last = grid.nodes_per_axis() - 1;
    if i == 0 {
        (layer[s + stride] - layer[s]) / h
    } else if i == last {
        (layer[s] - layer[s - stride]) / h
    } else {
        (layer[s + stride] - layer[s - stride]) / (2.0 * h)
    }
}

/// Writes the gradient at spatial node `s` of `layer` into `out`.
pub(crate) fn gradient_at(grid: &Grid, layer: &[f64], s: usize, out: &mut [f64]) {
    for (d, o) in out.iter_mut().enumerate() {
        *o = partial(grid, layer, s, d);
    }
}

/// One-sided `x_n`-derivatives `(from below, from above)` at a thin node.
pub fn thin_normal_derivatives(f: &ScalarField, node: usize) -> (f64, f64) {
    let grid = f.grid();
    let stride = grid.stride(grid.n() - 1);
    let h = grid.h();
    let v = f.values();
    (
        (v[node] - v[node - stride]) / h,
        (v[node + stride] - v[node]) / h,
    )
}

/// Discrete spatial gradient.
///
/// Centered differences in the interior, one-sided on the box faces. On the
/// thin layer the `x_n` component is the average of the two one-sided
/// derivatives; [`thin_normal_derivatives`] exposes them separately.
pub fn gradient(f: &ScalarField) -> VectorField {
    let grid = *f.grid();
    let mut out = VectorField::zeros(grid);
    let m = grid.spatial_len();
    for k in 0..grid.layers() {
        let layer = f.layer(k);
        for s in 0..m {
            gradient_at(&grid, layer, s, out.get_mut(k * m + s));
        }
    }
    out
}

/// Backward difference in time; layer 0 copies layer 1.
pub fn time_derivative(f: &ScalarField) -> ScalarField {
    let grid = *f.grid();
    let m = grid.spatial_len();
    let tau = grid.tau();
    let v = f.values();
    let mut out = vec![0.0; v.len()];
    for k in 1..grid.layers() {
        for s in 0..m {
            out[k * m + s] = (v[k * m + s] - v[(k - 1) * m + s]) / tau;
        }
    }
    let (first, rest) = out.split_at_mut(m);
    first.copy_from_slice(&rest[..m]);
    ScalarField { grid, values: out }
}

/// Node-counting quadrature `h^n tau sum_{z in region} g(z)`.
pub fn integrate_with(grid: &Grid, region: &Region, g: impl Fn(usize) -> f64) -> f64 {
    grid.cell_volume() * region.nodes(grid).map(g).sum::<f64>()
}

/// Measure of a region under node-counting quadrature.
pub fn measure(grid: &Grid, region: &Region) -> f64 {
    grid.cell_volume() * region.len() as f64
}

pub fn region_integral(f: &ScalarField, region: &Region) -> f64 {
    integrate_with(f.grid(), region, |i| f.values[i])
}

pub fn region_mean(f: &ScalarField, region: &Region) -> Result<f64> {
    if region.is_empty() {
        return Err(Error::EmptyCylinder);
    }
    Ok(region.nodes(f.grid()).map(|i| f.values[i]).sum::<f64>() / region.len() as f64)
}

/// `integral_{Q_r(z0)} f` by node counting.
pub fn cyl_integral(f: &ScalarField, c: &Cylinder) -> Result<f64> {
    let region = c.nodes(f.grid())?;
    Ok(region_integral(f, &region))
}

/// Average of `f` over `Q_r(z0)`.
pub fn cyl_mean(f: &ScalarField, c: &Cylinder) -> Result<f64> {
    region_mean(f, &c.nodes(f.grid())?)
}

/// `integral integral_{R x R} |f(z) - f(w)|^2 dz dw`, evaluated in linear time
/// through `2 |R| integral_R (f - <f>)^2`.
pub fn region_oscillation(f: &ScalarField, region: &Region) -> Result<f64> {
    let mean = region_mean(f, region)?;
    let grid = f.grid();
    let spread = integrate_with(grid, region, |i| {
        let d = f.values[i] - mean;
        d * d
    });
    Ok(2.0 * measure(grid, region) * spread)
}

pub fn oscillation_double(f: &ScalarField, c: &Cylinder) -> Result<f64> {
    region_oscillation(f, &c.nodes(f.grid())?)
}
