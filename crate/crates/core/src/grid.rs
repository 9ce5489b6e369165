//! Uniform space-time grid over `[-1, 1]^n x [-1, 0]` and the node sets of
//! parabolic cylinders.
//!
//! Nodes are stored row-major with time as the slowest axis, then `x_1`, ...,
//! `x_n` (fastest). A spatial node is addressed by its linear index `s` in
//! `0..N^n`; a space-time node by `k * N^n + s` where `k` is the time layer.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack used by every membership predicate, so that lattice points
/// lying exactly on a sphere or on the bottom of a cylinder are classified
/// the same way regardless of rounding in `r` or `t0 - r^2`.
pub(crate) const MEMBERSHIP_EPS: f64 = 1e-9;

/// Spatial cross-section of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    /// The box `[-1, 1]^n`; solves impose Dirichlet data on its faces.
    #[default]
    Box,
    /// The unit ball; nodes outside it act as Dirichlet data.
    Ball,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n: usize,
    nodes_per_axis: usize,
    time_steps: usize,
    h: f64,
    tau: f64,
    domain: Domain,
}

impl Grid {
    /// Builds the grid with `nodes` points per spatial axis and `time_steps`
    /// implicit steps on `[-1, 0]`.
    pub fn new(n: usize, nodes: usize, time_steps: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGrid(format!("spatial dimension {n} < 2")));
        }
        if nodes.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "{nodes} nodes per axis is even, the thin space x_n = 0 would fall between layers"
            )));
        }
        if nodes < 5 {
            return Err(Error::InvalidGrid(format!("{nodes} nodes per axis < 5")));
        }
        if time_steps < 2 {
            return Err(Error::InvalidGrid(format!("{time_steps} time steps < 2")));
        }
        let total = (nodes as u128).pow(n as u32) * (time_steps as u128 + 1);
        if total > usize::MAX as u128 / 8 {
            return Err(Error::InvalidGrid(format!(
                "{total} nodes do not fit in memory"
            )));
        }
        Ok(Self {
            n,
            nodes_per_axis: nodes,
            time_steps,
            h: 2.0 / (nodes - 1) as f64,
            tau: 1.0 / time_steps as f64,
            domain: Domain::Box,
        })
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.nodes_per_axis
    }

    pub fn time_steps(&self) -> usize {
        self.time_steps
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// Number of time layers, `K + 1`.
    pub fn layers(&self) -> usize {
        self.time_steps + 1
    }

    pub fn spatial_len(&self) -> usize {
        self.nodes_per_axis.pow(self.n as u32)
    }

    pub fn len(&self) -> usize {
        self.spatial_len() * self.layers()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index along `x_n` of the thin layer `{x_n = 0}`.
    pub fn thin_index(&self) -> usize {
        (self.nodes_per_axis - 1) / 2
    }

    /// Volume element `h^n * tau` of node-counting quadrature.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.n as i32) * self.tau
    }

    /// Linear-index stride of spatial axis `d` (0-based).
    pub fn stride(&self, d: usize) -> usize {
        self.nodes_per_axis.pow((self.n - 1 - d) as u32)
    }

    pub fn axis_index(&self, s: usize, d: usize) -> usize {
        (s / self.stride(d)) % self.nodes_per_axis
    }

    pub fn spatial_index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.nodes_per_axis + i)
    }

    pub fn coord(&self, i: usize) -> f64 {
        -1.0 + i as f64 * self.h
    }

    pub fn time(&self, k: usize) -> f64 {
        -1.0 + k as f64 * self.tau
    }

    /// Writes the coordinates of spatial node `s` into `out`.
    pub fn point_into(&self, s: usize, out: &mut [f64]) {
        let mut rest = s;
        for d in (0..self.n).rev() {
            out[d] = self.coord(rest % self.nodes_per_axis);
            rest /= self.nodes_per_axis;
        }
    }

    pub fn point(&self, s: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        self.point_into(s, &mut x);
        x
    }

    pub fn node(&self, k: usize, s: usize) -> usize {
        k * self.spatial_len() + s
    }

    /// Splits a space-time node into `(layer, spatial index)`.
    pub fn split(&self, node: usize) -> (usize, usize) {
        let m = self.spatial_len();
        (node / m, node % m)
    }

    pub fn ppoint(&self, node: usize) -> PPoint {
        let (k, s) = self.split(node);
        PPoint::new(self.point(s), self.time(k))
    }

    pub fn is_thin(&self, s: usize) -> bool {
        self.axis_index(s, self.n - 1) == self.thin_index()
    }

    pub fn on_box_boundary(&self, s: usize) -> bool {
        let last = self.nodes_per_axis - 1;
        (0..self.n).any(|d| {
            let i = self.axis_index(s, d);
            i == 0 || i == last
        })
    }

    /// Lattice index of coordinate `x` if it sits on a grid line.
    pub fn lattice_index(&self, x: f64) -> Option<usize> {
        let q = (x + 1.0) / self.h;
        let i = q.round();
        if (q - i).abs() < 1e-9 && i >= 0.0 && i <= (self.nodes_per_axis - 1) as f64 {
            Some(i as usize)
        } else {
            None
        }
    }

    /// Time layer holding `t`, if `t` is on the time lattice.
    pub fn layer_of(&self, t: f64) -> Option<usize> {
        let q = (t + 1.0) / self.tau;
        let k = q.round();
        if (q - k).abs() < 1e-9 && k >= 0.0 && k <= self.time_steps as f64 {
            Some(k as usize)
        } else {
            None
        }
    }

    /// Spatial index deltas of the `3^n` neighborhood, ordered so that
    /// offset vector `o` in `{-1,0,1}^n` maps to `sum (o_d + 1) 3^(n-1-d)`.
    pub fn stencil_deltas(&self) -> Vec<isize> {
        let count = 3usize.pow(self.n as u32);
        (0..count)
            .map(|code| {
                let mut rest = code;
                let mut delta = 0isize;
                for d in (0..self.n).rev() {
                    let o = (rest % 3) as isize - 1;
                    rest /= 3;
                    delta += o * self.stride(d) as isize;
                }
                delta
            })
            .collect()
    }

    /// Index of the zero offset in [`Grid::stencil_deltas`].
    pub fn stencil_center(&self) -> usize {
        (3usize.pow(self.n as u32) - 1) / 2
    }

    /// Unknown nodes of a full-domain solve: every spatial node off the box
    /// faces (or inside the unit ball, for [`Domain::Ball`]) on layers `1..=K`.
    pub fn interior_region(&self) -> Region {
        let spatial = (0..self.spatial_len())
            .filter(|&s| {
                if self.on_box_boundary(s) {
                    return false;
                }
                match self.domain {
                    Domain::Box => true,
                    Domain::Ball => {
                        let x = self.point(s);
                        x.iter().map(|v| v * v).sum::<f64>() < 1.0 - MEMBERSHIP_EPS
                    }
                }
            })
            .collect();
        Region::new(spatial, 1..self.layers())
    }

    /// True when the node layout is mirror symmetric about `{x_n = 0}`.
    pub fn is_symmetric(&self) -> bool {
        self.nodes_per_axis % 2 == 1
    }
}

/// A space-time point `z = (x, t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PPoint {
    pub x: Vec<f64>,
    pub t: f64,
}

impl PPoint {
    pub fn new(x: Vec<f64>, t: f64) -> Self {
        Self { x, t }
    }

    pub fn origin(n: usize) -> Self {
        Self::new(vec![0.0; n], 0.0)
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    /// Whether the point lies on the thin space `{x_n = 0}`.
    pub fn on_thin_space(&self) -> bool {
        self.x.last().is_some_and(|v| v.abs() < 1e-12)
    }
}

/// Parabolic distance `(|x_a - x_b|^2 + |t_a - t_b|)^(1/2)`.
pub fn parabolic_distance(a: &PPoint, b: &PPoint) -> f64 {
    let dx: f64 = a.x.iter().zip(&b.x).map(|(p, q)| (p - q) * (p - q)).sum();
    (dx + (a.t - b.t).abs()).sqrt()
}

/// A parabolic cylinder `Q_r(z0) = B_r(x0) x (t0 - r^2, t0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    pub center: PPoint,
    pub radius: f64,
}

impl Cylinder {
    pub fn new(center: PPoint, radius: f64) -> Self {
        Self { center, radius }
    }

    /// Membership with the strict spatial and half-open temporal convention.
    pub fn contains(&self, x: &[f64], t: f64, grid: &Grid) -> bool {
        let r2 = self.radius * self.radius;
        let d2: f64 = x
            .iter()
            .zip(&self.center.x)
            .map(|(p, q)| (p - q) * (p - q))
            .sum();
        d2 < r2 - MEMBERSHIP_EPS * grid.h() * grid.h()
            && t > self.center.t - r2 + MEMBERSHIP_EPS * grid.tau()
            && t <= self.center.t + MEMBERSHIP_EPS * grid.tau()
    }

    /// Time layers `k` with `t0 - r^2 < t_k <= t0`.
    pub fn layer_range(&self, grid: &Grid) -> Range<usize> {
        let tau = grid.tau();
        let r2 = self.radius * self.radius;
        let top = ((self.center.t + 1.0) / tau + MEMBERSHIP_EPS).floor();
        let bottom = ((self.center.t - r2 + 1.0) / tau + MEMBERSHIP_EPS).floor() + 1.0;
        let top = top.min(grid.time_steps() as f64);
        let bottom = bottom.max(0.0);
        if top < bottom {
            return 0..0;
        }
        bottom as usize..top as usize + 1
    }

    /// Spatial nodes with `|x - x0| < r`, in increasing index order.
    pub fn spatial_nodes(&self, grid: &Grid) -> Vec<usize> {
        let r = self.radius;
        let bounds: Vec<(usize, usize)> = self
            .center
            .x
            .iter()
            .map(|&c| {
                let lo = ((c - r + 1.0) / grid.h()).floor().max(0.0) as usize;
                let hi =
                    (((c + r + 1.0) / grid.h()).ceil() as usize).min(grid.nodes_per_axis() - 1);
                (lo, hi)
            })
            .collect();
        let r2 = r * r - MEMBERSHIP_EPS * grid.h() * grid.h();
        let mut out = Vec::new();
        for_each_index(&bounds, |idx| {
            let d2: f64 = idx
                .iter()
                .zip(&self.center.x)
                .map(|(&i, c)| {
                    let v = grid.coord(i) - c;
                    v * v
                })
                .sum();
            if d2 < r2 {
                out.push(grid.spatial_index(idx));
            }
        });
        out
    }

    /// The index set `Q_r(z0)` clipped to the grid.
    pub fn nodes(&self, grid: &Grid) -> Result<Region> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "cylinder radius {}",
                self.radius
            )));
        }
        if self.center.n() != grid.n() {
            return Err(Error::InvalidParameter(format!(
                "center has {} coordinates on an n = {} grid",
                self.center.n(),
                grid.n()
            )));
        }
        let region = Region::new(self.spatial_nodes(grid), self.layer_range(grid));
        if region.is_empty() {
            return Err(Error::EmptyCylinder);
        }
        Ok(region)
    }
}

/// Calls `f` on every multi-index in the inclusive box `bounds`.
pub(crate) fn for_each_index(bounds: &[(usize, usize)], mut f: impl FnMut(&[usize])) {
    if bounds.iter().any(|&(lo, hi)| lo > hi) {
        return;
    }
    let mut idx: Vec<usize> = bounds.iter().map(|b| b.0).collect();
    loop {
        f(&idx);
        let mut d = bounds.len();
        loop {
            if d == 0 {
                return;
            }
            d -= 1;
            if idx[d] < bounds[d].1 {
                idx[d] += 1;
                break;
            }
            idx[d] = bounds[d].0;
        }
    }
}

/// A product node set: spatial nodes times a contiguous range of layers.
///
/// Every cylinder-like set the laboratory works with (parabolic cylinders,
/// elliptic cylinders, the full interior) has this shape.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    pub spatial: Vec<usize>,
    pub layers: Range<usize>,
}

impl Region {
    pub fn new(mut spatial: Vec<usize>, layers: Range<usize>) -> Self {
        spatial.sort_unstable();
        spatial.dedup();
        Self { spatial, layers }
    }

    pub fn len(&self) -> usize {
        self.spatial.len() * self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Space-time node indices of the set.
    pub fn nodes<'a>(&'a self, grid: &Grid) -> impl Iterator<Item = usize> + 'a {
        let m = grid.spatial_len();
        self.layers
            .clone()
            .flat_map(move |k| self.spatial.iter().map(move |&s| k * m + s))
    }

    pub fn contains_spatial(&self, s: usize) -> bool {
        self.spatial.binary_search(&s).is_ok()
    }

    fn filter_axis(&self, grid: &Grid, keep: impl Fn(usize) -> bool) -> Region {
        let d = grid.n() - 1;
        Region {
            spatial: self
                .spatial
                .iter()
                .copied()
                .filter(|&s| keep(grid.axis_index(s, d)))
                .collect(),
            layers: self.layers.clone(),
        }
    }

    /// The thin part `Q'_r`, nodes with `x_n = 0`.
    pub fn thin(&self, grid: &Grid) -> Region {
        let m = grid.thin_index();
        self.filter_axis(grid, |i| i == m)
    }

    /// The upper half `Q_r^+`, nodes with `x_n > 0`.
    pub fn upper(&self, grid: &Grid) -> Region {
        let m = grid.thin_index();
        self.filter_axis(grid, |i| i > m)
    }

    /// The lower half `Q_r^-`, nodes with `x_n < 0`.
    pub fn lower(&self, grid: &Grid) -> Region {
        let m = grid.thin_index();
        self.filter_axis(grid, |i| i < m)
    }

    /// Spatial nodes outside the set that share a grid cell with a node of
    /// the set (the Dirichlet ring of a discrete solve).
    pub fn lateral_ring(&self, grid: &Grid) -> Vec<usize> {
        let deltas = grid.stencil_deltas();
        let m = grid.spatial_len() as isize;
        let mut ring: Vec<usize> = Vec::new();
        for &s in &self.spatial {
            for &dl in &deltas {
                let t = s as isize + dl;
                if t < 0 || t >= m {
                    continue;
                }
                let t = t as usize;
                if !grid_neighbors(grid, s, t) || self.contains_spatial(t) {
                    continue;
                }
                ring.push(t);
            }
        }
        ring.sort_unstable();
        ring.dedup();
        ring
    }

    /// The discrete parabolic boundary: the lateral ring on every layer of the
    /// set, plus set-and-ring nodes on the layer just below it.
    pub fn parabolic_boundary(&self, grid: &Grid) -> Vec<usize> {
        let ring = self.lateral_ring(grid);
        let m = grid.spatial_len();
        let mut out: Vec<usize> = self
            .layers
            .clone()
            .flat_map(|k| ring.iter().map(move |&s| k * m + s))
            .collect();
        if self.layers.start > 0 && !self.layers.is_empty() {
            let k = self.layers.start - 1;
            out.extend(self.spatial.iter().chain(ring.iter()).map(|&s| k * m + s));
        }
        out.sort_unstable();
        out
    }

    /// Checks that every cell touching the set lies inside the grid and that
    /// the set has a layer below it to take initial data from.
    pub fn check_solvable(&self, grid: &Grid) -> Result<()> {
        if self.is_empty() {
            return Err(Error::EmptyCylinder);
        }
        if self.layers.start == 0 {
            return Err(Error::OutOfGrid(
                "region starts at the initial layer".into(),
            ));
        }
        if self.layers.end > grid.layers() {
            return Err(Error::OutOfGrid(
                "region extends past the last layer".into(),
            ));
        }
        if let Some(&s) = self.spatial.iter().find(|&&s| grid.on_box_boundary(s)) {
            return Err(Error::OutOfGrid(format!(
                "spatial node {:?} lies on the box boundary",
                grid.point(s)
            )));
        }
        Ok(())
    }
}

/// Whether `t` is in the 3^n neighborhood of `s` (no wrap across faces).
fn grid_neighbors(grid: &Grid, s: usize, t: usize) -> bool {
    (0..grid.n()).all(|d| grid.axis_index(s, d).abs_diff(grid.axis_index(t, d)) <= 1)
}
