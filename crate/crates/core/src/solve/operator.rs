//! Cell-based discretization of `-div(A grad u)`.
//!
//! Each grid cell carries the quadratic form
//! `h^n / 2^n * sum over corners s of <A_c g_s, g_s>`, where `g_s` is the
//! vector of one-sided edge differences leaving corner `s` and `A_c` is the
//! average of `A` over the cell's corners. Summing over cells gives a
//! discrete Dirichlet energy whose gradient is the stiffness stencil used by
//! the solver; for `A = I` it is the 5-point (7-point in 3D) Laplacian.

use crate::field::ScalarField;
use crate::grid::{Grid, Region};

use super::coefficients::CoefficientField;

/// Local matrix `L` of one cell: cell energy `= h^n u^T L u`. Corner `q`
/// sits at offset `(q >> d) & 1` along axis `d`.
pub(crate) fn cell_matrix(n: usize, a: &[f64], h: f64) -> Vec<f64> {
    let m = 1usize << n;
    let mut l = vec![0.0; m * m];
    let w = 1.0 / (m as f64 * h * h);
    for s in 0..m {
        for d1 in 0..n {
            let (hi1, lo1) = (s | (1 << d1), s & !(1 << d1));
            for d2 in 0..n {
                let c = a[d1 * n + d2] * w;
                if c == 0.0 {
                    continue;
                }
                let (hi2, lo2) = (s | (1 << d2), s & !(1 << d2));
                l[hi1 * m + hi2] += c;
                l[hi1 * m + lo2] -= c;
                l[lo1 * m + hi2] -= c;
                l[lo1 * m + lo2] += c;
            }
        }
    }
    l
}

/// Corner positions of a cell relative to its anchor corner, in grid
/// steps. Plain cells are unit cubes; lattice-frame coefficients use the
/// parallelepiped spanned by the columns of the frame.
pub(crate) struct CellShape {
    corners: Vec<Vec<isize>>,
}

impl CellShape {
    pub(crate) fn of(n: usize, coefficients: &CoefficientField) -> Self {
        let corners = (0..1usize << n)
            .map(|q| {
                let o: Vec<isize> = (0..n).map(|d| ((q >> d) & 1) as isize).collect();
                match coefficients.lattice() {
                    Some(f) => f
                        .iter()
                        .map(|row| row.iter().zip(&o).map(|(&a, &b)| a as isize * b).sum())
                        .collect(),
                    None => o,
                }
            })
            .collect();
        Self { corners }
    }

    /// Index offset of every corner from the anchor.
    fn index_offsets(&self, grid: &Grid) -> Vec<isize> {
        self.corners
            .iter()
            .map(|c| {
                c.iter()
                    .enumerate()
                    .map(|(d, &o)| o * grid.stride(d) as isize)
                    .sum()
            })
            .collect()
    }

    /// Stencil code of `corner_q - corner_p`, if it fits the `3^n` stencil.
    fn code(&self, p: usize, q: usize) -> Option<usize> {
        self.corners[q]
            .iter()
            .zip(&self.corners[p])
            .try_fold(0, |acc, (a, b)| {
                let o = a - b;
                (o.abs() <= 1).then(|| acc * 3 + (o + 1) as usize)
            })
    }

    /// Cells (by anchor spatial index) with a corner in `spatial` and all
    /// corners inside the box.
    fn touching_cells(&self, grid: &Grid, spatial: &[usize]) -> Vec<usize> {
        let n = grid.n();
        let last = grid.nodes_per_axis() as isize - 1;
        let mut cells = Vec::with_capacity(spatial.len() << n);
        let mut anchor = vec![0isize; n];
        for &s in spatial {
            'corner: for p in &self.corners {
                for d in 0..n {
                    anchor[d] = grid.axis_index(s, d) as isize - p[d];
                }
                for q in &self.corners {
                    if (0..n).any(|d| !(0..=last).contains(&(anchor[d] + q[d]))) {
                        continue 'corner;
                    }
                }
                let idx: Vec<usize> = anchor.iter().map(|&a| a as usize).collect();
                cells.push(grid.spatial_index(&idx));
            }
        }
        cells.sort_unstable();
        cells.dedup();
        cells
    }
}

/// Cell matrices on one layer, uniform or per cell.
pub(crate) enum CellForms {
    Uniform(Vec<f64>),
    PerCell { cells: Vec<usize>, forms: Vec<f64> },
}

impl CellForms {
    pub(crate) fn build(
        grid: &Grid,
        coefficients: &CoefficientField,
        t: f64,
        cells: Vec<usize>,
    ) -> Self {
        let n = grid.n();
        let m = 1usize << n;
        let h = grid.h();
        let mut a = vec![0.0; n * n];
        if coefficients.lattice().is_some() {
            // Lattice cells carry the identity form in frame coordinates.
            for d in 0..n {
                a[d * n + d] = 1.0;
            }
            return CellForms::Uniform(cell_matrix(n, &a, h));
        }
        if coefficients.matrix_is_constant() {
            coefficients.matrix_into(&vec![0.0; n], t, &mut a);
            return CellForms::Uniform(cell_matrix(n, &a, h));
        }
        let offsets = CellShape::of(n, coefficients).index_offsets(grid);
        let mut avg = vec![0.0; n * n];
        let mut x = vec![0.0; n];
        let mut forms = Vec::with_capacity(cells.len() * m * m);
        for &c in &cells {
            avg.fill(0.0);
            for off in &offsets {
                grid.point_into((c as isize + off) as usize, &mut x);
                coefficients.matrix_into(&x, t, &mut a);
                for (s, v) in avg.iter_mut().zip(&a) {
                    *s += v / m as f64;
                }
            }
            forms.extend(cell_matrix(n, &avg, h));
        }
        CellForms::PerCell { cells, forms }
    }

    /// A representative form, for sparsity.
    fn any_form(&self, m: usize) -> &[f64] {
        match self {
            CellForms::Uniform(l) => l,
            CellForms::PerCell { forms, .. } => &forms[..m * m],
        }
    }

    fn form(&self, cell: usize, m: usize) -> &[f64] {
        match self {
            CellForms::Uniform(l) => l,
            CellForms::PerCell { cells, forms } => {
                let i = cells.binary_search(&cell).expect("cell was assembled");
                &forms[i * m * m..(i + 1) * m * m]
            }
        }
    }
}

/// Rows of the implicit Euler system on one layer, as `3^n` stencil
/// coefficients per free node.
pub(crate) struct LayerSystem {
    pub(crate) width: usize,
    uniform: bool,
    coeffs: Vec<f64>,
}

impl LayerSystem {
    pub(crate) fn row(&self, i: usize) -> &[f64] {
        if self.uniform {
            &self.coeffs
        } else {
            &self.coeffs[i * self.width..(i + 1) * self.width]
        }
    }

    /// Assembles `S + 1/tau - b . D` at layer `k` for the nodes `free`.
    pub(crate) fn assemble(
        grid: &Grid,
        coefficients: &CoefficientField,
        k: usize,
        free: &[usize],
    ) -> Self {
        let n = grid.n();
        let m = 1usize << n;
        let width = 3usize.pow(n as u32);
        let center = grid.stencil_center();
        let t = grid.time(k);
        let h = grid.h();
        let uniform = coefficients.is_uniform();
        let shape = CellShape::of(n, coefficients);
        let cells = if coefficients.matrix_is_constant() {
            Vec::new()
        } else {
            shape.touching_cells(grid, free)
        };
        let forms = CellForms::build(grid, coefficients, t, cells);
        let corner = shape.index_offsets(grid);
        let mut couplings = Vec::new();
        for p in 0..m {
            for q in 0..m {
                if coefficients.lattice().is_some() && forms.any_form(m)[p * m + q] == 0.0 {
                    continue;
                }
                let code = shape
                    .code(p, q)
                    .expect("cell couplings fit the 3^n stencil");
                couplings.push((p, q, code));
            }
        }
        let mut b = vec![0.0; n];

        let stencil_row = |s: usize, b: &[f64], out: &mut [f64]| {
            out.fill(0.0);
            for &(p, q, code) in &couplings {
                let cell = (s as isize - corner[p]) as usize;
                out[code] += forms.form(cell, m)[p * m + q];
            }
            out[center] += 1.0 / grid.tau();
            for (d, bd) in b.iter().enumerate() {
                let step = 3usize.pow((n - 1 - d) as u32);
                out[center + step] -= bd / (2.0 * h);
                out[center - step] += bd / (2.0 * h);
            }
        };

        if uniform {
            let mut row = vec![0.0; width];
            coefficients.drift_into(&vec![0.0; n], t, &mut b);
            // The uniform row is the same at every interior node; assemble it
            // at the grid center.
            let mid = grid.spatial_index(&vec![grid.nodes_per_axis() / 2; n]);
            stencil_row(mid, &b, &mut row);
            return Self {
                width,
                uniform,
                coeffs: row,
            };
        }
        let mut coeffs = vec![0.0; free.len() * width];
        let mut x = vec![0.0; n];
        for (i, &s) in free.iter().enumerate() {
            grid.point_into(s, &mut x);
            coefficients.drift_into(&x, t, &mut b);
            stencil_row(s, &b, &mut coeffs[i * width..(i + 1) * width]);
        }
        Self {
            width,
            uniform,
            coeffs,
        }
    }
}

/// Discrete Dirichlet energy `sum_k tau * sum_cells h^n u_c^T L_c u_c` over
/// the layers of `region` and the cells touching its spatial nodes. The
/// solver's stiffness rows are the gradient of this form.
pub fn variational_energy(
    u: &ScalarField,
    region: &Region,
    coefficients: &CoefficientField,
) -> f64 {
    let grid = u.grid();
    let n = grid.n();
    let m = 1usize << n;
    let shape = CellShape::of(n, coefficients);
    let cells = shape.touching_cells(grid, &region.spatial);
    let corner = shape.index_offsets(grid);
    let hn = grid.h().powi(n as i32);
    let mut local = vec![0.0; m];
    let mut total = 0.0;
    for k in region.layers.clone() {
        let forms = CellForms::build(grid, coefficients, grid.time(k), cells.clone());
        let layer = u.layer(k);
        let mut sum = 0.0;
        for &c in &cells {
            for (q, off) in corner.iter().enumerate() {
                local[q] = layer[(c as isize + off) as usize];
            }
            let l = forms.form(c, m);
            let mut e = 0.0;
            for p in 0..m {
                let row: f64 = (0..m).map(|q| l[p * m + q] * local[q]).sum();
                e += local[p] * row;
            }
            sum += e;
        }
        total += grid.tau() * hn * sum;
    }
    total
}
