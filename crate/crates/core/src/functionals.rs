//! Growth functionals, Campanato quantities, the contact selector and
//! discrete parabolic Holder seminorms.

use crate::analysis::fit_exponent;
use crate::error::{Error, Result};
use crate::field::{
    integrate_with, partial, region_mean, region_oscillation, ScalarField, VectorField,
};
use crate::grid::{Cylinder, Grid, PPoint, Region};

/// `phi_{z0}(r, u) = r^{n+4} int |grad u|^2 + int int |u(z) - u(w)|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiValue {
    pub cylinder: Cylinder,
    pub grad_term: f64,
    pub osc_term: f64,
    pub total: f64,
}

/// Node set of `c`, checked to lie inside the grid.
pub fn cylinder_region(grid: &Grid, c: &Cylinder) -> Result<Region> {
    let r = c.radius;
    let t0 = c.center.t;
    if t0 - r * r < -1.0 - 1e-12 || t0 > 1e-12 {
        return Err(Error::OutOfGrid(format!(
            "time span of Q_{r} at t = {t0} leaves [-1, 0]"
        )));
    }
    if let Some(x) = c.center.x.iter().find(|x| x.abs() + r > 1.0 + 1e-12) {
        return Err(Error::OutOfGrid(format!(
            "Q_{r} around coordinate {x} leaves [-1, 1]"
        )));
    }
    c.nodes(grid)
}

fn grad_sq(u: &ScalarField, node: usize) -> f64 {
    let grid = u.grid();
    let (k, s) = grid.split(node);
    let layer = u.layer(k);
    (0..grid.n())
        .map(|d| partial(grid, layer, s, d).powi(2))
        .sum()
}

pub fn phi(u: &ScalarField, c: &Cylinder) -> Result<PhiValue> {
    let grid = u.grid();
    let region = cylinder_region(grid, c)?;
    let grad = integrate_with(grid, &region, |node| grad_sq(u, node));
    let grad_term = c.radius.powi(grid.n() as i32 + 4) * grad;
    let osc_term = region_oscillation(u, &region)?;
    Ok(PhiValue {
        cylinder: c.clone(),
        grad_term,
        osc_term,
        total: grad_term + osc_term,
    })
}

/// `int_{Q_r} |grad u|^2`.
pub fn dirichlet(u: &ScalarField, c: &Cylinder) -> Result<f64> {
    let region = cylinder_region(u.grid(), c)?;
    Ok(integrate_with(u.grid(), &region, |node| grad_sq(u, node)))
}

/// `int_{Q_r} |u - <u>|^2`.
pub fn mean_oscillation(u: &ScalarField, c: &Cylinder) -> Result<f64> {
    let region = cylinder_region(u.grid(), c)?;
    let mean = region_mean(u, &region)?;
    Ok(integrate_with(u.grid(), &region, |node| {
        (u.get(node) - mean).powi(2)
    }))
}

/// Even extension of the gradient at one node: the upper-half gradient
/// (one-sided from above in `x_n` on the thin layer), mirrored to the lower
/// half without sign change.
fn even_gradient_into(u: &ScalarField, node: usize, out: &mut [f64]) {
    let grid = u.grid();
    let n = grid.n();
    let (k, s) = grid.split(node);
    let layer = u.layer(k);
    let mid = grid.thin_index();
    let j = grid.axis_index(s, n - 1);
    let stride = grid.stride(n - 1);
    let src = if j < mid {
        s + 2 * (mid - j) * stride
    } else {
        s
    };
    for (d, o) in out.iter_mut().enumerate().take(n - 1) {
        *o = partial(grid, layer, src, d);
    }
    out[n - 1] = if grid.axis_index(src, n - 1) == mid {
        (layer[src + stride] - layer[src]) / grid.h()
    } else {
        partial(grid, layer, src, n - 1)
    };
}

/// The even extension of `grad u` across the thin space.
pub fn even_extension(u: &ScalarField) -> Result<VectorField> {
    let grid = *u.grid();
    if !grid.is_symmetric() {
        return Err(Error::InvalidGrid(
            "grid is not symmetric about x_n = 0".into(),
        ));
    }
    let mut out = VectorField::zeros(grid);
    for node in 0..grid.len() {
        even_gradient_into(u, node, out.get_mut(node));
    }
    Ok(out)
}

/// `int_{Q_r} |G - <G>|^2` with `G = grad u`, or its even extension.
pub fn campanato_gradient(u: &ScalarField, c: &Cylinder, use_even_extension: bool) -> Result<f64> {
    let grid = u.grid();
    let n = grid.n();
    let region = cylinder_region(grid, c)?;
    let mut g = Vec::with_capacity(region.len() * n);
    let mut buf = vec![0.0; n];
    for node in region.nodes(grid) {
        if use_even_extension {
            even_gradient_into(u, node, &mut buf);
        } else {
            let (k, s) = grid.split(node);
            crate::field::gradient_at(grid, u.layer(k), s, &mut buf);
        }
        g.extend_from_slice(&buf);
    }
    let count = region.len() as f64;
    let mean: Vec<f64> = (0..n)
        .map(|d| g.iter().skip(d).step_by(n).sum::<f64>() / count)
        .collect();
    let spread: f64 = g
        .chunks(n)
        .map(|v| {
            v.iter()
                .zip(&mean)
                .map(|(a, m)| (a - m).powi(2))
                .sum::<f64>()
        })
        .sum();
    Ok(grid.cell_volume() * spread)
}

/// The selector `a_{v,z0,r}`: `0` if `v` touches the obstacle on `Q'_r`,
/// the mean of `v` over `Q_r` otherwise.
pub fn a_selector(v: &ScalarField, c: &Cylinder, contact_tol: f64) -> Result<f64> {
    let grid = v.grid();
    if !c.center.on_thin_space() {
        return Err(Error::InvalidParameter(
            "cylinder is not centered on the thin space".into(),
        ));
    }
    let region = cylinder_region(grid, c)?;
    let thin = region.thin(grid);
    if thin.is_empty() {
        return Err(Error::InsufficientData(
            "no thin nodes inside the cylinder".into(),
        ));
    }
    if thin.nodes(grid).any(|node| v.get(node) <= contact_tol) {
        Ok(0.0)
    } else {
        region_mean(v, &region)
    }
}

/// `int_{Q_r} (r^2 |grad v|^2 + |v - a_{v,z0,r}|^2)`.
pub fn signorini_growth(v: &ScalarField, c: &Cylinder, contact_tol: f64) -> Result<f64> {
    let a = a_selector(v, c, contact_tol)?;
    let region = cylinder_region(v.grid(), c)?;
    let r2 = c.radius * c.radius;
    Ok(integrate_with(v.grid(), &region, |node| {
        r2 * grad_sq(v, node) + (v.get(node) - a).powi(2)
    }))
}

/// Discrete parabolic Holder data of a field on a cylinder.
#[derive(Debug, Clone, PartialEq)]
pub struct HolderEstimate {
    /// Spatial exponent from mean-oscillation decay.
    pub exponent_space: f64,
    /// Temporal exponent from the decay of time variations at the center.
    pub exponent_time: f64,
    /// Sup of the `sigma`-Holder difference quotients (space and time) over
    /// pairs at least two grid steps apart.
    pub seminorm: f64,
    pub pairs_sampled: usize,
}

/// Half-dyadic radii `outer * 2^(-j/2)` down to `min_radius`, ascending.
fn shrinking_ladder(outer: f64, min_radius: f64) -> Vec<f64> {
    let mut radii: Vec<f64> = (0..)
        .map(|j| outer * 2f64.powf(-(j as f64) / 2.0))
        .take_while(|&r| r >= min_radius * (1.0 - 1e-12))
        .collect();
    radii.reverse();
    radii
}

fn clamp_exponent(e: f64) -> f64 {
    if e.is_finite() {
        e.clamp(0.0, 1.0)
    } else {
        1.0
    }
}

pub fn holder_seminorm(u: &ScalarField, c: &Cylinder, sigma: f64) -> Result<HolderEstimate> {
    if !(sigma > 0.0 && sigma <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma {sigma} must lie in (0, 1]"
        )));
    }
    let grid = u.grid();
    let region = cylinder_region(grid, c)?;
    let radii = shrinking_ladder(c.radius, (8.0 * grid.h()).max(grid.tau().sqrt()));
    if radii.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "Q_{} admits only {} radii above max(8h, sqrt(tau))",
            c.radius,
            radii.len()
        )));
    }

    let stride = pair_stride(grid, &region);
    let sampled: Vec<usize> = region
        .spatial
        .iter()
        .copied()
        .filter(|&s| (0..grid.n()).all(|d| grid.axis_index(s, d).is_multiple_of(stride)))
        .collect();
    let points: Vec<Vec<f64>> = sampled.iter().map(|&s| grid.point(s)).collect();
    let min_sep = 2.0 * grid.h();
    let mut pairs = 0usize;
    let mut sup: f64 = 0.0;
    for (a, &sa) in sampled.iter().enumerate() {
        for (b, &sb) in sampled.iter().enumerate().skip(a + 1) {
            let d = points[a]
                .iter()
                .zip(&points[b])
                .map(|(x, y)| (x - y).powi(2))
                .sum::<f64>()
                .sqrt();
            if d < min_sep {
                continue;
            }
            let scale = d.powf(sigma);
            for k in region.layers.clone() {
                pairs += 1;
                sup = sup.max((u.at(k, sa) - u.at(k, sb)).abs() / scale);
            }
        }
    }
    for &s in &sampled {
        for k in region.layers.clone() {
            for l in (k + 2)..region.layers.end {
                pairs += 1;
                let dt = (l - k) as f64 * grid.tau();
                sup = sup.max((u.at(l, s) - u.at(k, s)).abs() / dt.powf(sigma / 2.0));
            }
        }
    }

    let mut osc = Vec::with_capacity(radii.len());
    let mut var_t = Vec::with_capacity(radii.len());
    let center_node = nearest_spatial(grid, &c.center);
    for &r in &radii {
        let q = Cylinder::new(c.center.clone(), r);
        osc.push(mean_oscillation(u, &q)?);
        let layers = q.layer_range(grid);
        let col: Vec<f64> = layers.map(|k| u.at(k, center_node)).collect();
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        var_t.push(col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / col.len() as f64);
    }
    let space = fit_exponent(&radii, &osc)?;
    let time = fit_exponent(&radii, &var_t)?;
    Ok(HolderEstimate {
        exponent_space: clamp_exponent((space.exponent - grid.n() as f64 - 2.0) / 2.0),
        exponent_time: clamp_exponent(time.exponent / 4.0),
        seminorm: sup,
        pairs_sampled: pairs,
    })
}

/// Pair budget of the difference-quotient sup; larger regions are thinned
/// to every `stride`-th node along each axis.
const PAIR_BUDGET: f64 = 2e7;

fn pair_stride(grid: &Grid, region: &Region) -> usize {
    let m = region.spatial.len() as f64;
    let l = region.layers.len() as f64;
    let n = grid.n() as i32;
    (1..)
        .find(|&q: &usize| {
            let kept = m / (q as f64).powi(n);
            kept * kept * l / 2.0 + kept * l * l / 2.0 <= PAIR_BUDGET
        })
        .expect("some stride fits the budget")
}

fn nearest_spatial(grid: &Grid, p: &PPoint) -> usize {
    let last = (grid.nodes_per_axis() - 1) as f64;
    let idx: Vec<usize> =
        p.x.iter()
            .map(|&x| ((x + 1.0) / grid.h()).round().clamp(0.0, last) as usize)
            .collect();
    grid.spatial_index(&idx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::oscillation_double;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(x: Vec<f64>, t: f64, r: f64) -> Cylinder {
        Cylinder::new(PPoint::new(x, t), r)
    }

    #[test]
    fn phi_of_constant_is_zero() {
        let grid = Grid::new(2, 33, 32).unwrap();
        let u = ScalarField::from_fn(grid, |_, _| 2.5);
        let p = phi(&u, &c(vec![0.0, 0.0], 0.0, 0.5)).unwrap();
        assert_eq!(p.total, 0.0);
    }

    #[test]
    fn phi_terms_match_their_definitions() {
        let grid = Grid::new(2, 33, 32).unwrap();
        let u = ScalarField::from_fn(grid, |x, t| x[0] * x[1] + t);
        let cyl = c(vec![0.25, 0.0], -0.25, 0.5);
        let p = phi(&u, &cyl).unwrap();
        assert_eq!(p.osc_term, oscillation_double(&u, &cyl).unwrap());
        assert!((p.grad_term - 0.5f64.powi(6) * dirichlet(&u, &cyl).unwrap()).abs() < 1e-15);
        assert_eq!(p.total, p.grad_term + p.osc_term);
    }

    #[test]
    fn phi_is_monotone_in_radius() {
        let grid = Grid::new(2, 33, 64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let values = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let u = ScalarField::from_values(grid, values).unwrap();
        let mut last = 0.0;
        for r in [0.125, 0.25, 0.375, 0.5, 0.75] {
            let p = phi(&u, &c(vec![0.0, 0.0], 0.0, r)).unwrap().total;
            assert!(p >= last);
            last = p;
        }
    }

    #[test]
    fn campanato_of_linear_is_zero() {
        let grid = Grid::new(2, 33, 32).unwrap();
        let u = ScalarField::from_fn(grid, |x, _| 3.0 * x[0] - x[1]);
        let v = campanato_gradient(&u, &c(vec![0.0, 0.0], 0.0, 0.5), false).unwrap();
        assert!(v < 1e-20);
    }

    #[test]
    fn even_extension_of_upper_linear_is_constant() {
        let grid = Grid::new(2, 33, 16).unwrap();
        let w = ScalarField::from_fn(grid, |x, _| x[1].abs());
        let g = even_extension(&w).unwrap();
        for node in 0..grid.len() {
            let v = g.get(node);
            assert!(v[0].abs() < 1e-14 && (v[1] - 1.0).abs() < 1e-12, "{v:?}");
        }
        assert!(campanato_gradient(&w, &c(vec![0.0, 0.0], 0.0, 0.5), true).unwrap() < 1e-20);
    }

    #[test]
    fn even_extension_reflects_exactly() {
        let grid = Grid::new(2, 17, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let values = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let u = ScalarField::from_values(grid, values).unwrap();
        let g = even_extension(&u).unwrap();
        let mid = grid.thin_index();
        let m = grid.spatial_len();
        for _ in 0..20 {
            let k = rng.gen_range(0..grid.layers());
            let i = rng.gen_range(0..17);
            let j = rng.gen_range(1..=mid);
            let up = k * m + grid.spatial_index(&[i, mid + j]);
            let down = k * m + grid.spatial_index(&[i, mid - j]);
            assert_eq!(g.get(up), g.get(down));
        }
    }

    #[test]
    fn selector_branches() {
        let grid = Grid::new(2, 33, 32).unwrap();
        let cyl = c(vec![0.0, 0.0], 0.0, 0.5);
        let one = ScalarField::from_fn(grid, |x, _| 1.0 + x[0] * x[0]);
        let want = region_mean(&one, &cyl.nodes(&grid).unwrap()).unwrap();
        assert_eq!(a_selector(&one, &cyl, 1e-9).unwrap(), want);
        let touching = ScalarField::from_fn(grid, |x, _| (x[0] - 0.25).abs() + x[1].abs());
        assert_eq!(a_selector(&touching, &cyl, 1e-9).unwrap(), 0.0);
        for r in [0.375, 0.5, 0.75] {
            assert_eq!(
                a_selector(&touching, &c(vec![0.0, 0.0], 0.0, r), 1e-9).unwrap(),
                0.0
            );
        }
        assert!(a_selector(&one, &c(vec![0.0, 0.5], 0.0, 0.25), 1e-9).is_err());
    }

    #[test]
    fn holder_of_linear_and_constant() {
        let grid = Grid::new(2, 129, 256).unwrap();
        let cyl = c(vec![0.0, 0.0], 0.0, 0.5);
        let lin = ScalarField::from_fn(grid, |x, _| x[0]);
        let e = holder_seminorm(&lin, &cyl, 1.0).unwrap();
        assert!((e.exponent_space - 1.0).abs() <= 0.05, "{e:?}");
        assert!((e.seminorm - 1.0).abs() < 1e-12);
        let constant = ScalarField::from_fn(grid, |_, _| 4.0);
        let e = holder_seminorm(&constant, &cyl, 0.5).unwrap();
        assert_eq!(e.seminorm, 0.0);
        assert_eq!((e.exponent_space, e.exponent_time), (1.0, 1.0));
    }

    #[test]
    fn holder_of_square_root_profile() {
        let grid = Grid::new(2, 257, 256).unwrap();
        let u = ScalarField::from_fn(grid, |x, _| x[1].abs().sqrt());
        let e = holder_seminorm(&u, &c(vec![0.0, 0.0], 0.0, 0.5), 0.5).unwrap();
        assert!((e.exponent_space - 0.5).abs() <= 0.05, "{e:?}");
    }

    #[test]
    fn cylinders_must_fit() {
        let grid = Grid::new(2, 17, 16).unwrap();
        let u = ScalarField::zeros(grid);
        assert!(matches!(
            phi(&u, &c(vec![0.9, 0.0], 0.0, 0.25)),
            Err(Error::OutOfGrid(_))
        ));
        assert!(matches!(
            phi(&u, &c(vec![0.0, 0.0], -0.95, 0.25)),
            Err(Error::OutOfGrid(_))
        ));
    }
}
