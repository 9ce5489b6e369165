//! Acceptance criteria 1-10. Each criterion prints one PASS/FAIL line; the
//! test fails if any criterion outside `KNOWN_GAPS` fails.

use std::io::Write;
use std::process::Command;

use nalgebra::{DMatrix, DVector};
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use signorini_lab::analysis::{
    beta_exponent, beta_exponent_exact, fit_exponent, growth_report, radius_ladder, FunctionalKind,
};
use signorini_lab::certify::{
    certify_cylinders, certify_deskewed, certify_frozen, drift_solution, free_boundary_point,
    FamilySpec,
};
use signorini_lab::field::{oscillation_double, ScalarField};
use signorini_lab::functionals::{campanato_gradient, cylinder_region, signorini_growth};
use signorini_lab::geometry::{spd_sqrt, Frame, SpdMatrix};
use signorini_lab::solve::{
    complementarity, heat_solve, signorini_profile, signorini_solve, CoefficientField,
    Complementarity, DriftField, SolverParams,
};
use signorini_lab::{Cylinder, Grid, PPoint};

/// Criteria expected to fail, with the reason.
const KNOWN_GAPS: &[(usize, &str)] = &[(
    2,
    "u = x1^2 - x2^2 has a linear gradient, so the Campanato integral over Q_rho scales as rho^2 |Q_rho| = rho^(n+4) = rho^6 for n = 2; the target 8 is out of reach",
)];

const CONTACT_TOL: f64 = 1e-9;

/// Complementarity of one Signorini solve and its mesh width.
struct Solve {
    name: &'static str,
    h: f64,
    residuals: Complementarity,
}

struct Outcome {
    criterion: usize,
    pass: bool,
    detail: String,
}

/// Writes past the test harness capture so the criterion lines land in the
/// plain `cargo test` log.
fn say(line: String) {
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "{line}").unwrap();
    stdout.flush().unwrap();
}

fn record(out: &mut Vec<Outcome>, criterion: usize, pass: bool, detail: String) {
    say(format!(
        "criterion {criterion:>2} {} {detail}",
        if pass { "PASS" } else { "FAIL" }
    ));
    out.push(Outcome {
        criterion,
        pass,
        detail,
    });
}

fn desk_grid() -> Grid {
    Grid::new(2, 65, 256).unwrap()
}

fn profile_data(grid: Grid) -> ScalarField {
    ScalarField::from_fn(grid, |x, _| signorini_profile(x))
}

/// Phi exponents of two caloric fields at five centers with `|x1| >= 0.5`,
/// radii in `[8h, 0.25]` on `N = 257`.
fn caloric_phi(out: &mut Vec<Outcome>) {
    let grid = Grid::new(2, 257, 256).unwrap();
    let radii = radius_ladder(8.0 * grid.h(), 0.25, 2).unwrap();
    let centers = [
        [0.5, 0.0, -0.5],
        [-0.5, 0.25, -0.25],
        [0.625, -0.25, -0.75],
        [-0.625, -0.5, 0.0],
        [0.75, 0.5, -0.125],
    ];
    let sp = SolverParams::default();
    let id = CoefficientField::identity(2);
    let mut worst: f64 = 0.0;
    let mut exps = Vec::new();
    for data in [
        ScalarField::from_fn(grid, |x, _| x[0]),
        ScalarField::from_fn(grid, |x, t| x[0] * x[0] + 2.0 * t),
    ] {
        let u = heat_solve(&data, &id, &sp).unwrap();
        for c in &centers {
            let center = PPoint::new(c[..2].to_vec(), c[2]);
            let e = growth_report(&u, &center, FunctionalKind::Phi, &radii)
                .unwrap()
                .fitted_exponent;
            worst = worst.max((e - 10.0).abs());
            exps.push(e);
        }
    }
    let lo = exps.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = exps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    record(
        out,
        1,
        worst <= 0.15,
        format!(
            "phi exponents in [{lo:.4}, {hi:.4}] over {} radii, target 10 +- 0.15",
            radii.len()
        ),
    );
}

fn caloric_campanato(out: &mut Vec<Outcome>) {
    let grid = desk_grid();
    let radii = radius_ladder(8.0 * grid.h(), 0.71, 2).unwrap();
    let data = ScalarField::from_fn(grid, |x, _| x[0] * x[0] - x[1] * x[1]);
    let u = heat_solve(
        &data,
        &CoefficientField::identity(2),
        &SolverParams::default(),
    )
    .unwrap();
    let values: Vec<f64> = radii
        .iter()
        .map(|&r| campanato_gradient(&u, &Cylinder::new(PPoint::origin(2), r), false).unwrap())
        .collect();
    let e = fit_exponent(&radii, &values).unwrap().exponent;
    record(
        out,
        2,
        (e - 8.0).abs() <= 0.15,
        format!(
            "campanato exponent {e:.4}, target 8 +- 0.15 (n + 4 = 6 off by {:.4})",
            (e - 6.0).abs()
        ),
    );
}

/// `G(rho) <= C (rho/r)^(n+4) G(r)` for all pairs of ladder radii.
fn signorini_oscillation(out: &mut Vec<Outcome>, comp: &mut Vec<Solve>) {
    let grid = desk_grid();
    let u = signorini_solve(
        &profile_data(grid),
        &CoefficientField::identity(2),
        &SolverParams::default(),
    )
    .unwrap();
    comp.push(Solve {
        name: "signorini N=65",
        h: grid.h(),
        residuals: complementarity(&u, &grid.interior_region()),
    });
    let center = free_boundary_point(&u, grid.time_steps(), CONTACT_TOL).unwrap();
    let radii = radius_ladder(8.0 * grid.h(), 0.71, 2).unwrap();
    let g: Vec<f64> = radii
        .iter()
        .map(|&r| signorini_growth(&u, &Cylinder::new(center.clone(), r), CONTACT_TOL).unwrap())
        .collect();
    let mut c: f64 = 0.0;
    for i in 0..radii.len() {
        for j in i + 1..radii.len() {
            c = c.max(g[i] / ((radii[i] / radii[j]).powi(6) * g[j]));
        }
    }
    record(
        out,
        3,
        c <= 50.0,
        format!(
            "worst constant {c:.3} over {} radius pairs at x1 = {}, bound 50",
            radii.len() * (radii.len() - 1) / 2,
            center.x[0]
        ),
    );
}

fn gradient_regularity(out: &mut Vec<Outcome>) {
    let grid = desk_grid();
    let u = profile_data(grid);
    let radii = radius_ladder(8.0 * grid.h(), 0.71, 2).unwrap();
    let kind = FunctionalKind::CampanatoGrad {
        even_extension: true,
    };
    let report = growth_report(&u, &PPoint::origin(2), kind, &radii).unwrap();
    let holder = kind.implied_holder(2, report.fitted_exponent);
    let beta = beta_exponent_exact(2, Ratio::new(1, 2));
    let beta_f = beta_exponent(2, 0.5);
    let pass = (holder - 0.5).abs() <= 0.07 && beta == Ratio::new(1, 68) && holder >= beta_f;
    record(
        out,
        4,
        pass,
        format!("Holder exponent of even gradient {holder:.4} (target 0.5 +- 0.07), beta = {beta}"),
    );
}

fn minimizer_sanity(out: &mut Vec<Outcome>) {
    let grid = desk_grid();
    let sp = SolverParams::default();
    let u = signorini_solve(&profile_data(grid), &CoefficientField::identity(2), &sp).unwrap();
    let center = free_boundary_point(&u, grid.time_steps(), CONTACT_TOL).unwrap();
    let radii = radius_ladder(8.0 * grid.h(), 0.71, 2).unwrap();
    let report = certify_cylinders(
        &u,
        &center,
        &radii,
        &CoefficientField::identity(2),
        &FamilySpec::default(),
        &sp,
    )
    .unwrap();
    let worst = report.omega_min.iter().cloned().fold(0.0, f64::max);
    record(
        out,
        5,
        worst <= 1e-6,
        format!(
            "max omega_min {worst:.3e} over {} cylinders, bound 1e-6",
            radii.len()
        ),
    );
}

/// Singular drift `|x|^(-1/2) e1`, capped at its value at distance `h`.
fn drift_gauge(out: &mut Vec<Outcome>, comp: &mut Vec<Solve>) {
    let grid = Grid::new(2, 129, 256).unwrap();
    let sp = SolverParams::default();
    let radii = radius_ladder(8.0 * grid.h(), 0.5, 2).unwrap();
    let family = FamilySpec::default();
    let id = CoefficientField::identity(2);
    let drift = DriftField::Singular {
        p: 4.0,
        magnitude: 1.0,
        cap: grid.h().powf(-0.5),
        direction: vec![1.0, 0.0],
        center: vec![0.0, 0.0],
    };
    let u = drift_solution(grid, drift, &sp).unwrap();
    comp.push(Solve {
        name: "drift N=129",
        h: grid.h(),
        residuals: complementarity(&u, &grid.interior_region()),
    });
    let center = free_boundary_point(&u, grid.time_steps(), CONTACT_TOL).unwrap();
    let report = certify_cylinders(&u, &center, &radii, &id, &family, &sp).unwrap();
    let plain = drift_solution(grid, DriftField::Zero, &sp).unwrap();
    let center0 = free_boundary_point(&plain, grid.time_steps(), CONTACT_TOL).unwrap();
    let control = certify_cylinders(&plain, &center0, &radii, &id, &family, &sp).unwrap();
    let worst = control.omega_min.iter().cloned().fold(0.0, f64::max);
    let positive = report.omega_min.iter().all(|&w| w > 0.0);
    record(
        out,
        6,
        report.fitted_alpha >= 0.3 && positive && worst <= 1e-6,
        format!(
            "gauge exponent {:.4} (floor 0.3, theory 0.5) at x1 = {}, control max omega {worst:.2e}",
            report.fitted_alpha, center.x[0]
        ),
    );
}

/// `A = [[2, 1], [1, 1]]` on its lattice frame, plus a normal singular drift
/// so the gauge is nonzero.
fn frozen_transfer(out: &mut Vec<Outcome>, comp: &mut Vec<Solve>) {
    let grid = Grid::new(2, 129, 256).unwrap();
    let sp = SolverParams::default();
    let lattice = CoefficientField::lattice_frame(vec![vec![1, 1], vec![0, 1]]).unwrap();
    let a = lattice.matrix_at(&[0.0, 0.0], 0.0);
    let frame = Frame::new(&a, PPoint::origin(2)).unwrap();
    let data = ScalarField::from_fn(grid, |x, _| signorini_profile(&frame.to_deskewed(x)));
    let drift = DriftField::Singular {
        p: 4.0,
        magnitude: 1.0,
        cap: grid.h().powf(-0.5),
        direction: vec![0.0, 1.0],
        center: vec![0.0, 0.0],
    };
    let u = signorini_solve(&data, &lattice.clone().with_drift(drift).unwrap(), &sp).unwrap();
    comp.push(Solve {
        name: "lattice A N=129",
        h: grid.h(),
        residuals: complementarity(&u, &grid.interior_region()),
    });
    let radii = radius_ladder(8.0 * grid.h(), 0.5, 2).unwrap();
    let family = FamilySpec::default();
    let z0 = PPoint::origin(2);
    let frozen = certify_frozen(&u, &z0, &radii, &lattice, &family, &sp).unwrap();
    let deskewed = certify_deskewed(&u, &z0, &radii, &lattice, &family, &sp).unwrap();
    let gap = frozen
        .omega_min
        .iter()
        .zip(&deskewed.omega_min)
        .map(|(f, d)| (f - d).abs() / f.max(*d))
        .fold(0.0, f64::max);
    let positive = frozen.omega_min.iter().all(|&w| w > 0.0);
    record(
        out,
        7,
        gap <= 0.05 && positive,
        format!(
            "max relative gap {:.3}% over {} radii, bound 5%",
            100.0 * gap,
            radii.len()
        ),
    );
}

/// Dense 5-point implicit Euler system on a 9 x 9 x 8 grid, solved layer by
/// layer with a primal-dual active set method.
fn dense_signorini(grid: Grid, data: &ScalarField) -> ScalarField {
    let n = grid.nodes_per_axis();
    let (h, tau) = (grid.h(), grid.tau());
    let interior: Vec<usize> = (0..grid.spatial_len())
        .filter(|&s| !grid.on_box_boundary(s))
        .collect();
    let pos = |s: usize| interior.iter().position(|&i| i == s);
    let m = interior.len();
    let mut mat = DMatrix::zeros(m, m);
    for (i, &s) in interior.iter().enumerate() {
        mat[(i, i)] = 4.0 / (h * h) + 1.0 / tau;
        for nb in [s - 1, s + 1, s - n, s + n] {
            if let Some(j) = pos(nb) {
                mat[(i, j)] = -1.0 / (h * h);
            }
        }
    }
    let thin: Vec<bool> = interior.iter().map(|&s| grid.is_thin(s)).collect();
    let mut u = data.clone();
    for k in 1..grid.layers() {
        let mut rhs = DVector::zeros(m);
        for (i, &s) in interior.iter().enumerate() {
            rhs[i] = u.at(k - 1, s) / tau;
            for nb in [s - 1, s + 1, s - n, s + n] {
                if pos(nb).is_none() {
                    rhs[i] += u.at(k, nb) / (h * h);
                }
            }
        }
        let mut active: Vec<bool> = thin.clone();
        let mut x = DVector::zeros(m);
        for _ in 0..100 {
            let mut sys = mat.clone();
            let mut b = rhs.clone();
            for i in 0..m {
                if active[i] {
                    sys.row_mut(i).fill(0.0);
                    sys[(i, i)] = 1.0;
                    b[i] = 0.0;
                }
            }
            x = sys.lu().solve(&b).unwrap();
            let lambda = &mat * &x - &rhs;
            let next: Vec<bool> = (0..m)
                .map(|i| {
                    thin[i]
                        && (if active[i] {
                            lambda[i] > 0.0
                        } else {
                            x[i] < 0.0
                        })
                })
                .collect();
            if next == active {
                break;
            }
            active = next;
        }
        for (i, &s) in interior.iter().enumerate() {
            u.values_mut()[k * grid.spatial_len() + s] = x[i];
        }
    }
    u
}

fn oracles(out: &mut Vec<Outcome>, comp: &mut Vec<Solve>) {
    // Double oscillation sum against a brute-force pair loop.
    let grid = Grid::new(2, 17, 16).unwrap();
    let f = ScalarField::from_fn(grid, |x, t| (2.0 * x[0]).sin() + x[1] * x[1] * (1.0 + t));
    let c = Cylinder::new(PPoint::new(vec![0.125, 0.0], -0.25), 0.35);
    let region = cylinder_region(&grid, &c).unwrap();
    let nodes: Vec<usize> = region.nodes(&grid).collect();
    let vol = grid.cell_volume();
    let brute: f64 = nodes
        .iter()
        .map(|&p| {
            nodes
                .iter()
                .map(|&q| (f.get(p) - f.get(q)).powi(2))
                .sum::<f64>()
        })
        .sum::<f64>()
        * vol
        * vol;
    let fast = oscillation_double(&f, &c).unwrap();
    let osc_err = (fast - brute).abs() / brute;

    // PSOR against the dense active set solve.
    let small = Grid::new(2, 9, 8).unwrap();
    let data = profile_data(small);
    let sp = SolverParams::default();
    let psor = signorini_solve(&data, &CoefficientField::identity(2), &sp).unwrap();
    comp.push(Solve {
        name: "signorini 9x9x8",
        h: small.h(),
        residuals: complementarity(&psor, &small.interior_region()),
    });
    let dense = dense_signorini(small, &data);
    let lcp_err = psor.max_abs_diff(&dense);

    // Square roots of random SPD matrices.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut sqrt_err: f64 = 0.0;
    for n in [2, 3, 4] {
        for _ in 0..25 {
            let q = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0))
                .qr()
                .q();
            let d = DVector::from_fn(n, |_, _| rng.gen_range(0.5..2.0));
            let a = SpdMatrix::new(&q * DMatrix::from_diagonal(&d) * q.transpose()).unwrap();
            let r = spd_sqrt(&a);
            sqrt_err = sqrt_err.max((r.matrix() * r.matrix() - a.matrix()).amax());
        }
    }
    record(
        out,
        8,
        nodes.len() <= 200 && osc_err <= 1e-10 && lcp_err <= 1e-8 && sqrt_err <= 1e-10,
        format!(
            "oscillation {osc_err:.1e} on {} nodes, PSOR vs dense {lcp_err:.1e}, sqrt {sqrt_err:.1e}",
            nodes.len()
        ),
    );
}

fn complementarity_residuals(out: &mut Vec<Outcome>, comp: &[Solve], tol: f64) {
    const C: f64 = 2.0;
    let mut pass = true;
    let mut parts = Vec::new();
    for Solve {
        name,
        h,
        residuals: c,
    } in comp
    {
        let ok =
            c.min_value >= -1e-9 && c.min_flux_jump >= -C * h && c.max_product <= C * (h + tol);
        pass &= ok;
        parts.push(format!(
            "{name}: min {:.1e} jump {:.1e} product {:.1e}",
            c.min_value, c.min_flux_jump, c.max_product
        ));
    }
    record(out, 9, pass, format!("C = {C}; {}", parts.join("; ")));
}

fn determinism(out: &mut Vec<Outcome>) {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("det.cfg");
    std::fs::write(
        &config,
        r#"
name = "determinism"
seed = 3

[grid]
n = 2
nodes = 33
time_steps = 64

[problem]
kind = "signorini"
data = "signorini_profile"

[analysis]
radii = { min = 0.125, max = 0.5 }
random_centers = 3
centers = ["free_boundary"]

[[analysis.functional]]
kind = "phi"

[[analysis.functional]]
kind = "campanato_grad"
even_extension = true

[certify]
mode = "plain"
center = "free_boundary"
radii = { min = 0.25, max = 0.71 }
"#,
    )
    .unwrap();
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        let status = Command::new(env!("CARGO_BIN_EXE_signorini-lab"))
            .args(["run", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .args(["--seed", "5"])
            .output()
            .unwrap();
        assert!(
            status.status.success(),
            "{}",
            String::from_utf8_lossy(&status.stderr)
        );
        out
    };
    let (a, b) = (run("a"), run("b"));
    let mut files: Vec<String> = std::fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    files.sort();
    let same = files
        .iter()
        .all(|f| std::fs::read(a.join(f)).unwrap() == std::fs::read(b.join(f)).unwrap());
    let reports = files
        .iter()
        .filter(|f| f.ends_with(".csv") || f.ends_with(".json"))
        .count();
    record(
        out,
        10,
        same && reports >= 4,
        format!(
            "{} artifacts byte-identical across two runs: {}",
            files.len(),
            files.join(", ")
        ),
    );
}

#[test]
fn acceptance() {
    let mut out = Vec::new();
    let mut comp = Vec::new();
    caloric_phi(&mut out);
    caloric_campanato(&mut out);
    signorini_oscillation(&mut out, &mut comp);
    gradient_regularity(&mut out);
    minimizer_sanity(&mut out);
    drift_gauge(&mut out, &mut comp);
    frozen_transfer(&mut out, &mut comp);
    oracles(&mut out, &mut comp);
    complementarity_residuals(&mut out, &comp, SolverParams::default().tol);
    determinism(&mut out);

    let unexpected: Vec<&Outcome> = out
        .iter()
        .filter(|o| !o.pass && !KNOWN_GAPS.iter().any(|(c, _)| *c == o.criterion))
        .collect();
    for (c, why) in KNOWN_GAPS {
        if let Some(o) = out.iter().find(|o| o.criterion == *c) {
            if !o.pass {
                say(format!("criterion {c:>2} known gap: {why}"));
            }
        }
    }
    let passed = out.iter().filter(|o| o.pass).count();
    say(format!("{passed}/{} criteria pass", out.len()));
    assert!(
        unexpected.is_empty(),
        "failed: {:?}",
        unexpected
            .iter()
            .map(|o| (o.criterion, &o.detail))
            .collect::<Vec<_>>()
    );
}
