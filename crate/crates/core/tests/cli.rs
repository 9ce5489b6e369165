use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use serde_json::Value;
use signorini_lab::analysis::{growth_report, radius_ladder, FunctionalKind};
use signorini_lab::cli::snapshot;
use signorini_lab::field::ScalarField;
use signorini_lab::solve::signorini_profile;
use signorini_lab::{Grid, PPoint};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_signorini-lab"))
        .args(args)
        .output()
        .unwrap()
}

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(name)
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn run_bundled(name: &str) -> (Value, f64) {
    let out = tempfile::tempdir().unwrap();
    let config = bundled(name);
    let start = Instant::now();
    let o = bin(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
    ]);
    let elapsed = start.elapsed().as_secs_f64();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let budget = toml::from_str::<toml::Value>(&std::fs::read_to_string(&config).unwrap()).unwrap()
        ["budget_seconds"]
        .as_integer()
        .unwrap() as f64;
    assert!(
        elapsed <= budget,
        "{name} took {elapsed:.1}s, budget {budget}s"
    );
    (summary(out.path()), elapsed)
}

#[test]
fn caloric_phi_config_reports_exponent_ten() {
    let (s, _) = run_bundled("caloric_phi.cfg");
    assert_eq!(s["schema_version"], 1);
    assert_eq!(s["status"], "ok");
    let phi = &s["analysis"][0];
    for key in ["min_exponent", "max_exponent"] {
        let e = phi[key].as_f64().unwrap();
        assert!((e - 10.0).abs() <= 0.15, "{key} = {e}");
    }
    assert_eq!(s["pass"], true);
}

#[test]
fn drift_gauge_config_clears_the_floor() {
    let (s, _) = run_bundled("drift_gauge.cfg");
    let alpha = s["certify"]["fitted_alpha"].as_f64().unwrap();
    assert!(alpha >= 0.3, "alpha = {alpha}");
    assert_eq!(s["pass"], true);
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("exp.cfg");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn missing_grid_size_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[grid]\nn = 2\ntime_steps = 8\n\n[problem]\nkind = \"caloric\"\ndata = \"x1\"\n",
    );
    let o = bin(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("nodes"), "{err}");
}

#[test]
fn non_convergence_flags_the_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[grid]\nn = 2\nnodes = 17\ntime_steps = 8\n\n[problem]\nkind = \"signorini\"\ndata = \"signorini_profile\"\n\n[solver]\nmax_sweeps = 1\n",
    );
    let out = dir.path().join("o");
    let o = bin(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let s = summary(&out);
    assert_eq!(s["status"], "failed");
    assert!(s["error"].as_str().unwrap().contains("did not converge"));
    assert_eq!(s["pass"], false);
}

#[test]
fn failed_threshold_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
[grid]
n = 2
nodes = 33
time_steps = 64

[problem]
kind = "closed_form"
data = "x1"

[analysis]
radii = { min = 0.125, max = 0.5 }
centers = [[0.0, 0.0, 0.0]]

[[analysis.functional]]
kind = "phi"
min_exponent = 12.0
"#,
    );
    let out = dir.path().join("o");
    let o = bin(&[
        "analyze",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(summary(&out)["analysis"][0]["pass"], false);
}

#[test]
fn info_prints_the_header_and_rejects_truncation() {
    let dir = tempfile::tempdir().unwrap();
    let grid = Grid::new(2, 9, 4).unwrap();
    let path = dir.path().join("u.sgnl");
    snapshot::write(&path, &ScalarField::from_fn(grid, |x, t| x[0] + t)).unwrap();
    let o = bin(&["info", path.to_str().unwrap()]);
    assert!(o.status.success());
    let header: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(header["dims"], serde_json::json!([5, 9, 9]));
    assert_eq!(header["version"], 1);

    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 8]).unwrap();
    assert!(
        matches!(snapshot::read(&path), Err(signorini_lab::Error::Snapshot(m)) if m.contains("truncated"))
    );
    std::fs::write(&path, &bytes[..20]).unwrap();
    let o = bin(&["info", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("truncated"));
}

#[test]
fn snapshot_reanalysis_matches_memory() {
    let dir = tempfile::tempdir().unwrap();
    let grid = Grid::new(2, 65, 64).unwrap();
    let u = ScalarField::from_fn(grid, |x, _| signorini_profile(x));
    let path = dir.path().join("profile.sgnl");
    snapshot::write(&path, &u).unwrap();
    let back = snapshot::read(&path).unwrap();
    let radii = radius_ladder(8.0 * grid.h(), 0.71, 2).unwrap();
    let kind = FunctionalKind::CampanatoGrad {
        even_extension: true,
    };
    let a = growth_report(&u, &PPoint::origin(2), kind, &radii).unwrap();
    let b = growth_report(&back, &PPoint::origin(2), kind, &radii).unwrap();
    assert_eq!(a, b);
}

#[test]
fn analyze_reads_a_snapshot_named_in_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let grid = Grid::new(2, 33, 64).unwrap();
    snapshot::write(
        &dir.path().join("x1.sgnl"),
        &ScalarField::from_fn(grid, |x, _| x[0]),
    )
    .unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
[grid]
n = 2
nodes = 33
time_steps = 64

[problem]
kind = "closed_form"
snapshot = "x1.sgnl"

[analysis]
radii = { min = 0.125, max = 0.5 }
centers = [[0.0, 0.0, 0.0]]

[[analysis.functional]]
kind = "dirichlet"
min_exponent = 3.5
max_exponent = 4.5
"#,
    );
    let out = dir.path().join("o");
    let o = bin(&[
        "analyze",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--threads",
        "1",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("growth_dirichlet.csv")).unwrap();
    assert!(csv.starts_with("center_x1,center_x2,center_t,radius,value,fitted_exponent,residual\n"));
}
