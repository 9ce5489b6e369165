//! Runs a full experiment from an inline TOML config through the same
//! pipeline the `signorini-lab` binary uses.

use signorini_lab::cli::{run, ExperimentConfig, Stages};

const CONFIG: &str = r#"
name = "inline"
seed = 7

[grid]
n = 2
nodes = 65
time_steps = 64

[problem]
kind = "signorini"
data = "signorini_profile"

[analysis]
radii = { min = 0.125, max = 0.5 }
centers = ["origin"]
random_centers = 2

[[analysis.functional]]
kind = "campanato_grad"
even_extension = true
min_holder = 0.4
"#;

fn main() -> signorini_lab::Result<()> {
    let config = ExperimentConfig::from_toml(CONFIG)?;
    let out = std::env::temp_dir().join("signorini-lab-inline");
    let summary = run(&config, Stages::RUN, &out)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&summary).expect("summaries serialize")
    );
    println!("reports in {}", out.display());
    Ok(())
}
