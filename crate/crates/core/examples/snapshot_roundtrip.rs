//! Writes a field to the binary snapshot format, reads back the header and
//! the payload, and confirms the round trip is bit-identical.

use signorini_lab::cli::snapshot;
use signorini_lab::{Grid, ScalarField};

fn main() -> signorini_lab::Result<()> {
    let grid = Grid::new(3, 9, 4)?;
    let u = ScalarField::from_fn(grid, |x, t| x[0] * x[1] - x[2] + t);
    let dir = std::env::temp_dir().join("signorini-lab-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("field.sgnl");
    snapshot::write(&path, &u)?;

    let header = snapshot::read_header(&path)?;
    println!(
        "{}",
        serde_json::to_string(&header).expect("headers serialize")
    );
    let back = snapshot::read(&path)?;
    let identical = u
        .values()
        .iter()
        .zip(back.values())
        .all(|(a, b)| a.to_bits() == b.to_bits());
    println!(
        "{} bytes, bit-identical: {identical}",
        std::fs::metadata(&path)?.len()
    );
    Ok(())
}
