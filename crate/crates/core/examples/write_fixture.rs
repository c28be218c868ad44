//! Regenerates the bundled synthetic fixture.
//!
//! ```text
//! cargo run --example write_fixture -- crates/core/fixtures
//! ```

use std::path::PathBuf;

use dynreserve::synthetic::write_fixture;

pub const FIXTURE_SEED: u64 = 2020;

pub fn run_example(dir: &std::path::Path) -> dynreserve::Result<()> {
    write_fixture(dir, FIXTURE_SEED)?;
    println!("fixture written to {}", dir.display());
    Ok(())
}

fn main() -> dynreserve::Result<()> {
    let dir = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures")));
    run_example(&dir)
}
