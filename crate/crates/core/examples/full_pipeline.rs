//! The whole pipeline from a config file: scenarios, every method, system
//! totals, risk, sensitivity grid and a manifest of hashes.
//!
//! ```text
//! cargo run --example full_pipeline -- /tmp/dynreserve_out
//! ```

use std::path::{Path, PathBuf};

use dynreserve::config::RunConfig;
use dynreserve::forecast::MOMENT_NAMES;
use dynreserve::pipeline::{run_pipeline, RunReport};

pub fn run_example(config: &Path, output_dir: &Path) -> dynreserve::Result<RunReport> {
    let mut cfg = RunConfig::load(config)?;
    cfg.output_dir = output_dir.to_path_buf();
    let report = run_pipeline(&cfg)?;
    for (name, sha) in &report.manifest.outputs {
        println!("{:<28} {}", name, &sha[..12]);
    }
    if let Some(cmp) = &report.moments {
        for (name, v) in MOMENT_NAMES.iter().zip(cmp.nrmse) {
            println!("%NRMSE {name:<16} {}", v.map_or("undefined".into(), |v| format!("{v:.3}")));
        }
    }
    for (method, rho) in &report.risks {
        let peak = rho.rho_short.iter().copied().fold(0.0, f64::max);
        println!("{:<20} peak shortfall risk {peak:>8.1} MW", method.as_str());
    }
    Ok(report)
}

fn main() -> dynreserve::Result<()> {
    let out = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("dynreserve_out"));
    let config = Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/config.json"));
    run_example(config, &out).map(|_| ())
}
