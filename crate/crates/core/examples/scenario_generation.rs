//! Scenarios from a probabilistic forecast, written to CSV, with the
//! scenario moments checked against the forecast moments.
//!
//! ```text
//! cargo run --example scenario_generation -- /tmp/scenarios.csv
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use dynreserve::forecast::{compare_moments, MOMENT_NAMES};
use dynreserve::io;
use dynreserve::synthetic::{forecast_day, standard_levels, varied_forecast};
use dynreserve::{generate_scenarios, CopulaParams, ScenarioSet};

pub fn run_example(out: &Path) -> dynreserve::Result<ScenarioSet> {
    let forecast = varied_forecast(forecast_day(), 24, &standard_levels())?;
    let params = CopulaParams::default();
    let set = generate_scenarios(&forecast, 1000, &params, 2020)?;
    io::write_scenarios(out, &set, BTreeMap::new())?;
    println!("{} scenarios x {} intervals written to {}", set.len(), set.horizon(), out.display());

    let first = &set.scenarios()[0];
    println!("scenario 0, first six hours: {:.1?}", &first.values[..6]);
    println!("scenario 0 probability: {:.6}", first.probability);

    let cmp = compare_moments(&forecast, &set, 10_000)?;
    for (name, v) in MOMENT_NAMES.iter().zip(cmp.nrmse) {
        println!("%NRMSE {name:<16} {}", v.map_or("undefined".into(), |v| format!("{v:.3}")));
    }
    Ok(set)
}

fn main() -> dynreserve::Result<()> {
    let out = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("dynreserve_scenarios.csv"));
    run_example(&out).map(|_| ())
}
