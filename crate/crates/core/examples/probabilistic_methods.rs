//! The anticipative methods on the solar forecast, side by side with the
//! recursive baseline and their hybrid.
//!
//! ```text
//! cargo run --example probabilistic_methods
//! ```

use std::path::Path;

use dynreserve::config::RunConfig;
use dynreserve::methods::{
    extreme_count, method_all_scenarios, method_bounds, method_deterministic, method_extreme_scenarios,
    method_hybrid, method_prediction_interval, select_extremes,
};
use dynreserve::pipeline::{scenarios_for, Inputs};
use dynreserve::{build_model, MethodResult, VariableKind};

pub fn run_example(config: &Path) -> dynreserve::Result<Vec<MethodResult>> {
    let cfg = RunConfig::load(config)?;
    let inputs = Inputs::load(&cfg)?;
    let forecast = inputs.forecast(VariableKind::Solar);
    let model = build_model(inputs.history(VariableKind::Solar), cfg.solar_explanatory, cfg.bins)?;
    let set = scenarios_for(&inputs, &cfg)?;
    let d = extreme_count(cfg.extreme_fraction, set.len())?;
    let extremes = select_extremes(&set, d, cfg.extreme_score)?;

    let mut results = vec![
        method_deterministic(forecast, &model, cfg.ci)?,
        method_all_scenarios(&set, &model, cfg.ci)?,
        method_extreme_scenarios(&set, &extremes, &model, cfg.ci)?,
        method_bounds(&set, &extremes, forecast)?,
        method_prediction_interval(forecast, cfg.pi, false)?,
    ];
    results.push(method_hybrid(&results)?);

    print!("hour");
    for r in &results {
        print!(" {:>14}", r.method.as_str());
    }
    println!("   (upward MW)");
    for t in 0..forecast.horizon() {
        print!("{t:>4}");
        for r in &results {
            print!(" {:>14.1}", r.profile.up[t]);
        }
        println!();
    }
    println!("\n{} scenarios, {d} extreme in each direction", set.len());
    Ok(results)
}

fn main() -> dynreserve::Result<()> {
    run_example(Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/config.json"))).map(|_| ())
}
