//! Recursive dynamic reserves: error populations binned by an explanatory
//! variable, looked up at the central forecast, combined over load, wind
//! and solar.
//!
//! ```text
//! cargo run --example dynamic_reserve
//! ```

use std::path::Path;

use dynreserve::config::RunConfig;
use dynreserve::pipeline::{Inputs, KINDS};
use dynreserve::reserve::DEFAULT_CI;
use dynreserve::{build_model, requirements, rss_combine, ExplanatoryKind, ReserveProfile};

pub fn run_example(config: &Path) -> dynreserve::Result<ReserveProfile> {
    let cfg = RunConfig::load(config)?;
    let inputs = Inputs::load(&cfg)?;
    let mut parts = Vec::new();
    for kind in KINDS {
        let model = build_model(inputs.history(kind), cfg.explanatory(kind), cfg.bins)?;
        let forecast = inputs.forecast(kind);
        let nu = model.explanatory().derive(forecast.central().values(), &forecast.timestamps());
        let profile = requirements(&model, &nu, DEFAULT_CI)?;
        println!(
            "{kind:<6} binned by {:<9} peak up {:>7.1} MW, peak down {:>7.1} MW",
            model.explanatory().as_str(),
            profile.up.iter().copied().fold(0.0, f64::max),
            profile.down.iter().copied().fold(0.0, f64::max)
        );
        parts.push(profile);
    }
    let total = rss_combine(&parts[0], &parts[1], &parts[2])?;

    // the same solar history binned by hour of day instead
    let by_hour = build_model(inputs.history(KINDS[2]), ExplanatoryKind::HourOfDay, 24)?;
    println!("\nhour   system up  system down   solar up (by hour)");
    for (t, ts) in inputs.timestamps.iter().enumerate() {
        let h = f64::from(chrono::Timelike::hour(ts));
        println!(
            "{:>4} {:>11.1} {:>12.1} {:>18.1}",
            t,
            total.up[t],
            total.down[t],
            by_hour.lookup(h, DEFAULT_CI, dynreserve::Direction::Up)?
        );
    }
    Ok(total)
}

fn main() -> dynreserve::Result<()> {
    run_example(Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/config.json"))).map(|_| ())
}
