//! Smallest reserves that keep the shortfall and surplus risk at or below a
//! ceiling in every hour.
//!
//! ```text
//! cargo run --example risk_ceiling -- 100
//! ```

use std::path::Path;

use dynreserve::config::RunConfig;
use dynreserve::pipeline::Inputs;
use dynreserve::risk::{size_profile, GroupKey};
use dynreserve::{risk, DeviationDistribution, ReserveProfile};

pub fn run_example(config: &Path, limit: f64) -> dynreserve::Result<ReserveProfile> {
    let cfg = RunConfig::load(config)?;
    let inputs = Inputs::load(&cfg)?;
    let dist = DeviationDistribution::build(&inputs.net_history, GroupKey::HourOfDay)?;
    let sized = size_profile(&dist, limit, &inputs.timestamps)?;
    let rho = risk(&dist, &sized, &inputs.timestamps)?;
    println!("risk ceiling {limit} MW");
    println!("hour        up      down  rho_short  rho_long");
    for t in 0..sized.horizon() {
        println!(
            "{t:>4} {:>9.1} {:>9.1} {:>10.2} {:>9.2}",
            sized.up[t], sized.down[t], rho.rho_short[t], rho.rho_long[t]
        );
    }
    Ok(sized)
}

fn main() -> dynreserve::Result<()> {
    let limit = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(100.0);
    run_example(Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/config.json")), limit).map(|_| ())
}
