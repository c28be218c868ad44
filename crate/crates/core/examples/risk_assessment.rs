//! Shortfall and surplus risk of reserve profiles against the hour-of-day
//! distribution of historical net-demand deviations.
//!
//! ```text
//! cargo run --example risk_assessment
//! ```

use std::path::Path;

use dynreserve::config::RunConfig;
use dynreserve::pipeline::{method_component, recursive_components, system_total, Inputs, Models};
use dynreserve::risk::GroupKey;
use dynreserve::{risk, DeviationDistribution, MethodId, RiskProfile};

pub fn run_example(config: &Path) -> dynreserve::Result<Vec<(MethodId, RiskProfile)>> {
    let cfg = RunConfig::load(config)?;
    let inputs = Inputs::load(&cfg)?;
    let models = Models::build(&inputs, &cfg)?;
    let dist = DeviationDistribution::build(&inputs.net_history, GroupKey::HourOfDay)?;
    let recursive = recursive_components(&inputs, &models, cfg.ci)?;

    let mut out = Vec::new();
    for method in [MethodId::Deterministic, MethodId::PredictionInterval] {
        let component = method_component(method, &inputs, &models, None, &cfg)?;
        let total = system_total(&recursive, cfg.probabilistic_variable, &component.profile, method.as_str())?;
        let rho = risk(&dist, &total, &inputs.timestamps)?;
        let sum = |v: &[f64]| v.iter().sum::<f64>();
        println!(
            "{:<14} total shortfall risk {:>9.1} MW, total surplus risk {:>9.1} MW",
            method.as_str(),
            sum(&rho.rho_short),
            sum(&rho.rho_long)
        );
        out.push((method, rho));
    }
    Ok(out)
}

fn main() -> dynreserve::Result<()> {
    run_example(Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/config.json"))).map(|_| ())
}
