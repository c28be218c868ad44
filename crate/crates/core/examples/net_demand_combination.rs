//! Net-demand scenarios from independent load, wind and solar scenario
//! sets: every combination, with product probabilities.
//!
//! ```text
//! cargo run --example net_demand_combination
//! ```

use dynreserve::forecast::{IntervalCdf, ProbabilisticForecast, TimeSeries};
use dynreserve::normal::std_normal_inv;
use dynreserve::scenario::NetDemandScenarioSet;
use dynreserve::synthetic::{self, forecast_day, standard_levels};
use dynreserve::{combine_net_demand, generate_scenarios, CopulaParams, VariableKind};

/// Symmetric bands of `spread` times the central value around a
/// central-only forecast.
fn widen(f: &ProbabilisticForecast, spread: f64) -> dynreserve::Result<ProbabilisticForecast> {
    let intervals = f
        .central()
        .values()
        .iter()
        .map(|&c| {
            let points = standard_levels()
                .into_iter()
                .map(|p| (p, c + spread * c * std_normal_inv(p).expect("level inside (0, 1)")))
                .collect();
            IntervalCdf::new(points)
        })
        .collect::<dynreserve::Result<Vec<_>>>()?;
    let central = TimeSeries::new(f.kind(), f.central().start(), 60, f.central().values().to_vec())?;
    ProbabilisticForecast::new(f.id(), central, intervals)
}

pub fn run_example() -> dynreserve::Result<NetDemandScenarioSet> {
    let day = forecast_day();
    let params = CopulaParams::default();
    let load = generate_scenarios(&widen(&synthetic::load_forecast(day, 24)?, 0.02)?, 10, &params, 1)?;
    let wind = generate_scenarios(&widen(&synthetic::wind_forecast(day, 24)?, 0.15)?, 10, &params, 2)?;
    let solar = generate_scenarios(&synthetic::solar_forecast(day, 24, &standard_levels())?, 10, &params, 3)?;

    let net = combine_net_demand(&load, &wind, &solar, 10_000)?;
    println!("{} x {} x {} = {} net-demand scenarios", load.len(), wind.len(), solar.len(), net.len());
    println!("total probability {:.12}", net.total_probability());
    let noon: Vec<f64> = net.scenarios().iter().map(|s| s.values[12]).collect();
    let lo = noon.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = noon.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    println!("net demand at 12:00 ranges over [{lo:.0}, {hi:.0}] MW");

    match combine_net_demand(&load, &wind, &solar, 500) {
        Err(e) => println!("with a cap of 500: {e}"),
        Ok(_) => unreachable!("1000 combinations exceed a cap of 500"),
    }
    let set = net.clone().into_scenario_set("net_demand")?;
    assert_eq!(set.kind(), VariableKind::NetDemand);
    Ok(net)
}

fn main() -> dynreserve::Result<()> {
    run_example().map(|_| ())
}
