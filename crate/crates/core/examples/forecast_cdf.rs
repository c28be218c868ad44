//! Piecewise-linear interval CDFs: evaluation, inversion, band masses and
//! the moments implied by a whole forecast.
//!
//! ```text
//! cargo run --example forecast_cdf
//! ```

use dynreserve::forecast::{forecast_moments, IntervalCdf, Moments};
use dynreserve::synthetic::{forecast_day, solar_forecast, standard_levels};

pub fn run_example() -> dynreserve::Result<Moments> {
    let cdf = IntervalCdf::new(vec![(0.1, 400.0), (0.5, 520.0), (0.9, 580.0)])?;
    println!("F(460) = {:.3}", cdf.eval(460.0));
    println!("F^-1(0.7) = {:.1} MW", cdf.inverse(0.7));
    println!("band mass around z = 0.3: {:.2}", cdf.band_mass(0.3));
    println!("below the lowest threshold the CDF is clamped: F^-1(0.02) = {}", cdf.inverse(0.02));

    let forecast = solar_forecast(forecast_day(), 24, &standard_levels())?;
    let moments = forecast_moments(&forecast, 10_000)?;
    println!("\nhour      mean   std.dev  skewness  kurtosis");
    for (t, m) in moments.0.iter().enumerate() {
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3}"));
        println!(
            "{t:>4} {:>9.1} {:>9.1} {:>9} {:>9}",
            m.mean,
            m.variance.sqrt(),
            fmt(m.skewness),
            fmt(m.excess_kurtosis)
        );
    }
    Ok(moments.0[12])
}

fn main() -> dynreserve::Result<()> {
    run_example().map(|_| ())
}
