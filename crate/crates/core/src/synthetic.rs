//! Deterministic synthetic inputs: a one-day probabilistic solar forecast
//! with skew and tail weight that change through the day, central-only load
//! and wind forecasts, and hourly histories with heteroscedastic errors.
//!
//! Used by the bundled fixture, the examples and the tests.

use std::f64::consts::PI;
use std::path::Path;

use chrono::{Duration, NaiveDate, NaiveDateTime};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::forecast::{IntervalCdf, ProbabilisticForecast, TimeSeries, VariableKind};
use crate::history::{HistoricalRecord, HistoricalSeries};
use crate::io;
use crate::normal::std_normal_inv;

pub const SOLAR_CAPACITY: f64 = 1000.0;

/// `p05, p10, ..., p95`.
pub fn standard_levels() -> Vec<f64> {
    (1..=19).map(|k| f64::from(5 * k) / 100.0).collect()
}

/// Start of the forecast day.
pub fn forecast_day() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2020, 7, 1)
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .expect("valid date")
}

fn solar_shape(hour: f64) -> f64 {
    if (6.0..=20.0).contains(&hour) {
        (PI * (hour - 6.0) / 14.0).sin().max(0.0)
    } else {
        0.0
    }
}

fn load_shape(hour: f64) -> f64 {
    22_000.0 + 6_000.0 * (2.0 * PI * (hour - 10.0) / 24.0).sin().max(-0.6)
}

fn wind_shape(hour: f64) -> f64 {
    3_000.0 + 1_200.0 * (2.0 * PI * (hour + 3.0) / 24.0).cos()
}

/// Quantile `p` of a skewed, heavy-tailed distribution around `centre`:
/// `centre + σ (z + a(z² − 1) + b z³)` with `z` the standard normal quantile,
/// clipped to `[0, cap]`. Monotone in `p` when `a² < 3b`.
fn shaped_quantile(centre: f64, sigma: f64, a: f64, b: f64, p: f64, cap: f64) -> f64 {
    let z = std_normal_inv(p).expect("level inside (0, 1)");
    (centre + sigma * (z + a * (z * z - 1.0) + b * z * z * z)).clamp(0.0, cap)
}

/// Hourly probabilistic solar forecast for `hours` intervals starting at
/// `start`. Night hours are atoms at zero.
pub fn solar_forecast(start: NaiveDateTime, hours: usize, levels: &[f64]) -> Result<ProbabilisticForecast> {
    let mut central = Vec::with_capacity(hours);
    let mut intervals = Vec::with_capacity(hours);
    for h in 0..hours {
        let hour = (h % 24) as f64;
        let c = 0.8 * SOLAR_CAPACITY * solar_shape(hour);
        if c <= 0.0 {
            central.push(0.0);
            intervals.push(IntervalCdf::new(levels.iter().map(|&p| (p, 0.0)).collect())?);
            continue;
        }
        let sigma = 0.12 * c + 15.0;
        // skew drifts from right-skewed in the morning to left-skewed in the evening
        let a = 0.2 * (PI * (hour - 6.0) / 14.0).cos();
        let b = 0.02 + 0.04 * (hour - 13.0).abs() / 7.0;
        let points: Vec<(f64, f64)> = levels
            .iter()
            .map(|&p| (p, shaped_quantile(c, sigma, a, b, p, SOLAR_CAPACITY)))
            .collect();
        let median = shaped_quantile(c, sigma, a, b, 0.5, SOLAR_CAPACITY);
        central.push(median);
        intervals.push(IntervalCdf::new(points)?);
    }
    let series = TimeSeries::new(VariableKind::Solar, start, 60, central)?;
    ProbabilisticForecast::new("solar_forecast", series, intervals)
}

/// Hourly forecast with no degenerate intervals whose spread, skew and tail
/// weight all change from hour to hour, from two-humped to peaked. Used to
/// check that scenario moments track the forecast moments.
pub fn varied_forecast(start: NaiveDateTime, hours: usize, levels: &[f64]) -> Result<ProbabilisticForecast> {
    let mut central = Vec::with_capacity(hours);
    let mut intervals = Vec::with_capacity(hours);
    for h in 0..hours {
        let x = h as f64 / hours.max(2).saturating_sub(1) as f64;
        let c = 900.0 + 500.0 * (2.0 * PI * x).sin();
        let sigma = 20.0 + 60.0 * x;
        let b = 0.02 + 0.1 * ((7 * h) % 11) as f64 / 10.0;
        let a = 0.95 * (3.0 * b).sqrt() * (3.0 * PI * x).cos();
        let m = ((5 * h) % 8) as f64 / 7.0;
        let q = |p: f64| {
            let z = std_normal_inv(p).expect("level inside (0, 1)");
            let peaked = z + a * (z * z - 1.0) + b * z * z * z;
            // the split between the humps moves with the skew, so uneven humps skew too
            let split = a;
            let humped = if z < split { -1.2 } else if z > split { 1.2 } else { 0.0 } + 0.3 * z;
            c + sigma * ((1.0 - m) * peaked + m * humped)
        };
        central.push(q(0.5));
        intervals.push(IntervalCdf::new(levels.iter().map(|&p| (p, q(p))).collect())?);
    }
    let series = TimeSeries::new(VariableKind::Solar, start, 60, central)?;
    ProbabilisticForecast::new("varied_forecast", series, intervals)
}

fn central_only(kind: VariableKind, id: &str, start: NaiveDateTime, hours: usize) -> Result<ProbabilisticForecast> {
    let shape = match kind {
        VariableKind::Wind => wind_shape,
        _ => load_shape,
    };
    let values = (0..hours).map(|h| shape((h % 24) as f64).round()).collect();
    Ok(ProbabilisticForecast::deterministic(id, TimeSeries::new(kind, start, 60, values)?))
}

pub fn load_forecast(start: NaiveDateTime, hours: usize) -> Result<ProbabilisticForecast> {
    central_only(VariableKind::Load, "load_forecast", start, hours)
}

pub fn wind_forecast(start: NaiveDateTime, hours: usize) -> Result<ProbabilisticForecast> {
    central_only(VariableKind::Wind, "wind_forecast", start, hours)
}

/// `days` of hourly forecast/actual records ending just before `end`.
/// Forecasts follow the daily shape with a per-day level; errors are AR(1)
/// with a standard deviation that grows with the forecast.
pub fn history(kind: VariableKind, end: NaiveDateTime, days: usize, seed: u64) -> Result<HistoricalSeries> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(kind as u64 + 1);
    let start = end - Duration::days(days as i64);
    let mut records = Vec::with_capacity(days * 24);
    let mut carry = 0.0_f64;
    for d in 0..days {
        let z: f64 = StandardNormal.sample(&mut rng);
        let level = 1.0 + 0.1 * z;
        for h in 0..24 {
            let hour = h as f64;
            let timestamp = start + Duration::hours((d * 24 + h) as i64);
            let noise: f64 = StandardNormal.sample(&mut rng);
            carry = 0.7 * carry + (1.0 - 0.49_f64).sqrt() * noise;
            let (forecast, sigma) = match kind {
                VariableKind::Solar => {
                    let f = (0.8 * SOLAR_CAPACITY * solar_shape(hour) * level).clamp(0.0, SOLAR_CAPACITY);
                    (f, if f > 0.0 { 0.1 * f + 10.0 } else { 0.0 })
                }
                VariableKind::Wind => {
                    let f = (wind_shape(hour) * level).max(0.0);
                    (f, 0.12 * f + 60.0)
                }
                _ => {
                    let f = load_shape(hour) * level;
                    (f, 0.025 * f)
                }
            };
            let actual = (forecast + sigma * carry).max(0.0);
            records.push(HistoricalRecord {
                timestamp,
                forecast: round3(forecast),
                actual: round3(actual),
            });
        }
    }
    HistoricalSeries::new(kind, records)
}

fn round3(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

/// Complete synthetic input set.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub forecasts: [ProbabilisticForecast; 3],
    pub histories: [HistoricalSeries; 3],
}

pub const FIXTURE_DAYS: usize = 90;

pub fn fixture(seed: u64) -> Result<Fixture> {
    let day = forecast_day();
    let forecasts = [load_forecast(day, 24)?, wind_forecast(day, 24)?, solar_forecast(day, 24, &standard_levels())?];
    let histories = [
        history(VariableKind::Load, day, FIXTURE_DAYS, seed)?,
        history(VariableKind::Wind, day, FIXTURE_DAYS, seed)?,
        history(VariableKind::Solar, day, FIXTURE_DAYS, seed)?,
    ];
    Ok(Fixture { forecasts, histories })
}

pub const FIXTURE_FILES: [&str; 6] = [
    "load_forecast.csv",
    "wind_forecast.csv",
    "solar_forecast.csv",
    "load_history.csv",
    "wind_history.csv",
    "solar_history.csv",
];

/// Writes the fixture CSVs and a `config.json` referring to them into `dir`.
pub fn write_fixture(dir: &Path, seed: u64) -> Result<()> {
    let f = fixture(seed)?;
    for (forecast, name) in f.forecasts.iter().zip(&FIXTURE_FILES[..3]) {
        io::write_forecast(&dir.join(name), forecast)?;
    }
    for (history, name) in f.histories.iter().zip(&FIXTURE_FILES[3..]) {
        io::write_history(&dir.join(name), history)?;
    }
    let config = serde_json::json!({
        "load_forecast": FIXTURE_FILES[0],
        "wind_forecast": FIXTURE_FILES[1],
        "solar_forecast": FIXTURE_FILES[2],
        "load_history": FIXTURE_FILES[3],
        "wind_history": FIXTURE_FILES[4],
        "solar_history": FIXTURE_FILES[5],
        "probabilistic_variable": "solar",
        "scenarios": 1000,
        "seed": seed,
        "output_dir": "out",
    });
    io::write_json(&dir.join("config.json"), &config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solar_night_is_degenerate() {
        let f = solar_forecast(forecast_day(), 24, &standard_levels()).unwrap();
        assert!(f.intervals()[0].is_degenerate());
        assert!(f.intervals()[23].is_degenerate());
        assert!(!f.intervals()[12].is_degenerate());
        assert!(f.central().values()[12] > 500.0);
    }

    #[test]
    fn histories_are_reproducible() {
        let a = history(VariableKind::Wind, forecast_day(), 3, 9).unwrap();
        let b = history(VariableKind::Wind, forecast_day(), 3, 9).unwrap();
        let c = history(VariableKind::Wind, forecast_day(), 3, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 72);
        assert!(a.records().iter().all(|r| r.actual >= 0.0));
    }
}
