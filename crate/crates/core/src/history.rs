//! Historical forecast/actual records and explanatory variables.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecast::VariableKind;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoricalRecord {
    pub timestamp: NaiveDateTime,
    pub forecast: f64,
    pub actual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistoricalSeries {
    kind: VariableKind,
    resolution_minutes: u32,
    records: Vec<HistoricalRecord>,
}

impl HistoricalSeries {
    /// Records must have strictly increasing timestamps. The resolution is the
    /// smallest spacing between consecutive records (60 minutes for a single record).
    pub fn new(kind: VariableKind, records: Vec<HistoricalRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::invalid(format!("{kind} history has no records")));
        }
        for r in &records {
            if !(r.forecast.is_finite() && r.actual.is_finite()) {
                return Err(Error::invalid(format!("non-finite value in {kind} history at {}", r.timestamp)));
            }
        }
        let mut resolution = i64::MAX;
        for w in records.windows(2) {
            let step = (w[1].timestamp - w[0].timestamp).num_minutes();
            if w[1].timestamp <= w[0].timestamp {
                return Err(Error::invalid(format!(
                    "{kind} history timestamps not strictly increasing at {}",
                    w[1].timestamp
                )));
            }
            resolution = resolution.min(step);
        }
        let resolution_minutes = if resolution == i64::MAX {
            60
        } else {
            u32::try_from(resolution.max(1)).unwrap_or(u32::MAX)
        };
        Ok(Self {
            kind,
            resolution_minutes,
            records,
        })
    }

    pub fn kind(&self) -> VariableKind {
        self.kind
    }

    pub fn resolution_minutes(&self) -> u32 {
        self.resolution_minutes
    }

    pub fn records(&self) -> &[HistoricalRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn timestamps(&self) -> Vec<NaiveDateTime> {
        self.records.iter().map(|r| r.timestamp).collect()
    }

    pub fn forecasts(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.forecast).collect()
    }

    /// Forecast errors `actual − forecast`, one per record.
    pub fn errors(&self) -> Vec<f64> {
        compute_errors(self)
    }

    /// Averages records into buckets of `minutes` aligned on midnight.
    pub fn resample(&self, minutes: u32) -> Result<Self> {
        if minutes == 0 || 1440 % minutes != 0 {
            return Err(Error::invalid(format!("cannot resample to {minutes}-minute buckets")));
        }
        let mut buckets: BTreeMap<NaiveDateTime, (f64, f64, usize)> = BTreeMap::new();
        for r in &self.records {
            let minute_of_day = r.timestamp.hour() * 60 + r.timestamp.minute();
            let floored = minute_of_day - minute_of_day % minutes;
            let key = r
                .timestamp
                .date()
                .and_hms_opt(floored / 60, floored % 60, 0)
                .expect("valid bucket time");
            let e = buckets.entry(key).or_insert((0.0, 0.0, 0));
            e.0 += r.forecast;
            e.1 += r.actual;
            e.2 += 1;
        }
        let records = buckets
            .into_iter()
            .map(|(timestamp, (f, a, n))| HistoricalRecord {
                timestamp,
                forecast: f / n as f64,
                actual: a / n as f64,
            })
            .collect();
        let mut out = Self::new(self.kind, records)?;
        out.resolution_minutes = out.resolution_minutes.max(minutes);
        Ok(out)
    }

    /// Net-demand history `ℓ − w − s` over the timestamps common to all three.
    pub fn net_demand(load: &Self, wind: &Self, solar: &Self) -> Result<Self> {
        let index = |h: &Self| -> BTreeMap<NaiveDateTime, (f64, f64)> {
            h.records.iter().map(|r| (r.timestamp, (r.forecast, r.actual))).collect()
        };
        let (w, s) = (index(wind), index(solar));
        let records: Vec<HistoricalRecord> = load
            .records
            .iter()
            .filter_map(|l| {
                let (wf, wa) = w.get(&l.timestamp)?;
                let (sf, sa) = s.get(&l.timestamp)?;
                Some(HistoricalRecord {
                    timestamp: l.timestamp,
                    forecast: l.forecast - wf - sf,
                    actual: l.actual - wa - sa,
                })
            })
            .collect();
        let dropped = load.len().max(wind.len()).max(solar.len()) - records.len();
        if dropped > 0 {
            log::warn!("net-demand history drops {dropped} records without a match in all three series");
        }
        if records.is_empty() {
            return Err(Error::invalid("load, wind and solar histories share no timestamps"));
        }
        Self::new(VariableKind::NetDemand, records)
    }
}

/// `actual − forecast` for every record.
pub fn compute_errors(history: &HistoricalSeries) -> Vec<f64> {
    history.records.iter().map(|r| r.actual - r.forecast).collect()
}

/// Quantity the error populations are conditioned on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExplanatoryKind {
    /// Forecast value.
    #[default]
    Magnitude,
    /// Change of the forecast from the previous interval (forward difference
    /// at the first one).
    #[serde(alias = "rate")]
    RateOfChange,
    /// Hour of the day in `[0, 24)`.
    #[serde(alias = "hour")]
    HourOfDay,
}

impl ExplanatoryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExplanatoryKind::Magnitude => "magnitude",
            ExplanatoryKind::RateOfChange => "rate",
            ExplanatoryKind::HourOfDay => "hour",
        }
    }

    /// Explanatory series for a forecast trajectory.
    pub fn derive(self, values: &[f64], timestamps: &[NaiveDateTime]) -> Vec<f64> {
        match self {
            ExplanatoryKind::Magnitude => values.to_vec(),
            ExplanatoryKind::RateOfChange => (0..values.len())
                .map(|h| match h {
                    0 if values.len() > 1 => values[1] - values[0],
                    0 => 0.0,
                    h => values[h] - values[h - 1],
                })
                .collect(),
            ExplanatoryKind::HourOfDay => timestamps
                .iter()
                .map(|t| f64::from(t.hour()) + f64::from(t.minute()) / 60.0 + f64::from(t.second()) / 3600.0)
                .collect(),
        }
    }

    /// Explanatory series of the historical forecasts.
    pub fn of_history(self, history: &HistoricalSeries) -> Vec<f64> {
        self.derive(&history.forecasts(), &history.timestamps())
    }
}

impl fmt::Display for ExplanatoryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExplanatoryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "magnitude" => Ok(ExplanatoryKind::Magnitude),
            "rate" | "rate-of-change" => Ok(ExplanatoryKind::RateOfChange),
            "hour" | "hour-of-day" => Ok(ExplanatoryKind::HourOfDay),
            other => Err(Error::invalid(format!("unknown explanatory variable `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::Duration;

    fn t0() -> NaiveDateTime {
        NaiveDateTime::parse_from_str("2019-01-01 00:00:00", "%Y-%m-%d %H:%M:%S").unwrap()
    }

    fn series(kind: VariableKind, step_min: i64, fa: &[(f64, f64)]) -> HistoricalSeries {
        let records = fa
            .iter()
            .enumerate()
            .map(|(i, &(forecast, actual))| HistoricalRecord {
                timestamp: t0() + Duration::minutes(step_min * i as i64),
                forecast,
                actual,
            })
            .collect();
        HistoricalSeries::new(kind, records).unwrap()
    }

    #[test]
    fn errors_are_actual_minus_forecast() {
        let h = series(VariableKind::Load, 60, &[(11.0, 10.0), (11.0, 12.0)]);
        assert_eq!(h.errors(), vec![-1.0, 1.0]);
        let same = series(VariableKind::Load, 60, &[(5.0, 5.0), (6.0, 6.0)]);
        assert_eq!(same.errors(), vec![0.0, 0.0]);
    }

    #[test]
    fn rejects_unordered_records() {
        let r = |m| HistoricalRecord {
            timestamp: t0() + Duration::minutes(m),
            forecast: 1.0,
            actual: 1.0,
        };
        assert!(HistoricalSeries::new(VariableKind::Load, vec![r(60), r(0)]).is_err());
        assert!(HistoricalSeries::new(VariableKind::Load, vec![r(0), r(0)]).is_err());
        assert!(HistoricalSeries::new(VariableKind::Load, vec![]).is_err());
    }

    #[test]
    fn explanatory_series() {
        let h = series(VariableKind::Solar, 60, &[(1.0, 0.0), (4.0, 0.0), (2.0, 0.0)]);
        assert_eq!(ExplanatoryKind::Magnitude.of_history(&h), vec![1.0, 4.0, 2.0]);
        assert_eq!(ExplanatoryKind::RateOfChange.of_history(&h), vec![3.0, 3.0, -2.0]);
        assert_eq!(ExplanatoryKind::HourOfDay.of_history(&h), vec![0.0, 1.0, 2.0]);
        let q = series(VariableKind::Solar, 15, &[(1.0, 0.0), (4.0, 0.0)]);
        assert_eq!(ExplanatoryKind::HourOfDay.of_history(&q), vec![0.0, 0.25]);
        assert_eq!(ExplanatoryKind::RateOfChange.derive(&[3.0], &[t0()]), vec![0.0]);
    }

    #[test]
    fn resamples_quarter_hours_to_hours() {
        let fa: Vec<(f64, f64)> = (0..8).map(|i| (i as f64, 2.0 * i as f64)).collect();
        let h = series(VariableKind::Load, 15, &fa);
        assert_eq!(h.resolution_minutes(), 15);
        let hourly = h.resample(60).unwrap();
        assert_eq!(hourly.len(), 2);
        assert_eq!(hourly.resolution_minutes(), 60);
        assert_eq!(hourly.records()[0].forecast, 1.5);
        assert_eq!(hourly.records()[1].actual, 11.0);
    }

    #[test]
    fn net_demand_joins_on_timestamps() {
        let l = series(VariableKind::Load, 60, &[(100.0, 101.0), (110.0, 108.0)]);
        let w = series(VariableKind::Wind, 60, &[(10.0, 12.0), (10.0, 9.0)]);
        let s = series(VariableKind::Solar, 60, &[(20.0, 15.0)]);
        let n = HistoricalSeries::net_demand(&l, &w, &s).unwrap();
        assert_eq!(n.len(), 1);
        assert_eq!(n.records()[0].forecast, 70.0);
        assert_eq!(n.records()[0].actual, 74.0);
    }
}
