//! Forecast data types, piecewise-linear CDFs and per-interval moments.

use std::fmt;
use std::str::FromStr;

use chrono::{Duration, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::ScenarioSet;

/// Variance below which skewness and kurtosis are reported as undefined (MW²).
pub const UNDEFINED_VARIANCE: f64 = 1e-6;

/// Default number of probability grid points for [`forecast_moments`].
pub const DEFAULT_MOMENT_GRID: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariableKind {
    Load,
    Wind,
    Solar,
    NetDemand,
}

impl VariableKind {
    /// Wind and solar enter net demand with a negative sign, which flips the
    /// reserve direction of their forecast errors.
    pub fn is_generation(self) -> bool {
        matches!(self, VariableKind::Wind | VariableKind::Solar)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            VariableKind::Load => "load",
            VariableKind::Wind => "wind",
            VariableKind::Solar => "solar",
            VariableKind::NetDemand => "net-demand",
        }
    }
}

impl fmt::Display for VariableKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VariableKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "load" => Ok(VariableKind::Load),
            "wind" => Ok(VariableKind::Wind),
            "solar" => Ok(VariableKind::Solar),
            "net-demand" | "net_demand" | "net" | "netdemand" => Ok(VariableKind::NetDemand),
            other => Err(Error::invalid(format!("unknown variable kind `{other}`"))),
        }
    }
}

/// Regularly spaced MW values.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    kind: VariableKind,
    start: NaiveDateTime,
    resolution_minutes: u32,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(
        kind: VariableKind,
        start: NaiveDateTime,
        resolution_minutes: u32,
        values: Vec<f64>,
    ) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("time series needs at least one value"));
        }
        if resolution_minutes == 0 {
            return Err(Error::invalid("time series resolution must be positive"));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite value {v} in {kind} series")));
        }
        if kind != VariableKind::NetDemand {
            if let Some(v) = values.iter().find(|&&v| v < 0.0) {
                return Err(Error::invalid(format!("negative value {v} in {kind} series")));
            }
        }
        Ok(Self {
            kind,
            start,
            resolution_minutes,
            values,
        })
    }

    pub fn kind(&self) -> VariableKind {
        self.kind
    }

    pub fn start(&self) -> NaiveDateTime {
        self.start
    }

    pub fn resolution_minutes(&self) -> u32 {
        self.resolution_minutes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn timestamps(&self) -> Vec<NaiveDateTime> {
        let step = Duration::minutes(i64::from(self.resolution_minutes));
        (0..self.values.len())
            .map(|i| self.start + step * i as i32)
            .collect()
    }
}

/// Non-parametric CDF of one interval, given as `(probability, MW)` thresholds
/// joined by straight lines and clamped beyond the outermost thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalCdf {
    levels: Vec<f64>,
    values: Vec<f64>,
    degenerate: bool,
}

impl IntervalCdf {
    /// Builds a CDF from thresholds. A CDF whose values are all equal is
    /// flagged degenerate (all mass at one value).
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::invalid(
                "an interval CDF needs at least two thresholds (use IntervalCdf::atom for a point mass)",
            ));
        }
        let (levels, values): (Vec<f64>, Vec<f64>) = points.into_iter().unzip();
        for &p in &levels {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::invalid(format!("probability level {p} outside (0, 1)")));
            }
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite threshold value {v}")));
        }
        for w in levels.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::invalid(format!(
                    "probability levels not strictly increasing: {} then {}",
                    w[0], w[1]
                )));
            }
        }
        for (i, w) in values.windows(2).enumerate() {
            if w[1] < w[0] {
                return Err(Error::invalid(format!(
                    "quantile crossing: value {} at p={} exceeds {} at p={}",
                    w[0],
                    levels[i],
                    w[1],
                    levels[i + 1]
                )));
            }
        }
        let degenerate = values.iter().all(|&v| v == values[0]);
        Ok(Self {
            levels,
            values,
            degenerate,
        })
    }

    /// Point mass at `value`, e.g. solar production at night.
    pub fn atom(value: f64) -> Self {
        Self {
            levels: Vec::new(),
            values: vec![value],
            degenerate: true,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Lowest value of the envelope, `F⁻¹(p_min)`.
    pub fn lower(&self) -> f64 {
        self.values[0]
    }

    /// Highest value of the envelope, `F⁻¹(p_max)`.
    pub fn upper(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// `P(X <= v)` under piecewise-linear interpolation.
    pub fn eval(&self, v: f64) -> f64 {
        if self.degenerate {
            return if v < self.values[0] { 0.0 } else { 1.0 };
        }
        let n = self.values.len();
        // number of thresholds with value <= v
        let k = self.values.partition_point(|&x| x <= v);
        if k == 0 {
            return self.levels[0];
        }
        if k == n {
            return self.levels[n - 1];
        }
        let (v0, v1) = (self.values[k - 1], self.values[k]);
        let (p0, p1) = (self.levels[k - 1], self.levels[k]);
        if v == v0 {
            return p0;
        }
        p0 + (v - v0) / (v1 - v0) * (p1 - p0)
    }

    /// `F⁻¹(z)`, clamped to the outermost thresholds.
    pub fn inverse(&self, z: f64) -> f64 {
        if self.degenerate {
            return self.values[0];
        }
        let n = self.levels.len();
        if z <= self.levels[0] {
            return self.values[0];
        }
        if z >= self.levels[n - 1] {
            return self.values[n - 1];
        }
        let k = self.levels.partition_point(|&p| p <= z);
        let (p0, p1) = (self.levels[k - 1], self.levels[k]);
        let (v0, v1) = (self.values[k - 1], self.values[k]);
        if z == p0 {
            return v0;
        }
        v0 + (z - p0) / (p1 - p0) * (v1 - v0)
    }

    /// Probability mass of the forecast band that contains `z`. Bands are the
    /// gaps between consecutive levels plus the two tails. Degenerate CDFs
    /// have a single band of mass one.
    pub fn band_mass(&self, z: f64) -> f64 {
        if self.degenerate {
            return 1.0;
        }
        let n = self.levels.len();
        let k = self.levels.partition_point(|&p| p <= z);
        match k {
            0 => self.levels[0],
            k if k == n => 1.0 - self.levels[n - 1],
            k => self.levels[k] - self.levels[k - 1],
        }
    }
}

/// Central forecast plus one CDF per interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilisticForecast {
    id: String,
    central: TimeSeries,
    intervals: Vec<IntervalCdf>,
}

impl ProbabilisticForecast {
    pub fn new(id: impl Into<String>, central: TimeSeries, intervals: Vec<IntervalCdf>) -> Result<Self> {
        if intervals.len() != central.len() {
            return Err(Error::HorizonMismatch {
                expected: central.len(),
                found: intervals.len(),
            });
        }
        let tol = 1e-9;
        for (t, (cdf, &c)) in intervals.iter().zip(central.values()).enumerate() {
            if c < cdf.lower() - tol || c > cdf.upper() + tol {
                return Err(Error::invalid(format!(
                    "central value {c} at interval {t} lies outside the envelope [{}, {}]",
                    cdf.lower(),
                    cdf.upper()
                )));
            }
        }
        Ok(Self {
            id: id.into(),
            central,
            intervals,
        })
    }

    /// Forecast with no uncertainty: every interval is an atom at the central value.
    pub fn deterministic(id: impl Into<String>, central: TimeSeries) -> Self {
        let intervals = central.values().iter().map(|&v| IntervalCdf::atom(v)).collect();
        Self {
            id: id.into(),
            central,
            intervals,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn kind(&self) -> VariableKind {
        self.central.kind()
    }

    pub fn horizon(&self) -> usize {
        self.intervals.len()
    }

    pub fn central(&self) -> &TimeSeries {
        &self.central
    }

    pub fn intervals(&self) -> &[IntervalCdf] {
        &self.intervals
    }

    pub fn timestamps(&self) -> Vec<NaiveDateTime> {
        self.central.timestamps()
    }

    /// True when every interval is a point mass.
    pub fn is_deterministic(&self) -> bool {
        self.intervals.iter().all(IntervalCdf::is_degenerate)
    }
}

/// First four moments of one interval. Skewness and excess kurtosis are
/// `None` when the variance is below [`UNDEFINED_VARIANCE`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub skewness: Option<f64>,
    pub excess_kurtosis: Option<f64>,
}

impl Moments {
    /// Probability-weighted central moments. Weights need not sum to one.
    pub fn weighted(values: &[f64], weights: &[f64]) -> Self {
        debug_assert_eq!(values.len(), weights.len());
        let total: f64 = weights.iter().sum();
        let mean = values.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / total;
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for (v, w) in values.iter().zip(weights) {
            let d = v - mean;
            let d2 = d * d;
            m2 += w * d2;
            m3 += w * d2 * d;
            m4 += w * d2 * d2;
        }
        Self::from_central(mean, m2 / total, m3 / total, m4 / total)
    }

    /// Unweighted moments of equally likely values.
    pub fn of_samples(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for v in values {
            let d = v - mean;
            let d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
        }
        Self::from_central(mean, m2 / n, m3 / n, m4 / n)
    }

    fn from_central(mean: f64, m2: f64, m3: f64, m4: f64) -> Self {
        let variance = m2.max(0.0);
        if variance < UNDEFINED_VARIANCE {
            return Self {
                mean,
                variance,
                skewness: None,
                excess_kurtosis: None,
            };
        }
        Self {
            mean,
            variance,
            skewness: Some(m3 / variance.powf(1.5)),
            excess_kurtosis: Some(m4 / (variance * variance) - 3.0),
        }
    }

    fn point(value: f64) -> Self {
        Self {
            mean: value,
            variance: 0.0,
            skewness: None,
            excess_kurtosis: None,
        }
    }
}

/// Per-interval moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSeries(pub Vec<Moments>);

impl MomentSeries {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn means(&self) -> Vec<f64> {
        self.0.iter().map(|m| m.mean).collect()
    }

    pub fn variances(&self) -> Vec<f64> {
        self.0.iter().map(|m| m.variance).collect()
    }

    pub fn skewness(&self) -> Vec<Option<f64>> {
        self.0.iter().map(|m| m.skewness).collect()
    }

    pub fn excess_kurtosis(&self) -> Vec<Option<f64>> {
        self.0.iter().map(|m| m.excess_kurtosis).collect()
    }
}

/// Moments implied by each interval's piecewise-linear CDF, by midpoint
/// quadrature of the inverse CDF on a uniform probability grid.
pub fn forecast_moments(forecast: &ProbabilisticForecast, n_grid: usize) -> Result<MomentSeries> {
    if n_grid < 100 {
        return Err(Error::invalid(format!("moment grid of {n_grid} points is below the minimum of 100")));
    }
    let grid: Vec<f64> = (0..n_grid).map(|k| (k as f64 + 0.5) / n_grid as f64).collect();
    let moments = forecast
        .intervals()
        .iter()
        .map(|cdf| {
            if cdf.is_degenerate() {
                Moments::point(cdf.lower())
            } else {
                let q: Vec<f64> = grid.iter().map(|&u| cdf.inverse(u)).collect();
                Moments::of_samples(&q)
            }
        })
        .collect();
    Ok(MomentSeries(moments))
}

/// Probability-weighted moments of a scenario set at each interval.
pub fn scenario_moments(set: &ScenarioSet) -> Result<MomentSeries> {
    let total: f64 = set.probabilities().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("scenario probabilities sum to {total}, not 1")));
    }
    let weights: Vec<f64> = set.probabilities().collect();
    let mut column = vec![0.0; set.len()];
    let moments = (0..set.horizon())
        .map(|t| {
            for (slot, s) in column.iter_mut().zip(set.scenarios()) {
                *slot = s.values[t];
            }
            Moments::weighted(&column, &weights)
        })
        .collect();
    Ok(MomentSeries(moments))
}

/// Root-mean-square difference in percent of the reference range.
pub fn nrmse(test: &[f64], reference: &[f64]) -> Result<f64> {
    if test.len() != reference.len() {
        return Err(Error::HorizonMismatch {
            expected: reference.len(),
            found: test.len(),
        });
    }
    if reference.is_empty() {
        return Err(Error::invalid("nrmse of empty series"));
    }
    let max = reference.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = reference.iter().copied().fold(f64::INFINITY, f64::min);
    let range = max - min;
    if !(range > 0.0) {
        return Err(Error::DegenerateReference);
    }
    let mse = test
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / test.len() as f64;
    Ok(100.0 * mse.sqrt() / range)
}

/// [`nrmse`] restricted to the intervals where both series are defined.
pub fn nrmse_defined(test: &[Option<f64>], reference: &[Option<f64>]) -> Result<f64> {
    let (t, r): (Vec<f64>, Vec<f64>) = test
        .iter()
        .zip(reference)
        .filter_map(|(a, b)| Some(((*a)?, (*b)?)))
        .unzip();
    nrmse(&t, &r)
}

/// Forecast moments, scenario moments and the %NRMSE between them for mean,
/// variance, skewness and excess kurtosis (in that order). An NRMSE is `None`
/// when its reference series is constant or undefined everywhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentComparison {
    pub timestamps: Vec<NaiveDateTime>,
    pub forecast: MomentSeries,
    pub scenarios: MomentSeries,
    pub nrmse: [Option<f64>; 4],
}

pub const MOMENT_NAMES: [&str; 4] = ["mean", "variance", "skewness", "excess_kurtosis"];

impl MomentComparison {
    /// Per-interval values of moment `k` (see [`MOMENT_NAMES`]).
    pub fn column(series: &MomentSeries, k: usize) -> Vec<Option<f64>> {
        match k {
            0 => series.means().into_iter().map(Some).collect(),
            1 => series.variances().into_iter().map(Some).collect(),
            2 => series.skewness(),
            3 => series.excess_kurtosis(),
            _ => panic!("moment index {k} out of range"),
        }
    }
}

pub fn compare_moments(forecast: &ProbabilisticForecast, set: &ScenarioSet, n_grid: usize) -> Result<MomentComparison> {
    if set.horizon() != forecast.horizon() {
        return Err(Error::HorizonMismatch {
            expected: forecast.horizon(),
            found: set.horizon(),
        });
    }
    let reference = forecast_moments(forecast, n_grid)?;
    let test = scenario_moments(set)?;
    let mut out = [None; 4];
    for (k, slot) in out.iter_mut().enumerate() {
        let r = MomentComparison::column(&reference, k);
        let t = MomentComparison::column(&test, k);
        *slot = match nrmse_defined(&t, &r) {
            Ok(v) => Some(v),
            Err(Error::DegenerateReference) | Err(Error::InvalidInput(_)) => {
                log::warn!("{} NRMSE undefined: reference has no spread", MOMENT_NAMES[k]);
                None
            }
            Err(e) => return Err(e),
        };
    }
    Ok(MomentComparison {
        timestamps: forecast.timestamps(),
        forecast: reference,
        scenarios: test,
        nrmse: out,
    })
}
