//! Dynamic reserve requirements from binned historical forecast errors.
//!
//! Errors are split by the reserve direction they call for, grouped into
//! equal-width bins of an explanatory variable, and the requirement for a new
//! interval is a quantile of the population in the bin its explanatory value
//! falls into. Per-source requirements combine by root-sum-square.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecast::VariableKind;
use crate::history::{compute_errors, ExplanatoryKind, HistoricalSeries};

pub const DEFAULT_BINS: usize = 20;
pub const DEFAULT_CI: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Up,
    Down,
}

/// Reserve direction and magnitude called for by one forecast error, or
/// `None` for a zero error. Positive load or net-demand errors need upward
/// reserve; positive wind or solar errors need downward reserve.
pub fn reserve_need(error: f64, kind: VariableKind) -> Option<(Direction, f64)> {
    if error == 0.0 {
        return None;
    }
    let up_when_positive = !kind.is_generation();
    match (error > 0.0, up_when_positive) {
        (true, true) | (false, false) => Some((Direction::Up, error.abs())),
        _ => Some((Direction::Down, error.abs())),
    }
}

/// Splits errors into upward and downward need magnitudes (zeros dropped).
pub fn itemize(errors: &[f64], kind: VariableKind) -> (Vec<f64>, Vec<f64>) {
    let mut up = Vec::new();
    let mut down = Vec::new();
    for &e in errors {
        match reserve_need(e, kind) {
            Some((Direction::Up, m)) => up.push(m),
            Some((Direction::Down, m)) => down.push(m),
            None => {}
        }
    }
    (up, down)
}

/// Sorted error populations of one bin.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReserveBin {
    pub up: Vec<f64>,
    pub down: Vec<f64>,
}

impl ReserveBin {
    pub fn population(&self, direction: Direction) -> &[f64] {
        match direction {
            Direction::Up => &self.up,
            Direction::Down => &self.down,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReserveModel {
    kind: VariableKind,
    explanatory: ExplanatoryKind,
    edges: Vec<f64>,
    bins: Vec<ReserveBin>,
}

impl ReserveModel {
    /// Bins the errors of `history` by `explanatory` into `bins` equal-width bins.
    pub fn build(history: &HistoricalSeries, explanatory: ExplanatoryKind, bins: usize) -> Result<Self> {
        if history.len() < 2 {
            return Err(Error::invalid("a reserve model needs at least two historical records"));
        }
        let nu = explanatory.of_history(history);
        let errors = compute_errors(history);
        Self::from_samples(history.kind(), explanatory, &nu, &errors, bins)
    }

    /// Bins paired `(ν, ε)` samples. Edges are `min ν + (b/B)(max ν − min ν)`;
    /// a sample goes to the bin `b` with `l_{b−1} < ν ≤ l_b`, with values at or
    /// below `l_0` in the first bin and above `l_B` in the last.
    pub fn from_samples(
        kind: VariableKind,
        explanatory: ExplanatoryKind,
        nu: &[f64],
        errors: &[f64],
        bins: usize,
    ) -> Result<Self> {
        if bins == 0 {
            return Err(Error::invalid("bin count must be at least 1"));
        }
        if nu.len() != errors.len() {
            return Err(Error::HorizonMismatch {
                expected: errors.len(),
                found: nu.len(),
            });
        }
        if nu.is_empty() {
            return Err(Error::invalid("no samples to bin"));
        }
        if nu.iter().chain(errors).any(|x| !x.is_finite()) {
            return Err(Error::invalid("non-finite explanatory value or error"));
        }
        let min = nu.iter().copied().fold(f64::INFINITY, f64::min);
        let max = nu.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let bins = if max > min {
            bins
        } else {
            if bins > 1 {
                log::warn!("explanatory variable is constant ({min}); using a single bin");
            }
            1
        };
        let edges: Vec<f64> = (0..=bins)
            .map(|b| min + (b as f64 / bins as f64) * (max - min))
            .collect();
        let mut model = Self {
            kind,
            explanatory,
            edges,
            bins: vec![ReserveBin::default(); bins],
        };
        for (&v, &e) in nu.iter().zip(errors) {
            let b = model.bin_index(v);
            match reserve_need(e, kind) {
                Some((Direction::Up, m)) => model.bins[b].up.push(m),
                Some((Direction::Down, m)) => model.bins[b].down.push(m),
                None => {}
            }
        }
        for bin in &mut model.bins {
            bin.up.sort_by(f64::total_cmp);
            bin.down.sort_by(f64::total_cmp);
        }
        Ok(model)
    }

    pub fn kind(&self) -> VariableKind {
        self.kind
    }

    pub fn explanatory(&self) -> ExplanatoryKind {
        self.explanatory
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn bins(&self) -> &[ReserveBin] {
        &self.bins
    }

    pub fn bin_count(&self) -> usize {
        self.bins.len()
    }

    /// Zero-based bin for explanatory value `nu`, clamped at both ends.
    pub fn bin_index(&self, nu: f64) -> usize {
        let below = self.edges[1..].partition_point(|&l| l < nu);
        below.min(self.bins.len() - 1)
    }

    /// Population used for bin `b`: its own if non-empty, else the nearest
    /// non-empty bin (lower index on ties). `None` when every bin is empty.
    pub fn population(&self, b: usize, direction: Direction) -> Option<&[f64]> {
        let n = self.bins.len();
        (0..n).find_map(|dist| {
            let lower = b.checked_sub(dist).map(|i| self.bins[i].population(direction));
            let upper = (b + dist < n).then(|| self.bins[b + dist].population(direction));
            [lower, upper].into_iter().flatten().find(|p| !p.is_empty())
        })
    }

    /// Requirement at explanatory value `nu` and quantile level `ci`.
    pub fn lookup(&self, nu: f64, ci: f64, direction: Direction) -> Result<f64> {
        check_ci(ci)?;
        Ok(match self.population(self.bin_index(nu), direction) {
            Some(pop) => quantile_sorted(pop, ci),
            None => 0.0,
        })
    }
}

/// Convenience wrapper around [`ReserveModel::build`].
pub fn build_model(history: &HistoricalSeries, explanatory: ExplanatoryKind, bins: usize) -> Result<ReserveModel> {
    ReserveModel::build(history, explanatory, bins)
}

fn check_ci(ci: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&ci) {
        return Err(Error::invalid(format!("confidence level {ci} outside [0, 1]")));
    }
    Ok(())
}

/// Empirical quantile, linear between order statistics at rank `(n−1)·ci + 1`.
pub fn quantile(population: &[f64], ci: f64) -> Result<f64> {
    check_ci(ci)?;
    if population.is_empty() {
        return Err(Error::invalid("quantile of an empty population"));
    }
    let mut sorted = population.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&sorted, ci))
}

pub(crate) fn quantile_sorted(sorted: &[f64], ci: f64) -> f64 {
    let n = sorted.len();
    let rank = (n - 1) as f64 * ci + 1.0;
    let lo = rank.floor() as usize;
    if lo >= n {
        return sorted[n - 1];
    }
    let frac = rank - lo as f64;
    sorted[lo - 1] + frac * (sorted[lo] - sorted[lo - 1])
}

/// Parameters a profile was computed with.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ReserveParams {
    pub ci: Option<f64>,
    pub pi: Option<f64>,
    pub extreme_fraction: Option<f64>,
    pub rho_limit: Option<f64>,
}

/// Upward and downward reserve per interval (MW, non-negative).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReserveProfile {
    pub up: Vec<f64>,
    pub down: Vec<f64>,
    pub label: String,
    pub params: ReserveParams,
}

impl ReserveProfile {
    pub fn new(up: Vec<f64>, down: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if up.len() != down.len() {
            return Err(Error::HorizonMismatch {
                expected: up.len(),
                found: down.len(),
            });
        }
        if let Some(v) = up.iter().chain(&down).find(|v| !(**v >= 0.0)) {
            return Err(Error::invalid(format!("reserve {v} is negative or not a number")));
        }
        Ok(Self {
            up,
            down,
            label: label.into(),
            params: ReserveParams::default(),
        })
    }

    pub fn zeros(horizon: usize, label: impl Into<String>) -> Self {
        Self {
            up: vec![0.0; horizon],
            down: vec![0.0; horizon],
            label: label.into(),
            params: ReserveParams::default(),
        }
    }

    pub fn with_params(mut self, params: ReserveParams) -> Self {
        self.params = params;
        self
    }

    pub fn horizon(&self) -> usize {
        self.up.len()
    }

    pub fn direction(&self, direction: Direction) -> &[f64] {
        match direction {
            Direction::Up => &self.up,
            Direction::Down => &self.down,
        }
    }
}

/// Requirements for an explanatory series `nu` at quantile level `ci`.
pub fn requirements(model: &ReserveModel, nu: &[f64], ci: f64) -> Result<ReserveProfile> {
    check_ci(ci)?;
    for direction in [Direction::Up, Direction::Down] {
        if model.bins.iter().all(|b| b.population(direction).is_empty()) {
            log::warn!("{} model has no {direction:?} errors; requirement is 0", model.kind);
        }
    }
    let mut up = Vec::with_capacity(nu.len());
    let mut down = Vec::with_capacity(nu.len());
    for &v in nu {
        up.push(model.lookup(v, ci, Direction::Up)?);
        down.push(model.lookup(v, ci, Direction::Down)?);
    }
    Ok(ReserveProfile {
        up,
        down,
        label: format!("{}-dynamic", model.kind),
        params: ReserveParams {
            ci: Some(ci),
            ..ReserveParams::default()
        },
    })
}

/// Root-sum-square of per-source requirements, assuming independent sources.
pub fn rss_combine(load: &ReserveProfile, wind: &ReserveProfile, solar: &ReserveProfile) -> Result<ReserveProfile> {
    let horizon = load.horizon();
    for p in [wind, solar] {
        if p.horizon() != horizon {
            return Err(Error::HorizonMismatch {
                expected: horizon,
                found: p.horizon(),
            });
        }
    }
    let rss = |a: &[f64], b: &[f64], c: &[f64]| -> Vec<f64> {
        (0..horizon)
            .map(|t| (a[t] * a[t] + b[t] * b[t] + c[t] * c[t]).sqrt())
            .collect()
    };
    Ok(ReserveProfile {
        up: rss(&load.up, &wind.up, &solar.up),
        down: rss(&load.down, &wind.down, &solar.down),
        label: solar.label.clone(),
        params: solar.params,
    })
}
