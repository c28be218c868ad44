//! Probabilistic reserve-determination methods.
//!
//! Recursive methods look only at historical errors (the deterministic
//! baseline). Anticipative methods use the scenarios or the forecast
//! distribution itself: all scenarios, extreme scenarios, bounds of the
//! extreme scenarios and the prediction interval. Hybrid takes the most
//! conservative of several results.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecast::ProbabilisticForecast;
use crate::history::ExplanatoryKind;
use crate::reserve::{requirements, ReserveModel, ReserveParams, ReserveProfile};
use crate::scenario::ScenarioSet;

pub const DEFAULT_EXTREME_FRACTION: f64 = 0.1;
pub const DEFAULT_PI: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodId {
    Deterministic,
    #[serde(alias = "all")]
    AllScenarios,
    #[serde(alias = "extreme")]
    ExtremeScenarios,
    Bounds,
    #[serde(alias = "pi")]
    PredictionInterval,
    Hybrid,
    RiskBased,
}

impl MethodId {
    pub const ALL: [MethodId; 7] = [
        MethodId::Deterministic,
        MethodId::AllScenarios,
        MethodId::ExtremeScenarios,
        MethodId::Bounds,
        MethodId::PredictionInterval,
        MethodId::Hybrid,
        MethodId::RiskBased,
    ];

    /// Short name used in file names and CSV output.
    pub fn as_str(self) -> &'static str {
        match self {
            MethodId::Deterministic => "deterministic",
            MethodId::AllScenarios => "all",
            MethodId::ExtremeScenarios => "extreme",
            MethodId::Bounds => "bounds",
            MethodId::PredictionInterval => "pi",
            MethodId::Hybrid => "hybrid",
            MethodId::RiskBased => "risk",
        }
    }

    pub fn needs_scenarios(self) -> bool {
        matches!(
            self,
            MethodId::AllScenarios | MethodId::ExtremeScenarios | MethodId::Bounds
        )
    }

    pub fn is_anticipative(self) -> bool {
        self.needs_scenarios() || self == MethodId::PredictionInterval
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "deterministic" | "recursive" => Ok(MethodId::Deterministic),
            "all" | "all-scenarios" => Ok(MethodId::AllScenarios),
            "extreme" | "extreme-scenarios" => Ok(MethodId::ExtremeScenarios),
            "bounds" => Ok(MethodId::Bounds),
            "pi" | "prediction-interval" => Ok(MethodId::PredictionInterval),
            "hybrid" => Ok(MethodId::Hybrid),
            "risk" | "risk-based" => Ok(MethodId::RiskBased),
            other => Err(Error::invalid(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: MethodId,
    pub profile: ReserveProfile,
    /// Free-form description of the inputs the result was computed from.
    pub provenance: String,
}

impl MethodResult {
    fn new(method: MethodId, mut profile: ReserveProfile, provenance: String) -> Self {
        profile.label = method.as_str().to_string();
        Self {
            method,
            profile,
            provenance,
        }
    }
}

/// Number of extreme scenarios for a fraction of `s`: rounded up, at least 1.
pub fn extreme_count(fraction: f64, s: usize) -> Result<usize> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!("extreme fraction {fraction} outside (0, 1]")));
    }
    Ok(((fraction * s as f64).ceil() as usize).clamp(1, s.max(1)))
}

/// Probability-weighted combination of member vectors, weights renormalised
/// within the members. Written as `x₀ + Σ wᵢ(xᵢ − x₀)` so a set of identical
/// members reproduces that member exactly.
fn weighted_mean<'a>(members: impl Iterator<Item = (&'a [f64], f64)> + Clone) -> Vec<f64> {
    let total: f64 = members.clone().map(|(_, p)| p).sum();
    let mut iter = members.clone();
    let Some((first, _)) = iter.next() else {
        return Vec::new();
    };
    let mut out = first.to_vec();
    for (x, p) in members {
        let w = if total > 0.0 { p / total } else { 0.0 };
        for (o, (&xi, &x0)) in out.iter_mut().zip(x.iter().zip(first)) {
            *o += w * (xi - x0);
        }
    }
    out
}

fn scenario_profiles(set: &ScenarioSet, model: &ReserveModel, ci: f64, members: &[usize]) -> Result<Vec<ReserveProfile>> {
    let timestamps = set.timestamps();
    members
        .par_iter()
        .map(|&i| {
            let nu = model.explanatory().derive(&set.scenarios()[i].values, timestamps);
            requirements(model, &nu, ci)
        })
        .collect()
}

/// Recursive baseline: requirements at the central forecast.
pub fn method_deterministic(forecast: &ProbabilisticForecast, model: &ReserveModel, ci: f64) -> Result<MethodResult> {
    let nu = model
        .explanatory()
        .derive(forecast.central().values(), &forecast.timestamps());
    let profile = requirements(model, &nu, ci)?;
    Ok(MethodResult::new(
        MethodId::Deterministic,
        profile,
        format!("forecast={} ci={ci}", forecast.id()),
    ))
}

/// Expected requirements over the whole scenario set.
pub fn method_all_scenarios(set: &ScenarioSet, model: &ReserveModel, ci: f64) -> Result<MethodResult> {
    let members: Vec<usize> = (0..set.len()).collect();
    let (up, down) = expected_requirements(set, model, ci, &members, &members)?;
    let profile = ReserveProfile::new(up, down, "")?.with_params(ReserveParams {
        ci: Some(ci),
        ..ReserveParams::default()
    });
    Ok(MethodResult::new(
        MethodId::AllScenarios,
        profile,
        format!("scenarios={} S={} seed={} ci={ci}", set.source(), set.len(), set.seed()),
    ))
}

fn expected_requirements(
    set: &ScenarioSet,
    model: &ReserveModel,
    ci: f64,
    up_members: &[usize],
    down_members: &[usize],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut union: Vec<usize> = up_members.iter().chain(down_members).copied().collect();
    union.sort_unstable();
    union.dedup();
    let profiles = scenario_profiles(set, model, ci, &union)?;
    let lookup = |i: usize| &profiles[union.binary_search(&i).expect("member in union")];
    let pi = |i: usize| set.scenarios()[i].probability;
    let up = weighted_mean(up_members.iter().map(|&i| (lookup(i).up.as_slice(), pi(i))));
    let down = weighted_mean(down_members.iter().map(|&i| (lookup(i).down.as_slice(), pi(i))));
    Ok((up, down))
}

/// Scenarios driving the upward and downward requirements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremeSubsets {
    /// Indices into the scenario set, ascending.
    pub up: Vec<usize>,
    pub down: Vec<usize>,
    pub d: usize,
    /// Per-scenario score: sum of the explanatory variable over the horizon.
    pub scores: Vec<f64>,
}

/// Picks the `d` scenarios most demanding in each direction. For wind and
/// solar, low-production scenarios drive upward reserves; for load and net
/// demand, high scenarios do. Ties go to the lower scenario index.
pub fn select_extremes(set: &ScenarioSet, d: usize, explanatory: ExplanatoryKind) -> Result<ExtremeSubsets> {
    if d == 0 || d > set.len() {
        return Err(Error::invalid(format!(
            "extreme count {d} must be between 1 and the scenario count {}",
            set.len()
        )));
    }
    let timestamps = set.timestamps();
    let scores: Vec<f64> = set
        .scenarios()
        .iter()
        .map(|s| explanatory.derive(&s.values, timestamps).iter().sum())
        .collect();
    let mut ascending: Vec<usize> = (0..scores.len()).collect();
    ascending.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    let mut descending: Vec<usize> = (0..scores.len()).collect();
    descending.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut lowest: Vec<usize> = ascending[..d].to_vec();
    let mut highest: Vec<usize> = descending[..d].to_vec();
    lowest.sort_unstable();
    highest.sort_unstable();
    let (up, down) = if set.kind().is_generation() {
        (lowest, highest)
    } else {
        (highest, lowest)
    };
    Ok(ExtremeSubsets { up, down, d, scores })
}

pub fn method_extreme_scenarios(
    set: &ScenarioSet,
    extremes: &ExtremeSubsets,
    model: &ReserveModel,
    ci: f64,
) -> Result<MethodResult> {
    if extremes.up.is_empty() || extremes.down.is_empty() {
        return Err(Error::invalid("extreme subsets must be non-empty"));
    }
    let (up, down) = expected_requirements(set, model, ci, &extremes.up, &extremes.down)?;
    let profile = ReserveProfile::new(up, down, "")?.with_params(ReserveParams {
        ci: Some(ci),
        extreme_fraction: Some(extremes.d as f64 / set.len() as f64),
        ..ReserveParams::default()
    });
    Ok(MethodResult::new(
        MethodId::ExtremeScenarios,
        profile,
        format!("scenarios={} S={} d={} ci={ci}", set.source(), set.len(), extremes.d),
    ))
}

fn clamp_negatives(values: &mut [f64], what: &str) {
    let mut clamped = 0;
    for v in values.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
            clamped += 1;
        }
    }
    if clamped > 0 {
        log::warn!("{what}: {clamped} negative reserve values clamped to 0");
    }
}

/// Reserves from the distance between the central forecast and the expected
/// trajectory of each extreme subset.
pub fn method_bounds(
    set: &ScenarioSet,
    extremes: &ExtremeSubsets,
    forecast: &ProbabilisticForecast,
) -> Result<MethodResult> {
    if extremes.up.is_empty() || extremes.down.is_empty() {
        return Err(Error::invalid("extreme subsets must be non-empty"));
    }
    if set.horizon() != forecast.horizon() {
        return Err(Error::HorizonMismatch {
            expected: forecast.horizon(),
            found: set.horizon(),
        });
    }
    let expected = |members: &[usize]| {
        weighted_mean(members.iter().map(|&i| {
            let s = &set.scenarios()[i];
            (s.values.as_slice(), s.probability)
        }))
    };
    let s_up = expected(&extremes.up);
    let s_dn = expected(&extremes.down);
    let cf = forecast.central().values();
    let generation = forecast.kind().is_generation();
    let mut up: Vec<f64> = (0..cf.len())
        .map(|t| if generation { cf[t] - s_up[t] } else { s_up[t] - cf[t] })
        .collect();
    let mut down: Vec<f64> = (0..cf.len())
        .map(|t| if generation { s_dn[t] - cf[t] } else { cf[t] - s_dn[t] })
        .collect();
    clamp_negatives(&mut up, "bounds up");
    clamp_negatives(&mut down, "bounds down");
    let profile = ReserveProfile::new(up, down, "")?.with_params(ReserveParams {
        extreme_fraction: Some(extremes.d as f64 / set.len() as f64),
        ..ReserveParams::default()
    });
    Ok(MethodResult::new(
        MethodId::Bounds,
        profile,
        format!("scenarios={} forecast={} d={}", set.source(), forecast.id(), extremes.d),
    ))
}

/// Reserves from the prediction interval of width `pi` around the central
/// forecast. With `literal`, the interval quantiles themselves are returned
/// instead of their distances from the central forecast.
pub fn method_prediction_interval(forecast: &ProbabilisticForecast, pi: f64, literal: bool) -> Result<MethodResult> {
    if !(pi > 0.0 && pi < 1.0) {
        return Err(Error::invalid(format!("prediction interval {pi} outside (0, 1)")));
    }
    let p_limit = (1.0 - pi) / 2.0;
    let cf = forecast.central().values();
    let generation = forecast.kind().is_generation();
    let mut up = Vec::with_capacity(cf.len());
    let mut down = Vec::with_capacity(cf.len());
    for (cdf, &c) in forecast.intervals().iter().zip(cf) {
        let low = cdf.inverse(p_limit);
        let high = cdf.inverse(1.0 - p_limit);
        let (u, d) = match (literal, generation) {
            (true, true) => (low, high),
            (true, false) => (high, low),
            (false, true) => (c - low, high - c),
            (false, false) => (high - c, c - low),
        };
        up.push(u);
        down.push(d);
    }
    clamp_negatives(&mut up, "prediction interval up");
    clamp_negatives(&mut down, "prediction interval down");
    let profile = ReserveProfile::new(up, down, "")?.with_params(ReserveParams {
        pi: Some(pi),
        ..ReserveParams::default()
    });
    Ok(MethodResult::new(
        MethodId::PredictionInterval,
        profile,
        format!("forecast={} pi={pi} p_limit={p_limit}{}", forecast.id(), if literal { " literal" } else { "" }),
    ))
}

/// Elementwise maximum of several results.
pub fn method_hybrid(results: &[MethodResult]) -> Result<MethodResult> {
    let Some(first) = results.first() else {
        return Err(Error::invalid("hybrid needs at least one method result"));
    };
    let horizon = first.profile.horizon();
    let mut up = first.profile.up.clone();
    let mut down = first.profile.down.clone();
    for r in &results[1..] {
        if r.profile.horizon() != horizon {
            return Err(Error::HorizonMismatch {
                expected: horizon,
                found: r.profile.horizon(),
            });
        }
        for t in 0..horizon {
            up[t] = up[t].max(r.profile.up[t]);
            down[t] = down[t].max(r.profile.down[t]);
        }
    }
    let of: Vec<&str> = results.iter().map(|r| r.profile.label.as_str()).collect();
    let profile = ReserveProfile::new(up, down, "")?;
    Ok(MethodResult::new(MethodId::Hybrid, profile, format!("max of [{}]", of.join(", "))))
}
