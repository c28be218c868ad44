//! Chronologically correlated scenarios from a probabilistic forecast
//! through a Gaussian copula.
//!
//! Each scenario draws iid standard normals, correlates them with the
//! Cholesky factor of the lag matrix, maps them to uniforms through the
//! normal CDF and then through each interval's inverse CDF. A scenario's
//! weight is the product of the masses of the forecast bands its uniforms
//! fell into, normalised across the set with a max-shifted softmax.
//!
//! Every scenario has its own ChaCha stream (`seed`, stream = scenario index),
//! so output does not depend on how work is split across threads.

use chrono::NaiveDateTime;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariance::{build_covariance_with, cholesky, CopulaParams, CovarianceRepair};
use crate::error::{Error, Result};
use crate::forecast::{ProbabilisticForecast, VariableKind};
use crate::history::HistoricalSeries;
use crate::normal::std_normal_cdf;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub values: Vec<f64>,
    /// Sum of log band masses; `0` for scenarios loaded from file.
    pub log_weight: f64,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    source: String,
    kind: VariableKind,
    timestamps: Vec<NaiveDateTime>,
    scenarios: Vec<Scenario>,
    seed: u64,
}

impl ScenarioSet {
    pub fn new(
        source: impl Into<String>,
        kind: VariableKind,
        timestamps: Vec<NaiveDateTime>,
        scenarios: Vec<Scenario>,
        seed: u64,
    ) -> Result<Self> {
        if scenarios.is_empty() {
            return Err(Error::EmptyScenarioRequest);
        }
        let horizon = timestamps.len();
        for s in &scenarios {
            if s.values.len() != horizon {
                return Err(Error::HorizonMismatch {
                    expected: horizon,
                    found: s.values.len(),
                });
            }
            if !(s.probability >= 0.0 && s.probability <= 1.0) {
                return Err(Error::invalid(format!("scenario probability {} outside [0, 1]", s.probability)));
            }
        }
        let total: f64 = scenarios.iter().map(|s| s.probability).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("scenario probabilities sum to {total}, not 1")));
        }
        Ok(Self {
            source: source.into(),
            kind,
            timestamps,
            scenarios,
            seed,
        })
    }

    /// A one-member set holding the central forecast with probability one.
    pub fn central_only(forecast: &ProbabilisticForecast) -> Self {
        Self {
            source: forecast.id().to_string(),
            kind: forecast.kind(),
            timestamps: forecast.timestamps(),
            scenarios: vec![Scenario {
                values: forecast.central().values().to_vec(),
                log_weight: 0.0,
                probability: 1.0,
            }],
            seed: 0,
        }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn kind(&self) -> VariableKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn timestamps(&self) -> &[NaiveDateTime] {
        &self.timestamps
    }

    pub fn scenarios(&self) -> &[Scenario] {
        &self.scenarios
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn horizon(&self) -> usize {
        self.timestamps.len()
    }

    pub fn probabilities(&self) -> impl Iterator<Item = f64> + '_ {
        self.scenarios.iter().map(|s| s.probability)
    }
}

/// Correlated standard-normal generator for a fixed horizon.
#[derive(Debug, Clone)]
pub struct CopulaSampler {
    factor: DMatrix<f64>,
}

impl CopulaSampler {
    pub fn new(horizon: usize, params: &CopulaParams, repair: CovarianceRepair) -> Result<Self> {
        let corr = build_covariance_with(horizon, params, repair)?;
        Ok(Self {
            factor: cholesky(&corr)?,
        })
    }

    pub fn horizon(&self) -> usize {
        self.factor.nrows()
    }

    /// Correlated normals `y = C x` for scenario `index`.
    pub fn gaussian(&self, seed: u64, index: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let n = self.horizon();
        let x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        (0..n)
            .map(|i| (0..=i).map(|k| self.factor[(i, k)] * x[k]).sum())
            .collect()
    }

    /// Temporally correlated uniforms `z = Φ(y)` for scenario `index`.
    pub fn uniforms(&self, seed: u64, index: u64) -> Vec<f64> {
        self.gaussian(seed, index).into_iter().map(std_normal_cdf).collect()
    }
}

/// Draws `count` scenarios from `forecast` with the default covariance repair.
pub fn generate_scenarios(
    forecast: &ProbabilisticForecast,
    count: usize,
    params: &CopulaParams,
    seed: u64,
) -> Result<ScenarioSet> {
    generate_scenarios_with(forecast, count, params, seed, CovarianceRepair::default())
}

pub fn generate_scenarios_with(
    forecast: &ProbabilisticForecast,
    count: usize,
    params: &CopulaParams,
    seed: u64,
    repair: CovarianceRepair,
) -> Result<ScenarioSet> {
    if count == 0 {
        return Err(Error::EmptyScenarioRequest);
    }
    let sampler = CopulaSampler::new(forecast.horizon(), params, repair)?;
    let cdfs = forecast.intervals();
    let mut scenarios: Vec<Scenario> = (0..count as u64)
        .into_par_iter()
        .map(|index| {
            let z = sampler.uniforms(seed, index);
            let mut log_weight = 0.0;
            let values = z
                .iter()
                .zip(cdfs)
                .map(|(&zt, cdf)| {
                    log_weight += cdf.band_mass(zt).ln();
                    cdf.inverse(zt)
                })
                .collect();
            Scenario {
                values,
                log_weight,
                probability: 0.0,
            }
        })
        .collect();
    let weights: Vec<f64> = scenarios.iter().map(|s| s.log_weight).collect();
    for (s, p) in scenarios.iter_mut().zip(softmax(&weights)) {
        s.probability = p;
    }
    Ok(ScenarioSet {
        source: forecast.id().to_string(),
        kind: forecast.kind(),
        timestamps: forecast.timestamps(),
        scenarios,
        seed,
    })
}

/// Max-shifted softmax of log-weights.
pub fn softmax(log_weights: &[f64]) -> Vec<f64> {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let shifted: Vec<f64> = log_weights.iter().map(|w| (w - max).exp()).collect();
    let k: f64 = shifted.iter().sum();
    shifted.into_iter().map(|e| e / k).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetDemandScenario {
    pub load: usize,
    pub wind: usize,
    pub solar: usize,
    pub values: Vec<f64>,
    pub probability: f64,
}

/// All load/wind/solar combinations `n = ℓ − w − s` with product probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct NetDemandScenarioSet {
    timestamps: Vec<NaiveDateTime>,
    scenarios: Vec<NetDemandScenario>,
}

impl NetDemandScenarioSet {
    pub fn scenarios(&self) -> &[NetDemandScenario] {
        &self.scenarios
    }

    pub fn timestamps(&self) -> &[NaiveDateTime] {
        &self.timestamps
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn total_probability(&self) -> f64 {
        self.scenarios.iter().map(|s| s.probability).sum()
    }

    /// Flattens into a net-demand [`ScenarioSet`] in `(i, j, k)` order.
    pub fn into_scenario_set(self, source: impl Into<String>) -> Result<ScenarioSet> {
        let scenarios = self
            .scenarios
            .into_iter()
            .map(|s| Scenario {
                values: s.values,
                log_weight: s.probability.ln(),
                probability: s.probability,
            })
            .collect();
        ScenarioSet::new(source, VariableKind::NetDemand, self.timestamps, scenarios, 0)
    }
}

pub fn combine_net_demand(
    load: &ScenarioSet,
    wind: &ScenarioSet,
    solar: &ScenarioSet,
    cap: usize,
) -> Result<NetDemandScenarioSet> {
    let horizon = load.horizon();
    for other in [wind, solar] {
        if other.horizon() != horizon {
            return Err(Error::HorizonMismatch {
                expected: horizon,
                found: other.horizon(),
            });
        }
    }
    let count = load.len() as u128 * wind.len() as u128 * solar.len() as u128;
    if count > cap as u128 {
        return Err(Error::CombinationCap {
            count,
            cap: cap as u128,
        });
    }
    let mut scenarios = Vec::with_capacity(count as usize);
    for (i, l) in load.scenarios().iter().enumerate() {
        for (j, w) in wind.scenarios().iter().enumerate() {
            for (k, s) in solar.scenarios().iter().enumerate() {
                let values = (0..horizon)
                    .map(|t| l.values[t] - w.values[t] - s.values[t])
                    .collect();
                scenarios.push(NetDemandScenario {
                    load: i,
                    wind: j,
                    solar: k,
                    values,
                    probability: l.probability * w.probability * s.probability,
                });
            }
        }
    }
    Ok(NetDemandScenarioSet {
        timestamps: load.timestamps().to_vec(),
        scenarios,
    })
}

/// Lag-1 and lag-2 Pearson autocorrelations of the forecast errors of `history`.
///
/// This is a plain estimator for picking copula parameters, e.g. with
/// [`CopulaParams::from_lag_correlations`]; it ignores gaps in the record.
pub fn estimate_lag_correlations(history: &HistoricalSeries) -> Result<(f64, f64)> {
    let e = history.errors();
    if e.len() < 4 {
        return Err(Error::invalid("need at least four records to estimate lag correlations"));
    }
    Ok((pearson(&e[..e.len() - 1], &e[1..]), pearson(&e[..e.len() - 2], &e[2..])))
}

pub(crate) fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    sab / (saa * sbb).sqrt()
}
