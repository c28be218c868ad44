//! Dynamic operating-reserve dimensioning.
//!
//! Probabilistic forecasts are turned into chronologically correlated
//! scenarios with a Gaussian copula ([`scenario`]), historical forecast errors
//! are binned into quantile-based reserve models ([`reserve`]), and the
//! probabilistic methods in [`methods`] combine the two into upward and
//! downward reserve profiles. [`risk`] measures the shortfall/surplus risk of a
//! profile and sizes reserves to a risk ceiling. [`pipeline`] runs the whole
//! chain from a JSON config and writes CSV outputs plus a manifest.

// `!(x >= 0.0)` style checks are used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod covariance;
pub mod error;
pub mod forecast;
pub mod history;
pub mod io;
pub mod methods;
pub mod normal;
pub mod pipeline;
pub mod reserve;
pub mod risk;
pub mod scenario;
pub mod synthetic;

pub use covariance::{build_covariance, build_covariance_with, cholesky, CopulaParams, CovarianceRepair};
pub use error::{Error, Result};
pub use forecast::{
    forecast_moments, nrmse, scenario_moments, IntervalCdf, MomentSeries, Moments, ProbabilisticForecast,
    TimeSeries, VariableKind,
};
pub use history::{compute_errors, ExplanatoryKind, HistoricalRecord, HistoricalSeries};
pub use methods::{MethodId, MethodResult};
pub use reserve::{build_model, itemize, quantile, requirements, rss_combine, Direction, ReserveModel, ReserveProfile};
pub use risk::{risk, size_to_risk, DeviationDistribution, RiskProfile};
pub use scenario::{combine_net_demand, generate_scenarios, Scenario, ScenarioSet};
