//! End-to-end run: load inputs, build reserve models, generate scenarios when
//! a method needs them, compute every requested method, assess risk, sweep the
//! CI/PI grid and write all outputs with a manifest.
//!
//! System reserves combine three per-variable components by root-sum-square.
//! Load and wind always use the recursive (deterministic) component; the
//! probabilistic variable's component comes from the method being evaluated.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::path::{Path, PathBuf};
use std::time::Instant;

use chrono::{NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::forecast::{compare_moments, IntervalCdf, MomentComparison, ProbabilisticForecast, TimeSeries, VariableKind};
use crate::history::HistoricalSeries;
use crate::io::{self, SensitivityRow};
use crate::methods::{
    extreme_count, method_all_scenarios, method_bounds, method_deterministic, method_extreme_scenarios,
    method_hybrid, method_prediction_interval, select_extremes, MethodId, MethodResult,
};
use crate::reserve::{rss_combine, ReserveModel, ReserveParams, ReserveProfile};
use crate::risk::{risk, size_profile, DeviationDistribution, RiskProfile};
use crate::scenario::{generate_scenarios_with, ScenarioSet};

pub const KINDS: [VariableKind; 3] = [VariableKind::Load, VariableKind::Wind, VariableKind::Solar];

fn slot(kind: VariableKind) -> usize {
    match kind {
        VariableKind::Wind => 1,
        VariableKind::Solar => 2,
        _ => 0,
    }
}

/// Forecasts and histories on a common time grid.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub forecasts: [ProbabilisticForecast; 3],
    pub histories: [HistoricalSeries; 3],
    pub net_history: HistoricalSeries,
    pub timestamps: Vec<NaiveDateTime>,
    pub resolution_minutes: u32,
}

impl Inputs {
    pub fn load(cfg: &RunConfig) -> Result<Self> {
        let forecasts = KINDS.map(|k| {
            let levels = (k == cfg.probabilistic_variable).then_some(cfg.quantile_levels.as_slice());
            io::load_forecast(cfg.forecast_path(k), k, levels)
        });
        let [fl, fw, fs] = forecasts;
        let histories = KINDS.map(|k| io::load_history(cfg.history_path(k), k));
        let [hl, hw, hs] = histories;
        let net = cfg
            .net_demand_history
            .as_deref()
            .map(|p| io::load_history(p, VariableKind::NetDemand))
            .transpose()?;
        Self::new([fl?, fw?, fs?], [hl?, hw?, hs?], net)
    }

    /// Brings everything to the coarsest resolution present and checks that
    /// the three forecasts share one time grid.
    pub fn new(
        forecasts: [ProbabilisticForecast; 3],
        histories: [HistoricalSeries; 3],
        net_history: Option<HistoricalSeries>,
    ) -> Result<Self> {
        let resolution = forecasts
            .iter()
            .map(|f| f.central().resolution_minutes())
            .chain(histories.iter().map(HistoricalSeries::resolution_minutes))
            .chain(net_history.iter().map(HistoricalSeries::resolution_minutes))
            .max()
            .expect("non-empty");
        let mut note = false;
        let forecasts = forecasts.map(|f| {
            if f.central().resolution_minutes() == resolution {
                Ok(f)
            } else {
                note = true;
                resample_forecast(&f, resolution)
            }
        });
        let [fl, fw, fs] = forecasts;
        let forecasts = [fl?, fw?, fs?];
        let resample = |h: HistoricalSeries, note: &mut bool| {
            if h.resolution_minutes() == resolution {
                Ok(h)
            } else {
                *note = true;
                h.resample(resolution)
            }
        };
        let [hl, hw, hs] = histories;
        let histories = [resample(hl, &mut note)?, resample(hw, &mut note)?, resample(hs, &mut note)?];
        let net_history = match net_history {
            Some(h) => resample(h, &mut note)?,
            None => HistoricalSeries::net_demand(&histories[0], &histories[1], &histories[2])?,
        };
        if note {
            log::info!("mixed input resolutions; resampled to {resolution}-minute means");
        }
        let timestamps = forecasts[0].timestamps();
        for f in &forecasts[1..] {
            if f.timestamps() != timestamps {
                return Err(Error::invalid(format!(
                    "forecast `{}` is not on the same time grid as `{}`",
                    f.id(),
                    forecasts[0].id()
                )));
            }
        }
        Ok(Self {
            forecasts,
            histories,
            net_history,
            timestamps,
            resolution_minutes: resolution,
        })
    }

    pub fn forecast(&self, kind: VariableKind) -> &ProbabilisticForecast {
        &self.forecasts[slot(kind)]
    }

    pub fn history(&self, kind: VariableKind) -> &HistoricalSeries {
        &self.histories[slot(kind)]
    }
}

/// Averages a forecast into `minutes` buckets aligned on midnight: central
/// values by mean, each quantile level by the mean of its values.
pub fn resample_forecast(forecast: &ProbabilisticForecast, minutes: u32) -> Result<ProbabilisticForecast> {
    if minutes == 0 || 1440 % minutes != 0 {
        return Err(Error::invalid(format!("cannot resample to {minutes}-minute buckets")));
    }
    let mut buckets: BTreeMap<NaiveDateTime, Vec<usize>> = BTreeMap::new();
    for (i, t) in forecast.timestamps().into_iter().enumerate() {
        let minute = t.hour() * 60 + t.minute();
        let floored = minute - minute % minutes;
        let key = t.date().and_hms_opt(floored / 60, floored % 60, 0).expect("valid time");
        buckets.entry(key).or_default().push(i);
    }
    let levels: Vec<f64> = forecast
        .intervals()
        .iter()
        .find(|c| !c.levels().is_empty())
        .map(|c| c.levels().to_vec())
        .unwrap_or_default();
    let central = forecast.central().values();
    let mut values = Vec::with_capacity(buckets.len());
    let mut intervals = Vec::with_capacity(buckets.len());
    for members in buckets.values() {
        let n = members.len() as f64;
        let mean = members.iter().map(|&i| central[i]).sum::<f64>() / n;
        values.push(mean);
        if levels.is_empty() {
            intervals.push(IntervalCdf::atom(mean));
        } else {
            let points = levels
                .iter()
                .map(|&p| {
                    let v = members.iter().map(|&i| forecast.intervals()[i].inverse(p)).sum::<f64>() / n;
                    (p, v)
                })
                .collect();
            intervals.push(IntervalCdf::new(points)?);
        }
    }
    let start = *buckets.keys().next().expect("non-empty forecast");
    let series = TimeSeries::new(forecast.kind(), start, minutes, values)?;
    ProbabilisticForecast::new(forecast.id(), series, intervals)
}

/// One reserve model per variable.
#[derive(Debug, Clone)]
pub struct Models(pub [ReserveModel; 3]);

impl Models {
    pub fn build(inputs: &Inputs, cfg: &RunConfig) -> Result<Self> {
        let [l, w, s] = KINDS.map(|k| ReserveModel::build(inputs.history(k), cfg.explanatory(k), cfg.bins));
        Ok(Self([l?, w?, s?]))
    }

    pub fn get(&self, kind: VariableKind) -> &ReserveModel {
        &self.0[slot(kind)]
    }
}

/// Recursive requirement of each variable at `ci`.
pub fn recursive_components(inputs: &Inputs, models: &Models, ci: f64) -> Result<[ReserveProfile; 3]> {
    let [l, w, s] = KINDS.map(|k| method_deterministic(inputs.forecast(k), models.get(k), ci).map(|r| r.profile));
    Ok([l?, w?, s?])
}

/// System requirement with `component` in place of the probabilistic
/// variable's recursive component.
pub fn system_total(
    recursive: &[ReserveProfile; 3],
    kind: VariableKind,
    component: &ReserveProfile,
    label: &str,
) -> Result<ReserveProfile> {
    let mut parts = recursive.clone();
    parts[slot(kind)] = component.clone();
    let mut total = rss_combine(&parts[0], &parts[1], &parts[2])?;
    total.label = label.to_string();
    total.params = component.params;
    Ok(total)
}

/// Reserves over the CI × PI grid: recursive totals at each CI and
/// anticipative totals (prediction-interval component for the probabilistic
/// variable, recursive load/wind at the same CI). Rows are ordered by
/// timestamp, then CI, then PI.
pub fn sensitivity(inputs: &Inputs, models: &Models, cfg: &RunConfig) -> Result<Vec<SensitivityRow>> {
    let kind = cfg.probabilistic_variable;
    let mut grid = Vec::new();
    for &ci in &cfg.sensitivity_ci {
        let recursive = recursive_components(inputs, models, ci)?;
        let rec_total = rss_combine(&recursive[0], &recursive[1], &recursive[2])?;
        for &pi in &cfg.sensitivity_pi {
            let pi_part = method_prediction_interval(inputs.forecast(kind), pi, cfg.literal_pi)?;
            let ant_total = system_total(&recursive, kind, &pi_part.profile, "pi")?;
            grid.push((ci, pi, rec_total.clone(), ant_total));
        }
    }
    let mut rows = Vec::with_capacity(grid.len() * inputs.timestamps.len());
    for (t, &ts) in inputs.timestamps.iter().enumerate() {
        for (ci, pi, rec, ant) in &grid {
            rows.push(SensitivityRow {
                timestamp: ts,
                ci: *ci,
                pi: *pi,
                recursive_up_mw: rec.up[t],
                recursive_dn_mw: rec.down[t],
                anticipative_up_mw: ant.up[t],
                anticipative_dn_mw: ant.down[t],
            });
        }
    }
    Ok(rows)
}

/// Scenario set for the probabilistic variable.
pub fn scenarios_for(inputs: &Inputs, cfg: &RunConfig) -> Result<ScenarioSet> {
    generate_scenarios_with(
        inputs.forecast(cfg.probabilistic_variable),
        cfg.scenarios,
        &cfg.copula(),
        cfg.seed,
        cfg.repair,
    )
}

/// Per-variable component of one method (not hybrid or risk-based).
pub fn method_component(
    method: MethodId,
    inputs: &Inputs,
    models: &Models,
    scenarios: Option<&ScenarioSet>,
    cfg: &RunConfig,
) -> Result<MethodResult> {
    let kind = cfg.probabilistic_variable;
    let forecast = inputs.forecast(kind);
    let model = models.get(kind);
    let need_set = || scenarios.ok_or_else(|| Error::invalid(format!("method {method} needs scenarios")));
    match method {
        MethodId::Deterministic => method_deterministic(forecast, model, cfg.ci),
        MethodId::AllScenarios => method_all_scenarios(need_set()?, model, cfg.ci),
        MethodId::ExtremeScenarios | MethodId::Bounds => {
            let set = need_set()?;
            let d = extreme_count(cfg.extreme_fraction, set.len())?;
            let extremes = select_extremes(set, d, cfg.extreme_score)?;
            if method == MethodId::Bounds {
                method_bounds(set, &extremes, forecast)
            } else {
                method_extreme_scenarios(set, &extremes, model, cfg.ci)
            }
        }
        MethodId::PredictionInterval => method_prediction_interval(forecast, cfg.pi, cfg.literal_pi),
        MethodId::Hybrid | MethodId::RiskBased => {
            Err(Error::invalid(format!("{method} is not a per-variable method")))
        }
    }
}

/// Hash and size of one file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub inputs: Vec<FileHash>,
    /// Output file name → SHA-256.
    pub outputs: BTreeMap<String, String>,
    /// Wall-clock milliseconds per stage; informational only.
    pub timings_ms: BTreeMap<String, f64>,
}

impl RunManifest {
    /// Inputs whose current contents no longer match the recorded hashes.
    pub fn changed_inputs(&self) -> Result<Vec<String>> {
        let mut changed = Vec::new();
        for f in &self.inputs {
            let path = Path::new(&f.path);
            if !path.is_file() || io::file_sha256(path)? != f.sha256 {
                changed.push(f.path.clone());
            }
        }
        Ok(changed)
    }
}

/// In-memory results of a run alongside the manifest.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub manifest: RunManifest,
    pub timestamps: Vec<NaiveDateTime>,
    /// System-total reserves per method.
    pub reserves: BTreeMap<MethodId, ReserveProfile>,
    pub risks: BTreeMap<MethodId, RiskProfile>,
    pub moments: Option<MomentComparison>,
    pub sensitivity: Vec<SensitivityRow>,
    pub scenarios_generated: bool,
}

const LOCK_FILE: &str = ".dynreserve.lock";

/// Exclusive claim on an output directory, released on drop.
struct DirLock {
    path: PathBuf,
    _file: File,
}

impl DirLock {
    fn acquire(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let path = dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(file) => Ok(Self { path, _file: file }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Locked(path)),
            Err(source) => Err(Error::Io { path, source }),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

/// Output files written so far, removed again if the run fails.
struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Outputs {
    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.written.push(p.clone());
        p
    }

    fn discard(&self) {
        for p in &self.written {
            let _ = std::fs::remove_file(p);
        }
    }
}

/// Runs the full pipeline, using `cfg.threads` workers when set.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunReport> {
    match cfg.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
            pool.install(|| run_locked(cfg))
        }
        None => run_locked(cfg),
    }
}

fn run_locked(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let _lock = DirLock::acquire(&cfg.output_dir)?;
    let mut outputs = Outputs {
        dir: cfg.output_dir.clone(),
        written: Vec::new(),
    };
    let result = run_stages(cfg, &mut outputs);
    if result.is_err() {
        outputs.discard();
    }
    result
}

fn timed<T>(timings: &mut BTreeMap<String, f64>, stage: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let out = f().map_err(|e| e.in_stage(stage))?;
    timings.insert(stage.to_string(), start.elapsed().as_secs_f64() * 1e3);
    Ok(out)
}

fn run_stages(cfg: &RunConfig, outputs: &mut Outputs) -> Result<RunReport> {
    let mut timings = BTreeMap::new();
    let inputs = timed(&mut timings, "load", || Inputs::load(cfg))?;
    let input_hashes = timed(&mut timings, "hash-inputs", || {
        cfg.input_paths()
            .into_iter()
            .map(|p| {
                Ok(FileHash {
                    path: p.display().to_string(),
                    sha256: io::file_sha256(p)?,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let models = timed(&mut timings, "reserve-models", || Models::build(&inputs, cfg))?;
    let recursive = timed(&mut timings, "recursive", || recursive_components(&inputs, &models, cfg.ci))?;

    let kind = cfg.probabilistic_variable;
    let needs_scenarios = cfg.methods.iter().any(|m| m.needs_scenarios())
        || (cfg.methods.contains(&MethodId::Hybrid) && cfg.hybrid_of.iter().any(|m| m.needs_scenarios()));
    let mut scenarios = None;
    let mut moments = None;
    if needs_scenarios {
        let set = timed(&mut timings, "scenarios", || scenarios_for(&inputs, cfg))?;
        timed(&mut timings, "write-scenarios", || {
            let mut params = BTreeMap::new();
            params.insert("theta".into(), serde_json::json!(cfg.theta));
            params.insert("omega".into(), serde_json::json!(cfg.omega));
            params.insert("jitter".into(), serde_json::json!(cfg.jitter));
            params.insert("repair".into(), serde_json::to_value(cfg.repair).expect("serializable"));
            params.insert("scenarios".into(), serde_json::json!(cfg.scenarios));
            let path = outputs.path("scenarios.csv");
            outputs.written.push(io::sidecar_path(&path));
            io::write_scenarios(&path, &set, params)
        })?;
        let cmp = timed(&mut timings, "validate-moments", || {
            let cmp = compare_moments(inputs.forecast(kind), &set, cfg.n_grid)?;
            io::write_moments(&outputs.path("moments_validation.csv"), &cmp)?;
            Ok(cmp)
        })?;
        moments = Some(cmp);
        scenarios = Some(set);
    }

    let dist = timed(&mut timings, "deviations", || {
        DeviationDistribution::build(&inputs.net_history, cfg.risk_grouping)
    })?;

    let mut reserves: BTreeMap<MethodId, ReserveProfile> = BTreeMap::new();
    timed(&mut timings, "methods", || {
        let mut wanted: Vec<MethodId> = cfg.methods.clone();
        if wanted.contains(&MethodId::Hybrid) {
            wanted.extend(cfg.hybrid_of.iter().copied());
        }
        wanted.sort_unstable();
        wanted.dedup();
        for &m in &wanted {
            let total = match m {
                MethodId::Hybrid => continue,
                MethodId::RiskBased => size_profile(&dist, cfg.rho_limit, &inputs.timestamps)?,
                _ => {
                    let part = method_component(m, &inputs, &models, scenarios.as_ref(), cfg)?;
                    system_total(&recursive, kind, &part.profile, m.as_str())?
                }
            };
            reserves.insert(m, total);
        }
        if wanted.contains(&MethodId::Hybrid) {
            let of: Vec<MethodId> = if cfg.hybrid_of.is_empty() {
                reserves.keys().copied().collect()
            } else {
                cfg.hybrid_of.clone()
            };
            let parts: Vec<MethodResult> = of
                .iter()
                .map(|m| MethodResult {
                    method: *m,
                    profile: reserves[m].clone(),
                    provenance: String::new(),
                })
                .collect();
            let mut hybrid = method_hybrid(&parts)?.profile;
            hybrid.params = ReserveParams {
                ci: Some(cfg.ci),
                pi: Some(cfg.pi),
                extreme_fraction: Some(cfg.extreme_fraction),
                rho_limit: of.contains(&MethodId::RiskBased).then_some(cfg.rho_limit),
            };
            reserves.insert(MethodId::Hybrid, hybrid);
        }
        Ok(())
    })?;

    let mut risks = BTreeMap::new();
    timed(&mut timings, "write-reserves", || {
        for (m, profile) in &reserves {
            io::write_reserves(&outputs.path(&format!("reserves_{m}.csv")), &inputs.timestamps, profile)?;
            let r = risk(&dist, profile, &inputs.timestamps)?;
            io::write_risk(&outputs.path(&format!("risk_{m}.csv")), &r)?;
            risks.insert(*m, r);
        }
        Ok(())
    })?;

    let sens = timed(&mut timings, "sensitivity", || {
        let rows = sensitivity(&inputs, &models, cfg)?;
        io::write_sensitivity(&outputs.path("sensitivity.csv"), &rows)?;
        Ok(rows)
    })?;

    let manifest = timed(&mut timings, "manifest", || {
        let mut hashes = BTreeMap::new();
        for p in &outputs.written {
            let name = p.file_name().expect("file name").to_string_lossy().into_owned();
            hashes.insert(name, io::file_sha256(p)?);
        }
        Ok(RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: cfg.seed,
            config: serde_json::to_value(cfg).map_err(|e| Error::invalid(e.to_string()))?,
            inputs: input_hashes,
            outputs: hashes,
            timings_ms: BTreeMap::new(),
        })
    })?;
    let mut manifest = manifest;
    manifest.timings_ms = timings;
    io::write_json(&outputs.path("manifest.json"), &manifest).map_err(|e| e.in_stage("manifest"))?;

    Ok(RunReport {
        manifest,
        timestamps: inputs.timestamps,
        reserves,
        risks,
        moments,
        sensitivity: sens,
        scenarios_generated: scenarios.is_some(),
    })
}
