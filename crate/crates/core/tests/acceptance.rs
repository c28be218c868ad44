//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any of them fails.
//!
//! All randomness comes from fixed seeds, so a run is reproducible.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use chrono::{Duration, NaiveDateTime, Timelike};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dynreserve::config::RunConfig;
use dynreserve::covariance::{lag_correlation_matrix, min_eigenvalue};
use dynreserve::forecast::compare_moments;
use dynreserve::methods::{
    method_all_scenarios, method_bounds, method_deterministic, method_extreme_scenarios, method_hybrid,
    method_prediction_interval, select_extremes,
};
use dynreserve::pipeline::{run_pipeline, sensitivity, Inputs, Models, RunManifest};
use dynreserve::risk::{size_profile, GroupKey};
use dynreserve::scenario::CopulaSampler;
use dynreserve::synthetic::{forecast_day, standard_levels, varied_forecast};
use dynreserve::{
    build_covariance, generate_scenarios, requirements, risk, CopulaParams, CovarianceRepair, DeviationDistribution,
    ExplanatoryKind, HistoricalRecord, HistoricalSeries, MethodResult, ReserveModel, ReserveProfile,
    ScenarioSet, VariableKind,
};

type Outcome = Result<String, String>;

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn fixture_config(out: &Path) -> RunConfig {
    let mut cfg = RunConfig::load(&fixture_dir().join("config.json")).expect("fixture config loads");
    cfg.output_dir = out.to_path_buf();
    cfg
}

fn hourly(n: usize) -> Vec<NaiveDateTime> {
    (0..n).map(|h| forecast_day() + Duration::hours(h as i64)).collect()
}

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

// ---------------------------------------------------------------------------
// 1. moment convergence

fn moment_convergence() -> Outcome {
    let start = Instant::now();
    let forecast = varied_forecast(forecast_day(), 24, &standard_levels()).map_err(|e| e.to_string())?;
    let set = generate_scenarios(&forecast, 1000, &CopulaParams::default(), 2020).map_err(|e| e.to_string())?;
    let cmp = compare_moments(&forecast, &set, 10_000).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    let limits = [1.0, 5.0, 5.0, 10.0];
    let names = ["mean", "variance", "skewness", "kurtosis"];
    let mut parts = Vec::new();
    let mut ok = elapsed < 10.0;
    for k in 0..4 {
        match cmp.nrmse[k] {
            Some(v) => {
                ok &= v < limits[k];
                parts.push(format!("{} {:.3}% (<{}%)", names[k], v, limits[k]));
            }
            None => {
                ok = false;
                parts.push(format!("{} undefined", names[k]));
            }
        }
    }
    let msg = format!("S=1000 %NRMSE {} in {elapsed:.2}s", parts.join(", "));
    if ok { Ok(msg) } else { Err(msg) }
}

// ---------------------------------------------------------------------------
// 2. copula fidelity

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Kolmogorov-Smirnov distance of `u` from the uniform distribution.
fn ks_uniform(u: &mut [f64]) -> f64 {
    u.sort_by(f64::total_cmp);
    let n = u.len() as f64;
    u.iter()
        .enumerate()
        .map(|(i, &x)| (((i + 1) as f64 / n) - x).max(x - i as f64 / n))
        .fold(0.0, f64::max)
}

fn copula_fidelity() -> Outcome {
    let start = Instant::now();
    let (s, t, seed) = (5000usize, 24usize, 2020u64);
    let params = CopulaParams::default();
    let sampler = CopulaSampler::new(t, &params, CovarianceRepair::default()).map_err(|e| e.to_string())?;
    let draws: Vec<Vec<f64>> = (0..s as u64).map(|i| sampler.gaussian(seed, i)).collect();
    let column = |k: usize| draws.iter().map(|d| d[k]).collect::<Vec<f64>>();

    let mut worst_lag = 0.0_f64;
    for k in 0..t - 1 {
        let r = pearson(&column(k), &column(k + 1));
        worst_lag = worst_lag.max((r - params.theta).abs());
    }

    let uniforms: Vec<Vec<f64>> = (0..s as u64).map(|i| sampler.uniforms(seed, i)).collect();
    // asymptotic critical value at alpha = 0.01 with the small-sample correction
    let sqrt_n = (s as f64).sqrt();
    let critical = 1.628 / (sqrt_n + 0.12 + 0.11 / sqrt_n);
    let mut worst_ks = 0.0_f64;
    let mut rejected = 0;
    for k in 0..t {
        let mut u: Vec<f64> = uniforms.iter().map(|z| z[k]).collect();
        let d = ks_uniform(&mut u);
        worst_ks = worst_ks.max(d);
        if d > critical {
            rejected += 1;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let msg = format!(
        "S={s} T={t} max |lag-1 r - theta| = {worst_lag:.4} (<=0.03), max KS D = {worst_ks:.4} \
         (critical {critical:.4}, {rejected}/{t} rejected) in {elapsed:.2}s"
    );
    if worst_lag <= 0.03 && rejected == 0 && elapsed < 30.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

// ---------------------------------------------------------------------------
// 3. quantile engine against a brute-force oracle

fn oracle_explanatory(kind: ExplanatoryKind, values: &[f64], timestamps: &[NaiveDateTime]) -> Vec<f64> {
    match kind {
        ExplanatoryKind::Magnitude => values.to_vec(),
        ExplanatoryKind::RateOfChange => {
            let mut out = Vec::new();
            for h in 0..values.len() {
                if h == 0 {
                    out.push(if values.len() > 1 { values[1] - values[0] } else { 0.0 });
                } else {
                    out.push(values[h] - values[h - 1]);
                }
            }
            out
        }
        ExplanatoryKind::HourOfDay => timestamps
            .iter()
            .map(|t| t.hour() as f64 + t.minute() as f64 / 60.0 + t.second() as f64 / 3600.0)
            .collect(),
    }
}

fn oracle_quantile(pop: &[f64], ci: f64) -> f64 {
    let mut x = pop.to_vec();
    x.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = x.len();
    let h = (n - 1) as f64 * ci + 1.0;
    let lo = h.floor() as usize;
    if lo >= n {
        return x[n - 1];
    }
    x[lo - 1] + (h - lo as f64) * (x[lo] - x[lo - 1])
}

/// Bins, fallbacks and quantiles computed by linear scans.
fn oracle_requirements(
    history: &HistoricalSeries,
    explanatory: ExplanatoryKind,
    bins: usize,
    nu_query: &[f64],
    ci: f64,
) -> (Vec<f64>, Vec<f64>) {
    let rec = history.records();
    let forecasts: Vec<f64> = rec.iter().map(|r| r.forecast).collect();
    let stamps: Vec<NaiveDateTime> = rec.iter().map(|r| r.timestamp).collect();
    let nu = oracle_explanatory(explanatory, &forecasts, &stamps);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in &nu {
        if v < lo {
            lo = v;
        }
        if v > hi {
            hi = v;
        }
    }
    let b_count = if hi > lo { bins } else { 1 };
    let edges: Vec<f64> = (0..=b_count)
        .map(|b| lo + (b as f64 / b_count as f64) * (hi - lo))
        .collect();
    let which = |v: f64| {
        for b in 1..=b_count {
            if v <= edges[b] {
                return b - 1;
            }
        }
        b_count - 1
    };
    let generation = matches!(history.kind(), VariableKind::Wind | VariableKind::Solar);
    let mut up_pop = vec![Vec::new(); b_count];
    let mut dn_pop = vec![Vec::new(); b_count];
    for (r, &v) in rec.iter().zip(&nu) {
        let e = r.actual - r.forecast;
        if e == 0.0 {
            continue;
        }
        let up = (e > 0.0) != generation;
        if up {
            up_pop[which(v)].push(e.abs());
        } else {
            dn_pop[which(v)].push(e.abs());
        }
    }
    let pick = |pops: &Vec<Vec<f64>>, b: usize| -> f64 {
        let mut best: Option<usize> = None;
        for c in 0..b_count {
            if pops[c].is_empty() {
                continue;
            }
            let better = match best {
                None => true,
                Some(p) => c.abs_diff(b) < p.abs_diff(b),
            };
            if better {
                best = Some(c);
            }
        }
        match best {
            Some(c) => oracle_quantile(&pops[c], ci),
            None => 0.0,
        }
    };
    let up = nu_query.iter().map(|&v| pick(&up_pop, which(v))).collect();
    let dn = nu_query.iter().map(|&v| pick(&dn_pop, which(v))).collect();
    (up, dn)
}

fn random_history(rng: &mut ChaCha8Rng, kind: VariableKind, n: usize) -> HistoricalSeries {
    // coarse grids make repeated values, ties at bin edges and zero errors likely
    let step = [1.0, 0.5, 10.0][rng.random_range(0..3)];
    let start = forecast_day() - Duration::hours(rng.random_range(0..48));
    let records = (0..n)
        .map(|i| {
            let forecast = (rng.random_range(0..20) as f64) * step;
            let actual = forecast + (rng.random_range(-6..=6) as f64) * step * 0.5;
            HistoricalRecord {
                timestamp: start + Duration::hours(i as i64),
                forecast,
                actual,
            }
        })
        .collect();
    HistoricalSeries::new(kind, records).expect("valid random history")
}

fn quantile_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let kinds = [VariableKind::Load, VariableKind::Wind, VariableKind::Solar, VariableKind::NetDemand];
    let explanatory = [ExplanatoryKind::Magnitude, ExplanatoryKind::RateOfChange, ExplanatoryKind::HourOfDay];
    let mut mismatches = Vec::new();
    let mut compared = 0usize;
    for instance in 0..200 {
        let kind = kinds[rng.random_range(0..kinds.len())];
        let ex = explanatory[rng.random_range(0..explanatory.len())];
        let n = rng.random_range(2..=50);
        let bins = rng.random_range(1..=5);
        let ci = match rng.random_range(0..6) {
            0 => 0.0,
            1 => 1.0,
            2 => 0.9,
            _ => rng.random_range(0.0..=1.0),
        };
        let history = random_history(&mut rng, kind, n);
        let model = ReserveModel::build(&history, ex, bins).map_err(|e| format!("instance {instance}: {e}"))?;
        // query at the historical values (hits the edges exactly) and at random points inside and outside
        let mut query = oracle_explanatory(ex, &history.forecasts(), &history.timestamps());
        query.extend(model.edges().iter().copied());
        for _ in 0..10 {
            query.push(rng.random_range(-50.0..250.0));
        }
        let got = requirements(&model, &query, ci).map_err(|e| format!("instance {instance}: {e}"))?;
        let (up, dn) = oracle_requirements(&history, ex, bins, &query, ci);
        compared += query.len();
        if bits(&got.up) != bits(&up) || bits(&got.down) != bits(&dn) {
            mismatches.push(instance);
        }
    }
    let msg = format!("200 instances, {compared} lookups, {} mismatches", mismatches.len());
    if mismatches.is_empty() { Ok(msg) } else { Err(format!("{msg}: instances {mismatches:?}")) }
}

// ---------------------------------------------------------------------------
// 4. method identities

fn method_identities() -> Outcome {
    let cfg = fixture_config(Path::new("unused"));
    let inputs = Inputs::load(&cfg).map_err(|e| e.to_string())?;
    let solar = inputs.forecast(VariableKind::Solar);
    let mut failures = Vec::new();

    let explanatory = [ExplanatoryKind::Magnitude, ExplanatoryKind::RateOfChange, ExplanatoryKind::HourOfDay];
    let set = generate_scenarios(solar, 200, &cfg.copula(), cfg.seed).map_err(|e| e.to_string())?;
    for ex in explanatory {
        let model = ReserveModel::build(inputs.history(VariableKind::Solar), ex, cfg.bins).map_err(|e| e.to_string())?;
        for ci in [0.5, 0.9, 0.99] {
            let all = method_all_scenarios(&set, &model, ci).map_err(|e| e.to_string())?;
            let every = select_extremes(&set, set.len(), ex).map_err(|e| e.to_string())?;
            let extreme = method_extreme_scenarios(&set, &every, &model, ci).map_err(|e| e.to_string())?;
            if bits(&all.profile.up) != bits(&extreme.profile.up) || bits(&all.profile.down) != bits(&extreme.profile.down)
            {
                failures.push(format!("extreme d=S != all ({}, ci {ci})", ex.as_str()));
            }
        }
    }

    for kind in [VariableKind::Load, VariableKind::Wind, VariableKind::Solar] {
        let forecast = inputs.forecast(kind);
        let central = ScenarioSet::central_only(forecast);
        for ex in explanatory {
            let model = ReserveModel::build(inputs.history(kind), ex, cfg.bins).map_err(|e| e.to_string())?;
            let all = method_all_scenarios(&central, &model, cfg.ci).map_err(|e| e.to_string())?;
            let det = method_deterministic(forecast, &model, cfg.ci).map_err(|e| e.to_string())?;
            if bits(&all.profile.up) != bits(&det.profile.up) || bits(&all.profile.down) != bits(&det.profile.down) {
                failures.push(format!("central-only all != deterministic ({kind}, {})", ex.as_str()));
            }
        }
    }

    let model = ReserveModel::build(inputs.history(VariableKind::Solar), cfg.solar_explanatory, cfg.bins)
        .map_err(|e| e.to_string())?;
    let mut pool: Vec<MethodResult> = Vec::new();
    for ci in [0.8, 0.9, 0.95] {
        pool.push(method_deterministic(solar, &model, ci).map_err(|e| e.to_string())?);
        pool.push(method_all_scenarios(&set, &model, ci).map_err(|e| e.to_string())?);
    }
    for d in [1, 5, 20, 100] {
        let ex = select_extremes(&set, d, cfg.extreme_score).map_err(|e| e.to_string())?;
        pool.push(method_extreme_scenarios(&set, &ex, &model, cfg.ci).map_err(|e| e.to_string())?);
        pool.push(method_bounds(&set, &ex, solar).map_err(|e| e.to_string())?);
    }
    for pi in [0.5, 0.8, 0.9] {
        pool.push(method_prediction_interval(solar, pi, false).map_err(|e| e.to_string())?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut below = 0usize;
    for _ in 0..100 {
        let k = rng.random_range(1..=pool.len().min(6));
        let picked: Vec<MethodResult> = (0..k).map(|_| pool[rng.random_range(0..pool.len())].clone()).collect();
        let hybrid = method_hybrid(&picked).map_err(|e| e.to_string())?;
        for m in &picked {
            for t in 0..m.profile.horizon() {
                if hybrid.profile.up[t] < m.profile.up[t] || hybrid.profile.down[t] < m.profile.down[t] {
                    below += 1;
                }
            }
        }
    }
    if below > 0 {
        failures.push(format!("hybrid below a constituent at {below} points"));
    }
    if failures.is_empty() {
        Ok("extreme d=S == all, central-only all == deterministic (bitwise), hybrid >= constituents on 100 combinations"
            .to_string())
    } else {
        Err(failures.join("; "))
    }
}

// ---------------------------------------------------------------------------
// 5. risk monotonicity and hybrid dominance

fn random_deviations(rng: &mut ChaCha8Rng, hours: usize) -> Vec<(NaiveDateTime, f64)> {
    let n = rng.random_range(1..=200);
    let scale = rng.random_range(1.0..500.0);
    let skew = rng.random_range(-1.0..1.0);
    (0..n)
        .map(|i| {
            let u: f64 = rng.random_range(-1.0..1.0);
            let e = scale * (u + skew * u * u);
            let e = if rng.random_bool(0.1) { (e / 10.0).round() * 10.0 } else { e };
            (forecast_day() + Duration::hours((i % hours) as i64), e)
        })
        .collect()
}

fn risk_monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut violations = 0usize;
    for _ in 0..1000 {
        let dist = DeviationDistribution::from_deviations(&random_deviations(&mut rng, 24), GroupKey::HourOfDay)
            .map_err(|e| e.to_string())?;
        let stamps = hourly(24);
        let r1: Vec<f64> = (0..24).map(|_| rng.random_range(0.0..600.0)).collect();
        let r2: Vec<f64> = r1.iter().map(|&r| r + rng.random_range(0.0..300.0)).collect();
        let lo = ReserveProfile::new(r1.clone(), r1, "lo").map_err(|e| e.to_string())?;
        let hi = ReserveProfile::new(r2.clone(), r2, "hi").map_err(|e| e.to_string())?;
        let a = risk(&dist, &lo, &stamps).map_err(|e| e.to_string())?;
        let b = risk(&dist, &hi, &stamps).map_err(|e| e.to_string())?;
        for t in 0..24 {
            if b.rho_short[t] > a.rho_short[t] || b.rho_long[t] > a.rho_long[t] {
                violations += 1;
            }
        }
    }

    let mut dominance = 0usize;
    for _ in 0..200 {
        let dist = DeviationDistribution::from_deviations(&random_deviations(&mut rng, 24), GroupKey::HourOfDay)
            .map_err(|e| e.to_string())?;
        let stamps = hourly(24);
        let k = rng.random_range(1..=5);
        let parts: Vec<MethodResult> = (0..k)
            .map(|_| {
                let up: Vec<f64> = (0..24).map(|_| rng.random_range(0.0..600.0)).collect();
                let dn: Vec<f64> = (0..24).map(|_| rng.random_range(0.0..600.0)).collect();
                MethodResult {
                    method: dynreserve::MethodId::Deterministic,
                    profile: ReserveProfile::new(up, dn, "part").expect("valid profile"),
                    provenance: String::new(),
                }
            })
            .collect();
        let hybrid = method_hybrid(&parts).map_err(|e| e.to_string())?;
        let rh = risk(&dist, &hybrid.profile, &stamps).map_err(|e| e.to_string())?;
        let rs: Vec<_> = parts
            .iter()
            .map(|p| risk(&dist, &p.profile, &stamps))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        for t in 0..24 {
            let min_short = rs.iter().map(|r| r.rho_short[t]).fold(f64::INFINITY, f64::min);
            let min_long = rs.iter().map(|r| r.rho_long[t]).fold(f64::INFINITY, f64::min);
            if rh.rho_short[t] > min_short || rh.rho_long[t] > min_long {
                dominance += 1;
            }
        }
    }
    let msg = format!(
        "1000 pairs: {violations} increases; 200 hybrids: {dominance} points above the best constituent"
    );
    if violations == 0 && dominance == 0 { Ok(msg) } else { Err(msg) }
}

// ---------------------------------------------------------------------------
// 6. risk ceiling sizing

fn oracle_short(samples: &[f64], r: f64) -> f64 {
    let n = samples.len() as f64;
    let max = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let above = samples.iter().filter(|&&e| e > r).count() as f64;
    if above == 0.0 { 0.0 } else { above / n * (max - r) }
}

fn oracle_long(samples: &[f64], r: f64) -> f64 {
    let n = samples.len() as f64;
    let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let below = samples.iter().filter(|&&e| e < -r).count() as f64;
    if below == 0.0 { 0.0 } else { below / n * (-r - min) }
}

/// Smallest `r >= 0` with `risk(r) <= limit`, by bisection on the
/// non-increasing risk curve.
fn oracle_min_reserve(risk_of: impl Fn(f64) -> f64, limit: f64, upper: f64) -> f64 {
    if risk_of(0.0) <= limit {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0_f64, upper.max(0.0));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if risk_of(mid) <= limit {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn risk_ceiling() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let stamps = hourly(24);
    let mut over = 0usize;
    let mut not_minimal = 0usize;
    let mut worst_gap = 0.0_f64;
    for _ in 0..200 {
        let devs = random_deviations(&mut rng, 24);
        let dist = DeviationDistribution::from_deviations(&devs, GroupKey::HourOfDay).map_err(|e| e.to_string())?;
        let limit = match rng.random_range(0..4) {
            0 => 100.0,
            1 => 0.0,
            _ => rng.random_range(0.0..200.0),
        };
        let profile = size_profile(&dist, limit, &stamps).map_err(|e| e.to_string())?;
        let rho = risk(&dist, &profile, &stamps).map_err(|e| e.to_string())?;
        for t in 0..24 {
            if rho.rho_short[t] > limit || rho.rho_long[t] > limit {
                over += 1;
            }
            let samples = &dist.group_for(stamps[t]).samples;
            let max = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
            let tol = 1e-6 * (max - min).max(1.0);
            let up = oracle_min_reserve(|r| oracle_short(samples, r), limit, max);
            let dn = oracle_min_reserve(|r| oracle_long(samples, r), limit, -min);
            for (got, want) in [(profile.up[t], up), (profile.down[t], dn)] {
                let gap = (got - want).abs();
                worst_gap = worst_gap.max(gap / tol);
                if gap > tol {
                    not_minimal += 1;
                }
            }
        }
    }
    let msg = format!(
        "200 sets x 24 hours: {over} above the limit, {not_minimal} not minimal, worst gap {worst_gap:.3} x tolerance"
    );
    if over == 0 && not_minimal == 0 { Ok(msg) } else { Err(msg) }
}

// ---------------------------------------------------------------------------
// 7. sensitivity monotonicity

fn sensitivity_monotonicity() -> Outcome {
    let cfg = fixture_config(Path::new("unused"));
    let inputs = Inputs::load(&cfg).map_err(|e| e.to_string())?;
    let models = Models::build(&inputs, &cfg).map_err(|e| e.to_string())?;
    let rows = sensitivity(&inputs, &models, &cfg).map_err(|e| e.to_string())?;
    type Key = (NaiveDateTime, u64, u64);
    let table: BTreeMap<Key, [f64; 4]> = rows
        .iter()
        .map(|r| {
            (
                (r.timestamp, r.ci.to_bits(), r.pi.to_bits()),
                [r.recursive_up_mw, r.recursive_dn_mw, r.anticipative_up_mw, r.anticipative_dn_mw],
            )
        })
        .collect();
    let (cis, pis) = (&cfg.sensitivity_ci, &cfg.sensitivity_pi);
    let mut decreases = 0usize;
    let mut checks = 0usize;
    for &ts in &inputs.timestamps {
        for &pi in pis {
            for w in cis.windows(2) {
                let a = table[&(ts, w[0].to_bits(), pi.to_bits())];
                let b = table[&(ts, w[1].to_bits(), pi.to_bits())];
                for k in 0..4 {
                    checks += 1;
                    if b[k] < a[k] {
                        decreases += 1;
                    }
                }
            }
        }
        for &ci in cis {
            for w in pis.windows(2) {
                let a = table[&(ts, ci.to_bits(), w[0].to_bits())];
                let b = table[&(ts, ci.to_bits(), w[1].to_bits())];
                for k in 2..4 {
                    checks += 1;
                    if b[k] < a[k] {
                        decreases += 1;
                    }
                }
            }
        }
    }
    let msg = format!("CI {cis:?} x PI {pis:?}: {checks} comparisons, {decreases} decreases");
    if decreases == 0 { Ok(msg) } else { Err(msg) }
}

// ---------------------------------------------------------------------------
// 8. determinism

fn read_outputs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).expect("output dir readable") {
        let path = entry.expect("dir entry").path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        out.insert(name, std::fs::read(&path).expect("output readable"));
    }
    out
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let threads = std::thread::available_parallelism().map_or(4, |n| n.get()).max(2);
    let runs = [("a", Some(1)), ("b", Some(1)), ("c", Some(threads))];
    let mut results = Vec::new();
    for (name, t) in runs {
        let mut cfg = fixture_config(&tmp.path().join(name));
        cfg.threads = t;
        run_pipeline(&cfg).map_err(|e| format!("run {name}: {e}"))?;
        results.push(read_outputs(&cfg.output_dir));
    }
    let manifest = |files: &BTreeMap<String, Vec<u8>>| -> RunManifest {
        serde_json::from_slice(&files["manifest.json"]).expect("manifest parses")
    };
    let mut diffs = Vec::new();
    let base = &results[0];
    for (other, label) in results[1..].iter().zip(["second run", &format!("{threads} threads")]) {
        if base.keys().ne(other.keys()) {
            diffs.push(format!("{label}: different file sets"));
            continue;
        }
        for (name, bytes) in base {
            if name != "manifest.json" && other[name] != *bytes {
                diffs.push(format!("{label}: {name} differs"));
            }
        }
        if manifest(base).outputs != manifest(other).outputs {
            diffs.push(format!("{label}: manifest output hashes differ"));
        }
    }
    let msg = format!(
        "{} files compared across 2 single-thread runs and a {threads}-thread run",
        base.len() - 1
    );
    if diffs.is_empty() { Ok(msg) } else { Err(format!("{msg}: {}", diffs.join("; "))) }
}

// ---------------------------------------------------------------------------
// 9. covariance repair

fn covariance_repair() -> Outcome {
    let params = CopulaParams::default();
    let mut problems = Vec::new();
    let mut detail = Vec::new();
    for t in [24, 96] {
        let m = build_covariance(t, &params).map_err(|e| e.to_string())?;
        let raw_min = min_eigenvalue(&lag_correlation_matrix(t, &params));
        let min = min_eigenvalue(&m);
        let symmetric = (0..t).all(|i| (0..t).all(|j| m[(i, j)] == m[(j, i)]));
        let diag = (0..t).map(|i| (m[(i, i)] - 1.0).abs()).fold(0.0, f64::max);
        if !symmetric || !(min > 0.0) || diag > 1e-9 {
            problems.push(format!("T={t}: symmetric {symmetric}, min eigenvalue {min:e}, diag error {diag:e}"));
        }
        detail.push(format!("T={t} min eigenvalue {raw_min:.3} -> {min:.2e}"));
    }
    // wherever the lag matrix is already positive definite it must come back unchanged
    let mut untouched = 0;
    for p in [params, CopulaParams::new(0.5, 0.1).unwrap(), CopulaParams::new(0.9, 0.9).unwrap()] {
        for t in 1..=12 {
            let raw = lag_correlation_matrix(t, &p);
            if min_eigenvalue(&raw) <= 1e-9 {
                continue;
            }
            let m = build_covariance(t, &p).map_err(|e| e.to_string())?;
            untouched += 1;
            if m != raw {
                problems.push(format!("theta {} omega {} T={t}: PD matrix was modified", p.theta, p.omega));
            }
        }
    }
    let msg = format!("{}; {untouched} already-PD cases returned unchanged", detail.join(", "));
    if problems.is_empty() && untouched > 0 { Ok(msg) } else { Err(format!("{msg}: {}", problems.join("; "))) }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("moment convergence", moment_convergence),
        ("copula fidelity", copula_fidelity),
        ("quantile engine oracle", quantile_oracle),
        ("method identities", method_identities),
        ("risk monotonicity and hybrid dominance", risk_monotonicity),
        ("risk ceiling sizing", risk_ceiling),
        ("sensitivity monotonicity", sensitivity_monotonicity),
        ("determinism", determinism),
        ("covariance repair", covariance_repair),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} acceptance criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
