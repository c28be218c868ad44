//! CSV and JSON readers and writers for every input and output file.
//!
//! Timestamps are written as `YYYY-MM-DDTHH:MM:SS`; the readers also accept a
//! space separator and missing seconds. Floats are written in their shortest
//! round-trip form, so every output reads back to identical values.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDateTime;
use csv::StringRecord;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::forecast::{IntervalCdf, MomentComparison, ProbabilisticForecast, TimeSeries, VariableKind, MOMENT_NAMES};
use crate::history::{HistoricalRecord, HistoricalSeries};
use crate::reserve::ReserveProfile;
use crate::risk::RiskProfile;
use crate::scenario::{Scenario, ScenarioSet};

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

const TIMESTAMP_FORMATS: [&str; 4] = ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"];

pub fn format_timestamp(t: NaiveDateTime) -> String {
    t.format(TIMESTAMP_FORMAT).to_string()
}

pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    TIMESTAMP_FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => parse_err(path, line, format!("{other:?}")),
    }
}

/// Rows of a CSV file with their 1-based line numbers.
struct Table {
    path: PathBuf,
    headers: Vec<String>,
    rows: Vec<(u64, StringRecord)>,
}

impl Table {
    fn read(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(io_err(path))?;
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
        let headers = reader
            .headers()
            .map_err(|e| csv_err(path, e))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| csv_err(path, e))?;
            let line = record.position().map_or(0, |p| p.line());
            rows.push((line, record));
        }
        Ok(Self {
            path: path.to_path_buf(),
            headers,
            rows,
        })
    }

    fn column(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| parse_err(&self.path, 1, format!("missing column `{name}`")))
    }

    fn float(&self, line: u64, record: &StringRecord, col: usize) -> Result<f64> {
        let raw = record.get(col).unwrap_or("");
        raw.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| {
                parse_err(
                    &self.path,
                    line,
                    format!("column `{}`: `{raw}` is not a finite number", self.headers[col]),
                )
            })
    }

    fn optional_float(&self, line: u64, record: &StringRecord, col: usize) -> Result<Option<f64>> {
        match record.get(col).unwrap_or("") {
            "" => Ok(None),
            _ => self.float(line, record, col).map(Some),
        }
    }

    fn timestamp(&self, line: u64, record: &StringRecord, col: usize) -> Result<NaiveDateTime> {
        let raw = record.get(col).unwrap_or("");
        parse_timestamp(raw).ok_or_else(|| parse_err(&self.path, line, format!("`{raw}` is not a timestamp")))
    }

    /// Timestamps of every row, strictly increasing.
    fn timestamps(&self, col: usize) -> Result<Vec<NaiveDateTime>> {
        let mut out: Vec<NaiveDateTime> = Vec::with_capacity(self.rows.len());
        for (line, record) in &self.rows {
            let t = self.timestamp(*line, record, col)?;
            if let Some(&prev) = out.last() {
                if t == prev {
                    return Err(parse_err(
                        &self.path,
                        *line,
                        format!("duplicate timestamp {}", format_timestamp(t)),
                    ));
                }
                if t < prev {
                    return Err(parse_err(
                        &self.path,
                        *line,
                        format!(
                            "timestamp {} is earlier than the previous row ({})",
                            format_timestamp(t),
                            format_timestamp(prev)
                        ),
                    ));
                }
            }
            out.push(t);
        }
        Ok(out)
    }
}

/// Creates `path` (and its parent directories) for buffered writing.
fn create(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let file = File::create(path).map_err(io_err(path))?;
    Ok(csv::WriterBuilder::new().from_writer(BufWriter::new(file)))
}

fn write_row<W: Write>(w: &mut csv::Writer<W>, path: &Path, row: &[String]) -> Result<()> {
    w.write_record(row).map_err(|e| csv_err(path, e))
}

fn finish<W: Write>(mut w: csv::Writer<W>, path: &Path) -> Result<()> {
    w.flush().map_err(io_err(path))
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn resolution_of(path: &Path, timestamps: &[NaiveDateTime]) -> Result<u32> {
    if timestamps.len() < 2 {
        return Ok(60);
    }
    let step = (timestamps[1] - timestamps[0]).num_minutes();
    for (i, w) in timestamps.windows(2).enumerate() {
        if (w[1] - w[0]).num_minutes() != step {
            return Err(parse_err(
                path,
                i as u64 + 3,
                format!("irregular spacing at {}", format_timestamp(w[1])),
            ));
        }
    }
    u32::try_from(step)
        .ok()
        .filter(|&s| s > 0)
        .ok_or_else(|| parse_err(path, 3, "non-positive resolution"))
}

// ---- histories ----

/// Reads `timestamp,forecast_mw,actual_mw`.
pub fn load_history(path: &Path, kind: VariableKind) -> Result<HistoricalSeries> {
    let table = Table::read(path)?;
    let (ct, cf, ca) = (
        table.column("timestamp")?,
        table.column("forecast_mw")?,
        table.column("actual_mw")?,
    );
    let timestamps = table.timestamps(ct)?;
    let mut records = Vec::with_capacity(table.rows.len());
    for ((line, row), timestamp) in table.rows.iter().zip(timestamps) {
        records.push(HistoricalRecord {
            timestamp,
            forecast: table.float(*line, row, cf)?,
            actual: table.float(*line, row, ca)?,
        });
    }
    if records.is_empty() {
        return Err(parse_err(path, 1, "no data rows"));
    }
    HistoricalSeries::new(kind, records)
}

pub fn write_history(path: &Path, history: &HistoricalSeries) -> Result<()> {
    let mut w = create(path)?;
    write_row(&mut w, path, &["timestamp", "forecast_mw", "actual_mw"].map(String::from))?;
    for r in history.records() {
        write_row(&mut w, path, &[format_timestamp(r.timestamp), num(r.forecast), num(r.actual)])?;
    }
    finish(w, path)
}

// ---- forecasts ----

/// Probability level of a `pNN` column header, read as a percentage.
pub fn level_of_header(h: &str) -> Option<f64> {
    let digits = h.strip_prefix('p').or_else(|| h.strip_prefix('P'))?;
    let v: f64 = digits.parse().ok()?;
    let p = v / 100.0;
    (p > 0.0 && p < 1.0).then_some(p)
}

/// Column header for probability level `p`, e.g. `p05` for 0.05.
pub fn header_of_level(p: f64) -> String {
    let pct = p * 100.0;
    if (pct - pct.round()).abs() < 1e-9 {
        format!("p{:02}", pct.round() as i64)
    } else {
        format!("p{pct}")
    }
}

/// Reads `timestamp,central,p05,...`. When `levels` is given, the probability
/// columns must match it exactly. A file without probability columns is a
/// deterministic forecast.
pub fn load_forecast(path: &Path, kind: VariableKind, levels: Option<&[f64]>) -> Result<ProbabilisticForecast> {
    let table = Table::read(path)?;
    let ct = table.column("timestamp")?;
    let cc = table.column("central")?;
    let quantile_cols: Vec<(usize, f64)> = table
        .headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != ct && *i != cc)
        .map(|(i, h)| {
            level_of_header(h)
                .map(|p| (i, p))
                .ok_or_else(|| parse_err(path, 1, format!("column `{h}` is not a probability level like `p05`")))
        })
        .collect::<Result<_>>()?;
    if let Some(expected) = levels {
        let found: Vec<f64> = quantile_cols.iter().map(|(_, p)| *p).collect();
        let same = found.len() == expected.len() && found.iter().zip(expected).all(|(a, b)| (a - b).abs() < 1e-9);
        if !same && !found.is_empty() {
            let names: Vec<String> = expected.iter().map(|&p| header_of_level(p)).collect();
            return Err(parse_err(
                path,
                1,
                format!("probability columns do not match the configured levels ({})", names.join(",")),
            ));
        }
    }
    let timestamps = table.timestamps(ct)?;
    if timestamps.is_empty() {
        return Err(parse_err(path, 1, "no data rows"));
    }
    let resolution = resolution_of(path, &timestamps)?;
    let mut central = Vec::with_capacity(timestamps.len());
    let mut intervals = Vec::with_capacity(timestamps.len());
    for (line, row) in &table.rows {
        let c = table.float(*line, row, cc)?;
        central.push(c);
        if quantile_cols.is_empty() {
            intervals.push(IntervalCdf::atom(c));
            continue;
        }
        let mut points = Vec::with_capacity(quantile_cols.len());
        for &(col, p) in &quantile_cols {
            points.push((p, table.float(*line, row, col)?));
        }
        for (a, b) in (0..points.len()).zip(1..points.len()) {
            if points[b].1 < points[a].1 {
                return Err(parse_err(
                    path,
                    *line,
                    format!(
                        "quantile crossing: `{}` = {} is below `{}` = {}",
                        table.headers[quantile_cols[b].0], points[b].1, table.headers[quantile_cols[a].0], points[a].1
                    ),
                ));
            }
        }
        intervals.push(IntervalCdf::new(points).map_err(|e| parse_err(path, *line, e.to_string()))?);
    }
    let id = path.file_stem().map_or_else(|| "forecast".into(), |s| s.to_string_lossy().into_owned());
    let series = TimeSeries::new(kind, timestamps[0], resolution, central)?;
    ProbabilisticForecast::new(id, series, intervals)
}

pub fn write_forecast(path: &Path, forecast: &ProbabilisticForecast) -> Result<()> {
    let levels: Vec<f64> = forecast
        .intervals()
        .iter()
        .find(|c| !c.levels().is_empty())
        .map(|c| c.levels().to_vec())
        .unwrap_or_default();
    let mut w = create(path)?;
    let mut header = vec!["timestamp".to_string(), "central".to_string()];
    header.extend(levels.iter().map(|&p| header_of_level(p)));
    write_row(&mut w, path, &header)?;
    for ((t, &c), cdf) in forecast
        .timestamps()
        .into_iter()
        .zip(forecast.central().values())
        .zip(forecast.intervals())
    {
        let mut row = vec![format_timestamp(t), num(c)];
        row.extend(levels.iter().map(|&p| num(cdf.inverse(p))));
        write_row(&mut w, path, &row)?;
    }
    finish(w, path)
}

// ---- scenarios ----

/// Sidecar metadata written next to a scenario CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMeta {
    pub source: String,
    pub kind: VariableKind,
    pub seed: u64,
    pub timestamps: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, serde_json::Value>,
}

/// `scenarios.csv` → `scenarios.meta.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.json")
}

/// Writes `scenario_id,probability,t0,t1,...` plus the sidecar JSON.
pub fn write_scenarios(path: &Path, set: &ScenarioSet, params: BTreeMap<String, serde_json::Value>) -> Result<()> {
    let mut w = create(path)?;
    let mut header = vec!["scenario_id".to_string(), "probability".to_string()];
    header.extend((0..set.horizon()).map(|t| format!("t{t}")));
    write_row(&mut w, path, &header)?;
    for (i, s) in set.scenarios().iter().enumerate() {
        let mut row = vec![i.to_string(), num(s.probability)];
        row.extend(s.values.iter().map(|&v| num(v)));
        write_row(&mut w, path, &row)?;
    }
    finish(w, path)?;
    let meta = ScenarioMeta {
        source: set.source().to_string(),
        kind: set.kind(),
        seed: set.seed(),
        timestamps: set.timestamps().iter().map(|&t| format_timestamp(t)).collect(),
        params,
    };
    write_json(&sidecar_path(path), &meta)
}

pub fn load_scenarios(path: &Path) -> Result<ScenarioSet> {
    let meta: ScenarioMeta = read_json(&sidecar_path(path))?;
    let timestamps = meta
        .timestamps
        .iter()
        .map(|s| parse_timestamp(s).ok_or_else(|| Error::invalid(format!("bad timestamp `{s}` in scenario metadata"))))
        .collect::<Result<Vec<_>>>()?;
    let table = Table::read(path)?;
    let cp = table.column("probability")?;
    let value_cols: Vec<usize> = (0..timestamps.len())
        .map(|t| table.column(&format!("t{t}")))
        .collect::<Result<_>>()?;
    let mut scenarios = Vec::with_capacity(table.rows.len());
    for (line, row) in &table.rows {
        let probability = table.float(*line, row, cp)?;
        let values = value_cols
            .iter()
            .map(|&c| table.float(*line, row, c))
            .collect::<Result<Vec<_>>>()?;
        scenarios.push(Scenario {
            values,
            log_weight: 0.0,
            probability,
        });
    }
    ScenarioSet::new(meta.source, meta.kind, timestamps, scenarios, meta.seed)
}

// ---- reserves ----

pub fn write_reserves(path: &Path, timestamps: &[NaiveDateTime], profile: &ReserveProfile) -> Result<()> {
    if timestamps.len() != profile.horizon() {
        return Err(Error::HorizonMismatch {
            expected: timestamps.len(),
            found: profile.horizon(),
        });
    }
    let mut w = create(path)?;
    write_row(&mut w, path, &["timestamp", "r_up_mw", "r_dn_mw", "method"].map(String::from))?;
    for (t, ts) in timestamps.iter().enumerate() {
        write_row(
            &mut w,
            path,
            &[format_timestamp(*ts), num(profile.up[t]), num(profile.down[t]), profile.label.clone()],
        )?;
    }
    finish(w, path)
}

/// Reads `timestamp,r_up_mw,r_dn_mw[,method]`.
pub fn load_reserves(path: &Path) -> Result<(Vec<NaiveDateTime>, ReserveProfile)> {
    let table = Table::read(path)?;
    let (ct, cu, cd) = (
        table.column("timestamp")?,
        table.column("r_up_mw")?,
        table.column("r_dn_mw")?,
    );
    let cm = table.column("method").ok();
    let timestamps = table.timestamps(ct)?;
    let mut up = Vec::with_capacity(timestamps.len());
    let mut down = Vec::with_capacity(timestamps.len());
    let mut label = String::new();
    for (line, row) in &table.rows {
        up.push(table.float(*line, row, cu)?);
        down.push(table.float(*line, row, cd)?);
        if let Some(c) = cm {
            label = row.get(c).unwrap_or("").to_string();
        }
    }
    let profile = ReserveProfile::new(up, down, label).map_err(|e| parse_err(path, 0, e.to_string()))?;
    Ok((timestamps, profile))
}

// ---- risk ----

pub fn write_risk(path: &Path, risk: &RiskProfile) -> Result<()> {
    let mut w = create(path)?;
    write_row(&mut w, path, &["timestamp", "rho_short", "rho_long"].map(String::from))?;
    for (t, ts) in risk.timestamps.iter().enumerate() {
        write_row(&mut w, path, &[format_timestamp(*ts), num(risk.rho_short[t]), num(risk.rho_long[t])])?;
    }
    finish(w, path)
}

pub fn load_risk(path: &Path) -> Result<RiskProfile> {
    let table = Table::read(path)?;
    let (ct, cs, cl) = (
        table.column("timestamp")?,
        table.column("rho_short")?,
        table.column("rho_long")?,
    );
    let timestamps = table.timestamps(ct)?;
    let mut rho_short = Vec::new();
    let mut rho_long = Vec::new();
    for (line, row) in &table.rows {
        rho_short.push(table.float(*line, row, cs)?);
        rho_long.push(table.float(*line, row, cl)?);
    }
    Ok(RiskProfile {
        timestamps,
        rho_short,
        rho_long,
    })
}

// ---- moment validation ----

/// One row of `moments_validation.csv`. Empty cells mean undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentRow {
    pub moment: String,
    pub timestamp: NaiveDateTime,
    pub forecast: Option<f64>,
    pub scenarios: Option<f64>,
    pub nrmse_percent: Option<f64>,
}

/// Long format: one row per moment and interval; the moment's %NRMSE is
/// repeated on each of its rows.
pub fn moment_rows(cmp: &MomentComparison) -> Vec<MomentRow> {
    let mut rows = Vec::new();
    for (k, name) in MOMENT_NAMES.iter().enumerate() {
        let f = MomentComparison::column(&cmp.forecast, k);
        let s = MomentComparison::column(&cmp.scenarios, k);
        for (t, &ts) in cmp.timestamps.iter().enumerate() {
            rows.push(MomentRow {
                moment: name.to_string(),
                timestamp: ts,
                forecast: f[t],
                scenarios: s[t],
                nrmse_percent: cmp.nrmse[k],
            });
        }
    }
    rows
}

pub fn write_moments(path: &Path, cmp: &MomentComparison) -> Result<()> {
    let mut w = create(path)?;
    write_row(
        &mut w,
        path,
        &["moment", "timestamp", "forecast", "scenarios", "nrmse_percent"].map(String::from),
    )?;
    for r in moment_rows(cmp) {
        write_row(
            &mut w,
            path,
            &[r.moment, format_timestamp(r.timestamp), opt(r.forecast), opt(r.scenarios), opt(r.nrmse_percent)],
        )?;
    }
    finish(w, path)
}

pub fn load_moments(path: &Path) -> Result<Vec<MomentRow>> {
    let table = Table::read(path)?;
    let cols = ["moment", "timestamp", "forecast", "scenarios", "nrmse_percent"]
        .map(|c| table.column(c))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    table
        .rows
        .iter()
        .map(|(line, row)| {
            Ok(MomentRow {
                moment: row.get(cols[0]).unwrap_or("").to_string(),
                timestamp: table.timestamp(*line, row, cols[1])?,
                forecast: table.optional_float(*line, row, cols[2])?,
                scenarios: table.optional_float(*line, row, cols[3])?,
                nrmse_percent: table.optional_float(*line, row, cols[4])?,
            })
        })
        .collect()
}

// ---- sensitivity ----

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub timestamp: NaiveDateTime,
    pub ci: f64,
    pub pi: f64,
    pub recursive_up_mw: f64,
    pub recursive_dn_mw: f64,
    pub anticipative_up_mw: f64,
    pub anticipative_dn_mw: f64,
}

const SENSITIVITY_HEADER: [&str; 7] = [
    "timestamp",
    "ci",
    "pi",
    "recursive_up_mw",
    "recursive_dn_mw",
    "anticipative_up_mw",
    "anticipative_dn_mw",
];

pub fn write_sensitivity(path: &Path, rows: &[SensitivityRow]) -> Result<()> {
    let mut w = create(path)?;
    write_row(&mut w, path, &SENSITIVITY_HEADER.map(String::from))?;
    for r in rows {
        write_row(
            &mut w,
            path,
            &[
                format_timestamp(r.timestamp),
                num(r.ci),
                num(r.pi),
                num(r.recursive_up_mw),
                num(r.recursive_dn_mw),
                num(r.anticipative_up_mw),
                num(r.anticipative_dn_mw),
            ],
        )?;
    }
    finish(w, path)
}

pub fn load_sensitivity(path: &Path) -> Result<Vec<SensitivityRow>> {
    let table = Table::read(path)?;
    let cols = SENSITIVITY_HEADER
        .map(|c| table.column(c))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    table
        .rows
        .iter()
        .map(|(line, row)| {
            let f = |k: usize| table.float(*line, row, cols[k]);
            Ok(SensitivityRow {
                timestamp: table.timestamp(*line, row, cols[0])?,
                ci: f(1)?,
                pi: f(2)?,
                recursive_up_mw: f(3)?,
                recursive_dn_mw: f(4)?,
                anticipative_up_mw: f(5)?,
                anticipative_dn_mw: f(6)?,
            })
        })
        .collect()
}

// ---- JSON and hashing ----

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::invalid(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(io_err(path))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| parse_err(path, e.line() as u64, e.to_string()))
}

/// Lower-case hex SHA-256 of a file's contents.
pub fn file_sha256(path: &Path) -> Result<String> {
    let mut file = File::open(path).map_err(io_err(path))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf).map_err(io_err(path))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hasher.finalize().iter().map(|b| format!("{b:02x}")).collect())
}
