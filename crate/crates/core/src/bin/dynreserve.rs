use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dynreserve::config::RunConfig;
use dynreserve::covariance::{CopulaParams, CovarianceRepair};
use dynreserve::forecast::{compare_moments, VariableKind, DEFAULT_MOMENT_GRID};
use dynreserve::history::ExplanatoryKind;
use dynreserve::io;
use dynreserve::methods::{
    extreme_count, method_all_scenarios, method_bounds, method_deterministic, method_extreme_scenarios,
    method_hybrid, method_prediction_interval, select_extremes, MethodId, MethodResult,
};
use dynreserve::pipeline::{run_pipeline, sensitivity, Inputs, Models};
use dynreserve::reserve::ReserveModel;
use dynreserve::risk::{risk, size_profile, DeviationDistribution, GroupKey};
use dynreserve::scenario::generate_scenarios_with;
use dynreserve::{Error, Result};

/// Dynamic operating-reserve requirements from probabilistic forecasts.
///
/// Set DYNRESERVE_LOG (error, warn, info, debug) to change the log level.
#[derive(Parser)]
#[command(name = "dynreserve", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate correlated scenarios from a probabilistic forecast.
    Scenarios(ScenarioArgs),
    /// Reserve requirements for one variable.
    #[command(subcommand)]
    Reserve(ReserveCommand),
    /// Risk of a reserve profile, or reserves sized to a risk limit.
    #[command(subcommand)]
    Risk(RiskCommand),
    /// Compare forecast and scenario moments.
    #[command(subcommand)]
    Validate(ValidateCommand),
    /// Reserves over the CI and PI grids of a config.
    Sensitivity {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "sensitivity.csv")]
        out: PathBuf,
    },
    /// Full pipeline from a JSON config.
    Run(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Load,
    Wind,
    Solar,
    NetDemand,
}

impl From<Kind> for VariableKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Load => VariableKind::Load,
            Kind::Wind => VariableKind::Wind,
            Kind::Solar => VariableKind::Solar,
            Kind::NetDemand => VariableKind::NetDemand,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Explanatory {
    Magnitude,
    Rate,
    Hour,
}

impl From<Explanatory> for ExplanatoryKind {
    fn from(e: Explanatory) -> Self {
        match e {
            Explanatory::Magnitude => ExplanatoryKind::Magnitude,
            Explanatory::Rate => ExplanatoryKind::RateOfChange,
            Explanatory::Hour => ExplanatoryKind::HourOfDay,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Repair {
    Shrink,
    Clip,
}

#[derive(Args)]
struct ForecastArgs {
    /// Forecast CSV: timestamp,central,p05,...
    #[arg(long)]
    forecast: PathBuf,
    #[arg(long, value_enum, default_value = "solar")]
    kind: Kind,
    /// Expected probability columns, comma separated (e.g. 0.05,0.5,0.95).
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<f64>>,
}

impl ForecastArgs {
    fn load(&self) -> Result<dynreserve::ProbabilisticForecast> {
        io::load_forecast(&self.forecast, self.kind.into(), self.levels.as_deref())
    }
}

#[derive(Args)]
struct CopulaArgs {
    #[arg(long, default_value_t = 1000)]
    count: usize,
    #[arg(long, default_value_t = 2020)]
    seed: u64,
    #[arg(long, default_value_t = 0.92)]
    theta: f64,
    #[arg(long, default_value_t = 0.42)]
    omega: f64,
    #[arg(long, value_enum, default_value = "shrink")]
    repair: Repair,
}

impl CopulaArgs {
    fn params(&self) -> Result<CopulaParams> {
        CopulaParams::new(self.theta, self.omega)
    }

    fn repair(&self) -> CovarianceRepair {
        match self.repair {
            Repair::Shrink => CovarianceRepair::ShrinkToAr1,
            Repair::Clip => CovarianceRepair::EigenClip,
        }
    }
}

#[derive(Args)]
struct ScenarioArgs {
    #[command(flatten)]
    forecast: ForecastArgs,
    #[command(flatten)]
    copula: CopulaArgs,
    #[arg(long, default_value = "scenarios.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct ModelArgs {
    /// History CSV: timestamp,forecast_mw,actual_mw
    #[arg(long)]
    history: PathBuf,
    #[arg(long, value_enum, default_value = "magnitude")]
    explanatory: Explanatory,
    #[arg(long, default_value_t = 20)]
    bins: usize,
    #[arg(long, default_value_t = 0.9)]
    ci: f64,
}

impl ModelArgs {
    fn build(&self, kind: VariableKind) -> Result<ReserveModel> {
        let h = io::load_history(&self.history, kind)?;
        ReserveModel::build(&h, self.explanatory.into(), self.bins)
    }
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum MethodName {
    All,
    Extreme,
    Bounds,
    Pi,
    Hybrid,
}

#[derive(Subcommand)]
enum ReserveCommand {
    /// Recursive requirements at the central forecast.
    Dynamic {
        #[command(flatten)]
        forecast: ForecastArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value = "reserves_deterministic.csv")]
        out: PathBuf,
    },
    /// Anticipative or hybrid requirements.
    Method {
        #[arg(long, value_enum)]
        name: MethodName,
        /// Forecast CSV (all methods except hybrid).
        #[arg(long)]
        forecast: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "solar")]
        kind: Kind,
        /// History CSV for the reserve model (all, extreme).
        #[arg(long)]
        history: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "magnitude")]
        explanatory: Explanatory,
        #[arg(long, default_value_t = 20)]
        bins: usize,
        #[arg(long, default_value_t = 0.9)]
        ci: f64,
        #[arg(long, default_value_t = 0.9)]
        pi: f64,
        #[arg(long = "extreme-frac", default_value_t = 0.1)]
        extreme_frac: f64,
        /// Use the interval quantiles themselves rather than distances from
        /// the central forecast.
        #[arg(long)]
        literal_pi: bool,
        /// Scenario CSV written by `scenarios`; generated when absent.
        #[arg(long)]
        scenarios: Option<PathBuf>,
        #[command(flatten)]
        copula: CopulaArgs,
        /// Reserve CSVs combined by `hybrid`.
        #[arg(long, num_args = 1..)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum RiskCommand {
    /// Shortfall/surplus risk of a reserve profile.
    Assess {
        #[arg(long)]
        reserves: PathBuf,
        /// Net-demand history CSV.
        #[arg(long)]
        history: PathBuf,
        #[arg(long)]
        whole: bool,
        #[arg(long, default_value = "risk.csv")]
        out: PathBuf,
    },
    /// Smallest reserves keeping risk at or below a limit.
    Size {
        #[arg(long, default_value_t = 100.0)]
        limit: f64,
        #[arg(long)]
        history: PathBuf,
        /// Any forecast CSV on the target time grid.
        #[arg(long)]
        forecast: PathBuf,
        #[arg(long)]
        whole: bool,
        #[arg(long, default_value = "reserves_risk.csv")]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum ValidateCommand {
    /// Forecast vs scenario moments with %NRMSE.
    Moments {
        #[command(flatten)]
        forecast: ForecastArgs,
        #[command(flatten)]
        copula: CopulaArgs,
        #[arg(long, default_value_t = DEFAULT_MOMENT_GRID)]
        n_grid: usize,
        #[arg(long, default_value = "moments_validation.csv")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    scenarios: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Comma-separated method list, e.g. deterministic,pi,hybrid.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    #[arg(long)]
    ci: Option<f64>,
    #[arg(long)]
    pi: Option<f64>,
}

fn grouping(whole: bool) -> GroupKey {
    if whole {
        GroupKey::Whole
    } else {
        GroupKey::HourOfDay
    }
}

fn required<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| Error::InvalidInput(format!("--{flag} is required for this method")))
}

fn reserve_method(cmd: ReserveCommand) -> Result<()> {
    let ReserveCommand::Method {
        name,
        forecast,
        kind,
        history,
        explanatory,
        bins,
        ci,
        pi,
        extreme_frac,
        literal_pi,
        scenarios,
        copula,
        inputs,
        out,
    } = cmd
    else {
        unreachable!()
    };
    if name == MethodName::Hybrid {
        if inputs.is_empty() {
            return Err(Error::InvalidInput("--inputs is required for hybrid".into()));
        }
        let mut timestamps = None;
        let mut parts = Vec::new();
        for p in &inputs {
            let (ts, profile) = io::load_reserves(p)?;
            if timestamps.get_or_insert_with(|| ts.clone()) != &ts {
                return Err(Error::InvalidInput(format!("{} is on a different time grid", p.display())));
            }
            parts.push(MethodResult {
                method: MethodId::Hybrid,
                profile,
                provenance: p.display().to_string(),
            });
        }
        let result = method_hybrid(&parts)?;
        let out = out.unwrap_or_else(|| PathBuf::from("reserves_hybrid.csv"));
        return io::write_reserves(&out, &timestamps.unwrap_or_default(), &result.profile);
    }
    let kind: VariableKind = kind.into();
    let f = io::load_forecast(required(&forecast, "forecast")?, kind, None)?;
    let result = if name == MethodName::Pi {
        method_prediction_interval(&f, pi, literal_pi)?
    } else {
        let set = match &scenarios {
            Some(p) => io::load_scenarios(p)?,
            None => generate_scenarios_with(&f, copula.count, &copula.params()?, copula.seed, copula.repair())?,
        };
        let d = extreme_count(extreme_frac, set.len())?;
        match name {
            MethodName::Bounds => {
                let ex = select_extremes(&set, d, ExplanatoryKind::Magnitude)?;
                method_bounds(&set, &ex, &f)?
            }
            _ => {
                let h = io::load_history(required(&history, "history")?, kind)?;
                let model = ReserveModel::build(&h, explanatory.into(), bins)?;
                if name == MethodName::All {
                    method_all_scenarios(&set, &model, ci)?
                } else {
                    let ex = select_extremes(&set, d, ExplanatoryKind::Magnitude)?;
                    method_extreme_scenarios(&set, &ex, &model, ci)?
                }
            }
        }
    };
    let out = out.unwrap_or_else(|| PathBuf::from(format!("reserves_{}.csv", result.method)));
    io::write_reserves(&out, &f.timestamps(), &result.profile)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Scenarios(a) => {
            let f = a.forecast.load()?;
            let set = generate_scenarios_with(&f, a.copula.count, &a.copula.params()?, a.copula.seed, a.copula.repair())?;
            let mut params = std::collections::BTreeMap::new();
            params.insert("theta".into(), serde_json::json!(a.copula.theta));
            params.insert("omega".into(), serde_json::json!(a.copula.omega));
            params.insert("scenarios".into(), serde_json::json!(a.copula.count));
            io::write_scenarios(&a.out, &set, params)
        }
        Command::Reserve(ReserveCommand::Dynamic { forecast, model, out }) => {
            let f = forecast.load()?;
            let m = model.build(f.kind())?;
            let r = method_deterministic(&f, &m, model.ci)?;
            io::write_reserves(&out, &f.timestamps(), &r.profile)
        }
        Command::Reserve(cmd) => reserve_method(cmd),
        Command::Risk(RiskCommand::Assess {
            reserves,
            history,
            whole,
            out,
        }) => {
            let (timestamps, profile) = io::load_reserves(&reserves)?;
            let h = io::load_history(&history, VariableKind::NetDemand)?;
            let dist = DeviationDistribution::build(&h, grouping(whole))?;
            io::write_risk(&out, &risk(&dist, &profile, &timestamps)?)
        }
        Command::Risk(RiskCommand::Size {
            limit,
            history,
            forecast,
            whole,
            out,
        }) => {
            let f = io::load_forecast(&forecast, VariableKind::NetDemand, None)?;
            let h = io::load_history(&history, VariableKind::NetDemand)?;
            let dist = DeviationDistribution::build(&h, grouping(whole))?;
            let timestamps = f.timestamps();
            io::write_reserves(&out, &timestamps, &size_profile(&dist, limit, &timestamps)?)
        }
        Command::Validate(ValidateCommand::Moments {
            forecast,
            copula,
            n_grid,
            out,
        }) => {
            let f = forecast.load()?;
            let set = generate_scenarios_with(&f, copula.count, &copula.params()?, copula.seed, copula.repair())?;
            let cmp = compare_moments(&f, &set, n_grid)?;
            for (name, v) in dynreserve::forecast::MOMENT_NAMES.iter().zip(cmp.nrmse) {
                match v {
                    Some(v) => println!("{name}: {v:.4}%"),
                    None => println!("{name}: undefined"),
                }
            }
            io::write_moments(&out, &cmp)
        }
        Command::Sensitivity { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let inputs = Inputs::load(&cfg)?;
            let models = Models::build(&inputs, &cfg)?;
            io::write_sensitivity(&out, &sensitivity(&inputs, &models, &cfg)?)
        }
        Command::Run(a) => {
            let mut cfg = RunConfig::load(&a.config)?;
            if let Some(v) = a.seed {
                cfg.seed = v;
            }
            if let Some(v) = a.scenarios {
                cfg.scenarios = v;
            }
            if let Some(v) = a.threads {
                cfg.threads = Some(v);
            }
            if let Some(v) = a.output_dir {
                cfg.output_dir = v;
            }
            if let Some(v) = a.ci {
                cfg.ci = v;
            }
            if let Some(v) = a.pi {
                cfg.pi = v;
            }
            if let Some(v) = a.methods {
                cfg.methods = v.iter().map(|m| m.parse()).collect::<Result<_>>()?;
            }
            let report = run_pipeline(&cfg)?;
            for name in report.manifest.outputs.keys() {
                println!("{}", cfg.output_dir.join(name).display());
            }
            println!("{}", cfg.output_dir.join("manifest.json").display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DYNRESERVE_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
