//! Argument parsing and the subcommands.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use rust_decimal::Decimal;
use thiserror::Error;
use trendgate_core::engine::{run_backtest, CostModel};
use trendgate_core::metrics::{MetricsReport, Sharpe};
use trendgate_core::optimizer::{objective, optimize_with, Evaluator};
use trendgate_core::series::split_samples;
use trendgate_core::synth::{self, SynthSpec, DEFAULT_START_PRICE_BP};
use trendgate_core::validation::{
    aggregate_sharpe_spread, default_suite, pathological, run_stress_entry, walk_forward,
    PhaseReport, StressOutcome,
};
use trendgate_core::{Series, StrategyParams};

use crate::config::{Config, ConfigError, Format};
use crate::csv_io::{self, format_timestamp, CsvError};
use crate::report::{
    self, BacktestBody, Header, OptimizeBody, Report, StressBody, WalkForwardBody,
};
use crate::svg;

pub const EXIT_RUNTIME: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_REJECTED: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("data: {0}")]
    Data(#[from] CsvError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Runtime(#[from] trendgate_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Runtime(_) => EXIT_RUNTIME,
            _ => EXIT_USAGE,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_owned(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> CliError + '_ {
    move |e| CliError::Io {
        path: path.to_owned(),
        source: e.into(),
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "trendgate",
    version,
    about = "Backtest, stress and walk-forward validation of a trend-following system"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic bar series as CSV.
    Synth(SynthArgs),
    /// Run the configured strategy once over the data.
    Backtest(RunArgs),
    /// Search the parameter space for the best in-sample Sharpe ratio.
    Optimize(RunArgs),
    /// Run the configured strategy under the stress suite.
    Stress(RunArgs),
    /// Validate frozen parameters over in, out and live samples.
    Walkforward(RunArgs),
    /// Summarize result files and optionally render SVG plots.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum KindArg {
    RandomWalk,
    Fbm,
    RegimeTrend,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub kind: KindArg,
    /// Number of bars.
    #[arg(long)]
    pub n: usize,
    /// Increment standard deviation in bp.
    #[arg(long)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Hurst exponent, fbm only.
    #[arg(long, default_value_t = 0.5)]
    pub hurst: f64,
    /// Per-bar drift in bp, regime_trend only.
    #[arg(long, default_value_t = 0.0)]
    pub drift: f64,
    /// Mean regime length in bars, regime_trend only.
    #[arg(long, default_value_t = 500.0)]
    pub regime_len: f64,
    /// First close in bp.
    #[arg(long, default_value_t = DEFAULT_START_PRICE_BP)]
    pub start_price: i64,
    /// Price of one bp in the written CSV.
    #[arg(long, default_value = "0.0001")]
    pub tick_size: String,
    #[arg(long, default_value = "bars.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `data.csv`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Overrides `output.dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides `search.seed` (optimize) or `stress.base_seed` (stress).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `search.budget`.
    #[arg(long)]
    pub budget: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory holding result files.
    #[arg(long)]
    pub dir: PathBuf,
    /// Render SVG plots.
    #[arg(long)]
    pub plots: bool,
    /// Where plots go; defaults to `--dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(command: Command) -> Result<u8> {
    match command {
        Command::Synth(a) => cmd_synth(&a).map(|_| 0),
        Command::Backtest(a) => cmd_backtest(&a).map(|_| 0),
        Command::Optimize(a) => cmd_optimize(&a).map(|_| 0),
        Command::Stress(a) => cmd_stress(&a).map(|_| 0),
        Command::Walkforward(a) => cmd_walkforward(&a),
        Command::Report(a) => cmd_report(&a).map(|_| 0),
    }
}

fn flag_error(flag: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("invalid value for --{flag}: {msg}"))
}

pub fn cmd_synth(a: &SynthArgs) -> Result<PathBuf> {
    if a.n == 0 {
        return Err(flag_error("n", "must be at least 1"));
    }
    if !(a.sigma > 0.0 && a.sigma.is_finite()) {
        return Err(flag_error("sigma", "must be positive"));
    }
    if a.start_price <= 0 {
        return Err(flag_error("start-price", "must be positive"));
    }
    let tick = Decimal::from_str(&a.tick_size)
        .ok()
        .filter(|t| *t > Decimal::ZERO)
        .ok_or_else(|| flag_error("tick-size", "must be a positive decimal"))?;
    let mut spec = match a.kind {
        KindArg::RandomWalk => SynthSpec::random_walk(a.n, a.sigma, a.seed),
        KindArg::Fbm => {
            if !(a.hurst > 0.0 && a.hurst < 1.0) {
                return Err(flag_error(
                    "hurst",
                    format!("{} is outside (0, 1)", a.hurst),
                ));
            }
            SynthSpec::fbm(a.n, a.sigma, a.hurst, a.seed)
        }
        KindArg::RegimeTrend => {
            if !a.drift.is_finite() {
                return Err(flag_error("drift", "must be finite"));
            }
            if !(a.regime_len >= 1.0 && a.regime_len.is_finite()) {
                return Err(flag_error("regime-len", "must be at least 1"));
            }
            SynthSpec::regime_trend(a.n, a.sigma, a.drift, a.regime_len, a.seed)
        }
    };
    spec.start_price_bp = a.start_price;
    let series = synth::generate(&spec)?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let file = std::fs::File::create(&a.out).map_err(io_err(&a.out))?;
    csv_io::write_csv(&series, tick, std::io::BufWriter::new(file)).map_err(io_err(&a.out))?;
    println!("{}", a.out.display());
    Ok(a.out.clone())
}

/// A loaded run: effective config plus the parsed data.
struct Run {
    cfg: Config,
    series: Series,
    data_hash: String,
    out: PathBuf,
}

impl Run {
    fn load(a: &RunArgs) -> Result<Self> {
        let mut cfg = Config::load(&a.config)?;
        if let Some(d) = &a.data {
            cfg.data.csv = d.clone();
        }
        if let Some(o) = &a.out {
            cfg.output.dir = o.clone();
        }
        if let Some(b) = a.budget {
            cfg.search.budget = b;
        }
        cfg.validate()?;
        let bytes = std::fs::read(&cfg.data.csv).map_err(io_err(&cfg.data.csv))?;
        let series = csv_io::parse_csv(bytes.as_slice(), cfg.tick()?, cfg.data.slippage_bp)?;
        let out = cfg.output.dir.clone();
        std::fs::create_dir_all(&out).map_err(io_err(&out))?;
        Ok(Self {
            cfg,
            series,
            data_hash: report::sha256_hex(&bytes),
            out,
        })
    }

    fn header(&self, command: &str, seeds: BTreeMap<String, u64>) -> Header {
        Header::new(command, &self.cfg.hash(), &self.data_hash, seeds)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn wants(&self, f: Format) -> bool {
        self.cfg.output.wants(f)
    }

    fn json<T: serde::Serialize>(&self, name: &str, header: Header, body: T) -> Result<()> {
        if self.wants(Format::Json) {
            let path = self.path(name);
            report::write_json(&path, &Report { header, body }).map_err(io_err(&path))?;
        }
        Ok(())
    }

    /// The in-sample part when a split is configured, else everything.
    fn in_sample(&self) -> Result<Series> {
        match &self.cfg.split {
            Some(_) => {
                let (b1, b2) = self.cfg.boundaries()?;
                Ok(split_samples(&self.series, b1, b2)?.in_sample)
            }
            None => Ok(self.series.clone()),
        }
    }
}

pub fn cmd_backtest(a: &RunArgs) -> Result<()> {
    let run = Run::load(a)?;
    let params = run.cfg.strategy()?;
    let cost = run.cfg.cost_model();
    let result = run_backtest(&run.series, &params, &cost, None)?;
    let metrics = MetricsReport::from_result(&result)?;
    println!(
        "trades {}  net {} bp  sharpe {}",
        metrics.n_trades,
        metrics.total_net_bp,
        fmt_sharpe(metrics.sharpe)
    );
    let header = run.header("backtest", BTreeMap::new());
    run.json("backtest.json", header, BacktestBody::new(&result, metrics))?;
    if run.wants(Format::Csv) {
        let p = run.path("ledger.csv");
        report::write_ledger_csv(&p, &result.trades).map_err(csv_err(&p))?;
        let p = run.path("equity.csv");
        report::write_equity_csv(&p, &run.series, &result).map_err(csv_err(&p))?;
    }
    Ok(())
}

/// Scores random-search batches on the rayon pool; order follows the input.
struct Parallel;

impl Evaluator for Parallel {
    fn evaluate(
        &self,
        series: &Series,
        cost: &CostModel,
        points: &[StrategyParams],
    ) -> Vec<trendgate_core::Result<Sharpe>> {
        points
            .par_iter()
            .map(|p| objective(series, p, cost))
            .collect()
    }
}

pub fn cmd_optimize(a: &RunArgs) -> Result<()> {
    let mut run = Run::load(a)?;
    if let Some(s) = a.seed {
        run.cfg.search.seed = s;
    }
    let in_sample = run.in_sample()?;
    let search = &run.cfg.search;
    let result = optimize_with(
        &in_sample,
        &search.space,
        search.budget,
        search.seed,
        &run.cfg.cost_model(),
        &Parallel,
    )?;
    println!(
        "best sharpe {} after {} evaluations: {}",
        fmt_sharpe(result.best_sharpe),
        result.evaluations,
        fmt_params(&result.best_params)
    );
    let header = run.header("optimize", BTreeMap::from([("search".into(), search.seed)]));
    if run.wants(Format::Csv) {
        let p = run.path("optimize_trace.csv");
        report::write_trace_csv(&p, &result.trace).map_err(csv_err(&p))?;
    }
    run.json(
        "optimize.json",
        header,
        OptimizeBody {
            budget: search.budget,
            result,
        },
    )
}

/// Runs suite entries on the rayon pool and merges them by index.
pub fn stress_parallel(
    series: &Series,
    params: &StrategyParams,
    cost: &CostModel,
    suite: &[trendgate_core::validation::DistortionSet],
    base_seed: u64,
) -> trendgate_core::Result<Vec<StressOutcome>> {
    if suite.is_empty() {
        return Err(trendgate_core::Error::EmptySuite);
    }
    suite
        .par_iter()
        .enumerate()
        .map(|(i, entry)| run_stress_entry(series, params, cost, entry, i, base_seed))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

pub fn cmd_stress(a: &RunArgs) -> Result<()> {
    let mut run = Run::load(a)?;
    if let Some(s) = a.seed {
        run.cfg.stress.base_seed = s;
    }
    let params = run.cfg.strategy()?;
    let cost = run.cfg.cost_model();
    let in_sample = run.in_sample()?;
    let stress = &run.cfg.stress;
    let suite = stress
        .suite
        .clone()
        .unwrap_or_else(|| default_suite(in_sample.len(), cost.slippage_bp));
    let outcomes = stress_parallel(&in_sample, &params, &cost, &suite, stress.base_seed)?;
    let spread = match aggregate_sharpe_spread(&outcomes) {
        Ok(s) => Some(s),
        Err(trendgate_core::Error::TooFewDefined(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let flagged = pathological(&outcomes, stress.min_sharpe);
    match &spread {
        Some(s) => println!(
            "{} entries  sharpe mean {:.3} rms {:.3}  pathological {}",
            outcomes.len(),
            s.mean,
            s.rms,
            flagged.len()
        ),
        None => println!(
            "{} entries  too few defined Sharpe ratios for a spread  pathological {}",
            outcomes.len(),
            flagged.len()
        ),
    }
    if run.wants(Format::Csv) {
        let p = run.path("stress.csv");
        report::write_stress_csv(&p, &outcomes).map_err(csv_err(&p))?;
    }
    let header = run.header(
        "stress",
        BTreeMap::from([("stress".into(), stress.base_seed)]),
    );
    run.json(
        "stress.json",
        header,
        StressBody {
            params,
            base_seed: stress.base_seed,
            outcomes,
            spread,
            min_sharpe: stress.min_sharpe,
            pathological: flagged,
        },
    )
}

pub fn cmd_walkforward(a: &RunArgs) -> Result<u8> {
    let run = Run::load(a)?;
    let params = run.cfg.strategy()?;
    let (b1, b2) = run.cfg.boundaries()?;
    let report = walk_forward(
        &run.series,
        (b1, b2),
        &params,
        &run.cfg.cost_model(),
        &run.cfg.gates,
    )?;
    let verdict = report.verdict;
    println!(
        "verdict {}",
        serde_json::to_value(verdict)
            .expect("verdict serializes")
            .as_str()
            .unwrap_or("?")
    );
    if run.wants(Format::Csv) {
        let p = run.path("walkforward.csv");
        write_phases_csv(&p, &report).map_err(csv_err(&p))?;
    }
    let mut seeds = BTreeMap::new();
    if let Some(g) = &run.cfg.gates.stress {
        seeds.insert("stress".into(), g.base_seed);
    }
    let header = run.header("walkforward", seeds);
    run.json(
        "walkforward.json",
        header,
        WalkForwardBody {
            params,
            boundaries: [format_timestamp(b1), format_timestamp(b2)],
            report,
        },
    )?;
    Ok(if verdict.is_accepted() {
        0
    } else {
        EXIT_REJECTED
    })
}

fn write_phases_csv(
    path: &Path,
    r: &trendgate_core::validation::WalkForwardReport,
) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "phase",
        "sharpe",
        "n_trades",
        "total_net_bp",
        "max_drawdown_bp",
        "passed",
    ])?;
    let phases: [(&str, Option<&PhaseReport>); 3] = [
        ("in_sample", Some(&r.in_sample)),
        ("out_sample", r.out_sample.as_ref()),
        ("live_sample", r.live_sample.as_ref()),
    ];
    for (name, phase) in phases {
        if let Some(p) = phase {
            w.write_record([
                name.to_string(),
                fmt_sharpe(p.metrics.sharpe),
                p.metrics.n_trades.to_string(),
                p.metrics.total_net_bp.to_string(),
                p.metrics.max_drawdown_bp.to_string(),
                p.passed.to_string(),
            ])?;
        }
    }
    Ok(w.flush()?)
}

fn fmt_sharpe(s: Sharpe) -> String {
    match s {
        Sharpe::Value(v) => format!("{v:.4}"),
        Sharpe::Undefined => "undefined".into(),
    }
}

fn fmt_params(p: &StrategyParams) -> String {
    format!(
        "t1={} t2={} vol_window={} vol=[{},{}] stop={} take={} max_hold={}",
        p.t1,
        p.t2,
        p.vol_window,
        p.vol_lo,
        p.vol_hi,
        p.stop_loss_bp,
        p.take_profit_bp,
        p.max_hold_bars
    )
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::Io {
        path: path.to_owned(),
        source: e.into(),
    })
}

fn read_equity(path: &Path) -> Result<(Vec<i64>, Vec<i64>, Vec<i64>)> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let (mut ts, mut close, mut eq) = (Vec::new(), Vec::new(), Vec::new());
    for rec in reader.records() {
        let rec = rec.map_err(csv_err(path))?;
        let bad = || CliError::Usage(format!("{}: malformed equity row", path.display()));
        ts.push(csv_io::parse_timestamp(rec.get(0).ok_or_else(bad)?).ok_or_else(bad)?);
        close.push(rec.get(1).and_then(|v| v.parse().ok()).ok_or_else(bad)?);
        eq.push(rec.get(2).and_then(|v| v.parse().ok()).ok_or_else(bad)?);
    }
    Ok((ts, close, eq))
}

fn write_svg(dir: &Path, name: &str, body: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    let p = dir.join(name);
    std::fs::write(&p, body).map_err(io_err(&p))?;
    written.push(p);
    Ok(())
}

/// Sharpe-spread bins are this wide.
pub const SPREAD_BIN: f64 = 0.25;

pub fn cmd_report(a: &ReportArgs) -> Result<Vec<PathBuf>> {
    let backtest_path = a.dir.join("backtest.json");
    let stress_path = a.dir.join("stress.json");
    let has_backtest = backtest_path.is_file();
    let has_stress = stress_path.is_file();
    if !has_backtest && !has_stress {
        return Err(CliError::Usage(format!(
            "no result files (backtest.json or stress.json) in {}",
            a.dir.display()
        )));
    }
    let out = a.out.clone().unwrap_or_else(|| a.dir.clone());
    if a.plots {
        std::fs::create_dir_all(&out).map_err(io_err(&out))?;
    }
    let mut written = Vec::new();

    if has_backtest {
        let r: Report<BacktestBody> = read_json(&backtest_path)?;
        let m = &r.body.metrics;
        println!(
            "backtest {}: trades {}  net {} bp  sharpe {}  max drawdown {} bp",
            r.header.run_id,
            m.n_trades,
            m.total_net_bp,
            fmt_sharpe(m.sharpe),
            m.max_drawdown_bp
        );
        if a.plots {
            let equity_path = a.dir.join("equity.csv");
            let (ts, close, eq) = read_equity(&equity_path)?;
            let title = format!(
                "Close and cumulative equity ({})",
                fmt_params(&r.body.params)
            );
            write_svg(
                &out,
                "equity_overlay.svg",
                &svg::equity_overlay(&title, &ts, &close, &eq),
                &mut written,
            )?;
            if m.n_trades == 0 {
                println!("notice: empty ledger, trade histograms omitted");
            } else {
                let returns = svg::histogram(
                    "Trade returns",
                    "net return (bp)",
                    &svg::histogram_bins(&m.return_histogram),
                );
                write_svg(&out, "trade_returns.svg", &returns, &mut written)?;
                let durations = svg::histogram(
                    "Trade durations",
                    "duration (bars)",
                    &svg::histogram_bins(&m.duration_histogram),
                );
                write_svg(&out, "trade_durations.svg", &durations, &mut written)?;
            }
        }
    }

    if has_stress {
        let r: Report<StressBody> = read_json(&stress_path)?;
        match &r.body.spread {
            Some(s) => println!(
                "stress {}: {} entries  sharpe mean {:.3} rms {:.3}",
                r.header.run_id,
                r.body.outcomes.len(),
                s.mean,
                s.rms
            ),
            None => println!(
                "stress {}: {} entries, no spread",
                r.header.run_id,
                r.body.outcomes.len()
            ),
        }
        if a.plots {
            let values: Vec<f64> = r
                .body
                .outcomes
                .iter()
                .filter_map(|o| o.sharpe.value())
                .collect();
            if values.is_empty() {
                println!("notice: no defined Sharpe ratios, spread histogram omitted");
            } else {
                let h = svg::histogram(
                    "Sharpe ratio under stress",
                    "Sharpe ratio",
                    &svg::float_bins(&values, SPREAD_BIN),
                );
                write_svg(&out, "sharpe_spread.svg", &h, &mut written)?;
            }
        }
    }

    for p in &written {
        println!("{}", p.display());
    }
    Ok(written)
}
