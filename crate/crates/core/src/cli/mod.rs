//! Batch front-end: `run <job.json>` and `check-division <div.json> <gauge.json>`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::brownian::{expected_payoff_with, mc_oracle, BrownianError, OracleResult};
use crate::division::{validate_with, Division, TagPolicy, ValidateOptions, Violation};
use crate::domain::DomainSpec;
use crate::gauge::Gauge;
use crate::integrate::{integrate, Construction, GaugeSchedule, IntegralResult, IntegrandSpec, IntegrateError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_VIOLATIONS: i32 = 3;

const DEFAULT_MAX_DEPTH: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// One integration job.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    /// Optional when the integrand fixes its own domain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSpec>,
    /// Starting gauge; the integrand's default gauge when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gauge: Option<Gauge>,
    pub integrand: IntegrandSpec,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_depth: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub construction: Construction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<TagPolicy>,
    /// Per-round gauge factor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shrink: Option<f64>,
    /// Monte Carlo paths for the oracle comparison of `brownian_payoff` jobs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_paths: Option<usize>,
    #[serde(default, skip_serializing)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub round: usize,
    pub cells: usize,
    pub estimate: f64,
    pub delta_prev: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleComparison {
    pub oracle: OracleResult,
    /// `estimate - oracle mean`.
    pub difference: f64,
    /// Difference in oracle standard errors.
    pub z: f64,
}

/// Wall-clock data; the only part of a report that varies between identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
    pub finished_unix_ms: u128,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub job: JobConfig,
    pub result: IntegralResult,
    pub table: Vec<TableRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleComparison>,
    pub timing: Timing,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckReport {
    pub clean: bool,
    pub cells: usize,
    pub samples_checked: usize,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid job: {0}")]
    Invalid(String),
    #[error("integrate: {0}")]
    Integrate(#[from] IntegrateError),
    #[error("brownian: {0}")]
    Brownian(#[from] BrownianError),
}

#[derive(Debug, Parser)]
#[command(name = "hk-gauge", version, about = "Gauge integration jobs and division checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Overrides the job tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub max_depth: Option<usize>,
    /// Oracle seed for `run`, sample seed for `check-division`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Runs an integration job.
    Run { job: PathBuf },
    /// Validates a stored division against a gauge.
    CheckDivision { division: PathBuf, gauge: PathBuf },
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.to_owned(),
        message: e.to_string(),
    })
}

/// Reads a job file and applies command-line overrides.
pub fn load_job(path: &Path, cli: &Cli) -> Result<JobConfig, CliError> {
    let mut job: JobConfig = read_json(path)?;
    if let Some(t) = cli.tol {
        job.tolerance = t;
    }
    if let Some(d) = cli.max_depth {
        job.max_depth = Some(d);
    }
    if let Some(s) = cli.seed {
        job.seed = s;
    }
    if let Some(o) = &cli.out {
        job.out = Some(o.clone());
    }
    if let Some(f) = cli.format {
        job.format = f;
    }
    Ok(job)
}

impl JobConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(CliError::Invalid(format!(
                "field `tolerance` must be positive and finite, got {}",
                self.tolerance
            )));
        }
        if let Some(s) = self.shrink {
            if !(s > 0.0 && s < 1.0) {
                return Err(CliError::Invalid(format!("field `shrink` must lie in ]0,1[, got {s}")));
            }
        }
        if self.oracle_paths.is_some() && !matches!(self.integrand, IntegrandSpec::BrownianPayoff { .. }) {
            return Err(CliError::Invalid(
                "field `oracle_paths` applies only to `brownian_payoff` integrands".into(),
            ));
        }
        Ok(())
    }

    fn domain(&self) -> Result<DomainSpec, CliError> {
        match (&self.domain, self.integrand.natural_domain()) {
            (Some(d), Some(n)) if *d != n => Err(CliError::Invalid(
                "field `domain` does not match the integrand's own domain".into(),
            )),
            (Some(d), _) => Ok(d.clone()),
            (None, Some(n)) => Ok(n),
            (None, None) => Err(CliError::Invalid("field `domain` is required for this integrand".into())),
        }
    }
}

/// Executes a validated job. The report's `timing` is filled in by the caller's clock.
pub fn execute(job: &JobConfig) -> Result<(IntegralResult, Option<OracleComparison>), CliError> {
    job.validate()?;
    let domain = job.domain()?;
    if let IntegrandSpec::BrownianPayoff { spec, payoff, options } = &job.integrand {
        let mut opts = options.clone();
        if let Some(d) = job.max_depth {
            opts.max_rounds = d;
        }
        if let Some(p) = job.policy {
            opts.policy = p;
        }
        let result = expected_payoff_with(spec, payoff, job.tolerance, &opts)?;
        let oracle = match job.oracle_paths {
            Some(n) => {
                let o = mc_oracle(spec, payoff, n, job.seed)?;
                let difference = result.estimate - o.mean;
                let z = if o.stderr > 0.0 {
                    difference / o.stderr
                } else if difference == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                };
                Some(OracleComparison {
                    oracle: o,
                    difference,
                    z,
                })
            }
            None => None,
        };
        return Ok((result, oracle));
    }
    let gauge = match &job.gauge {
        Some(g) => g.clone(),
        None => job.integrand.default_gauge(&domain, job.tolerance)?,
    };
    let mut sched = GaugeSchedule::new(gauge).with_construction(job.construction.clone());
    if let Some(p) = job.policy {
        sched = sched.with_policy(p);
    }
    if let Some(s) = job.shrink {
        sched.shrink = s;
    }
    let result = integrate(
        &job.integrand,
        &domain,
        &sched,
        job.tolerance,
        job.max_depth.unwrap_or(DEFAULT_MAX_DEPTH),
    )?;
    Ok((result, None))
}

/// Runs a job end to end and returns the report.
pub fn run_job(job: JobConfig) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let (result, oracle) = execute(&job)?;
    let table = result
        .rounds
        .iter()
        .map(|r| TableRow {
            round: r.round,
            cells: r.cells,
            estimate: r.estimate,
            delta_prev: r.delta_prev,
        })
        .collect();
    let timing = Timing {
        wall_seconds: start.elapsed().as_secs_f64(),
        finished_unix_ms: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_millis()),
    };
    Ok(RunReport {
        job,
        result,
        table,
        oracle,
        timing,
    })
}

/// CSV convergence table.
pub fn table_csv(rows: &[TableRow]) -> String {
    let mut s = String::from("round,cells,estimate,delta_prev\n");
    for r in rows {
        let d = r.delta_prev.map(|d| format!("{d:e}")).unwrap_or_default();
        let _ = writeln!(s, "{},{},{:e},{}", r.round, r.cells, r.estimate, d);
    }
    s
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Io {
            path: p.to_owned(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_report(report: &RunReport) -> Result<(), CliError> {
    let out = report.job.out.as_deref();
    match report.job.format {
        Format::Json => emit(out, &to_json(report)),
        Format::Csv => {
            emit(out, &table_csv(&report.table))?;
            // the JSON report goes next to a CSV file
            if let Some(p) = out {
                emit(Some(&p.with_extension("json")), &to_json(report))?;
            }
            Ok(())
        }
    }
}

fn cmd_run(cli: &Cli, path: &Path) -> Result<i32, CliError> {
    let job = load_job(path, cli)?;
    let report = run_job(job)?;
    write_report(&report)?;
    if report.result.converged {
        Ok(EXIT_OK)
    } else {
        if let Some(why) = &report.result.stop_reason {
            eprintln!("not converged: {why}");
        }
        Ok(EXIT_NOT_CONVERGED)
    }
}

/// Validates a division against a gauge.
pub fn check_division(division: &Division, gauge: &Gauge, seed: Option<u64>) -> CheckReport {
    let mut opts = ValidateOptions::default();
    if let Some(s) = seed {
        opts.seed = s;
    }
    match validate_with(division, gauge, &opts) {
        Ok(cert) => CheckReport {
            clean: true,
            cells: division.len(),
            samples_checked: cert.samples_checked,
            violations: Vec::new(),
        },
        Err(rep) => CheckReport {
            clean: false,
            cells: division.len(),
            samples_checked: rep.samples_checked,
            violations: rep.violations,
        },
    }
}

fn cmd_check(cli: &Cli, div: &Path, gauge: &Path) -> Result<i32, CliError> {
    let division: Division = read_json(div)?;
    let gauge: Gauge = read_json(gauge)?;
    let report = check_division(&division, &gauge, cli.seed);
    for v in &report.violations {
        eprintln!("violation: {}", serde_json::to_string(v).expect("violations serialize"));
    }
    emit(cli.out.as_deref(), &to_json(&report))?;
    Ok(if report.clean { EXIT_OK } else { EXIT_VIOLATIONS })
}

/// Parses arguments, runs the verb and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    let res = match &cli.command {
        Command::Run { job } => cmd_run(&cli, job),
        Command::CheckDivision { division, gauge } => cmd_check(&cli, division, gauge),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}
