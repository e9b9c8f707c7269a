//! Command-line driver.
//!
//! Exit status: 0 on success, 1 on a runtime error, 2 on an invalid config
//! or command line, 3 when `verify` finds a failing invariant.

pub mod config;
pub mod output;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::algorithms::{AlgorithmConfig, Observer, PhaseState};
use crate::error::{Error, Result};
use crate::instances::{
    generate_needle_tower, verify_lipschitz, zooming_dimension_estimate, ProblemInstance,
};
use crate::metric::{Ball, Point};
use crate::simulator::{
    chernoff_frequency, fit_exponent, monitor_clean_invariants, monitor_quota, replicate,
    run_observed, run_rng, CleanReport, RegretCurve,
};
use config::Document;
use output::{curve_csv, write_json, write_text};

pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

/// Environment variables mirror the flags with this prefix, e.g.
/// `METRIC_BANDITS_THREADS`.
pub const ENV_PREFIX: &str = "METRIC_BANDITS_";

#[derive(Debug, Parser)]
#[command(
    name = "metric-bandits",
    version,
    about = "Lipschitz bandit experiments over metric spaces"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Experiment config (TOML).
    #[arg(long, global = true, env = "METRIC_BANDITS_CONFIG")]
    pub config: Option<PathBuf>,

    /// Output directory; overrides `[output] dir`.
    #[arg(long, global = true, env = "METRIC_BANDITS_OUT")]
    pub out: Option<PathBuf>,

    /// Worker threads. Changes speed only, never results.
    #[arg(long, global = true, env = "METRIC_BANDITS_THREADS")]
    pub threads: Option<usize>,

    /// Replaces `[seeds] base`.
    #[arg(long, global = true, env = "METRIC_BANDITS_SEED_BASE")]
    pub seed_base: Option<u64>,

    /// Add wall-clock time to summaries, which makes them differ run to run.
    #[arg(long, global = true, env = "METRIC_BANDITS_RECORD_WALL_TIME")]
    pub record_wall_time: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Replicate one experiment and write its regret curve.
    Run,
    /// Run one experiment per value of the `[sweep]` axis.
    Sweep,
    /// Check the instance and the algorithm's invariants.
    Verify,
    /// Generate a needle-in-haystack instance file.
    NeedleGen,
    /// Estimate the zooming dimension of the configured instance.
    Dim,
}

enum Outcome {
    Done,
    Failed(Vec<String>),
}

/// Parse `args` and run the command, returning the exit status.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return if code == 0 { 0 } else { EXIT_CONFIG };
        }
    };
    match execute(&cli) {
        Ok(Outcome::Done) => 0,
        Ok(Outcome::Failed(names)) => {
            eprintln!("verify failed: {}", names.join(", "));
            EXIT_VERIFY
        }
        Err(e @ Error::Config(_)) => {
            eprintln!("{e}");
            EXIT_CONFIG
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}

pub fn main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    run_cli(std::env::args_os())
}

fn execute(cli: &Cli) -> Result<Outcome> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Error::Config("missing --config PATH".into()))?;
    let doc = Document::load(path)?;
    let out = match &cli.out {
        Some(o) => o.clone(),
        None => doc.output_dir()?.unwrap_or_else(|| PathBuf::from("out")),
    };
    let task = || match cli.command {
        Command::Run => cmd_run(&doc, cli, &out),
        Command::Sweep => cmd_sweep(&doc, cli, &out),
        Command::Verify => cmd_verify(&doc, cli, &out),
        Command::NeedleGen => cmd_needle_gen(&doc, &out),
        Command::Dim => cmd_dim(&doc, &out),
    };
    match cli.threads {
        Some(0) => Err(Error::Config("--threads must be >= 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Unsupported(format!("thread pool: {e}")))?
            .install(task),
        None => task(),
    }
}

#[derive(Serialize)]
struct Window {
    t_start: u64,
    t_end: u64,
    points: usize,
}

#[derive(Serialize)]
struct CurveSummary {
    algorithm: String,
    horizon: u64,
    seeds: Vec<u64>,
    replications: usize,
    gamma: Option<f64>,
    window: Option<Window>,
    residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit_error: Option<String>,
    mean_final_regret: f64,
    final_regrets: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_secs: Option<f64>,
}

struct Experiment {
    curve: RegretCurve,
    summary: CurveSummary,
}

fn experiment(doc: &Document, cli: &Cli) -> Result<Experiment> {
    let inst = doc.instance()?;
    let algorithm = doc.algorithm(inst.metric())?;
    let horizon = doc.horizon()?;
    let seeds = doc.seeds(cli.seed_base)?;
    let window = doc.fit_window()?;
    let started = Instant::now();
    let curve = replicate(&inst, &algorithm, horizon, &seeds)?;
    let wall = started.elapsed().as_secs_f64();
    let (gamma, window, residual, fit_error) = match fit_exponent(&curve, window) {
        Ok(f) => {
            let w = Window {
                t_start: f.t_start,
                t_end: f.t_end,
                points: f.points,
            };
            (f.gamma, Some(w), f.residual, None)
        }
        Err(e) => (None, None, None, Some(e.to_string())),
    };
    let summary = CurveSummary {
        algorithm: algorithm.name(),
        horizon,
        replications: curve.replications,
        seeds,
        gamma,
        window,
        residual,
        fit_error,
        mean_final_regret: curve.final_mean(),
        final_regrets: curve.final_regrets.clone(),
        wall_time_secs: cli.record_wall_time.then_some(wall),
    };
    Ok(Experiment { curve, summary })
}

fn config_echo(doc: &Document) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(&doc.table)?)
}

#[derive(Serialize)]
struct RunSummary {
    config: serde_json::Value,
    #[serde(flatten)]
    result: CurveSummary,
}

fn cmd_run(doc: &Document, cli: &Cli, out: &Path) -> Result<Outcome> {
    let ex = experiment(doc, cli)?;
    write_text(&out.join("curve.csv"), &curve_csv(&ex.curve))?;
    write_json(
        &out.join("summary.json"),
        &RunSummary {
            config: config_echo(doc)?,
            result: ex.summary,
        },
    )?;
    println!("wrote {}", out.display());
    Ok(Outcome::Done)
}

#[derive(Serialize)]
struct SweepEntry {
    value: serde_json::Value,
    curve: String,
    #[serde(flatten)]
    result: CurveSummary,
}

#[derive(Serialize)]
struct SweepSummary {
    config: serde_json::Value,
    field: String,
    entries: Vec<SweepEntry>,
}

fn cmd_sweep(doc: &Document, cli: &Cli, out: &Path) -> Result<Outcome> {
    let sweep = doc.sweep()?;
    let mut entries = Vec::new();
    for (k, value) in sweep.values.iter().enumerate() {
        let d = doc.with_override(&sweep.field, value.clone())?;
        let ex = experiment(&d, cli)?;
        let name = format!("curve_{k}.csv");
        write_text(&out.join(&name), &curve_csv(&ex.curve))?;
        entries.push(SweepEntry {
            value: serde_json::to_value(value)?,
            curve: name,
            result: ex.summary,
        });
    }
    write_json(
        &out.join("summary.json"),
        &SweepSummary {
            config: config_echo(doc)?,
            field: sweep.field,
            entries,
        },
    )?;
    println!("wrote {}", out.display());
    Ok(Outcome::Done)
}

#[derive(Serialize)]
struct CheckResult {
    name: String,
    passed: bool,
    detail: String,
}

#[derive(Serialize)]
struct VerifyReport {
    passed: bool,
    checks: Vec<CheckResult>,
}

/// Counts rounds whose active balls fail to cover the space after step 1.
struct CoverageCheck {
    rounds: u64,
    uncovered: u64,
    failure: Option<Error>,
}

impl Observer for CoverageCheck {
    fn on_play(&mut self, _t: u64, _point: &Point, _reward: f64) {}

    fn on_step1(&mut self, inst: &ProblemInstance, state: &PhaseState) {
        let balls: Vec<Ball> = state
            .arms
            .iter()
            .map(|a| Ball {
                center: a.strategy.clone(),
                radius: a.radius,
            })
            .collect();
        self.rounds += 1;
        match inst.metric().covering_query(&balls) {
            Ok(c) if c.is_covered() => {}
            Ok(_) => self.uncovered += 1,
            Err(e) => {
                self.failure.get_or_insert(e);
            }
        }
    }
}

fn clean_checks(report: &CleanReport, checks: &mut Vec<CheckResult>) {
    let gap = report.clean_gap_violations();
    checks.push(CheckResult {
        name: "clean_gap_bound".into(),
        passed: gap == 0,
        detail: format!("{gap} violations of Delta(v) <= 4 r_t(v) in clean phases"),
    });
    let sep = report.clean_separation_violations();
    checks.push(CheckResult {
        name: "clean_separation".into(),
        passed: sep == 0,
        detail: format!("{sep} active pairs with L(u, v) <= min gap / 4 in clean phases"),
    });
    let mut phases: Vec<u32> = report.phases.iter().map(|p| p.phase).collect();
    phases.sort_unstable();
    phases.dedup();
    let mut worst = String::new();
    let mut ok = true;
    for i in phases {
        let n = report.phase_count(Some(i)) as f64;
        let p = report.non_clean_fraction(Some(i));
        let limit = CleanReport::non_clean_bound(i) + 3.0 * (p * (1.0 - p) / n).sqrt();
        if p > limit {
            ok = false;
            worst.push_str(&format!(" phase {i}: {p:.6} > {limit:.6};"));
        }
    }
    checks.push(CheckResult {
        name: "clean_frequency".into(),
        passed: ok,
        detail: if ok {
            format!(
                "non-clean fraction within 4^-i + 3 stderr over {} phases",
                report.phases.len()
            )
        } else {
            worst.trim().to_string()
        },
    });
}

fn cmd_verify(doc: &Document, cli: &Cli, out: &Path) -> Result<Outcome> {
    let inst = doc.instance()?;
    let vc = doc.verify()?;
    let seeds = doc.seeds(cli.seed_base)?;
    let mut checks = Vec::new();

    let lip = verify_lipschitz(&inst, vc.lipschitz_pairs, &mut run_rng(seeds[0]));
    checks.push(CheckResult {
        name: "lipschitz".into(),
        passed: lip.max_violation <= vc.lipschitz_tolerance,
        detail: format!(
            "max violation {:e} over {} pairs",
            lip.max_violation, lip.pairs
        ),
    });

    if doc.table.contains_key("algorithm") {
        let algorithm = doc.algorithm(inst.metric())?;
        let horizon = vc.clean_horizon.map_or_else(|| doc.horizon(), Ok)?;
        match &algorithm {
            AlgorithmConfig::Zooming { rule } if vc.clean => {
                let report = monitor_clean_invariants(&inst, rule, horizon, &seeds)?;
                clean_checks(&report, &mut checks);
                let mut cov = CoverageCheck {
                    rounds: 0,
                    uncovered: 0,
                    failure: None,
                };
                for &s in &seeds {
                    run_observed(&inst, &algorithm, horizon, s, false, &mut cov)?;
                }
                if let Some(e) = cov.failure {
                    return Err(e);
                }
                checks.push(CheckResult {
                    name: "coverage".into(),
                    passed: cov.uncovered == 0,
                    detail: format!(
                        "{} of {} rounds uncovered after step 1",
                        cov.uncovered, cov.rounds
                    ),
                });
            }
            AlgorithmConfig::Quota { d, decomposition } => {
                let (mut rounds, mut quota, mut sep) = (0, 0, 0);
                for &s in &seeds {
                    let (_, rep) = monitor_quota(&inst, *d, decomposition, horizon, s)?;
                    rounds += rep.rounds;
                    quota += rep.quota_violations;
                    sep += rep.separation_violations;
                }
                checks.push(CheckResult {
                    name: "quota".into(),
                    passed: quota == 0,
                    detail: format!("{quota} of {rounds} rounds over quota"),
                });
                checks.push(CheckResult {
                    name: "quota_separation".into(),
                    passed: sep == 0,
                    detail: format!("{sep} same-pool pairs closer than rho"),
                });
            }
            _ => {}
        }
    }

    if vc.chernoff_trials > 0 {
        let mut worst = (f64::INFINITY, 0.0, 0);
        for &mu in &vc.chernoff_means {
            for &n in &vc.chernoff_plays {
                let f = chernoff_frequency(mu, n, vc.chernoff_alpha, vc.chernoff_trials, seeds[0])?;
                if f < worst.0 {
                    worst = (f, mu, n);
                }
            }
        }
        checks.push(CheckResult {
            name: "chernoff".into(),
            passed: worst.0 >= 0.99,
            detail: format!(
                "lowest frequency {} at mu = {}, n = {}",
                worst.0, worst.1, worst.2
            ),
        });
    }

    let passed = checks.iter().all(|c| c.passed);
    for c in &checks {
        println!(
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name.clone())
        .collect();
    write_json(&out.join("verify.json"), &VerifyReport { passed, checks })?;
    Ok(if passed {
        Outcome::Done
    } else {
        Outcome::Failed(failed)
    })
}

fn cmd_needle_gen(doc: &Document, out: &Path) -> Result<Outcome> {
    let spec = doc.needle_spec()?;
    let tower = generate_needle_tower(&spec)?;
    let path = out.join("needle.json");
    write_json(&path, &tower)?;
    println!(
        "wrote {} ({} levels, mu* = {})",
        path.display(),
        tower.depth(),
        tower.mu_star
    );
    Ok(Outcome::Done)
}

fn cmd_dim(doc: &Document, out: &Path) -> Result<Outcome> {
    let inst = doc.instance()?;
    let dc = doc.dim()?;
    let est = zooming_dimension_estimate(&inst, dc.c, &dc.radii, dc.grid_cap)?;
    let path = out.join("dim.json");
    write_json(&path, &est)?;
    println!(
        "zooming dimension estimate {} (c = {})",
        est.dimension, dc.c
    );
    Ok(Outcome::Done)
}
