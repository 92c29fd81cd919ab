//! Command-line front end: each subcommand writes CSV files and a
//! `summary.json` into the output directory.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use serde_json::{json, Map, Value};

use livsic_core::cocycle::Cocycle;
use livsic_core::dynamics::{lyapunov_exponent, mean_log_derivative, Builtin, Interval, PiecewiseMap};
use livsic_core::experiments::{self, apply_override, skeleton, Check, ExperimentConfig, ExperimentKind, ExperimentReport};
use livsic_core::livsic::{periodic_obstruction, reconstruct_coboundary_on_grid, OrbitSelection, ReconstructionOptions, Verdict};
use livsic_core::report::{fmt_real, write_atomic, Table};
use livsic_core::towers::{hofbauer_build_with, induce_first_return, kac_and_lambda};
use livsic_core::Error;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "livsic", version, about = "Livšic reconstruction and obstruction experiments for interval maps")]
pub struct Cli {
    /// Output directory for CSV files and summary.json
    #[arg(long, global = true, env = "LIVSIC_OUT", value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Seed for every randomized step
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// More log output (repeatable)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scripted experiment: chebyshev, renormalization, mp_scaling, corphi_scan
    Experiment {
        name: String,
        /// JSON config file
        #[arg(long, value_name = "FILE")]
        config: Option<PathBuf>,
        /// Config overrides, applied after the file in order
        #[arg(value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Periodic-orbit residuals of log|f'| - λ̄
    Obstruction {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, default_value_t = 8)]
        max_period: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Birkhoff length for λ̄ when no analytic density is known
        #[arg(long, default_value_t = 2_000_000)]
        iters: u64,
        /// Also judge orbits through partition endpoints
        #[arg(long)]
        all_orbits: bool,
        /// Fail unless the verdict is this one
        #[arg(long, value_parser = ["coboundary", "obstructed"])]
        expect: Option<String>,
    },
    /// Reconstruct the transfer function on a grid
    Reconstruct {
        #[command(flatten)]
        map: MapArgs,
        /// log_derivative, sin, square or piecewise
        #[arg(long, default_value = "log_derivative")]
        cocycle: String,
        #[arg(long, default_value_t = 128)]
        grid: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 400)]
        anchor_length: usize,
        #[arg(long, default_value_t = 2_000_000)]
        iters: u64,
    },
    /// First-return tower over a base interval
    Tower {
        #[command(flatten)]
        map: MapArgs,
        /// Base interval as `left,right`
        #[arg(long, value_parser = parse_interval, default_value = "0.5,1")]
        base: (f64, f64),
        #[arg(long, default_value_t = 64)]
        max_return: usize,
        #[arg(long, default_value_t = 1_000_000)]
        iters: u64,
    },
    /// Hofbauer extension levels and transitions
    Hofbauer {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, default_value_t = 16)]
        depth: usize,
        /// Length of the lifted orbit
        #[arg(long, default_value_t = 1_000_000)]
        steps: u64,
    },
    /// Birkhoff average of log|f'|
    Lyapunov {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, default_value_t = 1_000_000)]
        iters: u64,
        #[arg(long, default_value_t = 1000)]
        burn_in: u64,
    },
}

#[derive(Debug, Args)]
pub struct MapArgs {
    /// doubling, tent, quadratic, manneville_pomeau (mp), chebyshev_tent
    #[arg(long, default_value = "quadratic")]
    pub map: String,
    /// Quadratic parameter in 1 - a x²
    #[arg(long)]
    pub a: Option<f64>,
    /// Manneville-Pomeau exponent
    #[arg(long)]
    pub p: Option<f64>,
    /// Tent slope
    #[arg(long)]
    pub slope: Option<f64>,
}

impl MapArgs {
    fn build(&self) -> livsic_core::Result<PiecewiseMap<f64>> {
        let param = match self.map.as_str() {
            "quadratic" => self.a.or(Some(2.0)),
            "manneville_pomeau" | "mp" => self.p,
            "tent" => self.slope,
            _ => None,
        };
        PiecewiseMap::builtin(Builtin::parse(&self.map, param)?)
    }
}

fn parse_interval(s: &str) -> Result<(f64, f64), String> {
    let (l, r) = s.split_once(',').ok_or_else(|| format!("expected `left,right`, got `{s}`"))?;
    let l: f64 = l.trim().parse().map_err(|e| format!("left endpoint: {e}"))?;
    let r: f64 = r.trim().parse().map_err(|e| format!("right endpoint: {e}"))?;
    if !(l < r) {
        return Err(format!("left endpoint {l} must be below right endpoint {r}"));
    }
    Ok((l, r))
}

/// What a subcommand hands back for writing.
struct Outcome {
    command: String,
    files: Vec<(String, Vec<u8>)>,
    checks: Vec<Check>,
    metrics: Vec<(String, f64)>,
    verdicts: Map<String, Value>,
}

impl Outcome {
    fn new(command: &str) -> Self {
        Self { command: command.into(), files: Vec::new(), checks: Vec::new(), metrics: Vec::new(), verdicts: Map::new() }
    }

    fn table(&mut self, name: &str, t: &Table) -> livsic_core::Result<()> {
        self.files.push((name.into(), t.to_csv_string()?.into_bytes()));
        Ok(())
    }

    fn from_report(r: ExperimentReport) -> livsic_core::Result<Self> {
        let mut o = Outcome::new(&format!("experiment {}", r.name));
        o.table(&format!("{}.csv", r.name), &r.table)?;
        o.table(&format!("{}_checks.csv", r.name), &r.checks_table())?;
        o.checks = r.checks;
        o.metrics = r.metrics;
        Ok(o)
    }

    fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Parses `argv` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();

    let started = Instant::now();
    let (outcome, config_out) = match dispatch(&cli) {
        Ok(o) => o,
        Err(e) => return report_error(&e),
    };
    let compute = started.elapsed().as_secs_f64();
    let dir = cli.out.clone().or(config_out).unwrap_or_else(|| PathBuf::from("livsic_out"));
    match write_outcome(&dir, &outcome, compute) {
        Ok(summary) => {
            println!("{summary}");
            if outcome.passed() {
                EXIT_PASS
            } else {
                for c in outcome.checks.iter().filter(|c| !c.passed) {
                    eprintln!("check failed: {} = {} (threshold {})", c.name, fmt_real(c.value), fmt_real(c.threshold));
                }
                EXIT_FAIL
            }
        }
        Err(e) => report_error(&e),
    }
}

fn report_error(e: &Error) -> i32 {
    match e {
        Error::Config(list) => {
            eprintln!("config errors:");
            for m in list {
                eprintln!("  - {m}");
            }
            EXIT_USAGE
        }
        Error::ParameterOutOfRange(_) | Error::InvalidMap(_) | Error::Io(_) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
        _ => {
            eprintln!("error: {e}");
            EXIT_FAIL
        }
    }
}

fn write_outcome(dir: &Path, o: &Outcome, compute: f64) -> livsic_core::Result<String> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let t = Instant::now();
    for (name, bytes) in &o.files {
        write_atomic(&dir.join(name), bytes)?;
    }
    let write = t.elapsed().as_secs_f64();
    let mut verdicts = o.verdicts.clone();
    for c in &o.checks {
        verdicts.insert(c.name.clone(), Value::Bool(c.passed));
    }
    let metrics: Map<String, Value> = o.metrics.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    let summary = json!({
        "command": o.command,
        "passed": o.passed(),
        "verdicts": verdicts,
        "checks": o.checks,
        "metrics": metrics,
        "files": o.files.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>(),
        "timings": { "compute_seconds": compute, "write_seconds": write },
    });
    let text = serde_json::to_string_pretty(&summary).map_err(|e| Error::Io(e.to_string()))?;
    write_atomic(&dir.join("summary.json"), text.as_bytes())?;
    Ok(text)
}

fn dispatch(cli: &Cli) -> livsic_core::Result<(Outcome, Option<PathBuf>)> {
    match &cli.command {
        Command::Experiment { name, config, overrides } => experiment(cli, name, config.as_deref(), overrides),
        Command::Obstruction { map, max_period, tol, iters, all_orbits, expect } => {
            obstruction(cli, map, *max_period, *tol, *iters, *all_orbits, expect.as_deref()).map(|o| (o, None))
        }
        Command::Reconstruct { map, cocycle, grid, tol, anchor_length, iters } => {
            reconstruct(cli, map, cocycle, *grid, *tol, *anchor_length, *iters).map(|o| (o, None))
        }
        Command::Tower { map, base, max_return, iters } => tower(cli, map, *base, *max_return, *iters).map(|o| (o, None)),
        Command::Hofbauer { map, depth, steps } => hofbauer(cli, map, *depth, *steps).map(|o| (o, None)),
        Command::Lyapunov { map, iters, burn_in } => lyapunov(cli, map, *iters, *burn_in).map(|o| (o, None)),
    }
}

fn experiment(cli: &Cli, name: &str, config: Option<&Path>, overrides: &[String]) -> livsic_core::Result<(Outcome, Option<PathBuf>)> {
    let kind: ExperimentKind = name.parse()?;
    let mut value = match config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
            serde_json::from_str(&text).map_err(|e| Error::Config(vec![format!("{}: invalid JSON: {e}", path.display())]))?
        }
        None => skeleton(kind),
    };
    match value.get("experiment").and_then(Value::as_str) {
        Some(s) if s != kind.as_str() => warn!("config names experiment `{s}`; the command line `{kind}` wins"),
        _ => {}
    }
    apply_override(&mut value, &format!("experiment=\"{kind}\""))?;
    if value.get("seed").is_none() || cli.seed != 0 {
        apply_override(&mut value, &format!("seed={}", cli.seed))?;
    }
    for o in overrides {
        let key = o.split_once('=').map(|(k, _)| k.trim());
        if let Some(old) = key.and_then(|k| value.get(k)) {
            info!("override {o} replaces {old}");
        } else {
            info!("override {o}");
        }
        apply_override(&mut value, o)?;
    }
    let cfg = ExperimentConfig::from_value(&value)?;
    let out = cfg.output.as_ref().map(PathBuf::from);
    Ok((Outcome::from_report(experiments::run_experiment(&cfg)?)?, out))
}

fn obstruction(
    cli: &Cli,
    args: &MapArgs,
    max_period: usize,
    tol: f64,
    iters: u64,
    all: bool,
    expect: Option<&str>,
) -> livsic_core::Result<Outcome> {
    let map = args.build()?;
    let lambda_bar = experiments::lambda_bar(&map, iters, cli.seed)?;
    let phi = Cocycle::log_derivative(&map, lambda_bar);
    let selection = if all { OrbitSelection::All } else { OrbitSelection::Interior };
    let report = periodic_obstruction(&phi, &map, max_period, tol, selection)?;
    let mut o = Outcome::new("obstruction");
    o.table("obstruction.csv", &report.to_table())?;
    o.verdicts.insert("obstruction".into(), Value::String(report.verdict.as_str().into()));
    o.metrics = vec![
        ("lambda_bar".into(), lambda_bar),
        ("max_residual".into(), report.max_residual),
        ("tolerance".into(), tol),
        ("orbits".into(), report.rows.len() as f64),
        ("boundary_orbits".into(), report.boundary_rows.len() as f64),
    ];
    if let Some(e) = expect {
        let want = if e == "coboundary" { Verdict::CoboundaryConsistent } else { Verdict::Obstructed };
        o.checks.push(Check::holds(format!("verdict_is_{e}"), report.verdict == want));
    }
    Ok(o)
}

/// Manufactured potentials in the normalized coordinate `t ∈ [0, 1]`.
fn potential(name: &str) -> Option<fn(f64) -> f64> {
    match name {
        "sin" => Some(|t| (2.0 * PI * t).sin()),
        "square" => Some(|t| t * t),
        "piecewise" => Some(|t| (t - 1.0 / 3.0).abs() + t * t * t),
        _ => None,
    }
}

fn reconstruct(
    cli: &Cli,
    args: &MapArgs,
    cocycle: &str,
    n: usize,
    tol: f64,
    anchor_length: usize,
    iters: u64,
) -> livsic_core::Result<Outcome> {
    if n < 2 {
        return Err(Error::ParameterOutOfRange(format!("grid needs at least 2 points, got {n}")));
    }
    let map = args.build()?;
    let phase = map.phase();
    let u = match cocycle {
        "log_derivative" => None,
        other => Some(potential(other).ok_or_else(|| {
            Error::ParameterOutOfRange(format!("unknown cocycle `{other}` (expected log_derivative, sin, square, piecewise)"))
        })?),
    };
    let (lo, w) = (phase.lo, phase.width());
    let phi = match u {
        None => Cocycle::log_derivative(&map, experiments::lambda_bar(&map, iters, cli.seed)?),
        Some(u) => Cocycle::scalar_coboundary(&map, move |x| u((x - lo) / w)),
    };
    let grid: Vec<f64> = (0..n).map(|k| phase.lerp(0.05 + 0.9 * k as f64 / (n - 1) as f64)).collect();
    let reference = grid[n / 2];
    let rec = reconstruct_coboundary_on_grid(&phi, &map, reference, &grid, &ReconstructionOptions::with_tol(tol), anchor_length, cli.seed)?;
    let mut o = Outcome::new("reconstruct");
    o.table("reconstruct.csv", &rec.to_table()?)?;
    o.metrics.push(("telescoping_excess".into(), rec.telescoping_excess));
    o.checks.push(Check::below("telescoping_excess", rec.telescoping_excess, 1e-9));
    if let Some(u) = u {
        let offsets: Vec<f64> = rec
            .values
            .iter()
            .zip(&grid)
            .map(|(v, &x)| v.as_real_vec().map_or(f64::NAN, |c| c[0]) - u((x - lo) / w))
            .collect();
        let hi = offsets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = offsets.iter().copied().fold(f64::INFINITY, f64::min);
        o.metrics.push(("sup_error_up_to_constant".into(), 0.5 * (hi - lo)));
        o.checks.push(Check::below("sup_error_up_to_constant", 0.5 * (hi - lo), 1e-6));
    }
    Ok(o)
}

fn tower(cli: &Cli, args: &MapArgs, base: (f64, f64), max_return: usize, iters: u64) -> livsic_core::Result<Outcome> {
    let map = args.build()?;
    let t = induce_first_return(&map, Interval::new(base.0, base.1), max_return)?;
    let mut o = Outcome::new("tower");
    o.table("tower.csv", &t.to_table())?;
    let backward = t.induced.bijectivity_backward_defect();
    o.metrics = vec![("cells".into(), t.cells.len() as f64), ("tail_mass".into(), t.tail.mass), ("bijectivity_defect".into(), backward)];
    o.checks.push(Check::below("bijectivity_backward_defect", backward, 1e-9));
    match kac_and_lambda(&t, iters, cli.seed, 1e-3) {
        Ok(k) => {
            o.metrics.extend([
                ("kac".into(), k.kac),
                ("lambda0".into(), k.lambda0),
                ("lambda_tower".into(), k.lambda_tower),
                ("lambda_birkhoff".into(), k.lambda_birkhoff),
            ]);
            o.checks.push(Check::holds("lyapunov_ge_tower_rate", k.inequality_holds));
        }
        Err(e @ Error::TailTooHeavy { .. }) => {
            warn!("{e}; Kac statistics not reported");
            o.verdicts.insert("kac".into(), Value::String("tail_too_heavy".into()));
        }
        Err(e) => return Err(e),
    }
    Ok(o)
}

fn hofbauer(cli: &Cli, args: &MapArgs, depth: usize, steps: u64) -> livsic_core::Result<Outcome> {
    let map = args.build()?;
    let t = hofbauer_build_with(&map, depth, steps, cli.seed)?;
    let mut o = Outcome::new("hofbauer");
    o.table("hofbauer.csv", &t.to_table())?;
    o.files.push(("hofbauer_edges.txt".into(), t.to_edge_list().into_bytes()));
    let defect = t.markov_defect(&map);
    o.metrics = vec![("levels".into(), t.level_count() as f64), ("escapes".into(), t.escapes as f64), ("markov_defect".into(), defect)];
    o.checks.push(Check::below("markov_defect", defect, 1e-9));
    Ok(o)
}

fn lyapunov(cli: &Cli, args: &MapArgs, iters: u64, burn_in: u64) -> livsic_core::Result<Outcome> {
    let map = args.build()?;
    let lambda = lyapunov_exponent(&map, burn_in, iters, cli.seed)?;
    let reference = match map.density() {
        Some(d) if d.is_analytic() => Some(mean_log_derivative(&map)?),
        _ => None,
    };
    let mut table = Table::new(["map", "iterates", "seed", "lambda", "lambda_quadrature"]);
    table.push(vec![
        map.name().to_string(),
        iters.to_string(),
        cli.seed.to_string(),
        fmt_real(lambda),
        reference.map(fmt_real).unwrap_or_default(),
    ]);
    let mut o = Outcome::new("lyapunov");
    o.table("lyapunov.csv", &table)?;
    o.metrics.push(("lambda".into(), lambda));
    if let Some(r) = reference {
        o.metrics.push(("lambda_quadrature".into(), r));
    }
    o.checks.push(Check::holds("lambda_finite", lambda.is_finite()));
    Ok(o)
}
