#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use fracrd::blowup::{certify_blowup, t_star, BlowupConfig, BlowupReport};
use fracrd::config::{RegimeKind, RunConfig};
use fracrd::linear::{check_nonnegativity, projection_allowance, solve_mild, solve_with_coefficient, LinearProblem};
use fracrd::mittag_leffler::{ml, MlParams};
use fracrd::suite::{run_suite, select, DEFAULT_SEED};
use fracrd::system::{check_apriori_bounds, solve_system, SystemSolution};
use fracrd::Field;

#[derive(Parser)]
#[command(name = "fracrd", version, about = "Time-fractional reaction-diffusion solver and verification harness")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Directory for CSV artifacts.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Run independent suite checks concurrently.
    #[arg(long, global = true)]
    parallel: bool,
    /// Restrict `verify` to these checks or groups (comma separated).
    #[arg(long, global = true, value_delimiter = ',')]
    only: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate E_{α,β}(z), or tabulate it over a range of z.
    MlEval {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, allow_hyphen_values = true, required_unless_present = "table")]
        z: Option<f64>,
        /// `from:to:step`
        #[arg(long, allow_hyphen_values = true)]
        table: Option<String>,
    },
    /// Solve the linear problem described by the [linear] section.
    SolveLinear {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        snapshot_every: Option<usize>,
    },
    /// Solve the nonlinear system and write the probe CSV.
    SolveSystem {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        snapshot_every: Option<usize>,
    },
    /// Certify finite-time blow-up, optionally across a sweep of one parameter.
    Blowup {
        #[arg(long)]
        config: PathBuf,
        /// `alpha=from:to:step` or `p=from:to:step`
        #[arg(long)]
        sweep: Option<String>,
    },
    /// Run the verification suite.
    Verify {
        /// Checks or groups to run, like `--only`.
        groups: Vec<String>,
    },
}

enum Failure {
    Config(String),
    Check(String),
}

impl From<fracrd::Error> for Failure {
    fn from(e: fracrd::Error) -> Self {
        Failure::Check(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(format!("i/o: {e}"))
    }
}

type Outcome = Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::MlEval { alpha, beta, z, table } => ml_eval(&cli.global, alpha, beta, z, table.as_deref()),
        Command::SolveLinear { config, snapshot_every } => solve_linear(&cli.global, &config, snapshot_every),
        Command::SolveSystem { config, snapshot_every } => run_system(&cli.global, &config, snapshot_every),
        Command::Blowup { config, sweep } => blowup(&cli.global, &config, sweep.as_deref()),
        Command::Verify { groups } => verify(&cli.global, groups),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Check(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn parse_range(text: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || Failure::Config(format!("range '{text}' must be from:to:step"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<f64> = parts.iter().map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    let (from, to, step) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0) || !(to >= from) || !from.is_finite() || !to.is_finite() {
        return Err(Failure::Config(format!("range '{text}' needs from <= to and step > 0")));
    }
    let n = ((to - from) / step + 1e-9).floor() as usize;
    // index-based so rounding never drifts past the end point
    Ok((0..=n).map(|i| ((from + i as f64 * step) * 1e12).round() / 1e12).collect())
}

fn load_config(path: &Path) -> Result<RunConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    RunConfig::parse(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn write_artifact(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, Failure> {
    let path = dir.join(name);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(&path, contents)?;
    Ok(path)
}

fn ml_eval(g: &Global, alpha: f64, beta: f64, z: Option<f64>, table: Option<&str>) -> Outcome {
    let params = MlParams::new(alpha, beta).map_err(|e| Failure::Config(e.to_string()))?;
    let zs = match table {
        Some(t) => parse_range(t)?,
        None => vec![z.expect("clap requires z without table")],
    };
    let mut out = String::from("z,value\n");
    for z in zs {
        let _ = writeln!(out, "{z},{:.17e}", ml(params, z)?);
    }
    print!("{out}");
    if let Some(dir) = &g.out_dir {
        write_artifact(dir, "ml_eval.csv", &out)?;
    }
    Ok(true)
}

fn snapshot_dir(g: &Global, cfg: &RunConfig) -> Option<PathBuf> {
    cfg.output.snapshots.clone().or_else(|| g.out_dir.as_ref().map(|d| d.join("snapshots")))
}

fn solve_linear(g: &Global, path: &Path, every: Option<usize>) -> Outcome {
    let cfg = load_config(path)?;
    let basis = cfg.basis()?;
    let grid = cfg.time_grid()?;
    let kernels = cfg.kernel_config(basis.clone())?;
    let w0 = RunConfig::spatial_field(&basis, &cfg.initial.0)?;
    let source = cfg.linear_source.as_deref().map(|e| RunConfig::spatial_field(&basis, e)).transpose()?;
    let coefficient = cfg.linear_coefficient.as_deref().map(|e| RunConfig::spatial_field(&basis, e)).transpose()?;
    let mut problem = LinearProblem::new(kernels, grid, w0.clone());
    if let Some(s) = &source {
        problem = problem.with_source(vec![s.clone(); grid.len()]);
    }
    let history = match coefficient {
        Some(c) => solve_with_coefficient(
            &problem.with_coefficient(vec![c; grid.len()]),
            None,
            cfg.solver.tol,
            cfg.solver.max_iter,
        )?,
        None => solve_mild(&problem)?,
    };

    let mut csv = String::from("t,mass,min,max,l2\n");
    for k in 0..history.len() {
        let v = history.grid_values(k);
        let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), x| (l.min(*x), h.max(*x)));
        let _ = writeln!(csv, "{:e},{:e},{:e},{:e},{:e}", grid.node(k), basis.integrate(&v), lo, hi, basis.l2_norm(&v));
    }
    match (&cfg.output.probe, &g.out_dir) {
        (Some(p), _) => fs::write(p, &csv)?,
        (None, Some(d)) => {
            write_artifact(d, "linear_probe.csv", &csv)?;
        }
        (None, None) => print!("{csv}"),
    }
    if let (Some(k), Some(dir)) = (every, snapshot_dir(g, &cfg)) {
        write_snapshots(&dir, "w", history.len(), k, |s| (history.field(s), grid.node(s)))?;
    }

    let mut fields: Vec<&Field> = vec![&w0];
    fields.extend(source.iter());
    let allowance = projection_allowance(&fields);
    let r = check_nonnegativity(&history, allowance);
    eprintln!("min {:.3e} at step {} (non-negativity tolerance {:.1e})", r.min_value, r.min_step, r.tolerance);
    Ok(true)
}

fn write_snapshots(
    dir: &Path,
    name: &str,
    len: usize,
    every: usize,
    field: impl Fn(usize) -> (Field, f64),
) -> Result<(), Failure> {
    if every == 0 {
        return Err(Failure::Config("--snapshot-every must be positive".into()));
    }
    fs::create_dir_all(dir)?;
    for step in (0..len).step_by(every) {
        let (f, t) = field(step);
        fs::write(dir.join(format!("{name}_{step:06}.csv")), f.snapshot_csv(name, t))?;
    }
    Ok(())
}

fn run_system(g: &Global, path: &Path, every: Option<usize>) -> Outcome {
    let cfg = load_config(path)?;
    let basis = cfg.basis()?;
    let kernels = cfg.kernel_config(basis.clone())?;
    let system = cfg.nonlinear_system()?;
    let (a, b) = cfg.initial_fields(&basis)?;
    let cutoff = cfg.cutoff(&a, &b)?;
    let sol = solve_system(&kernels, cfg.time_grid()?, &system, &a, &b, cutoff, &cfg.solver_options())?;

    let probe = sol.probe_csv();
    match (&cfg.output.probe, &g.out_dir) {
        (Some(p), _) => fs::write(p, &probe)?,
        (None, Some(d)) => {
            write_artifact(d, "probe.csv", &probe)?;
        }
        (None, None) => print!("{probe}"),
    }
    if let (Some(k), Some(dir)) = (every, snapshot_dir(g, &cfg)) {
        write_snapshots(&dir, "u", sol.len(), k, |s| (sol.u.field(s), sol.grid().node(s)))?;
        write_snapshots(&dir, "v", sol.len(), k, |s| (sol.v.field(s), sol.grid().node(s)))?;
    }
    report_system(&cfg, &sol, &system, &a, &b)
}

fn report_system(
    cfg: &RunConfig,
    sol: &SystemSolution<f64>,
    system: &fracrd::reaction::NonlinearSystem,
    a: &Field,
    b: &Field,
) -> Outcome {
    eprintln!("termination: {:?} after {} steps", sol.termination, sol.len().saturating_sub(1));
    if cfg.system.regime == RegimeKind::Blowup {
        return Ok(true);
    }
    let r = check_apriori_bounds(sol, system, a, b, 1e-4, 1e-4);
    eprintln!(
        "max(u + lambda v) {:.6} vs bound {:.6}; min u {:.3e}, min v {:.3e}",
        r.max_u_plus_lambda_v, r.bound, r.min_u, r.min_v
    );
    for v in &r.violations {
        eprintln!("  {v}");
    }
    Ok(r.pass())
}

fn blowup(g: &Global, path: &Path, sweep: Option<&str>) -> Outcome {
    let cfg = load_config(path)?;
    if cfg.system.regime != RegimeKind::Blowup {
        return Err(Failure::Config("blowup needs [system] regime = blowup".into()));
    }
    let (key, values) = match sweep {
        None => ("alpha", vec![cfg.alpha]),
        Some(s) => {
            let (k, range) =
                s.split_once('=').ok_or_else(|| Failure::Config(format!("sweep '{s}' must be key=from:to:step")))?;
            match k.trim() {
                "alpha" => ("alpha", parse_range(range)?),
                "p" => ("p", parse_range(range)?),
                other => return Err(Failure::Config(format!("cannot sweep '{other}'; use alpha or p"))),
            }
        }
    };
    let mut csv = format!("{}\n", BlowupReport::CSV_HEADER);
    let mut all = true;
    for value in values {
        let mut run = cfg.clone();
        match key {
            "alpha" => run.alpha = value,
            _ => run.system.p = Some(value),
        }
        let report = blowup_once(&run)?;
        all &= report.pass();
        let p = run.system.p.unwrap_or(f64::NAN);
        csv.push_str(&report.csv_row(run.alpha, p));
        csv.push('\n');
    }
    print!("{csv}");
    if let Some(dir) = &g.out_dir {
        write_artifact(dir, "blowup.csv", &csv)?;
    }
    Ok(all)
}

/// Runs at the configured step size until a few steps past `T*`.
fn blowup_once(cfg: &RunConfig) -> Result<BlowupReport, Failure> {
    let basis = cfg.basis()?;
    let kernels = cfg.kernel_config(basis.clone())?;
    let system = cfg.nonlinear_system().map_err(|e| Failure::Config(e.to_string()))?;
    let (a, b) = cfg.initial_fields(&basis)?;
    let bc = BlowupConfig::from_data(cfg.alpha, &system, &a, &b, cfg.blowup.m)?;
    let ts = t_star(&bc);
    let dt = cfg.time.t_final / cfg.time.steps as f64;
    let steps = (ts / dt).ceil() as usize + 8;
    let grid = fracrd::TimeGrid::new(steps as f64 * dt, steps)?;
    let sol = solve_system(&kernels, grid, &system, &a, &b, cfg.cutoff(&a, &b)?, &cfg.solver_options())?;
    Ok(certify_blowup(&sol, &bc, cfg.blowup.threshold, 0.9 * ts, 1e-3)?)
}

fn verify(g: &Global, groups: Vec<String>) -> Outcome {
    let mut names = g.only.clone();
    names.extend(groups);
    let checks = select(&names).map_err(Failure::Config)?;
    let start = Instant::now();
    let report = run_suite(&checks, g.seed, g.parallel);
    print!("{}", report.table());
    for r in &report.results {
        eprintln!("{:<20} {:>8.2} s", r.id, r.elapsed.as_secs_f64());
    }
    eprintln!("total {:.2} s", start.elapsed().as_secs_f64());
    if let Some(dir) = &g.out_dir {
        write_artifact(dir, "verify.csv", &report.csv())?;
        for r in &report.results {
            for (name, contents) in &r.outcome.artifacts {
                write_artifact(dir, name, contents)?;
            }
        }
    }
    Ok(report.pass())
}
