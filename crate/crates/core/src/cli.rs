//! The `ksw` command line: run, sweep, check and report.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{parse_plan, RunConfig};
use crate::diagnostics::{band_limited_family, cutoff_eta, sobolev_check, sobolev_ratio_probe, FROZEN_C_STAR};
use crate::error::{Error, Result};
use crate::geometry::DomainGeometry;
use crate::manifest::{write_csv, Manifest};
use crate::solver::{self, StopReason};
use crate::sweep::run_sweep;
use crate::testfn::{build_boundary_bump, r_support, verify_bump, BumpParams, RadialProfile};
use crate::verify::greens::GreensReport;
use crate::weakform::{empirical_order, refinement_study, WeakOptions};

#[derive(Debug, Parser)]
#[command(name = "ksw", version, about = "Regularized Keller-Segel laboratory")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = "ksw-out")]
    pub out: PathBuf,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Overrides the seed of the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one configuration; exit 2 when stopped at the concentration flag.
    Run {
        /// Run configuration file.
        config: PathBuf,
    },
    /// Run an epsilon sweep plan and write the report.
    Sweep {
        /// Sweep plan file.
        plan: PathBuf,
    },
    /// Run a verification suite; exit 0 iff every gate passes.
    Check(CheckArgs),
    /// Print the verdicts of a sweep report directory.
    Report {
        /// Directory holding verdicts.csv.
        dir: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Greens,
    Testfn,
    Sobolev,
    WeakResidual,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    pub which: Suite,
    /// Mesh 1/N for the Green's function and test function suites.
    #[arg(long, default_value_t = 512)]
    pub mesh: usize,
    /// Test function center, `x,y`.
    #[arg(long, default_value = "0.995,0", value_parser = parse_point)]
    pub x0: [f64; 2],
    /// Test function radius.
    #[arg(long, default_value_t = 0.01)]
    pub rho: f64,
    /// Number of random fields of the Sobolev suite.
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    /// Grid levels of the weak residual suite, comma separated.
    #[arg(long, default_value = "64,128,256", value_delimiter = ',')]
    pub levels: Vec<usize>,
}

fn parse_point(s: &str) -> std::result::Result<[f64; 2], String> {
    let v: Vec<f64> = s.split(',').map(|t| t.trim().parse::<f64>().map_err(|e| e.to_string())).collect::<std::result::Result<_, _>>()?;
    match v.as_slice() {
        [a, b] => Ok([*a, *b]),
        _ => Err(format!("expected x,y, got '{s}'")),
    }
}

/// Parses the process arguments and runs; returns the exit code.
pub fn main() -> i32 {
    // usage errors exit 1 like every other error; help and version exit 0
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn execute(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Run { config } => cmd_run(config, &cli.global),
        Command::Sweep { plan } => cmd_sweep(plan, &cli.global),
        Command::Check(args) => cmd_check(args, &cli.global),
        Command::Report { dir } => cmd_report(dir),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
}

fn with_path(path: &Path, e: Error) -> Error {
    match e {
        Error::Config { line, msg } => Error::Invalid(format!("{}:{line}: {msg}", path.display())),
        e => e,
    }
}

pub fn cmd_run(path: &Path, g: &Global) -> Result<i32> {
    let mut cfg = RunConfig::parse(&read(path)?).map_err(|e| with_path(path, e))?;
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    let root = cfg.out_dir.clone().map(PathBuf::from).unwrap_or_else(|| g.out.clone());
    cfg.out_dir = None;
    let u0 = cfg.initial.build(&cfg.grid, cfg.noise, cfg.seed)?;
    let traj = solver::run(&cfg.solver, cfg.reg, u0)?;
    let dir = Manifest::new("run", cfg.emit(), cfg.seed).materialize(&root, "runs")?;
    let mut buf = Vec::new();
    solver::io::write_diagnostics(&mut buf, &traj.diagnostics)?;
    write_csv(&dir, "diagnostics.csv", &String::from_utf8_lossy(&buf), crate::sweep::report::DIAG_SCHEMA)?;
    let snaps = dir.join("snapshots");
    fs::create_dir_all(&snaps)?;
    for (k, s) in traj.snapshots.iter().enumerate() {
        let f = fs::File::create(snaps.join(format!("{k:05}.bin")))?;
        solver::io::write_snapshot(std::io::BufWriter::new(f), &s.u, s.t, traj.reg)?;
    }
    println!("{}", dir.display());
    println!(
        "steps {} t {:e} mass drift {:e} concentrated {}",
        traj.steps,
        traj.last().t,
        traj.max_mass_drift,
        traj.concentrated_at.map(|t| format!("at {t:e}")).unwrap_or_else(|| "no".into())
    );
    Ok(match traj.stop {
        StopReason::Completed => 0,
        StopReason::Concentrated => 2,
        StopReason::Failed => {
            eprintln!("run failed: {}", traj.failure.as_deref().unwrap_or("unknown"));
            1
        }
    })
}

pub fn cmd_sweep(path: &Path, g: &Global) -> Result<i32> {
    let mut plan = parse_plan(&read(path)?).map_err(|e| with_path(path, e))?;
    if let Some(s) = g.seed {
        plan.seed = s;
    }
    if g.threads.is_some() {
        plan.threads = g.threads;
    }
    let rep = run_sweep(&plan, Some(&g.out))?;
    let dir = g.out.join("sweeps").join(&rep.plan_hash[..16]);
    println!("{}", dir.display());
    for v in &rep.verdicts {
        println!("{:<44} {:>14.6e}  {:<20} {}", v.name, v.value, v.gate, if v.pass { "pass" } else { "FAIL" });
    }
    Ok(0)
}

/// Rows `(name, value, tolerance, pass)` of one suite.
type Rows = Vec<(String, f64, String, bool)>;

fn greens_rows(mesh: usize, seed: u64) -> Rows {
    let rep = GreensReport::run(mesh, seed);
    rep.rows().into_iter().map(|(n, v, tol)| (n.to_string(), v, format!("<= {tol:e}"), v.is_finite() && v <= tol)).collect()
}

fn testfn_rows(x0: [f64; 2], rho: f64, mesh: usize) -> Result<Rows> {
    let disk = DomainGeometry::unit_disk();
    let d = disk.distance_to_boundary(x0)?;
    let mut rows: Rows = Vec::new();
    let p = RadialProfile::default();
    for i in 0..3 {
        let (a, b) = p.one_sided_values(i);
        let (da, db) = p.one_sided_derivatives(i);
        let m = (a - b).abs().max((da - db).abs());
        rows.push((format!("phi_c1_mismatch_{i}"), m, "<= 1e-12".into(), m <= 1e-12));
    }
    if d >= r_support() * rho {
        rows.push(("interior_support".into(), r_support() * rho, format!("<= {d:e}"), true));
        return Ok(rows);
    }
    let bump = build_boundary_bump(&disk, x0, rho, BumpParams::default())?;
    let r = verify_bump(&bump, 1.0 / mesh as f64);
    rows.extend([
        ("rho0".into(), bump.rho0, format!(">= {rho:e}"), true),
        ("laplacian_rel_err".into(), r.laplacian_rel_err, "<= 0.05".into(), r.laplacian_rel_err <= 0.05),
        ("neumann".into(), r.neumann, "<= 1e-6".into(), r.neumann <= 1e-6),
        ("psi_min_in_ball".into(), r.psi_min_in_ball, ">= 0.5".into(), r.psi_min_in_ball >= 0.5),
        (
            "scaled_laplacian_min_outside".into(),
            r.scaled_laplacian_min_outside,
            ">= -1e-6".into(),
            r.scaled_laplacian_min_outside >= -1e-6,
        ),
        (
            "support_extent".into(),
            r.support_extent,
            format!("<= {:e}", r.lambda_cap),
            r.support_extent <= r.lambda_cap,
        ),
    ]);
    Ok(rows)
}

fn sobolev_rows(count: usize, seed: u64) -> Rows {
    let eta = cutoff_eta(64, 1.0, [0.5, 0.5], 0.2, 0.4);
    let fields = band_limited_family(count, seed, 64);
    let passed = fields.iter().filter(|u| sobolev_check(u, &eta, 0.5, FROZEN_C_STAR).pass).count();
    let probe = sobolev_ratio_probe(256, 0.03, 0.5);
    vec![
        ("fields_passed".into(), passed as f64, format!("== {count}"), passed == count),
        ("c_star".into(), FROZEN_C_STAR, "frozen".into(), true),
        ("probe_ratio".into(), probe, "<= 1".into(), probe <= 1.0),
    ]
}

fn weak_rows(levels: &[usize]) -> Result<Rows> {
    let study = refinement_study(levels, 0.2, &WeakOptions::default())?;
    let mut rows: Rows = Vec::new();
    for l in &study {
        let b = &l.breakdown;
        rows.push((format!("residual_n{}", l.n), b.residual, "informational".into(), true));
        let q = b.q2.abs().max(b.q3.abs()).max(b.q4.abs());
        rows.push((format!("q2_q4_n{}", l.n), q, "== 0".into(), q == 0.0));
    }
    let order = empirical_order(&study);
    rows.push(("empirical_order".into(), order, ">= 0.8".into(), order >= 0.8));
    Ok(rows)
}

pub fn cmd_check(a: &CheckArgs, g: &Global) -> Result<i32> {
    let seed = g.seed.unwrap_or(1);
    let (name, rows) = match a.which {
        Suite::Greens => ("greens", greens_rows(a.mesh, seed)),
        Suite::Testfn => ("testfn", testfn_rows(a.x0, a.rho, a.mesh)?),
        Suite::Sobolev => ("sobolev", sobolev_rows(a.count, seed)),
        Suite::WeakResidual => ("weak_residual", weak_rows(&a.levels)?),
    };
    let mut body = String::from("name,value,gate,pass\n");
    for (n, v, gate, pass) in &rows {
        let _ = writeln!(body, "{n},{v:e},{gate},{pass}");
    }
    let dir = g.out.join("checks");
    fs::create_dir_all(&dir)?;
    write_csv(
        &dir,
        &format!("{name}.csv"),
        &body,
        &[("name", "gated quantity"), ("value", "measured value"), ("gate", "pass condition"), ("pass", "true or false")],
    )?;
    print!("{body}");
    Ok(if rows.iter().all(|r| r.3) { 0 } else { 1 })
}

pub fn cmd_report(dir: &Path) -> Result<i32> {
    let text = read(&dir.join("verdicts.csv"))?;
    let mut failed = 0;
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() == 4 {
            println!("{:<44} {:>18}  {:<20} {}", f[0], f[1], f[2], if f[3] == "true" { "pass" } else { "FAIL" });
            failed += (f[3] != "true") as usize;
        }
    }
    println!("{failed} failing verdict(s)");
    Ok(0)
}
