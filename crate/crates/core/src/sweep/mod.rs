//! Epsilon sweeps over both regularizations: atom estimates at matched
//! times, trend fits toward `eps -> 0`, divergence between the
//! regularizations and the persisted report.

pub mod cover;
pub mod report;

use std::f64::consts::PI;
use std::path::Path;

use rayon::prelude::*;

use crate::config::{emit_plan, RunConfig};
use crate::diagnostics::{
    atom_estimate, ball_integral, default_ladder, detect_concentrations, local_mass_rate, Probe, M0_INTERIOR,
};
use crate::error::{Error, Result};
use crate::manifest::{config_hash, write_csv, Manifest};
use crate::problem::{GridSpec, InitialData};
use crate::solver::{self, Density, RegKind, SolverConfig, Trajectory};
use crate::Point;

pub use cover::{
    center_series, mass_change_modulus, singular_set_continuity_check, ContinuityReport, Cover, Track,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RegName {
    Cutoff,
    Nonlinear,
}

impl RegName {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegName::Cutoff => "cutoff_flux",
            RegName::Nonlinear => "nonlinear_diffusion",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "cutoff_flux" | "cutoff" => Some(RegName::Cutoff),
            "nonlinear_diffusion" | "nonlinear" => Some(RegName::Nonlinear),
            _ => None,
        }
    }

    pub fn with_epsilon(self, epsilon: f64) -> Result<RegKind> {
        match self {
            RegName::Cutoff => RegKind::cutoff(epsilon),
            RegName::Nonlinear => RegKind::nonlinear(epsilon),
        }
    }

    pub fn of(reg: RegKind) -> Self {
        match reg {
            RegKind::CutoffFlux { .. } => RegName::Cutoff,
            RegKind::NonlinearDiffusion { .. } => RegName::Nonlinear,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    /// Shared solver settings; sweeps never stop at the concentration flag.
    pub base: SolverConfig,
    pub grid: GridSpec,
    pub initial: InitialData,
    pub noise: f64,
    /// Strictly decreasing.
    pub epsilons: Vec<f64>,
    pub kinds: Vec<RegName>,
    pub probes: Vec<Probe>,
    pub ladder: Vec<f64>,
    /// Matched times are the common concentration time plus these.
    pub offsets: Vec<f64>,
    pub ball_radius: f64,
    pub seed: u64,
    pub threads: Option<usize>,
}

impl Default for SweepPlan {
    fn default() -> Self {
        Self {
            base: SolverConfig {
                t_end: 0.2,
                snapshot_interval: 0.005,
                diag_every: 10,
                stop_on_concentration: false,
                ..SolverConfig::default()
            },
            grid: GridSpec::Radial { n: 300, h_min: 2e-3 },
            initial: InitialData::Gaussian { mass: 12.0 * PI, center: [0.0, 0.0], sigma: 0.3 },
            noise: 0.0,
            epsilons: vec![1e-2, 3e-3, 1e-3, 3e-4],
            kinds: vec![RegName::Cutoff, RegName::Nonlinear],
            probes: vec![Probe { x0: [0.0, 0.0], rho: 0.05 }, Probe { x0: [0.0, 0.0], rho: 0.1 }],
            ladder: default_ladder(),
            offsets: vec![0.01, 0.02, 0.05],
            ball_radius: 0.05,
            seed: 0,
            threads: None,
        }
    }
}

impl SweepPlan {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Invalid(m.to_string()));
        if self.epsilons.len() < 2 {
            return bad("a sweep needs at least two epsilon values for the trend fit");
        }
        if self.epsilons.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return bad("epsilon values must be positive");
        }
        if self.epsilons.windows(2).any(|w| !(w[1] < w[0])) {
            return bad("epsilon values must be strictly decreasing");
        }
        if self.kinds.is_empty() || (1..self.kinds.len()).any(|k| self.kinds[..k].contains(&self.kinds[k])) {
            return bad("regularizations must be nonempty and distinct");
        }
        if self.ladder.is_empty() || self.ladder.iter().any(|r| !(*r > 0.0)) {
            return bad("ladder radii must be positive");
        }
        if self.offsets.iter().any(|o| !(*o >= 0.0)) || !(self.ball_radius > 0.0) {
            return bad("offsets must be nonnegative and the ball radius positive");
        }
        if self.probes.iter().any(|p| !(p.rho > 0.0)) || self.threads == Some(0) {
            return bad("probe radii and thread count must be positive");
        }
        self.grid.validate()?;
        self.initial.validate()?;
        self.base.validate()
    }

    /// Center of the initial data, where the ball masses are taken.
    pub fn ball_center(&self) -> Point {
        match self.initial {
            InitialData::Gaussian { center, .. }
            | InitialData::Annulus { center, .. }
            | InitialData::TwoBump { center, .. } => center,
            InitialData::Constant { .. } => match self.grid {
                GridSpec::Radial { .. } => [0.0, 0.0],
                GridSpec::Rect { width, height, .. } => [0.5 * width, 0.5 * height],
            },
        }
    }

    pub fn run_config(&self, reg: RegKind) -> RunConfig {
        RunConfig {
            grid: self.grid,
            reg,
            initial: self.initial,
            noise: self.noise,
            solver: self.base.clone(),
            probes: self.probes.clone(),
            out_dir: None,
            seed: self.seed,
        }
    }
}

/// Per-run summary.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub kind: RegName,
    pub epsilon: f64,
    pub hash: String,
    pub failure: Option<String>,
    pub steps: usize,
    pub final_t: f64,
    pub mass_drift: f64,
    pub concentrated_at: Option<f64>,
    /// `max_t eps^{1.1} int u^{7/6}`, nonlinear diffusion only.
    pub max_u_power: f64,
    pub entropy_max_increase: f64,
    /// `max_t int_{B} u` over the ball at the plan's center.
    pub max_ball_mass: f64,
    /// Per probe: `max rho^2 |rate|` (cutoff) or the one-sided analogue.
    pub probe_rates: Vec<f64>,
    /// Largest patch modulus of the default cover.
    pub modulus: f64,
    pub continuity: f64,
    pub reidentifications: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchedTime {
    /// `tc+<offset>`, or `final` when the runs share no concentration time.
    pub label: String,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtomRow {
    pub kind: RegName,
    pub epsilon: f64,
    pub label: String,
    /// Snapshot time used.
    pub t: f64,
    pub detected: bool,
    pub center: Point,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub ratio: Option<f64>,
    pub no_atom: bool,
    pub beta_below_alpha: Option<bool>,
    pub quadratic_bound: Option<bool>,
}

impl AtomRow {
    pub fn present(&self) -> bool {
        self.detected && !self.no_atom
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendRow {
    pub kind: RegName,
    pub quantity: &'static str,
    pub label: String,
    pub q: f64,
    pub r0: f64,
    pub c: f64,
    pub rss: f64,
    pub points: usize,
    pub chosen: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceRow {
    pub epsilon: f64,
    pub t_pre: f64,
    pub l1_pre: f64,
    pub label: String,
    pub t_post: f64,
    pub l1_post: f64,
    /// `|int_B u_cutoff - int_B u_nonlinear|` at `t_post`.
    pub ball_diff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyRow {
    pub kind: RegName,
    pub eps1: f64,
    pub eps2: f64,
    pub t: f64,
    pub l1: f64,
    /// `l1 / max(eps1, eps2)`.
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub name: String,
    pub value: f64,
    pub gate: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub plan_hash: String,
    /// Latest first-flag time over the runs, when every run was flagged.
    pub t_concentration: Option<f64>,
    pub matched: Vec<MatchedTime>,
    pub runs: Vec<RunRow>,
    pub atoms: Vec<AtomRow>,
    pub trends: Vec<TrendRow>,
    pub divergence: Vec<DivergenceRow>,
    pub consistency: Vec<ConsistencyRow>,
    pub verdicts: Vec<Verdict>,
}

impl SweepReport {
    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    pub fn run(&self, kind: RegName, epsilon: f64) -> Option<&RunRow> {
        self.runs.iter().find(|r| r.kind == kind && r.epsilon == epsilon)
    }
}

/// Least squares `r0 + c eps^q`; returns `(r0, c, rss)`.
pub fn fit_trend(eps: &[f64], y: &[f64], q: f64) -> Option<(f64, f64, f64)> {
    let n = eps.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let x: Vec<f64> = eps.iter().map(|e| e.powf(q)).collect();
    let (mx, my) = (x.iter().sum::<f64>() / n as f64, y.iter().sum::<f64>() / n as f64);
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let c = sxy / sxx;
    let r0 = my - c * mx;
    let rss = x.iter().zip(y).map(|(a, b)| (b - r0 - c * a).powi(2)).sum();
    Some((r0, c, rss))
}

pub const TREND_EXPONENTS: [f64; 2] = [0.5, 1.0];

fn l1_distance(a: &Density, b: &Density) -> f64 {
    let vols = a.volumes();
    a.values().iter().zip(b.values()).zip(&vols).map(|((x, y), v)| (x - y).abs() * v).sum()
}

/// Latest stored snapshot strictly before `t` (the first one otherwise).
fn snapshot_before(traj: &Trajectory, t: f64) -> &solver::Snapshot {
    traj.snapshots.iter().rev().find(|s| s.t < t).unwrap_or(&traj.snapshots[0])
}

fn spread(xs: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    if lo > 0.0 {
        hi / lo
    } else if hi == 0.0 {
        1.0
    } else {
        f64::INFINITY
    }
}

struct Job {
    kind: RegName,
    epsilon: f64,
    reg: RegKind,
    hash: String,
    config_text: String,
}

fn summarize(plan: &SweepPlan, job: &Job, traj: &Trajectory) -> RunRow {
    let center = plan.ball_center();
    let r = plan.ball_radius;
    let probe_rates = plan
        .probes
        .iter()
        .map(|p| match local_mass_rate(traj, *p) {
            Ok(rows) => rows
                .iter()
                .map(|row| row.one_sided.unwrap_or(row.scaled))
                .fold(0.0, f64::max),
            Err(_) => f64::NAN,
        })
        .collect();
    let modulus = Cover::default_for(&traj.snapshots[0].u)
        .and_then(|c| mass_change_modulus(traj, &c))
        .map(|m| m.into_iter().fold(0.0, f64::max))
        .unwrap_or(f64::NAN);
    let cont = singular_set_continuity_check(&center_series(traj, r), 4.0 * r);
    RunRow {
        kind: job.kind,
        epsilon: job.epsilon,
        hash: job.hash.clone(),
        failure: traj.failure.clone(),
        steps: traj.steps,
        final_t: traj.last().t,
        mass_drift: traj.max_mass_drift,
        concentrated_at: traj.concentrated_at,
        max_u_power: match job.kind {
            RegName::Nonlinear => traj.max_u_power,
            RegName::Cutoff => f64::NAN,
        },
        entropy_max_increase: traj.entropy_max_increase,
        max_ball_mass: traj
            .snapshots
            .iter()
            .map(|s| ball_integral(&s.u, center, r, |x| x))
            .fold(0.0, f64::max),
        probe_rates,
        modulus,
        continuity: cont.max_modulus,
        reidentifications: cont.reidentifications,
    }
}

fn failed_row(job: &Job, msg: String) -> RunRow {
    RunRow {
        kind: job.kind,
        epsilon: job.epsilon,
        hash: job.hash.clone(),
        failure: Some(msg),
        steps: 0,
        final_t: 0.0,
        mass_drift: f64::NAN,
        concentrated_at: None,
        max_u_power: f64::NAN,
        entropy_max_increase: f64::NAN,
        max_ball_mass: f64::NAN,
        probe_rates: Vec::new(),
        modulus: f64::NAN,
        continuity: f64::NAN,
        reidentifications: 0,
    }
}

/// Runs every (regularization, eps) pair of the plan and assembles the
/// report. With `out`, per-run artifacts go to `out/runs/<hash>/` and the
/// report to `out/sweeps/<hash>/`.
pub fn run_sweep(plan: &SweepPlan, out: Option<&Path>) -> Result<SweepReport> {
    plan.validate()?;
    let u0 = plan.initial.build(&plan.grid, plan.noise, plan.seed)?;
    let mut jobs = Vec::new();
    for &kind in &plan.kinds {
        for &epsilon in &plan.epsilons {
            let reg = kind.with_epsilon(epsilon)?;
            let config_text = plan.run_config(reg).emit();
            jobs.push(Job { kind, epsilon, reg, hash: config_hash(&config_text), config_text });
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
    let results: Vec<(RunRow, Option<Trajectory>)> = pool.install(|| {
        jobs.par_iter()
            .map(|job| match solver::run(&plan.base, job.reg, u0.clone()) {
                Ok(traj) => (summarize(plan, job, &traj), Some(traj)),
                Err(e) => (failed_row(job, e.to_string()), None),
            })
            .collect()
    });
    if let Some(root) = out {
        for (job, (_, traj)) in jobs.iter().zip(&results) {
            let dir = Manifest::new("run", job.config_text.clone(), plan.seed).materialize(root, "runs")?;
            if let Some(traj) = traj {
                let mut buf = Vec::new();
                solver::io::write_diagnostics(&mut buf, &traj.diagnostics)?;
                write_csv(&dir, "diagnostics.csv", &String::from_utf8_lossy(&buf), report::DIAG_SCHEMA)?;
            }
        }
    }
    let report = assemble(plan, &jobs, results)?;
    if let Some(root) = out {
        let dir = Manifest::new("sweep", emit_plan(plan), plan.seed).materialize(root, "sweeps")?;
        report::write_report(&report, &dir)?;
    }
    Ok(report)
}

fn assemble(plan: &SweepPlan, jobs: &[Job], results: Vec<(RunRow, Option<Trajectory>)>) -> Result<SweepReport> {
    let ok: Vec<(&Job, &Trajectory)> = jobs
        .iter()
        .zip(&results)
        .filter_map(|(j, (_, t))| t.as_ref().filter(|t| t.failure.is_none()).map(|t| (j, t)))
        .collect();
    let mut surviving: Vec<f64> = ok.iter().map(|(j, _)| j.epsilon).collect();
    surviving.sort_by(|a, b| b.partial_cmp(a).unwrap());
    surviving.dedup();
    if surviving.len() < 2 {
        return Err(Error::Invalid(format!(
            "only {} epsilon value(s) survived; the trend fit needs two",
            surviving.len()
        )));
    }
    let runs: Vec<RunRow> = results.iter().map(|(r, _)| r.clone()).collect();

    let flags: Vec<Option<f64>> = ok.iter().map(|(_, t)| t.concentrated_at).collect();
    let t_concentration = if flags.iter().all(|f| f.is_some()) {
        flags.iter().flatten().copied().reduce(f64::max)
    } else {
        None
    };
    let t_end = plan.base.t_end;
    let matched: Vec<MatchedTime> = match t_concentration {
        Some(tc) => plan
            .offsets
            .iter()
            .filter(|&&o| tc + o <= t_end + 1e-12)
            .map(|&o| MatchedTime { label: format!("tc+{o}"), t: tc + o })
            .collect(),
        None => vec![MatchedTime { label: "final".into(), t: t_end }],
    };

    let center = plan.ball_center();
    let mut atoms = Vec::new();
    for (job, traj) in &ok {
        for m in &matched {
            let snap = traj.at(m.t);
            let found = detect_concentrations(&snap.u, M0_INTERIOR, plan.ball_radius);
            let c = found.first().copied().unwrap_or(center);
            let est = atom_estimate(&snap.u, job.reg, c, &plan.ladder);
            atoms.push(AtomRow {
                kind: job.kind,
                epsilon: job.epsilon,
                label: m.label.clone(),
                t: snap.t,
                detected: !found.is_empty(),
                center: c,
                alpha: est.plateau_alpha,
                beta: est.plateau_beta,
                ratio: est.ratio,
                no_atom: est.no_atom,
                beta_below_alpha: est.beta_below_alpha,
                quadratic_bound: est.quadratic_bound,
            });
        }
    }

    let mut trends = Vec::new();
    for &kind in &plan.kinds {
        for m in &matched {
            let rows: Vec<&AtomRow> =
                atoms.iter().filter(|a| a.kind == kind && a.label == m.label && a.present()).collect();
            let quantities: Vec<(&'static str, fn(&AtomRow) -> Option<f64>)> = match kind {
                RegName::Cutoff => vec![("alpha", |a| a.alpha), ("beta", |a| a.beta)],
                RegName::Nonlinear => vec![("alpha", |a| a.alpha), ("beta", |a| a.beta), ("ratio", |a| a.ratio)],
            };
            for (name, get) in quantities {
                let pts: Vec<(f64, f64)> = rows.iter().filter_map(|a| get(a).map(|y| (a.epsilon, y))).collect();
                let (e, y): (Vec<f64>, Vec<f64>) = pts.iter().copied().unzip();
                let fits: Vec<(f64, (f64, f64, f64))> =
                    TREND_EXPONENTS.iter().filter_map(|&q| fit_trend(&e, &y, q).map(|f| (q, f))).collect();
                // ties go to the first exponent
                let best = fits
                    .iter()
                    .enumerate()
                    .fold(None::<(usize, f64)>, |acc, (k, f)| match acc {
                        Some((_, r)) if r <= f.1 .2 => acc,
                        _ => Some((k, f.1 .2)),
                    })
                    .map(|b| b.0);
                for (k, (q, (r0, c, rss))) in fits.iter().enumerate() {
                    trends.push(TrendRow {
                        kind,
                        quantity: name,
                        label: m.label.clone(),
                        q: *q,
                        r0: *r0,
                        c: *c,
                        rss: *rss,
                        points: pts.len(),
                        chosen: best == Some(k),
                    });
                }
            }
        }
    }

    let find = |kind: RegName, eps: f64| ok.iter().find(|(j, _)| j.kind == kind && j.epsilon == eps).map(|x| x.1);
    let mut divergence = Vec::new();
    for &eps in &plan.epsilons {
        let (Some(a), Some(b)) = (find(RegName::Cutoff, eps), find(RegName::Nonlinear, eps)) else { continue };
        let first_flag = [a.concentrated_at, b.concentrated_at].into_iter().flatten().reduce(f64::min);
        let pre_t = first_flag.unwrap_or(t_end);
        let (sa, sb) = (snapshot_before(a, pre_t), snapshot_before(b, pre_t));
        let l1_pre = l1_distance(&sa.u, &sb.u);
        for m in &matched {
            let (pa, pb) = (a.at(m.t), b.at(m.t));
            divergence.push(DivergenceRow {
                epsilon: eps,
                t_pre: sa.t,
                l1_pre,
                label: m.label.clone(),
                t_post: pa.t,
                l1_post: l1_distance(&pa.u, &pb.u),
                ball_diff: (ball_integral(&pa.u, center, plan.ball_radius, |x| x)
                    - ball_integral(&pb.u, center, plan.ball_radius, |x| x))
                .abs(),
            });
        }
    }

    let mut consistency = Vec::new();
    for &kind in &plan.kinds {
        let trajs: Vec<(f64, &Trajectory)> =
            plan.epsilons.iter().filter_map(|&e| find(kind, e).map(|t| (e, t))).collect();
        let earliest = trajs.iter().filter_map(|(_, t)| t.concentrated_at).reduce(f64::min).unwrap_or(t_end);
        for w in trajs.windows(2) {
            let (s1, s2) = (snapshot_before(w[0].1, earliest), snapshot_before(w[1].1, earliest));
            if s1.t <= 0.0 || s1.t != s2.t {
                continue;
            }
            let l1 = l1_distance(&s1.u, &s2.u);
            consistency.push(ConsistencyRow {
                kind,
                eps1: w[0].0,
                eps2: w[1].0,
                t: s1.t,
                l1,
                c: l1 / w[0].0.max(w[1].0),
            });
        }
    }

    let mut report = SweepReport {
        plan_hash: config_hash(&emit_plan(plan)),
        t_concentration,
        matched,
        runs,
        atoms,
        trends,
        divergence,
        consistency,
        verdicts: Vec::new(),
    };
    report.verdicts = verdicts(plan, &report);
    Ok(report)
}

fn verdicts(plan: &SweepPlan, rep: &SweepReport) -> Vec<Verdict> {
    let mut out = Vec::new();
    let mut push = |name: String, value: f64, gate: &str, pass: bool| {
        out.push(Verdict { name, value, gate: gate.into(), pass })
    };
    let ok: Vec<&RunRow> = rep.runs.iter().filter(|r| r.failure.is_none()).collect();
    let drift = ok.iter().map(|r| r.mass_drift).fold(0.0, f64::max);
    push("mass_drift".into(), drift, "<= 1e-12", drift <= 1e-12);
    push("failed_runs".into(), (rep.runs.len() - ok.len()) as f64, "== 0", ok.len() == rep.runs.len());

    for &kind in &plan.kinds {
        let rows: Vec<&&RunRow> = ok.iter().filter(|r| r.kind == kind).collect();
        let k = kind.as_str();
        if kind == RegName::Nonlinear {
            let inc = rows.iter().map(|r| r.entropy_max_increase).fold(f64::NEG_INFINITY, f64::max);
            if inc.is_finite() {
                push("entropy_max_increase".into(), inc, "<= 1e-3", inc <= 1e-3);
            }
            let s = spread(rows.iter().map(|r| r.max_u_power));
            push("u_power_spread".into(), s, "<= 3", s <= 3.0);
        }
        for (i, p) in plan.probes.iter().enumerate() {
            let s = spread(rows.iter().map(|r| r.probe_rates.get(i).copied().unwrap_or(f64::NAN)));
            push(format!("rate_spread_{k}_rho{}", p.rho), s, "<= 2", s <= 2.0);
        }
        let s = spread(rows.iter().map(|r| r.modulus));
        push(format!("modulus_spread_{k}"), s, "<= 2", s <= 2.0);
        let above = rows.iter().filter(|r| r.max_ball_mass > 8.0 * PI).count();
        push(format!("ball_mass_above_8pi_{k}"), above as f64, "all runs", above == rows.len());
        let atoms: Vec<&AtomRow> = rep.atoms.iter().filter(|a| a.kind == kind).collect();
        let present = atoms.iter().filter(|a| a.present()).count();
        push(format!("atoms_present_{k}"), present as f64, "informational", true);
        match kind {
            RegName::Cutoff => {
                let below = atoms.iter().all(|a| a.beta_below_alpha != Some(false));
                push("beta_below_alpha".into(), below as u8 as f64, "all rows", below);
                let quad = atoms.iter().all(|a| a.quadratic_bound != Some(false));
                push("quadratic_bound".into(), quad as u8 as f64, "all rows", quad);
                // among atoms above 8 pi, alpha - beta grows as eps decreases
                let mut qualifying = 0usize;
                let mut monotone = true;
                for m in &rep.matched {
                    let seq: Vec<f64> = plan
                        .epsilons
                        .iter()
                        .filter_map(|&e| atoms.iter().find(|a| a.epsilon == e && a.label == m.label))
                        .filter(|a| a.present() && a.alpha.map_or(false, |x| x > 8.0 * PI))
                        .filter_map(|a| Some(a.alpha? - a.beta?))
                        .collect();
                    qualifying = qualifying.max(seq.len());
                    monotone &= seq.windows(2).all(|w| w[1] > w[0]);
                }
                push("alpha_minus_beta_increasing".into(), qualifying as f64, "qualifying eps count", monotone);
            }
            RegName::Nonlinear => {
                let r0 = rep
                    .trends
                    .iter()
                    .filter(|t| t.kind == kind && t.quantity == "ratio" && t.chosen)
                    .map(|t| t.r0)
                    .collect::<Vec<_>>();
                let worst = r0.iter().copied().fold(f64::NAN, |acc, x| {
                    if acc.is_nan() || (x - 1.0).abs() > (acc - 1.0).abs() {
                        x
                    } else {
                        acc
                    }
                });
                push("ratio_r0".into(), worst, "in [0.85, 1.15]", (0.85..=1.15).contains(&worst));
            }
        }
    }

    let mut small: Vec<f64> = rep.divergence.iter().map(|d| d.epsilon).collect();
    small.sort_by(|a, b| a.partial_cmp(b).unwrap());
    small.dedup();
    small.truncate(2);
    if !small.is_empty() {
        let worst = rep
            .divergence
            .iter()
            .filter(|d| small.contains(&d.epsilon) && d.label != "final")
            .map(|d| if d.l1_pre > 0.0 { d.l1_post / d.l1_pre } else { f64::INFINITY })
            .fold(f64::INFINITY, f64::min);
        push("divergence_ratio".into(), worst, "> 10", worst > 10.0);
    }
    for &kind in &plan.kinds {
        let s = spread(rep.consistency.iter().filter(|c| c.kind == kind).map(|c| c.c));
        if s.is_finite() {
            push(format!("consistency_c_spread_{}", kind.as_str()), s, "<= 10", s <= 10.0);
        }
    }
    out
}
