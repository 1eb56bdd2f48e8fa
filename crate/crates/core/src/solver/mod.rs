//! Time integration of the two regularized Keller-Segel systems.
//!
//! Both backends share one explicit, conservative step: solve for `v` from
//! the current `u`, then move mass across faces with central diffusive and
//! upwind advective fluxes. Boundary faces carry no flux.

mod dct;
mod field;
pub mod io;
mod radial;
mod rect;

use std::sync::Arc;

pub use dct::Dct;
pub use field::{Density, Field, RadialField, RadialGrid};
pub use radial::radial_potential;
pub use rect::RectPoisson;

use crate::error::{Error, Result};

/// Which regularization is integrated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegKind {
    /// Advective density `u` replaced by `f_eps(u)`.
    CutoffFlux { epsilon: f64 },
    /// Extra diffusion `eps Lap u^{7/6}`.
    NonlinearDiffusion { epsilon: f64 },
}

impl RegKind {
    pub fn cutoff(epsilon: f64) -> Result<Self> {
        Self::check(epsilon)?;
        Ok(RegKind::CutoffFlux { epsilon })
    }

    pub fn nonlinear(epsilon: f64) -> Result<Self> {
        Self::check(epsilon)?;
        Ok(RegKind::NonlinearDiffusion { epsilon })
    }

    fn check(epsilon: f64) -> Result<()> {
        if epsilon > 0.0 && epsilon.is_finite() {
            Ok(())
        } else {
            Err(Error::Invalid(format!("epsilon = {epsilon} must be positive")))
        }
    }

    pub fn epsilon(&self) -> f64 {
        match *self {
            RegKind::CutoffFlux { epsilon } | RegKind::NonlinearDiffusion { epsilon } => epsilon,
        }
    }

    pub fn code(&self) -> u8 {
        match self {
            RegKind::CutoffFlux { .. } => 0,
            RegKind::NonlinearDiffusion { .. } => 1,
        }
    }

    pub fn from_code(code: u8, epsilon: f64) -> Result<Self> {
        match code {
            0 => Self::cutoff(epsilon),
            1 => Self::nonlinear(epsilon),
            _ => Err(Error::Invalid(format!("regularization code {code}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RegKind::CutoffFlux { .. } => "cutoff_flux",
            RegKind::NonlinearDiffusion { .. } => "nonlinear_diffusion",
        }
    }

    /// Density the chemoattractant is produced from and advected with.
    pub fn source_density(&self, u: f64) -> f64 {
        match *self {
            RegKind::CutoffFlux { epsilon } => f_eps_unchecked(u, epsilon),
            RegKind::NonlinearDiffusion { .. } => u,
        }
    }
}

pub(crate) fn f_eps_unchecked(u: f64, epsilon: f64) -> f64 {
    let b = 1.0 / epsilon;
    let a = (b - 1.0).max(0.0);
    if u <= a {
        u
    } else if u < b {
        a + 0.5 * ((b - a) * (b - a) - (b - u) * (b - u))
    } else {
        a + 0.5 * (b - a) * (b - a)
    }
}

/// `f_eps(u) = int_0^u min{1, (1/eps - s)_+} ds`.
pub fn f_eps(u: f64, epsilon: f64) -> Result<f64> {
    if u < 0.0 {
        return Err(Error::Negative(u));
    }
    Ok(f_eps_unchecked(u, epsilon))
}

/// `F_eps(u) = int_0^u f_eps(s) ds`.
pub fn big_f_eps(u: f64, epsilon: f64) -> Result<f64> {
    if u < 0.0 {
        return Err(Error::Negative(u));
    }
    let b = 1.0 / epsilon;
    let a = (b - 1.0).max(0.0);
    let top = a + 0.5 * (b - a) * (b - a);
    let ramp = |x: f64| top * (x - a) + ((b - x).powi(3) - (b - a).powi(3)) / 6.0;
    Ok(if u <= a {
        0.5 * u * u
    } else if u < b {
        0.5 * a * a + ramp(u)
    } else {
        0.5 * a * a + ramp(b) + top * (u - b)
    })
}

/// Flux switches resolved from the regularization and the config.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Switches {
    pub advection: bool,
    /// `eps` of the `u^{7/6}` diffusion, zero when inactive.
    pub eps_diffusion: f64,
    /// `eps` of the flux cutoff, `None` for plain `u`.
    pub cutoff: Option<f64>,
}

impl Switches {
    fn new(reg: RegKind, cfg: &SolverConfig) -> Self {
        match reg {
            RegKind::CutoffFlux { epsilon } => {
                Self { advection: cfg.advection, eps_diffusion: 0.0, cutoff: Some(epsilon) }
            }
            RegKind::NonlinearDiffusion { epsilon } => Self {
                advection: cfg.advection,
                eps_diffusion: if cfg.nonlinear_diffusion_term { epsilon } else { 0.0 },
                cutoff: None,
            },
        }
    }

    #[inline]
    pub fn advected(&self, u: f64) -> f64 {
        match self.cutoff {
            Some(e) => f_eps_unchecked(u, e),
            None => u,
        }
    }
}

/// Spatial discretization behind the shared time loop.
pub(crate) trait Scheme: Send {
    fn volumes(&self) -> &[f64];
    /// Cell values of the current potential.
    fn potential(&self) -> &[f64];
    /// Solves `-Lap v = g` (mean-zero `g`) and stores face gradients.
    fn set_source(&mut self, g: &[f64]);
    /// Largest outflow rate over cells; an explicit step is positive for
    /// `dt <= 1 / rate`.
    /// `root6` holds `u^{1/6}` per cell.
    fn rate_bound(&self, u: &[f64], root6: &[f64], sw: &Switches) -> f64;
    fn advance(&mut self, u: &mut [f64], root6: &[f64], dt: f64, sw: &Switches);
    /// `(int |grad v|^2, dissipation)` from the stored face gradients.
    fn field_energy_and_dissipation(&self, c: &CellTerms, eps: f64) -> (f64, f64);
}

/// Dissipation density `u |grad mu - grad v|^2` on one face, with
/// `mu = log u + 7 eps u^{1/6}` and the logarithmic mean of the two cells;
/// a zero cell uses `4 |grad sqrt u|^2` for the logarithmic part.
pub(crate) fn face_dissipation(c: &CellTerms, i: usize, j: usize, w: f64, h: f64, eps: f64) -> f64 {
    let (a, b) = (c.u[i], c.u[j]);
    let extra = 7.0 * eps * (c.root6[j] - c.root6[i]) / h;
    if a > 0.0 && b > 0.0 {
        let dl = c.ln[j] - c.ln[i];
        let mean = if dl.abs() < 1e-12 { 0.5 * (a + b) } else { (b - a) / dl };
        let g = dl / h + extra - w;
        mean * g * g
    } else {
        let s = (b.sqrt() - a.sqrt()) / h;
        let g = extra - w;
        4.0 * s * s + 0.5 * (a + b) * g * g
    }
}

/// Per-cell values shared by the face loops.
pub(crate) struct CellTerms<'a> {
    pub u: &'a [f64],
    pub ln: Vec<f64>,
    pub root6: Vec<f64>,
}

impl<'a> CellTerms<'a> {
    fn new(u: &'a [f64]) -> Self {
        let ln = u.iter().map(|&x| if x > 0.0 { x.ln() } else { 0.0 }).collect();
        Self { u, ln, root6: root6(u) }
    }
}

pub(crate) fn root6(u: &[f64]) -> Vec<f64> {
    u.iter().map(|&x| x.max(0.0).sqrt().cbrt()).collect()
}

/// Face diffusivity `1 + eps (7/6) u^{1/6}`, averaged over the two cells.
#[inline]
pub(crate) fn diffusivity(sw: &Switches, ra: f64, rb: f64) -> f64 {
    if sw.eps_diffusion > 0.0 {
        1.0 + sw.eps_diffusion * (7.0 / 12.0) * (ra + rb)
    } else {
        1.0
    }
}

/// Neumaier-compensated sum in slice order.
pub(crate) fn compensated_sum(it: impl Iterator<Item = f64>) -> f64 {
    let mut s = 0.0f64;
    let mut c = 0.0f64;
    for x in it {
        let t = s + x;
        c += if s.abs() >= x.abs() { (s - t) + x } else { (x - t) + s };
        s = t;
    }
    s + c
}

pub fn weighted_sum(values: &[f64], volumes: &[f64]) -> f64 {
    compensated_sum(values.iter().zip(volumes).map(|(u, v)| u * v))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtPolicy {
    Fixed(f64),
    /// Safety factor in `(0, 1]` times the positivity limit.
    Cfl(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub dt: DtPolicy,
    pub t_end: f64,
    /// Time between stored snapshots.
    pub snapshot_interval: f64,
    /// Steps between diagnostics rows.
    pub diag_every: usize,
    pub max_steps: usize,
    pub positivity_tol: f64,
    /// Allowed `|mean(rhs)|` in the Poisson solve, relative to `max |rhs|`.
    pub elliptic_tol: f64,
    pub dt_min: f64,
    pub stop_on_concentration: bool,
    pub advection: bool,
    pub nonlinear_diffusion_term: bool,
    /// Evaluate the entropy at every step and track its largest increase.
    pub entropy_every_step: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: DtPolicy::Cfl(0.9),
            t_end: 0.1,
            snapshot_interval: 0.01,
            diag_every: 100,
            max_steps: 50_000_000,
            positivity_tol: 1e-13,
            elliptic_tol: 1e-10,
            dt_min: 1e-12,
            stop_on_concentration: true,
            advection: true,
            nonlinear_diffusion_term: true,
            entropy_every_step: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        match self.dt {
            DtPolicy::Fixed(dt) if !(dt >= 0.0) => {
                return Err(Error::Invalid(format!("dt = {dt}")));
            }
            DtPolicy::Cfl(s) if !(s > 0.0 && s <= 1.0) => {
                return Err(Error::Invalid(format!("CFL safety {s} outside (0, 1]")));
            }
            _ => {}
        }
        if !(self.t_end >= 0.0) || !(self.snapshot_interval > 0.0) || self.diag_every == 0 {
            return Err(Error::Invalid("t_end, snapshot interval and diagnostics cadence".into()));
        }
        Ok(())
    }
}

/// Level of `u` above which a run is flagged as concentrated.
pub fn concentration_level(reg: RegKind) -> f64 {
    0.8 / reg.epsilon()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunState {
    pub u: Density,
    pub v: Density,
    pub t: f64,
    pub reg: RegKind,
    /// `(t, h(t))` at diagnostics cadence.
    pub mean_source: Vec<(f64, f64)>,
}

impl RunState {
    pub fn new(u: Density, reg: RegKind) -> Self {
        let mut v = u.clone();
        v.values_mut().iter_mut().for_each(|x| *x = 0.0);
        Self { u, v, t: 0.0, reg, mean_source: Vec::new() }
    }
}

fn scheme_for(u: &Density) -> Result<Box<dyn Scheme>> {
    Ok(match u {
        Density::Rect(f) => {
            if f.nx < 2 || f.ny < 2 {
                return Err(Error::Invalid(format!("rectangle grid {} x {}", f.nx, f.ny)));
            }
            Box::new(rect::RectScheme::new(f.nx, f.ny, f.hx, f.hy))
        }
        Density::Radial(f) => {
            if f.grid.n < 2 {
                return Err(Error::Invalid("radial grid needs two cells".into()));
            }
            Box::new(radial::RadialScheme::new(Arc::clone(&f.grid)))
        }
    })
}

/// Solves `-Lap v = rhs` with homogeneous Neumann data and `mean(v) = 0`.
pub fn solve_poisson_neumann(rhs: &Density, tol: f64) -> Result<Density> {
    let vals = rhs.values();
    let vols = rhs.volumes();
    let mean = weighted_sum(vals, &vols) / compensated_sum(vols.iter().copied());
    let scale = vals.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    if mean.abs() > tol * scale {
        return Err(Error::NonZeroMean(mean));
    }
    let mut scheme = scheme_for(rhs)?;
    scheme.set_source(vals);
    let mut out = rhs.clone();
    out.values_mut().copy_from_slice(scheme.potential());
    Ok(out)
}

/// Entropy pieces at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyValue {
    pub entropy: f64,
    pub dissipation: f64,
}

/// Stepper bound to one grid and regularization.
pub struct Solver {
    scheme: Box<dyn Scheme>,
    reg: RegKind,
    sw: Switches,
    cfg: SolverConfig,
    g: Vec<f64>,
    root6: Vec<f64>,
    h_t: f64,
}

/// Outcome of one accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub dt: f64,
    pub dt_limit: f64,
    pub h_t: f64,
}

impl Solver {
    pub fn new(u: &Density, reg: RegKind, cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let n = u.values().len();
        Ok(Self { scheme: scheme_for(u)?, reg, sw: Switches::new(reg, &cfg), cfg, g: vec![0.0; n], root6: vec![0.0; n], h_t: 0.0 })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// Solves for `v` from `u`, returning the mean source `h(t)`.
    pub fn update_potential(&mut self, u: &[f64]) -> f64 {
        let vols = self.scheme.volumes();
        for (g, &x) in self.g.iter_mut().zip(u) {
            *g = self.reg.source_density(x);
        }
        let first = self.g[0];
        let h = if self.g.iter().all(|&x| x == first) {
            first
        } else {
            weighted_sum(&self.g, vols) / compensated_sum(vols.iter().copied())
        };
        self.g.iter_mut().for_each(|x| *x -= h);
        self.scheme.set_source(&self.g);
        self.h_t = h;
        h
    }

    pub fn potential(&self) -> &[f64] {
        self.scheme.potential()
    }

    pub fn volumes(&self) -> &[f64] {
        self.scheme.volumes()
    }

    /// Largest positivity-preserving step for `u` with the current potential.
    pub fn dt_limit(&mut self, u: &[f64]) -> f64 {
        if self.sw.eps_diffusion > 0.0 {
            for (r, &x) in self.root6.iter_mut().zip(u) {
                *r = x.max(0.0).sqrt().cbrt();
            }
        }
        let r = self.scheme.rate_bound(u, &self.root6, &self.sw);
        if r > 0.0 {
            1.0 / r
        } else {
            f64::INFINITY
        }
    }

    /// Entropy and dissipation of `u` against the current potential.
    pub fn entropy(&self, u: &[f64], eps: f64) -> EntropyValue {
        let vols = self.scheme.volumes();
        let c = CellTerms::new(u);
        let bulk = compensated_sum((0..u.len()).map(|k| {
            let x = u[k].max(0.0);
            vols[k] * (x * (c.ln[k] - 1.0) + 6.0 * eps * x * c.root6[k])
        }));
        let (grad2, dissipation) = self.scheme.field_energy_and_dissipation(&c, eps);
        EntropyValue { entropy: bulk - 0.5 * grad2, dissipation }
    }

    /// One explicit step: potential from the current `u`, then the update.
    pub fn step(&mut self, state: &mut RunState, dt: f64) -> Result<StepInfo> {
        let h_t = self.update_potential(state.u.values());
        state.v.values_mut().copy_from_slice(self.scheme.potential());
        self.advance_with_current_potential(state, dt, h_t)
    }

    fn advance_with_current_potential(&mut self, state: &mut RunState, dt: f64, h_t: f64) -> Result<StepInfo> {
        let limit = self.dt_limit(state.u.values());
        if dt > limit * (1.0 + 1e-12) {
            return Err(Error::Cfl { dt, limit });
        }
        self.scheme.advance(state.u.values_mut(), &self.root6, dt, &self.sw);
        let min = state.u.values().iter().copied().fold(f64::INFINITY, f64::min);
        if min < -self.cfg.positivity_tol {
            return Err(Error::Positivity { min });
        }
        state.t += dt;
        Ok(StepInfo { dt, dt_limit: limit, h_t })
    }
}

/// One row of the per-step diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagRow {
    pub t: f64,
    pub mass: f64,
    pub min_u: f64,
    pub max_u: f64,
    pub entropy: f64,
    pub dissipation: f64,
    pub h_t: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub u: Density,
    pub h_t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Completed,
    Concentrated,
    Failed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub reg: RegKind,
    pub config: SolverConfig,
    pub snapshots: Vec<Snapshot>,
    pub diagnostics: Vec<DiagRow>,
    pub steps: usize,
    pub mass0: f64,
    /// Largest `|mass - mass0| / mass0` over all steps.
    pub max_mass_drift: f64,
    /// First time `max u` crossed the concentration level.
    pub concentrated_at: Option<f64>,
    pub stop: StopReason,
    pub failure: Option<String>,
    /// Largest `(E_{n+1} - E_n) / (|E_n| dt)` over steps, when tracked.
    pub entropy_max_increase: f64,
    /// Largest `eps^{1.1} int u^{7/6}` seen at diagnostics cadence.
    pub max_u_power: f64,
}

impl Trajectory {
    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("trajectory has the initial snapshot")
    }

    /// Snapshot closest to time `t`.
    pub fn at(&self, t: f64) -> &Snapshot {
        self.snapshots
            .iter()
            .min_by(|a, b| (a.t - t).abs().partial_cmp(&(b.t - t).abs()).unwrap())
            .expect("trajectory has the initial snapshot")
    }
}

/// Entropy weight for the regularization: the `u^{7/6}` term belongs to the
/// nonlinear diffusion only.
pub fn entropy_epsilon(reg: RegKind) -> f64 {
    match reg {
        RegKind::CutoffFlux { .. } => 0.0,
        RegKind::NonlinearDiffusion { epsilon } => epsilon,
    }
}

/// Integrates from `u0` to `t_end`, storing snapshots every
/// `snapshot_interval` and diagnostics every `diag_every` steps.
pub fn run(config: &SolverConfig, reg: RegKind, u0: Density) -> Result<Trajectory> {
    let mut solver = Solver::new(&u0, reg, config.clone())?;
    if u0.values().iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::Invalid("initial data must be finite and nonnegative".into()));
    }
    let vols = solver.volumes().to_vec();
    let mass0 = weighted_sum(u0.values(), &vols);
    let eps_e = entropy_epsilon(reg);
    let level = concentration_level(reg);
    let mut state = RunState::new(u0, reg);
    let mut traj = Trajectory {
        reg,
        config: config.clone(),
        snapshots: Vec::new(),
        diagnostics: Vec::new(),
        steps: 0,
        mass0,
        max_mass_drift: 0.0,
        concentrated_at: None,
        stop: StopReason::Completed,
        failure: None,
        entropy_max_increase: f64::NEG_INFINITY,
        max_u_power: 0.0,
    };
    let u_power = |u: &[f64]| {
        reg.epsilon().powf(1.1) * compensated_sum(u.iter().zip(&vols).map(|(x, v)| v * { let y = x.max(0.0); y * y.sqrt().cbrt() }))
    };

    let mut h_t = solver.update_potential(state.u.values());
    state.v.values_mut().copy_from_slice(solver.potential());
    traj.snapshots.push(Snapshot { t: 0.0, u: state.u.clone(), h_t });
    let mut prev_e = solver.entropy(state.u.values(), eps_e);
    let push_diag = |traj: &mut Trajectory, state: &mut RunState, e: EntropyValue, h_t: f64| {
        let u = state.u.values();
        let (min_u, max_u) = u.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        traj.diagnostics.push(DiagRow {
            t: state.t,
            mass: weighted_sum(u, &vols),
            min_u,
            max_u,
            entropy: e.entropy,
            dissipation: e.dissipation,
            h_t,
        });
        traj.max_u_power = traj.max_u_power.max(u_power(u));
        state.mean_source.push((state.t, h_t));
    };
    push_diag(&mut traj, &mut state, prev_e, h_t);

    if let DtPolicy::Fixed(dt) = config.dt {
        if dt == 0.0 {
            traj.entropy_max_increase = 0.0;
            return Ok(traj);
        }
    }
    let mut next_snap = config.snapshot_interval;
    let t_end = config.t_end;
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs().max(1.0);
    while state.t < t_end && !close(state.t, t_end) {
        if traj.steps >= config.max_steps {
            traj.stop = StopReason::Failed;
            traj.failure = Some(format!("step budget {} exhausted at t = {}", config.max_steps, state.t));
            break;
        }
        let limit = solver.dt_limit(state.u.values());
        let mut dt = match config.dt {
            DtPolicy::Fixed(dt) => dt,
            DtPolicy::Cfl(s) => s * limit,
        };
        if let DtPolicy::Cfl(_) = config.dt {
            if dt < config.dt_min {
                traj.concentrated_at.get_or_insert(state.t);
                traj.stop = StopReason::Concentrated;
                break;
            }
        }
        dt = dt.min(t_end - state.t).min(next_snap - state.t);
        if let Err(e) = solver.advance_with_current_potential(&mut state, dt, h_t) {
            traj.stop = StopReason::Failed;
            traj.failure = Some(e.to_string());
            break;
        }
        traj.steps += 1;
        if close(state.t, next_snap) {
            state.t = next_snap;
        }
        if close(state.t, t_end) {
            state.t = t_end;
        }
        let u = state.u.values();
        let mass = weighted_sum(u, &vols);
        traj.max_mass_drift = traj.max_mass_drift.max((mass - mass0).abs() / mass0.abs().max(f64::MIN_POSITIVE));
        let max_u = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);

        h_t = solver.update_potential(state.u.values());
        state.v.values_mut().copy_from_slice(solver.potential());
        let want_diag = traj.steps % config.diag_every == 0;
        if config.entropy_every_step || want_diag {
            let e = solver.entropy(state.u.values(), eps_e);
            if config.entropy_every_step {
                let rate = (e.entropy - prev_e.entropy) / (prev_e.entropy.abs().max(1e-300) * dt);
                traj.entropy_max_increase = traj.entropy_max_increase.max(rate);
            }
            prev_e = e;
            if want_diag {
                push_diag(&mut traj, &mut state, e, h_t);
            }
        }
        if state.t >= next_snap || close(state.t, next_snap) {
            traj.snapshots.push(Snapshot { t: state.t, u: state.u.clone(), h_t });
            next_snap += config.snapshot_interval;
        }
        if max_u > level {
            traj.concentrated_at.get_or_insert(state.t);
            if config.stop_on_concentration {
                traj.stop = StopReason::Concentrated;
                break;
            }
        }
    }
    let last_t = traj.snapshots.last().map(|s| s.t);
    if last_t != Some(state.t) {
        traj.snapshots.push(Snapshot { t: state.t, u: state.u.clone(), h_t });
    }
    if traj.diagnostics.last().map(|d| d.t) != Some(state.t) {
        let e = solver.entropy(state.u.values(), eps_e);
        push_diag(&mut traj, &mut state, e, h_t);
    }
    if !config.entropy_every_step {
        traj.entropy_max_increase = f64::NAN;
    } else if traj.steps == 0 {
        traj.entropy_max_increase = 0.0;
    }
    Ok(traj)
}
