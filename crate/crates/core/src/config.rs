//! Flat `key = value` configuration files with `[section]` headers.
//!
//! `#` starts a comment. Lists are comma separated; probe lists are
//! `x y rho` triples separated by `;`. Every parse error names its line.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::diagnostics::Probe;
use crate::error::{Error, Result};
use crate::problem::{GridSpec, InitialData};
use crate::solver::{DtPolicy, RegKind, SolverConfig};
use crate::sweep::{RegName, SweepPlan};
use crate::Point;

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    line: usize,
    used: bool,
}

/// Parsed document: section -> key -> value.
#[derive(Debug, Clone, Default)]
pub struct ConfigDoc {
    sections: BTreeMap<String, (usize, BTreeMap<String, Entry>)>,
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Config { line, msg: msg.into() }
}

impl ConfigDoc {
    pub fn parse(text: &str) -> Result<Self> {
        let mut doc = ConfigDoc::default();
        let mut current: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let s = raw.split('#').next().unwrap_or("").trim();
            if s.is_empty() {
                continue;
            }
            if let Some(name) = s.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| err(line, "unterminated section header"))?.trim();
                if name.is_empty() || doc.sections.contains_key(name) {
                    return Err(err(line, format!("empty or repeated section [{name}]")));
                }
                doc.sections.insert(name.to_string(), (line, BTreeMap::new()));
                current = Some(name.to_string());
                continue;
            }
            let sec = current.as_ref().ok_or_else(|| err(line, "key outside of any section"))?;
            let (k, v) = s.split_once('=').ok_or_else(|| err(line, format!("expected key = value, got '{s}'")))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(err(line, "empty key"));
            }
            let map = &mut doc.sections.get_mut(sec).expect("section exists").1;
            if map.contains_key(k) {
                return Err(err(line, format!("repeated key '{k}'")));
            }
            map.insert(k.to_string(), Entry { value: v.to_string(), line, used: false });
        }
        Ok(doc)
    }

    fn section_line(&self, sec: &str) -> usize {
        self.sections.get(sec).map(|s| s.0).unwrap_or(0)
    }

    fn raw(&mut self, sec: &str, key: &str) -> Option<(String, usize)> {
        let e = self.sections.get_mut(sec)?.1.get_mut(key)?;
        e.used = true;
        Some((e.value.clone(), e.line))
    }

    fn opt<T: std::str::FromStr>(&mut self, sec: &str, key: &str) -> Result<Option<T>> {
        match self.raw(sec, key) {
            None => Ok(None),
            Some((v, line)) => {
                v.parse::<T>().map(Some).map_err(|_| err(line, format!("cannot parse {sec}.{key} = '{v}'")))
            }
        }
    }

    fn req<T: std::str::FromStr>(&mut self, sec: &str, key: &str) -> Result<T> {
        let line = self.section_line(sec);
        self.opt(sec, key)?.ok_or_else(|| err(line, format!("missing field {sec}.{key}")))
    }

    fn list(&mut self, sec: &str, key: &str) -> Result<Option<(Vec<f64>, usize)>> {
        match self.raw(sec, key) {
            None => Ok(None),
            Some((v, line)) => {
                let xs = v
                    .split(',')
                    .map(|t| t.trim())
                    .filter(|t| !t.is_empty())
                    .map(|t| t.parse::<f64>().map_err(|_| err(line, format!("cannot parse '{t}' in {sec}.{key}"))))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Some((xs, line)))
            }
        }
    }

    fn point(&mut self, sec: &str, key: &str) -> Result<Point> {
        match self.list(sec, key)? {
            None => Ok([0.0, 0.0]),
            Some((v, line)) if v.len() != 2 => Err(err(line, format!("{sec}.{key} needs two numbers"))),
            Some((v, _)) => Ok([v[0], v[1]]),
        }
    }

    fn probes(&mut self, sec: &str, key: &str) -> Result<Vec<Probe>> {
        let Some((v, line)) = self.raw(sec, key) else { return Ok(Vec::new()) };
        v.split(';')
            .map(|t| t.trim())
            .filter(|t| !t.is_empty())
            .map(|t| {
                let xs: Vec<f64> = t
                    .split_whitespace()
                    .map(|s| s.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| err(line, format!("cannot parse probe '{t}'")))?;
                if xs.len() != 3 || !(xs[2] > 0.0) {
                    return Err(err(line, format!("probe '{t}' must be 'x y rho' with rho > 0")));
                }
                Ok(Probe { x0: [xs[0], xs[1]], rho: xs[2] })
            })
            .collect()
    }

    /// Fails on the first key that no reader asked for.
    fn finish(&self) -> Result<()> {
        for (sec, (_, map)) in &self.sections {
            for (k, e) in map {
                if !e.used {
                    return Err(err(e.line, format!("unknown key {sec}.{k}")));
                }
            }
        }
        Ok(())
    }
}

fn positive(line: usize, name: &str, x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(err(line, format!("{name} must be positive, got {x}")))
    }
}

fn parse_grid(doc: &mut ConfigDoc) -> Result<GridSpec> {
    let line = doc.section_line("domain");
    let kind: String = doc.req("domain", "kind")?;
    let g = match kind.as_str() {
        "disk" => {
            let n: usize = doc.req("domain", "n")?;
            let h_min = doc.opt("domain", "h_min")?.unwrap_or(1.0 / n.max(1) as f64);
            GridSpec::Radial { n, h_min }
        }
        "rectangle" => GridSpec::Rect {
            nx: doc.req("domain", "nx")?,
            ny: doc.req("domain", "ny")?,
            width: doc.opt("domain", "width")?.unwrap_or(1.0),
            height: doc.opt("domain", "height")?.unwrap_or(1.0),
        },
        other => return Err(err(line, format!("unknown domain kind '{other}'"))),
    };
    g.validate().map_err(|e| err(line, e.to_string()))?;
    Ok(g)
}

fn emit_grid(out: &mut String, g: &GridSpec) {
    match *g {
        GridSpec::Radial { n, h_min } => {
            let _ = write!(out, "[domain]\nkind = disk\nn = {n}\nh_min = {h_min:?}\n");
        }
        GridSpec::Rect { nx, ny, width, height } => {
            let _ = write!(out, "[domain]\nkind = rectangle\nnx = {nx}\nny = {ny}\nwidth = {width:?}\nheight = {height:?}\n");
        }
    }
}

fn parse_initial(doc: &mut ConfigDoc) -> Result<(InitialData, f64)> {
    let line = doc.section_line("initial");
    let kind: String = doc.req("initial", "kind")?;
    let d = match kind.as_str() {
        "gaussian" => InitialData::Gaussian {
            mass: doc.req("initial", "mass")?,
            center: doc.point("initial", "center")?,
            sigma: doc.req("initial", "sigma")?,
        },
        "annulus" => InitialData::Annulus {
            mass: doc.req("initial", "mass")?,
            center: doc.point("initial", "center")?,
            radius: doc.req("initial", "radius")?,
            sigma: doc.req("initial", "sigma")?,
        },
        "constant" => InitialData::Constant { value: doc.req("initial", "value")? },
        "two_bump" => InitialData::TwoBump {
            mass: doc.req("initial", "mass")?,
            center: doc.point("initial", "center")?,
            separation: doc.req("initial", "separation")?,
            sigma: doc.req("initial", "sigma")?,
        },
        other => return Err(err(line, format!("unknown initial kind '{other}'"))),
    };
    d.validate().map_err(|e| err(line, e.to_string()))?;
    let noise = doc.opt("initial", "noise")?.unwrap_or(0.0);
    Ok((d, noise))
}

fn emit_initial(out: &mut String, d: &InitialData, noise: f64) {
    let p = |c: Point| format!("{:?}, {:?}", c[0], c[1]);
    out.push_str("[initial]\n");
    let _ = match *d {
        InitialData::Gaussian { mass, center, sigma } => {
            write!(out, "kind = gaussian\nmass = {mass:?}\ncenter = {}\nsigma = {sigma:?}\n", p(center))
        }
        InitialData::Annulus { mass, center, radius, sigma } => write!(
            out,
            "kind = annulus\nmass = {mass:?}\ncenter = {}\nradius = {radius:?}\nsigma = {sigma:?}\n",
            p(center)
        ),
        InitialData::Constant { value } => write!(out, "kind = constant\nvalue = {value:?}\n"),
        InitialData::TwoBump { mass, center, separation, sigma } => write!(
            out,
            "kind = two_bump\nmass = {mass:?}\ncenter = {}\nseparation = {separation:?}\nsigma = {sigma:?}\n",
            p(center)
        ),
    };
    let _ = writeln!(out, "noise = {noise:?}");
}

fn parse_time(doc: &mut ConfigDoc, stop_default: bool) -> Result<SolverConfig> {
    let line = doc.section_line("time");
    let d = SolverConfig::default();
    let dt = match doc.raw("time", "dt") {
        None => d.dt,
        Some((v, l)) => {
            let parts: Vec<&str> = v.split_whitespace().collect();
            let num = |s: &str| s.parse::<f64>().map_err(|_| err(l, format!("cannot parse time.dt = '{v}'")));
            match parts.as_slice() {
                ["cfl", c] => DtPolicy::Cfl(num(c)?),
                ["fixed", c] => DtPolicy::Fixed(num(c)?),
                _ => return Err(err(l, format!("time.dt must be 'cfl C' or 'fixed DT', got '{v}'"))),
            }
        }
    };
    let cfg = SolverConfig {
        dt,
        t_end: doc.req("time", "t_end")?,
        snapshot_interval: doc.opt("time", "snapshot_interval")?.unwrap_or(d.snapshot_interval),
        diag_every: doc.opt("time", "diag_every")?.unwrap_or(d.diag_every),
        max_steps: doc.opt("time", "max_steps")?.unwrap_or(d.max_steps),
        positivity_tol: doc.opt("solver", "positivity_tol")?.unwrap_or(d.positivity_tol),
        elliptic_tol: doc.opt("solver", "elliptic_tol")?.unwrap_or(d.elliptic_tol),
        dt_min: doc.opt("time", "dt_min")?.unwrap_or(d.dt_min),
        stop_on_concentration: doc.opt("time", "stop_on_concentration")?.unwrap_or(stop_default),
        advection: doc.opt("solver", "advection")?.unwrap_or(d.advection),
        nonlinear_diffusion_term: doc.opt("solver", "nonlinear_diffusion_term")?.unwrap_or(d.nonlinear_diffusion_term),
        entropy_every_step: doc.opt("solver", "entropy_every_step")?.unwrap_or(d.entropy_every_step),
    };
    positive(line, "time.t_end", cfg.t_end)?;
    cfg.validate().map_err(|e| err(line, e.to_string()))?;
    Ok(cfg)
}

fn emit_time(out: &mut String, c: &SolverConfig) {
    let dt = match c.dt {
        DtPolicy::Cfl(x) => format!("cfl {x:?}"),
        DtPolicy::Fixed(x) => format!("fixed {x:?}"),
    };
    let _ = write!(
        out,
        "[time]\ndt = {dt}\nt_end = {:?}\nsnapshot_interval = {:?}\ndiag_every = {}\nmax_steps = {}\ndt_min = {:?}\nstop_on_concentration = {}\n",
        c.t_end, c.snapshot_interval, c.diag_every, c.max_steps, c.dt_min, c.stop_on_concentration
    );
    let _ = write!(
        out,
        "[solver]\npositivity_tol = {:?}\nelliptic_tol = {:?}\nadvection = {}\nnonlinear_diffusion_term = {}\nentropy_every_step = {}\n",
        c.positivity_tol, c.elliptic_tol, c.advection, c.nonlinear_diffusion_term, c.entropy_every_step
    );
}

fn emit_probes(probes: &[Probe]) -> String {
    probes.iter().map(|p| format!("{:?} {:?} {:?}", p.x0[0], p.x0[1], p.rho)).collect::<Vec<_>>().join("; ")
}

fn emit_list(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
}

/// Everything needed to reproduce a single run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub reg: RegKind,
    pub initial: InitialData,
    pub noise: f64,
    pub solver: SolverConfig,
    pub probes: Vec<Probe>,
    pub out_dir: Option<String>,
    pub seed: u64,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut doc = ConfigDoc::parse(text)?;
        let grid = parse_grid(&mut doc)?;
        let line = doc.section_line("model");
        let name: String = doc.req("model", "regularization")?;
        let eps: f64 = doc.req("model", "epsilon")?;
        let reg = RegName::parse(&name)
            .ok_or_else(|| err(line, format!("unknown regularization '{name}'")))?
            .with_epsilon(eps)
            .map_err(|e| err(line, e.to_string()))?;
        let (initial, noise) = parse_initial(&mut doc)?;
        let solver = parse_time(&mut doc, true)?;
        let probes = doc.probes("probes", "probes")?;
        let out_dir = doc.opt("output", "dir")?;
        let seed = doc.opt("run", "seed")?.unwrap_or(0);
        doc.finish()?;
        Ok(Self { grid, reg, initial, noise, solver, probes, out_dir, seed })
    }

    /// Normalized text; `parse(emit(c)) == c`.
    pub fn emit(&self) -> String {
        let mut out = String::new();
        emit_grid(&mut out, &self.grid);
        let _ = write!(out, "[model]\nregularization = {}\nepsilon = {:?}\n", self.reg.name(), self.reg.epsilon());
        emit_initial(&mut out, &self.initial, self.noise);
        emit_time(&mut out, &self.solver);
        if !self.probes.is_empty() {
            let _ = writeln!(out, "[probes]\nprobes = {}", emit_probes(&self.probes));
        }
        if let Some(d) = &self.out_dir {
            let _ = writeln!(out, "[output]\ndir = {d}");
        }
        let _ = writeln!(out, "[run]\nseed = {}", self.seed);
        out
    }
}

pub fn parse_plan(text: &str) -> Result<SweepPlan> {
    let mut doc = ConfigDoc::parse(text)?;
    let grid = parse_grid(&mut doc)?;
    let (initial, noise) = parse_initial(&mut doc)?;
    let base = parse_time(&mut doc, false)?;
    let line = doc.section_line("sweep");
    let (epsilons, eline) = doc.list("sweep", "epsilons")?.ok_or_else(|| err(line, "missing field sweep.epsilons"))?;
    let kinds = match doc.raw("sweep", "regularizations") {
        None => vec![RegName::Cutoff, RegName::Nonlinear],
        Some((v, l)) => v
            .split(',')
            .map(|t| t.trim())
            .filter(|t| !t.is_empty())
            .map(|t| RegName::parse(t).ok_or_else(|| err(l, format!("unknown regularization '{t}'"))))
            .collect::<Result<Vec<_>>>()?,
    };
    let d = SweepPlan::default();
    let plan = SweepPlan {
        base,
        grid,
        initial,
        noise,
        epsilons,
        kinds,
        ladder: doc.list("sweep", "ladder")?.map(|x| x.0).unwrap_or(d.ladder),
        offsets: doc.list("sweep", "offsets")?.map(|x| x.0).unwrap_or(d.offsets),
        probes: match doc.probes("sweep", "probes")? {
            p if p.is_empty() => d.probes,
            p => p,
        },
        ball_radius: doc.opt("sweep", "ball_radius")?.unwrap_or(d.ball_radius),
        seed: doc.opt("run", "seed")?.unwrap_or(0),
        threads: doc.opt("run", "threads")?,
    };
    doc.finish()?;
    plan.validate().map_err(|e| err(eline, e.to_string()))?;
    Ok(plan)
}

pub fn emit_plan(p: &SweepPlan) -> String {
    let mut out = String::new();
    emit_grid(&mut out, &p.grid);
    emit_initial(&mut out, &p.initial, p.noise);
    emit_time(&mut out, &p.base);
    let kinds: Vec<&str> = p.kinds.iter().map(|k| k.as_str()).collect();
    let _ = write!(
        out,
        "[sweep]\nregularizations = {}\nepsilons = {}\nladder = {}\noffsets = {}\nprobes = {}\nball_radius = {:?}\n",
        kinds.join(", "),
        emit_list(&p.epsilons),
        emit_list(&p.ladder),
        emit_list(&p.offsets),
        emit_probes(&p.probes),
        p.ball_radius
    );
    let _ = writeln!(out, "[run]\nseed = {}", p.seed);
    if let Some(t) = p.threads {
        let _ = writeln!(out, "threads = {t}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const RUN: &str = "
[domain]
kind = disk
n = 120
h_min = 0.004
[model]
regularization = cutoff_flux
epsilon = 1e-3
[initial]
kind = gaussian   # mass 4 pi
mass = 12.566370614359172
sigma = 0.3
[time]
t_end = 0.05
dt = cfl 0.8
[probes]
probes = 0 0 0.05; 0 0 0.1
";

    #[test]
    fn run_config_round_trip() {
        let c = RunConfig::parse(RUN).unwrap();
        assert_eq!(c.grid, GridSpec::Radial { n: 120, h_min: 0.004 });
        assert_eq!(c.solver.dt, DtPolicy::Cfl(0.8));
        assert!(c.solver.stop_on_concentration);
        assert_eq!(c.probes.len(), 2);
        let again = RunConfig::parse(&c.emit()).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.emit(), c.emit());
    }

    #[test]
    fn line_anchored_errors() {
        let missing = RUN.replace("t_end = 0.05\n", "");
        match RunConfig::parse(&missing) {
            Err(Error::Config { line, msg }) => {
                assert!(msg.contains("time.t_end"), "{msg}");
                assert_eq!(line, 13);
            }
            other => panic!("{other:?}"),
        }
        let bad = RUN.replace("sigma = 0.3", "sigma = abc");
        assert!(matches!(RunConfig::parse(&bad), Err(Error::Config { line: 12, .. })));
        let unknown = RUN.replace("sigma = 0.3", "sigma = 0.3\ncolour = red");
        assert!(matches!(RunConfig::parse(&unknown), Err(Error::Config { line: 13, .. })));
        let neg = RUN.replace("epsilon = 1e-3", "epsilon = -1");
        assert!(matches!(RunConfig::parse(&neg), Err(Error::Config { .. })));
        assert!(matches!(ConfigDoc::parse("x = 1"), Err(Error::Config { line: 1, .. })));
    }

    #[test]
    fn plan_round_trip_and_errors() {
        let text = "
[domain]
kind = disk
n = 50
[initial]
kind = gaussian
mass = 10
sigma = 0.3
[time]
t_end = 0.01
[sweep]
epsilons = 0.01, 0.001
";
        let p = parse_plan(text).unwrap();
        assert_eq!(p.epsilons, vec![0.01, 0.001]);
        assert!(!p.base.stop_on_concentration);
        assert_eq!(parse_plan(&emit_plan(&p)).unwrap(), p);
        assert!(parse_plan(&text.replace("0.01, 0.001", "")).is_err());
        assert!(parse_plan(&text.replace("0.01, 0.001", "0.001, 0.01")).is_err());
    }
}
