//! Deterministic CSV rendering of a sweep report.

use std::fmt::Write as _;
use std::path::Path;

use super::SweepReport;
use crate::error::Result;
use crate::manifest::write_csv;

pub(crate) const DIAG_SCHEMA: &[(&str, &str)] = &[
    ("t", "time"),
    ("mass", "int u"),
    ("min_u", "smallest cell value"),
    ("max_u", "largest cell value"),
    ("entropy", "discrete entropy E"),
    ("dissipation", "discrete dissipation D"),
    ("h_t", "mean of the chemoattractant source"),
];

fn f(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.10e}")
    }
}

fn of(x: Option<f64>) -> String {
    x.map(f).unwrap_or_default()
}

fn ob(x: Option<bool>) -> String {
    x.map(|b| b.to_string()).unwrap_or_default()
}

pub(crate) const RUNS_SCHEMA: &[(&str, &str)] = &[
    ("kind", "regularization"),
    ("epsilon", "regularization parameter"),
    ("run_hash", "sha256 of the run configuration; artifacts under runs/<first 16 digits>"),
    ("status", "ok or the failure message"),
    ("steps", "accepted time steps"),
    ("final_t", "last stored time"),
    ("mass_drift", "max |mass - mass0| / mass0"),
    ("concentrated_at", "first time max u crossed the concentration level (empty if never)"),
    ("max_u_power", "max_t eps^1.1 int u^(7/6), nonlinear diffusion only"),
    ("entropy_max_increase", "max (E_next - E) / (|E| dt), nan when not tracked"),
    ("max_ball_mass", "max_t int over the ball at the data center"),
    ("rate_k", "probe k: max rho^2 |d/dt int psi u| (cutoff) or the one-sided analogue"),
    ("modulus", "largest patch mass modulus of the default cover"),
    ("continuity", "largest square-root Hoelder modulus of concentration tracks"),
    ("reidentifications", "track links treated as re-identification"),
];

pub(crate) fn runs_csv(r: &SweepReport) -> String {
    let probes = r.runs.iter().map(|x| x.probe_rates.len()).max().unwrap_or(0);
    let mut s = String::from("kind,epsilon,run_hash,status,steps,final_t,mass_drift,concentrated_at,max_u_power,entropy_max_increase,max_ball_mass");
    for k in 0..probes {
        let _ = write!(s, ",rate_{k}");
    }
    s.push_str(",modulus,continuity,reidentifications\n");
    for x in &r.runs {
        let status = x.failure.as_deref().map(|m| m.replace([',', '\n'], ";")).unwrap_or_else(|| "ok".into());
        let _ = write!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            x.kind.as_str(),
            f(x.epsilon),
            x.hash,
            status,
            x.steps,
            f(x.final_t),
            f(x.mass_drift),
            of(x.concentrated_at),
            f(x.max_u_power),
            f(x.entropy_max_increase),
            f(x.max_ball_mass)
        );
        for k in 0..probes {
            let _ = write!(s, ",{}", f(x.probe_rates.get(k).copied().unwrap_or(f64::NAN)));
        }
        let _ = writeln!(s, ",{},{},{}", f(x.modulus), f(x.continuity), x.reidentifications);
    }
    s
}

const ATOMS_SCHEMA: &[(&str, &str)] = &[
    ("kind", "regularization"),
    ("epsilon", "regularization parameter"),
    ("label", "matched time: tc+offset or final"),
    ("t", "snapshot time used"),
    ("detected", "a concentration point was found"),
    ("center_x", "atom center"),
    ("center_y", "atom center"),
    ("alpha", "plateau of int_B u over the radius ladder"),
    ("beta", "plateau of int_B f_eps(u) (cutoff) or int_B (u + eps u^(7/6))"),
    ("ratio", "alpha^2 / (8 pi beta), nonlinear diffusion only"),
    ("no_atom", "ladder masses do not plateau"),
    ("beta_below_alpha", "beta <= alpha at every radius (cutoff only)"),
    ("quadratic_bound", "beta^2 <= 8 pi alpha 1.1 (cutoff only)"),
];

fn atoms_csv(r: &SweepReport) -> String {
    let mut s = String::from(
        "kind,epsilon,label,t,detected,center_x,center_y,alpha,beta,ratio,no_atom,beta_below_alpha,quadratic_bound\n",
    );
    for a in &r.atoms {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            a.kind.as_str(),
            f(a.epsilon),
            a.label,
            f(a.t),
            a.detected,
            f(a.center[0]),
            f(a.center[1]),
            of(a.alpha),
            of(a.beta),
            of(a.ratio),
            a.no_atom,
            ob(a.beta_below_alpha),
            ob(a.quadratic_bound)
        );
    }
    s
}

const TRENDS_SCHEMA: &[(&str, &str)] = &[
    ("kind", "regularization"),
    ("quantity", "alpha, beta or ratio"),
    ("label", "matched time"),
    ("q", "exponent of the fit r0 + c eps^q"),
    ("r0", "extrapolated value at eps = 0"),
    ("c", "slope"),
    ("rss", "residual sum of squares"),
    ("points", "number of eps values with an atom"),
    ("chosen", "smaller residual of the two exponents"),
];

fn trends_csv(r: &SweepReport) -> String {
    let mut s = String::from("kind,quantity,label,q,r0,c,rss,points,chosen\n");
    for t in &r.trends {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            t.kind.as_str(),
            t.quantity,
            t.label,
            f(t.q),
            f(t.r0),
            f(t.c),
            f(t.rss),
            t.points,
            t.chosen
        );
    }
    s
}

const DIVERGENCE_SCHEMA: &[(&str, &str)] = &[
    ("epsilon", "regularization parameter"),
    ("t_pre", "last snapshot before either run was flagged"),
    ("l1_pre", "L1 distance between the regularizations at t_pre"),
    ("label", "matched time"),
    ("t_post", "snapshot time used"),
    ("l1_post", "L1 distance at t_post"),
    ("ball_diff", "difference of ball masses at t_post"),
];

fn divergence_csv(r: &SweepReport) -> String {
    let mut s = String::from("epsilon,t_pre,l1_pre,label,t_post,l1_post,ball_diff\n");
    for d in &r.divergence {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            f(d.epsilon),
            f(d.t_pre),
            f(d.l1_pre),
            d.label,
            f(d.t_post),
            f(d.l1_post),
            f(d.ball_diff)
        );
    }
    s
}

const CONSISTENCY_SCHEMA: &[(&str, &str)] = &[
    ("kind", "regularization"),
    ("eps1", "larger epsilon"),
    ("eps2", "smaller epsilon"),
    ("t", "last snapshot before the earliest flag of this kind"),
    ("l1", "L1 distance of the two runs"),
    ("c", "l1 / eps1"),
];

fn consistency_csv(r: &SweepReport) -> String {
    let mut s = String::from("kind,eps1,eps2,t,l1,c\n");
    for c in &r.consistency {
        let _ = writeln!(s, "{},{},{},{},{},{}", c.kind.as_str(), f(c.eps1), f(c.eps2), f(c.t), f(c.l1), f(c.c));
    }
    s
}

const VERDICTS_SCHEMA: &[(&str, &str)] =
    &[("name", "check"), ("value", "measured value"), ("gate", "pass condition"), ("pass", "true or false")];

fn verdicts_csv(r: &SweepReport) -> String {
    let mut s = String::from("name,value,gate,pass\n");
    for v in &r.verdicts {
        let _ = writeln!(s, "{},{},{},{}", v.name, f(v.value), v.gate, v.pass);
    }
    s
}

/// File name and contents of every report CSV.
pub fn report_files(r: &SweepReport) -> Vec<(&'static str, String)> {
    vec![
        ("report.csv", runs_csv(r)),
        ("atoms.csv", atoms_csv(r)),
        ("trends.csv", trends_csv(r)),
        ("divergence.csv", divergence_csv(r)),
        ("consistency.csv", consistency_csv(r)),
        ("verdicts.csv", verdicts_csv(r)),
    ]
}

pub fn write_report(r: &SweepReport, dir: &Path) -> Result<()> {
    let schemas = [RUNS_SCHEMA, ATOMS_SCHEMA, TRENDS_SCHEMA, DIVERGENCE_SCHEMA, CONSISTENCY_SCHEMA, VERDICTS_SCHEMA];
    for ((name, body), schema) in report_files(r).into_iter().zip(schemas) {
        write_csv(dir, name, &body, schema)?;
    }
    Ok(())
}
