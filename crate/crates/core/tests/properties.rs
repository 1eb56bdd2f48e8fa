use std::f64::consts::PI;

use proptest::prelude::*;

use ksw::config::{emit_plan, parse_plan, RunConfig};
use ksw::diagnostics::{atom_estimate, default_ladder, detect_concentrations, Probe, M0_INTERIOR};
use ksw::geometry::DomainGeometry;
use ksw::greens::greens_disk_exact;
use ksw::problem::{GridSpec, InitialData};
use ksw::solver::{self, f_eps, DtPolicy, RegKind, SolverConfig};
use ksw::sweep::{fit_trend, Cover, RegName, SweepPlan};
use ksw::testfn::{phi, r_support, InteriorBump};
use ksw::vec2::{dot, norm, norm2, sub};

fn disk_point() -> impl Strategy<Value = [f64; 2]> {
    (0.0..0.999f64, 0.0..2.0 * PI).prop_map(|(r, t)| [r * t.cos(), r * t.sin()])
}

fn positive() -> impl Strategy<Value = f64> {
    (-6.0..3.0f64).prop_map(|e| 10f64.powf(e))
}

fn grid() -> impl Strategy<Value = GridSpec> {
    prop_oneof![
        (2usize..400, 0.0..1.0f64).prop_map(|(n, f)| GridSpec::Radial { n, h_min: (0.05 + 0.95 * f) / n as f64 }),
        (2usize..300, 2usize..300, 0.1..5.0f64, 0.1..5.0f64)
            .prop_map(|(nx, ny, width, height)| GridSpec::Rect { nx, ny, width, height }),
    ]
}

fn initial() -> impl Strategy<Value = InitialData> {
    let c = (0.0..2.0f64, 0.0..2.0f64).prop_map(|(a, b)| [a, b]);
    prop_oneof![
        (positive(), c.clone(), positive()).prop_map(|(mass, center, sigma)| InitialData::Gaussian { mass, center, sigma }),
        (positive(), c.clone(), positive(), positive())
            .prop_map(|(mass, center, radius, sigma)| InitialData::Annulus { mass, center, radius, sigma }),
        positive().prop_map(|value| InitialData::Constant { value }),
        (positive(), c, positive(), positive())
            .prop_map(|(mass, center, separation, sigma)| InitialData::TwoBump { mass, center, separation, sigma }),
    ]
}

fn solver_config() -> impl Strategy<Value = SolverConfig> {
    (
        prop_oneof![(0.01..1.0f64).prop_map(DtPolicy::Cfl), (1e-7..1e-3f64).prop_map(DtPolicy::Fixed)],
        positive(),
        positive(),
        1usize..1000,
        any::<bool>(),
        any::<bool>(),
        any::<bool>(),
    )
        .prop_map(|(dt, t_end, snap, diag, stop, adv, ent)| SolverConfig {
            dt,
            t_end,
            snapshot_interval: snap,
            diag_every: diag,
            stop_on_concentration: stop,
            advection: adv,
            entropy_every_step: ent,
            ..SolverConfig::default()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn run_config_round_trips(
        grid in grid(),
        nl in any::<bool>(),
        eps in positive(),
        initial in initial(),
        noise in 0.0..0.9f64,
        solver in solver_config(),
        probes in prop::collection::vec((disk_point(), positive()), 0..4),
        seed in any::<u64>(),
        out in prop::option::of("[a-z][a-z0-9_/]{0,12}"),
    ) {
        let reg = if nl { RegKind::nonlinear(eps).unwrap() } else { RegKind::cutoff(eps).unwrap() };
        let cfg = RunConfig {
            grid,
            reg,
            initial,
            noise,
            solver,
            probes: probes.into_iter().map(|(x0, rho)| Probe { x0, rho }).collect(),
            out_dir: out,
            seed,
        };
        let text = cfg.emit();
        let back = RunConfig::parse(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.emit(), text);
    }

    #[test]
    fn sweep_plans_round_trip_and_need_decreasing_eps(
        grid in grid(),
        initial in initial(),
        mut eps in prop::collection::vec(1e-6..1.0f64, 2..6),
        threads in prop::option::of(1usize..8),
        seed in any::<u64>(),
    ) {
        eps.sort_by(|a, b| b.partial_cmp(a).unwrap());
        eps.dedup();
        prop_assume!(eps.len() >= 2);
        let plan = SweepPlan { grid, initial, epsilons: eps.clone(), threads, seed, ..SweepPlan::default() };
        prop_assert_eq!(parse_plan(&emit_plan(&plan)).unwrap(), plan.clone());
        let mut up = plan.clone();
        up.epsilons.reverse();
        prop_assert!(up.validate().is_err());
        let mut one = plan;
        one.epsilons.truncate(1);
        prop_assert!(one.validate().is_err());
    }

    #[test]
    fn greens_function_is_symmetric(x in disk_point(), y in disk_point()) {
        prop_assume!(norm(sub(x, y)) > 1e-6);
        let a = greens_disk_exact(x, y).unwrap();
        let b = greens_disk_exact(y, x).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn boundary_frames_are_orthonormal_and_tau_fixes_the_boundary(t in 0.0..2.0 * PI, s in 0.0..0.2f64) {
        let disk = DomainGeometry::unit_disk();
        let x = [(1.0 - s) * t.cos(), (1.0 - s) * t.sin()];
        prop_assume!(disk.in_collar(x));
        let f = disk.boundary_frame(x).unwrap();
        prop_assert!((norm2(f.nu) - 1.0).abs() <= 1e-12);
        prop_assert!((norm2(f.tau_vec) - 1.0).abs() <= 1e-12);
        prop_assert!(dot(f.nu, f.tau_vec).abs() <= 1e-12);
        let b = [t.cos(), t.sin()];
        let tb = disk.reflect_tau(b).unwrap();
        prop_assert!(norm(sub(tb, b)) <= 1e-12);
        let ty = disk.reflect_tau(x).unwrap();
        prop_assert!(norm(ty) >= 1.0);
    }

    #[test]
    fn profile_is_a_unit_bump(r in 0.0..3.0f64) {
        let v = phi(r);
        prop_assert!((0.0..=1.0).contains(&v));
        if r >= r_support() {
            prop_assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn interior_symmetrized_kernel_is_bounded(x in disk_point(), y in disk_point(), rho in 0.01..0.3f64) {
        let b = InteriorBump::free([0.0, 0.0], rho);
        let d = sub(x, y);
        prop_assume!(norm(d) > 1e-9);
        let (gx, gy) = (b.eval(x).grad, b.eval(y).grad);
        let k = dot(d, sub(gx, gy)).abs() / norm2(d);
        // sup of the profile Hessian is 2 e^{-1/2} < 2
        prop_assert!(k * rho * rho <= 2.0 + 1e-9, "k rho^2 = {}", k * rho * rho);
    }

    #[test]
    fn cutoff_never_exceeds_its_argument(u in 0.0..1e6f64, eps in 1e-5..1.0f64) {
        let f = f_eps(u, eps).unwrap();
        prop_assert!(f <= u);
        prop_assert!(f >= 0.0);
        prop_assert!(f <= 1.0 / eps);
        prop_assert!(f_eps(u + 1.0, eps).unwrap() >= f);
    }

    #[test]
    fn ball_integrals_bracket_alpha(
        amp in 1.0..1e4f64,
        width in 0.01..0.3f64,
        eps in 1e-4..1e-1f64,
    ) {
        let g = GridSpec::Radial { n: 80, h_min: 1e-3 };
        let u = g.sample(|x| 1.0 + amp * (-norm2(x) / (width * width)).exp()).unwrap();
        let c = atom_estimate(&u, RegKind::cutoff(eps).unwrap(), [0.0, 0.0], &default_ladder());
        let n = atom_estimate(&u, RegKind::nonlinear(eps).unwrap(), [0.0, 0.0], &default_ladder());
        for k in 0..c.alpha.len() {
            prop_assert!(c.beta[k] <= c.alpha[k]);
            prop_assert!(n.beta[k] >= n.alpha[k]);
        }
        let total = ksw::diagnostics::mass(&u);
        let found = detect_concentrations(&u, M0_INTERIOR, 0.05);
        prop_assert!(found.len() as f64 <= (4.0 * total / M0_INTERIOR).floor());
    }

    #[test]
    fn tiled_covers_are_partitions(nx in 4usize..40, ny in 4usize..40, tx in 1usize..6, ty in 1usize..6) {
        let f = ksw::solver::Field::constant(nx, ny, 1.3, 0.7, 1.0);
        let c = Cover::rect_tiles(&f, tx, ty).unwrap();
        for k in 0..f.values.len() {
            let s: f64 = c.patches.iter().map(|p| p[k]).sum();
            prop_assert!((s - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn trend_fit_is_exact_on_model_data(r0 in -5.0..5.0f64, c in -50.0..50.0f64, half in any::<bool>()) {
        let q = if half { 0.5 } else { 1.0 };
        let eps = [1e-2, 3e-3, 1e-3, 3e-4];
        let y: Vec<f64> = eps.iter().map(|e: &f64| r0 + c * e.powf(q)).collect();
        let (a, b, rss) = fit_trend(&eps, &y, q).unwrap();
        prop_assert!((a - r0).abs() <= 1e-9 && (b - c).abs() <= 1e-6 * c.abs().max(1.0) && rss <= 1e-18);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn runs_conserve_mass_and_positivity(
        rect in any::<bool>(),
        nl in any::<bool>(),
        mass in 1.0..60.0f64,
        sigma in 0.1..0.4f64,
        noise in 0.0..0.5f64,
        seed in any::<u64>(),
        eps in 1e-3..1e-1f64,
    ) {
        let (grid, center) = if rect {
            (GridSpec::Rect { nx: 24, ny: 20, width: 1.2, height: 1.0 }, [0.6, 0.5])
        } else {
            (GridSpec::Radial { n: 60, h_min: 5e-3 }, [0.0, 0.0])
        };
        let u0 = InitialData::Gaussian { mass, center, sigma }.build(&grid, noise, seed).unwrap();
        let reg = if nl { RegName::Nonlinear } else { RegName::Cutoff }.with_epsilon(eps).unwrap();
        let cfg = SolverConfig { t_end: 2e-3, snapshot_interval: 1e-3, diag_every: 1, stop_on_concentration: false, ..SolverConfig::default() };
        let tr = solver::run(&cfg, reg, u0).unwrap();
        prop_assert!(tr.failure.is_none());
        prop_assert!(tr.max_mass_drift <= 1e-12, "drift {}", tr.max_mass_drift);
        prop_assert!(tr.diagnostics.iter().all(|d| d.min_u >= -1e-13));
        prop_assert!(tr.diagnostics.windows(2).all(|w| w[1].t >= w[0].t));
    }
}
