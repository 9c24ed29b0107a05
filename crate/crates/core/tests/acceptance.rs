mod common;

use std::io::Write;
use std::sync::OnceLock;

use common::*;
use eulerize_core::certifier::*;
use eulerize_core::currents::DiscreteCurrent1;
use eulerize_core::dec;
use eulerize_core::field_zoo::{gen_abc, gen_constant, insert_plug, PlugField, PlugSpec, Placement};
use eulerize_core::metric::{build_metric, verify_euler};
use eulerize_core::plug_lab::*;
use eulerize_core::{math, Grid3, OneForm, ScalarField0, ThreeForm, VectorField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(k: usize, ok: bool, detail: String) {
    // straight to the stdout handle so the verdict survives test capture
    let line = format!("criterion {k:>2}: {} {detail}\n", if ok { "PASS" } else { "FAIL" });
    let _ = std::io::stdout().lock().write_all(line.as_bytes());
    assert!(ok, "criterion {k}: {detail}");
}

#[test]
fn c01_discrete_complex() {
    const TOL: f64 = 1e-12;
    let g = Grid3::periodic(32).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut dd0, mut dd1) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let f = ScalarField0::from_fn(g, |_| rng.gen_range(-1.0..1.0));
        dd0 = dd0.max(dec::d1(&dec::d0(&f)).sup_norm());
        let a = OneForm::from_fn(g, |_| [0, 1, 2].map(|_| rng.gen_range(-1.0..1.0)));
        dd1 = dd1.max(dec::d2(&dec::d1(&a)).sup_norm());
    }
    report(1, dd0 <= TOL && dd1 <= TOL, format!("sup|d1 d0 f| = {dd0:.2e}, sup|d2 d1 a| = {dd1:.2e} (tol {TOL:e})"));
}

#[test]
fn c02_beltrami_oracle() {
    const TOL: f64 = 1e-12;
    let mut worst = 0.0f64;
    for n in [8, 16, 32] {
        let g = Grid3::periodic(n).unwrap();
        let x = gen_abc(1.0, 1.0, 1.0, g);
        let h = g.h();
        let sinc = h.sin() / h;
        let c = dec::curl_field(&x);
        for (u, v) in c.values().iter().zip(x.values()) {
            for k in 0..3 {
                worst = worst.max((u[k] - sinc * v[k]).abs());
            }
        }
    }
    report(2, worst <= TOL, format!("max |curl X − sinc(h) X| over n = 8, 16, 32: {worst:.2e} (tol {TOL:e})"));
}

#[test]
fn c03_feasible_side_round_trip() {
    const EQ: f64 = 1e-8;
    const EULER: f64 = 1e-8;
    const VOL: f64 = 1e-10;
    let g = Grid3::cell_centred(16).unwrap();
    let x = gen_abc(1.0, 1.0, 1.0, g);
    let p = assemble(Mode::Adapted, &x, None, None, 1e-6).unwrap();
    let rep = solve(&p, &SolverOptions::default()).unwrap();
    let Some(c) = rep.primal.filter(|_| rep.status == Status::Feasible) else {
        return report(3, false, format!("status {:?} after {} iterations", rep.status, rep.iterations));
    };
    let r = verify_primal(&c, &p).unwrap();
    let mu = ThreeForm::constant(g, 1.0);
    let m = build_metric(&c.alpha, &x, &mu, true).unwrap();
    let e = verify_euler(&m, &x, c.b.as_ref().unwrap(), &mu).unwrap();
    let vol = m.diagnostics.volume_defect;
    let ok = r.min_alpha_x >= 1.0 && r.eq_sup <= EQ && e.residual_sup <= EULER && vol <= VOL;
    report(
        3,
        ok,
        format!(
            "{} iterations; min α(X) = {:.6}, eq residual {:.2e}, Euler residual {:.2e}, √det g defect {:.2e}",
            rep.iterations, r.min_alpha_x, r.eq_sup, e.residual_sup, vol
        ),
    );
}

#[test]
fn c04_infeasible_side_plug() {
    const EPS: f64 = 1e-6;
    const MASS: f64 = 1e-6;
    const NEAR: f64 = 0.9;
    // bounded budget: the run must fit in minutes at n = 32
    const ITERATIONS: usize = 4000;
    let g = Grid3::cell_centred(32).unwrap();
    let plug = PlugField::unchecked(&PlugSpec { z_star: 0.45, delta_z: 0.15, ..PlugSpec::wilson() }).unwrap();
    let pl = Placement::centered(g.length());
    let x = insert_plug(&gen_constant([0.0, 0.0, 1.0], g), &plug, &pl).unwrap();
    let p = assemble(Mode::Adapted, &x, None, None, 1e-6).unwrap();
    let rep = solve(&p, &SolverOptions { max_iterations: ITERATIONS, ..SolverOptions::default() }).unwrap();
    let d = &rep.diagnostics;
    let summary = format!(
        "status {:?} after {} iterations (objective {:.3e}, dual bound {:.3e})",
        rep.status, rep.iterations, d.objective, d.dual_bound
    );
    let Some(cert) = rep.dual.filter(|_| rep.status == Status::Infeasible) else {
        return report(4, false, summary);
    };
    let v = verify_dual(&cert, &p, EPS, EPS).unwrap();
    // unit-speed Diracs: the current's mass is the total weight
    let unit = VectorField::new(g, x.values().iter().map(|v| math::scale(1.0 / math::norm(*v), *v)).collect()).unwrap();
    let current = DiscreteCurrent1::foliation(&unit, cert.weights.values()).unwrap();
    let mass = current.raw_mass();
    let two_h = 2.0 * g.h();
    let circles = plug.reeb_circles();
    let near = current.mass_fraction(|q| {
        let y = g.displacement(pl.center, q);
        let r = (y[0] * y[0] + y[1] * y[1]).sqrt();
        circles.iter().any(|(rc, zc)| ((r - rc).powi(2) + (y[2] - zc).powi(2)).sqrt() <= two_h)
    });
    let ok = v.verified && (mass - 1.0).abs() <= MASS && near >= NEAR;
    report(
        4,
        ok,
        format!("{summary}; adjoint {:.2e}, cycle {:.2e}, mass {mass:.9}, near Reeb circles {near:.3}", v.adjoint_sup, v.cycle_sup),
    );
}

/// One solved instance of the shared test matrix.
struct Case {
    label: String,
    mode: Mode,
    x: VectorField,
    y: VectorField,
    problem: FeasibilityProblem,
    report: SolveReport,
    oracle: Option<bool>,
}

const SMALL_INSTANCES: usize = 10;

fn matrix() -> &'static [Case] {
    static CASES: OnceLock<Vec<Case>> = OnceLock::new();
    CASES.get_or_init(|| {
        let opts = SolverOptions { max_iterations: 20_000, ..SolverOptions::default() };
        let mut inputs = Vec::new();
        let g4 = Grid3::cell_centred(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for i in 0..SMALL_INSTANCES {
            let (x, y) = random_instance(g4, &mut rng, i);
            inputs.push((format!("n=4 #{i}"), x, y, true));
        }
        let g8 = Grid3::cell_centred(8).unwrap();
        for (a, b, c) in [(1.0, 1.0, 1.0), (1.0, 0.6, 0.3)] {
            let x = gen_abc(a, b, c, g8);
            inputs.push((format!("n=8 abc({a},{b},{c})"), x.clone(), x, false));
        }
        let mut out = Vec::new();
        for (label, x, y, small) in inputs {
            for mode in Mode::ALL {
                let problem = assemble(mode, &x, Some(&y), None, 1e-6).unwrap();
                let report = solve(&problem, &opts).unwrap();
                let oracle = small.then(|| decide(&dense_system(&problem)).feasible);
                out.push(Case { label: label.clone(), mode, x: x.clone(), y: y.clone(), problem, report, oracle });
            }
        }
        out
    })
}

#[test]
fn c05_weak_duality() {
    let cases = matrix();
    let mut both = Vec::new();
    let mut modes = [0usize; 4];
    for c in cases {
        modes[Mode::ALL.iter().position(|m| *m == c.mode).unwrap()] += 1;
        let primal = c.report.primal.as_ref().is_some_and(|q| verify_primal(q, &c.problem).unwrap().verified);
        let dual = c
            .report
            .dual
            .as_ref()
            .is_some_and(|q| verify_dual(q, &c.problem, DEFAULT_EPS_DUAL, DEFAULT_EPS_CYCLE).unwrap().verified);
        if primal && dual {
            both.push(format!("{} {}", c.label, c.mode));
        }
    }
    let ok = cases.len() >= 20 && modes.iter().all(|&m| m > 0) && both.is_empty();
    report(5, ok, format!("{} instances, per mode {modes:?}; both certificates verified on {both:?}", cases.len()));
}

#[test]
fn c06_scale_covariance() {
    // residuals are homogeneous of degree one in the unknowns: the B modes
    // reproduce them exactly, while with Y fixed the T modes halve them
    const REL: f64 = 1e-12;
    let mut checked = 0;
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for c in matrix() {
        let Some(cert) = c.report.primal.as_ref().filter(|_| c.report.status == Status::Feasible) else { continue };
        let base = verify_primal(cert, &c.problem).unwrap();
        let p2 = assemble(c.mode, &c.x.scaled(2.0), Some(&c.y), None, c.problem.eta).unwrap();
        let r = verify_primal(&cert.rescaled_for(2.0), &p2).unwrap();
        let expect = match c.mode {
            Mode::Reeb | Mode::VorticityPair => base.eq_sup / 2.0,
            _ => base.eq_sup,
        };
        let scale = base.eq_sup.max(base.min_alpha_x).max(1e-300);
        let gap = ((r.eq_sup - expect).abs() / scale).max((r.min_alpha_x - base.min_alpha_x).abs() / base.min_alpha_x);
        worst = worst.max(gap);
        if !r.verified || gap > REL {
            failures.push(format!("{} {}", c.label, c.mode));
        }
        checked += 1;
    }
    report(6, checked > 0 && failures.is_empty(), format!("{checked} feasible instances, worst relative gap {worst:.2e}; failures {failures:?}"));
}

fn wilson() -> (PlugField, Cylinder, Segment) {
    let plug = PlugField::unchecked(&PlugSpec::wilson()).unwrap();
    let dom = Cylinder::of(plug.spec());
    (plug, dom, Segment::radial(2.5, 2.0))
}

const GAMMA_TARGET: f64 = 200.0;

fn wilson_ts() -> &'static [f64] {
    static TS: OnceLock<Vec<f64>> = OnceLock::new();
    TS.get_or_init(|| {
        let (plug, dom, sigma) = wilson();
        geometric_t_sequence(&plug, &dom, &sigma, 0.5, GAMMA_TARGET, &TraceOptions::default()).unwrap()
    })
}

#[test]
fn c07_limit_cycle_flat_bounds() {
    const FINAL: f64 = 0.05;
    const MASS: f64 = 1e-6;
    let (plug, dom, sigma) = wilson();
    let st = limit_cycle_study(&plug, &dom, &sigma, wilson_ts(), &StudyOptions::for_plug(&plug), &Sequential).unwrap();
    let last = st.records.last().unwrap();
    let mass_dev = st.records.iter().map(|r| (r.orbit_mass - 1.0).abs()).fold(0.0, f64::max);
    let ok = st.discarded.is_empty()
        && st.strictly_decreasing()
        && last.gamma_length >= GAMMA_TARGET
        && last.flat_bound <= FINAL
        && mass_dev <= MASS;
    let bounds: Vec<String> = st.flat_bounds().iter().map(|b| format!("{b:.4}")).collect();
    report(
        7,
        ok,
        format!("flat bounds [{}], final |γ| = {:.1}, max |mass − 1| = {mass_dev:.2e}", bounds.join(", "), last.gamma_length),
    );
}

#[test]
fn c08_flux_decay() {
    const DEV: f64 = 1e-6;
    const RATIO: f64 = 10.0;
    let (plug, dom, sigma) = wilson();
    let b = fit_radial_bernoulli(&plug, (1.0, 3.0), 401, 400).unwrap();
    let table =
        flux_decay_study(&plug, &dom, &sigma, wilson_ts(), &EuclideanDual(&plug), &b, &StudyOptions::for_plug(&plug), &Sequential)
            .unwrap();
    let last = table.records.last().unwrap();
    let ok = table.discarded.is_empty()
        && table.max_deviation <= DEV
        && table.decay_ratio >= RATIO
        && last.gamma_length >= GAMMA_TARGET;
    let fluxes: Vec<String> = table.records.iter().map(|r| format!("{:.4}", r.flux_b)).collect();
    report(
        8,
        ok,
        format!(
            "normalised fluxes [{}], max deviation {:.2e}, first/last {:.1}, final |γ| = {:.1}",
            fluxes.join(", "),
            table.max_deviation,
            table.decay_ratio,
            last.gamma_length
        ),
    );
}

#[test]
fn c09_stokes_consistency() {
    const TOL: f64 = 1e-5;
    let g = Grid3::periodic(64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let (mut worst, mut generic) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let a = random_one_form(g, &mut rng, 2, 4);
        let da = dec::d1(&a);
        for _ in 0..4 {
            let s = random_lattice_chain(g, &mut rng);
            worst = worst.max((s.boundary().to_current().eval1(&a) - s.eval2(&da)).abs());
        }
        let o = [0, 1, 2].map(|_| rng.gen_range(0.5..5.5));
        let e1 = [0, 1, 2].map(|_| rng.gen_range(-1.0..1.0));
        let e2 = [0, 1, 2].map(|_| rng.gen_range(-1.0..1.0));
        let s = eulerize_core::currents::SurfaceChain2::parallelogram(o, e1, e2, 64);
        generic = generic.max((s.boundary().to_current().eval1(&a) - s.eval2(&da)).abs());
    }
    report(
        9,
        worst <= TOL,
        format!("lattice chains: max mismatch {worst:.2e} (tol {TOL:e}); off-lattice parallelograms (diagnostic): {generic:.2e}"),
    );
}

#[test]
fn c10_dense_oracle_agreement() {
    let mut agree = 0;
    let mut seen = [0usize; 2];
    let mut mismatches = Vec::new();
    for c in matrix() {
        let Some(oracle) = c.oracle else { continue };
        seen[usize::from(oracle)] += 1;
        let expected = if oracle { Status::Feasible } else { Status::Infeasible };
        if c.report.status == expected {
            agree += 1;
        } else {
            mismatches.push(format!("{} {}: solver {:?}, oracle {}", c.label, c.mode, c.report.status, oracle));
        }
    }
    let total = seen[0] + seen[1];
    let ok = total == 4 * SMALL_INSTANCES && mismatches.is_empty();
    report(
        10,
        ok,
        format!("{agree}/{total} verdicts agree ({} feasible, {} infeasible by the oracle); {mismatches:?}", seen[1], seen[0]),
    );
}
