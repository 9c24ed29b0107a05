//! Subcommand drivers.

use std::path::{Path, PathBuf};
use std::time::Instant;

use eulerize_core::certifier::{
    assemble, solve_with_clock, verify_dual, verify_primal, DualCertificate, DualResiduals, Mode, PrimalCertificate,
    PrimalResiduals, SolverOptions, Status,
};
use eulerize_core::dec;
use eulerize_core::field_zoo::{
    check_plug_axioms_with, gen_abc, gen_constant, insert_plug, trace_entry, AxiomOptions, AxiomReport, Placement,
    PlugField, PlugSpec, PlugVariant,
};
use eulerize_core::metric::{build_metric, recover_pressure, verify_euler};
use eulerize_core::plug_lab::{
    fit_radial_bernoulli, flux_decay_study, geometric_t_sequence, limit_cycle_study, ChainStudy, Cylinder, DecayTable,
    EuclideanDual, Segment, StudyOptions, TraceOptions,
};
use eulerize_core::{Grid3, OneForm, ScalarField0, ThreeForm, VectorField};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::cli::*;
use crate::error::{CliError, Result};
use crate::exec::Rayon;
use crate::io;
use crate::report::{RunReport, RunStatus};
use crate::vf3;

pub fn run(cli: &Cli) -> Result<RunReport> {
    let cmd = &cli.command;
    let mut rep = RunReport::new(cmd.name(), cmd);
    match cmd {
        Command::Gen(a) => gen(a, &mut rep)?,
        Command::Certify(a) => certify(a, &mut rep)?,
        Command::Pluglab(a) => pluglab(a, &mut rep)?,
        Command::Metric(a) => metric(a, &mut rep)?,
        Command::Verify(a) => verify(a, &mut rep)?,
    }
    let out = match cmd {
        Command::Gen(a) => &a.out,
        Command::Certify(a) => &a.out,
        Command::Pluglab(a) => &a.out,
        Command::Metric(a) => &a.out,
        Command::Verify(a) => &a.out,
    };
    rep.write(&out.out)?;
    Ok(rep)
}

/// Certificate file written by `certify`; field paths are relative to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateFile {
    pub mode: Mode,
    pub eta: f64,
    pub field: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<String>,
    #[serde(flatten)]
    pub certificate: Certificate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Certificate {
    Primal {
        alpha: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t: Option<f64>,
        residuals: PrimalResiduals,
    },
    Dual {
        weights: String,
        multipliers: String,
        eps_dual: f64,
        eps_cycle: f64,
        residuals: DualResiduals,
    },
}

pub const CERTIFICATE: &str = "certificate.json";

struct Output<'a> {
    dir: &'a Path,
}

impl Output<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn field<F: vf3::Field>(&self, rep: &mut RunReport, name: &str, f: &F) -> Result<String> {
        let file = format!("{name}.vf3");
        vf3::save(&self.path(&file), f)?;
        rep.artifacts.push(file.clone());
        rep.artifacts.push(format!("{name}.bin"));
        Ok(file)
    }

    fn json<T: Serialize + ?Sized>(&self, rep: &mut RunReport, name: &str, v: &T) -> Result<()> {
        io::write_json(&self.path(name), v)?;
        rep.artifacts.push(name.into());
        Ok(())
    }

    fn bytes(&self, rep: &mut RunReport, name: &str, b: &[u8]) -> Result<()> {
        io::write_atomic(&self.path(name), b)?;
        rep.artifacts.push(name.into());
        Ok(())
    }
}

fn secs(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

fn params3(p: &[f64], default: [f64; 3]) -> Result<[f64; 3]> {
    match p {
        [] => Ok(default),
        [a, b, c] => Ok([*a, *b, *c]),
        _ => Err(CliError::Input(format!("expected 3 generator parameters, got {}", p.len()))),
    }
}

fn plug_spec(a: &PlugArgs) -> Result<PlugSpec> {
    let mut spec = match &a.plug_spec {
        Some(p) => io::read_json(p)?,
        None if a.plug == Some(PlugKind::Stream) => PlugSpec::stream(),
        None => PlugSpec::wilson(),
    };
    if let Some(k) = a.plug {
        spec.variant = match k {
            PlugKind::Wilson => PlugVariant::Wilson,
            PlugKind::Stream => PlugVariant::Stream,
        };
    }
    spec.validate()?;
    Ok(spec)
}

fn axiom_options(a: &PlugArgs) -> AxiomOptions {
    AxiomOptions { samples: a.axiom_samples, budget: a.axiom_budget, matching_tol: a.matching_tol, ..AxiomOptions::default() }
}

fn par_entries(p: &PlugField, qs: &[[f64; 3]], o: &AxiomOptions) -> Vec<eulerize_core::field_zoo::EntryOutcome> {
    qs.par_iter().map(|q| trace_entry(p, *q, o)).collect()
}

/// Run the axiom checker in parallel; the caller decides what a failure means.
fn check_plug(a: &PlugArgs, rep: &mut RunReport) -> Result<(PlugField, AxiomReport)> {
    let spec = plug_spec(a)?;
    let field = PlugField::unchecked(&spec)?;
    let t = Instant::now();
    let report = check_plug_axioms_with(&field, &axiom_options(a), par_entries);
    rep.timings.insert("axioms".into(), secs(t));
    Ok((field, report))
}

fn field_from(a: &FieldArgs, rep: &mut RunReport) -> Result<(VectorField, Option<PlugField>)> {
    let t = Instant::now();
    if let Some(p) = &a.field {
        let x = vf3::load(p)?;
        rep.timings.insert("field".into(), secs(t));
        return Ok((x, None));
    }
    let grid = Grid3::with_offset(a.grid.n, a.grid.length, a.grid.offset)?;
    let has_plug = a.plug.plug.is_some() || a.plug.plug_spec.is_some();
    let gen = a
        .gen
        .or(has_plug.then_some(Generator::Plugged))
        .ok_or_else(|| CliError::Input("no field source: pass --gen, --plug or --field".into()))?;
    let out = match gen {
        Generator::Abc => {
            let [p, q, r] = params3(&a.params, [1.0, 1.0, 1.0])?;
            (gen_abc(p, q, r, grid), None)
        }
        Generator::Constant => (gen_constant(params3(&a.params, [0.0, 0.0, 1.0])?, grid), None),
        Generator::Plugged => {
            if !a.params.is_empty() {
                return Err(CliError::Input("the plugged generator takes no --params; use --plug-spec".into()));
            }
            let plug = PlugField::unchecked(&plug_spec(&a.plug)?)?.checked_with(&axiom_options(&a.plug), par_entries)?;
            let x = insert_plug(&gen_constant([0.0, 0.0, 1.0], grid), &plug, &Placement::centered(grid.length()))?;
            (x, Some(plug))
        }
    };
    rep.timings.insert("field".into(), secs(t));
    Ok(out)
}

fn gen(a: &GenArgs, rep: &mut RunReport) -> Result<()> {
    let out = Output { dir: &a.out.out };
    if a.check {
        if a.field.plug.plug.is_none() && a.field.plug.plug_spec.is_none() {
            return Err(CliError::Input("--check needs --plug or --plug-spec".into()));
        }
        let (field, report) = check_plug(&a.field.plug, rep)?;
        out.json(rep, "plug_spec.json", field.spec())?;
        out.json(rep, "axioms.json", &report)?;
        rep.summary("axioms", &report);
        rep.status = match report.first_failure() {
            Some(item) => {
                rep.warn(format!("axioms-not-satisfied: {item}"));
                RunStatus::VerificationFailed
            }
            None => RunStatus::Completed,
        };
        return Ok(());
    }
    let (x, plug) = field_from(&a.field, rep)?;
    out.field(rep, &a.name, &x)?;
    if let Some(p) = plug {
        out.json(rep, "plug_spec.json", p.spec())?;
        out.json(rep, "axioms.json", &p.report())?;
    }
    let d = dec::div(&x);
    let (min, at) = x.min_norm();
    rep.summary("field", &json!({ "n": x.grid().n(), "L": x.grid().length(), "offset": x.grid().offset(), "min_norm": min, "min_norm_index": at }));
    rep.summary("divergence", &json!({ "sup": d.sup_norm(), "l2": d.l2_norm() }));
    Ok(())
}

fn certify(a: &CertifyArgs, rep: &mut RunReport) -> Result<()> {
    let out = Output { dir: &a.out.out };
    let (x, _) = field_from(&a.field, rep)?;
    let y = match (a.mode, &a.y) {
        (Mode::VorticityPair, Some(p)) => Some(vf3::load::<VectorField>(p)?),
        (Mode::VorticityPair, None) => Some(dec::curl_field(&x)),
        (_, Some(_)) => {
            rep.warn("--y is only used in vorticity-pair mode".into());
            None
        }
        _ => None,
    };
    let mu: Option<ThreeForm> = a.mu.as_deref().map(vf3::load).transpose()?;
    let p = assemble(a.mode, &x, y.as_ref(), mu.as_ref(), a.eta)?;
    let h = x.grid().h();
    if p.eta_below_truncation() {
        rep.warn(format!("eta = {:e} is below the truncation scale h² = {:e}", a.eta, h * h));
    }
    let field = out.field(rep, "field", &x)?;
    let y_file = y.as_ref().map(|y| out.field(rep, "y", y)).transpose()?;
    let mu_file = mu.as_ref().map(|m| out.field(rep, "mu", m)).transpose()?;
    rep.summary(
        "problem",
        &json!({ "mode": a.mode, "n": x.grid().n(), "h": h, "eta": a.eta, "unknowns": p.n_unknowns(), "equalities": p.n_eq(), "inequalities": p.n_in() }),
    );

    let s = &a.solver;
    let opts = SolverOptions {
        max_iterations: s.max_iterations,
        time_limit: s.time_limit,
        eps_dual: s.eps_dual,
        eps_cycle: s.eps_cycle,
        restart_check: s.restart_check,
        certify_every: s.certify_every,
        polish_iterations: s.polish_iterations,
    };
    let t = Instant::now();
    let clock = || t.elapsed().as_secs_f64();
    let sr = solve_with_clock(&p, &opts, &clock)?;
    rep.timings.insert("solve".into(), secs(t));
    rep.summary("solver", &json!({ "status": sr.status, "iterations": sr.iterations, "diagnostics": sr.diagnostics }));
    log::info!("{} after {} iterations", sr.status.name(), sr.iterations);

    let file = |certificate| CertificateFile { mode: a.mode, eta: a.eta, field: field.clone(), y: y_file.clone(), mu: mu_file.clone(), certificate };
    match (sr.status, sr.primal, sr.dual) {
        (Status::Feasible, Some(c), _) => {
            let r = verify_primal(&c, &p)?;
            rep.summary("primal", &r);
            let alpha = out.field(rep, "alpha", &c.alpha)?;
            let b = c.b.as_ref().map(|b| out.field(rep, "b", b)).transpose()?;
            out.json(rep, CERTIFICATE, &file(Certificate::Primal { alpha, b, t: c.t, residuals: r.clone() }))?;
            rep.status = if r.verified { RunStatus::Feasible } else { RunStatus::VerificationFailed };
            if a.metric && r.verified {
                let zero = ScalarField0::zeros(*x.grid());
                let b = match a.mode {
                    Mode::Adapted => c.b.as_ref(),
                    Mode::Geodesible | Mode::Reeb => Some(&zero),
                    Mode::VorticityPair => None,
                };
                match b {
                    Some(b) => {
                        let unit = ThreeForm::constant(*x.grid(), 1.0);
                        if !metric_stage(&out, rep, &c.alpha, &x, b, mu.as_ref().unwrap_or(&unit), &a.metric_options)? {
                            rep.status = RunStatus::VerificationFailed;
                        }
                    }
                    None => rep.warn("vorticity-pair witnesses carry no Bernoulli function; metric skipped".into()),
                }
            }
        }
        (Status::Infeasible, _, Some(c)) => {
            let r = verify_dual(&c, &p, s.eps_dual, s.eps_cycle)?;
            rep.summary("dual", &r);
            let weights = out.field(rep, "weights", &c.weights)?;
            let multipliers = out.field(rep, "multipliers", &c.multipliers)?;
            let current = c.foliation_current(&x)?;
            let diracs: Vec<_> = current.diracs().iter().map(|d| (d.point, d.vector, d.weight)).collect();
            out.json(rep, "current.json", &diracs)?;
            out.json(
                rep,
                CERTIFICATE,
                &file(Certificate::Dual { weights, multipliers, eps_dual: s.eps_dual, eps_cycle: s.eps_cycle, residuals: r.clone() }),
            )?;
            rep.status = if r.verified { RunStatus::Infeasible } else { RunStatus::VerificationFailed };
        }
        (Status::Undecided, ..) => rep.status = RunStatus::Undecided,
        _ => return Err(CliError::Verification("solver status without its certificate".into())),
    }
    Ok(())
}

/// Build `g`, check the Euler equations, and write metric, pressure and diagnostics.
fn metric_stage(
    out: &Output,
    rep: &mut RunReport,
    alpha: &OneForm,
    x: &VectorField,
    b: &ScalarField0,
    mu: &ThreeForm,
    o: &MetricOptions,
) -> Result<bool> {
    let t = Instant::now();
    let g = build_metric(alpha, x, mu, !o.no_volume)?;
    let e = verify_euler(&g, x, b, mu)?;
    let pressure = recover_pressure(b, alpha, x)?;
    rep.timings.insert("metric".into(), secs(t));
    vf3::save_metric(&out.path("metric.vf3"), &g)?;
    rep.artifacts.extend(["metric.vf3".to_string(), "metric.bin".to_string()]);
    out.field(rep, "pressure", &pressure)?;
    let ok = e.residual_sup <= o.euler_tol;
    let summary = json!({ "diagnostics": g.diagnostics, "euler": e, "euler_tol": o.euler_tol, "passed": ok });
    out.json(rep, "metric.json", &summary)?;
    rep.summary("metric", &summary);
    Ok(ok)
}

fn metric(a: &MetricArgs, rep: &mut RunReport) -> Result<()> {
    let out = Output { dir: &a.out.out };
    let (x, alpha, b, mu): (VectorField, OneForm, Option<ScalarField0>, Option<ThreeForm>) = match &a.cert {
        Some(cp) => {
            let cf: CertificateFile = io::read_json(cp)?;
            let Certificate::Primal { alpha, b, .. } = &cf.certificate else {
                return Err(CliError::Input(format!("{}: not a primal certificate", cp.display())));
            };
            let load_opt = |f: &Option<String>| f.as_deref().map(|f| io::sibling(cp, f));
            (
                vf3::load(&io::sibling(cp, &cf.field))?,
                vf3::load(&io::sibling(cp, alpha))?,
                load_opt(b).as_deref().map(vf3::load).transpose()?,
                load_opt(&cf.mu).as_deref().map(vf3::load).transpose()?,
            )
        }
        None => {
            let (Some(f), Some(al)) = (&a.field, &a.alpha) else {
                return Err(CliError::Input("pass --cert, or --field with --alpha".into()));
            };
            (vf3::load(f)?, vf3::load(al)?, a.b.as_deref().map(vf3::load).transpose()?, None)
        }
    };
    let mu = match (mu, &a.mu) {
        (_, Some(p)) => vf3::load(p)?,
        (Some(m), None) => m,
        (None, None) => ThreeForm::constant(*x.grid(), 1.0),
    };
    let b = b.unwrap_or_else(|| ScalarField0::zeros(*x.grid()));
    let ok = metric_stage(&out, rep, &alpha, &x, &b, &mu, &a.options)?;
    rep.status = if ok { RunStatus::Completed } else { RunStatus::VerificationFailed };
    Ok(())
}

fn verify(a: &VerifyArgs, rep: &mut RunReport) -> Result<()> {
    let cp = &a.cert;
    let cf: CertificateFile = io::read_json(cp)?;
    let path = |f: &str| io::sibling(cp, f);
    let x: VectorField = vf3::load(&path(&cf.field))?;
    let y: Option<VectorField> = cf.y.as_deref().map(|f| vf3::load(&path(f))).transpose()?;
    let mu: Option<ThreeForm> = cf.mu.as_deref().map(|f| vf3::load(&path(f))).transpose()?;
    let p = assemble(cf.mode, &x, y.as_ref(), mu.as_ref(), cf.eta)?;
    let t = Instant::now();
    let ok = match &cf.certificate {
        Certificate::Primal { alpha, b, t, residuals } => {
            let c = PrimalCertificate {
                mode: cf.mode,
                alpha: vf3::load(&path(alpha))?,
                b: b.as_deref().map(|f| vf3::load(&path(f))).transpose()?,
                t: *t,
                residuals: residuals.clone(),
            };
            let r = verify_primal(&c, &p)?;
            let identical = &r == residuals;
            rep.summary("primal", &json!({ "recomputed": r, "stored": residuals, "identical": identical }));
            r.verified && identical
        }
        Certificate::Dual { weights, multipliers, eps_dual, eps_cycle, residuals } => {
            let c = DualCertificate {
                mode: cf.mode,
                weights: vf3::load(&path(weights))?,
                multipliers: vf3::load(&path(multipliers))?,
                residuals: residuals.clone(),
            };
            let r = verify_dual(&c, &p, *eps_dual, *eps_cycle)?;
            let identical = &r == residuals;
            rep.summary("dual", &json!({ "recomputed": r, "stored": residuals, "identical": identical }));
            r.verified && identical
        }
    };
    rep.timings.insert("verify".into(), secs(t));
    rep.status = if ok { RunStatus::Verified } else { RunStatus::VerificationFailed };
    Ok(())
}

fn csv_rows(rows: impl Iterator<Item = [String; 6]>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let wrap = |e| CliError::Csv { path: PathBuf::from("<csv>"), source: e };
    w.write_record(["t_n", "|γ|", "mass", "flat-bound", "flux_a", "flux_b"]).map_err(wrap)?;
    for r in rows {
        w.write_record(&r).map_err(wrap)?;
    }
    w.into_inner().map_err(|e| CliError::Input(e.to_string()))
}

pub fn chain_csv(st: &ChainStudy) -> Result<Vec<u8>> {
    csv_rows(st.records.iter().map(|r| {
        [r.t.to_string(), r.gamma_length.to_string(), r.chain_mass.to_string(), r.flat_bound.to_string(), String::new(), String::new()]
    }))
}

pub fn decay_csv(table: &DecayTable) -> Result<Vec<u8>> {
    csv_rows(table.records.iter().map(|r| {
        [
            r.t.to_string(),
            r.gamma_length.to_string(),
            r.chain_mass.to_string(),
            r.flat_bound.to_string(),
            r.flux_a.to_string(),
            r.flux_b.to_string(),
        ]
    }))
}

fn pluglab(a: &PluglabArgs, rep: &mut RunReport) -> Result<()> {
    let out = Output { dir: &a.out.out };
    let studies = if a.study.is_empty() { vec![Study::Axioms, Study::Chains, Study::Flux] } else { a.study.clone() };
    let [r_from, r_to] = a.sigma[..] else {
        return Err(CliError::Input(format!("--sigma takes r_from,r_to, got {} values", a.sigma.len())));
    };
    // downstream studies need a checked plug, so the checker always runs
    let (plug, report) = check_plug(&a.plug, rep)?;
    out.json(rep, "plug_spec.json", plug.spec())?;
    out.json(rep, "axioms.json", &report)?;
    rep.summary("axioms", &report);
    if let Some(item) = report.first_failure() {
        rep.warn(format!("axioms-not-satisfied: {item}"));
        rep.status = RunStatus::VerificationFailed;
        return Ok(());
    }
    let wants = |s| studies.contains(&s);
    if !wants(Study::Chains) && !wants(Study::Flux) {
        return Ok(());
    }
    let dom = Cylinder::of(plug.spec());
    let sigma = Segment::radial(r_from, r_to);
    let opts = StudyOptions::for_plug(&plug);
    let ts = geometric_t_sequence(&plug, &dom, &sigma, a.t0, a.gamma_target, &TraceOptions::default())?;
    rep.summary("t_sequence", &ts);
    if wants(Study::Chains) {
        let t = Instant::now();
        let st = limit_cycle_study(&plug, &dom, &sigma, &ts, &opts, &Rayon)?;
        rep.timings.insert("chains".into(), secs(t));
        out.json(rep, "chains.json", &st)?;
        out.bytes(rep, "chains.csv", &chain_csv(&st)?)?;
        let last = st.records.last();
        rep.summary(
            "chains",
            &json!({
                "strictly_decreasing": st.strictly_decreasing(),
                "flat_bounds": st.flat_bounds(),
                "final_gamma_length": last.map(|r| r.gamma_length),
                "max_orbit_mass_defect": st.records.iter().map(|r| (r.orbit_mass - 1.0).abs()).fold(0.0, f64::max),
                "discarded": st.discarded,
            }),
        );
    }
    if wants(Study::Flux) {
        let t = Instant::now();
        let s = plug.spec();
        let b = fit_radial_bernoulli(&plug, (s.r_in, s.r_out), a.bernoulli_nr, a.bernoulli_nz)?;
        let table = flux_decay_study(&plug, &dom, &sigma, &ts, &EuclideanDual(&plug), &b, &opts, &Rayon)?;
        rep.timings.insert("flux".into(), secs(t));
        out.json(rep, "decay.json", &table)?;
        out.bytes(rep, "decay.csv", &decay_csv(&table)?)?;
        rep.summary(
            "flux",
            &json!({
                "max_deviation": table.max_deviation,
                "decay_ratio": table.decay_ratio,
                "max_envelope_constant": table.max_envelope_constant,
                "normalised_flux": table.records.iter().map(|r| r.flux_b).collect::<Vec<_>>(),
                "discarded": table.discarded,
            }),
        );
    }
    Ok(())
}
