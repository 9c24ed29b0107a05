//! Flow-swept surfaces inside a plug.
//!
//! A transversal curve `σ` in the entry disk `D × {−1}` is pushed along the
//! flow until every point leaves through `D × {1}`; the swept sheet `A_t` is
//! a structured quad mesh whose `v` direction is the flow direction. The
//! studies here track how `∂A_t / |γ(σ(t))|` approaches the normalised orbit
//! current of the last leaf, and how the normalised vorticity flux through
//! `A_t` decays as the last leaf lengthens.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::currents::{flat_distance_bound, PolylineCurrent1, SurfaceChain2, TwoFormEval};
use crate::dec::{self, Interpolate};
use crate::field_zoo::{PlugField, PlugSpec};
use crate::fields::{OneForm, ScalarField0, TwoForm};
use crate::math;
use crate::ode::{self, Flow, Reversed, Termination};
use crate::{Error, Result};

/// Slack on the entry/exit planes and the lateral walls.
const PLANE_TOL: f64 = 1e-9;

/// Runs independent jobs; the std companion crate provides a parallel one.
pub trait Executor {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// In-order, single-threaded executor.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}

/// A flow that also knows its curl.
pub trait VorticityFlow: Flow {
    fn vorticity(&self, x: [f64; 3]) -> [f64; 3];
}

impl VorticityFlow for PlugField {
    fn vorticity(&self, x: [f64; 3]) -> [f64; 3] {
        self.curl(x)
    }
}

/// A velocity closure paired with its curl.
pub struct WithVorticity<V, W> {
    pub velocity: V,
    pub vorticity: W,
}

impl<V: Fn([f64; 3]) -> [f64; 3], W> Flow for WithVorticity<V, W> {
    fn velocity(&self, x: [f64; 3]) -> [f64; 3] {
        (self.velocity)(x)
    }
}

impl<V: Fn([f64; 3]) -> [f64; 3], W: Fn([f64; 3]) -> [f64; 3]> VorticityFlow for WithVorticity<V, W> {
    fn vorticity(&self, x: [f64; 3]) -> [f64; 3] {
        (self.vorticity)(x)
    }
}

/// The slab `{r_in ≤ r ≤ r_out} × [−1, 1]`; `r_out = ∞` drops the lateral wall.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    pub r_in: f64,
    pub r_out: f64,
}

impl Cylinder {
    pub fn of(spec: &PlugSpec) -> Self {
        Self { r_in: spec.r_in, r_out: spec.r_out }
    }

    /// The whole slab `R² × [−1, 1]`.
    pub fn slab() -> Self {
        Self { r_in: 0.0, r_out: f64::INFINITY }
    }

    fn radius_ok(&self, x: [f64; 3]) -> bool {
        let r = math::hypot(x[0], x[1]);
        r >= self.r_in - PLANE_TOL && r <= self.r_out + PLANE_TOL
    }

    pub fn in_entry(&self, x: [f64; 3]) -> bool {
        (x[2] + 1.0).abs() <= PLANE_TOL && self.radius_ok(x)
    }

    pub fn in_exit(&self, x: [f64; 3]) -> bool {
        (x[2] - 1.0).abs() <= PLANE_TOL && self.radius_ok(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceOptions {
    pub step: f64,
    pub budget: f64,
    /// Bound on the step-halving error estimate of the exit point.
    pub tolerance: f64,
    /// Step halvings allowed when the estimate exceeds `tolerance`.
    pub max_refinements: u32,
    /// Keep every `stride`-th step as a vertex (0: endpoints only).
    pub stride: usize,
    pub check: bool,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self { step: 0.02, budget: 1e3, tolerance: 1e-6, max_refinements: 3, stride: 1, check: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Exit {
    Exited { time: f64, point: [f64; 3] },
    /// Budget exhausted inside the plug.
    Trapped { time: f64, point: [f64; 3] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitTrace {
    pub initial: [f64; 3],
    pub step: f64,
    pub vertices: Vec<[f64; 3]>,
    /// Chord length summed over every step.
    pub arc_length: f64,
    pub exit: Exit,
    /// `|p_h − p_{h/2}| / 15` for the exit point; `None` when unchecked or trapped.
    pub error_estimate: Option<f64>,
}

impl OrbitTrace {
    pub fn is_trapped(&self) -> bool {
        matches!(self.exit, Exit::Trapped { .. })
    }

    pub fn time(&self) -> f64 {
        match self.exit {
            Exit::Exited { time, .. } | Exit::Trapped { time, .. } => time,
        }
    }

    pub fn end(&self) -> [f64; 3] {
        match self.exit {
            Exit::Exited { point, .. } | Exit::Trapped { point, .. } => point,
        }
    }

    pub fn polyline(&self) -> PolylineCurrent1 {
        PolylineCurrent1::new(self.vertices.clone())
    }
}

fn run<F: Flow + ?Sized>(field: &F, domain: &Cylinder, x0: [f64; 3], dt: f64, opts: &TraceOptions, stride: usize, up: bool) -> Result<ode::Path> {
    let sign = if up { 1.0 } else { -1.0 };
    let event = |x: [f64; 3]| sign * x[2] - 1.0;
    let outside = |x: [f64; 3]| !domain.radius_ok(x) || sign * x[2] < -1.0 - PLANE_TOL;
    let path = ode::integrate(field, x0, dt, opts.budget, event, outside, stride);
    if let Termination::Escaped { time, .. } = path.termination {
        return Err(Error::LeftThroughSide { time });
    }
    Ok(path)
}

fn trace_dir<F: Flow + ?Sized>(field: &F, domain: &Cylinder, x0: [f64; 3], opts: &TraceOptions, up: bool) -> Result<OrbitTrace> {
    if !(opts.step > 0.0 && opts.budget > 0.0) {
        return Err(Error::InvalidArgument("step and budget must be positive".into()));
    }
    let mut dt = opts.step;
    let mut refinements = 0;
    loop {
        let path = run(field, domain, x0, dt, opts, opts.stride, up)?;
        let (exit, estimate) = match path.termination {
            Termination::Event { time, point } => {
                let estimate = if opts.check {
                    let fine = run(field, domain, x0, 0.5 * dt, opts, 0, up)?;
                    match fine.termination {
                        Termination::Event { point: q, .. } => math::norm(math::sub(point, q)) / 15.0,
                        _ => f64::INFINITY,
                    }
                } else {
                    0.0
                };
                (Exit::Exited { time, point }, opts.check.then_some(estimate))
            }
            Termination::Budget { time, point } => (Exit::Trapped { time, point }, None),
            Termination::Escaped { .. } => unreachable!(),
        };
        let retry = matches!(estimate, Some(e) if e > opts.tolerance) && refinements < opts.max_refinements;
        if !retry {
            return Ok(OrbitTrace {
                initial: x0,
                step: dt,
                vertices: path.vertices,
                arc_length: path.arc_length,
                exit,
                error_estimate: estimate,
            });
        }
        dt *= 0.5;
        refinements += 1;
    }
}

/// Follows `X` from a point of the entry disk until it crosses `z = 1`.
pub fn trace_orbit<F: Flow + ?Sized>(field: &F, domain: &Cylinder, x0: [f64; 3], opts: &TraceOptions) -> Result<OrbitTrace> {
    if !domain.in_entry(x0) {
        return Err(Error::NotInEntryRegion);
    }
    trace_dir(field, domain, x0, opts, true)
}

/// Follows `−X` from a point of the exit disk back down to `z = −1`.
pub fn trace_orbit_reversed<F: Flow + ?Sized>(field: &F, domain: &Cylinder, x0: [f64; 3], opts: &TraceOptions) -> Result<OrbitTrace> {
    if !domain.in_exit(x0) {
        return Err(Error::NotInEntryRegion);
    }
    trace_dir(&Reversed(field), domain, x0, opts, false)
}

/// A parametrised curve `σ: [0, 1] → R³`.
pub trait Curve: Sync {
    fn point(&self, tau: f64) -> [f64; 3];
    fn tangent(&self, tau: f64) -> [f64; 3];
    fn length_between(&self, a: f64, b: f64) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: [f64; 3],
    pub end: [f64; 3],
}

impl Segment {
    /// Radial segment at angle 0 in the plane `z = −1`, from `r_from` to `r_to`.
    pub fn radial(r_from: f64, r_to: f64) -> Self {
        Self { start: [r_from, 0.0, -1.0], end: [r_to, 0.0, -1.0] }
    }
}

impl Curve for Segment {
    fn point(&self, tau: f64) -> [f64; 3] {
        math::add(self.start, math::scale(tau, math::sub(self.end, self.start)))
    }
    fn tangent(&self, _tau: f64) -> [f64; 3] {
        math::sub(self.end, self.start)
    }
    fn length_between(&self, a: f64, b: f64) -> f64 {
        (b - a).abs() * math::norm(math::sub(self.end, self.start))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainOptions {
    pub trace: TraceOptions,
    pub min_orbits: usize,
    /// Target gap between neighbouring exit times.
    pub max_exit_time_gap: f64,
    pub max_tau_gap: f64,
    pub max_orbits: usize,
    /// Flow-direction samples per unit time along the longest orbit.
    pub samples_per_time: f64,
    pub min_samples: usize,
    pub max_vertices: usize,
    /// Angular tolerance of the per-quad tangency flag.
    pub tangency_tol: f64,
}

impl Default for ChainOptions {
    fn default() -> Self {
        Self {
            trace: TraceOptions { stride: 0, ..TraceOptions::default() },
            min_orbits: 32,
            max_exit_time_gap: 0.05,
            max_tau_gap: 1.0 / 512.0,
            max_orbits: 20_000,
            samples_per_time: 20.0,
            min_samples: 1024,
            max_vertices: 40_000_000,
            tangency_tol: 1e-3,
        }
    }
}

/// Both mesh directions are multiples of this, so the sub-meshes taking
/// every second and every fourth node exist (for Romberg extrapolation).
pub const MESH_MULTIPLE: usize = 4;

/// A swept sheet `A_t` with its per-leaf data. Vertex `(i, j)` is
/// `φ^{s_j T_i}(σ(τ_i))` with `s_j = j / (nv − 1)`: row 0 is `σ_t`, the last
/// row the exit curve `σ̃_t`, column `i` the leaf through `σ(τ_i)`.
///
/// The τ nodes are the image of a uniform mesh under the smooth map
/// `Φ⁻¹`, `Φ(τ) = τ/Δτ + (c/ΔT)(1/(1 − τ) − 1)`, which grades toward the
/// trapped end `σ(1)` where exit times grow like `c/(1 − τ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub t: f64,
    pub surface: SurfaceChain2,
    pub taus: Vec<f64>,
    pub exit_times: Vec<f64>,
    /// Arc lengths of the integrator traces (every step).
    pub trace_lengths: Vec<f64>,
    pub max_error_estimate: f64,
    /// Largest gap between neighbouring exit times.
    pub max_exit_time_gap: f64,
    /// True if the τ mesh was limited by `max_orbits`.
    pub refinement_capped: bool,
}

impl Chain {
    pub fn leaf_count(&self) -> usize {
        self.taus.len()
    }

    /// Leaf through `σ(t)` as a polyline.
    pub fn last_leaf(&self) -> PolylineCurrent1 {
        self.surface.column(self.taus.len() - 1)
    }

    pub fn tangency_fraction(&self) -> f64 {
        match &self.surface.tangent {
            Some(flags) if !flags.is_empty() => flags.iter().filter(|f| **f).count() as f64 / flags.len() as f64,
            _ => 0.0,
        }
    }
}

/// Grading map `Φ(τ) = a τ + b (1/(1 − τ) − 1)` and its inverse.
#[derive(Debug, Clone, Copy)]
struct Grading {
    a: f64,
    b: f64,
}

impl Grading {
    fn phi(&self, tau: f64) -> f64 {
        if self.b == 0.0 {
            return self.a * tau;
        }
        self.a * tau + self.b * (1.0 / (1.0 - tau) - 1.0)
    }

    fn inverse(&self, y: f64) -> f64 {
        // a τ² − (a + b + y) τ + y = 0, smaller root
        let p = self.a + self.b + y;
        let disc = (p * p - 4.0 * self.a * y).max(0.0);
        2.0 * y / (p + math::sqrt(disc))
    }
}

fn round_up(n: usize, m: usize) -> usize {
    n.div_ceil(m) * m
}

/// Sweeps `σ([0, t])` along the flow. Every sampled `σ(τ)` must leave the plug.
pub fn build_chain<F, C, E>(field: &F, domain: &Cylinder, sigma: &C, t: f64, opts: &ChainOptions, exec: &E) -> Result<Chain>
where
    F: Flow + Sync + ?Sized,
    C: Curve + ?Sized,
    E: Executor,
{
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::InvalidArgument("chain parameter must lie in (0, 1]".into()));
    }
    if opts.min_orbits < 2 || opts.max_orbits < opts.min_orbits.max(MESH_MULTIPLE + 1) {
        return Err(Error::InvalidArgument("need at least two orbits".into()));
    }
    if !(opts.max_exit_time_gap > 0.0 && opts.max_tau_gap > 0.0 && opts.samples_per_time > 0.0) {
        return Err(Error::InvalidArgument("mesh controls must be positive".into()));
    }
    let trace_at = |tau: f64| -> Result<OrbitTrace> {
        let tr = trace_orbit(field, domain, sigma.point(tau), &opts.trace)?;
        if tr.is_trapped() {
            return Err(Error::TrappedInRange { tau });
        }
        Ok(tr)
    };
    let first = trace_at(0.0)?;
    let last = trace_at(t)?;
    let growth = if t < 1.0 { 1.0 / (1.0 - t) - 1.0 } else { f64::INFINITY };
    let c = if growth.is_finite() { ((last.time() - first.time()) / growth).max(0.0) } else { 0.0 };
    let mut grading = Grading { a: 1.0 / opts.max_tau_gap, b: c / opts.max_exit_time_gap };
    let max_intervals = (opts.max_orbits - 1) / MESH_MULTIPLE * MESH_MULTIPLE;
    let mut capped = false;
    let mut taus = Vec::new();
    let mut leaves: Vec<OrbitTrace> = Vec::new();
    let mut gap = f64::INFINITY;
    for _pass in 0..3 {
        let mut m = round_up((math::ceil(grading.phi(t)) as usize).max(opts.min_orbits - 1), MESH_MULTIPLE);
        if m > max_intervals {
            m = max_intervals;
            capped = true;
        }
        let top = grading.phi(t);
        taus = (0..=m).map(|i| if i == m { t } else { grading.inverse(top * i as f64 / m as f64) }).collect();
        leaves = exec.map(m + 1, |i| trace_at(taus[i])).into_iter().collect::<Result<_>>()?;
        gap = leaves.windows(2).map(|w| (w[1].time() - w[0].time()).abs()).fold(0.0, f64::max);
        if capped || gap <= 1.5 * opts.max_exit_time_gap || grading.b == 0.0 {
            break;
        }
        grading.b *= gap / opts.max_exit_time_gap;
    }

    let t_max = leaves.iter().map(|tr| tr.time()).fold(0.0, f64::max);
    let k = round_up((math::ceil(t_max * opts.samples_per_time) as usize).max(opts.min_samples).max(MESH_MULTIPLE), MESH_MULTIPLE);
    let nv = k + 1;
    let nu = leaves.len();
    if nu.saturating_mul(nv) > opts.max_vertices {
        return Err(Error::InvalidArgument("chain exceeds the vertex budget".into()));
    }
    let h = opts.trace.step;
    let columns: Vec<Vec<[f64; 3]>> = exec.map(nu, |i| {
        let tr = &leaves[i];
        let total = tr.time();
        let q = (math::ceil(total / (k as f64 * h)) as usize).max(1);
        let dt = total / (k * q) as f64;
        let mut x = tr.initial;
        let mut col = Vec::with_capacity(nv);
        col.push(x);
        for _ in 0..k {
            for _ in 0..q {
                x = ode::rk4_step(field, x, dt);
            }
            col.push(x);
        }
        col
    });
    let mut vertices = alloc::vec![[0.0; 3]; nu * nv];
    for (i, col) in columns.iter().enumerate() {
        vertices[i * nv..(i + 1) * nv].copy_from_slice(col);
    }
    let mut surface = SurfaceChain2::new(nu, nv, vertices)?;
    surface.tangent = Some(surface.tangency_flags(|x| field.velocity(x), opts.tangency_tol));
    let max_error_estimate = leaves.iter().filter_map(|tr| tr.error_estimate).fold(0.0, f64::max);
    Ok(Chain {
        t,
        surface,
        exit_times: leaves.iter().map(|l| l.time()).collect(),
        trace_lengths: leaves.iter().map(|l| l.arc_length).collect(),
        taus,
        max_error_estimate,
        max_exit_time_gap: gap,
        refinement_capped: capped,
    })
}

/// Parameters `t_0 < t_1 < …` with `|γ(σ(t_n))| ≈ 2ⁿ |γ(σ(t_0))|`, stopping
/// once the leaf length reaches `target_length`. Each `t_n` is found by
/// bisection on `(t_{n−1}, 1)`, treating trapped orbits as infinitely long.
pub fn geometric_t_sequence<F, C>(field: &F, domain: &Cylinder, sigma: &C, t0: f64, target_length: f64, opts: &TraceOptions) -> Result<Vec<f64>>
where
    F: Flow + ?Sized,
    C: Curve + ?Sized,
{
    let unchecked = TraceOptions { check: false, stride: 0, ..*opts };
    let length = |tau: f64| -> Result<f64> {
        let tr = trace_orbit(field, domain, sigma.point(tau), &unchecked)?;
        Ok(if tr.is_trapped() { f64::INFINITY } else { tr.arc_length })
    };
    let l0 = length(t0)?;
    if !l0.is_finite() {
        return Err(Error::TrappedInRange { tau: t0 });
    }
    let mut ts = alloc::vec![t0];
    let mut last = l0;
    let mut goal = l0;
    while last < target_length {
        goal *= 2.0;
        let (mut lo, mut hi) = (*ts.last().unwrap(), 1.0);
        let mut best = None;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let l = length(mid)?;
            if l.is_finite() && (l - goal).abs() <= 0.02 * goal {
                best = Some((mid, l));
                break;
            }
            if l < goal {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 {
                break;
            }
        }
        let (tn, ln) = match best {
            Some(b) => b,
            None => {
                let l = length(lo)?;
                if !(l.is_finite() && l > last) {
                    break;
                }
                (lo, l)
            }
        };
        ts.push(tn);
        last = ln;
    }
    Ok(ts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyOptions {
    pub chain: ChainOptions,
    /// Radius of the tube used for concentration fractions (default `2h`, `h = 2π/32`).
    pub concentration_radius: f64,
    /// Circles `(r, z)` around which concentration is measured; the first is
    /// the one the trapped orbit limits onto.
    pub circles: Vec<(f64, f64)>,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self { chain: ChainOptions::default(), concentration_radius: 2.0 * math::TAU / 32.0, circles: Vec::new() }
    }
}

impl StudyOptions {
    pub fn for_plug(plug: &PlugField) -> Self {
        let mut circles = plug.reeb_circles();
        circles.sort_by(|a, b| a.1.total_cmp(&b.1));
        Self { circles, ..Self::default() }
    }
}

/// One entry of a [`ChainStudy`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRecord {
    pub t: f64,
    /// Length of the sampled last leaf (the normalising `|γ(σ(t))|`).
    pub gamma_length: f64,
    /// Integrator arc length of the same leaf.
    pub trace_length: f64,
    pub chain_mass: f64,
    /// `|σ_t| · max_i |γ(σ(τ_i))|`.
    pub mass_bound: f64,
    pub sigma_length: f64,
    pub sigma_tilde_length: f64,
    pub gamma0_length: f64,
    /// Mass of `∂A_t` measured as a current.
    pub boundary_mass: f64,
    /// `| mass(∂A_t) − (|σ_t| + |σ̃_t| + |γ(σ(0))| + |γ(σ(t))|) |`.
    pub decomposition_defect: f64,
    /// Bound on `F(∂A_t/|γ| − γ(σ(t))/|γ|)`.
    pub flat_bound: f64,
    /// Mass of the normalised orbit current.
    pub orbit_mass: f64,
    /// Mass fraction of the normalised orbit current near the first circle.
    pub concentration_first: f64,
    /// Mass fraction near any of the circles.
    pub concentration_all: f64,
    pub tangency_fraction: f64,
    pub leaves: usize,
    pub samples: usize,
    pub max_error_estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainStudy {
    pub sigma_start: [f64; 3],
    pub sigma_end: [f64; 3],
    pub sigma_length: f64,
    pub records: Vec<ChainRecord>,
    /// Parameters dropped to keep `|γ(σ(t_n))|` increasing.
    pub discarded: Vec<f64>,
}

impl ChainStudy {
    pub fn flat_bounds(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.flat_bound).collect()
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.records.windows(2).all(|w| w[1].flat_bound < w[0].flat_bound)
    }
}

fn near_circle(x: [f64; 3], c: (f64, f64), radius: f64) -> bool {
    math::hypot(math::hypot(x[0], x[1]) - c.0, x[2] - c.1) <= radius
}

/// Measurements for one chain.
pub fn chain_record<C: Curve + ?Sized>(chain: &Chain, sigma: &C, opts: &StudyOptions) -> Result<ChainRecord> {
    let s = &chain.surface;
    let edges = s.boundary_edges();
    let leaf = &edges.right;
    let gamma = leaf.length();
    if gamma <= 0.0 {
        return Err(Error::InvalidArgument("degenerate leaf".into()));
    }
    let sigma_length = sigma.length_between(0.0, chain.t);
    let (bottom, top, left) = (edges.bottom.length(), edges.top.length(), edges.left.length());
    let boundary = s.boundary().to_current();
    let boundary_mass = boundary.mass();
    let max_leaf = (0..chain.leaf_count()).map(|i| s.column(i).length()).fold(0.0, f64::max);
    let orbit = leaf.to_current().scaled(1.0 / gamma);
    let flat_bound = flat_distance_bound(&boundary.scaled(1.0 / gamma), &orbit, None)?;
    let r = opts.concentration_radius;
    let concentration_first = match opts.circles.first() {
        Some(c) => orbit.mass_fraction(|x| near_circle(x, *c, r)),
        None => 0.0,
    };
    let concentration_all = orbit.mass_fraction(|x| opts.circles.iter().any(|c| near_circle(x, *c, r)));
    Ok(ChainRecord {
        t: chain.t,
        gamma_length: gamma,
        trace_length: *chain.trace_lengths.last().unwrap(),
        chain_mass: s.mass(),
        mass_bound: sigma_length * max_leaf,
        sigma_length,
        sigma_tilde_length: top,
        gamma0_length: left,
        boundary_mass,
        decomposition_defect: (boundary_mass - (bottom + top + left + gamma)).abs(),
        flat_bound,
        orbit_mass: orbit.mass(),
        concentration_first,
        concentration_all,
        tangency_fraction: chain.tangency_fraction(),
        leaves: chain.leaf_count(),
        samples: s.dims().1,
        max_error_estimate: chain.max_error_estimate,
    })
}

/// Keeps the longest-so-far prefix maxima of `(t, |γ|)` pairs, sorted by `t`.
fn monotone_selection(mut pairs: Vec<(f64, f64)>) -> (Vec<f64>, Vec<f64>) {
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    let mut best = f64::NEG_INFINITY;
    for (t, l) in pairs {
        if l > best {
            best = l;
            kept.push(t);
        } else {
            dropped.push(t);
        }
    }
    (kept, dropped)
}

/// Chains for every `t_n` (after monotone selection), with flat-distance
/// bounds between the normalised boundary and the normalised last leaf.
pub fn limit_cycle_study<F, C, E>(field: &F, domain: &Cylinder, sigma: &C, ts: &[f64], opts: &StudyOptions, exec: &E) -> Result<ChainStudy>
where
    F: Flow + Sync + ?Sized,
    C: Curve + ?Sized,
    E: Executor,
{
    let (kept, discarded) = select_parameters(field, domain, sigma, ts, &opts.chain.trace)?;
    let mut records = Vec::with_capacity(kept.len());
    for &t in &kept {
        let chain = build_chain(field, domain, sigma, t, &opts.chain, exec)?;
        records.push(chain_record(&chain, sigma, opts)?);
    }
    Ok(ChainStudy {
        sigma_start: sigma.point(0.0),
        sigma_end: sigma.point(1.0),
        sigma_length: sigma.length_between(0.0, 1.0),
        records,
        discarded,
    })
}

fn select_parameters<F, C>(field: &F, domain: &Cylinder, sigma: &C, ts: &[f64], opts: &TraceOptions) -> Result<(Vec<f64>, Vec<f64>)>
where
    F: Flow + ?Sized,
    C: Curve + ?Sized,
{
    if ts.is_empty() {
        return Err(Error::InvalidArgument("empty parameter sequence".into()));
    }
    let unchecked = TraceOptions { check: false, stride: 0, ..*opts };
    let mut pairs = Vec::with_capacity(ts.len());
    for &t in ts {
        let tr = trace_orbit(field, domain, sigma.point(t), &unchecked)?;
        if tr.is_trapped() {
            return Err(Error::TrappedInRange { tau: t });
        }
        pairs.push((t, tr.arc_length));
    }
    Ok(monotone_selection(pairs))
}

/// A candidate 1-form together with its exterior derivative (as a curl).
pub trait CoframeEval: Sync {
    fn alpha(&self, x: [f64; 3]) -> [f64; 3];
    fn curl_alpha(&self, x: [f64; 3]) -> [f64; 3];
}

/// A candidate Bernoulli function with its gradient.
pub trait PotentialEval: Sync {
    fn value(&self, x: [f64; 3]) -> f64;
    fn gradient(&self, x: [f64; 3]) -> [f64; 3];
}

/// The Euclidean dual `α = X♭` of a flow.
pub struct EuclideanDual<'a, F: ?Sized>(pub &'a F);

impl<F: VorticityFlow + Sync + ?Sized> CoframeEval for EuclideanDual<'_, F> {
    fn alpha(&self, x: [f64; 3]) -> [f64; 3] {
        self.0.velocity(x)
    }
    fn curl_alpha(&self, x: [f64; 3]) -> [f64; 3] {
        self.0.vorticity(x)
    }
}

/// Grid 1-form sampled by interpolation, curl from the discrete `d1`.
pub struct GridCoframe {
    alpha: OneForm,
    d_alpha: TwoForm,
}

impl GridCoframe {
    pub fn new(alpha: &OneForm) -> Self {
        Self { alpha: alpha.clone(), d_alpha: dec::d1(alpha) }
    }
}

impl CoframeEval for GridCoframe {
    fn alpha(&self, x: [f64; 3]) -> [f64; 3] {
        self.alpha.interp(x)
    }
    fn curl_alpha(&self, x: [f64; 3]) -> [f64; 3] {
        self.d_alpha.interp(x)
    }
}

/// Grid 0-form sampled by interpolation, gradient from the discrete `d0`.
pub struct GridPotential {
    b: ScalarField0,
    db: OneForm,
}

impl GridPotential {
    pub fn new(b: &ScalarField0) -> Self {
        Self { b: b.clone(), db: dec::d0(b) }
    }
}

impl PotentialEval for GridPotential {
    fn value(&self, x: [f64; 3]) -> f64 {
        self.b.interp(x)
    }
    fn gradient(&self, x: [f64; 3]) -> [f64; 3] {
        self.db.interp(x)
    }
}

/// `B ≡ 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroPotential;

impl PotentialEval for ZeroPotential {
    fn value(&self, _x: [f64; 3]) -> f64 {
        0.0
    }
    fn gradient(&self, _x: [f64; 3]) -> [f64; 3] {
        [0.0; 3]
    }
}

/// Axisymmetric `B(r)` with piecewise-linear `B′` on a uniform radial table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub r0: f64,
    pub dr: f64,
    /// `B′(r0 + i·dr)`.
    pub slope: Vec<f64>,
    /// `B(r0 + i·dr)`, with `B(r0) = 0`.
    pub value: Vec<f64>,
}

impl RadialProfile {
    pub fn from_slopes(r0: f64, dr: f64, slope: Vec<f64>) -> Result<Self> {
        if slope.len() < 2 || !(dr > 0.0) {
            return Err(Error::InvalidArgument("radial table needs two nodes and dr > 0".into()));
        }
        let mut value = alloc::vec![0.0; slope.len()];
        for i in 1..slope.len() {
            value[i] = value[i - 1] + 0.5 * dr * (slope[i - 1] + slope[i]);
        }
        Ok(Self { r0, dr, slope, value })
    }

    fn locate(&self, r: f64) -> (usize, f64) {
        let n = self.slope.len();
        let u = ((r - self.r0) / self.dr).clamp(0.0, (n - 1) as f64);
        let i = (math::floor(u) as usize).min(n - 2);
        (i, (u - i as f64) * self.dr)
    }

    pub fn slope_at(&self, r: f64) -> f64 {
        let (i, d) = self.locate(r);
        self.slope[i] + (self.slope[i + 1] - self.slope[i]) * d / self.dr
    }

    pub fn value_at(&self, r: f64) -> f64 {
        let (i, d) = self.locate(r);
        let k = (self.slope[i + 1] - self.slope[i]) / self.dr;
        self.value[i] + self.slope[i] * d + 0.5 * k * d * d
    }
}

impl PotentialEval for RadialProfile {
    fn value(&self, x: [f64; 3]) -> f64 {
        self.value_at(math::hypot(x[0], x[1]))
    }
    fn gradient(&self, x: [f64; 3]) -> [f64; 3] {
        let r = math::hypot(x[0], x[1]);
        if r == 0.0 {
            return [0.0; 3];
        }
        let s = self.slope_at(r) / r;
        [s * x[0], s * x[1], 0.0]
    }
}

/// Least-squares radial Bernoulli function: at each radius `B′(r)` is the
/// mean over `z ∈ [−1, 1]` of the radial part of `X × curl X`.
pub fn fit_radial_bernoulli<F: VorticityFlow + ?Sized>(field: &F, r_range: (f64, f64), nr: usize, nz: usize) -> Result<RadialProfile> {
    if nr < 2 || nz < 1 || !(r_range.1 > r_range.0) {
        return Err(Error::InvalidArgument("bad radial fit table".into()));
    }
    let dr = (r_range.1 - r_range.0) / (nr - 1) as f64;
    let slope = (0..nr)
        .map(|i| {
            let r = r_range.0 + i as f64 * dr;
            let mut acc = 0.0;
            for k in 0..nz {
                let z = -1.0 + 2.0 * (k as f64 + 0.5) / nz as f64;
                let x = [r, 0.0, z];
                acc += math::cross(field.velocity(x), field.vorticity(x))[0];
            }
            acc / nz as f64
        })
        .collect();
    RadialProfile::from_slopes(r_range.0, dr, slope)
}

/// `W` with `ω_B = i_W μ₀`, for `ω_B = (1/α(X)) [(α∧dα/μ₀) i_X μ₀ − α∧dB]`.
struct BernoulliForm<'a, F: ?Sized, A: ?Sized, B: ?Sized> {
    field: &'a F,
    alpha: &'a A,
    b: &'a B,
}

impl<F: Flow + ?Sized, A: CoframeEval + ?Sized, B: PotentialEval + ?Sized> TwoFormEval for BernoulliForm<'_, F, A, B> {
    fn flux_vector(&self, x: [f64; 3]) -> [f64; 3] {
        let a = self.alpha.alpha(x);
        let v = self.field.velocity(x);
        let ax = math::dot(a, v);
        let helicity = math::dot(a, self.alpha.curl_alpha(x));
        let g = math::cross(a, self.b.gradient(x));
        [(helicity * v[0] - g[0]) / ax, (helicity * v[1] - g[1]) / ax, (helicity * v[2] - g[2]) / ax]
    }
}

struct Vorticity<'a, F: ?Sized>(&'a F);

impl<F: VorticityFlow + ?Sized> TwoFormEval for Vorticity<'_, F> {
    fn flux_vector(&self, x: [f64; 3]) -> [f64; 3] {
        self.0.vorticity(x)
    }
}

/// One entry of a flux decay table; all fluxes are divided by `|γ(σ(t))|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxRecord {
    pub t: f64,
    pub gamma_length: f64,
    pub chain_mass: f64,
    pub flat_bound: f64,
    pub flux_a: f64,
    pub flux_b: f64,
    pub flux_a_midpoint: f64,
    pub flux_b_trapezoid: f64,
    pub deviation: f64,
    /// Midpoint quadrature of `i_{curl X} μ₀` itself.
    pub flux_vorticity: f64,
    pub min_alpha_x: f64,
    /// `max − min` of `B` on `σ([t_prev, 1])` (`t_prev = 0` for the first entry).
    pub b_oscillation: f64,
    /// `|flux_b| / (|γ_prev|/|γ| + osc)`: the measured envelope constant.
    pub envelope_constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayTable {
    pub records: Vec<FluxRecord>,
    pub discarded: Vec<f64>,
    pub max_deviation: f64,
    /// `|flux_b(first)| / |flux_b(last)|`.
    pub decay_ratio: f64,
    pub max_envelope_constant: f64,
}

fn oscillation<C: Curve + ?Sized, B: PotentialEval + ?Sized>(sigma: &C, b: &B, from: f64) -> f64 {
    let n = 256;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in 0..=n {
        let v = b.value(sigma.point(from + (1.0 - from) * k as f64 / n as f64));
        lo = lo.min(v);
        hi = hi.max(v);
    }
    hi - lo
}

/// Midpoint sum of `w` over the sub-mesh keeping every `step`-th node.
fn midpoint_sum<W: TwoFormEval + ?Sized>(s: &SurfaceChain2, w: &W, step: usize) -> f64 {
    let (nu, nv) = s.dims();
    let mut acc = 0.0;
    for i in (0..nu - 1).step_by(step) {
        for j in (0..nv - 1).step_by(step) {
            let v00 = s.vertex(i, j);
            let v10 = s.vertex(i + step, j);
            let v01 = s.vertex(i, j + step);
            let v11 = s.vertex(i + step, j + step);
            let mut m = [0.0; 3];
            let mut a = [0.0; 3];
            let mut b = [0.0; 3];
            for c in 0..3 {
                m[c] = 0.25 * (v00[c] + v10[c] + v01[c] + v11[c]);
                a[c] = 0.5 * ((v10[c] - v00[c]) + (v11[c] - v01[c]));
                b[c] = 0.5 * ((v01[c] - v00[c]) + (v11[c] - v10[c]));
            }
            acc += math::dot(w.flux_vector(m), math::cross(a, b));
        }
    }
    acc
}

/// Two Romberg steps from sums at mesh widths `h`, `2h`, `4h`.
fn romberg(i1: f64, i2: f64, i4: f64) -> f64 {
    (64.0 * i1 - 20.0 * i2 + i4) / 45.0
}

/// Midpoint sum extrapolated over the nested sub-meshes, and the plain sum.
fn extrapolated_eval2<W: TwoFormEval + ?Sized>(s: &SurfaceChain2, w: &W) -> (f64, f64) {
    let (nu, nv) = s.dims();
    let plain = midpoint_sum(s, w, 1);
    if (nu - 1) % MESH_MULTIPLE != 0 || (nv - 1) % MESH_MULTIPLE != 0 {
        return (plain, plain);
    }
    (romberg(plain, midpoint_sum(s, w, 2), midpoint_sum(s, w, 4)), plain)
}

/// Both quadratures of the normalised flux through one chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainFluxes {
    /// Direct quadrature of `ω_B` (extrapolated midpoint rule).
    pub flux_a: f64,
    /// Reduced integral `∫ dB(σ′(τ)) T(τ) dτ` (extrapolated trapezoid rule).
    pub flux_b: f64,
    /// Plain midpoint value behind `flux_a`.
    pub flux_a_midpoint: f64,
    /// Plain trapezoid value behind `flux_b`.
    pub flux_b_trapezoid: f64,
    /// Direct quadrature of `i_{curl X} μ₀`.
    pub flux_vorticity: f64,
    pub min_alpha_x: f64,
}

/// Fluxes through `chain`, divided by the length of its last leaf.
pub fn chain_fluxes<F, C, A, B>(field: &F, sigma: &C, chain: &Chain, alpha: &A, b: &B) -> Result<ChainFluxes>
where
    F: VorticityFlow + ?Sized,
    C: Curve + ?Sized,
    A: CoframeEval + ?Sized,
    B: PotentialEval + ?Sized,
{
    let s = &chain.surface;
    let (nu, nv) = s.dims();
    let mut min_ax = f64::INFINITY;
    for i in 0..nu - 1 {
        for j in 0..nv - 1 {
            let (m, _, _) = s.quad(i, j);
            min_ax = min_ax.min(math::dot(alpha.alpha(m), field.velocity(m)));
        }
    }
    if !(min_ax > 0.0) {
        return Err(Error::AlphaDegenerate { min: min_ax });
    }
    let gamma = s.column(nu - 1).length();
    let (flux_a, flux_a_midpoint) = extrapolated_eval2(s, &BernoulliForm { field, alpha, b });
    let g: Vec<f64> = (0..nu)
        .map(|i| {
            let tau = chain.taus[i];
            math::dot(b.gradient(sigma.point(tau)), sigma.tangent(tau)) * chain.exit_times[i]
        })
        .collect();
    let trapezoid = |step: usize| -> f64 {
        let mut acc = 0.0;
        for i in (0..nu - 1).step_by(step) {
            acc += 0.5 * (g[i] + g[i + step]) * (chain.taus[i + step] - chain.taus[i]);
        }
        acc
    };
    let plain_b = trapezoid(1);
    let reduced = if (nu - 1) % MESH_MULTIPLE == 0 { romberg(plain_b, trapezoid(2), trapezoid(4)) } else { plain_b };
    let (flux_v, _) = extrapolated_eval2(s, &Vorticity(field));
    Ok(ChainFluxes {
        flux_a: flux_a / gamma,
        flux_b: reduced / gamma,
        flux_a_midpoint: flux_a_midpoint / gamma,
        flux_b_trapezoid: plain_b / gamma,
        flux_vorticity: flux_v / gamma,
        min_alpha_x: min_ax,
    })
}

/// Normalised vorticity flux through `A_{t_n}` for a candidate pair `(α, B)`.
#[allow(clippy::too_many_arguments)]
pub fn flux_decay_study<F, C, A, B, E>(
    field: &F,
    domain: &Cylinder,
    sigma: &C,
    ts: &[f64],
    alpha: &A,
    b: &B,
    opts: &StudyOptions,
    exec: &E,
) -> Result<DecayTable>
where
    F: VorticityFlow + Sync + ?Sized,
    C: Curve + ?Sized,
    A: CoframeEval + ?Sized,
    B: PotentialEval + ?Sized,
    E: Executor,
{
    let (kept, discarded) = select_parameters(field, domain, sigma, ts, &opts.chain.trace)?;
    let mut records: Vec<FluxRecord> = Vec::with_capacity(kept.len());
    for &t in &kept {
        let chain = build_chain(field, domain, sigma, t, &opts.chain, exec)?;
        let rec = chain_record(&chain, sigma, opts)?;
        let q = chain_fluxes(field, sigma, &chain, alpha, b)?;
        let (t_prev, gamma_prev) = records.last().map_or((0.0, 0.0), |r| (r.t, r.gamma_length));
        let b_oscillation = oscillation(sigma, b, t_prev);
        let denom = gamma_prev / rec.gamma_length + b_oscillation;
        records.push(FluxRecord {
            t,
            gamma_length: rec.gamma_length,
            chain_mass: rec.chain_mass,
            flat_bound: rec.flat_bound,
            flux_a: q.flux_a,
            flux_b: q.flux_b,
            flux_a_midpoint: q.flux_a_midpoint,
            flux_b_trapezoid: q.flux_b_trapezoid,
            deviation: (q.flux_a - q.flux_b).abs(),
            flux_vorticity: q.flux_vorticity,
            min_alpha_x: q.min_alpha_x,
            b_oscillation,
            envelope_constant: if denom > 0.0 { q.flux_b.abs() / denom } else { 0.0 },
        });
    }
    let max_deviation = records.iter().map(|r| r.deviation).fold(0.0, f64::max);
    let decay_ratio = match (records.first(), records.last()) {
        (Some(a), Some(z)) if z.flux_b != 0.0 => a.flux_b.abs() / z.flux_b.abs(),
        _ => f64::INFINITY,
    };
    let max_envelope_constant = records.iter().skip(1).map(|r| r.envelope_constant).fold(0.0, f64::max);
    Ok(DecayTable { records, discarded, max_deviation, decay_ratio, max_envelope_constant })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vertical() -> WithVorticity<impl Fn([f64; 3]) -> [f64; 3], impl Fn([f64; 3]) -> [f64; 3]> {
        WithVorticity { velocity: |_x: [f64; 3]| [0.0, 0.0, 1.0], vorticity: |_x: [f64; 3]| [0.0; 3] }
    }

    #[test]
    fn vertical_flow_sweeps_a_rectangle() {
        let f = vertical();
        let sigma = Segment { start: [0.5, 0.0, -1.0], end: [0.5, 0.7, -1.0] };
        let chain = build_chain(&f, &Cylinder::slab(), &sigma, 1.0, &ChainOptions::default(), &Sequential).unwrap();
        assert!((chain.surface.mass() - 1.4).abs() < 1e-12);
        assert_eq!(chain.tangency_fraction(), 1.0);
        let opts = StudyOptions::default();
        let rec = chain_record(&chain, &sigma, &opts).unwrap();
        assert!((rec.gamma_length - 2.0).abs() < 1e-12);
        assert!(rec.decomposition_defect < 1e-12);
        let q = chain_fluxes(&f, &sigma, &chain, &EuclideanDual(&f), &ZeroPotential).unwrap();
        assert_eq!((q.flux_a, q.flux_b, q.flux_vorticity), (0.0, 0.0, 0.0));
    }

    #[test]
    fn entry_region_is_enforced() {
        let f = vertical();
        let e = trace_orbit(&f, &Cylinder::slab(), [0.0, 0.0, 0.0], &TraceOptions::default());
        assert_eq!(e.unwrap_err(), Error::NotInEntryRegion);
    }

    #[test]
    fn lateral_exit_is_an_error() {
        let f = |_x: [f64; 3]| [1.0, 0.0, 0.1];
        let d = Cylinder { r_in: 0.0, r_out: 1.0 };
        assert!(matches!(trace_orbit(&f, &d, [0.0, 0.0, -1.0], &TraceOptions::default()), Err(Error::LeftThroughSide { .. })));
    }

    #[test]
    fn radial_profile_integrates_its_slope() {
        let p = RadialProfile::from_slopes(1.0, 0.1, (0..21).map(|i| 1.0 + 0.1 * i as f64).collect()).unwrap();
        // B′(r) = r, B(1) = 0
        for r in [1.0, 1.37, 2.0, 2.99] {
            assert!((p.value_at(r) - 0.5 * (r * r - 1.0)).abs() < 1e-12);
            assert!((p.slope_at(r) - r).abs() < 1e-12);
        }
    }

    #[test]
    fn monotone_selection_drops_shorter_later_leaves() {
        let (k, d) = monotone_selection(alloc::vec![(0.1, 2.0), (0.3, 1.5), (0.5, 4.0), (0.7, 3.0), (0.9, 9.0)]);
        assert_eq!(k, [0.1, 0.5, 0.9]);
        assert_eq!(d, [0.3, 0.7]);
    }
}
