//! Diagonally preconditioned primal–dual hybrid gradient on the homogenised
//! problem
//!
//! ```text
//!   max t  s.t.  A_in u ≥ t,  |A_eq u| ≤ η t,  ‖u‖₁ ≤ 1,  t ≥ 0
//! ```
//!
//! whose optimum is positive iff the original system is feasible. Its dual
//! is `min ‖A_inᵀμ + A_eqᵀλ‖_∞` over `μ ≥ 0` with `Σμ − η‖λ‖₁ = 1`, so dual
//! iterates are Farkas candidates by construction. Both sides are polished
//! (least-squares projections) and re-verified with the DEC-only checkers.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::problem::FeasibilityProblem;
use super::sparse::{cgls, Csr};
use super::verify::{
    verify_dual, verify_primal_with, DualCertificate, DualResiduals, PrimalCertificate,
    PrimalResiduals, DEFAULT_EPS_CYCLE, DEFAULT_EPS_DUAL,
};
use crate::fields::{ScalarField0, VectorField};
use crate::math;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Iteration budget; exhausting it yields `undecided`.
    pub max_iterations: usize,
    /// Optional wall-clock budget in seconds (needs a clock, see [`solve_with_clock`]).
    pub time_limit: Option<f64>,
    pub eps_dual: f64,
    pub eps_cycle: f64,
    /// Iterations between restart tests.
    pub restart_check: usize,
    /// Iterations between certificate extraction attempts.
    pub certify_every: usize,
    /// Iteration cap for each least-squares polish.
    pub polish_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 50_000,
            time_limit: None,
            eps_dual: DEFAULT_EPS_DUAL,
            eps_cycle: DEFAULT_EPS_CYCLE,
            restart_check: 64,
            certify_every: 1000,
            polish_iterations: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Feasible,
    Infeasible,
    Undecided,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Feasible => "feasible",
            Status::Infeasible => "infeasible",
            Status::Undecided => "undecided",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    /// Homogenised objective `t` of the final primal iterate.
    pub objective: f64,
    /// Dual bound `‖A_inᵀμ + A_eqᵀλ‖_∞ / (Σμ − η‖λ‖₁)` (∞ when undefined).
    pub dual_bound: f64,
    pub kkt_error: f64,
    pub restarts: usize,
    pub primal_weight: f64,
    pub budget_exceeded: bool,
    /// Last primal polish attempt (also reported when it did not verify).
    pub primal_attempt: Option<PrimalResiduals>,
    /// Last dual polish attempt.
    pub dual_attempt: Option<DualResiduals>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: Status,
    pub primal: Option<PrimalCertificate>,
    pub dual: Option<DualCertificate>,
    pub iterations: usize,
    pub wall_time: Option<f64>,
    pub diagnostics: SolverDiagnostics,
}

/// Solve without a clock (`wall_time` is `None`).
pub fn solve(p: &FeasibilityProblem, opts: &SolverOptions) -> Result<SolveReport> {
    solve_impl(p, opts, None)
}

/// Solve with a monotone clock in seconds, enabling the time limit.
pub fn solve_with_clock(p: &FeasibilityProblem, opts: &SolverOptions, clock: &dyn Fn() -> f64) -> Result<SolveReport> {
    solve_impl(p, opts, Some(clock))
}

struct Ops {
    a_in: Csr,
    a_eq: Csr,
    eta: f64,
}

#[derive(Clone)]
struct Point {
    u: Vec<f64>,
    t: f64,
    y1: Vec<f64>,
    y2: Vec<f64>,
    y3: Vec<f64>,
}

/// Products needed for the KKT error of one point.
struct Eval {
    pinf: f64,
    dinf: f64,
    gap: f64,
    gu_inf: f64,
    scale: f64,
}

impl Eval {
    fn kkt(&self) -> f64 {
        math::sqrt(self.pinf * self.pinf + self.dinf * self.dinf + self.gap * self.gap)
    }
}

impl Ops {
    /// `Kᵀy` split into the `u` and `t` parts.
    fn kt(&self, y1: &[f64], y2: &[f64], y3: &[f64], gu: &mut [f64]) -> f64 {
        gu.iter_mut().for_each(|g| *g = 0.0);
        self.a_in.mul_t_add(-1.0, y1, gu);
        let d: Vec<f64> = y2.iter().zip(y3).map(|(a, b)| a - b).collect();
        self.a_eq.mul_t_add(1.0, &d, gu);
        y1.iter().sum::<f64>() - self.eta * (y2.iter().sum::<f64>() + y3.iter().sum::<f64>())
    }

    fn eval(&self, x: &Point) -> Eval {
        let mut ain = vec![0.0; self.a_in.nrows];
        let mut aeq = vec![0.0; self.a_eq.nrows];
        self.a_in.mul(&x.u, &mut ain);
        self.a_eq.mul(&x.u, &mut aeq);
        let mut pinf = 0.0;
        for v in &ain {
            let k = x.t - v;
            if k > 0.0 {
                pinf += k * k;
            }
        }
        for v in &aeq {
            let k = (v.abs() - self.eta * x.t).max(0.0);
            pinf += k * k;
        }
        let mut gu = vec![0.0; x.u.len()];
        let gt = self.kt(&x.y1, &x.y2, &x.y3, &mut gu) - 1.0;
        let gu_inf = gu.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let scale = gt + 1.0;
        Eval { pinf: math::sqrt(pinf), dinf: (-gt).max(0.0), gap: (gu_inf - x.t).abs(), gu_inf, scale }
    }
}

/// Weighted projection onto the ℓ1 unit ball:
/// `argmin Σ (u_j − v_j)² / (2 w_j)` subject to `‖u‖₁ ≤ 1`.
fn prox_l1_ball(v: &mut [f64], w: &[f64], theta_hint: &mut f64) {
    let total: f64 = v.iter().map(|x| x.abs()).sum();
    if total <= 1.0 {
        *theta_hint = 0.0;
        return;
    }
    let f = |theta: f64| -> (f64, f64) {
        let (mut s, mut sw) = (0.0, 0.0);
        for (x, wj) in v.iter().zip(w) {
            let a = x.abs() - theta * wj;
            if a > 0.0 {
                s += x.abs();
                sw += wj;
            }
        }
        (s, sw)
    };
    // Newton on the convex, decreasing, piecewise-linear mass function; from a
    // point left of the root the iterates increase monotonically.
    let mut theta = *theta_hint;
    let (s, sw) = f(theta);
    if sw == 0.0 || s - theta * sw < 1.0 {
        theta = 0.0;
    }
    for _ in 0..100 {
        let (s, sw) = f(theta);
        if sw == 0.0 {
            break;
        }
        let next = (s - 1.0) / sw;
        if next <= theta {
            break;
        }
        theta = next;
    }
    *theta_hint = theta;
    for (x, wj) in v.iter_mut().zip(w) {
        let a = x.abs() - theta * wj;
        *x = if a > 0.0 { a.copysign(*x) } else { 0.0 };
    }
}

fn inv_or_one(s: f64) -> f64 {
    if s > 0.0 {
        1.0 / s
    } else {
        1.0
    }
}

fn dist(a: &Point, b: &Point) -> (f64, f64) {
    let dx = a.u.iter().zip(&b.u).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() + (a.t - b.t) * (a.t - b.t);
    let dy = [(&a.y1, &b.y1), (&a.y2, &b.y2), (&a.y3, &b.y3)]
        .iter()
        .map(|(p, q)| p.iter().zip(q.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>())
        .sum::<f64>();
    (math::sqrt(dx), math::sqrt(dy))
}

/// Project `u` onto `ker A_eq` (minimum-norm correction) and rescale to the
/// positivity floor.
fn polish_primal(p: &FeasibilityProblem, ops: &Ops, u: &[f64], opts: &SolverOptions) -> Result<Option<PrimalCertificate>> {
    let mut u = u.to_vec();
    let mut r = vec![0.0; ops.a_eq.nrows];
    for _ in 0..2 {
        ops.a_eq.mul(&u, &mut r);
        let d = cgls(
            |x, y| ops.a_eq.mul(x, y),
            |y, x| {
                x.iter_mut().for_each(|v| *v = 0.0);
                ops.a_eq.mul_t_add(1.0, y, x)
            },
            &r,
            u.len(),
            opts.polish_iterations,
            1e-14,
        );
        u.iter_mut().zip(&d).for_each(|(a, b)| *a -= b);
    }
    let mut ain = vec![0.0; ops.a_in.nrows];
    ops.a_in.mul(&u, &mut ain);
    let m = ain.iter().fold(f64::INFINITY, |a, b| a.min(*b));
    if !(m > 0.0 && m.is_finite()) {
        return Ok(None);
    }
    u.iter_mut().for_each(|v| *v /= m);
    let (alpha, b, t) = p.unpack(&u)?;
    let mut cert = PrimalCertificate { mode: p.mode, alpha, b, t, residuals: placeholder_primal() };
    cert.residuals = verify_primal_with(&cert, p, opts.eps_dual)?;
    Ok(Some(cert))
}

fn placeholder_primal() -> PrimalResiduals {
    PrimalResiduals {
        min_alpha_x: 0.0,
        eq_sup: f64::INFINITY,
        eq_l2: f64::INFINITY,
        l1_norm: f64::INFINITY,
        norm_cap: 0.0,
        feasible: false,
        verified: false,
    }
}

/// Normalise `Σμ = 1` and re-solve for the multipliers in least squares.
fn polish_dual(p: &FeasibilityProblem, ops: &Ops, x: &Point, opts: &SolverOptions) -> Result<Option<DualCertificate>> {
    let s: f64 = x.y1.iter().sum();
    if !(s > 0.0 && s.is_finite()) {
        return Ok(None);
    }
    let w: Vec<f64> = x.y1.iter().map(|v| v.max(0.0) / s).collect();
    let mut lam: Vec<f64> = x.y3.iter().zip(&x.y2).map(|(a, b)| (a - b) / s).collect();
    let nu = ops.a_in.ncols;
    let mut r = vec![0.0; nu];
    for _ in 0..2 {
        r.iter_mut().for_each(|v| *v = 0.0);
        ops.a_in.mul_t_add(1.0, &w, &mut r);
        ops.a_eq.mul_t_add(1.0, &lam, &mut r);
        r.iter_mut().for_each(|v| *v = -*v);
        // min_δ ‖A_eqᵀ δ − (−r)‖
        let d = cgls(
            |y, z| {
                z.iter_mut().for_each(|v| *v = 0.0);
                ops.a_eq.mul_t_add(1.0, y, z)
            },
            |z, y| ops.a_eq.mul(z, y),
            &r,
            lam.len(),
            opts.polish_iterations,
            1e-14,
        );
        lam.iter_mut().zip(&d).for_each(|(a, b)| *a += b);
    }
    let g = *p.grid();
    let weights = ScalarField0::new(g, w)?;
    let multipliers = VectorField::new(g, lam.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect())?;
    let mut cert = DualCertificate { mode: p.mode, weights, multipliers, residuals: placeholder_dual() };
    cert.residuals = verify_dual(&cert, p, opts.eps_dual, opts.eps_cycle)?;
    Ok(Some(cert))
}

fn placeholder_dual() -> DualResiduals {
    DualResiduals {
        adjoint_sup: f64::INFINITY,
        adjoint_alpha_sup: f64::INFINITY,
        adjoint_b_sup: f64::INFINITY,
        adjoint_t: f64::INFINITY,
        cycle_sup: f64::INFINITY,
        weight_sum: 0.0,
        min_weight: 0.0,
        eta_multiplier_l1: f64::INFINITY,
        current_mass: 0.0,
        eps_dual: 0.0,
        eps_cycle: 0.0,
        verified: false,
    }
}

fn solve_impl(p: &FeasibilityProblem, opts: &SolverOptions, clock: Option<&dyn Fn() -> f64>) -> Result<SolveReport> {
    let start = clock.map(|c| c());
    let elapsed = || match (clock, start) {
        (Some(c), Some(s)) => Some(c() - s),
        _ => None,
    };
    let ops = Ops { a_in: p.a_in(), a_eq: p.a_eq(), eta: p.eta };
    let (nu, nin, neq) = (p.n_unknowns(), p.n_in(), p.n_eq());
    let eta = p.eta;

    // Pock–Chambolle preconditioners (α = 1) for K = [t − A_in u; A_eq u − ηt; −A_eq u − ηt].
    let cin = ops.a_in.abs_col_sums();
    let ceq = ops.a_eq.abs_col_sums();
    let tau_u: Vec<f64> = cin.iter().zip(&ceq).map(|(a, b)| 0.95 * inv_or_one(a + 2.0 * b)).collect();
    let tau_t = 0.95 * inv_or_one(nin as f64 + 2.0 * eta * neq as f64);
    let sig_in: Vec<f64> = ops.a_in.abs_row_sums().iter().map(|s| 0.95 * inv_or_one(1.0 + s)).collect();
    let sig_eq: Vec<f64> = ops.a_eq.abs_row_sums().iter().map(|s| 0.95 * inv_or_one(s + eta)).collect();

    let mut x = Point { u: vec![0.0; nu], t: 0.0, y1: vec![0.0; nin], y2: vec![0.0; neq], y3: vec![0.0; neq] };
    let mut avg = x.clone();
    let mut n_avg = 0usize;
    let mut last_restart = x.clone();
    let mut kkt_restart = ops.eval(&x).kkt();
    let mut kkt_prev_candidate = f64::INFINITY;
    let mut since_restart = 0usize;
    let mut restarts = 0usize;
    let mut omega = 1.0f64;
    let mut theta = 0.0f64;

    let mut gu = vec![0.0; nu];
    let mut ain_old = vec![0.0; nin];
    let mut aeq_old = vec![0.0; neq];
    let mut ain = vec![0.0; nin];
    let mut aeq = vec![0.0; neq];

    let mut primal_attempt: Option<PrimalResiduals> = None;
    let mut dual_attempt: Option<DualResiduals> = None;
    let mut found_primal: Option<PrimalCertificate> = None;
    let mut found_dual: Option<DualCertificate> = None;
    let mut iterations = 0usize;
    let mut budget_exceeded = true;

    let attempt = |pt: &Point,
                       primal_attempt: &mut Option<PrimalResiduals>,
                       dual_attempt: &mut Option<DualResiduals>|
     -> Result<(Option<PrimalCertificate>, Option<DualCertificate>)> {
        let pc = polish_primal(p, &ops, &pt.u, opts)?;
        if let Some(c) = &pc {
            *primal_attempt = Some(c.residuals.clone());
        }
        let dc = polish_dual(p, &ops, pt, opts)?;
        if let Some(c) = &dc {
            *dual_attempt = Some(c.residuals.clone());
        }
        Ok((pc.filter(|c| c.residuals.verified), dc.filter(|c| c.residuals.verified)))
    };

    while iterations < opts.max_iterations {
        iterations += 1;
        since_restart += 1;
        // primal step
        let gt = ops.kt(&x.y1, &x.y2, &x.y3, &mut gu);
        let mut u_new: Vec<f64> = x.u.iter().zip(&gu).zip(&tau_u).map(|((u, g), tj)| u - tj / omega * g).collect();
        prox_l1_ball(&mut u_new, &tau_u, &mut theta);
        let t_new = (x.t - tau_t / omega * (gt - 1.0)).max(0.0);
        ops.a_in.mul(&u_new, &mut ain);
        ops.a_eq.mul(&u_new, &mut aeq);
        // dual step at the extrapolated point 2x⁺ − x
        for i in 0..nin {
            let k = 2.0 * (t_new - ain[i]) - (x.t - ain_old[i]);
            x.y1[i] = (x.y1[i] + sig_in[i] * omega * k).max(0.0);
        }
        for i in 0..neq {
            let k2 = 2.0 * (aeq[i] - eta * t_new) - (aeq_old[i] - eta * x.t);
            let k3 = 2.0 * (-aeq[i] - eta * t_new) - (-aeq_old[i] - eta * x.t);
            x.y2[i] = (x.y2[i] + sig_eq[i] * omega * k2).max(0.0);
            x.y3[i] = (x.y3[i] + sig_eq[i] * omega * k3).max(0.0);
        }
        x.u = u_new;
        x.t = t_new;
        core::mem::swap(&mut ain, &mut ain_old);
        core::mem::swap(&mut aeq, &mut aeq_old);

        n_avg += 1;
        let wn = 1.0 / n_avg as f64;
        let blend = |a: &mut Vec<f64>, b: &Vec<f64>| a.iter_mut().zip(b).for_each(|(a, b)| *a += (b - *a) * wn);
        blend(&mut avg.u, &x.u);
        avg.t += (x.t - avg.t) * wn;
        blend(&mut avg.y1, &x.y1);
        blend(&mut avg.y2, &x.y2);
        blend(&mut avg.y3, &x.y3);

        if iterations % opts.restart_check == 0 {
            let ec = ops.eval(&x).kkt();
            let ea = ops.eval(&avg).kkt();
            let (cand_is_avg, e) = if ea < ec { (true, ea) } else { (false, ec) };
            let restart = e <= 0.2 * kkt_restart
                || (e <= 0.8 * kkt_restart && e > kkt_prev_candidate)
                || since_restart as f64 >= 0.36 * iterations as f64;
            kkt_prev_candidate = e;
            if restart {
                let cand = if cand_is_avg { avg.clone() } else { x.clone() };
                let (dx, dy) = dist(&cand, &last_restart);
                if dx > 1e-14 && dy > 1e-14 {
                    omega = math::exp(0.5 * math::ln(dy / dx) + 0.5 * math::ln(omega));
                }
                x = cand;
                ops.a_in.mul(&x.u, &mut ain_old);
                ops.a_eq.mul(&x.u, &mut aeq_old);
                avg = x.clone();
                n_avg = 0;
                last_restart = x.clone();
                kkt_restart = e;
                kkt_prev_candidate = f64::INFINITY;
                since_restart = 0;
                restarts += 1;
            }
        }

        let timed_out = matches!((opts.time_limit, elapsed()), (Some(lim), Some(t)) if t > lim);
        if iterations % opts.certify_every == 0 || timed_out || iterations == opts.max_iterations {
            let pt = if ops.eval(&avg).kkt() < ops.eval(&x).kkt() && n_avg > 0 { avg.clone() } else { x.clone() };
            let (pc, dc) = attempt(&pt, &mut primal_attempt, &mut dual_attempt)?;
            // Weak duality at tolerance: see `primal_norm_cap`.
            assert!(!(pc.is_some() && dc.is_some()), "primal and dual certificates both verified");
            if pc.is_some() || dc.is_some() {
                found_primal = pc;
                found_dual = dc;
                budget_exceeded = false;
                break;
            }
            if timed_out {
                break;
            }
        }
    }

    let e = ops.eval(&x);
    let dual_bound = if e.scale > 0.0 { e.gu_inf / e.scale } else { f64::INFINITY };
    let status = match (&found_primal, &found_dual) {
        (Some(_), None) => Status::Feasible,
        (None, Some(_)) => Status::Infeasible,
        _ => Status::Undecided,
    };
    Ok(SolveReport {
        status,
        primal: found_primal,
        dual: found_dual,
        iterations,
        wall_time: elapsed(),
        diagnostics: SolverDiagnostics {
            objective: x.t,
            dual_bound,
            kkt_error: e.kkt(),
            restarts,
            primal_weight: omega,
            budget_exceeded,
            primal_attempt,
            dual_attempt,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prox_lands_on_ball() {
        let mut v = [3.0, -1.0, 0.5];
        let w = [1.0, 2.0, 1.0];
        let mut th = 0.0;
        prox_l1_ball(&mut v, &w, &mut th);
        let s: f64 = v.iter().map(|x| x.abs()).sum();
        assert!((s - 1.0).abs() < 1e-12, "{v:?}");
        assert!(v[1] <= 0.0 && v[0] > 0.0);
    }
}
