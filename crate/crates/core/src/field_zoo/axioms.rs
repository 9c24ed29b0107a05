use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::plug::{PlugField, PlugVariant};
use crate::math::{self, PI};
use crate::ode::{self, Termination};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxiomOptions {
    /// Number of entry points sampled for the entry–exit check.
    pub samples: usize,
    /// Time budget after which an orbit inside `P` counts as trapped.
    pub budget: f64,
    /// RK4 step.
    pub step: f64,
    /// Tolerated entry–exit mismatch in position.
    pub matching_tol: f64,
}

impl Default for AxiomOptions {
    fn default() -> Self {
        Self { samples: 100, budget: 1e3, step: 1e-3, matching_tol: 1e-5 }
    }
}

/// Result of tracing one sampled entry point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EntryOutcome {
    Exit { mismatch: f64, time: f64, invariant_drift: f64 },
    Trapped,
    LeftThroughSide,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    /// Smallest analytic collar width on which the field is exactly `∂z`.
    pub vertical_margin: f64,
    /// Largest `|X − ∂z|` over samples inside the collar.
    pub vertical_deviation: f64,
    pub vertical_ok: bool,
    pub trapped_entry: [f64; 3],
    pub trapped_time: f64,
    pub trapped_final: [f64; 3],
    pub trapped_ok: bool,
    pub entries_exited: usize,
    pub entries_trapped: usize,
    pub entries_left_side: usize,
    pub max_entry_exit_mismatch: f64,
    /// Largest drift of the reduced invariant per unit time over exited orbits.
    pub invariant_drift_rate: f64,
    pub matching_ok: bool,
    /// Largest analytic divergence over samples (reported for both variants).
    pub divergence_sup: f64,
    pub divergence_ok: bool,
    pub min_speed: f64,
    pub nonvanishing_ok: bool,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.first_failure().is_none()
    }

    /// Name of the first failing item, if any.
    pub fn first_failure(&self) -> Option<&'static str> {
        if !self.vertical_ok {
            Some("item 1: field not vertical near the boundary")
        } else if !self.trapped_ok {
            Some("item 2: designated entry is not trapped within the budget")
        } else if !self.matching_ok {
            Some("item 3: entry-exit matching failed")
        } else if !self.nonvanishing_ok {
            Some("field vanishes at a sample")
        } else if !self.divergence_ok {
            Some("stream variant is not divergence-free")
        } else {
            None
        }
    }
}

/// Stratified entry points on `D × {−1}`.
pub fn entry_points(p: &PlugField, samples: usize) -> Vec<[f64; 3]> {
    let s = p.spec();
    let golden = PI * (3.0 - math::sqrt(5.0));
    (0..samples)
        .map(|i| {
            let r = s.r_in + (s.r_out - s.r_in) * (i as f64 + 0.5) / samples as f64;
            let th = golden * i as f64;
            [r * math::cos(th), r * math::sin(th), -1.0]
        })
        .collect()
}

fn outside_laterally(p: &PlugField) -> impl Fn([f64; 3]) -> bool + '_ {
    let (r_in, r_out) = (p.spec().r_in, p.spec().r_out);
    move |x| {
        let r = math::hypot(x[0], x[1]);
        r < r_in - 1e-9 || r > r_out + 1e-9 || x[2] < -1.0 - 1e-9
    }
}

pub fn trace_entry(p: &PlugField, q: [f64; 3], opts: &AxiomOptions) -> EntryOutcome {
    let path = ode::integrate(p, q, opts.step, opts.budget, |x| x[2] - 1.0, outside_laterally(p), 0);
    match path.termination {
        Termination::Event { time, point } => EntryOutcome::Exit {
            mismatch: math::norm(math::sub(point, [q[0], q[1], 1.0])),
            time,
            invariant_drift: (p.invariant(point) - p.invariant(q)).abs(),
        },
        Termination::Budget { .. } => EntryOutcome::Trapped,
        Termination::Escaped { .. } => EntryOutcome::LeftThroughSide,
    }
}

/// Runs every axiom check sequentially.
pub fn check_plug_axioms(p: &PlugField, opts: &AxiomOptions) -> AxiomReport {
    check_plug_axioms_with(p, opts, |p, qs, o| qs.iter().map(|q| trace_entry(p, *q, o)).collect())
}

/// As [`check_plug_axioms`], with the per-entry tracing delegated to `map`
/// (so callers can run entries in parallel).
pub fn check_plug_axioms_with<M>(p: &PlugField, opts: &AxiomOptions, map: M) -> AxiomReport
where
    M: FnOnce(&PlugField, &[[f64; 3]], &AxiomOptions) -> Vec<EntryOutcome>,
{
    let s = p.spec();
    let (c_in, c_out, c_z) = p.collar();
    let margin = c_in.min(c_out).min(c_z);

    // Item 1: sample the three collar shells.
    let mut vertical_deviation: f64 = 0.0;
    if margin > 0.0 {
        for i in 0..64 {
            let th = 2.0 * PI * i as f64 / 64.0;
            let (c, sn) = (math::cos(th), math::sin(th));
            for j in 0..=16 {
                let zeta = -1.0 + 2.0 * j as f64 / 16.0;
                for r in [s.r_in + 0.5 * c_in, s.r_out - 0.5 * c_out] {
                    let v = p.velocity_at([r * c, r * sn, zeta]);
                    vertical_deviation = vertical_deviation.max(math::norm(math::sub(v, [0.0, 0.0, 1.0])));
                }
                let r = s.r_in + (s.r_out - s.r_in) * j as f64 / 16.0;
                for z in [-1.0 + 0.5 * c_z, 1.0 - 0.5 * c_z] {
                    let v = p.velocity_at([r * c, r * sn, z]);
                    vertical_deviation = vertical_deviation.max(math::norm(math::sub(v, [0.0, 0.0, 1.0])));
                }
            }
        }
    }
    let vertical_ok = margin > 0.0 && vertical_deviation <= 1e-14;

    // Item 2: the designated trapped entry.
    let x0 = p.trapped_entry();
    let level = p.invariant(x0);
    let path = match s.variant {
        // Keep the separatrix orbit on its level set; plain RK4 drift would
        // otherwise push it off a hyperbolic point after a few hundred units.
        PlugVariant::Stream => ode::integrate_projected(
            p,
            x0,
            opts.step,
            opts.budget,
            |x| x[2] - 1.0,
            outside_laterally(p),
            0,
            |x| p.project_to_level(x, level),
        ),
        PlugVariant::Wilson => ode::integrate(p, x0, opts.step, opts.budget, |x| x[2] - 1.0, outside_laterally(p), 0),
    };
    let (trapped_ok, trapped_time, trapped_final) = match path.termination {
        Termination::Budget { time, point } => (p.contains(point), time, point),
        Termination::Event { time, point } | Termination::Escaped { time, point } => (false, time, point),
    };

    // Item 3: entry–exit matching.
    let entries = entry_points(p, opts.samples);
    let outcomes = map(p, &entries, opts);
    let mut exited = 0;
    let mut trapped = 0;
    let mut side = 0;
    let mut mismatch: f64 = 0.0;
    let mut drift: f64 = 0.0;
    for o in &outcomes {
        match *o {
            EntryOutcome::Exit { mismatch: m, time, invariant_drift } => {
                exited += 1;
                mismatch = mismatch.max(m);
                drift = drift.max(invariant_drift / time.max(1.0));
            }
            EntryOutcome::Trapped => trapped += 1,
            EntryOutcome::LeftThroughSide => side += 1,
        }
    }
    let matching_ok = side == 0 && exited > 0 && mismatch <= opts.matching_tol;

    // Speed and divergence over a cylindrical sample lattice.
    let mut min_speed = f64::INFINITY;
    let mut div_sup: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..24 {
        let r = s.r_in + (s.r_out - s.r_in) * (i as f64 + 0.5) / 24.0;
        for j in 0..16 {
            let th = 2.0 * PI * j as f64 / 16.0 + 0.1;
            for k in 0..=40 {
                let z = -1.0 + 2.0 * k as f64 / 40.0;
                let x = [r * math::cos(th), r * math::sin(th), z];
                let (v, jac) = p.jacobian(x);
                min_speed = min_speed.min(math::norm(v));
                div_sup = div_sup.max((jac[0][0] + jac[1][1] + jac[2][2]).abs());
                scale = scale.max(jac.iter().flatten().fold(0.0, |m: f64, c| m.max(c.abs())));
            }
        }
    }
    for (r, z) in p.reeb_circles() {
        min_speed = min_speed.min(math::norm(p.velocity_at([r, 0.0, z])));
    }
    let divergence_ok = match s.variant {
        PlugVariant::Stream => div_sup <= 1e-10 * scale.max(1.0),
        PlugVariant::Wilson => true,
    };

    AxiomReport {
        vertical_margin: margin,
        vertical_deviation,
        vertical_ok,
        trapped_entry: x0,
        trapped_time,
        trapped_final,
        trapped_ok,
        entries_exited: exited,
        entries_trapped: trapped,
        entries_left_side: side,
        max_entry_exit_mismatch: mismatch,
        invariant_drift_rate: drift,
        matching_ok,
        divergence_sup: div_sup,
        divergence_ok,
        min_speed,
        nonvanishing_ok: min_speed > 0.0,
    }
}
