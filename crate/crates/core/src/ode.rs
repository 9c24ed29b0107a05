//! Fixed-step RK4 with bisection event location.

use alloc::vec::Vec;

use crate::math;

/// An autonomous velocity field on R³.
pub trait Flow {
    fn velocity(&self, x: [f64; 3]) -> [f64; 3];
}

impl<F: Fn([f64; 3]) -> [f64; 3]> Flow for F {
    fn velocity(&self, x: [f64; 3]) -> [f64; 3] {
        self(x)
    }
}

/// Time-reversed flow `-X`.
pub struct Reversed<'a, F: ?Sized>(pub &'a F);

impl<F: Flow + ?Sized> Flow for Reversed<'_, F> {
    fn velocity(&self, x: [f64; 3]) -> [f64; 3] {
        math::scale(-1.0, self.0.velocity(x))
    }
}

#[inline]
pub fn rk4_step<F: Flow + ?Sized>(f: &F, x: [f64; 3], dt: f64) -> [f64; 3] {
    let k1 = f.velocity(x);
    let k2 = f.velocity(math::add(x, math::scale(0.5 * dt, k1)));
    let k3 = f.velocity(math::add(x, math::scale(0.5 * dt, k2)));
    let k4 = f.velocity(math::add(x, math::scale(dt, k3)));
    let mut out = x;
    for c in 0..3 {
        out[c] += dt / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
    }
    out
}

/// How an integration ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    /// The event function crossed zero at `time`, landing on `point`.
    Event { time: f64, point: [f64; 3] },
    /// The `outside` predicate fired at the end of a step.
    Escaped { time: f64, point: [f64; 3] },
    /// Time budget exhausted.
    Budget { time: f64, point: [f64; 3] },
}

#[derive(Debug, Clone)]
pub struct Path {
    pub termination: Termination,
    /// Chord length summed over every integration step.
    pub arc_length: f64,
    /// Recorded vertices (start, every `stride`-th step, and the end point).
    pub vertices: Vec<[f64; 3]>,
    pub steps: usize,
}

/// Integrate from `x0` until `event(x)` becomes non-negative (located by
/// bisection on the final step), `outside(x)` holds, or `budget` time has
/// elapsed. `stride = 0` records only the endpoints.
pub fn integrate<F, E, O>(f: &F, x0: [f64; 3], dt: f64, budget: f64, event: E, outside: O, stride: usize) -> Path
where
    F: Flow + ?Sized,
    E: Fn([f64; 3]) -> f64,
    O: Fn([f64; 3]) -> bool,
{
    integrate_projected(f, x0, dt, budget, event, outside, stride, |x| x)
}

/// As [`integrate`], applying `project` after every full step (used to keep
/// a known first integral on its initial level).
#[allow(clippy::too_many_arguments)]
pub fn integrate_projected<F, E, O, P>(
    f: &F,
    x0: [f64; 3],
    dt: f64,
    budget: f64,
    event: E,
    outside: O,
    stride: usize,
    project: P,
) -> Path
where
    F: Flow + ?Sized,
    E: Fn([f64; 3]) -> f64,
    O: Fn([f64; 3]) -> bool,
    P: Fn([f64; 3]) -> [f64; 3],
{
    let mut x = x0;
    let mut t = 0.0;
    let mut arc = 0.0;
    let mut vertices = alloc::vec![x0];
    let mut steps = 0usize;
    let termination = loop {
        if t >= budget {
            break Termination::Budget { time: t, point: x };
        }
        let h = dt.min(budget - t);
        let next = project(rk4_step(f, x, h));
        if event(next) >= 0.0 {
            let (lo, hi) = (0.0, h);
            let tau = bisect(|s| event(rk4_step(f, x, s)), lo, hi);
            let hit = rk4_step(f, x, tau);
            arc += math::norm(math::sub(hit, x));
            steps += 1;
            t += tau;
            x = hit;
            break Termination::Event { time: t, point: x };
        }
        arc += math::norm(math::sub(next, x));
        steps += 1;
        t += h;
        x = next;
        if stride > 0 && steps % stride == 0 {
            vertices.push(x);
        }
        if outside(x) {
            break Termination::Escaped { time: t, point: x };
        }
    };
    if vertices.last() != Some(&x) {
        vertices.push(x);
    }
    Path { termination, arc_length: arc, vertices, steps }
}

/// Root of a function negative at `lo` and non-negative at `hi`.
fn bisect(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rk4_is_fourth_order_on_rotation() {
        let f = |x: [f64; 3]| [-x[1], x[0], 0.0];
        let run = |dt: f64| {
            let mut x = [1.0, 0.0, 0.0];
            let n = (1.0 / dt).round() as usize;
            for _ in 0..n {
                x = rk4_step(&f, x, dt);
            }
            math::norm(math::sub(x, [math::cos(1.0), math::sin(1.0), 0.0]))
        };
        let ratio = run(0.02) / run(0.01);
        assert!(ratio > 14.0 && ratio < 18.0, "{ratio}");
    }

    #[test]
    fn event_is_located() {
        let f = |_x: [f64; 3]| [0.0, 0.0, 1.0];
        let p = integrate(&f, [0.0, 0.0, -1.0], 0.3, 10.0, |x| x[2] - 1.0, |_| false, 1);
        match p.termination {
            Termination::Event { time, point } => {
                assert!((time - 2.0).abs() < 1e-14);
                assert!((point[2] - 1.0).abs() < 1e-14);
            }
            other => panic!("{other:?}"),
        }
        assert!((p.arc_length - 2.0).abs() < 1e-14);
    }
}
