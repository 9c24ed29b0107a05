use alloc::string::ToString;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::axioms::{check_plug_axioms, check_plug_axioms_with, AxiomOptions, AxiomReport, EntryOutcome};
use crate::math::{self, bump_d2};
use crate::ode::Flow;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlugVariant {
    /// `f ∂θ + g ∂z` with a Reeb cylinder pair.
    Wilson,
    /// Axisymmetric divergence-free field from a stream function.
    Stream,
}

/// Analytic plug on `D × [-1, 1]`, `D = {r_in ≤ r ≤ r_out}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlugSpec {
    pub variant: PlugVariant,
    pub r_in: f64,
    pub r_out: f64,
    pub delta_r: f64,
    pub delta_z: f64,
    pub r_star: f64,
    pub z_star: f64,
    /// Angular amplitude `A_θ`.
    pub amplitude: f64,
    /// Stream variant only: target growth rate of the reduced flow at its
    /// hyperbolic stagnation points. Small rates keep the separatrix orbit
    /// numerically trapped for long budgets.
    pub saddle_rate: f64,
}

impl Default for PlugSpec {
    fn default() -> Self {
        Self {
            variant: PlugVariant::Wilson,
            r_in: 1.0,
            r_out: 3.0,
            delta_r: 0.5,
            delta_z: 0.25,
            r_star: 2.0,
            z_star: 0.5,
            amplitude: 1.0,
            saddle_rate: 0.01,
        }
    }
}

impl PlugSpec {
    pub fn wilson() -> Self {
        Self::default()
    }

    pub fn stream() -> Self {
        Self { variant: PlugVariant::Stream, ..Self::default() }
    }

    /// Checks the support-separation invariants; the error names the violated one.
    pub fn validate(&self) -> Result<()> {
        let bad = |s: &str| Err(Error::InvalidPlugSpec(s.to_string()));
        let all = [self.r_in, self.r_out, self.delta_r, self.delta_z, self.r_star, self.z_star, self.amplitude];
        if !all.iter().all(|v| v.is_finite()) {
            return bad("all parameters must be finite");
        }
        if !(self.r_in > 0.0 && self.r_in < self.r_out) {
            return bad("0 < r_in < r_out");
        }
        if !(self.delta_r > 0.0 && self.delta_r < (self.r_star - self.r_in).min(self.r_out - self.r_star)) {
            return bad("delta_r < min(r_star - r_in, r_out - r_star)");
        }
        if !(self.delta_z > 0.0 && self.delta_z <= 0.25) {
            return bad("0 < delta_z <= 1/4");
        }
        if !(self.z_star - self.delta_z > 0.0 && self.z_star + self.delta_z < 1.0) {
            return bad("delta_z < z_star < 1 - delta_z");
        }
        if self.amplitude <= 0.0 {
            return bad("amplitude > 0");
        }
        if self.variant == PlugVariant::Stream && !(self.saddle_rate > 0.0 && self.saddle_rate.is_finite()) {
            return bad("saddle_rate > 0");
        }
        Ok(())
    }
}

/// Parameters of the stream function `H = r²/2 − a φ(r) K(z)`, where
/// `φ(r) = bump((r − r_c)/w)` and `K` is the bump pair centred at `±z*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StreamTuning {
    pub a: f64,
    pub r_c: f64,
    pub width: f64,
    /// `∂²H/∂r²` and `∂²H/∂z²` at the stagnation circles.
    pub h_rr: f64,
    pub h_zz: f64,
    /// Hyperbolic rate `sqrt(-h_rr h_zz) / r*`.
    pub rate: f64,
    /// Entry radius of the separatrix orbit.
    pub r_sep: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Cyl {
    w: f64,
    w_r: f64,
    w_z: f64,
    f: f64,
    f_r: f64,
    f_z: f64,
    vz: f64,
    vz_r: f64,
    vz_z: f64,
}

/// Analytic plug field together with the axiom report it was accepted with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlugField {
    spec: PlugSpec,
    tuning: Option<StreamTuning>,
    report: Option<AxiomReport>,
}

/// Builds and checks a Wilson plug.
pub fn gen_wilson_plug(spec: &PlugSpec) -> Result<PlugField> {
    gen_wilson_plug_with(spec, &AxiomOptions::default())
}

pub fn gen_wilson_plug_with(spec: &PlugSpec, opts: &AxiomOptions) -> Result<PlugField> {
    let mut spec = spec.clone();
    spec.variant = PlugVariant::Wilson;
    PlugField::unchecked(&spec)?.checked(opts)
}

/// Builds, tunes and checks a stream-function plug.
pub fn gen_stream_plug(spec: &PlugSpec) -> Result<PlugField> {
    gen_stream_plug_with(spec, &AxiomOptions::default())
}

pub fn gen_stream_plug_with(spec: &PlugSpec, opts: &AxiomOptions) -> Result<PlugField> {
    if spec.variant != PlugVariant::Stream {
        return Err(Error::InvalidPlugSpec("variant must be stream".to_string()));
    }
    PlugField::unchecked(spec)?.checked(opts)
}

fn tune_stream(spec: &PlugSpec) -> Result<StreamTuning> {
    let w = spec.delta_r;
    let rs = spec.r_star;
    let dz2 = spec.delta_z * spec.delta_z;
    // u = (r* − r_c)/w; the saddle sits on the rising flank of φ.
    let eval = |u: f64| {
        let (b, b1, b2) = bump_d2(u);
        let a = rs * w / b1;
        let h_rr = 1.0 - a * b2 / (w * w);
        let h_zz = 2.0 * a * b / dz2;
        (a, h_rr, h_zz)
    };
    let target = |u: f64| {
        let (_, h_rr, h_zz) = eval(u);
        h_rr + spec.saddle_rate * spec.saddle_rate * rs * rs / h_zz
    };
    let mut hi = -1e-3;
    let mut lo = f64::NAN;
    let mut u = hi;
    while u > -0.999 {
        let next = u - 1e-3;
        if target(next) < 0.0 && target(u) >= 0.0 {
            lo = next;
            hi = u;
            break;
        }
        u = next;
    }
    if lo.is_nan() {
        return Err(Error::AxiomsNotSatisfied("stream tuning: no hyperbolic saddle for this spec".to_string()));
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if target(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let u = 0.5 * (lo + hi);
    let (a, h_rr, h_zz) = eval(u);
    let r_c = rs - u * w;
    let h_s = 0.5 * rs * rs - a * bump_d2(u).0;
    if !(r_c - w > spec.r_in && r_c + w < spec.r_out) {
        return Err(Error::AxiomsNotSatisfied(
            "verticality: stream-function support reaches the lateral boundary".to_string(),
        ));
    }
    if h_s <= 0.0 {
        return Err(Error::AxiomsNotSatisfied("stream tuning: separatrix level is not positive".to_string()));
    }
    let r_sep = math::sqrt(2.0 * h_s);
    if !(r_sep > spec.r_in && r_sep < spec.r_out) {
        return Err(Error::AxiomsNotSatisfied("trapped orbit: separatrix misses the entry disk".to_string()));
    }
    let rate = math::sqrt((-h_rr * h_zz).max(0.0)) / rs;
    Ok(StreamTuning { a, r_c, width: w, h_rr, h_zz, rate, r_sep })
}

impl PlugField {
    /// Analytic field without running the axiom checker.
    pub fn unchecked(spec: &PlugSpec) -> Result<Self> {
        spec.validate()?;
        let tuning = match spec.variant {
            PlugVariant::Wilson => None,
            PlugVariant::Stream => Some(tune_stream(spec)?),
        };
        Ok(Self { spec: spec.clone(), tuning, report: None })
    }

    fn checked(self, opts: &AxiomOptions) -> Result<Self> {
        let report = check_plug_axioms(&self, opts);
        self.accept(report)
    }

    /// Run the axiom checker with entry tracing delegated to `map` and keep
    /// the field only if every axiom holds.
    pub fn checked_with<M>(self, opts: &AxiomOptions, map: M) -> Result<Self>
    where
        M: FnOnce(&PlugField, &[[f64; 3]], &AxiomOptions) -> Vec<EntryOutcome>,
    {
        let report = check_plug_axioms_with(&self, opts, map);
        self.accept(report)
    }

    fn accept(mut self, report: AxiomReport) -> Result<Self> {
        if let Some(item) = report.first_failure() {
            return Err(Error::AxiomsNotSatisfied(item.to_string()));
        }
        self.report = Some(report);
        Ok(self)
    }

    pub fn spec(&self) -> &PlugSpec {
        &self.spec
    }
    pub fn tuning(&self) -> Option<&StreamTuning> {
        self.tuning.as_ref()
    }
    pub fn report(&self) -> Option<&AxiomReport> {
        self.report.as_ref()
    }

    /// Entry point whose forward orbit is trapped.
    pub fn trapped_entry(&self) -> [f64; 3] {
        match &self.tuning {
            None => [self.spec.r_star, 0.0, -1.0],
            Some(t) => [t.r_sep, 0.0, -1.0],
        }
    }

    /// Circles `(r, z)` where the field is purely rotational.
    pub fn reeb_circles(&self) -> Vec<(f64, f64)> {
        alloc::vec![(self.spec.r_star, -self.spec.z_star), (self.spec.r_star, self.spec.z_star)]
    }

    /// Radial support of the non-vertical part.
    pub fn radial_support(&self) -> (f64, f64) {
        match &self.tuning {
            None => (self.spec.r_star - self.spec.delta_r, self.spec.r_star + self.spec.delta_r),
            Some(t) => (t.r_c - t.width, t.r_c + t.width),
        }
    }

    /// Widths of the collar near `∂P` on which the field is exactly `∂z`:
    /// `(inner radial, outer radial, axial)`.
    pub fn collar(&self) -> (f64, f64, f64) {
        let (lo, hi) = self.radial_support();
        (lo - self.spec.r_in, self.spec.r_out - hi, 1.0 - self.spec.z_star - self.spec.delta_z)
    }

    pub fn contains(&self, x: [f64; 3]) -> bool {
        let r = math::hypot(x[0], x[1]);
        r >= self.spec.r_in && r <= self.spec.r_out && x[2].abs() <= 1.0
    }

    /// Conserved quantity of the reduced flow: `r` (wilson) or `H` (stream).
    pub fn invariant(&self, x: [f64; 3]) -> f64 {
        let r = math::hypot(x[0], x[1]);
        match &self.tuning {
            None => r,
            Some(t) => {
                let (phi, _, _) = bump_d2((r - t.r_c) / t.width);
                let (k, _, _) = self.pair(x[2]);
                0.5 * r * r - t.a * phi * k
            }
        }
    }

    /// Gradient of [`PlugField::invariant`] in Cartesian plug coordinates.
    pub fn invariant_gradient(&self, x: [f64; 3]) -> [f64; 3] {
        let r = math::hypot(x[0], x[1]);
        if r < 1e-12 {
            return [0.0; 3];
        }
        let (h_r, h_z) = match &self.tuning {
            None => (1.0, 0.0),
            Some(t) => {
                let (phi, phi1, _) = bump_d2((r - t.r_c) / t.width);
                let (k, k1, _) = self.pair(x[2]);
                (r - t.a * phi1 / t.width * k, -t.a * phi * k1)
            }
        };
        [h_r * x[0] / r, h_r * x[1] / r, h_z]
    }

    /// One Newton step back onto the level `level` of the reduced invariant.
    /// Skipped near stagnation, where the correction would not be small.
    pub fn project_to_level(&self, x: [f64; 3], level: f64) -> [f64; 3] {
        let g = self.invariant_gradient(x);
        let g2 = math::dot(g, g);
        if g2 == 0.0 {
            return x;
        }
        let s = (self.invariant(x) - level) / g2;
        let c = math::scale(s, g);
        if math::norm(c) > 1e-8 {
            return x;
        }
        math::sub(x, c)
    }

    /// Bump pair `K(z) = k₋ + k₊` with derivatives.
    fn pair(&self, z: f64) -> (f64, f64, f64) {
        let dz = self.spec.delta_z;
        let (a, a1, a2) = bump_d2((z - self.spec.z_star) / dz);
        let (b, b1, b2) = bump_d2((z + self.spec.z_star) / dz);
        (a + b, (a1 + b1) / dz, (a2 + b2) / (dz * dz))
    }

    /// Odd profile `s(z) = sign(z) bump((|z| − z*)/δz)` and its derivative.
    fn odd(&self, z: f64) -> (f64, f64) {
        let dz = self.spec.delta_z;
        let (b, b1, _) = bump_d2((z.abs() - self.spec.z_star) / dz);
        (if z < 0.0 { -b } else { b }, b1 / dz)
    }

    fn cyl(&self, r: f64, z: f64) -> Cyl {
        let amp = self.spec.amplitude;
        let (k, k1, k2) = self.pair(z);
        let (s, s1) = self.odd(z);
        match &self.tuning {
            None => {
                let dr = self.spec.delta_r;
                let (hr, hr1, _) = bump_d2((r - self.spec.r_star) / dr);
                let hr1 = hr1 / dr;
                Cyl {
                    f: amp * hr * s,
                    f_r: amp * hr1 * s,
                    f_z: amp * hr * s1,
                    vz: 1.0 - hr * k,
                    vz_r: -hr1 * k,
                    vz_z: -hr * k1,
                    ..Cyl::default()
                }
            }
            Some(t) => {
                let wd = t.width;
                let (p0, p1, p2) = bump_d2((r - t.r_c) / wd);
                let (p1, p2) = (p1 / wd, p2 / (wd * wd));
                let a = t.a;
                let (r2, r3) = (r * r, r * r * r);
                Cyl {
                    w: a * p0 * k1 / r2,
                    w_r: a * k1 * (p1 / r2 - 2.0 * p0 / r3),
                    w_z: a * p0 * k2 / r2,
                    f: amp * p0 * s,
                    f_r: amp * p1 * s,
                    f_z: amp * p0 * s1,
                    vz: 1.0 - a * p1 * k / r,
                    vz_r: -a * k * (p2 / r - p1 / r2),
                    vz_z: -a * p1 * k1 / r,
                }
            }
        }
    }

    /// Cartesian velocity in plug coordinates.
    pub fn velocity_at(&self, x: [f64; 3]) -> [f64; 3] {
        let r = math::hypot(x[0], x[1]);
        if r < 1e-12 {
            return [0.0, 0.0, 1.0];
        }
        let c = self.cyl(r, x[2]);
        [c.w * x[0] - c.f * x[1], c.w * x[1] + c.f * x[0], c.vz]
    }

    /// Velocity and Jacobian `J[i][j] = ∂X_i/∂x_j`.
    pub fn jacobian(&self, x: [f64; 3]) -> ([f64; 3], [[f64; 3]; 3]) {
        let [px, py, z] = x;
        let r = math::hypot(px, py);
        if r < 1e-12 {
            return ([0.0, 0.0, 1.0], [[0.0; 3]; 3]);
        }
        let c = self.cyl(r, z);
        let (cx, cy) = (px / r, py / r);
        let v = [c.w * px - c.f * py, c.w * py + c.f * px, c.vz];
        let j = [
            [
                c.w + px * c.w_r * cx - py * c.f_r * cx,
                px * c.w_r * cy - c.f - py * c.f_r * cy,
                px * c.w_z - py * c.f_z,
            ],
            [
                py * c.w_r * cx + c.f + px * c.f_r * cx,
                c.w + py * c.w_r * cy + px * c.f_r * cy,
                py * c.w_z + px * c.f_z,
            ],
            [c.vz_r * cx, c.vz_r * cy, c.vz_z],
        ];
        (v, j)
    }

    /// Analytic divergence (trace of the Jacobian).
    pub fn divergence(&self, x: [f64; 3]) -> f64 {
        let (_, j) = self.jacobian(x);
        j[0][0] + j[1][1] + j[2][2]
    }

    /// Analytic Euclidean curl.
    pub fn curl(&self, x: [f64; 3]) -> [f64; 3] {
        let (_, j) = self.jacobian(x);
        [j[2][1] - j[1][2], j[0][2] - j[2][0], j[1][0] - j[0][1]]
    }
}

impl Flow for PlugField {
    #[inline]
    fn velocity(&self, x: [f64; 3]) -> [f64; 3] {
        self.velocity_at(x)
    }
}
