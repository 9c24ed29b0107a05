//! Finitely supported 1-currents and structured quadrilateral 2-chains.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::dec::Interpolate;
use crate::fields::{OneForm, TwoForm, VectorField};
use crate::grid::Grid3;
use crate::math;
use crate::{Error, Result};

/// Anything that yields covector coefficients at a point.
pub trait OneFormEval {
    fn covector(&self, x: [f64; 3]) -> [f64; 3];
}

/// Anything that yields the vector `W` of a 2-form `i_W μ₀` at a point.
pub trait TwoFormEval {
    fn flux_vector(&self, x: [f64; 3]) -> [f64; 3];
}

impl OneFormEval for OneForm {
    fn covector(&self, x: [f64; 3]) -> [f64; 3] {
        self.interp(x)
    }
}

impl TwoFormEval for TwoForm {
    fn flux_vector(&self, x: [f64; 3]) -> [f64; 3] {
        self.interp(x)
    }
}

/// Wraps a closure as an analytic form.
pub struct Analytic<F>(pub F);

impl<F: Fn([f64; 3]) -> [f64; 3]> OneFormEval for Analytic<F> {
    fn covector(&self, x: [f64; 3]) -> [f64; 3] {
        (self.0)(x)
    }
}

impl<F: Fn([f64; 3]) -> [f64; 3]> TwoFormEval for Analytic<F> {
    fn flux_vector(&self, x: [f64; 3]) -> [f64; 3] {
        (self.0)(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dirac {
    pub point: [f64; 3],
    pub vector: [f64; 3],
    pub weight: f64,
}

/// `Σ c_i δ_{p_i}^{v_i}` acting on 1-forms by `a ↦ Σ c_i a(p_i)(v_i)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DiscreteCurrent1 {
    diracs: Vec<Dirac>,
}

fn key(p: [f64; 3]) -> [u64; 3] {
    // Normalise -0.0 so coincident points merge.
    p.map(|c| (c + 0.0).to_bits())
}

impl DiscreteCurrent1 {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_diracs(diracs: Vec<Dirac>) -> Result<Self> {
        if diracs.iter().any(|d| !(d.weight >= 0.0 && d.weight.is_finite())) {
            return Err(Error::InvalidArgument("Dirac weights must be finite and non-negative".into()));
        }
        Ok(Self { diracs })
    }

    pub fn push(&mut self, point: [f64; 3], vector: [f64; 3], weight: f64) {
        assert!(weight >= 0.0, "Dirac weight must be non-negative");
        self.diracs.push(Dirac { point, vector, weight });
    }

    pub fn diracs(&self) -> &[Dirac] {
        &self.diracs
    }

    pub fn len(&self) -> usize {
        self.diracs.len()
    }
    pub fn is_empty(&self) -> bool {
        self.diracs.is_empty()
    }

    /// Foliation current `Σ_p μ_p δ_p^{X(p)}` of grid weights.
    pub fn foliation(x: &VectorField, weights: &[f64]) -> Result<Self> {
        let g = x.grid();
        let diracs = weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > 0.0)
            .map(|(p, w)| Dirac { point: g.point(p), vector: x.get(p), weight: *w })
            .collect();
        Self::from_diracs(diracs)
    }

    /// Merge Diracs sitting at bitwise-identical points (cancelling opposite
    /// vectors) and drop the ones that vanish.
    pub fn combined(&self) -> Self {
        let mut acc: BTreeMap<[u64; 3], ([f64; 3], [f64; 3])> = BTreeMap::new();
        for d in &self.diracs {
            let e = acc.entry(key(d.point)).or_insert((d.point, [0.0; 3]));
            e.1 = math::add(e.1, math::scale(d.weight, d.vector));
        }
        let diracs = acc
            .into_values()
            .filter(|(_, v)| math::norm(*v) > 0.0)
            .map(|(p, v)| Dirac { point: p, vector: v, weight: 1.0 })
            .collect();
        Self { diracs }
    }

    /// Mass `Σ c_i |v_i|`, after merging coincident Diracs.
    pub fn mass(&self) -> f64 {
        self.combined().raw_mass()
    }

    /// `Σ c_i |v_i|` without merging.
    pub fn raw_mass(&self) -> f64 {
        self.diracs.iter().map(|d| d.weight * math::norm(d.vector)).sum()
    }

    pub fn eval1<A: OneFormEval + ?Sized>(&self, a: &A) -> f64 {
        self.diracs.iter().map(|d| d.weight * math::dot(a.covector(d.point), d.vector)).sum()
    }

    /// Multiply all weights by `s ≥ 0`.
    pub fn scaled(&self, s: f64) -> Self {
        assert!(s >= 0.0, "currents are scaled by non-negative factors");
        Self { diracs: self.diracs.iter().map(|d| Dirac { weight: s * d.weight, ..*d }).collect() }
    }

    pub fn negated(&self) -> Self {
        Self { diracs: self.diracs.iter().map(|d| Dirac { vector: math::scale(-1.0, d.vector), ..*d }).collect() }
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut diracs = self.diracs.clone();
        diracs.extend_from_slice(&other.diracs);
        Self { diracs }
    }

    pub fn minus(&self, other: &Self) -> Self {
        self.plus(&other.negated())
    }

    /// True if every vector equals `field(p)` to relative tolerance `tol`.
    pub fn is_foliation<F: Fn([f64; 3]) -> [f64; 3]>(&self, field: F, tol: f64) -> bool {
        self.diracs.iter().all(|d| {
            let x = field(d.point);
            math::norm(math::sub(d.vector, x)) <= tol * math::norm(x).max(f64::MIN_POSITIVE)
        })
    }

    /// Fraction of the mass carried by Diracs satisfying `pred`.
    pub fn mass_fraction(&self, pred: impl Fn([f64; 3]) -> bool) -> f64 {
        let total = self.raw_mass();
        if total == 0.0 {
            return 0.0;
        }
        let hit: f64 = self
            .diracs
            .iter()
            .filter(|d| pred(d.point))
            .map(|d| d.weight * math::norm(d.vector))
            .sum();
        hit / total
    }
}

/// Ordered polyline; converts to per-segment midpoint Diracs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PolylineCurrent1 {
    pub vertices: Vec<[f64; 3]>,
}

impl PolylineCurrent1 {
    pub fn new(vertices: Vec<[f64; 3]>) -> Self {
        Self { vertices }
    }

    pub fn reversed(&self) -> Self {
        let mut v = self.vertices.clone();
        v.reverse();
        Self { vertices: v }
    }

    /// Sum of segment lengths.
    pub fn length(&self) -> f64 {
        self.vertices.windows(2).map(|w| math::norm(math::sub(w[1], w[0]))).sum()
    }

    pub fn to_current(&self) -> DiscreteCurrent1 {
        let mut c = DiscreteCurrent1::new();
        for w in self.vertices.windows(2) {
            let d = math::sub(w[1], w[0]);
            let len = math::norm(d);
            if len > 0.0 {
                let mid = [0.5 * (w[0][0] + w[1][0]), 0.5 * (w[0][1] + w[1][1]), 0.5 * (w[0][2] + w[1][2])];
                c.push(mid, math::scale(1.0 / len, d), len);
            }
        }
        c
    }

    pub fn mass(&self) -> f64 {
        self.to_current().raw_mass()
    }
}

/// Structured quadrilateral mesh with vertices `v(i, j)`, `i < nu` along the
/// first parameter and `j < nv` along the second; oriented by `du ∧ dv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceChain2 {
    nu: usize,
    nv: usize,
    vertices: Vec<[f64; 3]>,
    /// Per-quad tangency flags, when the chain was built along a flow.
    pub tangent: Option<Vec<bool>>,
}

/// The four oriented boundary edges of a chain.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryEdges {
    /// `v = 0`, traversed with `u` increasing (enters +).
    pub bottom: PolylineCurrent1,
    /// `u = max`, traversed with `v` increasing (enters +).
    pub right: PolylineCurrent1,
    /// `v = max`, traversed with `u` increasing (enters −).
    pub top: PolylineCurrent1,
    /// `u = 0`, traversed with `v` increasing (enters −).
    pub left: PolylineCurrent1,
}

impl SurfaceChain2 {
    pub fn new(nu: usize, nv: usize, vertices: Vec<[f64; 3]>) -> Result<Self> {
        if nu < 2 || nv < 2 || vertices.len() != nu * nv {
            return Err(Error::InvalidArgument("chain needs nu, nv >= 2 and nu*nv vertices".into()));
        }
        Ok(Self { nu, nv, vertices, tangent: None })
    }

    /// Flat rectangle `origin + [0,1]·e1 + [0,1]·e2` with `m × m` quads.
    pub fn parallelogram(origin: [f64; 3], e1: [f64; 3], e2: [f64; 3], m: usize) -> Self {
        let mut v = Vec::with_capacity((m + 1) * (m + 1));
        for i in 0..=m {
            for j in 0..=m {
                let (a, b) = (i as f64 / m as f64, j as f64 / m as f64);
                v.push(math::add(origin, math::add(math::scale(a, e1), math::scale(b, e2))));
            }
        }
        Self::new(m + 1, m + 1, v).expect("consistent sizes")
    }

    /// Lattice chain through grid points. The `u` direction follows `steps`
    /// (one axis per step of `2h`), the `v` direction runs `nv − 1` steps of
    /// `2h` along `v_axis`, so every quad is a `2h` square centred on a grid
    /// point. Midpoint quadrature then samples grid values only, and Stokes
    /// holds exactly for the central-difference `d1`.
    pub fn lattice(grid: &Grid3, corner: [usize; 3], steps: &[usize], v_axis: usize, nv: usize) -> Result<Self> {
        if v_axis > 2 || steps.iter().any(|&a| a > 2 || a == v_axis) {
            return Err(Error::InvalidArgument("lattice steps must be axes other than v_axis".into()));
        }
        let step = 2.0 * grid.h();
        let mut u = alloc::vec![grid.point(grid.index(corner[0] % grid.n(), corner[1] % grid.n(), corner[2] % grid.n()))];
        for &a in steps {
            let mut q = *u.last().expect("non-empty");
            q[a] += step;
            u.push(q);
        }
        let mut v = Vec::with_capacity(u.len() * nv);
        for q in &u {
            for j in 0..nv {
                let mut x = *q;
                x[v_axis] += step * j as f64;
                v.push(x);
            }
        }
        Self::new(u.len(), nv, v)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nu, self.nv)
    }
    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }
    #[inline]
    pub fn vertex(&self, i: usize, j: usize) -> [f64; 3] {
        self.vertices[i * self.nv + j]
    }
    pub fn quad_count(&self) -> usize {
        (self.nu - 1) * (self.nv - 1)
    }

    /// Midpoint and averaged edge vectors `(m, a, b)` of quad `(i, j)`.
    #[inline]
    pub fn quad(&self, i: usize, j: usize) -> ([f64; 3], [f64; 3], [f64; 3]) {
        let v00 = self.vertex(i, j);
        let v10 = self.vertex(i + 1, j);
        let v01 = self.vertex(i, j + 1);
        let v11 = self.vertex(i + 1, j + 1);
        let mut m = [0.0; 3];
        let mut a = [0.0; 3];
        let mut b = [0.0; 3];
        for c in 0..3 {
            m[c] = 0.25 * (v00[c] + v10[c] + v01[c] + v11[c]);
            a[c] = 0.5 * ((v10[c] - v00[c]) + (v11[c] - v01[c]));
            b[c] = 0.5 * ((v01[c] - v00[c]) + (v11[c] - v10[c]));
        }
        (m, a, b)
    }

    /// Sum of parallelogram areas.
    pub fn mass(&self) -> f64 {
        // compensated: production chains carry ~10⁶ quads
        math::sum((0..self.nu - 1).flat_map(|i| (0..self.nv - 1).map(move |j| (i, j))).map(|(i, j)| {
            let (_, a, b) = self.quad(i, j);
            math::norm(math::cross(a, b))
        }))
    }

    /// Midpoint quadrature `Σ ω_m(a, b)`.
    pub fn eval2<W: TwoFormEval + ?Sized>(&self, w: &W) -> f64 {
        let mut s = 0.0;
        for i in 0..self.nu - 1 {
            for j in 0..self.nv - 1 {
                let (m, a, b) = self.quad(i, j);
                s += math::dot(w.flux_vector(m), math::cross(a, b));
            }
        }
        s
    }

    pub fn column(&self, i: usize) -> PolylineCurrent1 {
        PolylineCurrent1::new((0..self.nv).map(|j| self.vertex(i, j)).collect())
    }

    pub fn row(&self, j: usize) -> PolylineCurrent1 {
        PolylineCurrent1::new((0..self.nu).map(|i| self.vertex(i, j)).collect())
    }

    pub fn boundary_edges(&self) -> BoundaryEdges {
        BoundaryEdges {
            bottom: self.row(0),
            right: self.column(self.nu - 1),
            top: self.row(self.nv - 1),
            left: self.column(0),
        }
    }

    /// Oriented boundary as one closed loop.
    pub fn boundary(&self) -> PolylineCurrent1 {
        let e = self.boundary_edges();
        let mut v = e.bottom.vertices.clone();
        v.extend_from_slice(&e.right.vertices[1..]);
        v.extend_from_slice(&e.top.reversed().vertices[1..]);
        v.extend_from_slice(&e.left.reversed().vertices[1..]);
        PolylineCurrent1::new(v)
    }

    /// Flags quads whose two `v`-edges make an angle `≤ tol` with the field
    /// at the edge midpoints. Degenerate (zero-length) edges pass.
    pub fn tangency_flags<F: Fn([f64; 3]) -> [f64; 3]>(&self, field: F, tol: f64) -> Vec<bool> {
        let edge_ok = |p: [f64; 3], q: [f64; 3]| {
            let e = math::sub(q, p);
            let len = math::norm(e);
            if len == 0.0 {
                return true;
            }
            let x = field(math::scale(0.5, math::add(p, q)));
            let c = math::norm(math::cross(e, x));
            let d = math::dot(e, x);
            math::atan2(c, d).abs() <= tol
        };
        let mut flags = Vec::with_capacity(self.quad_count());
        for i in 0..self.nu - 1 {
            for j in 0..self.nv - 1 {
                flags.push(
                    edge_ok(self.vertex(i, j), self.vertex(i, j + 1))
                        && edge_ok(self.vertex(i + 1, j), self.vertex(i + 1, j + 1)),
                );
            }
        }
        flags
    }
}

/// Upper bound on the flat norm `F(c1 − c2)`.
///
/// Without a filler this is `mass(c1 − c2)`. With a filler whose boundary
/// matches `c1 − c2` structurally it is `min(mass(c1 − c2), mass(filler))`;
/// a structural mismatch is an error.
pub fn flat_distance_bound(c1: &DiscreteCurrent1, c2: &DiscreteCurrent1, filler: Option<&SurfaceChain2>) -> Result<f64> {
    let diff = c1.minus(c2);
    let m = diff.mass();
    match filler {
        None => Ok(m),
        Some(f) => {
            let defect = f.boundary().to_current().minus(&diff).mass();
            if defect > 1e-9 * (1.0 + m) {
                return Err(Error::BoundaryMismatch { defect });
            }
            Ok(m.min(f.mass()))
        }
    }
}

/// General decomposition bound `F(S) ≤ min(|S|, |S − ∂F| + |F|)` for
/// `S = c1 − c2` and any surface `F`; valid without structural matching.
pub fn flat_decomposition_bound(c1: &DiscreteCurrent1, c2: &DiscreteCurrent1, filler: &SurfaceChain2) -> f64 {
    let diff = c1.minus(c2);
    let rest = diff.minus(&filler.boundary().to_current()).mass();
    diff.mass().min(rest + filler.mass())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dec;
    use crate::grid::Grid3;

    #[test]
    fn dirac_mass_and_eval() {
        let mut c = DiscreteCurrent1::new();
        c.push([1.0, 2.0, 3.0], [0.0, 3.0, 4.0], 1.0);
        assert_eq!(c.mass(), 5.0);
        let mut z = DiscreteCurrent1::new();
        z.push([0.3, 0.1, 2.0], [0.0, 0.0, 1.0], 1.0);
        assert_eq!(z.eval1(&Analytic(|_x: [f64; 3]| [0.0, 0.0, 1.0])), 1.0);
        assert_eq!(c.minus(&c).mass(), 0.0);
    }

    #[test]
    fn circle_polyline_chord_error() {
        let m = 200;
        let d = math::TAU / m as f64;
        let pts: Vec<[f64; 3]> = (0..=m).map(|i| [math::cos(i as f64 * d), math::sin(i as f64 * d), 0.0]).collect();
        let len = PolylineCurrent1::new(pts).mass();
        let l = math::TAU;
        assert!((l - len).abs() <= l * d * d / 24.0 + 1e-12);
        assert!((l - len).abs() >= 0.9 * l * d * d / 24.0);
    }

    #[test]
    fn z_circle_line_integral() {
        let g = Grid3::periodic(16).unwrap();
        let dz = OneForm::constant(g, [0.0, 0.0, 1.0]);
        let pts: Vec<[f64; 3]> = (0..=64).map(|i| [1.0, 2.0, i as f64 * g.length() / 64.0]).collect();
        let c = PolylineCurrent1::new(pts).to_current();
        assert!((c.eval1(&dz) - g.length()).abs() < 1e-9);
    }

    #[test]
    fn rectangle_area_and_flux() {
        let s = SurfaceChain2::parallelogram([0.5, 0.5, 1.0], [2.0, 0.0, 0.0], [0.0, 1.5, 0.0], 10);
        assert!((s.mass() - 3.0).abs() < 1e-12);
        let w = Analytic(|_x: [f64; 3]| [0.0, 0.0, 1.0]);
        assert!((s.eval2(&w) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rectangle_stokes_with_x_dy() {
        let g = Grid3::periodic(64).unwrap();
        let a = OneForm::from_fn(g, |x| [0.0, x[0], 0.0]);
        let s = SurfaceChain2::parallelogram([1.0, 1.0, 2.0], [2.0, 0.0, 0.0], [0.0, 1.5, 0.0], 20);
        let lhs = s.boundary().to_current().eval1(&a);
        let rhs = s.eval2(&dec::d1(&a));
        assert!((lhs - 3.0).abs() < 1e-6 && (rhs - 3.0).abs() < 1e-6, "{lhs} {rhs}");
    }

    #[test]
    fn closed_surface_has_null_boundary() {
        // A torus of revolution: the u = 0 and u = max columns coincide, as do
        // the v = 0 and v = max rows.
        let m = 12;
        let mut v = Vec::new();
        for i in 0..=m {
            let u = if i == m { 0.0 } else { math::TAU * i as f64 / m as f64 };
            for j in 0..=m {
                let w = if j == m { 0.0 } else { math::TAU * j as f64 / m as f64 };
                let r = 2.0 + 0.5 * math::cos(w);
                v.push([r * math::cos(u), r * math::sin(u), 0.5 * math::sin(w)]);
            }
        }
        let s = SurfaceChain2::new(m + 1, m + 1, v).unwrap();
        assert_eq!(s.boundary().to_current().mass(), 0.0);
        assert!(s.mass() > 0.0);
    }

    #[test]
    fn flat_bounds() {
        let seg = |y: f64| PolylineCurrent1::new(alloc::vec![[0.0, y, 0.0], [1.0, y, 0.0]]).to_current();
        let c = seg(0.0);
        assert_eq!(flat_distance_bound(&c, &c, None).unwrap(), 0.0);
        let eps = 1e-3;
        let filler = SurfaceChain2::parallelogram([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, eps, 0.0], 1);
        assert!((flat_distance_bound(&seg(0.0), &seg(eps), None).unwrap() - 2.0).abs() < 1e-12);
        let b = flat_decomposition_bound(&seg(0.0), &seg(eps), &filler);
        assert!(b <= 3.0 * eps + 1e-12, "{b}");
        assert!(matches!(
            flat_distance_bound(&seg(0.0), &seg(eps), Some(&filler)),
            Err(Error::BoundaryMismatch { .. })
        ));
        // A filler whose boundary is exactly c1 − c2.
        let loop1 = filler.boundary().to_current();
        assert!((flat_distance_bound(&loop1, &DiscreteCurrent1::new(), Some(&filler)).unwrap() - eps).abs() < 1e-12);
    }
}
