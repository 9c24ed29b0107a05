//! Discrete exterior calculus on the periodic collocated grid.
//!
//! All derivatives are second-order central differences. Because the
//! difference operators along different axes commute, `d1 ∘ d0 = 0` and
//! `d2 ∘ d1 = 0` hold up to rounding.

use alloc::vec::Vec;

use crate::fields::{OneForm, ScalarField0, ThreeForm, TwoForm, VectorField};
use crate::grid::Grid3;
use crate::math;
use crate::Result;

#[inline]
fn central(grid: &Grid3, values: &[f64], p: usize, axis: usize, inv2h: f64) -> f64 {
    (values[grid.shift(p, axis, true)] - values[grid.shift(p, axis, false)]) * inv2h
}

#[inline]
fn central3(grid: &Grid3, values: &[[f64; 3]], p: usize, axis: usize, comp: usize, inv2h: f64) -> f64 {
    (values[grid.shift(p, axis, true)][comp] - values[grid.shift(p, axis, false)][comp]) * inv2h
}

/// Discrete curl of a component field: `W_k = ε_klm D_l a_m`.
pub(crate) fn curl_values(grid: &Grid3, a: &[[f64; 3]]) -> Vec<[f64; 3]> {
    let inv2h = 0.5 / grid.h();
    (0..grid.len())
        .map(|p| {
            let d = |l, m| central3(grid, a, p, l, m, inv2h);
            [d(1, 2) - d(2, 1), d(2, 0) - d(0, 2), d(0, 1) - d(1, 0)]
        })
        .collect()
}

pub(crate) fn div_values(grid: &Grid3, a: &[[f64; 3]]) -> Vec<f64> {
    let inv2h = 0.5 / grid.h();
    (0..grid.len())
        .map(|p| (0..3).map(|k| central3(grid, a, p, k, k, inv2h)).sum())
        .collect()
}

pub(crate) fn grad_values(grid: &Grid3, f: &[f64]) -> Vec<[f64; 3]> {
    let inv2h = 0.5 / grid.h();
    (0..grid.len())
        .map(|p| [0, 1, 2].map(|k| central(grid, f, p, k, inv2h)))
        .collect()
}

/// Exterior derivative of a 0-form (central gradient).
pub fn d0(f: &ScalarField0) -> OneForm {
    let g = *f.grid();
    OneForm::new(g, grad_values(&g, f.values())).expect("finite input")
}

/// Exterior derivative of a 1-form, encoded as the vector `W` of `dα = i_W μ₀`.
pub fn d1(a: &OneForm) -> TwoForm {
    let g = *a.grid();
    TwoForm::new(g, curl_values(&g, a.values())).expect("finite input")
}

/// Exterior derivative of a 2-form: the divergence of its vector encoding.
pub fn d2(w: &TwoForm) -> ThreeForm {
    let g = *w.grid();
    ThreeForm::new(g, div_values(&g, w.values())).expect("finite input")
}

/// Pointwise pairing `α(X)`.
pub fn contract1(a: &OneForm, x: &VectorField) -> Result<ScalarField0> {
    a.grid().same_as(x.grid())?;
    let v = a.values().iter().zip(x.values()).map(|(a, x)| math::dot(*a, *x)).collect();
    ScalarField0::new(*a.grid(), v)
}

/// Interior product `i_X ω`: `(i_X ω)_k = ε_lmk W_l X_m`, i.e. `W × X`.
pub fn contract2(w: &TwoForm, x: &VectorField) -> Result<OneForm> {
    w.grid().same_as(x.grid())?;
    let v = w.values().iter().zip(x.values()).map(|(w, x)| math::cross(*w, *x)).collect();
    OneForm::new(*w.grid(), v)
}

/// `α ∧ ω` as a 3-form coefficient `Σ_k a_k W_k`.
pub fn wedge_1_2(a: &OneForm, w: &TwoForm) -> Result<ThreeForm> {
    a.grid().same_as(w.grid())?;
    let v = a.values().iter().zip(w.values()).map(|(a, w)| math::dot(*a, *w)).collect();
    ThreeForm::new(*a.grid(), v)
}

/// The vector `Y` with `i_Y μ₀ = d(X♭)`.
pub fn curl_field(x: &VectorField) -> VectorField {
    let g = *x.grid();
    VectorField::new(g, curl_values(&g, x.values())).expect("finite input")
}

/// Central-difference divergence.
pub fn div(x: &VectorField) -> ScalarField0 {
    let g = *x.grid();
    ScalarField0::new(g, div_values(&g, x.values())).expect("finite input")
}

/// `∫ w = h³ Σ_p w(p)`.
pub fn integrate(w: &ThreeForm) -> f64 {
    w.grid().cell_volume() * w.values().iter().sum::<f64>()
}

/// Trilinear periodic interpolation weights: eight `(index, weight)` pairs.
pub fn interp_stencil(grid: &Grid3, x: [f64; 3]) -> [(usize, f64); 8] {
    let n = grid.n();
    let h = grid.h();
    let mut base = [0usize; 3];
    let mut frac = [0.0; 3];
    for c in 0..3 {
        let u = math::wrap(x[c] / h - grid.offset(), n as f64);
        let f = math::floor(u);
        let mut i = f as usize;
        let mut t = u - f;
        if i >= n {
            i = 0;
            t = 0.0;
        }
        base[c] = i;
        frac[c] = t;
    }
    let mut out = [(0usize, 0.0); 8];
    for (corner, slot) in out.iter_mut().enumerate() {
        let mut idx = [0usize; 3];
        let mut w = 1.0;
        for c in 0..3 {
            let up = (corner >> (2 - c)) & 1 == 1;
            idx[c] = if up { (base[c] + 1) % n } else { base[c] };
            w *= if up { frac[c] } else { 1.0 - frac[c] };
        }
        *slot = (grid.index(idx[0], idx[1], idx[2]), w);
    }
    out
}

/// Fields that can be sampled at arbitrary points by trilinear interpolation.
pub trait Interpolate {
    type Value;
    fn interp(&self, x: [f64; 3]) -> Self::Value;
}

macro_rules! interp_scalar {
    ($t:ty) => {
        impl Interpolate for $t {
            type Value = f64;
            fn interp(&self, x: [f64; 3]) -> f64 {
                interp_stencil(self.grid(), x).iter().map(|(p, w)| w * self.values()[*p]).sum()
            }
        }
    };
}
macro_rules! interp_triple {
    ($t:ty) => {
        impl Interpolate for $t {
            type Value = [f64; 3];
            fn interp(&self, x: [f64; 3]) -> [f64; 3] {
                let mut out = [0.0; 3];
                for (p, w) in interp_stencil(self.grid(), x) {
                    let v = self.values()[p];
                    for c in 0..3 {
                        out[c] += w * v[c];
                    }
                }
                out
            }
        }
    };
}
interp_scalar!(ScalarField0);
interp_scalar!(ThreeForm);
interp_triple!(VectorField);
interp_triple!(OneForm);
interp_triple!(TwoForm);

/// Free-function form of [`Interpolate::interp`].
pub fn interp<F: Interpolate>(field: &F, x: [f64; 3]) -> F::Value {
    field.interp(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{cos, sin};

    fn grid(n: usize) -> Grid3 {
        Grid3::periodic(n).unwrap()
    }

    #[test]
    fn d0_of_constant_vanishes() {
        let f = ScalarField0::constant(grid(8), 7.0);
        assert_eq!(d0(&f).sup_norm(), 0.0);
    }

    #[test]
    fn d0_of_sin_has_discrete_symbol() {
        let g = grid(64);
        let h = g.h();
        let df = d0(&ScalarField0::from_fn(g, |x| sin(x[0])));
        for p in 0..g.len() {
            let x = g.point(p);
            let v = df.get(p);
            assert!((v[0] - sin(h) * cos(x[0]) / h).abs() < 1e-12);
            assert!((v[0] - cos(x[0])).abs() <= h * h / 6.0);
            assert_eq!(v[1], 0.0);
        }
    }

    #[test]
    fn d0_of_delta_touches_six_neighbours() {
        let g = grid(8);
        let p0 = g.index(3, 4, 5);
        let mut f = ScalarField0::zeros(g);
        f.values_mut()[p0] = 1.0;
        let df = d0(&f);
        let support: Vec<usize> =
            (0..g.len()).filter(|p| df.get(*p).iter().any(|c| *c != 0.0)).collect();
        assert_eq!(support.len(), 6);
        for a in 0..3 {
            assert!(support.contains(&g.shift(p0, a, true)));
            assert!(support.contains(&g.shift(p0, a, false)));
        }
    }

    #[test]
    fn d1_examples() {
        let g = grid(16);
        let h = g.h();
        let w = d1(&OneForm::from_fn(g, |x| [-sin(x[2]), 0.0, 0.0]));
        for p in 0..g.len() {
            let z = g.point(p)[2];
            let v = w.get(p);
            assert!(v[0].abs() < 1e-14 && v[2].abs() < 1e-14);
            assert!((v[1] + cos(z) * sin(h) / h).abs() < 1e-13);
        }
        assert_eq!(d1(&OneForm::constant(g, [1.0, -2.0, 3.0])).sup_norm(), 0.0);
    }

    #[test]
    fn contractions_and_wedge() {
        let g = grid(4);
        let w = TwoForm::constant(g, [1.0, 0.0, 0.0]);
        let x = VectorField::constant(g, [0.0, 1.0, 0.0]);
        assert_eq!(contract2(&w, &x).unwrap().get(5), [0.0, 0.0, 1.0]);
        let par = TwoForm::constant(g, [0.0, 2.0, 0.0]);
        assert_eq!(contract2(&par, &x).unwrap().sup_norm(), 0.0);
        let dz = OneForm::constant(g, [0.0, 0.0, 1.0]);
        let ez = VectorField::constant(g, [0.0, 0.0, 1.0]);
        assert!(contract1(&dz, &ez).unwrap().values().iter().all(|v| *v == 1.0));
        let vol = wedge_1_2(&dz, &TwoForm::constant(g, [0.0, 0.0, 1.0])).unwrap();
        assert!(vol.values().iter().all(|v| *v == 1.0));
    }

    #[test]
    fn curl_of_sin_z() {
        let g = grid(32);
        let h = g.h();
        let y = curl_field(&VectorField::from_fn(g, |x| [sin(x[2]), 0.0, 0.0]));
        for p in 0..g.len() {
            let z = g.point(p)[2];
            assert!((y.get(p)[1] - cos(z) * sin(h) / h).abs() < 1e-13);
        }
        assert_eq!(curl_field(&VectorField::constant(g, [0.0, 0.0, 1.0])).sup_norm(), 0.0);
    }

    #[test]
    fn integrate_examples() {
        let g = grid(16);
        let one = ThreeForm::constant(g, 1.0);
        assert!((integrate(&one) - math::powi(math::TAU, 3)).abs() < 1e-10);
        let s = ThreeForm::from_fn(g, |x| sin(x[0]));
        assert!(integrate(&s).abs() < 1e-12);
    }

    #[test]
    fn interp_examples() {
        let g = Grid3::with_offset(16, math::TAU, 0.5).unwrap();
        let f = ScalarField0::from_fn(g, |x| sin(x[0]) + 2.0 * cos(x[1]));
        for p in [0, 17, 4095] {
            assert!((f.interp(g.point(p)) - f.get(p)).abs() < 1e-14);
        }
        let c = VectorField::constant(g, [1.0, 2.0, 3.0]);
        let v = c.interp([6.2, 0.01, 3.3]);
        for (a, b) in v.iter().zip([1.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        let s = ScalarField0::from_fn(g, |x| sin(x[0]));
        let h = g.h();
        let mut worst: f64 = 0.0;
        for i in 0..16 {
            let x = (i as f64 + 1.0) * h;
            worst = worst.max((s.interp([x, 1.0, 2.0]) - sin(x)).abs());
        }
        assert!(worst <= h * h / 8.0 + 1e-15);
    }

    #[test]
    fn d2_of_d1_vanishes() {
        let g = grid(12);
        let a = OneForm::from_fn(g, |x| [sin(2.0 * x[1]) * cos(x[2]), cos(x[0] + x[2]), sin(x[0] * 1.0)]);
        let f = ScalarField0::from_fn(g, |x| sin(x[0]) * cos(3.0 * x[1] + x[2]));
        assert!(d2(&d1(&a)).sup_norm() < 1e-12);
        assert!(d1(&d0(&f)).sup_norm() < 1e-12);
    }
}
