//! Riemannian metrics rebuilt from adapted 1-forms, `g = α⊗α/α(X) + c·g_ξ`,
//! with `g_ξ(u, v) = ⟨Pu, Pv⟩` and `P = Id − X⊗α/α(X)`.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dec;
use crate::fields::{OneForm, ScalarField0, ThreeForm, VectorField};
use crate::grid::Grid3;
use crate::linalg::{det3, sym_eigenvalues, Mat3};
use crate::math;
use crate::{Error, Result};

/// Below this `det g|_{c=1}` the projected complement is treated as collapsed.
const RANK_EPS: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDiagnostics {
    pub min_eigenvalue: f64,
    /// `sup |i_X g − α|`.
    pub contraction_defect: f64,
    /// `sup |√det g − μ| / μ`.
    pub volume_defect: f64,
    pub volume_compatible: bool,
}

/// A symmetric tensor per point, stored as `[xx, xy, xz, yy, yz, zz]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricField {
    grid: Grid3,
    values: Vec<[f64; 6]>,
    pub diagnostics: MetricDiagnostics,
}

fn unpack(s: &[f64; 6]) -> Mat3 {
    [[s[0], s[1], s[2]], [s[1], s[3], s[4]], [s[2], s[4], s[5]]]
}

fn pack(m: &Mat3) -> [f64; 6] {
    [m[0][0], m[0][1], m[0][2], m[1][1], m[1][2], m[2][2]]
}

fn apply(m: &Mat3, v: [f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|i| math::dot(m[i], v))
}

impl MetricField {
    /// Wrap raw coefficients; diagnostics are recomputed against `α = i_X g`
    /// and the given volume coefficient.
    pub fn from_values(grid: Grid3, values: Vec<[f64; 6]>, x: &VectorField, mu: &ThreeForm) -> Result<Self> {
        if values.len() != grid.len() || values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(alloc::format!("metric needs {} finite tensors", grid.len())));
        }
        grid.same_as(x.grid())?;
        grid.same_as(mu.grid())?;
        let mut g = Self {
            grid,
            values,
            diagnostics: MetricDiagnostics { min_eigenvalue: 0.0, contraction_defect: 0.0, volume_defect: 0.0, volume_compatible: false },
        };
        let alpha = g.lower(x)?;
        g.diagnostics = g.diagnose(&alpha, x, mu, false);
        Ok(g)
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn values(&self) -> &[[f64; 6]] {
        &self.values
    }

    pub fn matrix(&self, p: usize) -> Mat3 {
        unpack(&self.values[p])
    }

    /// `i_X g`, the 1-form `g(X, ·)`.
    pub fn lower(&self, x: &VectorField) -> Result<OneForm> {
        self.grid.same_as(x.grid())?;
        OneForm::new(self.grid, self.values.iter().zip(x.values()).map(|(s, v)| apply(&unpack(s), *v)).collect())
    }

    fn diagnose(&self, alpha: &OneForm, x: &VectorField, mu: &ThreeForm, volume_compatible: bool) -> MetricDiagnostics {
        let mut d = MetricDiagnostics {
            min_eigenvalue: f64::INFINITY,
            contraction_defect: 0.0,
            volume_defect: 0.0,
            volume_compatible,
        };
        for (p, s) in self.values.iter().enumerate() {
            let m = unpack(s);
            let ev = sym_eigenvalues(&m);
            d.min_eigenvalue = d.min_eigenvalue.min(ev[0].min(ev[1]).min(ev[2]));
            let r = math::sub(apply(&m, x.get(p)), alpha.get(p));
            d.contraction_defect = d.contraction_defect.max(math::norm(r));
            let vol = math::sqrt(det3(&m).max(0.0));
            d.volume_defect = d.volume_defect.max((vol - mu.get(p)).abs() / mu.get(p));
        }
        d
    }
}

/// Build `g = α⊗α/α(X) + c(p)·PᵀP`. With `volume_compatible`, `c(p)` is set so
/// that `√det g = μ(p)`; otherwise `c ≡ 1`.
pub fn build_metric(alpha: &OneForm, x: &VectorField, mu: &ThreeForm, volume_compatible: bool) -> Result<MetricField> {
    let grid = *x.grid();
    grid.same_as(alpha.grid())?;
    grid.same_as(mu.grid())?;
    let ax = dec::contract1(alpha, x)?;
    if !(ax.min() > 0.0) {
        return Err(Error::AlphaDegenerate { min: ax.min() });
    }
    let mut values = Vec::with_capacity(grid.len());
    for p in 0..grid.len() {
        let (a, v, s) = (alpha.get(p), x.get(p), ax.get(p));
        let mut proj = [[0.0; 3]; 3];
        for (i, row) in proj.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = f64::from(u8::from(i == j)) - v[i] * a[j] / s;
            }
        }
        let mut base = [[0.0; 3]; 3];
        let mut gxi = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                base[i][j] = a[i] * a[j] / s;
                gxi[i][j] = (0..3).map(|k| proj[k][i] * proj[k][j]).sum();
            }
        }
        let sum = |c: f64| -> Mat3 { core::array::from_fn(|i| core::array::from_fn(|j| base[i][j] + c * gxi[i][j])) };
        let d1 = det3(&sum(1.0));
        if !(d1 > RANK_EPS) {
            return Err(Error::RankCollapse { index: p });
        }
        let c = if volume_compatible { mu.get(p) / math::sqrt(d1) } else { 1.0 };
        values.push(pack(&sum(c)));
    }
    let mut g = MetricField {
        grid,
        values,
        diagnostics: MetricDiagnostics { min_eigenvalue: 0.0, contraction_defect: 0.0, volume_defect: 0.0, volume_compatible },
    };
    g.diagnostics = g.diagnose(alpha, x, mu, volume_compatible);
    Ok(g)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EulerReport {
    /// Sup-norm of `i_X d(i_X g) + dB`.
    pub residual_sup: f64,
    /// Grid L² norm of the same residual.
    pub residual_l2: f64,
    /// Sup-norm of `div(μX)`, the coefficient of `L_X μ`.
    pub divergence_sup: f64,
}

/// Check the stationary Euler equations in the dual form `i_X dα = −dB`,
/// with `α` recomputed as `i_X g`.
pub fn verify_euler(g: &MetricField, x: &VectorField, b: &ScalarField0, mu: &ThreeForm) -> Result<EulerReport> {
    let alpha = g.lower(x)?;
    x.grid().same_as(b.grid())?;
    x.grid().same_as(mu.grid())?;
    let r = dec::contract2(&dec::d1(&alpha), x)?.axpy(1.0, &dec::d0(b))?;
    let mx = VectorField::new(*x.grid(), x.values().iter().zip(mu.values()).map(|(v, m)| math::scale(*m, *v)).collect())?;
    Ok(EulerReport { residual_sup: r.max_abs_component(), residual_l2: r.l2_norm(), divergence_sup: dec::div(&mx).sup_norm() })
}

/// Pressure `p = B − α(X)/2`.
pub fn recover_pressure(b: &ScalarField0, alpha: &OneForm, x: &VectorField) -> Result<ScalarField0> {
    let ax = dec::contract1(alpha, x)?;
    b.axpy(-0.5, &ax)
}
