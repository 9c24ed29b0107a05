use serde::{Deserialize, Serialize};

use super::problem::Mode;
use super::verify::PrimalCertificate;
use crate::dec;
use crate::fields::{ScalarField0, ThreeForm, VectorField};
use crate::math;
use crate::{Error, Result};

/// Below this `|T|` a reeb witness is reported as degenerate.
pub const T_ZERO: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstIntegralReport {
    /// `sup |W_dα − F μ X|`.
    pub proportionality_defect: f64,
    /// `sup |X·∇F|`.
    pub first_integral_defect: f64,
}

/// Recover `F` with `dα = F i_X μ` from a geodesible witness:
/// `F = ⟨W_dα, X⟩ / (μ |X|²)` pointwise.
pub fn extract_f(
    c: &PrimalCertificate,
    x: &VectorField,
    mu: &ThreeForm,
    eta: f64,
) -> Result<(ScalarField0, FirstIntegralReport)> {
    if c.mode != Mode::Geodesible {
        return Err(Error::WrongMode { expected: "geodesible" });
    }
    x.require_nonvanishing()?;
    x.grid().same_as(c.alpha.grid())?;
    x.grid().same_as(mu.grid())?;
    let w = dec::d1(&c.alpha);
    let mut defect: f64 = 0.0;
    let f: alloc::vec::Vec<f64> = w
        .values()
        .iter()
        .zip(x.values())
        .zip(mu.values())
        .map(|((w, x), m)| {
            let f = math::dot(*w, *x) / (m * math::dot(*x, *x));
            let r = math::sub(*w, math::scale(f * m, *x));
            defect = defect.max(math::norm(r));
            f
        })
        .collect();
    let f = ScalarField0::new(*x.grid(), f)?;
    let limit = 10.0 * eta;
    if defect > limit {
        return Err(Error::NotProportional { defect, limit });
    }
    let first_integral_defect = dec::contract1(&dec::d0(&f), x)?.sup_norm();
    Ok((f, FirstIntegralReport { proportionality_defect: defect, first_integral_defect }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReebReport {
    pub t: f64,
    /// `sup |α(X') − 1|`.
    pub normalisation_defect: f64,
    /// Range of the coefficient of `α ∧ dα`.
    pub contact_min: f64,
    pub contact_max: f64,
    /// `α ∧ dα` has one strict sign everywhere (a volume form).
    pub contact_definite: bool,
    /// `sup |α∧dα − T α(X) μ|`.
    pub contact_identity_defect: f64,
}

/// The Reeb field `X' = X / α(X)` of a reeb-mode witness.
pub fn reeb_rescale(c: &PrimalCertificate, x: &VectorField, mu: &ThreeForm) -> Result<(VectorField, ReebReport)> {
    if c.mode != Mode::Reeb {
        return Err(Error::WrongMode { expected: "reeb" });
    }
    let t = c.t.unwrap_or(0.0);
    if t.abs() <= T_ZERO {
        return Err(Error::TZero { t });
    }
    let ax = dec::contract1(&c.alpha, x)?;
    if ax.min() <= 0.0 {
        return Err(Error::AlphaDegenerate { min: ax.min() });
    }
    let xr = VectorField::new(
        *x.grid(),
        x.values().iter().zip(ax.values()).map(|(v, a)| math::scale(1.0 / a, *v)).collect(),
    )?;
    let normalisation_defect = dec::contract1(&c.alpha, &xr)?.values().iter().fold(0.0f64, |m, v| m.max((v - 1.0).abs()));
    let vol = dec::wedge_1_2(&c.alpha, &dec::d1(&c.alpha))?;
    let (contact_min, contact_max) = (vol.min(), vol.max());
    let contact_identity_defect = vol
        .values()
        .iter()
        .zip(ax.values())
        .zip(mu.values())
        .fold(0.0f64, |m, ((v, a), mu)| m.max((v - t * a * mu).abs()));
    Ok((
        xr,
        ReebReport {
            t,
            normalisation_defect,
            contact_min,
            contact_max,
            contact_definite: contact_min > 0.0 || contact_max < 0.0,
            contact_identity_defect,
        },
    ))
}
