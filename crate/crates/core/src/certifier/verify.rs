use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::problem::{FeasibilityProblem, Mode, POSITIVITY_FLOOR};
use super::sparse::Csr;
use crate::currents::DiscreteCurrent1;
use crate::dec;
use crate::fields::{OneForm, ScalarField0, VectorField};
use crate::math;
use crate::{Error, Result};

/// Slack on the positivity floor accepted by the feasible flag.
pub const FLOOR_SLACK: f64 = 1e-9;

/// Default dual tolerances.
pub const DEFAULT_EPS_DUAL: f64 = 1e-6;
pub const DEFAULT_EPS_CYCLE: f64 = 1e-6;

/// Largest `‖(α, B, T)‖₁` a primal witness may have and still verify at
/// dual tolerance `eps_dual`. Together with the `η‖λ‖₁ ≤ ½` condition on dual
/// certificates this makes the two verdicts mutually exclusive: a verifying
/// pair would give `½ ≤ |rᵀu| ≤ eps_dual·‖u‖₁ ≤ ¼`.
pub fn primal_norm_cap(eps_dual: f64) -> f64 {
    0.25 / eps_dual
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimalResiduals {
    pub min_alpha_x: f64,
    pub eq_sup: f64,
    pub eq_l2: f64,
    pub l1_norm: f64,
    pub norm_cap: f64,
    /// `min α(X) ≥ 1 − 10⁻⁹` and equality sup-norm `≤ η`.
    pub feasible: bool,
    pub verified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimalCertificate {
    pub mode: Mode,
    pub alpha: OneForm,
    pub b: Option<ScalarField0>,
    pub t: Option<f64>,
    pub residuals: PrimalResiduals,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualResiduals {
    /// Sup-norm of the whole adjoint vector `A_inᵀμ + A_eqᵀλ`.
    pub adjoint_sup: f64,
    pub adjoint_alpha_sup: f64,
    pub adjoint_b_sup: f64,
    pub adjoint_t: f64,
    /// Sup over grid bumps `φ` of the current's pairing with `d0 φ`.
    pub cycle_sup: f64,
    pub weight_sum: f64,
    pub min_weight: f64,
    /// `η ‖λ‖₁`; must stay `≤ ½` for the strict violation to survive the relaxation.
    pub eta_multiplier_l1: f64,
    /// Mass of the derived current `Σ μ_p δ_p^{X(p)}`.
    pub current_mass: f64,
    pub eps_dual: f64,
    pub eps_cycle: f64,
    pub verified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualCertificate {
    pub mode: Mode,
    /// Point weights `μ_p ≥ 0` on the inequality rows.
    pub weights: ScalarField0,
    /// Multipliers `λ` on the equality rows, three per point.
    pub multipliers: VectorField,
    pub residuals: DualResiduals,
}

impl DualCertificate {
    /// The foliation current `Σ_p μ_p δ_p^{X(p)}`.
    pub fn foliation_current(&self, x: &VectorField) -> Result<DiscreteCurrent1> {
        DiscreteCurrent1::foliation(x, self.weights.values())
    }
}

impl PrimalCertificate {
    /// A geodesible witness is an adapted witness with `B ≡ 0`.
    pub fn to_adapted(&self) -> Result<Self> {
        if self.mode != Mode::Geodesible {
            return Err(Error::WrongMode { expected: "geodesible" });
        }
        let b = ScalarField0::zeros(*self.alpha.grid());
        Ok(Self { mode: Mode::Adapted, alpha: self.alpha.clone(), b: Some(b), t: None, residuals: self.residuals.clone() })
    }

    /// Witness for the problem with `X` replaced by `c·X`: `α/c` (and `B/c`).
    /// For the `T` modes the equality `dα = T i_X μ` forces `T/c²` (reeb) or
    /// `T/c` (vorticity-pair, `Y` held fixed).
    pub fn rescaled_for(&self, c: f64) -> Self {
        let t = self.t.map(|t| match self.mode {
            Mode::Reeb => t / (c * c),
            _ => t / c,
        });
        Self {
            mode: self.mode,
            alpha: self.alpha.scaled(1.0 / c),
            b: self.b.as_ref().map(|b| b.scaled(1.0 / c)),
            t,
            residuals: self.residuals.clone(),
        }
    }
}

fn check_shape(p: &FeasibilityProblem, mode: Mode, grid: &crate::Grid3) -> Result<()> {
    if mode != p.mode {
        return Err(Error::WrongMode { expected: p.mode.name() });
    }
    p.grid().same_as(grid)
}

/// Flux field entering the `T` column: `μ X` (reeb) or `μ Y` (vorticity-pair).
fn t_flux(p: &FeasibilityProblem) -> Option<Vec<[f64; 3]>> {
    let f = match p.mode {
        Mode::Reeb => &p.x,
        Mode::VorticityPair => p.y.as_ref()?,
        _ => return None,
    };
    Some(f.values().iter().zip(p.mu.values()).map(|(v, m)| math::scale(*m, *v)).collect())
}

/// The equality residual of `(α, B, T)` computed with DEC operators only.
pub fn equality_residual(
    p: &FeasibilityProblem,
    alpha: &OneForm,
    b: Option<&ScalarField0>,
    t: Option<f64>,
) -> Result<Vec<[f64; 3]>> {
    p.grid().same_as(alpha.grid())?;
    let da = dec::d1(alpha);
    Ok(match p.mode {
        Mode::Adapted | Mode::Geodesible => {
            let mut r = dec::contract2(&da, &p.x)?.into_values();
            if p.mode == Mode::Adapted {
                if let Some(b) = b {
                    for (ri, gi) in r.iter_mut().zip(dec::d0(b).values()) {
                        *ri = math::add(*ri, *gi);
                    }
                }
            }
            r
        }
        Mode::Reeb | Mode::VorticityPair => {
            let t = t.unwrap_or(0.0);
            let f = t_flux(p).ok_or(Error::MissingY)?;
            da.values().iter().zip(&f).map(|(w, f)| math::sub(*w, math::scale(t, *f))).collect()
        }
    })
}

/// Re-check a primal certificate from scratch at the default dual tolerance.
pub fn verify_primal(c: &PrimalCertificate, p: &FeasibilityProblem) -> Result<PrimalResiduals> {
    verify_primal_with(c, p, DEFAULT_EPS_DUAL)
}

/// Re-check a primal certificate; `eps_dual` only sets the norm cap.
pub fn verify_primal_with(c: &PrimalCertificate, p: &FeasibilityProblem, eps_dual: f64) -> Result<PrimalResiduals> {
    check_shape(p, c.mode, c.alpha.grid())?;
    let ax = dec::contract1(&c.alpha, &p.x)?;
    let min_alpha_x = ax.min();
    let r = equality_residual(p, &c.alpha, c.b.as_ref(), c.t)?;
    let eq_sup = r.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let h3 = p.grid().cell_volume();
    let eq_l2 = math::sqrt(h3 * r.iter().map(|v| math::dot(*v, *v)).sum::<f64>());
    let mut l1_norm: f64 = c.alpha.values().iter().flatten().map(|v| v.abs()).sum();
    if let Some(b) = &c.b {
        l1_norm += b.values().iter().map(|v| v.abs()).sum::<f64>();
    }
    if let Some(t) = c.t {
        l1_norm += t.abs();
    }
    let finite = min_alpha_x.is_finite() && eq_sup.is_finite() && l1_norm.is_finite();
    let feasible = finite && min_alpha_x >= POSITIVITY_FLOOR - FLOOR_SLACK && eq_sup <= p.eta;
    let norm_cap = primal_norm_cap(eps_dual);
    Ok(PrimalResiduals { min_alpha_x, eq_sup, eq_l2, l1_norm, norm_cap, feasible, verified: feasible && l1_norm <= norm_cap })
}

/// The adjoint vector `A_inᵀμ + A_eqᵀλ`, split as `(α-part, B-part, T-part)`,
/// assembled from DEC operators (curl is self-adjoint and `−div` is the
/// adjoint of the central gradient on the periodic grid).
pub fn farkas_adjoint(
    p: &FeasibilityProblem,
    weights: &ScalarField0,
    multipliers: &VectorField,
) -> Result<(Vec<[f64; 3]>, Option<Vec<f64>>, Option<f64>)> {
    p.grid().same_as(weights.grid())?;
    p.grid().same_as(multipliers.grid())?;
    let wx: Vec<[f64; 3]> = p.x.values().iter().zip(weights.values()).map(|(x, w)| math::scale(*w, *x)).collect();
    let lam = multipliers.values();
    let (alpha_part, b_part, t_part) = match p.mode {
        Mode::Adapted | Mode::Geodesible => {
            let xl: Vec<[f64; 3]> = p.x.values().iter().zip(lam).map(|(x, l)| math::cross(*x, *l)).collect();
            let c = dec::curl_field(&VectorField::new(*p.grid(), xl)?);
            let a = c.values().iter().zip(&wx).map(|(c, w)| math::add(*c, *w)).collect();
            let b = if p.mode == Mode::Adapted {
                Some(dec::div(multipliers).values().iter().map(|v| -v).collect())
            } else {
                None
            };
            (a, b, None)
        }
        Mode::Reeb | Mode::VorticityPair => {
            let c = dec::curl_field(multipliers);
            let a = c.values().iter().zip(&wx).map(|(c, w)| math::add(*c, *w)).collect();
            let f = t_flux(p).ok_or(Error::MissingY)?;
            let t = -f.iter().zip(lam).map(|(f, l)| math::dot(*f, *l)).sum::<f64>();
            (a, None, Some(t))
        }
    };
    Ok((alpha_part, b_part, t_part))
}

/// Pairings `⟨Σ μ_p δ_p^{X(p)}, d0 e_q⟩ = −div(μX)(q)` for every grid bump `e_q`.
pub fn cycle_pairings(x: &VectorField, weights: &ScalarField0) -> Result<ScalarField0> {
    x.grid().same_as(weights.grid())?;
    let wx = x.values().iter().zip(weights.values()).map(|(x, w)| math::scale(*w, *x)).collect();
    Ok(dec::div(&VectorField::new(*x.grid(), wx)?).scaled(-1.0))
}

/// Farkas check of `(μ, λ)` against explicit constraint matrices: the same
/// conditions as [`verify_dual`] minus the cycle test, for systems that do
/// not come from a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarkasReport {
    pub adjoint_sup: f64,
    pub weight_sum: f64,
    pub min_weight: f64,
    pub eta_multiplier_l1: f64,
    pub verified: bool,
}

pub fn verify_farkas(a_in: &Csr, a_eq: &Csr, weights: &[f64], multipliers: &[f64], eta: f64, eps_dual: f64) -> Result<FarkasReport> {
    if a_in.ncols != a_eq.ncols || weights.len() != a_in.nrows || multipliers.len() != a_eq.nrows {
        return Err(Error::InvalidArgument("Farkas data has inconsistent shapes".into()));
    }
    let mut r = alloc::vec![0.0; a_in.ncols];
    a_in.mul_t_add(1.0, weights, &mut r);
    a_eq.mul_t_add(1.0, multipliers, &mut r);
    let adjoint_sup = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let weight_sum: f64 = weights.iter().sum();
    let min_weight = weights.iter().copied().fold(f64::INFINITY, f64::min);
    let eta_multiplier_l1 = eta * multipliers.iter().map(|v| v.abs()).sum::<f64>();
    let verified = adjoint_sup.is_finite()
        && adjoint_sup <= eps_dual
        && min_weight >= 0.0
        && (weight_sum - 1.0).abs() <= 1e-12
        && eta_multiplier_l1 <= 0.5;
    Ok(FarkasReport { adjoint_sup, weight_sum, min_weight, eta_multiplier_l1, verified })
}

/// Re-check a dual certificate from scratch.
pub fn verify_dual(c: &DualCertificate, p: &FeasibilityProblem, eps_dual: f64, eps_cycle: f64) -> Result<DualResiduals> {
    check_shape(p, c.mode, c.weights.grid())?;
    let (a, b, t) = farkas_adjoint(p, &c.weights, &c.multipliers)?;
    let adjoint_alpha_sup = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let adjoint_b_sup = b.as_ref().map_or(0.0, |b| b.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    let adjoint_t = t.unwrap_or(0.0);
    let adjoint_sup = adjoint_alpha_sup.max(adjoint_b_sup).max(adjoint_t.abs());
    let cycle_sup = cycle_pairings(&p.x, &c.weights)?.sup_norm();
    let weight_sum: f64 = c.weights.values().iter().sum();
    let min_weight = c.weights.min();
    let eta_multiplier_l1 = p.eta * c.multipliers.values().iter().flatten().map(|v| v.abs()).sum::<f64>();
    let current_mass: f64 = c.weights.values().iter().zip(p.x.values()).map(|(w, x)| w.abs() * math::norm(*x)).sum();
    let verified = adjoint_sup.is_finite()
        && adjoint_sup <= eps_dual
        && cycle_sup <= eps_cycle
        && min_weight >= 0.0
        && (weight_sum - 1.0).abs() <= 1e-12
        && eta_multiplier_l1 <= 0.5;
    Ok(DualResiduals {
        adjoint_sup,
        adjoint_alpha_sup,
        adjoint_b_sup,
        adjoint_t,
        cycle_sup,
        weight_sum,
        min_weight,
        eta_multiplier_l1,
        current_mass,
        eps_dual,
        eps_cycle,
        verified,
    })
}
