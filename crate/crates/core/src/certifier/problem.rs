use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use super::sparse::{Csr, CsrBuilder};
use crate::fields::{OneForm, ScalarField0, ThreeForm, VectorField};
use crate::grid::Grid3;
use crate::{Error, Result};

/// Normalisation of strict positivity: `α(X) ≥ 1` at every point.
pub const POSITIVITY_FLOOR: f64 = 1.0;

/// Which discretised condition to decide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// `i_X dα + dB = 0`.
    Adapted,
    /// `i_X dα = 0`.
    Geodesible,
    /// `dα = T i_X μ`.
    Reeb,
    /// `dα = T i_Y μ`.
    VorticityPair,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Adapted, Mode::Geodesible, Mode::Reeb, Mode::VorticityPair];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Adapted => "adapted",
            Mode::Geodesible => "geodesible",
            Mode::Reeb => "reeb",
            Mode::VorticityPair => "vorticity-pair",
        }
    }

    pub fn has_b(self) -> bool {
        self == Mode::Adapted
    }

    pub fn has_t(self) -> bool {
        matches!(self, Mode::Reeb | Mode::VorticityPair)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(alloc::format!("unknown mode '{s}'")))
    }
}

/// LP data for one certifier mode. Constraint matrices are rebuilt on demand
/// from the fields, so the problem serialises as plain data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeasibilityProblem {
    pub mode: Mode,
    pub x: VectorField,
    pub y: Option<VectorField>,
    pub mu: ThreeForm,
    pub eta: f64,
}

/// Build the feasibility problem for `mode`. `mu` defaults to the unit volume.
pub fn assemble(
    mode: Mode,
    x: &VectorField,
    y: Option<&VectorField>,
    mu: Option<&ThreeForm>,
    eta: f64,
) -> Result<FeasibilityProblem> {
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::InvalidArgument(alloc::format!("eta must be finite and >= 0, got {eta}")));
    }
    x.require_nonvanishing()?;
    let grid = *x.grid();
    let mu = match mu {
        Some(m) => {
            grid.same_as(m.grid())?;
            m.require_volume()?;
            m.clone()
        }
        None => ThreeForm::constant(grid, 1.0),
    };
    let y = match mode {
        Mode::VorticityPair => {
            let y = y.ok_or(Error::MissingY)?;
            grid.same_as(y.grid())?;
            if y.sup_norm() == 0.0 {
                return Err(Error::ZeroY);
            }
            Some(y.clone())
        }
        _ => None,
    };
    Ok(FeasibilityProblem { mode, x: x.clone(), y, mu, eta })
}

impl FeasibilityProblem {
    pub fn grid(&self) -> &Grid3 {
        self.x.grid()
    }

    pub fn n_points(&self) -> usize {
        self.grid().len()
    }

    pub fn n_unknowns(&self) -> usize {
        let n = self.n_points();
        3 * n + if self.mode.has_b() { n } else { 0 } + usize::from(self.mode.has_t())
    }

    pub fn n_eq(&self) -> usize {
        3 * self.n_points()
    }

    pub fn n_in(&self) -> usize {
        self.n_points()
    }

    /// True when the equality tolerance is below the `h²` truncation scale,
    /// i.e. smaller than the consistency error of the stencils.
    pub fn eta_below_truncation(&self) -> bool {
        let h = self.grid().h();
        self.eta < h * h
    }

    /// The field whose flux form enters the `T` column.
    fn t_field(&self) -> Option<&VectorField> {
        match self.mode {
            Mode::Reeb => Some(&self.x),
            Mode::VorticityPair => self.y.as_ref(),
            _ => None,
        }
    }

    /// Inequality rows `α(X)(p)`, one per point.
    pub fn a_in(&self) -> Csr {
        let mut b = CsrBuilder::new(self.n_unknowns());
        for (p, xv) in self.x.values().iter().enumerate() {
            for (c, v) in xv.iter().enumerate() {
                b.push(3 * p + c, *v);
            }
            b.finish_row();
        }
        b.build()
    }

    /// Equality rows, three per point (row `3p + c`).
    pub fn a_eq(&self) -> Csr {
        let g = *self.grid();
        let n = g.len();
        let s = 0.5 / g.h();
        let mut b = CsrBuilder::new(self.n_unknowns());
        // coeff · (curl α)_k at point p
        let curl = |b: &mut CsrBuilder, p: usize, k: usize, coeff: f64| {
            let (l, m) = ((k + 1) % 3, (k + 2) % 3);
            b.push(3 * g.shift(p, l, true) + m, coeff * s);
            b.push(3 * g.shift(p, l, false) + m, -coeff * s);
            b.push(3 * g.shift(p, m, true) + l, -coeff * s);
            b.push(3 * g.shift(p, m, false) + l, coeff * s);
        };
        for p in 0..n {
            let xv = self.x.get(p);
            for c in 0..3 {
                match self.mode {
                    Mode::Adapted | Mode::Geodesible => {
                        // (W × X)_c = W_{c+1} X_{c+2} − W_{c+2} X_{c+1}
                        let (c1, c2) = ((c + 1) % 3, (c + 2) % 3);
                        curl(&mut b, p, c1, xv[c2]);
                        curl(&mut b, p, c2, -xv[c1]);
                        if self.mode == Mode::Adapted {
                            b.push(3 * n + g.shift(p, c, true), s);
                            b.push(3 * n + g.shift(p, c, false), -s);
                        }
                    }
                    Mode::Reeb | Mode::VorticityPair => {
                        curl(&mut b, p, c, 1.0);
                        let f = self.t_field().expect("T field").get(p);
                        b.push(3 * n, -self.mu.get(p) * f[c]);
                    }
                }
                b.finish_row();
            }
        }
        b.build()
    }

    /// Split a flat unknown vector into `(α, B, T)`.
    pub fn unpack(&self, u: &[f64]) -> Result<(OneForm, Option<ScalarField0>, Option<f64>)> {
        if u.len() != self.n_unknowns() {
            return Err(Error::InvalidArgument(alloc::format!(
                "unknown vector has length {}, expected {}",
                u.len(),
                self.n_unknowns()
            )));
        }
        let g = *self.grid();
        let n = g.len();
        let alpha = OneForm::new(g, (0..n).map(|p| [u[3 * p], u[3 * p + 1], u[3 * p + 2]]).collect())?;
        let b = if self.mode.has_b() { Some(ScalarField0::new(g, u[3 * n..4 * n].to_vec())?) } else { None };
        let t = if self.mode.has_t() { Some(u[3 * n]) } else { None };
        Ok((alpha, b, t))
    }

    /// Inverse of [`FeasibilityProblem::unpack`]; missing `B`/`T` read as zero.
    pub fn pack(&self, alpha: &OneForm, b: Option<&ScalarField0>, t: Option<f64>) -> Vec<f64> {
        let mut u: Vec<f64> = alpha.values().iter().flatten().copied().collect();
        if self.mode.has_b() {
            match b {
                Some(b) => u.extend_from_slice(b.values()),
                None => u.extend(core::iter::repeat(0.0).take(self.n_points())),
            }
        }
        if self.mode.has_t() {
            u.push(t.unwrap_or(0.0));
        }
        u
    }

    pub fn describe(&self) -> String {
        alloc::format!(
            "{} mode, n = {}, {} unknowns, {} equality rows, {} inequality rows, eta = {:e}",
            self.mode,
            self.grid().n(),
            self.n_unknowns(),
            self.n_eq(),
            self.n_in(),
            self.eta
        )
    }
}
