//! Sampled fields and differential forms on a [`Grid3`].
//!
//! 2-forms are stored through the Euclidean identification `ω = i_W μ₀`, and
//! 3-forms as the coefficient against `μ₀`.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::grid::Grid3;
use crate::math;
use crate::{Error, Result};

fn check_len(grid: &Grid3, len: usize) -> Result<()> {
    if len == grid.len() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(alloc::format!(
            "field has {len} points, grid has {}",
            grid.len()
        )))
    }
}

macro_rules! scalar_field {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        pub struct $name {
            grid: Grid3,
            values: Vec<f64>,
        }

        impl $name {
            pub fn new(grid: Grid3, values: Vec<f64>) -> Result<Self> {
                check_len(&grid, values.len())?;
                if let Some(p) = values.iter().position(|v| !v.is_finite()) {
                    return Err(Error::InvalidArgument(alloc::format!("non-finite value at point {p}")));
                }
                Ok(Self { grid, values })
            }
            pub fn zeros(grid: Grid3) -> Self {
                Self { grid, values: alloc::vec![0.0; grid.len()] }
            }
            pub fn constant(grid: Grid3, c: f64) -> Self {
                Self { grid, values: alloc::vec![c; grid.len()] }
            }
            pub fn from_fn(grid: Grid3, mut f: impl FnMut([f64; 3]) -> f64) -> Self {
                let values = (0..grid.len()).map(|p| f(grid.point(p))).collect();
                Self { grid, values }
            }
            #[inline]
            pub fn grid(&self) -> &Grid3 {
                &self.grid
            }
            #[inline]
            pub fn values(&self) -> &[f64] {
                &self.values
            }
            #[inline]
            pub fn values_mut(&mut self) -> &mut [f64] {
                &mut self.values
            }
            pub fn into_values(self) -> Vec<f64> {
                self.values
            }
            #[inline]
            pub fn get(&self, p: usize) -> f64 {
                self.values[p]
            }
            pub fn sup_norm(&self) -> f64 {
                self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
            }
            /// Grid L² norm `sqrt(h³ Σ v²)`.
            pub fn l2_norm(&self) -> f64 {
                let s: f64 = self.values.iter().map(|v| v * v).sum();
                math::sqrt(s * self.grid.cell_volume())
            }
            pub fn min(&self) -> f64 {
                self.values.iter().copied().fold(f64::INFINITY, f64::min)
            }
            pub fn max(&self) -> f64 {
                self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            }
            pub fn scaled(&self, s: f64) -> Self {
                Self { grid: self.grid, values: self.values.iter().map(|v| s * v).collect() }
            }
            /// `self + s·other`.
            pub fn axpy(&self, s: f64, other: &Self) -> Result<Self> {
                self.grid.same_as(&other.grid)?;
                let values = self.values.iter().zip(&other.values).map(|(a, b)| a + s * b).collect();
                Ok(Self { grid: self.grid, values })
            }
        }
    };
}

macro_rules! triple_field {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        pub struct $name {
            grid: Grid3,
            values: Vec<[f64; 3]>,
        }

        impl $name {
            pub fn new(grid: Grid3, values: Vec<[f64; 3]>) -> Result<Self> {
                check_len(&grid, values.len())?;
                if let Some(p) = values.iter().position(|v| !v.iter().all(|c| c.is_finite())) {
                    return Err(Error::InvalidArgument(alloc::format!("non-finite value at point {p}")));
                }
                Ok(Self { grid, values })
            }
            pub fn zeros(grid: Grid3) -> Self {
                Self { grid, values: alloc::vec![[0.0; 3]; grid.len()] }
            }
            pub fn constant(grid: Grid3, c: [f64; 3]) -> Self {
                Self { grid, values: alloc::vec![c; grid.len()] }
            }
            pub fn from_fn(grid: Grid3, mut f: impl FnMut([f64; 3]) -> [f64; 3]) -> Self {
                let values = (0..grid.len()).map(|p| f(grid.point(p))).collect();
                Self { grid, values }
            }
            #[inline]
            pub fn grid(&self) -> &Grid3 {
                &self.grid
            }
            #[inline]
            pub fn values(&self) -> &[[f64; 3]] {
                &self.values
            }
            #[inline]
            pub fn values_mut(&mut self) -> &mut [[f64; 3]] {
                &mut self.values
            }
            pub fn into_values(self) -> Vec<[f64; 3]> {
                self.values
            }
            #[inline]
            pub fn get(&self, p: usize) -> [f64; 3] {
                self.values[p]
            }
            /// Largest pointwise Euclidean norm.
            pub fn sup_norm(&self) -> f64 {
                self.values.iter().fold(0.0, |m, v| m.max(math::norm(*v)))
            }
            /// Largest absolute component.
            pub fn max_abs_component(&self) -> f64 {
                self.values.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
            }
            /// Grid L² norm `sqrt(h³ Σ |v|²)`.
            pub fn l2_norm(&self) -> f64 {
                let s: f64 = self.values.iter().map(|v| math::dot(*v, *v)).sum();
                math::sqrt(s * self.grid.cell_volume())
            }
            /// Smallest pointwise Euclidean norm and the point attaining it.
            pub fn min_norm(&self) -> (f64, usize) {
                self.values.iter().enumerate().fold((f64::INFINITY, 0), |(m, q), (p, v)| {
                    let r = math::norm(*v);
                    if r < m { (r, p) } else { (m, q) }
                })
            }
            pub fn scaled(&self, s: f64) -> Self {
                Self { grid: self.grid, values: self.values.iter().map(|v| math::scale(s, *v)).collect() }
            }
            /// `self + s·other`.
            pub fn axpy(&self, s: f64, other: &Self) -> Result<Self> {
                self.grid.same_as(&other.grid)?;
                let values = self
                    .values
                    .iter()
                    .zip(&other.values)
                    .map(|(a, b)| math::add(*a, math::scale(s, *b)))
                    .collect();
                Ok(Self { grid: self.grid, values })
            }
            /// One scalar component as a flat vector.
            pub fn component(&self, c: usize) -> Vec<f64> {
                self.values.iter().map(|v| v[c]).collect()
            }
        }
    };
}

scalar_field!(
    /// A 0-form: one real per grid point.
    ScalarField0
);
scalar_field!(
    /// A 3-form, stored as its coefficient against the standard volume form.
    ThreeForm
);
triple_field!(
    /// A vector field with Cartesian components.
    VectorField
);
triple_field!(
    /// A 1-form with Cartesian covector coefficients.
    OneForm
);
triple_field!(
    /// A 2-form `ω = i_W μ₀`, stored as the vector `W`.
    TwoForm
);

impl VectorField {
    /// Euclidean dual `X♭`.
    pub fn flat(&self) -> OneForm {
        OneForm { grid: self.grid, values: self.values.clone() }
    }

    /// The 2-form `i_X μ` for a volume coefficient `μ`.
    pub fn flux_form(&self, mu: &ThreeForm) -> Result<TwoForm> {
        self.grid.same_as(mu.grid())?;
        let values = self.values.iter().zip(mu.values()).map(|(v, m)| math::scale(*m, *v)).collect();
        Ok(TwoForm { grid: self.grid, values })
    }

    /// Fails with `vanishing-field` unless `min |X| > 0`.
    pub fn require_nonvanishing(&self) -> Result<f64> {
        let (m, p) = self.min_norm();
        if m > 0.0 {
            Ok(m)
        } else {
            Err(Error::VanishingField { index: p, norm: m })
        }
    }
}

impl OneForm {
    /// Euclidean sharp `α♯`.
    pub fn sharp(&self) -> VectorField {
        VectorField { grid: self.grid, values: self.values.clone() }
    }
}

impl TwoForm {
    /// The vector `W` with `ω = i_W μ₀`.
    pub fn as_vector(&self) -> VectorField {
        VectorField { grid: self.grid, values: self.values.clone() }
    }
}

impl ThreeForm {
    /// Fails unless every coefficient is strictly positive.
    pub fn require_volume(&self) -> Result<()> {
        match self.values.iter().position(|v| *v <= 0.0) {
            None => Ok(()),
            Some(p) => Err(Error::InvalidVolume { index: p, value: self.values[p] }),
        }
    }
}
