use serde::{Deserialize, Serialize};

use crate::math::{self, TAU};
use crate::{Error, Result};

/// Periodic uniform grid on the torus `[0, L)³` with `n` points per axis.
///
/// Point `(i, j, k)` sits at `((i + offset) h, (j + offset) h, (k + offset) h)`.
/// `offset = 0` puts samples on the lattice vertices, `offset = 0.5` on cell
/// centres. Flat indices are `k`-fastest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid3 {
    n: usize,
    length: f64,
    #[serde(default)]
    offset: f64,
}

impl Grid3 {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        Self::with_offset(n, length, 0.0)
    }

    /// Grid on the default period `2π`.
    pub fn periodic(n: usize) -> Result<Self> {
        Self::new(n, TAU)
    }

    pub fn with_offset(n: usize, length: f64, offset: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidGrid(alloc::format!("n = {n} must be at least 3")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(alloc::format!("L = {length} must be positive")));
        }
        if !(0.0..1.0).contains(&offset) {
            return Err(Error::InvalidGrid(alloc::format!("offset {offset} outside [0, 1)")));
        }
        Ok(Self { n, length, offset })
    }

    /// Cell-centred grid on `[0, 2π)³`.
    pub fn cell_centred(n: usize) -> Result<Self> {
        Self::with_offset(n, TAU, 0.5)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }
    #[inline]
    pub fn length(&self) -> f64 {
        self.length
    }
    #[inline]
    pub fn offset(&self) -> f64 {
        self.offset
    }
    #[inline]
    pub fn h(&self) -> f64 {
        self.length / self.n as f64
    }
    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }
    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        let h = self.h();
        h * h * h
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    #[inline]
    pub fn coords(&self, p: usize) -> (usize, usize, usize) {
        let n = self.n;
        (p / (n * n), (p / n) % n, p % n)
    }

    /// Index of the neighbour `p + s e_axis` with periodic wrap, `s ∈ {-1, 1}`.
    #[inline]
    pub fn shift(&self, p: usize, axis: usize, forward: bool) -> usize {
        let n = self.n;
        let stride = match axis {
            0 => n * n,
            1 => n,
            _ => 1,
        };
        let c = (p / stride) % n;
        if forward {
            if c + 1 == n {
                p + stride - n * stride
            } else {
                p + stride
            }
        } else if c == 0 {
            p + (n - 1) * stride
        } else {
            p - stride
        }
    }

    /// Physical position of grid point `p`.
    #[inline]
    pub fn point(&self, p: usize) -> [f64; 3] {
        let (i, j, k) = self.coords(p);
        let h = self.h();
        [
            (i as f64 + self.offset) * h,
            (j as f64 + self.offset) * h,
            (k as f64 + self.offset) * h,
        ]
    }

    /// Wrap a position into the fundamental domain `[0, L)³`.
    pub fn wrap(&self, x: [f64; 3]) -> [f64; 3] {
        [
            math::wrap(x[0], self.length),
            math::wrap(x[1], self.length),
            math::wrap(x[2], self.length),
        ]
    }

    /// Minimal-image displacement `b - a` on the torus.
    pub fn displacement(&self, a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
        let l = self.length;
        let mut d = [0.0; 3];
        for c in 0..3 {
            let mut v = math::wrap(b[c] - a[c], l);
            if v >= 0.5 * l {
                v -= l;
            }
            d[c] = v;
        }
        d
    }

    pub fn same_as(&self, other: &Grid3) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}
