//! Compressed sparse rows, just enough for the solver.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone)]
pub struct Csr {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub data: Vec<f64>,
}

/// Row-by-row builder; entries of a row may repeat and are summed.
pub(crate) struct CsrBuilder {
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
    row: Vec<(usize, f64)>,
}

impl CsrBuilder {
    pub fn new(ncols: usize) -> Self {
        Self { ncols, indptr: vec![0], indices: Vec::new(), data: Vec::new(), row: Vec::new() }
    }

    pub fn push(&mut self, col: usize, v: f64) {
        if v != 0.0 {
            self.row.push((col, v));
        }
    }

    pub fn finish_row(&mut self) {
        self.row.sort_unstable_by_key(|e| e.0);
        let mut last = usize::MAX;
        for &(c, v) in &self.row {
            if c == last {
                *self.data.last_mut().expect("previous entry") += v;
            } else {
                self.indices.push(c);
                self.data.push(v);
                last = c;
            }
        }
        self.row.clear();
        self.indptr.push(self.indices.len());
    }

    pub fn build(self) -> Csr {
        Csr { nrows: self.indptr.len() - 1, ncols: self.ncols, indptr: self.indptr, indices: self.indices, data: self.data }
    }
}

impl Csr {
    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        self.indices[a..b].iter().copied().zip(self.data[a..b].iter().copied())
    }

    /// `y = A x`.
    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.nrows) {
            let (a, b) = (self.indptr[i], self.indptr[i + 1]);
            let mut s = 0.0;
            for k in a..b {
                s += self.data[k] * x[self.indices[k]];
            }
            *yi = s;
        }
    }

    /// `y += s Aᵀ x`.
    pub fn mul_t_add(&self, s: f64, x: &[f64], y: &mut [f64]) {
        for (i, &xi) in x.iter().enumerate().take(self.nrows) {
            if xi == 0.0 {
                continue;
            }
            let v = s * xi;
            for k in self.indptr[i]..self.indptr[i + 1] {
                y[self.indices[k]] += self.data[k] * v;
            }
        }
    }

    pub fn abs_row_sums(&self) -> Vec<f64> {
        (0..self.nrows).map(|i| self.row(i).map(|(_, v)| v.abs()).sum()).collect()
    }

    pub fn abs_col_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.ncols];
        for (c, v) in self.indices.iter().zip(&self.data) {
            s[*c] += v.abs();
        }
        s
    }

    pub fn max_row_nnz(&self) -> usize {
        (0..self.nrows).map(|i| self.indptr[i + 1] - self.indptr[i]).max().unwrap_or(0)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, row) in d.iter_mut().enumerate() {
            for (c, v) in self.row(i) {
                row[c] = v;
            }
        }
        d
    }
}

/// Least-squares `min ‖A x − b‖₂` by CGLS from `x = 0`; for consistent
/// systems this converges to the minimum-norm solution.
pub(crate) fn cgls<F, G>(apply: F, apply_t: G, b: &[f64], nx: usize, iterations: usize, rtol: f64) -> Vec<f64>
where
    F: Fn(&[f64], &mut [f64]),
    G: Fn(&[f64], &mut [f64]),
{
    let mut x = vec![0.0; nx];
    let mut r = b.to_vec();
    let mut s = vec![0.0; nx];
    apply_t(&r, &mut s);
    let mut p = s.clone();
    let mut gamma = dot(&s, &s);
    let stop = rtol * rtol * gamma;
    let mut q = vec![0.0; b.len()];
    for _ in 0..iterations {
        if gamma <= stop || gamma == 0.0 {
            break;
        }
        apply(&p, &mut q);
        let qq = dot(&q, &q);
        if qq == 0.0 {
            break;
        }
        let a = gamma / qq;
        for (xi, pi) in x.iter_mut().zip(&p) {
            *xi += a * pi;
        }
        for (ri, qi) in r.iter_mut().zip(&q) {
            *ri -= a * qi;
        }
        apply_t(&r, &mut s);
        let g = dot(&s, &s);
        let beta = g / gamma;
        gamma = g;
        for (pi, si) in p.iter_mut().zip(&s) {
            *pi = si + beta * *pi;
        }
    }
    x
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
