//! Dense-arithmetic feasibility oracle and random small instances.
//!
//! The oracle rebuilds every constraint column from the DEC operators applied
//! to unit vectors (never touching the solver's sparse assembly) and decides
//! `A_in u ≥ 1, |A_eq u| ≤ η` with a phase-1 dense simplex.

#![allow(dead_code)]

use eulerize_core::certifier::{FeasibilityProblem, Mode};
use eulerize_core::dec;
use eulerize_core::fields::{OneForm, ScalarField0, VectorField};
use eulerize_core::Grid3;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const PIVOT_TOL: f64 = 1e-9;

/// Dense rows `(A_in, A_eq)` over the unknowns `(α, B, T)`.
pub struct DenseSystem {
    pub n_unknowns: usize,
    pub a_in: Vec<Vec<f64>>,
    pub a_eq: Vec<Vec<f64>>,
    pub eta: f64,
}

/// Residual vector `(i_X dα + dB)` or `(dα − T i_F μ)` of one unknown vector.
fn residual(p: &FeasibilityProblem, u: &[f64]) -> Vec<f64> {
    let g = *p.x.grid();
    let n = g.len();
    let alpha = OneForm::new(g, (0..n).map(|q| [u[3 * q], u[3 * q + 1], u[3 * q + 2]]).collect()).unwrap();
    let da = dec::d1(&alpha);
    let r: Vec<[f64; 3]> = match p.mode {
        Mode::Adapted | Mode::Geodesible => {
            let mut r = dec::contract2(&da, &p.x).unwrap().into_values();
            if p.mode == Mode::Adapted {
                let b = ScalarField0::new(g, u[3 * n..4 * n].to_vec()).unwrap();
                for (ri, gi) in r.iter_mut().zip(dec::d0(&b).values()) {
                    for c in 0..3 {
                        ri[c] += gi[c];
                    }
                }
            }
            r
        }
        Mode::Reeb | Mode::VorticityPair => {
            let f = if p.mode == Mode::Reeb { &p.x } else { p.y.as_ref().unwrap() };
            let t = u[3 * n];
            let flux = f.flux_form(&p.mu).unwrap();
            da.values().iter().zip(flux.values()).map(|(w, f)| [0, 1, 2].map(|c| w[c] - t * f[c])).collect()
        }
    };
    r.into_iter().flatten().collect()
}

pub fn dense_system(p: &FeasibilityProblem) -> DenseSystem {
    let g = *p.x.grid();
    let n = g.len();
    let nu = 3 * n + if p.mode == Mode::Adapted { n } else { 0 } + usize::from(matches!(p.mode, Mode::Reeb | Mode::VorticityPair));
    let mut a_eq = vec![vec![0.0; nu]; 3 * n];
    let mut e = vec![0.0; nu];
    for k in 0..nu {
        e[k] = 1.0;
        for (row, v) in a_eq.iter_mut().zip(residual(p, &e)) {
            row[k] = v;
        }
        e[k] = 0.0;
    }
    let a_in = (0..n)
        .map(|q| {
            let mut row = vec![0.0; nu];
            row[3 * q..3 * q + 3].copy_from_slice(&p.x.get(q));
            row
        })
        .collect();
    DenseSystem { n_unknowns: nu, a_in, a_eq, eta: p.eta }
}

#[derive(Debug, Clone)]
pub struct OracleVerdict {
    pub feasible: bool,
    /// Optimal phase-1 objective (sum of artificials).
    pub infeasibility: f64,
    pub pivots: usize,
    /// Feasible side: the recovered point and its checked residuals.
    pub point: Option<Vec<f64>>,
    pub min_in: f64,
    pub eq_sup: f64,
}

/// Phase-1 simplex on `A_in u − s + a = 1`, `±A_eq u + w± = η`, `u = u⁺ − u⁻`.
pub fn decide(sys: &DenseSystem) -> OracleVerdict {
    let nu = sys.n_unknowns;
    let (mi, me) = (sys.a_in.len(), sys.a_eq.len());
    let m = mi + 2 * me;
    let c_surplus = 2 * nu;
    let c_slack = c_surplus + mi;
    let c_art = c_slack + 2 * me;
    let ncols = c_art + mi;
    let w = ncols + 1;
    let mut t = vec![0.0; m * w];
    let mut basis = vec![0usize; m];
    for i in 0..mi {
        let r = &mut t[i * w..(i + 1) * w];
        for k in 0..nu {
            r[k] = sys.a_in[i][k];
            r[nu + k] = -sys.a_in[i][k];
        }
        r[c_surplus + i] = -1.0;
        r[c_art + i] = 1.0;
        r[ncols] = 1.0;
        basis[i] = c_art + i;
    }
    for (e, s) in [(0usize, 1.0), (1, -1.0)] {
        for j in 0..me {
            let i = mi + e * me + j;
            let r = &mut t[i * w..(i + 1) * w];
            for k in 0..nu {
                r[k] = s * sys.a_eq[j][k];
                r[nu + k] = -s * sys.a_eq[j][k];
            }
            r[c_slack + e * me + j] = 1.0;
            r[ncols] = sys.eta;
            basis[i] = c_slack + e * me + j;
        }
    }
    // reduced costs of min Σ a; the last entry holds −objective
    let mut z = vec![0.0; w];
    for j in c_art..ncols {
        z[j] = 1.0;
    }
    for i in 0..mi {
        for j in 0..w {
            z[j] -= t[i * w + j];
        }
    }
    let mut pivots = 0;
    let mut degenerate = 0;
    loop {
        let bland = degenerate > 50;
        let mut enter = None;
        let mut best = -PIVOT_TOL;
        for (j, &zj) in z.iter().enumerate().take(ncols) {
            if zj < best {
                enter = Some(j);
                if bland {
                    break;
                }
                best = zj;
            }
        }
        let Some(j) = enter else { break };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let a = t[i * w + j];
            if a > PIVOT_TOL {
                let ratio = t[i * w + ncols] / a;
                match leave {
                    Some((l, r)) if ratio > r + 1e-14 || (ratio >= r - 1e-14 && basis[i] >= basis[l]) => {}
                    _ => leave = Some((i, ratio)),
                }
            }
        }
        // the phase-1 objective is bounded below by zero
        let (l, ratio) = leave.expect("bounded phase-1 problem");
        degenerate = if ratio <= 1e-14 { degenerate + 1 } else { 0 };
        let piv = t[l * w + j];
        for v in &mut t[l * w..(l + 1) * w] {
            *v /= piv;
        }
        let prow = t[l * w..(l + 1) * w].to_vec();
        for i in 0..m {
            if i != l {
                let f = t[i * w + j];
                if f != 0.0 {
                    for (v, p) in t[i * w..(i + 1) * w].iter_mut().zip(&prow) {
                        *v -= f * p;
                    }
                }
            }
        }
        let f = z[j];
        for (v, p) in z.iter_mut().zip(&prow) {
            *v -= f * p;
        }
        basis[l] = j;
        pivots += 1;
        assert!(pivots < 200_000, "simplex did not terminate");
    }
    let infeasibility = -z[ncols];
    let mut x = vec![0.0; ncols];
    for i in 0..m {
        x[basis[i]] = t[i * w + ncols];
    }
    let u: Vec<f64> = (0..nu).map(|k| x[k] - x[nu + k]).collect();
    let dot = |row: &[f64]| row.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>();
    let min_in = sys.a_in.iter().map(|r| dot(r)).fold(f64::INFINITY, f64::min);
    let eq_sup = sys.a_eq.iter().map(|r| dot(r).abs()).fold(0.0, f64::max);
    let feasible = infeasibility <= 1e-9 * mi as f64;
    OracleVerdict { feasible, infeasibility, pivots, point: feasible.then_some(u), min_in, eq_sup }
}

/// Smooth random field: a few low Fourier modes plus a mean drift.
pub fn random_field(grid: Grid3, rng: &mut ChaCha8Rng, mean: [f64; 3], amplitude: f64) -> VectorField {
    let modes: Vec<([f64; 3], [f64; 3], f64)> = (0..4)
        .map(|_| {
            let k = [0, 1, 2].map(|_| rng.gen_range(-1i32..=1) as f64);
            let a = [0, 1, 2].map(|_| rng.gen_range(-1.0..1.0) * amplitude);
            (k, a, rng.gen_range(0.0..std::f64::consts::TAU))
        })
        .collect();
    VectorField::from_fn(grid, |x| {
        let mut v = mean;
        for (k, a, ph) in &modes {
            let s = (k[0] * x[0] + k[1] * x[1] + k[2] * x[2] + ph).sin();
            for c in 0..3 {
                v[c] += a[c] * s;
            }
        }
        v
    })
}

/// `X = s(p) e_z` with `s` the sign of `(−1)^k c(i + w j)`, `c = (1, 0, −1, 0)`,
/// on the 4³ grid; free signs where `c` vanishes. The weights `|ν|` are a
/// Farkas witness against every closed-type system, since `ν` lives in the
/// kernel modes of the central difference along `z`.
pub fn sign_pattern(grid: Grid3, rng: &mut ChaCha8Rng, w: usize, eps: f64) -> VectorField {
    let vals = (0..grid.len())
        .map(|p| {
            let (i, j, k) = grid.coords(p);
            let nu = if k % 2 == 0 { 1.0 } else { -1.0 } * [1.0, 0.0, -1.0, 0.0][(i + w * j) % 4];
            let s = if nu != 0.0 { nu } else if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let mut v = [0, 1, 2].map(|_| eps * rng.gen_range(-1.0..1.0));
            v[2] += s;
            v
        })
        .collect();
    VectorField::new(grid, vals).unwrap()
}

/// Randomised 4³ instance `(X, Y)`: sign patterns, perturbed sign patterns
/// and smooth fields in rotation, with `Y` either `curl X` or independent.
pub fn random_instance(grid: Grid3, rng: &mut ChaCha8Rng, index: usize) -> (VectorField, VectorField) {
    let x = match index % 3 {
        0 => {
            let w = [0, 1, 3][rng.gen_range(0..3)];
            sign_pattern(grid, rng, w, 0.0)
        }
        1 => {
            let (w, eps) = (rng.gen_range(0..4), rng.gen_range(0.1..0.5));
            sign_pattern(grid, rng, w, eps)
        }
        _ => {
            let mean = [0, 1, 2].map(|_| rng.gen_range(-0.5..0.5));
            loop {
                let x = random_field(grid, rng, mean, 1.0);
                if x.min_norm().0 > 0.05 {
                    break x;
                }
            }
        }
    };
    let curl = dec::curl_field(&x);
    let y = if rng.gen_bool(0.5) && curl.sup_norm() > 1e-12 { curl } else { random_field(grid, rng, [0.0; 3], 1.0) };
    (x, y)
}

/// Band-limited random 1-form: `modes` plane waves with wavenumbers `≤ kmax`.
pub fn random_one_form(grid: Grid3, rng: &mut ChaCha8Rng, kmax: i32, modes: usize) -> OneForm {
    let waves: Vec<([f64; 3], [f64; 3], f64)> = (0..modes)
        .map(|_| {
            let k = [0, 1, 2].map(|_| rng.gen_range(-kmax..=kmax) as f64);
            let a = [0, 1, 2].map(|_| rng.gen_range(-1.0..1.0));
            (k, a, rng.gen_range(0.0..std::f64::consts::TAU))
        })
        .collect();
    OneForm::from_fn(grid, |x| {
        let mut v = [0.0; 3];
        for (k, a, ph) in &waves {
            let s = (k[0] * x[0] + k[1] * x[1] + k[2] * x[2] + ph).sin();
            for c in 0..3 {
                v[c] += a[c] * s;
            }
        }
        v
    })
}

/// Random lattice staircase chain: `u` steps in a random coordinate plane,
/// `v` straight along the remaining axis.
pub fn random_lattice_chain(grid: Grid3, rng: &mut ChaCha8Rng) -> eulerize_core::currents::SurfaceChain2 {
    let v_axis = rng.gen_range(0..3);
    let plane = [(v_axis + 1) % 3, (v_axis + 2) % 3];
    let steps: Vec<usize> = (0..rng.gen_range(2..24)).map(|_| plane[rng.gen_range(0..2)]).collect();
    let corner = [0, 1, 2].map(|_| rng.gen_range(0..grid.n()));
    eulerize_core::currents::SurfaceChain2::lattice(&grid, corner, &steps, v_axis, rng.gen_range(3..24)).unwrap()
}
