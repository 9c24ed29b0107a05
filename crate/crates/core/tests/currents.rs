mod common;

use common::*;
use eulerize_core::currents::*;
use eulerize_core::{dec, math, Error, Grid3, VectorField};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn current(raw: &[([f64; 3], [f64; 3], f64)]) -> DiscreteCurrent1 {
    let mut c = DiscreteCurrent1::new();
    for (p, v, w) in raw {
        c.push(*p, *v, *w);
    }
    c
}

fn dirac() -> impl Strategy<Value = ([f64; 3], [f64; 3], f64)> {
    let v3 = || prop::array::uniform3(-3.0f64..3.0);
    (v3(), v3(), 0.0f64..2.0)
}

proptest! {
    #[test]
    fn mass_is_subadditive(a in prop::collection::vec(dirac(), 0..12), b in prop::collection::vec(dirac(), 0..12)) {
        let (c1, c2) = (current(&a), current(&b));
        prop_assert!(c1.plus(&c2).mass() <= c1.mass() + c2.mass() + 1e-12);
    }

    #[test]
    fn evaluation_is_bounded_by_mass(a in prop::collection::vec(dirac(), 1..16), k in prop::array::uniform3(-2.0f64..2.0), ph in 0.0f64..6.3) {
        let c = current(&a);
        let w = Analytic(move |x: [f64; 3]| {
            let s = (k[0] * x[0] + k[1] * x[1] + k[2] * x[2] + ph).sin();
            [s, 0.6 * (x[2] + ph).cos(), 0.8 * s * s]
        });
        // |a(p)| ≤ √(1 + 0.36 + 0.64)
        prop_assert!(c.eval1(&w).abs() <= c.mass() * 2f64.sqrt() + 1e-12);
    }

    #[test]
    fn polyline_mass_is_its_length(v in prop::collection::vec(prop::array::uniform3(-2.0f64..2.0), 2..20)) {
        let p = PolylineCurrent1::new(v);
        prop_assert!((p.mass() - p.length()).abs() <= 1e-12 * (1.0 + p.length()));
        prop_assert!((p.reversed().length() - p.length()).abs() <= 1e-12 * (1.0 + p.length()));
    }
}

#[test]
fn foliation_flag_survives_rescaling_and_convex_combination() {
    let g = Grid3::cell_centred(6).unwrap();
    let x = VectorField::from_fn(g, |p| [p[1].sin(), 1.0, p[0].cos()]);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let w1: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(0.0..1.0)).collect();
    let w2: Vec<f64> = (0..g.len()).map(|_| if rng.gen_bool(0.3) { rng.gen_range(0.0..1.0) } else { 0.0 }).collect();
    let (c1, c2) = (DiscreteCurrent1::foliation(&x, &w1).unwrap(), DiscreteCurrent1::foliation(&x, &w2).unwrap());
    let field = |q: [f64; 3]| x.get(g.index(
        ((q[0] / g.h() - 0.5).round() as usize) % 6,
        ((q[1] / g.h() - 0.5).round() as usize) % 6,
        ((q[2] / g.h() - 0.5).round() as usize) % 6,
    ));
    assert!(c1.is_foliation(field, 1e-6) && c2.is_foliation(field, 1e-6));
    assert!(c1.scaled(3.5).is_foliation(field, 1e-6));
    assert!(c1.scaled(0.25).plus(&c2.scaled(0.75)).is_foliation(field, 1e-6));
    assert!(!c1.negated().is_foliation(field, 1e-6));
    let mass = c1.mass();
    assert!((c1.scaled(1.0 / mass).mass() - 1.0).abs() <= 1e-9);
}

#[test]
fn lattice_chains_satisfy_stokes_exactly() {
    let g = Grid3::periodic(32).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let a = random_one_form(g, &mut rng, 4, 4);
        let s = random_lattice_chain(g, &mut rng);
        let lhs = s.boundary().to_current().eval1(&a);
        let rhs = s.eval2(&dec::d1(&a));
        assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
    }
}

#[test]
fn lattice_chain_rejects_in_plane_v_axis() {
    let g = Grid3::periodic(8).unwrap();
    assert!(SurfaceChain2::lattice(&g, [0, 0, 0], &[0, 2], 2, 3).is_err());
    let s = SurfaceChain2::lattice(&g, [1, 2, 3], &[0, 0, 1], 2, 4).unwrap();
    assert_eq!(s.dims(), (4, 4));
    assert!((s.mass() - 9.0 * 4.0 * g.h() * g.h()).abs() < 1e-12);
}

#[test]
fn generic_chains_converge_at_second_order() {
    // off-lattice chains see the O(h²) symbol error of central differences;
    // the RMS over several cases keeps sign changes from masking the order
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let cases: Vec<(u64, SurfaceChain2)> = (0..8)
        .map(|i| {
            let o = [0, 1, 2].map(|_| rng.gen_range(0.5..5.5));
            let e1 = [0, 1, 2].map(|_| rng.gen_range(-1.0..1.0));
            let e2 = [0, 1, 2].map(|_| rng.gen_range(-1.0..1.0));
            (i, SurfaceChain2::parallelogram(o, e1, e2, 96))
        })
        .collect();
    let rms = |n: usize| {
        let g = Grid3::periodic(n).unwrap();
        let sq: f64 = cases
            .iter()
            .map(|(seed, s)| {
                let a = random_one_form(g, &mut ChaCha8Rng::seed_from_u64(*seed), 1, 3);
                (s.boundary().to_current().eval1(&a) - s.eval2(&dec::d1(&a))).powi(2)
            })
            .sum();
        (sq / cases.len() as f64).sqrt()
    };
    let (e32, e64, e128) = (rms(32), rms(64), rms(128));
    for (a, b) in [(e32, e64), (e64, e128)] {
        let order = (a / b).log2();
        assert!(order > 1.7 && order < 2.3, "order {order}: {e32:e} {e64:e} {e128:e}");
    }
}

#[test]
fn boundary_is_a_closed_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..10 {
        let (nu, nv) = (rng.gen_range(2..9), rng.gen_range(2..9));
        let v: Vec<[f64; 3]> = (0..nu * nv).map(|_| [0, 1, 2].map(|_| rng.gen_range(-1.0..1.0))).collect();
        let s = SurfaceChain2::new(nu, nv, v).unwrap();
        let b = s.boundary();
        assert_eq!(b.vertices.first(), b.vertices.last());
        let e = s.boundary_edges();
        let total = e.bottom.length() + e.right.length() + e.top.length() + e.left.length();
        assert!((b.length() - total).abs() <= 1e-12 * total);
    }
    assert!(SurfaceChain2::new(1, 4, vec![[0.0; 3]; 4]).is_err());
}

#[test]
fn flat_bound_examples() {
    let seg = |y: f64| PolylineCurrent1::new(vec![[0.0, y, 0.0], [1.0, y, 0.0]]).to_current();
    assert_eq!(flat_distance_bound(&seg(0.0), &seg(0.0), None).unwrap(), 0.0);
    let eps = 1e-3;
    // ∂(rectangle) = bottom + right − top − left; the sides are short
    let filler = SurfaceChain2::parallelogram([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, eps, 0.0], 1);
    let sides = PolylineCurrent1::new(vec![[1.0, 0.0, 0.0], [1.0, eps, 0.0]])
        .to_current()
        .minus(&PolylineCurrent1::new(vec![[0.0, 0.0, 0.0], [0.0, eps, 0.0]]).to_current());
    let c1 = seg(0.0).plus(&sides);
    let bound = flat_distance_bound(&c1, &seg(eps), Some(&filler)).unwrap();
    assert!(bound <= eps * (1.0 + 1e-12), "{bound}");
    assert!(flat_distance_bound(&seg(0.0), &seg(eps), None).unwrap() > 1.99);
    assert!(flat_decomposition_bound(&seg(0.0), &seg(eps), &filler) <= 3.0 * eps);
    assert!(matches!(flat_distance_bound(&seg(0.0), &seg(0.5), Some(&filler)), Err(Error::BoundaryMismatch { .. })));
}

#[test]
fn unit_circle_chord_length() {
    for m in [16usize, 64, 256] {
        let d = math::TAU / m as f64;
        let v: Vec<[f64; 3]> = (0..=m).map(|i| [(d * i as f64).cos(), (d * i as f64).sin(), 0.0]).collect();
        let p = PolylineCurrent1::new(v);
        assert!((p.mass() - math::TAU).abs() <= math::TAU * d * d / 24.0);
    }
}
