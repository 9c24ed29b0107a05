//! Test vector fields: ABC flows, Wilson-type plugs and plug insertion.

mod axioms;
mod insert;
mod plug;

pub use axioms::{check_plug_axioms, check_plug_axioms_with, entry_points, trace_entry, AxiomOptions, AxiomReport, EntryOutcome};
pub use insert::{insert_plug, Placement};
pub use plug::{gen_stream_plug, gen_stream_plug_with, gen_wilson_plug, gen_wilson_plug_with, PlugField, PlugSpec, PlugVariant, StreamTuning};

use crate::fields::VectorField;
use crate::grid::Grid3;
use crate::math::{cos, sin};

/// `X = (A sin z + C cos y, B sin x + A cos z, C sin y + B cos x)`.
pub fn gen_abc(a: f64, b: f64, c: f64, grid: Grid3) -> VectorField {
    VectorField::from_fn(grid, |p| abc_at(a, b, c, p))
}

#[inline]
pub fn abc_at(a: f64, b: f64, c: f64, p: [f64; 3]) -> [f64; 3] {
    let [x, y, z] = p;
    [a * sin(z) + c * cos(y), b * sin(x) + a * cos(z), c * sin(y) + b * cos(x)]
}

/// The constant field `v`.
pub fn gen_constant(v: [f64; 3], grid: Grid3) -> VectorField {
    VectorField::constant(grid, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dec;
    use crate::math;

    #[test]
    fn abc_examples() {
        let g = Grid3::periodic(16).unwrap();
        assert_eq!(gen_abc(0.0, 0.0, 0.0, g).sup_norm(), 0.0);
        let x = gen_abc(1.0, 0.0, 0.0, g);
        assert!(x.values().iter().all(|v| (math::norm(*v) - 1.0).abs() < 1e-15));
        let x = gen_abc(1.0, 1.0, 1.0, g);
        assert!(dec::div(&x).sup_norm() < 1e-14);
        let alpha = dec::contract1(&x.flat(), &x).unwrap();
        assert!((alpha.get(0) - 3.0).abs() < 1e-14);
    }
}
