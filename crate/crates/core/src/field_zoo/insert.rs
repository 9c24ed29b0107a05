use serde::{Deserialize, Serialize};

use super::plug::PlugField;
use crate::fields::VectorField;
use crate::math;
use crate::{Error, Result};

/// Isometric placement of a plug box in the torus: plug coordinates `y` map
/// to `center + R y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub center: [f64; 3],
    pub rotation: [[f64; 3]; 3],
}

const IDENTITY: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

impl Placement {
    pub fn new(center: [f64; 3], rotation: [[f64; 3]; 3]) -> Result<Self> {
        for i in 0..3 {
            for j in 0..3 {
                let d: f64 = (0..3).map(|k| rotation[k][i] * rotation[k][j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                if (d - want).abs() > 1e-12 {
                    return Err(Error::InvalidArgument("placement rotation is not orthogonal".into()));
                }
            }
        }
        let det = math::dot(rotation[0], math::cross(rotation[1], rotation[2]));
        if det < 0.0 {
            return Err(Error::InvalidArgument("placement rotation must preserve orientation".into()));
        }
        Ok(Self { center, rotation })
    }

    /// Axis-aligned placement at `center`.
    pub fn at(center: [f64; 3]) -> Self {
        Self { center, rotation: IDENTITY }
    }

    /// Axis-aligned placement at the centre of `[0, L)³`.
    pub fn centered(length: f64) -> Self {
        Self::at([0.5 * length; 3])
    }

    fn apply(&self, v: [f64; 3]) -> [f64; 3] {
        [0, 1, 2].map(|i| math::dot(self.rotation[i], v))
    }

    fn apply_transpose(&self, v: [f64; 3]) -> [f64; 3] {
        [0, 1, 2].map(|i| (0..3).map(|k| self.rotation[k][i] * v[k]).sum())
    }

    /// Torus direction of the plug's vertical axis.
    pub fn axis(&self) -> [f64; 3] {
        self.apply([0.0, 0.0, 1.0])
    }
}

/// Replaces the ambient field inside the placement box by the plug field.
///
/// The ambient must equal `s·R∂z` on the box for a constant speed `s > 0`;
/// the plug field is scaled by `s` so speeds match across the box boundary.
pub fn insert_plug(ambient: &VectorField, plug: &PlugField, placement: &Placement) -> Result<VectorField> {
    let grid = *ambient.grid();
    let h = grid.h();
    let spec = plug.spec();
    let (c_in, c_out, c_z) = plug.collar();
    let collar = c_in.min(c_out).min(c_z);
    if collar < 2.0 * h {
        return Err(Error::CollarTooThin { collar, required: 2.0 * h });
    }
    let l = grid.length();
    if 2.0 * spec.r_out >= l || 2.0 >= l {
        return Err(Error::PlacementTooLarge);
    }
    let axis = placement.axis();
    let mut speed: Option<f64> = None;
    let mut out = ambient.clone();
    for p in 0..grid.len() {
        let d = grid.displacement(placement.center, grid.point(p));
        let y = placement.apply_transpose(d);
        if y[0].abs() > spec.r_out || y[1].abs() > spec.r_out || y[2].abs() > 1.0 {
            continue;
        }
        let a = ambient.get(p);
        let s = *speed.get_or_insert(math::dot(a, axis));
        let deviation = math::norm(math::sub(a, math::scale(s, axis)));
        if s <= 0.0 || deviation > 1e-12 {
            return Err(Error::AmbientNotVerticalInBox { index: p, deviation: deviation.max(-s) });
        }
        out.values_mut()[p] = math::scale(s, placement.apply(plug.velocity_at(y)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dec;
    use crate::field_zoo::{PlugSpec, PlugField};
    use crate::grid::Grid3;

    fn thin_plug() -> PlugField {
        PlugField::unchecked(&PlugSpec { z_star: 0.45, delta_z: 0.15, ..PlugSpec::wilson() }).unwrap()
    }

    #[test]
    fn replacement_is_local() {
        let g = Grid3::cell_centred(32).unwrap();
        let amb = VectorField::constant(g, [0.0, 0.0, 1.0]);
        let pl = Placement::centered(g.length());
        let x = insert_plug(&amb, &thin_plug(), &pl).unwrap();
        let mut changed = 0;
        for p in 0..g.len() {
            let d = g.displacement(pl.center, g.point(p));
            let inside = d[0].abs() <= 3.0 && d[1].abs() <= 3.0 && d[2].abs() <= 1.0;
            if !inside {
                assert_eq!(x.get(p), [0.0, 0.0, 1.0]);
            } else if x.get(p) != [0.0, 0.0, 1.0] {
                changed += 1;
            }
        }
        assert!(changed > 100);
        assert!(x.require_nonvanishing().unwrap() > 0.0);
    }

    #[test]
    fn rejects_tilted_ambient_and_thin_collar() {
        let g = Grid3::cell_centred(32).unwrap();
        let amb = VectorField::constant(g, [1e-9, 0.0, 1.0]);
        let pl = Placement::centered(g.length());
        assert!(matches!(insert_plug(&amb, &thin_plug(), &pl), Err(Error::AmbientNotVerticalInBox { .. })));
        let amb = VectorField::constant(g, [0.0, 0.0, 1.0]);
        let default_plug = PlugField::unchecked(&PlugSpec::wilson()).unwrap();
        assert!(matches!(insert_plug(&amb, &default_plug, &pl), Err(Error::CollarTooThin { .. })));
    }

    #[test]
    fn stream_insertion_divergence() {
        let g = Grid3::cell_centred(32).unwrap();
        let spec = PlugSpec { z_star: 0.45, delta_z: 0.15, delta_r: 0.3, ..PlugSpec::stream() };
        let plug = PlugField::unchecked(&spec).unwrap();
        let amb = VectorField::constant(g, [0.0, 0.0, 1.0]);
        let pl = Placement::centered(g.length());
        let x = insert_plug(&amb, &plug, &pl).unwrap();
        let dv = dec::div(&x);
        let h = g.h();
        let (lo, hi) = plug.radial_support();
        let mut far: f64 = 0.0;
        let mut near: f64 = 0.0;
        for p in 0..g.len() {
            let d = g.displacement(pl.center, g.point(p));
            let r = math::hypot(d[0], d[1]);
            let touches = r > lo - 2.0 * h && r < hi + 2.0 * h && d[2].abs() < 1.0 - plug.collar().2 + 2.0 * h;
            if touches {
                near = near.max(dv.get(p).abs());
            } else {
                far = far.max(dv.get(p).abs());
            }
        }
        assert!(far <= 1e-8, "{far}");
        assert!(near > 0.0);
    }
}
