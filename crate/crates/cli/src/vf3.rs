//! VF3 field files: a JSON manifest plus a raw little-endian `f64` payload.
//!
//! The payload lives next to the manifest (`field.vf3` → `field.bin`, or the
//! manifest's `payload` key). Values are point-major: all components of flat
//! point 0, then point 1, ..., with flat indices `k`-fastest.

use std::fs;
use std::path::{Path, PathBuf};

use eulerize_core::metric::MetricField;
use eulerize_core::{Grid3, OneForm, ScalarField0, ThreeForm, TwoForm, VectorField};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::io;

pub const ORDER: &str = "k-fastest";
pub const DTYPE: &str = "float64-little-endian";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Scalar,
    Vector,
    Oneform,
    Twoform,
    Threeform,
    /// Symmetric tensor `[xx, xy, xz, yy, yz, zz]`.
    Metric,
}

impl Kind {
    pub fn components(self) -> usize {
        match self {
            Kind::Scalar | Kind::Threeform => 1,
            Kind::Vector | Kind::Oneform | Kind::Twoform => 3,
            Kind::Metric => 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub n: usize,
    #[serde(rename = "L")]
    pub length: f64,
    pub kind: Kind,
    pub order: String,
    pub dtype: String,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub offset: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<String>,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

impl Manifest {
    pub fn new(grid: &Grid3, kind: Kind) -> Self {
        Self {
            n: grid.n(),
            length: grid.length(),
            kind,
            order: ORDER.into(),
            dtype: DTYPE.into(),
            offset: grid.offset(),
            payload: None,
        }
    }

    pub fn grid(&self) -> Result<Grid3> {
        Ok(Grid3::with_offset(self.n, self.length, self.offset)?)
    }

    fn payload_path(&self, manifest: &Path) -> PathBuf {
        match &self.payload {
            Some(p) => io::sibling(manifest, p),
            None => manifest.with_extension("bin"),
        }
    }
}

/// A decoded file: its manifest and the flat payload.
#[derive(Debug, Clone, PartialEq)]
pub struct Vf3 {
    pub manifest: Manifest,
    pub data: Vec<f64>,
}

pub fn write(path: &Path, grid: &Grid3, kind: Kind, data: &[f64]) -> Result<()> {
    let m = Manifest::new(grid, kind);
    let want = grid.len() * kind.components();
    if data.len() != want {
        return Err(CliError::Input(format!("{}: {} values for a {want}-value {kind:?} field", path.display(), data.len())));
    }
    let mut bytes = Vec::with_capacity(8 * data.len());
    for v in data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    io::write_atomic(&m.payload_path(path), &bytes)?;
    io::write_json(path, &m)
}

pub fn read(path: &Path) -> Result<Vf3> {
    let manifest: Manifest = io::read_json(path)?;
    let bad = |msg: String| CliError::Input(format!("{}: {msg}", path.display()));
    if manifest.order != ORDER {
        return Err(bad(format!("unsupported order '{}'", manifest.order)));
    }
    if manifest.dtype != DTYPE {
        return Err(bad(format!("unsupported dtype '{}'", manifest.dtype)));
    }
    let grid = manifest.grid()?;
    let payload = manifest.payload_path(path);
    let bytes = fs::read(&payload).map_err(|e| CliError::io(&payload, e))?;
    let want = 8 * grid.len() * manifest.kind.components();
    if bytes.len() != want {
        return Err(bad(format!("payload has {} bytes, expected {want}", bytes.len())));
    }
    let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(Vf3 { manifest, data })
}

/// Fields with a VF3 representation.
pub trait Field: Sized {
    const KIND: Kind;
    fn grid_of(&self) -> &Grid3;
    fn flatten(&self) -> Vec<f64>;
    fn from_flat(grid: Grid3, data: Vec<f64>) -> Result<Self>;
}

macro_rules! scalar_kind {
    ($t:ty, $kind:expr) => {
        impl Field for $t {
            const KIND: Kind = $kind;
            fn grid_of(&self) -> &Grid3 {
                self.grid()
            }
            fn flatten(&self) -> Vec<f64> {
                self.values().to_vec()
            }
            fn from_flat(grid: Grid3, data: Vec<f64>) -> Result<Self> {
                Ok(<$t>::new(grid, data)?)
            }
        }
    };
}

macro_rules! vector_kind {
    ($t:ty, $kind:expr) => {
        impl Field for $t {
            const KIND: Kind = $kind;
            fn grid_of(&self) -> &Grid3 {
                self.grid()
            }
            fn flatten(&self) -> Vec<f64> {
                self.values().iter().flatten().copied().collect()
            }
            fn from_flat(grid: Grid3, data: Vec<f64>) -> Result<Self> {
                let v = data.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
                Ok(<$t>::new(grid, v)?)
            }
        }
    };
}

scalar_kind!(ScalarField0, Kind::Scalar);
scalar_kind!(ThreeForm, Kind::Threeform);
vector_kind!(VectorField, Kind::Vector);
vector_kind!(OneForm, Kind::Oneform);
vector_kind!(TwoForm, Kind::Twoform);

pub fn save<F: Field>(path: &Path, f: &F) -> Result<()> {
    write(path, f.grid_of(), F::KIND, &f.flatten())
}

pub fn load<F: Field>(path: &Path) -> Result<F> {
    let v = read(path)?;
    if v.manifest.kind != F::KIND {
        return Err(CliError::Input(format!("{}: expected a {:?} file, found {:?}", path.display(), F::KIND, v.manifest.kind)));
    }
    F::from_flat(v.manifest.grid()?, v.data)
}

pub fn save_metric(path: &Path, g: &MetricField) -> Result<()> {
    let data: Vec<f64> = g.values().iter().flatten().copied().collect();
    write(path, g.grid(), Kind::Metric, &data)
}

/// Raw metric coefficients; wrap with `MetricField::from_values` to recompute diagnostics.
pub fn load_metric(path: &Path) -> Result<(Grid3, Vec<[f64; 6]>)> {
    let v = read(path)?;
    if v.manifest.kind != Kind::Metric {
        return Err(CliError::Input(format!("{}: expected a metric file, found {:?}", path.display(), v.manifest.kind)));
    }
    let vals = v.data.chunks_exact(6).map(|c| [c[0], c[1], c[2], c[3], c[4], c[5]]).collect();
    Ok((v.manifest.grid()?, vals))
}
