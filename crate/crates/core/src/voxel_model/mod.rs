//! Voxel body models and frequency-dependent tissue conductivities.
//!
//! A [`VoxelModel`] is a uniform Cartesian grid of 16-bit tissue IDs stored
//! x-fastest, plus a table mapping each ID to a name and conductivity
//! samples. ID 0 is free space and always has zero conductivity.

mod components;
mod format;
mod phantom;

use std::collections::BTreeMap;

use crate::error::{Error, Result};

pub use components::{conductive_component_labels, ComponentLabels, NO_COMPONENT};
pub use format::{load_model, parse_model, read_header, save_model, write_model, Header};
pub use phantom::{
    make_phantom, phantom_registry, Axis, Block, Cylinder, LayeredBlock, PhantomFactory,
    PhantomParams, PhantomShape, Sphere,
};

/// Tissue ID reserved for free space.
pub const FREE_SPACE: u16 = 0;

/// Conductivity samples of one tissue as (frequency Hz, kappa S/m) pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ConductivitySamples {
    samples: Vec<(f64, f64)>,
}

impl ConductivitySamples {
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidSamples(
                "at least one sample is required".into(),
            ));
        }
        for &(f, k) in &samples {
            if !(f.is_finite() && f > 0.0) {
                return Err(Error::InvalidSamples(format!(
                    "frequency {f} must be finite and > 0"
                )));
            }
            if !(k.is_finite() && k >= 0.0) {
                return Err(Error::InvalidSamples(format!(
                    "conductivity {k} must be finite and >= 0"
                )));
            }
        }
        if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidSamples(
                "frequencies must be strictly increasing".into(),
            ));
        }
        Ok(Self { samples })
    }

    /// A frequency-independent conductivity.
    pub fn constant(kappa: f64) -> Result<Self> {
        Self::new(vec![(1.0e3, kappa)])
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    /// Log-log piecewise-linear interpolation, clamped outside the sampled range.
    pub fn eval(&self, f: f64) -> f64 {
        let s = &self.samples;
        let (f_lo, k_lo) = s[0];
        let (f_hi, k_hi) = s[s.len() - 1];
        if f <= f_lo {
            return k_lo;
        }
        if f >= f_hi {
            return k_hi;
        }
        // first sample with frequency >= f; f is strictly inside the range
        let hi = s.partition_point(|&(fs, _)| fs < f);
        let (f1, k1) = s[hi];
        if f1 == f {
            return k1;
        }
        let (f0, k0) = s[hi - 1];
        if k0 == k1 {
            return k0;
        }
        if k0 == 0.0 || k1 == 0.0 {
            // log of zero is undefined; fall back to linear in log-frequency
            let t = (f.ln() - f0.ln()) / (f1.ln() - f0.ln());
            return k0 + t * (k1 - k0);
        }
        let t = (f / f0).ln() / (f1 / f0).ln();
        k0 * (k1 / k0).powf(t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tissue {
    pub name: String,
    pub conductivity: ConductivitySamples,
}

impl Tissue {
    pub fn new(name: impl Into<String>, conductivity: ConductivitySamples) -> Self {
        Self {
            name: name.into(),
            conductivity,
        }
    }

    pub fn free_space() -> Self {
        Self::new(
            "free_space",
            ConductivitySamples::constant(0.0).expect("zero is valid"),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoxelModel {
    dims: [usize; 3],
    spacing: [f64; 3],
    origin: [f64; 3],
    tissue_ids: Vec<u16>,
    tissue_table: BTreeMap<u16, Tissue>,
}

impl VoxelModel {
    pub fn new(
        dims: [usize; 3],
        spacing: [f64; 3],
        origin: [f64; 3],
        tissue_ids: Vec<u16>,
        tissue_table: BTreeMap<u16, Tissue>,
    ) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidModel(format!(
                "dims {dims:?} must all be >= 1"
            )));
        }
        if spacing.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return Err(Error::InvalidModel(format!(
                "spacing {spacing:?} must be positive"
            )));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "origin {origin:?} must be finite"
            )));
        }
        let n = dims[0] * dims[1] * dims[2];
        if tissue_ids.len() != n {
            return Err(Error::InvalidModel(format!(
                "{} tissue ids for {n} voxels",
                tissue_ids.len()
            )));
        }
        if let Some(t) = tissue_table.get(&FREE_SPACE) {
            if t.conductivity.samples().iter().any(|&(_, k)| k != 0.0) {
                return Err(Error::InvalidModel(
                    "tissue 0 is free space and must have zero conductivity".into(),
                ));
            }
        }
        for (id, t) in &tissue_table {
            if t.name.is_empty() || t.name.chars().any(char::is_whitespace) {
                return Err(Error::InvalidModel(format!(
                    "tissue {id} name '{}' must be a non-empty token",
                    t.name
                )));
            }
        }
        let mut seen = vec![false; u16::MAX as usize + 1];
        for &id in &tissue_ids {
            if !seen[id as usize] {
                seen[id as usize] = true;
                if !tissue_table.contains_key(&id) {
                    return Err(Error::UnknownTissue(id));
                }
            }
        }
        Ok(Self {
            dims,
            spacing,
            origin,
            tissue_ids,
            tissue_table,
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    pub fn tissue_ids(&self) -> &[u16] {
        &self.tissue_ids
    }

    pub fn tissue_table(&self) -> &BTreeMap<u16, Tissue> {
        &self.tissue_table
    }

    pub fn voxel_count(&self) -> usize {
        self.tissue_ids.len()
    }

    #[inline]
    pub fn voxel_index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn voxel_coords(&self, v: usize) -> [usize; 3] {
        let [nx, ny, _] = self.dims;
        [v % nx, (v / nx) % ny, v / (nx * ny)]
    }

    pub fn voxel_center(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [
            self.origin[0] + (i as f64 + 0.5) * self.spacing[0],
            self.origin[1] + (j as f64 + 0.5) * self.spacing[1],
            self.origin[2] + (k as f64 + 0.5) * self.spacing[2],
        ]
    }

    pub fn tissue(&self, i: usize, j: usize, k: usize) -> u16 {
        self.tissue_ids[self.voxel_index(i, j, k)]
    }

    /// Conductivity of `tissue_id` at frequency `f`; free space is always 0.
    pub fn kappa_at(&self, tissue_id: u16, f: f64) -> Result<f64> {
        if !(f.is_finite() && f > 0.0) {
            return Err(Error::InvalidArgument(format!("frequency {f} must be > 0")));
        }
        if tissue_id == FREE_SPACE {
            return Ok(0.0);
        }
        self.tissue_table
            .get(&tissue_id)
            .map(|t| t.conductivity.eval(f))
            .ok_or(Error::UnknownTissue(tissue_id))
    }

    /// Per-voxel conductivity field at frequency `f`, x-fastest.
    pub fn kappa_field(&self, f: f64) -> Result<Vec<f64>> {
        let mut lut = vec![0.0; u16::MAX as usize + 1];
        for &id in self.tissue_table.keys() {
            lut[id as usize] = self.kappa_at(id, f)?;
        }
        Ok(self.tissue_ids.iter().map(|&id| lut[id as usize]).collect())
    }

    /// Number of voxels with nonzero conductivity at `f`.
    pub fn conductive_voxel_count(&self, f: f64) -> Result<usize> {
        Ok(self.kappa_field(f)?.iter().filter(|&&k| k > 0.0).count())
    }
}
