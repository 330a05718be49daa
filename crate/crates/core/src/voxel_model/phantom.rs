//! Synthetic phantoms voxelized by center inclusion.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use super::{ConductivitySamples, Tissue, VoxelModel, FREE_SPACE};
use crate::error::{Error, Result};
use crate::registry::Registry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Axis {
    X,
    Y,
    #[default]
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" | "X" => Ok(Axis::X),
            "y" | "Y" => Ok(Axis::Y),
            "z" | "Z" => Ok(Axis::Z),
            _ => Err(Error::InvalidArgument(format!(
                "axis '{s}' is not one of x, y, z"
            ))),
        }
    }
}

/// Geometry parameters shared by all phantom kinds. Lengths in meters; each
/// kind reads only the fields it needs.
#[derive(Debug, Clone, Default)]
pub struct PhantomParams {
    /// Grid origin (min corner of voxel (0,0,0)).
    pub origin: [f64; 3],
    /// Shape center; defaults to the grid center.
    pub center: Option<[f64; 3]>,
    pub radius: f64,
    pub axis: Axis,
    /// Cylinder half length along its axis; defaults to the full grid.
    pub half_length: Option<f64>,
    /// Block half extents; default fills the grid.
    pub half_extent: Option<[f64; 3]>,
    /// One conductivity per tissue (per layer for `layered-block`).
    pub kappas: Vec<f64>,
}

/// Extent of the voxel grid in world coordinates.
#[derive(Debug, Clone, Copy)]
pub struct GridFrame {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl GridFrame {
    pub fn center(&self) -> [f64; 3] {
        [0, 1, 2].map(|d| 0.5 * (self.lo[d] + self.hi[d]))
    }
}

pub trait PhantomShape: Send + Sync {
    fn kind(&self) -> &'static str;
    /// Axis-aligned bounding box of the shape.
    fn bounds(&self) -> ([f64; 3], [f64; 3]);
    /// Tissue ID at point `p`; [`FREE_SPACE`] outside.
    fn tissue_at(&self, p: [f64; 3]) -> u16;
    fn tissues(&self) -> Result<BTreeMap<u16, Tissue>>;
}

pub type PhantomFactory = fn(&PhantomParams, &GridFrame) -> Result<Box<dyn PhantomShape>>;

pub fn phantom_registry() -> &'static Registry<PhantomFactory> {
    static REGISTRY: OnceLock<Registry<PhantomFactory>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        Registry::<PhantomFactory>::new("phantom kind")
            .with("sphere", "ball of one tissue", |p, g| {
                Ok(Box::new(Sphere::from_params(p, g)?))
            })
            .with("cylinder", "circular cylinder of one tissue", |p, g| {
                Ok(Box::new(Cylinder::from_params(p, g)?))
            })
            .with("block", "axis-aligned box of one tissue", |p, g| {
                Ok(Box::new(Block::from_params(p, g)?))
            })
            .with(
                "layered-block",
                "box split into equal z-layers, one tissue per layer",
                |p, g| Ok(Box::new(LayeredBlock::from_params(p, g)?)),
            )
    })
}

fn single_tissue(kappas: &[f64]) -> Result<BTreeMap<u16, Tissue>> {
    let [kappa] = kappas else {
        return Err(Error::InvalidArgument(format!(
            "expected exactly one conductivity, got {}",
            kappas.len()
        )));
    };
    Ok(BTreeMap::from([
        (FREE_SPACE, Tissue::free_space()),
        (
            1,
            Tissue::new("tissue", ConductivitySamples::constant(*kappa)?),
        ),
    ]))
}

fn check_radius(r: f64) -> Result<()> {
    if r.is_finite() && r >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "radius {r} must be finite and >= 0"
        )))
    }
}

#[derive(Debug, Clone)]
pub struct Sphere {
    pub center: [f64; 3],
    pub radius: f64,
    pub kappa: f64,
}

impl Sphere {
    fn from_params(p: &PhantomParams, g: &GridFrame) -> Result<Self> {
        check_radius(p.radius)?;
        single_tissue(&p.kappas)?;
        Ok(Self {
            center: p.center.unwrap_or_else(|| g.center()),
            radius: p.radius,
            kappa: p.kappas[0],
        })
    }
}

impl PhantomShape for Sphere {
    fn kind(&self) -> &'static str {
        "sphere"
    }

    fn bounds(&self) -> ([f64; 3], [f64; 3]) {
        (
            self.center.map(|c| c - self.radius),
            self.center.map(|c| c + self.radius),
        )
    }

    fn tissue_at(&self, p: [f64; 3]) -> u16 {
        let d2: f64 = (0..3).map(|d| (p[d] - self.center[d]).powi(2)).sum();
        u16::from(d2 < self.radius * self.radius)
    }

    fn tissues(&self) -> Result<BTreeMap<u16, Tissue>> {
        single_tissue(&[self.kappa])
    }
}

#[derive(Debug, Clone)]
pub struct Cylinder {
    pub center: [f64; 3],
    pub axis: Axis,
    pub radius: f64,
    pub half_length: f64,
    pub kappa: f64,
}

impl Cylinder {
    fn from_params(p: &PhantomParams, g: &GridFrame) -> Result<Self> {
        check_radius(p.radius)?;
        single_tissue(&p.kappas)?;
        let center = p.center.unwrap_or_else(|| g.center());
        let a = p.axis.index();
        let half_length = match p.half_length {
            Some(h) if h.is_finite() && h >= 0.0 => h,
            Some(h) => {
                return Err(Error::InvalidArgument(format!(
                    "half length {h} must be >= 0"
                )))
            }
            None => (center[a] - g.lo[a]).min(g.hi[a] - center[a]),
        };
        Ok(Self {
            center,
            axis: p.axis,
            radius: p.radius,
            half_length,
            kappa: p.kappas[0],
        })
    }
}

impl PhantomShape for Cylinder {
    fn kind(&self) -> &'static str {
        "cylinder"
    }

    fn bounds(&self) -> ([f64; 3], [f64; 3]) {
        let a = self.axis.index();
        let half = |d: usize| {
            if d == a {
                self.half_length
            } else {
                self.radius
            }
        };
        (
            [0, 1, 2].map(|d| self.center[d] - half(d)),
            [0, 1, 2].map(|d| self.center[d] + half(d)),
        )
    }

    fn tissue_at(&self, p: [f64; 3]) -> u16 {
        let a = self.axis.index();
        let mut rho2 = 0.0;
        for d in 0..3 {
            if d != a {
                rho2 += (p[d] - self.center[d]).powi(2);
            }
        }
        u16::from(
            rho2 < self.radius * self.radius && (p[a] - self.center[a]).abs() < self.half_length,
        )
    }

    fn tissues(&self) -> Result<BTreeMap<u16, Tissue>> {
        single_tissue(&[self.kappa])
    }
}

#[derive(Debug, Clone)]
pub struct Block {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
    pub kappa: f64,
}

fn block_extent(p: &PhantomParams, g: &GridFrame) -> Result<([f64; 3], [f64; 3])> {
    let center = p.center.unwrap_or_else(|| g.center());
    let half = match p.half_extent {
        Some(h) => {
            if h.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::InvalidArgument(format!(
                    "half extent {h:?} must be >= 0"
                )));
            }
            h
        }
        None => [0, 1, 2].map(|d| (center[d] - g.lo[d]).min(g.hi[d] - center[d])),
    };
    Ok((
        [0, 1, 2].map(|d| center[d] - half[d]),
        [0, 1, 2].map(|d| center[d] + half[d]),
    ))
}

fn in_box(lo: &[f64; 3], hi: &[f64; 3], p: [f64; 3]) -> bool {
    (0..3).all(|d| p[d] >= lo[d] && p[d] < hi[d])
}

impl Block {
    fn from_params(p: &PhantomParams, g: &GridFrame) -> Result<Self> {
        single_tissue(&p.kappas)?;
        let (lo, hi) = block_extent(p, g)?;
        Ok(Self {
            lo,
            hi,
            kappa: p.kappas[0],
        })
    }
}

impl PhantomShape for Block {
    fn kind(&self) -> &'static str {
        "block"
    }

    fn bounds(&self) -> ([f64; 3], [f64; 3]) {
        (self.lo, self.hi)
    }

    fn tissue_at(&self, p: [f64; 3]) -> u16 {
        u16::from(in_box(&self.lo, &self.hi, p))
    }

    fn tissues(&self) -> Result<BTreeMap<u16, Tissue>> {
        single_tissue(&[self.kappa])
    }
}

/// Box split into equal-thickness layers along z; layer `l` (from the bottom)
/// gets tissue ID `l + 1`.
#[derive(Debug, Clone)]
pub struct LayeredBlock {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
    pub kappas: Vec<f64>,
}

impl LayeredBlock {
    fn from_params(p: &PhantomParams, g: &GridFrame) -> Result<Self> {
        if p.kappas.is_empty() || p.kappas.len() >= u16::MAX as usize {
            return Err(Error::InvalidArgument(
                "layered-block needs at least one conductivity".into(),
            ));
        }
        let (lo, hi) = block_extent(p, g)?;
        Ok(Self {
            lo,
            hi,
            kappas: p.kappas.clone(),
        })
    }
}

impl PhantomShape for LayeredBlock {
    fn kind(&self) -> &'static str {
        "layered-block"
    }

    fn bounds(&self) -> ([f64; 3], [f64; 3]) {
        (self.lo, self.hi)
    }

    fn tissue_at(&self, p: [f64; 3]) -> u16 {
        if !in_box(&self.lo, &self.hi, p) {
            return FREE_SPACE;
        }
        let n = self.kappas.len();
        let t = (p[2] - self.lo[2]) / (self.hi[2] - self.lo[2]);
        let layer = ((t * n as f64).floor() as usize).min(n - 1);
        layer as u16 + 1
    }

    fn tissues(&self) -> Result<BTreeMap<u16, Tissue>> {
        let mut table = BTreeMap::from([(FREE_SPACE, Tissue::free_space())]);
        for (l, &k) in self.kappas.iter().enumerate() {
            table.insert(
                l as u16 + 1,
                Tissue::new(format!("layer{}", l + 1), ConductivitySamples::constant(k)?),
            );
        }
        Ok(table)
    }
}

/// Voxelizes `shape` on the given grid: a voxel takes the shape's tissue at
/// its center.
pub fn voxelize(
    shape: &dyn PhantomShape,
    dims: [usize; 3],
    spacing: [f64; 3],
    origin: [f64; 3],
) -> Result<VoxelModel> {
    let frame = GridFrame {
        lo: origin,
        hi: [0, 1, 2].map(|d| origin[d] + dims[d] as f64 * spacing[d]),
    };
    let (lo, hi) = shape.bounds();
    for d in 0..3 {
        let slack = 1e-9 * (frame.hi[d] - frame.lo[d]).abs().max(spacing[d]);
        if lo[d] < frame.lo[d] - slack || hi[d] > frame.hi[d] + slack {
            return Err(Error::ShapeOutOfBounds(format!(
                "{} spans [{:.6}, {:.6}] m on axis {d}, grid spans [{:.6}, {:.6}] m",
                shape.kind(),
                lo[d],
                hi[d],
                frame.lo[d],
                frame.hi[d]
            )));
        }
    }
    let [nx, ny, nz] = dims;
    let mut ids = Vec::with_capacity(nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let p = [
                    origin[0] + (i as f64 + 0.5) * spacing[0],
                    origin[1] + (j as f64 + 0.5) * spacing[1],
                    origin[2] + (k as f64 + 0.5) * spacing[2],
                ];
                ids.push(shape.tissue_at(p));
            }
        }
    }
    VoxelModel::new(dims, spacing, origin, ids, shape.tissues()?)
}

/// Builds a phantom of the registered `kind` on a `dims` grid.
pub fn make_phantom(
    kind: &str,
    dims: [usize; 3],
    spacing: [f64; 3],
    params: &PhantomParams,
) -> Result<VoxelModel> {
    if dims.iter().any(|&d| d == 0) || spacing.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::InvalidModel(format!(
            "bad grid dims {dims:?} / spacing {spacing:?}"
        )));
    }
    let factory = phantom_registry().get(kind)?;
    let frame = GridFrame {
        lo: params.origin,
        hi: [0, 1, 2].map(|d| params.origin[d] + dims[d] as f64 * spacing[d]),
    };
    let shape = factory(params, &frame)?;
    voxelize(shape.as_ref(), dims, spacing, params.origin)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(radius: f64) -> PhantomParams {
        PhantomParams {
            radius,
            kappas: vec![0.2],
            ..Default::default()
        }
    }

    #[test]
    fn zero_radius_sphere_is_empty() {
        let m = make_phantom("sphere", [8, 8, 8], [0.002; 3], &params(0.0)).unwrap();
        assert!(m.tissue_ids().iter().all(|&t| t == 0));
    }

    #[test]
    fn sphere_volume_matches_analytic() {
        let dx = 0.002;
        for r_vox in [10.0, 12.5, 15.0] {
            let r = r_vox * dx;
            let n = 2 * (r_vox as usize) + 4;
            let m = make_phantom("sphere", [n; 3], [dx; 3], &params(r)).unwrap();
            let count = m.tissue_ids().iter().filter(|&&t| t == 1).count() as f64;
            let expected = 4.0 / 3.0 * std::f64::consts::PI * r_vox.powi(3);
            assert!(
                (count - expected).abs() / expected < 0.05,
                "{count} vs {expected}"
            );
        }
    }

    #[test]
    fn cylinder_slices_are_identical() {
        let m = make_phantom("cylinder", [20, 20, 9], [0.002; 3], &params(0.015)).unwrap();
        let slice = 20 * 20;
        let first = &m.tissue_ids()[..slice];
        assert!(first.iter().any(|&t| t == 1));
        for k in 1..9 {
            assert_eq!(&m.tissue_ids()[k * slice..(k + 1) * slice], first);
        }
    }

    #[test]
    fn shape_out_of_bounds() {
        let err = make_phantom("sphere", [10, 10, 10], [0.002; 3], &params(0.011)).unwrap_err();
        assert!(matches!(err, Error::ShapeOutOfBounds(_)));
    }

    #[test]
    fn layered_block_assigns_layer_ids() {
        let p = PhantomParams {
            kappas: vec![0.2, 0.002, 0.2],
            ..Default::default()
        };
        let m = make_phantom("layered-block", [4, 4, 6], [0.001; 3], &p).unwrap();
        for k in 0..6 {
            assert_eq!(m.tissue(1, 2, k), (k / 2) as u16 + 1);
        }
        assert_eq!(m.kappa_at(2, 85e3).unwrap(), 0.002);
    }

    #[test]
    fn unknown_kind() {
        assert!(matches!(
            make_phantom("torus", [4; 3], [0.001; 3], &params(0.001)),
            Err(Error::UnknownStrategy { .. })
        ));
    }
}
