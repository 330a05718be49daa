//! Magnetic flux density sources, coarse sample sets, and deposition of
//! face fluxes on the fine grid.

mod clean;
mod interpolate;
mod samples;

use std::sync::OnceLock;

use rayon::prelude::*;

pub use clean::{divergence_clean, divergence_clean_with, DEFAULT_CLEAN_TOL};
pub use interpolate::{interpolate_to_faces, source_to_faces, trilinear};
pub use samples::{load_samples, parse_samples, samples_to_string, save_samples};

use crate::error::{Error, Result};
use crate::registry::Registry;

/// μ0/(4π) in T·m/A.
const MU0_OVER_4PI: f64 = 1e-7;

/// Distance below which a point counts as lying on the wire.
pub const SINGULAR_DISTANCE: f64 = 1e-12;

/// A magnetic flux density amplitude field (single phase, tesla).
pub trait FieldSource: Send + Sync {
    fn kind(&self) -> &'static str;
    fn field_at(&self, p: [f64; 3]) -> Result<[f64; 3]>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformField {
    pub b: [f64; 3],
}

impl FieldSource for UniformField {
    fn kind(&self) -> &'static str {
        "uniform"
    }

    fn field_at(&self, _p: [f64; 3]) -> Result<[f64; 3]> {
        Ok(self.b)
    }
}

/// Circular loop approximated by a regular polygon.
#[derive(Debug, Clone, PartialEq)]
pub struct CoilSpec {
    pub center: [f64; 3],
    pub axis: [f64; 3],
    pub radius: f64,
    pub current: f64,
    pub segments: usize,
}

impl CoilSpec {
    /// Validates and normalizes the axis.
    pub fn new(
        center: [f64; 3],
        axis: [f64; 3],
        radius: f64,
        current: f64,
        segments: usize,
    ) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "coil radius {radius} must be > 0"
            )));
        }
        if segments < 8 {
            return Err(Error::InvalidArgument(format!(
                "coil needs >= 8 segments, got {segments}"
            )));
        }
        if !current.is_finite() || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(
                "coil center and current must be finite".into(),
            ));
        }
        let n = norm(axis);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidArgument(
                "coil axis must be a nonzero vector".into(),
            ));
        }
        Ok(Self {
            center,
            axis: axis.map(|a| a / n),
            radius,
            current,
            segments,
        })
    }

    /// Polygon vertices, counter-clockwise about the axis.
    pub fn vertices(&self) -> Vec<[f64; 3]> {
        let a = self.axis;
        let helper = if a[0].abs() <= a[1].abs() && a[0].abs() <= a[2].abs() {
            [1.0, 0.0, 0.0]
        } else if a[1].abs() <= a[2].abs() {
            [0.0, 1.0, 0.0]
        } else {
            [0.0, 0.0, 1.0]
        };
        let h = dot(helper, a);
        let u = sub(helper, a.map(|c| c * h));
        let nu = norm(u);
        let u = u.map(|c| c / nu);
        let v = cross(a, u);
        (0..self.segments)
            .map(|s| {
                let t = 2.0 * std::f64::consts::PI * s as f64 / self.segments as f64;
                let (sn, cs) = t.sin_cos();
                [0, 1, 2].map(|d| self.center[d] + self.radius * (cs * u[d] + sn * v[d]))
            })
            .collect()
    }
}

impl FieldSource for CoilSpec {
    fn kind(&self) -> &'static str {
        "coil"
    }

    fn field_at(&self, p: [f64; 3]) -> Result<[f64; 3]> {
        coil_field(self, p)
    }
}

/// Biot–Savart field of the polygonized loop at `p`.
pub fn coil_field(coil: &CoilSpec, p: [f64; 3]) -> Result<[f64; 3]> {
    let verts = coil.vertices();
    let mut b = [0.0; 3];
    for s in 0..verts.len() {
        let a = verts[s];
        let e = verts[(s + 1) % verts.len()];
        let dist = point_segment_distance(p, a, e);
        if dist < SINGULAR_DISTANCE {
            return Err(Error::SingularPoint {
                point: p,
                segment: s,
                distance: dist,
            });
        }
        let r1 = sub(p, a);
        let r2 = sub(p, e);
        let (l1, l2) = (norm(r1), norm(r2));
        let c = cross(r1, r2);
        let denom = l1 * l2 * (l1 * l2 + dot(r1, r2));
        if denom == 0.0 {
            continue;
        }
        let f = MU0_OVER_4PI * coil.current * (l1 + l2) / denom;
        for d in 0..3 {
            b[d] += f * c[d];
        }
    }
    Ok(b)
}

fn point_segment_distance(p: [f64; 3], a: [f64; 3], b: [f64; 3]) -> f64 {
    let ab = sub(b, a);
    let ap = sub(p, a);
    let len2 = dot(ab, ab);
    let t = if len2 > 0.0 {
        (dot(ap, ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    norm(sub(ap, ab.map(|c| c * t)))
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Parameters accepted by the registered source factories.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceParams {
    pub b: [f64; 3],
    pub center: [f64; 3],
    pub axis: [f64; 3],
    pub radius: f64,
    pub current: f64,
    pub segments: usize,
}

impl Default for SourceParams {
    fn default() -> Self {
        Self {
            b: [0.0; 3],
            center: [0.0; 3],
            axis: [0.0, 0.0, 1.0],
            radius: 0.1,
            current: 1.0,
            segments: 256,
        }
    }
}

pub type SourceFactory = fn(&SourceParams) -> Result<Box<dyn FieldSource>>;

pub fn source_registry() -> &'static Registry<SourceFactory> {
    static REGISTRY: OnceLock<Registry<SourceFactory>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        Registry::<SourceFactory>::new("field source")
            .with("uniform", "spatially constant flux density", |p| {
                Ok(Box::new(UniformField { b: p.b }))
            })
            .with("coil", "polygonized circular current loop", |p| {
                Ok(Box::new(CoilSpec::new(
                    p.center, p.axis, p.radius, p.current, p.segments,
                )?))
            })
    })
}

/// Regular coarse sampling lattice, x-fastest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    pub origin: [f64; 3],
    pub spacing: [f64; 3],
    pub dims: [usize; 3],
}

impl Lattice {
    pub fn new(origin: [f64; 3], spacing: [f64; 3], dims: [usize; 3]) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "lattice dims {dims:?} must be >= 1"
            )));
        }
        if spacing.iter().any(|&h| !(h > 0.0) || !h.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "lattice spacing {spacing:?} must be > 0"
            )));
        }
        Ok(Self {
            origin,
            spacing,
            dims,
        })
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, n: usize) -> [f64; 3] {
        let [nx, ny, _] = self.dims;
        let idx = [n % nx, (n / nx) % ny, n / (nx * ny)];
        [0, 1, 2].map(|d| self.origin[d] + idx[d] as f64 * self.spacing[d])
    }
}

/// Flux density amplitudes on a coarse lattice at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSampleSet {
    pub frequency_hz: f64,
    pub lattice: Lattice,
    pub positions: Vec<[f64; 3]>,
    pub b: Vec<[f64; 3]>,
}

impl FieldSampleSet {
    pub fn new(
        frequency_hz: f64,
        lattice: Lattice,
        positions: Vec<[f64; 3]>,
        b: Vec<[f64; 3]>,
    ) -> Result<Self> {
        if !(frequency_hz > 0.0) || !frequency_hz.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "frequency {frequency_hz} must be > 0"
            )));
        }
        if positions.len() != lattice.len() || b.len() != lattice.len() {
            return Err(Error::MalformedSamples(format!(
                "{} records for a lattice of {} points",
                positions.len().min(b.len()),
                lattice.len()
            )));
        }
        for (n, p) in positions.iter().enumerate() {
            let q = lattice.point(n);
            if (0..3).any(|d| (p[d] - q[d]).abs() > 1e-9) {
                return Err(Error::MalformedSamples(format!(
                    "record {n} at {p:?} does not match lattice point {q:?}"
                )));
            }
        }
        Ok(Self {
            frequency_hz,
            lattice,
            positions,
            b,
        })
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    /// Multiplies every sample by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.b {
            *v = v.map(|c| c * alpha);
        }
        out
    }
}

/// Evaluates `source` at every lattice point.
pub fn sample_on_lattice(
    source: &dyn FieldSource,
    lattice: Lattice,
    frequency_hz: f64,
) -> Result<FieldSampleSet> {
    let positions: Vec<[f64; 3]> = (0..lattice.len()).map(|n| lattice.point(n)).collect();
    let b = positions
        .par_iter()
        .map(|&p| source.field_at(p))
        .collect::<Result<Vec<_>>>()?;
    FieldSampleSet::new(frequency_hz, lattice, positions, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const MU0: f64 = 4e-7 * std::f64::consts::PI;

    fn loop_z(r: f64, i: f64, segments: usize) -> CoilSpec {
        CoilSpec::new([0.01, -0.02, 0.03], [0.0, 0.0, 2.0], r, i, segments).unwrap()
    }

    #[test]
    fn center_field_matches_closed_form() {
        let c = loop_z(0.05, 3.0, 256);
        let b = coil_field(&c, c.center).unwrap();
        assert_relative_eq!(b[2], MU0 * 3.0 / (2.0 * 0.05), max_relative = 1e-3);
        assert!(b[0].abs() < 1e-12 * b[2] && b[1].abs() < 1e-12 * b[2]);
    }

    #[test]
    fn on_axis_field_matches_closed_form() {
        let (r, i) = (0.08, 2.0);
        let c = loop_z(r, i, 512);
        for h in [0.01, 0.05, 0.2, -0.1] {
            let p = [c.center[0], c.center[1], c.center[2] + h];
            let b = coil_field(&c, p).unwrap();
            let exact = MU0 * i * r * r / (2.0 * (r * r + h * h).powf(1.5));
            assert_relative_eq!(b[2], exact, max_relative = 1e-3);
        }
    }

    #[test]
    fn zero_current_and_linearity() {
        let p = [0.03, 0.01, 0.05];
        assert_eq!(coil_field(&loop_z(0.05, 0.0, 64), p).unwrap(), [0.0; 3]);
        let b1 = coil_field(&loop_z(0.05, 1.5, 64), p).unwrap();
        let b2 = coil_field(&loop_z(0.05, 3.0, 64), p).unwrap();
        for d in 0..3 {
            assert_relative_eq!(b2[d], 2.0 * b1[d], max_relative = 1e-15);
        }
    }

    #[test]
    fn tilted_axis_points_along_axis_at_center() {
        let c = CoilSpec::new([0.0; 3], [1.0, 1.0, 0.0], 0.1, 1.0, 64).unwrap();
        let b = coil_field(&c, [0.0; 3]).unwrap();
        assert_relative_eq!(b[0], b[1], max_relative = 1e-12);
        assert!(b[0] > 0.0 && b[2].abs() < 1e-15);
    }

    #[test]
    fn point_on_wire_is_singular() {
        let c = loop_z(0.05, 1.0, 16);
        let v = c.vertices();
        let mid = [0, 1, 2].map(|d| 0.5 * (v[3][d] + v[4][d]));
        assert!(matches!(
            coil_field(&c, mid),
            Err(Error::SingularPoint { segment: 3, .. })
        ));
        assert!(matches!(
            coil_field(&c, v[0]),
            Err(Error::SingularPoint { .. })
        ));
    }

    #[test]
    fn invalid_coils_are_rejected() {
        assert!(CoilSpec::new([0.0; 3], [0.0, 0.0, 1.0], 0.0, 1.0, 64).is_err());
        assert!(CoilSpec::new([0.0; 3], [0.0, 0.0, 1.0], 0.1, 1.0, 7).is_err());
        assert!(CoilSpec::new([0.0; 3], [0.0; 3], 0.1, 1.0, 64).is_err());
    }

    #[test]
    fn lattice_sampling() {
        let lat = Lattice::new([-0.1, -0.1, -0.1], [0.1; 3], [3, 3, 3]).unwrap();
        let u = sample_on_lattice(
            &UniformField {
                b: [0.0, 0.0, 1e-6],
            },
            lat,
            85e3,
        )
        .unwrap();
        assert!(u.b.iter().all(|&b| b == [0.0, 0.0, 1e-6]));

        let coil = loop_z(0.05, 1.0, 64);
        let s = sample_on_lattice(&coil, lat, 85e3).unwrap();
        for (p, b) in s.positions.iter().zip(&s.b) {
            assert_eq!(*b, coil_field(&coil, *p).unwrap());
        }
        assert_eq!(s.positions[1], [0.0, -0.1, -0.1]);

        let one = Lattice::new(coil.center, [1.0; 3], [1, 1, 1]).unwrap();
        let s1 = sample_on_lattice(&coil, one, 85e3).unwrap();
        assert_eq!(s1.b, vec![coil_field(&coil, coil.center).unwrap()]);
    }

    #[test]
    fn sample_set_validation() {
        let lat = Lattice::new([0.0; 3], [1.0; 3], [2, 1, 1]).unwrap();
        assert!(FieldSampleSet::new(1.0, lat, vec![[0.0; 3]], vec![[0.0; 3]]).is_err());
        let bad = vec![[0.0; 3], [1.0 + 1e-6, 0.0, 0.0]];
        assert!(FieldSampleSet::new(1.0, lat, bad, vec![[0.0; 3]; 2]).is_err());
        let ok = vec![[0.0; 3], [1.0 + 1e-10, 0.0, 0.0]];
        assert!(FieldSampleSet::new(1.0, lat, ok, vec![[0.0; 3]; 2]).is_ok());
    }

    #[test]
    fn registry_builds_sources() {
        let p = SourceParams {
            b: [1.0, 2.0, 3.0],
            ..Default::default()
        };
        let u = (source_registry().get("uniform").unwrap())(&p).unwrap();
        assert_eq!(u.field_at([5.0; 3]).unwrap(), [1.0, 2.0, 3.0]);
        let c = (source_registry().get("coil").unwrap())(&p).unwrap();
        assert_eq!(c.kind(), "coil");
        assert!(source_registry().get("dipole").is_err());
    }
}
