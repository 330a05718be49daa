use rayon::prelude::*;

use super::{FieldSampleSet, FieldSource, Lattice};
use crate::error::{Error, Result};
use crate::fit::StaggeredGrid;

/// Tolerance for a query to sit on a single-point lattice axis.
const AXIS_SLACK: f64 = 1e-9;

/// Index and weight pair for one axis: value = (1−t)·v[i] + t·v[i+1].
/// `t` outside [0, 1] extrapolates linearly from the boundary cell.
fn axis_stencil(lat: &Lattice, d: usize, x: f64) -> Result<(usize, f64)> {
    let n = lat.dims[d];
    if n == 1 {
        if (x - lat.origin[d]).abs() > AXIS_SLACK {
            return Err(Error::InsufficientLattice { axis: d, points: 1 });
        }
        return Ok((0, 0.0));
    }
    let s = (x - lat.origin[d]) / lat.spacing[d];
    let i = (s.floor().max(0.0) as usize).min(n - 2);
    Ok((i, s - i as f64))
}

/// Trilinear interpolation (linear extrapolation outside) of the samples.
pub fn trilinear(samples: &FieldSampleSet, p: [f64; 3]) -> Result<[f64; 3]> {
    let lat = &samples.lattice;
    let [nx, ny, _] = lat.dims;
    let st = [
        axis_stencil(lat, 0, p[0])?,
        axis_stencil(lat, 1, p[1])?,
        axis_stencil(lat, 2, p[2])?,
    ];
    let mut out = [0.0; 3];
    for c in 0..8usize {
        let mut w = 1.0;
        let mut idx = [0usize; 3];
        for d in 0..3 {
            let (i, t) = st[d];
            if c >> d & 1 == 1 {
                if lat.dims[d] == 1 {
                    w = 0.0;
                    break;
                }
                idx[d] = i + 1;
                w *= t;
            } else {
                idx[d] = i;
                w *= 1.0 - t;
            }
        }
        if w == 0.0 {
            continue;
        }
        let b = samples.b[idx[0] + nx * (idx[1] + ny * idx[2])];
        for d in 0..3 {
            out[d] += w * b[d];
        }
    }
    Ok(out)
}

/// Face fluxes by midpoint quadrature of the interpolated field.
pub fn interpolate_to_faces(samples: &FieldSampleSet, grid: &StaggeredGrid) -> Result<Vec<f64>> {
    (0..grid.num_faces())
        .into_par_iter()
        .map(|f| {
            let d = grid.face_coords(f).0;
            Ok(trilinear(samples, grid.face_center(f))?[d] * grid.face_area(d))
        })
        .collect()
}

/// Face fluxes by midpoint quadrature of a source evaluated directly at
/// face centers.
pub fn source_to_faces(source: &dyn FieldSource, grid: &StaggeredGrid) -> Result<Vec<f64>> {
    (0..grid.num_faces())
        .into_par_iter()
        .map(|f| {
            let d = grid.face_coords(f).0;
            Ok(source.field_at(grid.face_center(f))?[d] * grid.face_area(d))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_source::{sample_on_lattice, CoilSpec, UniformField};
    use proptest::prelude::*;

    struct Linear(f64);

    impl FieldSource for Linear {
        fn kind(&self) -> &'static str {
            "linear"
        }
        fn field_at(&self, p: [f64; 3]) -> Result<[f64; 3]> {
            Ok([0.3 * p[1], -0.2 * p[2] + 1e-6, self.0 * p[0]])
        }
    }

    fn grid() -> StaggeredGrid {
        StaggeredGrid::new([6, 5, 4], [0.002, 0.003, 0.0025], [-0.004, 0.001, -0.005])
    }

    #[test]
    fn uniform_field_fluxes() {
        let g = grid();
        let lat = Lattice::new([-0.1; 3], [0.05; 3], [5, 5, 5]).unwrap();
        let s = sample_on_lattice(
            &UniformField {
                b: [0.0, 0.0, 1e-6],
            },
            lat,
            85e3,
        )
        .unwrap();
        let b = interpolate_to_faces(&s, &g).unwrap();
        for f in 0..g.num_faces() {
            let want = if g.face_coords(f).0 == 2 {
                1e-6 * g.face_area(2)
            } else {
                0.0
            };
            assert!((b[f] - want).abs() <= 1e-15 * 1e-6 * g.face_area(2), "{f}");
        }
    }

    #[test]
    fn linear_fields_are_reproduced_with_extrapolation() {
        let g = grid();
        let alpha = 0.7;
        // Lattice covers only part of the grid, so most faces extrapolate.
        let lat = Lattice::new([0.0, 0.002, -0.001], [0.004, 0.003, 0.002], [2, 2, 3]).unwrap();
        let s = sample_on_lattice(&Linear(alpha), lat, 1.0).unwrap();
        let b = interpolate_to_faces(&s, &g).unwrap();
        let exact = source_to_faces(&Linear(alpha), &g).unwrap();
        let scale = exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for f in 0..g.num_faces() {
            assert!(
                (b[f] - exact[f]).abs() <= 1e-12 * scale,
                "{f}: {} vs {}",
                b[f],
                exact[f]
            );
        }
        for f in g.face_range(2) {
            let c = g.face_center(f);
            assert!((exact[f] - alpha * c[0] * g.face_area(2)).abs() < 1e-20);
        }
    }

    #[test]
    fn lattice_on_face_centers_matches_direct_evaluation() {
        let g = StaggeredGrid::new([4, 4, 4], [0.01; 3], [0.0; 3]);
        let coil = CoilSpec::new([0.02, 0.02, -0.03], [0.0, 0.0, 1.0], 0.05, 1.0, 64).unwrap();
        // Half-spacing lattice contains every face center.
        let lat = Lattice::new([0.0; 3], [0.005; 3], [9, 9, 9]).unwrap();
        let s = sample_on_lattice(&coil, lat, 1.0).unwrap();
        let b = interpolate_to_faces(&s, &g).unwrap();
        let exact = source_to_faces(&coil, &g).unwrap();
        let scale = exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for f in 0..g.num_faces() {
            assert!((b[f] - exact[f]).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn single_point_axis_needs_no_variation() {
        let g = grid();
        let lat = Lattice::new([0.0; 3], [1.0; 3], [2, 2, 1]).unwrap();
        let s = FieldSampleSet::new(
            1.0,
            lat,
            (0..4).map(|n| lat.point(n)).collect(),
            vec![[1.0; 3]; 4],
        )
        .unwrap();
        assert!(matches!(
            interpolate_to_faces(&s, &g),
            Err(Error::InsufficientLattice { axis: 2, points: 1 })
        ));
        for v in trilinear(&s, [0.3, 7.0, 0.0]).unwrap() {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn linear_in_sample_values(alpha in -5.0f64..5.0, seed in 0u64..1000) {
            let g = StaggeredGrid::new([3, 3, 2], [0.01; 3], [0.0; 3]);
            let lat = Lattice::new([-0.01, 0.0, 0.005], [0.015, 0.02, 0.01], [3, 2, 2]).unwrap();
            let b: Vec<[f64; 3]> = (0..lat.len())
                .map(|n| [0, 1, 2].map(|d| (((seed as usize + 7 * n + 3 * d) % 11) as f64) - 5.0))
                .collect();
            let s = FieldSampleSet::new(1.0, lat, (0..lat.len()).map(|n| lat.point(n)).collect(), b).unwrap();
            let f1 = interpolate_to_faces(&s, &g).unwrap();
            let f2 = interpolate_to_faces(&s.scaled(alpha), &g).unwrap();
            for (x, y) in f1.iter().zip(&f2) {
                prop_assert!((alpha * x - y).abs() <= 1e-14 * (1.0 + x.abs() * alpha.abs()));
            }
        }
    }
}
