//! Report text and field dump files.
//!
//! The field dump reuses the phantom header; its payload holds one
//! little-endian f64 per voxel (x-fastest), with NaN for voxels outside the
//! conductive region.

use std::fmt::Write as _;
use std::path::Path;

use super::ExposureReport;
use crate::error::{Error, Result};
use crate::voxel_model::{read_header, Header, VoxelModel};

pub fn report_to_string(r: &ExposureReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "p99_vpm = {}", r.percentile99);
    let _ = writeln!(s, "max_vpm = {}", r.max);
    let _ = writeln!(s, "n_voxels = {}", r.voxel_field.len());
    let _ = writeln!(s, "frequency_hz = {}", r.frequency_hz);
    let _ = writeln!(s, "solver_iterations = {}", r.solve.iterations);
    let _ = writeln!(s, "solve_seconds = {}", r.solve.solve_seconds);
    let _ = writeln!(s, "setup_seconds = {}", r.solve.setup_seconds);
    let _ = writeln!(s, "rel_tol = {:e}", r.rel_tol);
    let _ = writeln!(s, "rel_residual = {:e}", r.solve.rel_residual);
    let _ = writeln!(s, "converged = {}", r.solve.converged);
    let _ = writeln!(s, "dofs = {}", r.dofs);
    let levels: Vec<String> = r.solve.level_sizes.iter().map(|n| n.to_string()).collect();
    let _ = writeln!(s, "amg_levels = {}", levels.join(" "));
    let _ = writeln!(s, "memory_bytes = {}", r.solve.memory_bytes);
    let _ = writeln!(s, "values = {}", if r.rms { "rms" } else { "amplitude" });
    for t in &r.tissues {
        let _ = writeln!(
            s,
            "tissue {} {} {} {} {} {}",
            t.id, t.name, t.count, t.mean, t.max, t.p99
        );
    }
    s
}

pub fn write_report(path: impl AsRef<Path>, r: &ExposureReport) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, report_to_string(r)).map_err(|e| Error::io(path, e))
}

pub fn field_dump_bytes(model: &VoxelModel, r: &ExposureReport) -> Vec<u8> {
    let mut full = vec![f64::NAN; model.voxel_count()];
    for (&i, &v) in r.voxel_indices.iter().zip(&r.voxel_field) {
        full[i] = v;
    }
    let header = Header::of(model).render();
    let mut out = Vec::with_capacity(header.len() + full.len() * 8);
    out.extend_from_slice(header.as_bytes());
    for v in full {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn write_field_dump(
    path: impl AsRef<Path>,
    model: &VoxelModel,
    r: &ExposureReport,
) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, field_dump_bytes(model, r)).map_err(|e| Error::io(path, e))
}

pub fn parse_field_dump(bytes: &[u8]) -> Result<(Header, Vec<f64>)> {
    let (header, offset) = read_header(bytes)?;
    let payload = &bytes[offset..];
    let expected = header.voxel_count() * 8;
    if payload.len() != expected {
        return Err(Error::PayloadSizeMismatch {
            expected,
            found: payload.len(),
        });
    }
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok((header, values))
}

pub fn read_field_dump(path: impl AsRef<Path>) -> Result<(Header, Vec<f64>)> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_field_dump(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dosimetry::VoxelField;
    use crate::linsolve::SolveReport;
    use crate::voxel_model::{make_phantom, PhantomParams};

    fn report() -> (VoxelModel, ExposureReport) {
        let p = PhantomParams {
            radius: 0.0035,
            kappas: vec![0.2],
            ..Default::default()
        };
        let m = make_phantom("sphere", [4, 4, 4], [0.002; 3], &p).unwrap();
        let indices: Vec<usize> = (0..m.voxel_count())
            .filter(|&v| m.tissue_ids()[v] != 0)
            .collect();
        let values = indices.iter().map(|&v| v as f64 * 0.5).collect();
        let r = ExposureReport::new(
            &m,
            85e3,
            VoxelField { indices, values },
            false,
            42,
            1e-12,
            SolveReport::default(),
        )
        .unwrap();
        (m, r)
    }

    #[test]
    fn report_has_required_keys() {
        let (_, r) = report();
        let text = report_to_string(&r);
        for key in [
            "p99_vpm",
            "max_vpm",
            "n_voxels",
            "frequency_hz",
            "solver_iterations",
            "solve_seconds",
        ] {
            assert!(
                text.lines().any(|l| l.starts_with(&format!("{key} = "))),
                "{key}"
            );
        }
        assert!(text.contains("rel_tol = 1e-12"));
        let tissue: Vec<&str> = text.lines().filter(|l| l.starts_with("tissue ")).collect();
        assert_eq!(tissue.len(), 1);
        assert_eq!(tissue[0].split_whitespace().count(), 7);
    }

    #[test]
    fn field_dump_round_trip() {
        let (m, r) = report();
        let (h, v) = parse_field_dump(&field_dump_bytes(&m, &r)).unwrap();
        assert_eq!(h, Header::of(&m));
        let finite: Vec<(usize, f64)> = v
            .iter()
            .copied()
            .enumerate()
            .filter(|(_, x)| !x.is_nan())
            .collect();
        assert_eq!(finite.len(), r.voxel_indices.len());
        for ((i, x), (&j, &y)) in finite
            .iter()
            .zip(r.voxel_indices.iter().zip(&r.voxel_field))
        {
            assert_eq!((*i, *x), (j, y));
        }
        let mut bytes = field_dump_bytes(&m, &r);
        bytes.pop();
        assert!(matches!(
            parse_field_dump(&bytes),
            Err(Error::PayloadSizeMismatch { .. })
        ));
    }
}
