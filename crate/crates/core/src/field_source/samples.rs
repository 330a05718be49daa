//! Field sample file.
//!
//! ```text
//! frequency_hz = 85000
//! lattice_dims = nx ny nz
//! lattice_origin_m = ox oy oz
//! lattice_spacing_m = dx dy dz
//! x y z Bx By Bz
//! ...
//! ```

use std::fmt::Write as _;
use std::path::Path;

use super::{FieldSampleSet, Lattice};
use crate::error::{Error, Result};

pub fn samples_to_string(s: &FieldSampleSet) -> String {
    let l = &s.lattice;
    let mut out = String::new();
    let _ = writeln!(out, "frequency_hz = {}", s.frequency_hz);
    let _ = writeln!(
        out,
        "lattice_dims = {} {} {}",
        l.dims[0], l.dims[1], l.dims[2]
    );
    let _ = writeln!(
        out,
        "lattice_origin_m = {} {} {}",
        l.origin[0], l.origin[1], l.origin[2]
    );
    let _ = writeln!(
        out,
        "lattice_spacing_m = {} {} {}",
        l.spacing[0], l.spacing[1], l.spacing[2]
    );
    for (p, b) in s.positions.iter().zip(&s.b) {
        let _ = writeln!(out, "{} {} {} {} {} {}", p[0], p[1], p[2], b[0], b[1], b[2]);
    }
    out
}

fn triple<T: std::str::FromStr>(key: &str, v: &str) -> Result<[T; 3]> {
    let parts: Vec<T> = v
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| Error::MalformedSamples(format!("bad value '{t}' for {key}")))
        })
        .collect::<Result<_>>()?;
    parts
        .try_into()
        .map_err(|_| Error::MalformedSamples(format!("{key} needs three values")))
}

pub fn parse_samples(text: &str) -> Result<FieldSampleSet> {
    let mut freq = None;
    let mut dims = None;
    let mut origin = None;
    let mut spacing = None;
    let mut positions = Vec::new();
    let mut b = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some((k, v)) = line.split_once('=') {
            if !positions.is_empty() {
                return Err(Error::MalformedSamples(format!(
                    "line {}: header after data",
                    ln + 1
                )));
            }
            let (k, v) = (k.trim(), v.trim());
            let dup = match k {
                "frequency_hz" => freq
                    .replace(
                        v.parse::<f64>()
                            .map_err(|_| Error::MalformedSamples(format!("bad frequency '{v}'")))?,
                    )
                    .is_some(),
                "lattice_dims" => dims.replace(triple::<usize>(k, v)?).is_some(),
                "lattice_origin_m" => origin.replace(triple::<f64>(k, v)?).is_some(),
                "lattice_spacing_m" => spacing.replace(triple::<f64>(k, v)?).is_some(),
                _ => return Err(Error::MalformedSamples(format!("unknown key '{k}'"))),
            };
            if dup {
                return Err(Error::MalformedSamples(format!("duplicate key '{k}'")));
            }
            continue;
        }
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| {
                t.parse().map_err(|_| {
                    Error::MalformedSamples(format!("line {}: bad number '{t}'", ln + 1))
                })
            })
            .collect::<Result<_>>()?;
        if vals.len() != 6 {
            return Err(Error::MalformedSamples(format!(
                "line {}: expected 6 values, found {}",
                ln + 1,
                vals.len()
            )));
        }
        positions.push([vals[0], vals[1], vals[2]]);
        b.push([vals[3], vals[4], vals[5]]);
    }
    let missing = |k: &str| Error::MalformedSamples(format!("missing key '{k}'"));
    let lattice = Lattice::new(
        origin.ok_or_else(|| missing("lattice_origin_m"))?,
        spacing.ok_or_else(|| missing("lattice_spacing_m"))?,
        dims.ok_or_else(|| missing("lattice_dims"))?,
    )?;
    FieldSampleSet::new(
        freq.ok_or_else(|| missing("frequency_hz"))?,
        lattice,
        positions,
        b,
    )
}

pub fn load_samples(path: impl AsRef<Path>) -> Result<FieldSampleSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_samples(&text)
}

pub fn save_samples(path: impl AsRef<Path>, s: &FieldSampleSet) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, samples_to_string(s)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_source::{sample_on_lattice, CoilSpec};

    #[test]
    fn round_trip_is_exact() {
        let coil = CoilSpec::new([0.013, 0.0, -0.2], [0.0, 0.3, 1.0], 0.07, 2.5, 32).unwrap();
        let lat = Lattice::new([-0.05, -0.04, -0.03], [0.025, 0.02, 0.015], [5, 4, 3]).unwrap();
        let s = sample_on_lattice(&coil, lat, 85e3).unwrap();
        let back = parse_samples(&samples_to_string(&s)).unwrap();
        assert_eq!(back, s);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.txt");
        save_samples(&path, &s).unwrap();
        assert_eq!(load_samples(&path).unwrap(), s);
    }

    #[test]
    fn malformed_files() {
        let head = "frequency_hz = 1\nlattice_dims = 1 1 1\nlattice_origin_m = 0 0 0\nlattice_spacing_m = 1 1 1\n";
        assert!(parse_samples(&format!("{head}0 0 0 1 2 3\n")).is_ok());
        assert!(parse_samples(&format!("{head}0 0 0 1 2\n")).is_err());
        assert!(parse_samples(head).is_err());
        assert!(parse_samples(&format!("{head}color = red\n0 0 0 1 2 3\n")).is_err());
        assert!(parse_samples("lattice_dims = 1 1 1\n0 0 0 1 2 3\n").is_err());
        assert!(matches!(
            load_samples("/nonexistent/b.txt"),
            Err(Error::Io { .. })
        ));
    }
}
