//! Phantom file format.
//!
//! ```text
//! format_version = 1
//! dims = nx ny nz
//! spacing_m = dx dy dz
//! origin_m = ox oy oz
//! tissue = <id> <name> <f1>:<k1> <f2>:<k2> ...
//! END_HEADER
//! <nx*ny*nz little-endian u16 tissue ids, x-fastest>
//! ```
//!
//! The same header also fronts field dumps, whose payload holds f64 values.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{ConductivitySamples, Tissue, VoxelModel};
use crate::error::{Error, Result};

const END_HEADER: &[u8] = b"END_HEADER\n";

#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub origin: [f64; 3],
    pub tissues: BTreeMap<u16, Tissue>,
}

impl Header {
    pub fn of(model: &VoxelModel) -> Self {
        Self {
            dims: model.dims(),
            spacing: model.spacing(),
            origin: model.origin(),
            tissues: model.tissue_table().clone(),
        }
    }

    pub fn voxel_count(&self) -> usize {
        self.dims.iter().product()
    }

    /// Canonical text form, including the terminating `END_HEADER` line.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let [nx, ny, nz] = self.dims;
        let [dx, dy, dz] = self.spacing;
        let [ox, oy, oz] = self.origin;
        let _ = writeln!(s, "format_version = 1");
        let _ = writeln!(s, "dims = {nx} {ny} {nz}");
        let _ = writeln!(s, "spacing_m = {dx} {dy} {dz}");
        let _ = writeln!(s, "origin_m = {ox} {oy} {oz}");
        for (id, t) in &self.tissues {
            let _ = write!(s, "tissue = {id} {}", t.name);
            for (f, k) in t.conductivity.samples() {
                let _ = write!(s, " {f}:{k}");
            }
            s.push('\n');
        }
        s.push_str("END_HEADER\n");
        s
    }
}

fn header_err(msg: impl Into<String>) -> Error {
    Error::MalformedHeader(msg.into())
}

fn parse_triple<T: std::str::FromStr>(key: &str, value: &str) -> Result<[T; 3]> {
    let parts: Vec<&str> = value.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(header_err(format!(
            "'{key}' needs 3 values, got {}",
            parts.len()
        )));
    }
    let mut out = Vec::with_capacity(3);
    for p in parts {
        out.push(
            p.parse::<T>()
                .map_err(|_| header_err(format!("'{key}': cannot parse '{p}'")))?,
        );
    }
    match out.try_into() {
        Ok(a) => Ok(a),
        Err(_) => unreachable!(),
    }
}

fn parse_tissue(value: &str) -> Result<(u16, Tissue)> {
    let mut parts = value.split_whitespace();
    let id = parts
        .next()
        .ok_or_else(|| header_err("tissue line without id"))?;
    let id: u16 = id
        .parse()
        .map_err(|_| header_err(format!("bad tissue id '{id}'")))?;
    let name = parts
        .next()
        .ok_or_else(|| header_err(format!("tissue {id} without name")))?;
    let mut samples = Vec::new();
    for tok in parts {
        let (f, k) = tok
            .split_once(':')
            .ok_or_else(|| header_err(format!("tissue {id}: sample '{tok}' is not f:k")))?;
        let f: f64 = f
            .parse()
            .map_err(|_| header_err(format!("tissue {id}: bad frequency '{f}'")))?;
        let k: f64 = k
            .parse()
            .map_err(|_| header_err(format!("tissue {id}: bad conductivity '{k}'")))?;
        samples.push((f, k));
    }
    Ok((id, Tissue::new(name, ConductivitySamples::new(samples)?)))
}

/// Parses the text header and returns it with the byte offset of the payload.
pub fn read_header(bytes: &[u8]) -> Result<(Header, usize)> {
    let end = bytes
        .windows(END_HEADER.len())
        .enumerate()
        .find(|&(i, w)| w == END_HEADER && (i == 0 || bytes[i - 1] == b'\n'))
        .map(|(i, _)| i)
        .ok_or_else(|| header_err("missing END_HEADER line"))?;
    let text = std::str::from_utf8(&bytes[..end]).map_err(|_| header_err("header is not UTF-8"))?;

    let mut version = None;
    let mut dims = None;
    let mut spacing = None;
    let mut origin = None;
    let mut tissues = BTreeMap::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| header_err(format!("line '{line}' is not key = value")))?;
        let (key, value) = (key.trim(), value.trim());
        let dup = || header_err(format!("duplicate key '{key}'"));
        match key {
            "format_version" => {
                if version.replace(value.to_string()).is_some() {
                    return Err(dup());
                }
            }
            "dims" => {
                if dims.replace(parse_triple::<usize>(key, value)?).is_some() {
                    return Err(dup());
                }
            }
            "spacing_m" => {
                if spacing.replace(parse_triple::<f64>(key, value)?).is_some() {
                    return Err(dup());
                }
            }
            "origin_m" => {
                if origin.replace(parse_triple::<f64>(key, value)?).is_some() {
                    return Err(dup());
                }
            }
            "tissue" => {
                let (id, t) = parse_tissue(value)?;
                if tissues.insert(id, t).is_some() {
                    return Err(header_err(format!("duplicate tissue id {id}")));
                }
            }
            other => return Err(header_err(format!("unknown key '{other}'"))),
        }
    }
    match version.as_deref() {
        Some("1") => {}
        Some(v) => return Err(header_err(format!("unsupported format_version '{v}'"))),
        None => return Err(header_err("missing format_version")),
    }
    let header = Header {
        dims: dims.ok_or_else(|| header_err("missing dims"))?,
        spacing: spacing.ok_or_else(|| header_err("missing spacing_m"))?,
        origin: origin.ok_or_else(|| header_err("missing origin_m"))?,
        tissues,
    };
    Ok((header, end + END_HEADER.len()))
}

/// Decodes a phantom from its file bytes.
pub fn parse_model(bytes: &[u8]) -> Result<VoxelModel> {
    let (header, offset) = read_header(bytes)?;
    let payload = &bytes[offset..];
    let n = header
        .dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| header_err("dims overflow"))?;
    let expected = n * 2;
    if payload.len() != expected {
        return Err(Error::PayloadSizeMismatch {
            expected,
            found: payload.len(),
        });
    }
    let ids = payload
        .chunks_exact(2)
        .map(|c| u16::from_le_bytes([c[0], c[1]]))
        .collect();
    VoxelModel::new(
        header.dims,
        header.spacing,
        header.origin,
        ids,
        header.tissues,
    )
}

pub fn load_model(path: impl AsRef<Path>) -> Result<VoxelModel> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_model(&bytes)
}

/// Canonical byte encoding of a phantom.
pub fn write_model(model: &VoxelModel) -> Vec<u8> {
    let header = Header::of(model).render();
    let mut out = Vec::with_capacity(header.len() + model.voxel_count() * 2);
    out.extend_from_slice(header.as_bytes());
    for id in model.tissue_ids() {
        out.extend_from_slice(&id.to_le_bytes());
    }
    out
}

pub fn save_model(model: &VoxelModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_model(model)).map_err(|e| Error::io(path, e))
}
