//! Binary dumps of fields, masks and labels, each with a JSON sidecar.
//!
//! Raw arrays are flat little-endian in the grid's native order (axis 0
//! fastest). Masks are written as binary PGM (`P5`, 2-D only).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldSample;
use crate::geometry::LabeledExcursion;

/// Describes the array stored next to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpSidecar {
    /// `"f64"` or `"u32"`.
    pub dtype: String,
    pub dims: Vec<usize>,
    /// Lattice coordinates of the first element.
    pub origin: Vec<i64>,
    pub spacing: f64,
    pub n: f64,
    pub epsilon: f64,
    #[serde(default)]
    pub kernel: Option<String>,
    #[serde(default)]
    pub master_seed: Option<u64>,
    #[serde(default)]
    pub replicate: Option<u64>,
    #[serde(default)]
    pub level: Option<f64>,
}

impl DumpSidecar {
    pub fn element_count(&self) -> Option<usize> {
        self.dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
    }

    fn check(&self, dtype: &str) -> Result<usize> {
        if self.dtype != dtype {
            return Err(Error::Parse(format!(
                "sidecar dtype is {:?}, expected {dtype:?}",
                self.dtype
            )));
        }
        if self.dims.is_empty() || self.dims.len() > 3 || self.origin.len() != self.dims.len() {
            return Err(Error::Parse(
                "sidecar dims/origin must have 1 to 3 equal-length entries".into(),
            ));
        }
        self.element_count()
            .ok_or_else(|| Error::Parse("sidecar dims overflow".into()))
    }
}

pub fn parse_sidecar(text: &str) -> Result<DumpSidecar> {
    Ok(serde_json::from_str(text)?)
}

fn sidecar_for(field: &FieldSample, dtype: &str, level: Option<f64>) -> DumpSidecar {
    let g = field.geometry();
    let grid = field.grid();
    DumpSidecar {
        dtype: dtype.into(),
        dims: grid.len[..g.dim].to_vec(),
        origin: grid.lo[..g.dim].to_vec(),
        spacing: g.spacing,
        n: g.n,
        epsilon: g.epsilon,
        kernel: field.kernel().map(|k| k.family().name().to_string()),
        master_seed: field.noise().map(|p| p.master_seed),
        replicate: field.noise().map(|p| p.replicate),
        level,
    }
}

pub fn encode_f64_le(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn decode_f64_le(bytes: &[u8]) -> Result<Vec<f64>> {
    if !bytes.len().is_multiple_of(8) {
        return Err(Error::Parse(format!(
            "{} bytes is not a whole number of f64 values",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

pub fn encode_u32_le(values: &[u32]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn decode_u32_le(bytes: &[u8]) -> Result<Vec<u32>> {
    if !bytes.len().is_multiple_of(4) {
        return Err(Error::Parse(format!(
            "{} bytes is not a whole number of u32 values",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

/// Checks an array against its sidecar and decodes it.
pub fn decode_field_dump(sidecar: &DumpSidecar, bytes: &[u8]) -> Result<Vec<f64>> {
    let count = sidecar.check("f64")?;
    let values = decode_f64_le(bytes)?;
    if values.len() != count {
        return Err(Error::Parse(format!(
            "sidecar promises {count} values, found {}",
            values.len()
        )));
    }
    Ok(values)
}

pub fn decode_label_dump(sidecar: &DumpSidecar, bytes: &[u8]) -> Result<Vec<u32>> {
    let count = sidecar.check("u32")?;
    let values = decode_u32_le(bytes)?;
    if values.len() != count {
        return Err(Error::Parse(format!(
            "sidecar promises {count} labels, found {}",
            values.len()
        )));
    }
    Ok(values)
}

fn with_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Writes `<stem>.f64` and `<stem>.json`.
pub fn write_field_dump(stem: &Path, field: &FieldSample) -> Result<()> {
    let side = sidecar_for(field, "f64", None);
    fs::write(with_ext(stem, "f64"), encode_f64_le(field.values()))?;
    fs::write(with_ext(stem, "json"), serde_json::to_string_pretty(&side)?)?;
    Ok(())
}

pub fn read_field_dump(stem: &Path) -> Result<(DumpSidecar, Vec<f64>)> {
    let side = parse_sidecar(&fs::read_to_string(with_ext(stem, "json"))?)?;
    let values = decode_field_dump(&side, &fs::read(with_ext(stem, "f64"))?)?;
    Ok((side, values))
}

/// Writes `<stem>.u32` (component labels, `u32::MAX` for background) and
/// `<stem>.json`.
pub fn write_label_dump(stem: &Path, field: &FieldSample, lab: &LabeledExcursion) -> Result<()> {
    let side = sidecar_for(field, "u32", Some(lab.level()));
    fs::write(with_ext(stem, "u32"), encode_u32_le(lab.labels()))?;
    fs::write(with_ext(stem, "json"), serde_json::to_string_pretty(&side)?)?;
    Ok(())
}

pub fn read_label_dump(stem: &Path) -> Result<(DumpSidecar, Vec<u32>)> {
    let side = parse_sidecar(&fs::read_to_string(with_ext(stem, "json"))?)?;
    let labels = decode_label_dump(&side, &fs::read(with_ext(stem, "u32"))?)?;
    Ok((side, labels))
}

/// An 8-bit greyscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u8,
    /// Row-major, first row first.
    pub pixels: Vec<u8>,
}

impl Pgm {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n{}\n", self.width, self.height, self.maxval).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }
}

/// Mask of the selected sites as a PGM (255 selected, 0 otherwise). The
/// first image row is the lowest `y`.
pub fn mask_pgm(lab: &LabeledExcursion) -> Result<Pgm> {
    let grid = lab.grid();
    if grid.dim != 2 {
        return Err(Error::UnsupportedDimension(grid.dim));
    }
    let pixels = grid
        .points()
        .map(|p| if lab.in_selected_component(p) { 255 } else { 0 })
        .collect();
    Ok(Pgm {
        width: grid.len[0],
        height: grid.len[1],
        maxval: 255,
        pixels,
    })
}

/// Maximum number of pixels accepted by [`parse_pgm`].
pub const MAX_PGM_PIXELS: usize = 1 << 28;

/// Parses a binary (`P5`) PGM with `maxval < 256`. Comments are allowed in
/// the header.
pub fn parse_pgm(bytes: &[u8]) -> Result<Pgm> {
    let mut pos = 0usize;
    let mut token = || -> Result<&[u8]> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Parse("truncated PGM header".into()));
        }
        Ok(&bytes[start..pos])
    };
    if token()? != b"P5" {
        return Err(Error::Parse("not a binary PGM (missing P5 magic)".into()));
    }
    let mut number = |what: &str| -> Result<usize> {
        let t = token()?;
        std::str::from_utf8(t)
            .ok()
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| Error::Parse(format!("bad PGM {what}")))
    };
    let width = number("width")?;
    let height = number("height")?;
    let maxval = number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::Parse("PGM has zero size".into()));
    }
    if maxval == 0 || maxval > 255 {
        return Err(Error::Parse(format!("unsupported PGM maxval {maxval}")));
    }
    let count = width
        .checked_mul(height)
        .filter(|&c| c <= MAX_PGM_PIXELS)
        .ok_or_else(|| Error::Parse("PGM too large".into()))?;
    // Exactly one whitespace byte separates the header from the raster.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::Parse("missing raster separator".into()));
    }
    let raster = &bytes[pos + 1..];
    if raster.len() != count {
        return Err(Error::Parse(format!(
            "expected {count} raster bytes, found {}",
            raster.len()
        )));
    }
    if let Some(&v) = raster.iter().find(|&&v| v as usize > maxval) {
        return Err(Error::Parse(format!(
            "pixel value {v} exceeds maxval {maxval}"
        )));
    }
    Ok(Pgm {
        width,
        height,
        maxval: maxval as u8,
        pixels: raster.to_vec(),
    })
}
