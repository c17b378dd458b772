//! Reading matrices, sections, lattices and regions, recording a digest of
//! every file in the manifest.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde_json::Value;
use sha2::{Digest, Sha256};
use xsect_core::shaping::ShapedSection;
use xsect_core::{CrossSection, Lattice, Matrix, RegionSet};

use crate::output::{CliError, CliResult, RunManifest};

/// Reads `path`, records its SHA-256 under `flag` and parses it as JSON.
/// A CLI output envelope `{"manifest", "result"}` is unwrapped.
pub fn read_json(manifest: &mut RunManifest, flag: &str, path: &Path) -> CliResult<Value> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    manifest.inputs.insert(flag.to_string(), hex::encode(Sha256::digest(&bytes)));
    let v: Value = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Parse(format!("{} is not valid JSON: {e}", path.display())))?;
    Ok(unwrap_envelope(v))
}

fn unwrap_envelope(v: Value) -> Value {
    match v {
        Value::Object(mut m) if m.contains_key("result") && m.contains_key("manifest") => {
            m.remove("result").unwrap_or(Value::Null)
        }
        other => other,
    }
}

fn parse<T: DeserializeOwned>(v: Value, what: &str, path: &Path) -> CliResult<T> {
    serde_json::from_value(v).map_err(|e| CliError::Parse(format!("{} is not a valid {what}: {e}", path.display())))
}

/// A matrix as `[[…], …]`, `{"n", "rows"}` or `{"matrix": …}`.
pub fn read_matrix(manifest: &mut RunManifest, flag: &str, path: &Path) -> CliResult<Matrix> {
    let v = read_json(manifest, flag, path)?;
    matrix_value(v, path)
}

fn matrix_value(v: Value, path: &Path) -> CliResult<Matrix> {
    match v {
        Value::Array(_) => {
            let rows: Vec<Vec<f64>> = parse(v, "matrix", path)?;
            Ok(Matrix::from_rows(&rows)?)
        }
        Value::Object(mut m) if m.contains_key("matrix") => matrix_value(m.remove("matrix").unwrap(), path),
        other => parse(other, "matrix", path),
    }
}

pub fn read_lattice(manifest: &mut RunManifest, path: &Path) -> CliResult<Lattice> {
    let v = read_json(manifest, "lattice", path)?;
    parse(v, "lattice", path)
}

pub fn read_region(manifest: &mut RunManifest, path: &Path) -> CliResult<RegionSet> {
    let v = read_json(manifest, "region", path)?;
    let r: RegionSet = parse(v, "region", path)?;
    r.validate()?;
    Ok(r)
}

/// A plain or shaped cross-section.
pub enum LoadedSection {
    Plain(CrossSection),
    Shaped(ShapedSection),
}

impl LoadedSection {
    pub fn base(&self) -> &CrossSection {
        match self {
            LoadedSection::Plain(s) => s,
            LoadedSection::Shaped(s) => &s.base,
        }
    }
}

pub fn read_section(manifest: &mut RunManifest, path: &Path) -> CliResult<LoadedSection> {
    let v = read_json(manifest, "section", path)?;
    if v.get("target").is_some() && v.get("base").is_some() {
        Ok(LoadedSection::Shaped(parse(v, "shaped section", path)?))
    } else {
        Ok(LoadedSection::Plain(parse(v, "cross-section", path)?))
    }
}

/// Parses `"x1,...,xn"`.
pub fn parse_point(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Usage(format!("bad coordinate '{t}' in point '{s}'")))
        })
        .collect()
}
