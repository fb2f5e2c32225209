use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::spectrum::{assign_groups, GeodesicClass, SpectrumMeta, SpectrumTable};
use super::surface::{format_word, parse_word, SurfaceModel};
use super::FuchsianError;

const HEADER: [&str; 5] = ["canonical_word", "trace_abs", "length", "primitive", "multiplicity_group_id"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheFiles {
    pub csv: PathBuf,
    pub json: PathBuf,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    meta: SpectrumMeta,
    csv_sha256: String,
}

pub fn spectrum_paths(dir: &Path, surface: &str, cutoff: f64) -> CacheFiles {
    let stem = format!("spectrum_{surface}_R{cutoff}");
    CacheFiles { csv: dir.join(format!("{stem}.csv")), json: dir.join(format!("{stem}.json")) }
}

fn io(e: impl std::fmt::Display) -> FuchsianError {
    FuchsianError::Cache(e.to_string())
}

fn csv_bytes(t: &SpectrumTable) -> Result<Vec<u8>, FuchsianError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(HEADER).map_err(io)?;
    for c in &t.classes {
        w.write_record([
            format_word(&c.canonical_word),
            c.trace_abs.to_string(),
            c.length.to_string(),
            c.primitive.to_string(),
            c.group_id.to_string(),
        ])
        .map_err(io)?;
    }
    w.into_inner().map_err(io)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes the CSV table and its JSON sidecar (metadata and CSV hash).
pub fn save_spectrum(t: &SpectrumTable, dir: &Path) -> Result<CacheFiles, FuchsianError> {
    fs::create_dir_all(dir).map_err(io)?;
    let files = spectrum_paths(dir, &t.meta.surface, t.meta.cutoff);
    let bytes = csv_bytes(t)?;
    let side = Sidecar { meta: t.meta.clone(), csv_sha256: sha256_hex(&bytes) };
    fs::write(&files.csv, &bytes).map_err(io)?;
    fs::write(&files.json, serde_json::to_string_pretty(&side).map_err(io)?).map_err(io)?;
    Ok(files)
}

/// Reads a cached table; fails when the sidecar hash or surface does not match.
pub fn load_spectrum(s: &SurfaceModel, files: &CacheFiles) -> Result<SpectrumTable, FuchsianError> {
    let bytes = fs::read(&files.csv).map_err(io)?;
    let side: Sidecar = serde_json::from_slice(&fs::read(&files.json).map_err(io)?).map_err(io)?;
    if sha256_hex(&bytes) != side.csv_sha256 {
        return Err(FuchsianError::Cache("CSV hash does not match its sidecar".into()));
    }
    if side.meta.surface != s.name {
        return Err(FuchsianError::Cache(format!("cache is for surface {:?}", side.meta.surface)));
    }
    let mut r = csv::Reader::from_reader(bytes.as_slice());
    if r.headers().map_err(io)?.iter().ne(HEADER) {
        return Err(FuchsianError::Cache("unexpected CSV header".into()));
    }
    let mut classes = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(io)?;
        let field = |i: usize| rec.get(i).ok_or_else(|| FuchsianError::Cache("short CSV row".into()));
        let num = |i: usize| -> Result<f64, FuchsianError> { field(i)?.parse::<f64>().map_err(io) };
        let word = parse_word(field(0)?)?;
        let mut c = GeodesicClass::from_word(s, word, field(3)?.parse::<bool>().map_err(io)?, 0)?;
        c.trace_abs = num(1)?;
        c.length = num(2)?;
        c.group_id = field(4)?.parse::<usize>().map_err(io)?;
        classes.push(c);
    }
    let stored: Vec<usize> = classes.iter().map(|c| c.group_id).collect();
    let groups = assign_groups(&mut classes);
    if classes.iter().map(|c| c.group_id).ne(stored) {
        return Err(FuchsianError::Cache("multiplicity groups do not match the lengths".into()));
    }
    Ok(SpectrumTable { meta: side.meta, classes, groups })
}

#[cfg(test)]
mod tests {
    use super::super::spectrum::build_spectrum;
    use super::*;

    #[test]
    fn round_trip_and_tamper() {
        let s = SurfaceModel::bolza();
        let t = build_spectrum(&s, 6.2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let files = save_spectrum(&t, dir.path()).unwrap();
        assert_eq!(files, spectrum_paths(dir.path(), "bolza", 6.2));
        let back = load_spectrum(&s, &files).unwrap();
        assert_eq!(back.classes.len(), t.classes.len());
        for (a, b) in back.classes.iter().zip(&t.classes) {
            assert_eq!(a.canonical_word, b.canonical_word);
            assert_eq!(a.length.to_bits(), b.length.to_bits());
            assert_eq!(a.group_id, b.group_id);
            assert_eq!(a.primitive, b.primitive);
        }
        assert_eq!(back.groups, t.groups);
        let mut text = fs::read_to_string(&files.csv).unwrap();
        text.push_str("aB,1,1,true,0\n");
        fs::write(&files.csv, text).unwrap();
        assert!(matches!(load_spectrum(&s, &files), Err(FuchsianError::Cache(_))));
    }
}
