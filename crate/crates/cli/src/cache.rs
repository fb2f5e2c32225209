//! Spectrum cache with a create-exclusive lock sentinel per table.

use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use geocount::fuchsian::{build_spectrum, load_spectrum, save_spectrum, spectrum_paths, SpectrumTable, SurfaceModel};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const LOCK_WAIT: Duration = Duration::from_secs(600);
const LOCK_POLL: Duration = Duration::from_millis(200);

pub struct LockGuard {
    path: PathBuf,
}

impl LockGuard {
    /// Creates `path` exclusively, waiting up to `wait` for another holder.
    pub fn acquire(path: &Path, wait: Duration) -> Result<Self, CliError> {
        let start = Instant::now();
        loop {
            match OpenOptions::new().write(true).create_new(true).open(path) {
                Ok(_) => return Ok(Self { path: path.to_path_buf() }),
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                    if start.elapsed() >= wait {
                        return Err(CliError::Io(format!("cache lock {} is held", path.display())));
                    }
                    std::thread::sleep(LOCK_POLL);
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
}

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CacheStatus {
    pub csv: PathBuf,
    pub json: PathBuf,
    pub csv_sha256: String,
    pub hit: bool,
    /// A cached table existed but failed its integrity check.
    pub rebuilt: bool,
}

pub fn file_sha256(path: &Path) -> Result<String, CliError> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

/// Loads the table for `(surface, radius)` from `dir`, building and saving it
/// when missing or when the sidecar hash does not match.
pub fn load_or_build(s: &SurfaceModel, radius: f64, dir: &Path) -> Result<(SpectrumTable, CacheStatus), CliError> {
    fs::create_dir_all(dir)?;
    let files = spectrum_paths(dir, &s.name, radius);
    let _lock = LockGuard::acquire(&files.csv.with_extension("lock"), LOCK_WAIT)?;
    let mut rebuilt = false;
    if files.csv.exists() && files.json.exists() {
        match load_spectrum(s, &files) {
            Ok(t) if t.meta.cutoff == radius => {
                let csv_sha256 = file_sha256(&files.csv)?;
                return Ok((t, CacheStatus { csv: files.csv, json: files.json, csv_sha256, hit: true, rebuilt }));
            }
            Ok(_) => rebuilt = true,
            Err(e) => {
                eprintln!("cache {} rejected ({e}); rebuilding", files.csv.display());
                rebuilt = true;
            }
        }
    }
    let t = build_spectrum(s, radius)?;
    save_spectrum(&t, dir)?;
    let csv_sha256 = file_sha256(&files.csv)?;
    Ok((t, CacheStatus { csv: files.csv, json: files.json, csv_sha256, hit: false, rebuilt }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lock_is_exclusive_and_released() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.lock");
        let g = LockGuard::acquire(&p, Duration::ZERO).unwrap();
        assert!(matches!(LockGuard::acquire(&p, Duration::ZERO), Err(CliError::Io(_))));
        drop(g);
        assert!(!p.exists());
        LockGuard::acquire(&p, Duration::ZERO).unwrap();
    }

    #[test]
    fn second_load_hits_and_tamper_rebuilds() {
        let s = SurfaceModel::bolza();
        let dir = tempfile::tempdir().unwrap();
        let (_, a) = load_or_build(&s, 6.5, dir.path()).unwrap();
        assert!(!a.hit);
        let (_, b) = load_or_build(&s, 6.5, dir.path()).unwrap();
        assert!(b.hit && !b.rebuilt);
        assert_eq!(a.csv_sha256, b.csv_sha256);
        let mut text = fs::read_to_string(&a.csv).unwrap();
        text.push_str("a,1,1,true,0\n");
        fs::write(&a.csv, text).unwrap();
        let (_, c) = load_or_build(&s, 6.5, dir.path()).unwrap();
        assert!(!c.hit && c.rebuilt);
        assert_eq!(c.csv_sha256, a.csv_sha256);
    }
}
