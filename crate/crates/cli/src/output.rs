//! Atomic file output.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::config::OutputFormat;
use crate::report::{RunReport, Table};

/// Writes `bytes` to a temporary file in the destination directory and
/// renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Writes `<command>.json` and one `<command>_<table>.csv` per table.
/// Returns the paths written, in order.
pub fn write_outputs(
    dir: &Path,
    report: &RunReport,
    tables: &[Table],
    format: OutputFormat,
) -> Result<Vec<PathBuf>, (PathBuf, std::io::Error)> {
    let mut written = Vec::new();
    if format.json() {
        let path = dir.join(format!("{}.json", report.command));
        write_atomic(&path, report.to_json().as_bytes()).map_err(|e| (path.clone(), e))?;
        written.push(path);
    }
    if format.csv() {
        for t in tables {
            let path = dir.join(format!("{}_{}.csv", report.command, t.name));
            write_atomic(&path, &t.to_csv()).map_err(|e| (path.clone(), e))?;
            written.push(path);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("nested").join("a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        let leftovers = std::fs::read_dir(p.parent().unwrap()).unwrap().count();
        assert_eq!(leftovers, 1);
    }
}
