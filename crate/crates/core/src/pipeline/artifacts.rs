use crate::error::{Error, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const MANIFEST: &str = "manifest.json";

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    if let Some(dir) = path.parent() {
        ensure_dir(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Rows of a CSV file with its header, as strings.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let header = r.headers()?.iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(String::from).collect()))
        .collect::<std::result::Result<_, _>>()?;
    Ok((header, rows))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        ensure_dir(dir)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Reads a JSON artifact. A malformed file is a data problem, not a config one.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Misaligned(format!("{}: {e}", path.display())))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Provenance of an output tree. Contains no timestamps, so identical runs
/// produce identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config_sha256: String,
    pub seed: u64,
    /// Parameters and derived seeds of each stage that has run.
    pub stages: BTreeMap<String, serde_json::Value>,
    /// SHA-256 of every other file in the tree, by relative path.
    pub files: BTreeMap<String, String>,
}

fn list_files(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_dir() {
            list_files(root, &path, out)?;
        } else if path != root.join(MANIFEST) {
            out.push(path);
        }
    }
    Ok(())
}

/// Records `stage` in `<out>/manifest.json` and refreshes the file hashes.
/// Entries from a run with a different config or seed are dropped.
pub fn update_manifest(
    out: &Path,
    config_sha256: &str,
    seed: u64,
    stage: &str,
    params: serde_json::Value,
) -> Result<()> {
    let path = out.join(MANIFEST);
    let mut m: Manifest = if path.exists() {
        read_json(&path)?
    } else {
        Manifest::default()
    };
    if m.config_sha256 != config_sha256 || m.seed != seed {
        m.stages.clear();
    }
    m.tool = env!("CARGO_PKG_NAME").into();
    m.version = env!("CARGO_PKG_VERSION").into();
    m.config_sha256 = config_sha256.into();
    m.seed = seed;
    m.stages.insert(stage.into(), params);
    let mut files = Vec::new();
    list_files(out, out, &mut files)?;
    m.files = files
        .iter()
        .map(|f| {
            let bytes = std::fs::read(f).map_err(|e| Error::io(f, e))?;
            let rel = f.strip_prefix(out).expect("listed under out");
            let key = rel
                .components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("/");
            Ok((key, sha256_hex(&bytes)))
        })
        .collect::<Result<_>>()?;
    write_json(&path, &m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path();
        write_csv(
            &out.join("a/b.csv"),
            &["x", "y"],
            vec![vec!["1".into(), "<0.005".into()]],
        )
        .unwrap();
        let (h, rows) = read_csv(&out.join("a/b.csv")).unwrap();
        assert_eq!(h, ["x", "y"]);
        assert_eq!(rows, vec![vec!["1".to_string(), "<0.005".to_string()]]);
        update_manifest(out, "abc", 1, "s1", serde_json::json!({"k": 1})).unwrap();
        let m: Manifest = read_json(&out.join(MANIFEST)).unwrap();
        assert_eq!(m.files.len(), 1);
        assert!(m.files.contains_key("a/b.csv"));
        update_manifest(out, "other", 1, "s2", serde_json::json!(null)).unwrap();
        let m: Manifest = read_json(&out.join(MANIFEST)).unwrap();
        assert_eq!(m.stages.keys().collect::<Vec<_>>(), ["s2"]);
    }
}
