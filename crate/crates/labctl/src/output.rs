use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use sha2::{Digest, Sha256};

use crate::CliError;

/// Name of the pointer file written next to every output directory.
pub const LATEST: &str = "latest";

pub fn config_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .take(6)
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// `<root>/<hash>-<unix seconds>[-n]/`, with `<root>/latest` naming it.
#[derive(Debug, Clone)]
pub struct OutputDir {
    pub path: PathBuf,
}

impl OutputDir {
    pub fn create(root: &Path, key: &str) -> Result<Self, CliError> {
        fs::create_dir_all(root)?;
        let secs = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let stem = format!("{}-{secs}", config_hash(key));
        let mut name = stem.clone();
        let mut n = 1;
        while root.join(&name).exists() {
            name = format!("{stem}-{n}");
            n += 1;
        }
        let path = root.join(&name);
        fs::create_dir_all(&path)?;
        fs::write(root.join(LATEST), format!("{name}\n"))?;
        Ok(Self { path })
    }

    /// Directory named by `<root>/latest`.
    pub fn latest(root: &Path) -> Option<PathBuf> {
        let name = fs::read_to_string(root.join(LATEST)).ok()?;
        Some(root.join(name.trim()))
    }

    pub fn file(&self, rel: &str) -> Result<BufWriter<File>, CliError> {
        let p = self.path.join(rel);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent)?;
        }
        Ok(BufWriter::new(File::create(p)?))
    }

    pub fn write(&self, rel: &str, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
        let p = self.path.join(rel);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(p, bytes)?;
        Ok(())
    }

    pub fn write_json<T: serde::Serialize>(&self, rel: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Output(e.to_string()))?;
        text.push('\n');
        self.write(rel, text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_short() {
        assert_eq!(config_hash("a"), config_hash("a"));
        assert_ne!(config_hash("a"), config_hash("b"));
        assert_eq!(config_hash("").len(), 12);
        assert_eq!(config_hash(""), "e3b0c44298fc");
    }

    #[test]
    fn directories_do_not_collide() {
        let root = tempfile::tempdir().unwrap();
        let a = OutputDir::create(root.path(), "k").unwrap();
        let b = OutputDir::create(root.path(), "k").unwrap();
        assert_ne!(a.path, b.path);
        assert_eq!(OutputDir::latest(root.path()).unwrap(), b.path);
        b.write("x/y.txt", "hi").unwrap();
        assert_eq!(fs::read_to_string(b.path.join("x/y.txt")).unwrap(), "hi");
    }
}
