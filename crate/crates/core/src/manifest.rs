//! Run manifests and content-addressed artifact directories.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::Result;

pub const VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Hex SHA-256 of the normalized configuration text.
pub fn config_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    /// `run` or `sweep`.
    pub command: String,
    pub config: String,
    pub seed: u64,
}

impl Manifest {
    pub fn new(command: &str, config: String, seed: u64) -> Self {
        Self { command: command.into(), config, seed }
    }

    pub fn hash(&self) -> String {
        config_hash(&self.config)
    }

    /// First 16 hex digits, used as the directory name.
    pub fn short_hash(&self) -> String {
        self.hash()[..16].to_string()
    }

    /// Header lines followed by the configuration itself, so the file can be
    /// passed back to the producing command.
    pub fn render(&self) -> String {
        format!(
            "# command = {}\n# version = {}\n# config_sha256 = {}\n# seed = {}\n{}",
            self.command,
            VERSION,
            self.hash(),
            self.seed,
            self.config
        )
    }

    /// Creates `root/<kind>/<short hash>/` and writes `manifest.txt` there.
    pub fn materialize(&self, root: &Path, kind: &str) -> Result<PathBuf> {
        let dir = root.join(kind).join(self.short_hash());
        fs::create_dir_all(&dir)?;
        fs::write(dir.join("manifest.txt"), self.render())?;
        Ok(dir)
    }
}

/// Writes `name` together with `name` stem + `.schema.txt` describing
/// the columns.
pub fn write_csv(dir: &Path, name: &str, body: &str, schema: &[(&str, &str)]) -> Result<()> {
    fs::write(dir.join(name), body)?;
    let stem = name.trim_end_matches(".csv");
    let mut s = format!("# columns of {name}\n");
    for (col, doc) in schema {
        s.push_str(&format!("{col}: {doc}\n"));
    }
    fs::write(dir.join(format!("{stem}.schema.txt")), s)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = Manifest::new("run", "[run]\nseed = 1\n".into(), 1);
        assert_eq!(a.hash(), config_hash("[run]\nseed = 1\n"));
        assert_eq!(a.hash().len(), 64);
        assert_ne!(a.hash(), config_hash("[run]\nseed = 2\n"));
        assert!(a.render().ends_with("seed = 1\n"));
    }
}
