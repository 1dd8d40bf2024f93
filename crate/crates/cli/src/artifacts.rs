//! Output layout: `<root>/<command>/<group>/<rho>/<hash>.<ext>`, where `<group>` is a
//! scenario name or a label such as `all`, and `<hash>` is the first 16 hex digits of the
//! config hash.

use std::fs;
use std::path::{Path, PathBuf};

use crate::CliError;

/// Directory label for an offset: `+0.200`, `-0.050`. Negative zero prints as `+0.000`.
pub fn rho_label(rho: f64) -> String {
    format!("{:+.3}", rho + 0.0)
}

#[derive(Debug, Clone)]
pub struct Artifacts {
    root: PathBuf,
    hash: String,
    written: Vec<PathBuf>,
}

impl Artifacts {
    pub fn new(root: &Path, hash: &str) -> Self {
        Self {
            root: root.to_path_buf(),
            hash: hash.to_string(),
            written: Vec::new(),
        }
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn path(&self, command: &str, group: &str, rho: &str, ext: &str) -> PathBuf {
        self.root
            .join(command)
            .join(group)
            .join(rho)
            .join(format!("{}.{ext}", &self.hash[..16]))
    }

    pub fn write(&mut self, path: PathBuf, bytes: &[u8]) -> Result<(), CliError> {
        let io_err = |source| CliError::Io { path: path.clone(), source };
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(io_err)?;
        }
        fs::write(&path, bytes).map_err(io_err)?;
        self.written.push(path);
        Ok(())
    }

    /// Writes a CSV whose first line is a `#` comment carrying the config hash and units,
    /// followed by whatever `body` emits (header row first).
    pub fn write_csv<F>(&mut self, path: PathBuf, units: &str, body: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    {
        let mut buf = format!("# config_hash={} units: {units}\n", self.hash).into_bytes();
        body(&mut buf).map_err(|source| CliError::Io { path: path.clone(), source })?;
        self.write(path, &buf)
    }

    pub fn into_written(self) -> Vec<PathBuf> {
        self.written
    }
}
