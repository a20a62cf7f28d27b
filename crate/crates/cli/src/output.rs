//! Output files. Each CSV starts with a `#` metadata line followed by the
//! header row; each JSON document carries a `meta` object.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const TOOL: &str = "projband";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config_sha256: String,
    pub seed: u64,
    pub config: serde_json::Value,
}

impl Meta {
    pub fn new<C: Serialize>(command: &'static str, config: &C, seed: u64) -> Self {
        let config = serde_json::to_value(config).expect("config serialises");
        let canonical = serde_json::to_string(&config).expect("value serialises");
        Self {
            tool: TOOL,
            version: VERSION,
            command,
            config_sha256: hex::encode(Sha256::digest(canonical.as_bytes())),
            seed,
            config,
        }
    }

    pub fn csv_line(&self) -> String {
        format!(
            "# tool={} version={} command={} config_sha256={} seed={}",
            self.tool, self.version, self.command, self.config_sha256, self.seed
        )
    }
}

pub struct OutDir {
    root: PathBuf,
    meta: Meta,
    written: Vec<PathBuf>,
}

impl OutDir {
    pub fn create(root: &Path, meta: Meta) -> Result<Self, CliError> {
        std::fs::create_dir_all(root)
            .map_err(|e| CliError::Usage(format!("cannot create output directory {}: {e}", root.display())))?;
        Ok(Self {
            root: root.to_path_buf(),
            meta,
            written: Vec::new(),
        })
    }

    /// Writes `name` with the metadata line, then whatever `body` emits
    /// (header row first).
    pub fn csv<F>(&mut self, name: &str, body: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut dyn Write) -> Result<(), CliError>,
    {
        let path = self.root.join(name);
        let mut w = BufWriter::new(File::create(&path)?);
        writeln!(w, "{}", self.meta.csv_line())?;
        body(&mut w)?;
        w.flush()?;
        self.written.push(path);
        Ok(())
    }

    /// Writes `{"meta": …, "result": …}`.
    pub fn json<T: Serialize>(&mut self, name: &str, result: &T) -> Result<(), CliError> {
        #[derive(Serialize)]
        struct Doc<'a, T> {
            meta: &'a Meta,
            result: &'a T,
        }
        let path = self.root.join(name);
        let mut text = serde_json::to_string_pretty(&Doc {
            meta: &self.meta,
            result,
        })
        .expect("plain data serialises");
        text.push('\n');
        std::fs::write(&path, text)?;
        self.written.push(path);
        Ok(())
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_depends_on_config_only() {
        let a = Meta::new("rice", &serde_json::json!({"x": 1, "seed": 3}), 3);
        let b = Meta::new("rice", &serde_json::json!({"x": 1, "seed": 3}), 3);
        let c = Meta::new("rice", &serde_json::json!({"x": 2, "seed": 3}), 3);
        assert_eq!(a.config_sha256, b.config_sha256);
        assert_ne!(a.config_sha256, c.config_sha256);
        assert_eq!(a.config_sha256.len(), 64);
        assert!(a.csv_line().starts_with("# tool=projband version="));
    }
}
