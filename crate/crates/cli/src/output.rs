use std::path::{Path, PathBuf};

use nanosense_core::Result as CoreResult;

use crate::error::CliError;

pub fn generator_line() -> String {
    format!("#generator=nanosense {}", env!("CARGO_PKG_VERSION"))
}

/// Output files held in memory until the command has succeeded, so a
/// failing run leaves nothing behind.
#[derive(Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    /// Adds a CSV file; the generator line is prepended.
    pub fn csv(&mut self, name: impl Into<String>, write: impl FnOnce(&mut Vec<u8>) -> CoreResult<()>) -> Result<(), CliError> {
        let mut buf = generator_line().into_bytes();
        buf.push(b'\n');
        write(&mut buf).map_err(CliError::from)?;
        self.files.push((name.into(), buf));
        Ok(())
    }

    pub fn json(&mut self, name: impl Into<String>, value: &serde_json::Value) -> Result<(), CliError> {
        let mut buf = serde_json::to_vec_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
        buf.push(b'\n');
        self.files.push((name.into(), buf));
        Ok(())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    pub fn commit(self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
        let mut written = Vec::new();
        for (name, bytes) in self.files {
            let path = dir.join(name);
            std::fs::write(&path, bytes).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
            written.push(path);
        }
        Ok(written)
    }
}
