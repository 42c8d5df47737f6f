use std::io::Write;
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use crate::error::{Error, Result};

/// What a command produced: text for stdout and whole files to write.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct CommandOutput {
    pub stdout: String,
    pub files: Vec<(PathBuf, Vec<u8>)>,
}

impl CommandOutput {
    /// Sends `bytes` to `path` if given, otherwise to stdout.
    pub(crate) fn emit(&mut self, path: Option<&Path>, bytes: Vec<u8>) {
        match path {
            Some(p) => self.files.push((p.to_path_buf(), bytes)),
            None => self.stdout.push_str(&String::from_utf8_lossy(&bytes)),
        }
    }

    /// Writes every file atomically, then returns the stdout text.
    pub fn commit(self) -> Result<String> {
        for (path, bytes) in &self.files {
            write_atomic(path, bytes)?;
        }
        Ok(self.stdout)
    }
}

/// Writes to a temporary file next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
