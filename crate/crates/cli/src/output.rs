//! All-or-nothing file output.

use std::io::Write;
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use crate::error::CliError;

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Files staged as temporaries in their target directory and renamed into
/// place together by [`Staged::commit`]. Dropping without committing
/// removes them.
#[derive(Default)]
pub struct Staged {
    files: Vec<(NamedTempFile, PathBuf)>,
}

impl Staged {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, path: PathBuf, contents: &[u8]) -> Result<(), CliError> {
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        std::fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        let mut tmp = NamedTempFile::new_in(&dir).map_err(|e| io_err(&dir, e))?;
        tmp.write_all(contents).map_err(|e| io_err(&path, e))?;
        tmp.as_file().sync_all().map_err(|e| io_err(&path, e))?;
        self.files.push((tmp, path));
        Ok(())
    }

    pub fn commit(self) -> Result<Vec<PathBuf>, CliError> {
        let mut written = Vec::with_capacity(self.files.len());
        for (tmp, path) in self.files {
            tmp.persist(&path).map_err(|e| io_err(&path, e.error))?;
            written.push(path);
        }
        Ok(written)
    }
}

pub fn write_atomic(path: PathBuf, contents: &[u8]) -> Result<(), CliError> {
    let mut s = Staged::new();
    s.add(path, contents)?;
    s.commit().map(|_| ())
}
