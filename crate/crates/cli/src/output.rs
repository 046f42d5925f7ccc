//! Output files that appear only once they are complete.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use semrec_core::Result;
use tempfile::NamedTempFile;

/// A set of files written to temporaries next to their destinations and
/// moved into place together by [`Staged::commit`]. Dropping without
/// committing deletes the temporaries.
#[derive(Default)]
pub struct Staged {
    files: Vec<(NamedTempFile, PathBuf)>,
}

impl Staged {
    pub fn write<F>(&mut self, dest: &Path, fill: F) -> Result<()>
    where
        F: FnOnce(&mut dyn Write) -> Result<()>,
    {
        let dir = match dest.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&dir)?;
        let tmp = NamedTempFile::new_in(&dir)?;
        {
            let mut out = BufWriter::new(tmp.as_file());
            fill(&mut out)?;
            out.flush()?;
        }
        self.files.push((tmp, dest.to_path_buf()));
        Ok(())
    }

    pub fn commit(self) -> Result<()> {
        for (tmp, dest) in self.files {
            tmp.persist(&dest).map_err(|e| e.error)?;
        }
        Ok(())
    }
}

/// Writes one file atomically.
pub fn write_file<F>(dest: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    let mut staged = Staged::default();
    staged.write(dest, fill)?;
    staged.commit()
}
