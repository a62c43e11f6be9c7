//! On-disk spool layout.
//!
//! ```text
//! <spool>/config.json          coordinator settings
//! <spool>/journal.ndjson       item state transitions, one event per line
//! <spool>/items/<id>.dominion  committed work items
//! <spool>/work/<id>.<n>/       scratch space of attempt n on item <id>
//! <spool>/result.json          written once the run completes
//! ```

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

/// Paths inside one spool directory.
#[derive(Debug, Clone)]
pub struct Spool {
    root: PathBuf,
}

impl Spool {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn create_dirs(&self) -> io::Result<()> {
        fs::create_dir_all(self.items_dir())?;
        fs::create_dir_all(self.root.join("work"))
    }

    pub fn config(&self) -> PathBuf {
        self.root.join("config.json")
    }

    pub fn journal(&self) -> PathBuf {
        self.root.join("journal.ndjson")
    }

    pub fn result(&self) -> PathBuf {
        self.root.join("result.json")
    }

    pub fn items_dir(&self) -> PathBuf {
        self.root.join("items")
    }

    /// Spool-relative path of an item's model file.
    pub fn item_rel(id: &str) -> PathBuf {
        Path::new("items").join(format!("{id}.dominion"))
    }

    pub fn resolve(&self, rel: &Path) -> PathBuf {
        self.root.join(rel)
    }

    pub fn work_dir(&self, id: &str, attempt: u32) -> PathBuf {
        self.root.join("work").join(format!("{id}.{attempt}"))
    }

    pub fn report(&self, id: &str, attempt: u32) -> PathBuf {
        self.work_dir(id, attempt).join("report.json")
    }
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory, so readers see either the old file or the complete new one.
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut text = serde_json::to_vec_pretty(value).map_err(io::Error::other)?;
    text.push(b'\n');
    write_atomic(path, &text)
}

/// Parent id and depth encoded in a child id such as `r-2-1`.
pub fn lineage(id: &str) -> (Option<&str>, u32) {
    let depth = id.matches('-').count() as u32;
    (id.rsplit_once('-').map(|(p, _)| p), depth)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.json");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn lineage_from_ids() {
        assert_eq!(lineage("r"), (None, 0));
        assert_eq!(lineage("r-2"), (Some("r"), 1));
        assert_eq!(lineage("r-2-10"), (Some("r-2"), 2));
    }
}
