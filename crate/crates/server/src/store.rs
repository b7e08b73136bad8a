use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use uuid::Uuid;

pub const RESULT_FILE: &str = "result.json";
const STAGING_PREFIX: &str = ".staging-";

/// One directory per scan under `root`, named by the scan id, holding the
/// result document and the uploaded image.
///
/// A scan is written into a staging directory and renamed into place, so
/// readers see either nothing or the complete scan.
#[derive(Debug, Clone)]
pub struct ScanStore {
    root: PathBuf,
}

fn write_synced(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(bytes)?;
    f.sync_all()
}

impl ScanStore {
    /// Opens (creating if needed) the store and clears staging leftovers
    /// from an interrupted run.
    pub fn open(root: impl Into<PathBuf>) -> io::Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        for entry in fs::read_dir(&root)? {
            let entry = entry?;
            if entry.file_name().to_string_lossy().starts_with(STAGING_PREFIX) {
                fs::remove_dir_all(entry.path())?;
            }
        }
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Directory of a scan id, or `None` when the id is not a UUID (which
    /// also keeps ids from escaping the root).
    pub fn scan_dir(&self, scan_id: &str) -> Option<PathBuf> {
        let id = Uuid::parse_str(scan_id).ok()?;
        Some(self.root.join(id.hyphenated().to_string()))
    }

    pub fn save(&self, scan_id: Uuid, result: &[u8], image: Option<(&str, &[u8])>) -> io::Result<PathBuf> {
        let name = scan_id.hyphenated().to_string();
        let final_dir = self.root.join(&name);
        if final_dir.exists() {
            return Err(io::Error::new(io::ErrorKind::AlreadyExists, name));
        }
        let staging = self.root.join(format!("{STAGING_PREFIX}{name}"));
        fs::create_dir(&staging)?;
        let written = (|| {
            if let Some((file_name, bytes)) = image {
                write_synced(&staging.join(file_name), bytes)?;
            }
            write_synced(&staging.join(RESULT_FILE), result)?;
            fs::rename(&staging, &final_dir)
        })();
        if let Err(e) = written {
            let _ = fs::remove_dir_all(&staging);
            return Err(e);
        }
        Ok(final_dir)
    }

    /// Stored result bytes, exactly as written.
    pub fn load(&self, scan_id: &str) -> io::Result<Option<Vec<u8>>> {
        let Some(dir) = self.scan_dir(scan_id) else {
            return Ok(None);
        };
        match fs::read(dir.join(RESULT_FILE)) {
            Ok(b) => Ok(Some(b)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Ids of all complete scans, sorted.
    pub fn list(&self) -> io::Result<Vec<String>> {
        let mut ids: Vec<String> = fs::read_dir(&self.root)?
            .filter_map(|e| e.ok())
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .filter(|n| Uuid::parse_str(n).is_ok())
            .collect();
        ids.sort();
        Ok(ids)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn save_load_and_reopen() {
        let tmp = tempfile::tempdir().unwrap();
        let store = ScanStore::open(tmp.path()).unwrap();
        let id = Uuid::new_v4();
        store.save(id, b"{\"a\":1}", Some(("image.png", b"png"))).unwrap();
        assert!(store.save(id, b"{}", None).is_err());

        fs::create_dir(tmp.path().join(".staging-leftover")).unwrap();
        let store = ScanStore::open(tmp.path()).unwrap();
        assert!(!tmp.path().join(".staging-leftover").exists());
        assert_eq!(store.load(&id.to_string()).unwrap().unwrap(), b"{\"a\":1}");
        assert_eq!(fs::read(tmp.path().join(id.to_string()).join("image.png")).unwrap(), b"png");
        assert_eq!(store.list().unwrap(), [id.to_string()]);
    }

    #[test]
    fn foreign_ids_are_absent() {
        let tmp = tempfile::tempdir().unwrap();
        let store = ScanStore::open(tmp.path()).unwrap();
        assert_eq!(store.load("../etc/passwd").unwrap(), None);
        assert_eq!(store.load(&Uuid::new_v4().to_string()).unwrap(), None);
    }
}
