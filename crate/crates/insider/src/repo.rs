//! The on-disk component repository: a directory holding one JSON file
//! per stored safety component plus an `index.json`. Mutations take an
//! exclusive `.lock` file for their duration, so concurrent store
//! attempts fail fast instead of interleaving.

use std::collections::BTreeMap;
use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use insider_core::safety::SamComponent;
use insider_core::sync::{ComponentRepository, RepoError};
use serde::{Deserialize, Serialize};

use crate::format::{self, LoadError, FORMAT};

#[derive(Debug, thiserror::Error)]
pub enum RepoIoError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    File(#[from] LoadError),
    #[error("repository {} is locked; remove {} if no other process is using it", dir.display(), lock.display())]
    Locked { dir: PathBuf, lock: PathBuf },
    #[error(transparent)]
    Entry(#[from] RepoError),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IndexFile {
    format: String,
    entries: BTreeMap<String, String>,
}

/// A repository directory. The directory is created lazily on the first
/// store.
pub struct DirRepository {
    dir: PathBuf,
}

struct Lock {
    path: PathBuf,
}

impl Lock {
    fn acquire(dir: &Path) -> Result<Lock, RepoIoError> {
        let path = dir.join(".lock");
        match fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
        {
            Ok(_) => Ok(Lock { path }),
            Err(e) if e.kind() == ErrorKind::AlreadyExists => Err(RepoIoError::Locked {
                dir: dir.into(),
                lock: path,
            }),
            Err(source) => Err(RepoIoError::Io { path, source }),
        }
    }
}

impl Drop for Lock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

impl DirRepository {
    pub fn open(dir: impl Into<PathBuf>) -> DirRepository {
        DirRepository { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn index_path(&self) -> PathBuf {
        self.dir.join("index.json")
    }

    fn read_index(&self) -> Result<IndexFile, RepoIoError> {
        let path = self.index_path();
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == ErrorKind::NotFound => {
                return Ok(IndexFile {
                    format: FORMAT.into(),
                    entries: BTreeMap::new(),
                })
            }
            Err(source) => return Err(RepoIoError::Io { path, source }),
        };
        let index: IndexFile =
            serde_json::from_str(&text).map_err(|e| LoadError::Parse {
                path: path.clone(),
                message: e.to_string(),
            })?;
        if index.format != FORMAT {
            return Err(LoadError::Schema {
                path,
                detail: format!("unsupported format {:?}, expected {FORMAT:?}", index.format),
            }
            .into());
        }
        Ok(index)
    }

    fn write_index(&self, index: &IndexFile) -> Result<(), RepoIoError> {
        let path = self.index_path();
        let mut text = serde_json::to_string_pretty(index).expect("index serializes");
        text.push('\n');
        fs::write(&path, text).map_err(|source| RepoIoError::Io { path, source })
    }

    /// Validates and stores `component` under `key`, creating the
    /// repository if needed.
    pub fn store(&self, key: &str, component: &SamComponent) -> Result<(), RepoIoError> {
        let mut scratch = ComponentRepository::new();
        scratch.store(key, component.clone())?;

        fs::create_dir_all(&self.dir).map_err(|source| RepoIoError::Io {
            path: self.dir.clone(),
            source,
        })?;
        let _lock = Lock::acquire(&self.dir)?;
        let file_name = format!("{key}.json");
        let path = self.dir.join(&file_name);
        fs::write(&path, format::component_to_string(component))
            .map_err(|source| RepoIoError::Io { path, source })?;
        let mut index = self.read_index()?;
        index.entries.insert(key.into(), file_name);
        self.write_index(&index)
    }

    pub fn fetch(&self, key: &str) -> Result<SamComponent, RepoIoError> {
        let index = self.read_index()?;
        let Some(file_name) = index.entries.get(key) else {
            return Err(RepoError::UnknownKey(key.into()).into());
        };
        let path = self.dir.join(file_name);
        let text = fs::read_to_string(&path).map_err(|source| RepoIoError::Io {
            path: path.clone(),
            source,
        })?;
        Ok(format::component_from_str(&text, &path)?)
    }

    /// Loads every entry into an in-memory repository for planning.
    pub fn load(&self) -> Result<ComponentRepository, RepoIoError> {
        let index = self.read_index()?;
        let mut repo = ComponentRepository::new();
        for (key, file_name) in &index.entries {
            let path = self.dir.join(file_name);
            let text = fs::read_to_string(&path).map_err(|source| RepoIoError::Io {
                path: path.clone(),
                source,
            })?;
            repo.store(key, format::component_from_str(&text, &path)?)?;
        }
        Ok(repo)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use insider_core::samples;

    #[test]
    fn store_fetch_and_bulk_load() {
        let dir = tempfile::tempdir().unwrap();
        let repo = DirRepository::open(dir.path().join("repo"));
        let sam = samples::pipeline_safety();
        let c3 = sam.component("c3").unwrap().clone();

        repo.store("c3", &c3).unwrap();
        assert_eq!(repo.fetch("c3").unwrap(), c3);

        let loaded = repo.load().unwrap();
        assert_eq!(loaded.fetch("c3").unwrap(), &c3);

        assert!(matches!(
            repo.fetch("nope"),
            Err(RepoIoError::Entry(RepoError::UnknownKey(_)))
        ));
        assert!(!dir.path().join("repo/.lock").exists(), "lock released");
    }

    #[test]
    fn concurrent_store_is_blocked_by_the_lock() {
        let dir = tempfile::tempdir().unwrap();
        let repo = DirRepository::open(dir.path());
        let c3 = samples::pipeline_safety().component("c3").unwrap().clone();
        fs::create_dir_all(dir.path()).unwrap();
        let _held = Lock::acquire(dir.path()).unwrap();
        assert!(matches!(
            repo.store("c3", &c3),
            Err(RepoIoError::Locked { .. })
        ));
    }

    #[test]
    fn stored_components_must_stand_alone() {
        let dir = tempfile::tempdir().unwrap();
        let repo = DirRepository::open(dir.path());
        let mut broken = samples::pipeline_safety().component("c3").unwrap().clone();
        broken.definitions.insert(
            "j".into(),
            Some(insider_core::safety::BooleanExpr::event("missing")),
        );
        assert!(matches!(
            repo.store("c3", &broken),
            Err(RepoIoError::Entry(RepoError::InvalidComponent { .. }))
        ));
    }
}
