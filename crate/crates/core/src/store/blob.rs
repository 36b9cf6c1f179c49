use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::sync::Mutex;

use sha2::{Digest, Sha256};

use crate::model::BlobHash;

use super::journal::SyncMode;

pub fn content_hash(bytes: &[u8]) -> BlobHash {
    let digest = Sha256::digest(bytes);
    let mut hex = String::with_capacity(64);
    for b in digest.iter() {
        hex.push_str(&format!("{b:02x}"));
    }
    BlobHash::new(hex)
}

pub(crate) enum BlobError {
    Full,
    Io(io::Error),
}

/// Content-addressed blobs, one file per hash or held in memory.
pub(crate) struct BlobStore {
    dir: Option<PathBuf>,
    sync: SyncMode,
    quota_bytes: Option<u64>,
    inner: Mutex<BlobIndex>,
}

#[derive(Default)]
struct BlobIndex {
    sizes: BTreeMap<BlobHash, u64>,
    memory: BTreeMap<BlobHash, Vec<u8>>,
    used: u64,
}

impl BlobStore {
    pub fn open(
        dir: Option<PathBuf>,
        sync: SyncMode,
        quota_bytes: Option<u64>,
    ) -> io::Result<Self> {
        let mut index = BlobIndex::default();
        if let Some(dir) = &dir {
            fs::create_dir_all(dir)?;
            for entry in fs::read_dir(dir)? {
                let entry = entry?;
                let name = entry.file_name().to_string_lossy().into_owned();
                let hash = BlobHash::new(name);
                if !hash.is_well_formed() {
                    // leftover temp file from an interrupted write
                    let _ = fs::remove_file(entry.path());
                    continue;
                }
                let len = entry.metadata()?.len();
                index.used += len;
                index.sizes.insert(hash, len);
            }
        }
        Ok(Self {
            dir,
            sync,
            quota_bytes,
            inner: Mutex::new(index),
        })
    }

    pub fn put(&self, bytes: &[u8]) -> Result<BlobHash, BlobError> {
        let hash = content_hash(bytes);
        let mut index = self.inner.lock().expect("blob index poisoned");
        if index.sizes.contains_key(&hash) {
            return Ok(hash);
        }
        let len = bytes.len() as u64;
        if let Some(quota) = self.quota_bytes {
            if index.used + len > quota {
                return Err(BlobError::Full);
            }
        }
        match &self.dir {
            Some(dir) => {
                let tmp = dir.join(format!(".{}.tmp", hash));
                let write = || -> io::Result<()> {
                    let mut f = fs::File::create(&tmp)?;
                    f.write_all(bytes)?;
                    if self.sync == SyncMode::Full {
                        f.sync_all()?;
                    }
                    fs::rename(&tmp, dir.join(hash.as_str()))?;
                    if self.sync == SyncMode::Full {
                        fs::File::open(dir)?.sync_all()?;
                    }
                    Ok(())
                };
                write().map_err(|e| {
                    let _ = fs::remove_file(&tmp);
                    if e.kind() == io::ErrorKind::StorageFull {
                        BlobError::Full
                    } else {
                        BlobError::Io(e)
                    }
                })?;
            }
            None => {
                index.memory.insert(hash.clone(), bytes.to_vec());
            }
        }
        index.used += len;
        index.sizes.insert(hash.clone(), len);
        Ok(hash)
    }

    pub fn contains(&self, hash: &BlobHash) -> bool {
        self.inner
            .lock()
            .expect("blob index poisoned")
            .sizes
            .contains_key(hash)
    }

    pub fn get(&self, hash: &BlobHash) -> io::Result<Option<Vec<u8>>> {
        let index = self.inner.lock().expect("blob index poisoned");
        if !index.sizes.contains_key(hash) {
            return Ok(None);
        }
        match &self.dir {
            Some(dir) => fs::read(dir.join(hash.as_str())).map(Some),
            None => Ok(index.memory.get(hash).cloned()),
        }
    }

    pub fn hashes(&self) -> Vec<BlobHash> {
        self.inner
            .lock()
            .expect("blob index poisoned")
            .sizes
            .keys()
            .cloned()
            .collect()
    }
}
