//! Content-addressed response cache: one file per request digest.
//!
//! Writes go through a temp file and rename so concurrent readers never see
//! a partial response. Concurrent writers of the same key race benignly —
//! both write identical content for a content-addressed key.

use std::fs;
use std::path::{Path, PathBuf};

use super::ProviderError;

pub struct ResponseCache {
    dir: PathBuf,
}

impl ResponseCache {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, ProviderError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)
            .map_err(|e| ProviderError::Cache(format!("create {}: {e}", dir.display())))?;
        Ok(Self { dir })
    }

    pub fn get(&self, key: &str) -> Option<String> {
        fs::read_to_string(self.entry_path(key)).ok()
    }

    pub fn put(&self, key: &str, text: &str) -> Result<(), ProviderError> {
        let final_path = self.entry_path(key);
        let tmp_path = self.dir.join(format!(".{key}.{}.tmp", std::process::id()));
        fs::write(&tmp_path, text)
            .map_err(|e| ProviderError::Cache(format!("write {}: {e}", tmp_path.display())))?;
        fs::rename(&tmp_path, &final_path)
            .map_err(|e| ProviderError::Cache(format!("rename {}: {e}", final_path.display())))?;
        Ok(())
    }

    fn entry_path(&self, key: &str) -> PathBuf {
        self.dir.join(key)
    }
}
