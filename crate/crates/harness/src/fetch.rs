use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use sha2::{Digest, Sha256};
use thiserror::Error;

/// Environment variable naming the cache directory.
pub const CACHE_DIR_VAR: &str = "OPA_CACHE_DIR";
/// Environment variable holding the value substituted for `{API_KEY}` in URLs.
pub const API_KEY_VAR: &str = "OPA_API_KEY";
pub const API_KEY_PLACEHOLDER: &str = "{API_KEY}";

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("offline: not in cache")]
    Offline,
    #[error("HTTP status {0}")]
    Status(u16),
    #[error("network error: {0}")]
    Network(String),
    #[error("URL needs an API key but {API_KEY_VAR} is not set")]
    MissingKey,
    #[error("cache error: {0}")]
    Cache(#[from] std::io::Error),
}

/// Cache directory from the flag, else the environment, else a temp dir.
pub fn default_cache_dir(flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(CACHE_DIR_VAR).map(PathBuf::from))
        .unwrap_or_else(|| std::env::temp_dir().join("opa-cache"))
}

/// Cache file name for a URL. The key is taken from the URL as written,
/// before any API key is substituted.
pub fn cache_key(url: &str) -> String {
    hex::encode(Sha256::digest(url.as_bytes()))
}

/// HTTP GET with a content-addressed on-disk cache.
pub struct Fetcher {
    cache_dir: PathBuf,
    offline: bool,
    api_key: Option<String>,
    timeout: Duration,
    requests: AtomicUsize,
}

impl Fetcher {
    pub fn new(cache_dir: impl Into<PathBuf>, offline: bool) -> Self {
        Fetcher {
            cache_dir: cache_dir.into(),
            offline,
            api_key: std::env::var(API_KEY_VAR).ok().filter(|k| !k.is_empty()),
            timeout: Duration::from_secs(30),
            requests: AtomicUsize::new(0),
        }
    }

    pub fn with_api_key(mut self, key: Option<String>) -> Self {
        self.api_key = key;
        self
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    /// Network requests made so far.
    pub fn requests(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }

    pub fn cache_path(&self, url: &str) -> PathBuf {
        self.cache_dir.join(cache_key(url))
    }

    pub fn fetch(&self, url: &str) -> Result<Vec<u8>, FetchError> {
        let path = self.cache_path(url);
        if let Ok(bytes) = fs::read(&path) {
            log::debug!("cache hit for {url}");
            return Ok(bytes);
        }
        if self.offline {
            return Err(FetchError::Offline);
        }
        let target = if url.contains(API_KEY_PLACEHOLDER) {
            let key = self.api_key.as_deref().ok_or(FetchError::MissingKey)?;
            url.replace(API_KEY_PLACEHOLDER, key)
        } else {
            url.to_owned()
        };
        log::info!("fetching {url}");
        self.requests.fetch_add(1, Ordering::SeqCst);
        let client = reqwest::blocking::Client::builder()
            .timeout(self.timeout)
            .build()
            .map_err(|e| FetchError::Network(e.without_url().to_string()))?;
        let response = client
            .get(&target)
            .send()
            .map_err(|e| FetchError::Network(e.without_url().to_string()))?;
        let status = response.status();
        if !status.is_success() {
            return Err(FetchError::Status(status.as_u16()));
        }
        let body = response
            .bytes()
            .map_err(|e| FetchError::Network(e.without_url().to_string()))?;
        self.store(&path, &body)?;
        Ok(body.to_vec())
    }

    fn store(&self, path: &Path, body: &[u8]) -> Result<(), FetchError> {
        fs::create_dir_all(&self.cache_dir)?;
        let mut tmp = tempfile::NamedTempFile::new_in(&self.cache_dir)?;
        tmp.write_all(body)?;
        tmp.persist(path).map_err(|e| FetchError::Cache(e.error))?;
        Ok(())
    }
}
