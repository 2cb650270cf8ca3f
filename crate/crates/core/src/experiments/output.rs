use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub seed: u64,
    pub version: String,
}

impl Provenance {
    pub fn new(config_sha256: impl Into<String>, seed: u64) -> Self {
        Self {
            config_sha256: config_sha256.into(),
            seed,
            version: VERSION.to_string(),
        }
    }

    /// First line of every CSV.
    pub fn header_line(&self) -> String {
        format!(
            "# config_sha256={} seed={} version={}",
            self.config_sha256, self.seed, self.version
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub provenance: Provenance,
    pub files: Vec<FileEntry>,
}

pub const MANIFEST: &str = "manifest.json";

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Output directory of one command run. Every file is written whole and
/// recorded with its hash; [`OutputDir::finish`] writes the manifest.
pub struct OutputDir {
    dir: PathBuf,
    command: String,
    provenance: Provenance,
    files: Vec<FileEntry>,
}

impl OutputDir {
    pub fn create(dir: &Path, command: &str, provenance: Provenance) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            command: command.to_string(),
            provenance,
            files: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        fs::write(self.dir.join(name), bytes)?;
        self.files.retain(|f| f.name != name);
        self.files.push(FileEntry {
            name: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    /// CSV with the provenance line, then whatever `body` writes (column
    /// header included).
    pub fn csv<F>(&mut self, name: &str, body: F) -> Result<()>
    where
        F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    {
        let mut buf = Vec::new();
        writeln!(buf, "{}", self.provenance.header_line())?;
        body(&mut buf)?;
        self.put(name, &buf)
    }

    /// JSON object with a `provenance` member added.
    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut v = serde_json::to_value(value).map_err(|e| Error::Structural(e.to_string()))?;
        let prov = serde_json::to_value(&self.provenance).expect("provenance serializes");
        match &mut v {
            serde_json::Value::Object(map) => {
                map.insert("provenance".into(), prov);
            }
            other => {
                v = serde_json::json!({ "data": other.take(), "provenance": prov });
            }
        }
        let mut text = serde_json::to_string_pretty(&v).map_err(|e| Error::Structural(e.to_string()))?;
        text.push('\n');
        self.put(name, text.as_bytes())
    }

    pub fn finish(mut self) -> Result<Manifest> {
        self.files.sort_by(|a, b| a.name.cmp(&b.name));
        let manifest = Manifest {
            command: self.command,
            provenance: self.provenance,
            files: self.files,
        };
        let mut text =
            serde_json::to_string_pretty(&manifest).map_err(|e| Error::Structural(e.to_string()))?;
        text.push('\n');
        fs::write(self.dir.join(MANIFEST), text)?;
        Ok(manifest)
    }
}

/// Re-hashes every file listed in the manifest of `dir` and checks that each
/// carries the manifest's config hash. With `expected`, the manifest hash
/// must also equal it.
pub fn verify_dir(dir: &Path, expected: Option<&str>) -> Result<Manifest> {
    let text = fs::read_to_string(dir.join(MANIFEST))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| Error::Verification(format!("{MANIFEST}: {e}")))?;
    let prov = &manifest.provenance;
    if let Some(h) = expected {
        if h != prov.config_sha256 {
            return Err(Error::Verification(format!(
                "manifest config hash {} differs from {h}",
                prov.config_sha256
            )));
        }
    }
    for f in &manifest.files {
        let bytes = fs::read(dir.join(&f.name))?;
        if sha256_hex(&bytes) != f.sha256 {
            return Err(Error::Verification(format!("{}: content hash mismatch", f.name)));
        }
        let carried = if f.name.ends_with(".csv") {
            let first = bytes.split(|&b| b == b'\n').next().unwrap_or_default();
            String::from_utf8_lossy(first) == prov.header_line()
        } else {
            serde_json::from_slice::<serde_json::Value>(&bytes)
                .ok()
                .and_then(|v| v.get("provenance").cloned())
                .and_then(|p| serde_json::from_value::<Provenance>(p).ok())
                .is_some_and(|p| &p == prov)
        };
        if !carried {
            return Err(Error::Verification(format!("{}: missing or foreign provenance", f.name)));
        }
    }
    Ok(manifest)
}
