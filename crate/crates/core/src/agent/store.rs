use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::RwLock;

use super::{AgentError, Artifact, SessionEvent};

/// Byte storage for artifacts and uploads, on disk under `artifacts/` when
/// rooted, in memory otherwise. Keys are file names.
#[derive(Debug, Default)]
pub struct ArtifactStore {
    root: Option<PathBuf>,
    mem: RwLock<BTreeMap<String, Vec<u8>>>,
    index: RwLock<BTreeMap<String, Artifact>>,
}

impl ArtifactStore {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn open(data_dir: &Path) -> Result<Self, AgentError> {
        let root = data_dir.join("artifacts");
        fs::create_dir_all(&root)?;
        Ok(Self {
            root: Some(root),
            ..Default::default()
        })
    }

    pub fn put_blob(&self, key: &str, bytes: &[u8]) -> Result<(), AgentError> {
        match &self.root {
            Some(root) => fs::write(root.join(key), bytes)?,
            None => {
                self.mem
                    .write()
                    .expect("artifact lock")
                    .insert(key.to_string(), bytes.to_vec());
            }
        }
        Ok(())
    }

    pub fn blob(&self, key: &str) -> Option<Vec<u8>> {
        if key.contains(['/', '\\']) || key.starts_with('.') {
            return None;
        }
        match &self.root {
            Some(root) => fs::read(root.join(key)).ok(),
            None => self.mem.read().expect("artifact lock").get(key).cloned(),
        }
    }

    /// Makes an artifact downloadable by id.
    pub fn register(&self, artifact: &Artifact) {
        self.index
            .write()
            .expect("artifact lock")
            .insert(artifact.artifact_id.clone(), artifact.clone());
    }

    pub fn artifact(&self, artifact_id: &str) -> Option<(Artifact, Vec<u8>)> {
        let meta = self
            .index
            .read()
            .expect("artifact lock")
            .get(artifact_id)
            .cloned()?;
        let key = meta
            .path
            .strip_prefix("artifacts/")
            .unwrap_or(&meta.path)
            .to_string();
        let bytes = self.blob(&key)?;
        Some((meta, bytes))
    }
}

/// One newline-delimited JSON file per session: `sessions/<id>.log`.
#[derive(Debug, Clone)]
pub struct SessionLog {
    dir: PathBuf,
}

impl SessionLog {
    pub fn open(data_dir: &Path) -> Result<Self, AgentError> {
        let dir = data_dir.join("sessions");
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    fn path(&self, session_id: &str) -> PathBuf {
        self.dir.join(format!("{session_id}.log"))
    }

    pub fn exists(&self, session_id: &str) -> bool {
        self.path(session_id).exists()
    }

    pub fn append(&self, session_id: &str, events: &[SessionEvent]) -> Result<(), AgentError> {
        if events.is_empty() {
            return Ok(());
        }
        let mut buf = String::new();
        for e in events {
            buf.push_str(&serde_json::to_string(e).expect("events serialize"));
            buf.push('\n');
        }
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(self.path(session_id))?;
        f.write_all(buf.as_bytes())?;
        f.sync_data()?;
        Ok(())
    }

    pub fn load(&self, session_id: &str) -> Result<Vec<SessionEvent>, AgentError> {
        let path = self.path(session_id);
        if !path.exists() {
            return Err(AgentError::UnknownSession(session_id.to_string()));
        }
        let text = fs::read_to_string(&path)?;
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| AgentError::CorruptLog {
                    path: path.display().to_string(),
                    message: format!("line {}: {e}", i + 1),
                })
            })
            .collect()
    }

    /// Session ids with a log file, sorted.
    pub fn list(&self) -> Result<Vec<String>, AgentError> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let name = entry?.file_name().to_string_lossy().to_string();
            if let Some(id) = name.strip_suffix(".log") {
                ids.push(id.to_string());
            }
        }
        ids.sort();
        Ok(ids)
    }
}
