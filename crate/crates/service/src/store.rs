//! File-backed persistence.
//!
//! ```text
//! <root>/sessions/<id>/log.jsonl      creation record, then one line per answer
//! <root>/sessions/<id>/snapshot.json  latest engine state
//! <root>/corpora/<id>.json            corpus record
//! ```
//!
//! The log is the source of truth: a session is rebuilt by replaying it, and
//! a torn last line left by a crash is ignored. Snapshots are written to a
//! temporary file and renamed into place.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use prefsys_core::engine::{Answer, EngineSnapshot, SessionConfig};
use prefsys_core::guided::{MallowsModel, OrderCorpus};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum LogEntry {
    Created {
        id: String,
        config: SessionConfig,
    },
    Answer {
        seq: usize,
        answer: Answer,
        /// Elapsed time reported by the client, which the session uses.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        client_elapsed_ms: Option<f64>,
        /// Time between serving the last suggestion and receiving this
        /// answer, kept for auditing only.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        server_elapsed_ms: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Provenance {
    Model { model: MallowsModel, seed: u64 },
    Human,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub id: String,
    pub corpus: OrderCorpus,
    pub provenance: Provenance,
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> io::Result<Self> {
        let root = root.into();
        fs::create_dir_all(root.join("sessions"))?;
        fs::create_dir_all(root.join("corpora"))?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn session_dir(&self, id: &str) -> PathBuf {
        self.root.join("sessions").join(id)
    }

    pub fn create_session(&self, id: &str, config: &SessionConfig) -> io::Result<()> {
        fs::create_dir_all(self.session_dir(id))?;
        self.append(
            id,
            &LogEntry::Created {
                id: id.to_string(),
                config: config.clone(),
            },
        )
    }

    /// Appends one record and syncs it to disk.
    pub fn append(&self, id: &str, entry: &LogEntry) -> io::Result<()> {
        let mut line = serde_json::to_string(entry)?;
        line.push('\n');
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(self.session_dir(id).join("log.jsonl"))?;
        f.write_all(line.as_bytes())?;
        f.sync_data()
    }

    pub fn write_snapshot(&self, id: &str, snapshot: &EngineSnapshot) -> io::Result<()> {
        write_atomic(&self.session_dir(id).join("snapshot.json"), &serde_json::to_vec_pretty(snapshot)?)
    }

    pub fn read_snapshot(&self, id: &str) -> io::Result<EngineSnapshot> {
        let bytes = fs::read(self.session_dir(id).join("snapshot.json"))?;
        Ok(serde_json::from_slice(&bytes)?)
    }

    /// Complete log records of a session; `None` if it does not exist.
    pub fn read_log(&self, id: &str) -> io::Result<Option<Vec<LogEntry>>> {
        let path = self.session_dir(id).join("log.jsonl");
        let f = match File::open(&path) {
            Ok(f) => f,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e),
        };
        let mut entries = Vec::new();
        for line in BufReader::new(f).lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str(&line) {
                Ok(entry) => entries.push(entry),
                // A torn final write from an interrupted append.
                Err(_) => break,
            }
        }
        Ok(Some(entries))
    }

    /// Ids of all sessions on disk.
    pub fn session_ids(&self) -> io::Result<Vec<String>> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(self.root.join("sessions"))? {
            let entry = entry?;
            if entry.file_type()?.is_dir() {
                ids.push(entry.file_name().to_string_lossy().into_owned());
            }
        }
        ids.sort();
        Ok(ids)
    }

    pub fn save_corpus(&self, record: &CorpusRecord) -> io::Result<()> {
        write_atomic(
            &self.root.join("corpora").join(format!("{}.json", record.id)),
            &serde_json::to_vec(record)?,
        )
    }

    pub fn load_corpus(&self, id: &str) -> io::Result<Option<CorpusRecord>> {
        match fs::read(self.root.join("corpora").join(format!("{id}.json"))) {
            Ok(bytes) => Ok(Some(serde_json::from_slice(&bytes)?)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e),
        }
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension("json.tmp");
    {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_data()?;
    }
    fs::rename(tmp, path)
}
