//! Append-only JSONL event log, one file per competition.

use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::event::{Event, LOG_VERSION};
use crate::ServiceError;

pub const LOG_SUFFIX: &str = ".events.jsonl";

pub struct EventLog {
    path: PathBuf,
    file: File,
    len: u64,
    next_seq: u64,
}

fn storage(path: &Path, e: std::io::Error) -> ServiceError {
    ServiceError::Storage(format!("{}: {e}", path.display()))
}

impl EventLog {
    pub fn path_for(dir: &Path, competition_id: &str) -> PathBuf {
        dir.join(format!("{competition_id}{LOG_SUFFIX}"))
    }

    /// Creates a new, empty log. Fails if the file already exists.
    pub fn create(path: &Path) -> Result<Self, ServiceError> {
        let file = OpenOptions::new()
            .create_new(true)
            .append(true)
            .open(path)
            .map_err(|e| storage(path, e))?;
        Ok(EventLog {
            path: path.to_path_buf(),
            file,
            len: 0,
            next_seq: 1,
        })
    }

    /// Opens an existing log and returns its events.
    ///
    /// A final line without a newline is a write cut short by a crash; it
    /// was never acknowledged, so it is dropped and the file truncated.
    /// Any other unreadable line, or a gap in `seq`, is corruption.
    pub fn open(path: &Path) -> Result<(Self, Vec<Event>), ServiceError> {
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .open(path)
            .map_err(|e| storage(path, e))?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes).map_err(|e| storage(path, e))?;

        let complete = bytes.iter().rposition(|b| *b == b'\n').map_or(0, |i| i + 1);
        if complete < bytes.len() {
            file.set_len(complete as u64).map_err(|e| storage(path, e))?;
            file.sync_data().map_err(|e| storage(path, e))?;
        }
        let events = parse_events(&bytes[..complete])?;
        let next_seq = events.last().map_or(1, |e| e.seq + 1);
        Ok((
            EventLog {
                path: path.to_path_buf(),
                file,
                len: complete as u64,
                next_seq,
            },
            events,
        ))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }

    /// Writes and syncs one event. On failure the file is cut back to its
    /// previous length so a half-written line never survives.
    pub fn append(&mut self, event: &Event) -> Result<u64, ServiceError> {
        if event.seq != self.next_seq {
            return Err(ServiceError::Storage(format!(
                "append seq {} but log expects {}",
                event.seq, self.next_seq
            )));
        }
        let mut line = serde_json::to_vec(event).expect("event serializes");
        line.push(b'\n');
        let written = self.file.write_all(&line).and_then(|_| self.file.sync_data());
        if let Err(e) = written {
            let _ = self.file.set_len(self.len);
            return Err(storage(&self.path, e));
        }
        self.len += line.len() as u64;
        self.next_seq += 1;
        Ok(event.seq)
    }
}

/// Parses complete log lines, checking version and gap-free `seq`.
pub fn parse_events(bytes: &[u8]) -> Result<Vec<Event>, ServiceError> {
    let text = std::str::from_utf8(bytes).map_err(|e| ServiceError::CorruptLog {
        line: 0,
        message: e.to_string(),
    })?;
    let mut events = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let corrupt = |message: String| ServiceError::CorruptLog { line: i + 1, message };
        if line.trim().is_empty() {
            return Err(corrupt("blank line".into()));
        }
        let event: Event = serde_json::from_str(line).map_err(|e| corrupt(e.to_string()))?;
        if event.v != LOG_VERSION {
            return Err(corrupt(format!("unsupported log version {}", event.v)));
        }
        let expected = events.len() as u64 + 1;
        if event.seq != expected {
            return Err(corrupt(format!("seq {} where {expected} was expected", event.seq)));
        }
        events.push(event);
    }
    Ok(events)
}
