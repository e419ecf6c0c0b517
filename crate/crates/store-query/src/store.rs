use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use telemetry_model::{to_csv_row, PayloadError, StoredRecord, TelemetryRecord, CSV_HEADER};
use thiserror::Error;

use crate::query::{QueryPage, QueryRequest};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: corrupt store line: {source}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        source: PayloadError,
    },
    #[error("record rejected: {0}")]
    InvalidRecord(#[from] PayloadError),
    #[error("bad query: {0}")]
    BadQuery(String),
}

/// Result of an append: the assigned (or pre-existing) sequence number.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AppendOutcome {
    pub seq: u64,
    /// True when the (device, device_timestamp) pair was already stored
    /// and nothing was written.
    pub deduplicated: bool,
}

struct DeviceLog {
    records: Vec<StoredRecord>,
    /// device_timestamp -> seq, for duplicate-delivery suppression.
    seen: HashMap<i64, u64>,
    writer: Option<File>,
    next_seq: u64,
}

impl DeviceLog {
    fn empty() -> Self {
        DeviceLog {
            records: Vec::new(),
            seen: HashMap::new(),
            writer: None,
            next_seq: 1,
        }
    }
}

/// Append-only NDJSON store, one file per device under the root
/// directory. Appends serialize per device; queries are concurrent.
pub struct TelemetryStore {
    root: PathBuf,
    logs: RwLock<HashMap<String, Mutex<DeviceLog>>>,
}

impl TelemetryStore {
    /// Open (or create) a store rooted at `root`, rebuilding the index
    /// from any existing device files.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|source| StoreError::Io {
            path: root.clone(),
            source,
        })?;
        let mut logs = HashMap::new();
        let entries = fs::read_dir(&root).map_err(|source| StoreError::Io {
            path: root.clone(),
            source,
        })?;
        for entry in entries {
            let path = entry
                .map_err(|source| StoreError::Io { path: root.clone(), source })?
                .path();
            if path.extension().and_then(|e| e.to_str()) != Some("ndjson") {
                continue;
            }
            let log = load_device_log(&path)?;
            if let Some(device_id) = log.records.first().map(|r| r.record.device_id.clone()) {
                logs.insert(device_id, Mutex::new(log));
            }
        }
        Ok(TelemetryStore { root, logs: RwLock::new(logs) })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Devices with at least one stored record, sorted.
    pub fn device_ids(&self) -> Vec<String> {
        let logs = self.logs.read().expect("store lock poisoned");
        let mut ids: Vec<String> = logs.keys().cloned().collect();
        ids.sort();
        ids
    }

    /// Durably append one validated record with its receipt time.
    ///
    /// A record whose (device, device_timestamp) was already stored is
    /// not written again; the original sequence number is returned with
    /// `deduplicated` set, which keeps node retries after a lost response
    /// idempotent.
    pub fn append(
        &self,
        record: &TelemetryRecord,
        receipt_unix: i64,
    ) -> Result<AppendOutcome, StoreError> {
        record.validate()?;
        self.ensure_log(&record.device_id);
        let logs = self.logs.read().expect("store lock poisoned");
        let mut log = logs
            .get(&record.device_id)
            .expect("log just ensured")
            .lock()
            .expect("device lock poisoned");

        if let Some(&seq) = log.seen.get(&record.device_timestamp) {
            return Ok(AppendOutcome { seq, deduplicated: true });
        }

        let stored = StoredRecord {
            seq: log.next_seq,
            receipt_unix,
            record: record.clone(),
        };
        let path = self.device_path(&record.device_id);
        if log.writer.is_none() {
            let file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(&path)
                .map_err(|source| StoreError::Io { path: path.clone(), source })?;
            log.writer = Some(file);
        }
        let line = stored.to_json_line();
        let writer = log.writer.as_mut().expect("writer just opened");
        writer
            .write_all(line.as_bytes())
            .and_then(|_| writer.write_all(b"\n"))
            .and_then(|_| writer.flush())
            .map_err(|source| StoreError::Io { path, source })?;

        let seq = stored.seq;
        log.seen.insert(record.device_timestamp, seq);
        log.records.push(stored);
        log.next_seq += 1;
        Ok(AppendOutcome { seq, deduplicated: false })
    }

    /// Run a paginated range query; an unknown device yields an empty
    /// page with total 0.
    pub fn query(&self, req: &QueryRequest) -> Result<QueryPage, StoreError> {
        if req.from > req.to {
            return Err(StoreError::BadQuery(format!(
                "from {} is after to {}",
                req.from, req.to
            )));
        }
        if req.page == 0 {
            return Err(StoreError::BadQuery("page is 1-based".into()));
        }
        if req.page_size == 0 {
            return Err(StoreError::BadQuery("page_size must be at least 1".into()));
        }
        let matches = self.matches_desc(&req.device_id, req.from, req.to);
        let total = matches.len();
        let start = (req.page - 1).saturating_mul(req.page_size).min(total);
        let end = start.saturating_add(req.page_size).min(total);
        Ok(QueryPage {
            rows: matches[start..end].to_vec(),
            total,
            page: req.page,
            page_size: req.page_size,
        })
    }

    /// The newest record by device timestamp, if any.
    pub fn latest(&self, device_id: &str) -> Option<StoredRecord> {
        let logs = self.logs.read().expect("store lock poisoned");
        let log = logs.get(device_id)?.lock().expect("device lock poisoned");
        log.records
            .iter()
            .max_by_key(|r| (r.record.device_timestamp, r.seq))
            .cloned()
    }

    /// Write the export: header plus one CSV row per match, newest first.
    /// Returns the number of data rows.
    pub fn export_csv<W: Write>(
        &self,
        device_id: &str,
        from: i64,
        to: i64,
        display_offset_s: i32,
        mut out: W,
    ) -> Result<usize, StoreError> {
        if from > to {
            return Err(StoreError::BadQuery(format!("from {from} is after to {to}")));
        }
        let matches = self.matches_desc(device_id, from, to);
        let write = |out: &mut W, line: &str| {
            out.write_all(line.as_bytes())
                .and_then(|_| out.write_all(b"\n"))
                .map_err(|source| StoreError::Io { path: PathBuf::from("<export>"), source })
        };
        write(&mut out, CSV_HEADER)?;
        for stored in &matches {
            write(&mut out, &to_csv_row(stored, display_offset_s))?;
        }
        Ok(matches.len())
    }

    fn matches_desc(&self, device_id: &str, from: i64, to: i64) -> Vec<StoredRecord> {
        let logs = self.logs.read().expect("store lock poisoned");
        let Some(log) = logs.get(device_id) else {
            return Vec::new();
        };
        let log = log.lock().expect("device lock poisoned");
        let mut matches: Vec<StoredRecord> = log
            .records
            .iter()
            .filter(|r| (from..=to).contains(&r.record.device_timestamp))
            .cloned()
            .collect();
        matches.sort_by_key(|r| (std::cmp::Reverse(r.record.device_timestamp), std::cmp::Reverse(r.seq)));
        matches
    }

    fn ensure_log(&self, device_id: &str) {
        {
            let logs = self.logs.read().expect("store lock poisoned");
            if logs.contains_key(device_id) {
                return;
            }
        }
        let mut logs = self.logs.write().expect("store lock poisoned");
        logs.entry(device_id.to_string())
            .or_insert_with(|| Mutex::new(DeviceLog::empty()));
    }

    fn device_path(&self, device_id: &str) -> PathBuf {
        self.root.join(format!("{}.ndjson", sanitize_file_stem(device_id)))
    }
}

/// Map a device id onto a safe file stem; anything outside
/// `[A-Za-z0-9._-]` is percent-encoded so distinct ids stay distinct.
fn sanitize_file_stem(device_id: &str) -> String {
    let mut stem = String::with_capacity(device_id.len());
    for byte in device_id.bytes() {
        match byte {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'.' | b'_' | b'-' => {
                stem.push(byte as char)
            }
            other => stem.push_str(&format!("%{other:02X}")),
        }
    }
    stem
}

fn load_device_log(path: &Path) -> Result<DeviceLog, StoreError> {
    let file = File::open(path).map_err(|source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut log = DeviceLog::empty();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| StoreError::Io { path: path.to_path_buf(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let stored = StoredRecord::from_json_line(&line).map_err(|source| StoreError::Corrupt {
            path: path.to_path_buf(),
            line: idx + 1,
            source,
        })?;
        log.seen.insert(stored.record.device_timestamp, stored.seq);
        log.next_seq = log.next_seq.max(stored.seq + 1);
        log.records.push(stored);
    }
    Ok(log)
}
