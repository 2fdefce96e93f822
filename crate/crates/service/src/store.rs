//! On-disk campaign storage.
//!
//! Layout under the data directory:
//!
//! ```text
//! campaigns/<id>/events.jsonl                      append-only event log
//! campaigns/<id>/snapshots/<word#>/round-<n>.jsonl graph at the close of round n
//! ```
//!
//! Each event is written and fsynced before it is applied in memory. A
//! trailing line without a newline is a torn write from a crash and is cut
//! off on load; any other unreadable line is reported as corruption.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use crate::campaign::{Campaign, CampaignSpec, Event, LogRecord, Staged, SCHEMA_VERSION};
use crate::error::{Result, ServiceError};

const LOG_FILE: &str = "events.jsonl";

struct Entry {
    campaign: Campaign,
    log: File,
    dir: PathBuf,
}

pub struct Store {
    root: PathBuf,
    campaigns: BTreeMap<String, Entry>,
}

/// Reads a campaign log, truncating a torn final line.
pub fn read_log(path: &Path) -> Result<Vec<LogRecord>> {
    let file = File::open(path)?;
    let mut reader = BufReader::new(file);
    let mut records = Vec::new();
    let mut line = String::new();
    let mut offset = 0u64;
    let mut number = 0;
    loop {
        line.clear();
        let n = reader.read_line(&mut line)?;
        if n == 0 {
            break;
        }
        number += 1;
        if !line.ends_with('\n') {
            tracing::warn!(path = %path.display(), line = number, "dropping torn trailing log line");
            OpenOptions::new().write(true).open(path)?.set_len(offset)?;
            break;
        }
        let record: LogRecord = serde_json::from_str(line.trim_end()).map_err(|e| ServiceError::CorruptLog {
            path: path.display().to_string(),
            line: number,
            msg: e.to_string(),
        })?;
        records.push(record);
        offset += n as u64;
    }
    Ok(records)
}

fn append_record(log: &mut File, record: &LogRecord) -> Result<()> {
    let mut line = serde_json::to_string(record).expect("log records serialize");
    line.push('\n');
    log.write_all(line.as_bytes())?;
    log.sync_data()?;
    Ok(())
}

fn snapshot_path(dir: &Path, word_index: usize, round: usize) -> PathBuf {
    dir.join("snapshots").join(format!("{word_index:03}")).join(format!("round-{round:02}.jsonl"))
}

/// Writes snapshot files that are not on disk yet; existing files are left
/// untouched so they can be checked against a replay.
fn write_snapshots(dir: &Path, campaign: &Campaign) -> Result<()> {
    for state in campaign.words.values() {
        for (i, text) in state.snapshots.iter().enumerate() {
            let path = snapshot_path(dir, state.index, i + 1);
            if path.exists() {
                continue;
            }
            fs::create_dir_all(path.parent().expect("snapshot paths have a parent"))?;
            let tmp = path.with_extension("tmp");
            fs::write(&tmp, text)?;
            File::open(&tmp)?.sync_all()?;
            fs::rename(&tmp, &path)?;
        }
    }
    Ok(())
}

/// Snapshot files on disk for one word, in round order.
pub fn stored_snapshots(campaign_dir: &Path, word_index: usize) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for round in 1.. {
        let path = snapshot_path(campaign_dir, word_index, round);
        if !path.exists() {
            break;
        }
        out.push(fs::read_to_string(path)?);
    }
    Ok(out)
}

impl Store {
    /// Opens a data directory and rebuilds every campaign from its log.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        let base = root.join("campaigns");
        fs::create_dir_all(&base)?;
        let mut campaigns = BTreeMap::new();
        let mut dirs: Vec<PathBuf> = fs::read_dir(&base)?.filter_map(|e| e.ok()).map(|e| e.path()).collect();
        dirs.sort();
        for dir in dirs {
            let log_path = dir.join(LOG_FILE);
            if !log_path.exists() {
                continue;
            }
            let records = read_log(&log_path)?;
            if records.is_empty() {
                continue;
            }
            let campaign = Campaign::replay(records)?;
            write_snapshots(&dir, &campaign)?;
            let log = OpenOptions::new().append(true).open(&log_path)?;
            tracing::info!(campaign = campaign.id(), events = campaign.seq, "campaign restored");
            campaigns.insert(campaign.id().to_owned(), Entry { campaign, log, dir });
        }
        Ok(Store { root, campaigns })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn campaign_dir(&self, id: &str) -> PathBuf {
        self.root.join("campaigns").join(id)
    }

    pub fn get(&self, id: &str) -> Result<&Campaign> {
        self.campaigns.get(id).map(|e| &e.campaign).ok_or_else(|| ServiceError::NotFound(format!("campaign `{id}`")))
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.campaigns.keys().map(String::as_str)
    }

    pub fn create(&mut self, spec: CampaignSpec) -> Result<&Campaign> {
        spec.validate()?;
        if self.campaigns.contains_key(&spec.id) {
            return Err(ServiceError::Conflict(format!("campaign `{}` exists", spec.id)));
        }
        let campaign = Campaign::create(spec.clone())?;
        let dir = self.campaign_dir(&spec.id);
        if dir.join(LOG_FILE).exists() {
            return Err(ServiceError::Conflict(format!("campaign `{}` exists on disk", spec.id)));
        }
        fs::create_dir_all(&dir)?;
        let mut log = OpenOptions::new().create_new(true).append(true).open(dir.join(LOG_FILE))?;
        append_record(&mut log, &LogRecord { v: SCHEMA_VERSION, seq: 1, event: Event::Created { spec } })?;
        File::open(&dir)?.sync_all()?;
        let id = campaign.id().to_owned();
        self.campaigns.insert(id.clone(), Entry { campaign, log, dir });
        Ok(&self.campaigns[&id].campaign)
    }

    /// Stages, persists and commits one event.
    pub fn apply(&mut self, id: &str, event: Event) -> Result<&Campaign> {
        let staged = self.stage(id, event)?;
        self.commit(id, staged)
    }

    pub fn stage(&self, id: &str, event: Event) -> Result<Staged> {
        self.get(id)?.stage(event)
    }

    /// Persists a staged event and applies it. Fails without touching the
    /// in-memory state if the write fails.
    pub fn commit(&mut self, id: &str, staged: Staged) -> Result<&Campaign> {
        let entry = self.campaigns.get_mut(id).ok_or_else(|| ServiceError::NotFound(format!("campaign `{id}`")))?;
        let record = entry.campaign.record_for(&staged);
        append_record(&mut entry.log, &record)?;
        entry.campaign.commit(staged);
        write_snapshots(&entry.dir, &entry.campaign)?;
        Ok(&entry.campaign)
    }
}
