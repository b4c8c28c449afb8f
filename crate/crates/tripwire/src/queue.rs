//! Moderation queue backed by an append-only JSONL event log.
//!
//! Every state change is one line (`flagged` or `reviewed`) written before
//! the in-memory state is updated, so replaying the log on start-up restores
//! the queue after a crash. A torn final line is discarded on open.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{self, Read, Seek, SeekFrom, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tripwire_core::{DocumentRecord, Label};

use crate::highlight::{Feature, Scored};
use crate::ingest::write_corpus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pending,
    Confirmed,
    Rejected,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pending => "pending",
            Status::Confirmed => "confirmed",
            Status::Rejected => "rejected",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Status {
    type Err = QueueError;

    fn from_str(s: &str) -> Result<Self, QueueError> {
        match s {
            "pending" => Ok(Status::Pending),
            "confirmed" => Ok(Status::Confirmed),
            "rejected" => Ok(Status::Rejected),
            other => Err(QueueError::Invalid(format!("unknown status {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlaggedItem {
    pub item_id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub author: Option<String>,
    pub score: f64,
    pub label: Label,
    pub received_at: String,
    pub status: Status,
    pub reviewer: Option<String>,
    pub reviewed_at: Option<String>,
    #[serde(default)]
    pub normalized: String,
    #[serde(default)]
    pub top_features: Vec<Feature>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "lowercase")]
enum Event {
    Flagged(FlaggedItem),
    Reviewed { item_id: String, status: Status, reviewer: String, reviewed_at: String },
}

#[derive(Debug, Error)]
pub enum QueueError {
    #[error("no queue item {0}")]
    NotFound(String),
    #[error("item {} is already {}", .0.item_id, .0.status)]
    Conflict(Box<FlaggedItem>),
    #[error("{0}")]
    Invalid(String),
    #[error("log line {line}: {reason}")]
    Corrupt { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ListQuery {
    pub status: Option<Status>,
    pub min_score: Option<f64>,
    /// 1-based.
    pub page: usize,
    pub page_size: usize,
}

impl Default for ListQuery {
    fn default() -> Self {
        ListQuery { status: Some(Status::Pending), min_score: None, page: 1, page_size: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Page {
    pub items: Vec<FlaggedItem>,
    pub page: usize,
    pub page_size: usize,
    pub total: usize,
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

#[derive(Debug, Default)]
pub struct ModerationQueue {
    items: BTreeMap<u64, FlaggedItem>,
    next_id: u64,
    log: Option<File>,
}

impl ModerationQueue {
    /// A queue without persistence.
    pub fn in_memory() -> Self {
        ModerationQueue { next_id: 1, ..Default::default() }
    }

    /// Opens (or creates) the log at `path` and replays it.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, QueueError> {
        let mut file = OpenOptions::new().read(true).append(true).create(true).open(path)?;
        let mut content = String::new();
        file.read_to_string(&mut content)?;
        let complete = content.rfind('\n').map_or(0, |i| i + 1);
        if complete < content.len() {
            file.set_len(complete as u64)?;
            file.seek(SeekFrom::End(0))?;
        }
        let mut queue = Self::in_memory();
        for (i, line) in content[..complete].lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let corrupt = |reason: String| QueueError::Corrupt { line: i + 1, reason };
            let event: Event = serde_json::from_str(line).map_err(|e| corrupt(e.to_string()))?;
            queue.apply(event).map_err(|e| corrupt(e.to_string()))?;
        }
        queue.log = Some(file);
        Ok(queue)
    }

    fn apply(&mut self, event: Event) -> Result<(), QueueError> {
        match event {
            Event::Flagged(item) => {
                let id = parse_id(&item.item_id)?;
                if self.items.contains_key(&id) {
                    return Err(QueueError::Invalid(format!("item {id} flagged twice")));
                }
                self.next_id = self.next_id.max(id + 1);
                self.items.insert(id, item);
            }
            Event::Reviewed { item_id, status, reviewer, reviewed_at } => {
                let item = self.get_mut(&item_id)?;
                item.status = status;
                item.reviewer = Some(reviewer);
                item.reviewed_at = Some(reviewed_at);
            }
        }
        Ok(())
    }

    fn append(&mut self, event: &Event) -> Result<(), QueueError> {
        if let Some(log) = &mut self.log {
            let mut line = serde_json::to_vec(event).map_err(io::Error::from)?;
            line.push(b'\n');
            log.write_all(&line)?;
        }
        Ok(())
    }

    fn get_mut(&mut self, item_id: &str) -> Result<&mut FlaggedItem, QueueError> {
        let id = parse_id(item_id)?;
        self.items.get_mut(&id).ok_or_else(|| QueueError::NotFound(item_id.to_string()))
    }

    pub fn get(&self, item_id: &str) -> Option<&FlaggedItem> {
        parse_id(item_id).ok().and_then(|id| self.items.get(&id))
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn pending(&self) -> usize {
        self.items.values().filter(|i| i.status == Status::Pending).count()
    }

    /// All items in id order.
    pub fn items(&self) -> impl Iterator<Item = &FlaggedItem> {
        self.items.values()
    }

    pub fn enqueue(&mut self, text: &str, author: Option<&str>, scored: &Scored) -> Result<FlaggedItem, QueueError> {
        let prediction = &scored.prediction;
        let item = FlaggedItem {
            item_id: self.next_id.to_string(),
            text: text.to_string(),
            author: author.map(str::to_string),
            score: prediction.score,
            label: prediction.label,
            received_at: now(),
            status: Status::Pending,
            reviewer: None,
            reviewed_at: None,
            normalized: scored.normalized.clone(),
            top_features: scored.top_features.clone(),
        };
        let event = Event::Flagged(item.clone());
        self.append(&event)?;
        self.apply(event)?;
        Ok(item)
    }

    /// Records a moderator decision. Only pending items can be reviewed.
    pub fn review(&mut self, item_id: &str, decision: &str, reviewer: &str) -> Result<FlaggedItem, QueueError> {
        let status = match decision {
            "confirmed" => Status::Confirmed,
            "rejected" => Status::Rejected,
            other => {
                return Err(QueueError::Invalid(format!(
                    "decision must be \"confirmed\" or \"rejected\", got {other:?}"
                )))
            }
        };
        if reviewer.trim().is_empty() {
            return Err(QueueError::Invalid("reviewer is required".into()));
        }
        let item = self.get_mut(item_id)?;
        if item.status != Status::Pending {
            return Err(QueueError::Conflict(Box::new(item.clone())));
        }
        let event = Event::Reviewed {
            item_id: item.item_id.clone(),
            status,
            reviewer: reviewer.to_string(),
            reviewed_at: now(),
        };
        self.append(&event)?;
        self.apply(event)?;
        Ok(self.get(item_id).cloned().expect("item exists"))
    }

    /// Items matching the filters, highest score first.
    pub fn list(&self, query: &ListQuery) -> Page {
        let mut matching: Vec<&FlaggedItem> = self
            .items
            .values()
            .filter(|i| query.status.is_none_or(|s| i.status == s))
            .filter(|i| query.min_score.is_none_or(|m| i.score >= m))
            .collect();
        matching.sort_by(|a, b| b.score.total_cmp(&a.score));
        let page_size = query.page_size.max(1);
        let page = query.page.max(1);
        let items = matching
            .iter()
            .skip((page - 1).saturating_mul(page_size))
            .take(page_size)
            .map(|i| (*i).clone())
            .collect();
        Page { items, page, page_size, total: matching.len() }
    }

    /// Reviewed items as corpus records: confirmed as HATE, rejected as SAFE.
    pub fn export_records(&self) -> Vec<DocumentRecord> {
        self.items
            .iter()
            .filter_map(|(&id, item)| {
                let label = match item.status {
                    Status::Confirmed => Label::Hate,
                    Status::Rejected => Label::Safe,
                    Status::Pending => return None,
                };
                let mut r = DocumentRecord::new(id, item.author.as_deref().unwrap_or("unknown"), &*item.text, label);
                r.date = item.received_at.clone();
                Some(r)
            })
            .collect()
    }

    pub fn export_csv(&self) -> String {
        let mut out = Vec::new();
        write_corpus(&mut out, &self.export_records()).expect("writing to memory");
        String::from_utf8(out).expect("CSV of UTF-8 fields")
    }
}

fn parse_id(item_id: &str) -> Result<u64, QueueError> {
    item_id.parse().map_err(|_| QueueError::NotFound(item_id.to_string()))
}
