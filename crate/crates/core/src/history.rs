//! Ground-truth search histories.
//!
//! A [`SearchHistory`] holds one [`HistoryEntry`] per normalized query.
//! Repeated searches merge into the existing entry: the count grows, the
//! time range widens and clicked URLs are unioned. An entry is *clicked*
//! exactly when at least one result URL was followed.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::normalize;

#[derive(Debug, Error)]
pub enum HistoryError {
    #[error("history of user {0:?} is disabled")]
    Disabled(String),
    #[error("query {0:?} is empty after normalization")]
    EmptyQuery(String),
    #[error("invalid entry {query:?}: {reason}")]
    InvalidEntry { query: String, reason: &'static str },
    #[error("duplicate entry {0:?}")]
    DuplicateEntry(String),
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub query: String,
    pub clicked: bool,
    pub first_time: i64,
    pub last_time: i64,
    pub count: u32,
    pub clicked_urls: Vec<String>,
}

impl HistoryEntry {
    fn validate(&self) -> Result<(), HistoryError> {
        let invalid = |reason| HistoryError::InvalidEntry { query: self.query.clone(), reason };
        if self.query.is_empty() || normalize(&self.query) != self.query {
            return Err(invalid("query is not normalized"));
        }
        if self.clicked == self.clicked_urls.is_empty() {
            return Err(invalid("clicked flag disagrees with clicked_urls"));
        }
        if self.first_time > self.last_time {
            return Err(invalid("first_time is after last_time"));
        }
        if self.count == 0 {
            return Err(invalid("count is zero"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "HistoryRecord", into = "HistoryRecord")]
pub struct SearchHistory {
    user_id: String,
    history_enabled: bool,
    entries: BTreeMap<String, HistoryEntry>,
}

/// On-disk shape: entries as a list, in query order.
#[derive(Serialize, Deserialize)]
struct HistoryRecord {
    user_id: String,
    history_enabled: bool,
    entries: Vec<HistoryEntry>,
}

impl TryFrom<HistoryRecord> for SearchHistory {
    type Error = HistoryError;

    fn try_from(record: HistoryRecord) -> Result<Self, Self::Error> {
        let mut entries = BTreeMap::new();
        for entry in record.entries {
            entry.validate()?;
            if entries.contains_key(&entry.query) {
                return Err(HistoryError::DuplicateEntry(entry.query));
            }
            entries.insert(entry.query.clone(), entry);
        }
        Ok(SearchHistory { user_id: record.user_id, history_enabled: record.history_enabled, entries })
    }
}

impl From<SearchHistory> for HistoryRecord {
    fn from(history: SearchHistory) -> Self {
        HistoryRecord {
            user_id: history.user_id,
            history_enabled: history.history_enabled,
            entries: history.entries.into_values().collect(),
        }
    }
}

impl SearchHistory {
    /// An empty, enabled history.
    pub fn new(user_id: impl Into<String>) -> Self {
        SearchHistory { user_id: user_id.into(), history_enabled: true, entries: BTreeMap::new() }
    }

    pub fn disabled(user_id: impl Into<String>) -> Self {
        SearchHistory { history_enabled: false, ..SearchHistory::new(user_id) }
    }

    pub fn user_id(&self) -> &str {
        &self.user_id
    }

    pub fn history_enabled(&self) -> bool {
        self.history_enabled
    }

    /// Records one search. `clicked_url` is the result the user followed,
    /// if any.
    pub fn insert_search(
        &mut self,
        raw_query: &str,
        time: i64,
        clicked_url: Option<&str>,
    ) -> Result<&HistoryEntry, HistoryError> {
        if !self.history_enabled {
            return Err(HistoryError::Disabled(self.user_id.clone()));
        }
        let query = normalize(raw_query);
        if query.is_empty() {
            return Err(HistoryError::EmptyQuery(raw_query.to_string()));
        }
        let entry = self.entries.entry(query.clone()).or_insert_with(|| HistoryEntry {
            query,
            clicked: false,
            first_time: time,
            last_time: time,
            count: 0,
            clicked_urls: Vec::new(),
        });
        entry.count += 1;
        entry.first_time = entry.first_time.min(time);
        entry.last_time = entry.last_time.max(time);
        if let Some(url) = clicked_url {
            if !entry.clicked_urls.iter().any(|u| u == url) {
                entry.clicked_urls.push(url.to_string());
            }
            entry.clicked = true;
        }
        Ok(entry)
    }

    pub fn get(&self, query: &str) -> Option<&HistoryEntry> {
        self.entries.get(query)
    }

    /// All entries in query order.
    pub fn entries(&self) -> impl Iterator<Item = &HistoryEntry> {
        self.entries.values()
    }

    pub fn clicked_entries(&self) -> impl Iterator<Item = &HistoryEntry> {
        self.entries.values().filter(|e| e.clicked)
    }

    /// Entries whose query starts with `prefix`, in query order.
    pub fn entries_with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a HistoryEntry> + 'a {
        self.entries
            .range::<str, _>((std::ops::Bound::Included(prefix), std::ops::Bound::Unbounded))
            .take_while(move |(q, _)| q.starts_with(prefix))
            .map(|(_, e)| e)
    }

    /// `n_h`: number of distinct queries.
    pub fn n_h(&self) -> usize {
        self.entries.len()
    }

    /// `n_c`: number of clicked queries.
    pub fn n_c(&self) -> usize {
        self.clicked_entries().count()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Reads one history per line. Blank lines are skipped.
pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Vec<SearchHistory>, HistoryError> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let history = serde_json::from_str(&line).map_err(|source| HistoryError::Json { line: idx + 1, source })?;
        out.push(history);
    }
    Ok(out)
}

pub fn write_jsonl<'a, W, I>(mut writer: W, histories: I) -> Result<(), HistoryError>
where
    W: Write,
    I: IntoIterator<Item = &'a SearchHistory>,
{
    for history in histories {
        let line = serde_json::to_string(history).map_err(|source| HistoryError::Json { line: 0, source })?;
        writeln!(writer, "{line}")?;
    }
    Ok(())
}
