//! History reconstruction through the suggestion oracle.
//!
//! Starting from the plan's seeds, each prefix is requested once. Every
//! history-flagged suggestion in the reply is a clicked query of the
//! victim. A reply that fills all history slots means more clicked queries
//! may hide behind the prefix, so its planned extensions join the frontier.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, HashSet, VecDeque};
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::history::SearchHistory;
use crate::oracle::{OracleError, SuggestionOracle};
use crate::planner::PrefixPlan;

/// Order in which pending prefixes are requested.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Discipline {
    /// Highest corpus count first, then shorter, then lexicographic.
    #[default]
    Priority,
    /// Seeds in plan order, then their extensions breadth-first.
    LevelOrder,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttackConfig {
    /// Maximum number of requests; `None` for no limit.
    pub budget: Option<u64>,
    /// Longest prefix that may be requested; `None` for no limit.
    pub max_depth: Option<usize>,
    /// History-suggestion count that triggers descent.
    pub descent_threshold: usize,
    pub discipline: Discipline,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig { budget: None, max_depth: None, descent_threshold: 3, discipline: Discipline::Priority }
    }
}

#[derive(Debug, Error)]
pub enum AttackError {
    #[error("descent threshold {0} is outside 1..=3")]
    BadThreshold(usize),
    #[error("plan has no seeds")]
    NoSeeds,
    /// The oracle failed mid-run; `partial` holds what was gathered so far.
    #[error("oracle failed after {} requests: {source}", partial.requests_used)]
    Oracle { source: OracleError, partial: Box<ReconstructionResult> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoggedRequest {
    pub prefix: String,
    pub history_count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReconstructionResult {
    pub recovered: BTreeSet<String>,
    pub requests_used: u64,
    pub request_log: Vec<LoggedRequest>,
    /// True when the run stopped because nothing was left to ask, false
    /// when the budget ran out first.
    pub frontier_exhausted: bool,
}

impl ReconstructionResult {
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }
}

#[derive(Debug, PartialEq, Eq)]
struct Pending {
    count: u64,
    prefix: String,
    len: usize,
}

impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap pops the greatest.
        self.count
            .cmp(&other.count)
            .then(other.len.cmp(&self.len))
            .then(other.prefix.cmp(&self.prefix))
    }
}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

enum Frontier {
    Priority(BinaryHeap<Pending>),
    Fifo(VecDeque<String>),
}

impl Frontier {
    fn push(&mut self, plan: &PrefixPlan, prefix: String) {
        match self {
            Frontier::Priority(heap) => {
                heap.push(Pending { count: plan.corpus_count(&prefix), len: prefix.chars().count(), prefix })
            }
            Frontier::Fifo(queue) => queue.push_back(prefix),
        }
    }

    fn pop(&mut self) -> Option<String> {
        match self {
            Frontier::Priority(heap) => heap.pop().map(|p| p.prefix),
            Frontier::Fifo(queue) => queue.pop_front(),
        }
    }
}

/// Runs the attack against `oracle`. Never requests the same prefix twice.
pub fn reconstruct<O: SuggestionOracle + ?Sized>(
    oracle: &O,
    plan: &PrefixPlan,
    config: &AttackConfig,
) -> Result<ReconstructionResult, AttackError> {
    if !(1..=3).contains(&config.descent_threshold) {
        return Err(AttackError::BadThreshold(config.descent_threshold));
    }
    if plan.seeds().is_empty() {
        return Err(AttackError::NoSeeds);
    }

    let mut frontier = match config.discipline {
        Discipline::Priority => Frontier::Priority(BinaryHeap::new()),
        Discipline::LevelOrder => Frontier::Fifo(VecDeque::new()),
    };
    let mut queued: HashSet<String> = HashSet::new();
    for seed in plan.seeds() {
        if queued.insert(seed.clone()) {
            frontier.push(plan, seed.clone());
        }
    }

    let mut result = ReconstructionResult::default();
    loop {
        if config.budget.is_some_and(|b| result.requests_used >= b) {
            // Out of budget; the frontier may or may not still hold work.
            result.frontier_exhausted = false;
            break;
        }
        let Some(prefix) = frontier.pop() else {
            result.frontier_exhausted = true;
            break;
        };
        let response = match oracle.suggest(&prefix) {
            Ok(r) => r,
            Err(source) => return Err(AttackError::Oracle { source, partial: Box::new(result) }),
        };
        result.requests_used += 1;
        result.recovered.extend(response.history_texts().map(str::to_string));
        result.request_log.push(LoggedRequest { prefix: prefix.clone(), history_count: response.history_count });

        let depth = prefix.chars().count();
        if response.history_count >= config.descent_threshold && config.max_depth.is_none_or(|d| depth < d) {
            for child in plan.extend(&prefix) {
                if queued.insert(child.clone()) {
                    frontier.push(plan, child);
                }
            }
        }
    }
    Ok(result)
}

/// One row of the recall table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallReport {
    pub user_id: String,
    pub n_h: usize,
    pub n_c: usize,
    pub n_s: usize,
    /// `n_s / n_c` at full precision; zero when `n_c` is zero.
    pub recall: f64,
    pub n_requests: u64,
}

impl RecallReport {
    /// Recall rounded half away from zero to two decimals.
    pub fn recall_display(&self) -> String {
        format_recall(self.recall)
    }
}

pub fn recall(n_s: usize, n_c: usize) -> f64 {
    if n_c == 0 {
        0.0
    } else {
        n_s as f64 / n_c as f64
    }
}

/// Two-decimal rendering used in reports.
pub fn format_recall(recall: f64) -> String {
    format!("{:.2}", (recall * 100.0).round() / 100.0)
}

/// Scores a reconstruction against the history it was run on. Only
/// recovered texts that are clicked queries of `truth` count toward `n_s`.
pub fn score(result: &ReconstructionResult, truth: &SearchHistory) -> RecallReport {
    let n_c = truth.n_c();
    let n_s = result.recovered.iter().filter(|q| truth.get(q).is_some_and(|e| e.clicked)).count();
    RecallReport {
        user_id: truth.user_id().to_string(),
        n_h: truth.n_h(),
        n_c,
        n_s,
        recall: recall(n_s, n_c),
        n_requests: result.requests_used,
    }
}

/// CSV header `user_id,n_h,n_c,n_s,recall,n_requests` plus one row per
/// report.
pub fn write_recall_csv<'a, W, I>(writer: W, reports: I) -> Result<(), csv::Error>
where
    W: Write,
    I: IntoIterator<Item = &'a RecallReport>,
{
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["user_id", "n_h", "n_c", "n_s", "recall", "n_requests"])?;
    for r in reports {
        w.write_record([
            r.user_id.clone(),
            r.n_h.to_string(),
            r.n_c.to_string(),
            r.n_s.to_string(),
            r.recall_display(),
            r.n_requests.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
