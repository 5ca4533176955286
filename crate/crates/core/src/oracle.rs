//! The provider-side interfaces a session hijacker can reach.
//!
//! [`suggest`] is the prefix-completion endpoint: it answers with at most
//! three suggestions drawn from the user's clicked queries, flagged as
//! history, followed by generic completions. [`targeted_check`],
//! [`maps_dump`] and [`mobile_dump`] model the other channels that leak
//! the same data in bulk or by probing.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::history::{HistoryEntry, SearchHistory};
use crate::text::{normalize_with, Alphabet};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("prefix {prefix:?} is shorter than {min} characters")]
    PrefixTooShort { prefix: String, min: usize },
    #[error("prefix {0:?} is not normalized")]
    UnnormalizedPrefix(String),
    #[error("session token was rejected")]
    InvalidSession,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Origin {
    History,
    Generic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "SuggestionWire", from = "SuggestionWire")]
pub struct Suggestion {
    pub text: String,
    pub origin: Origin,
}

#[derive(Serialize, Deserialize)]
struct SuggestionWire {
    text: String,
    from_history: bool,
}

impl From<Suggestion> for SuggestionWire {
    fn from(s: Suggestion) -> Self {
        SuggestionWire { text: s.text, from_history: s.origin == Origin::History }
    }
}

impl From<SuggestionWire> for Suggestion {
    fn from(w: SuggestionWire) -> Self {
        let origin = if w.from_history { Origin::History } else { Origin::Generic };
        Suggestion { text: w.text, origin }
    }
}

/// Reply to one suggestion request. History suggestions come first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "ResponseWire", from = "ResponseWire")]
pub struct SuggestionResponse {
    pub prefix: String,
    pub suggestions: Vec<Suggestion>,
    pub history_count: usize,
}

#[derive(Serialize, Deserialize)]
struct ResponseWire {
    prefix: String,
    suggestions: Vec<Suggestion>,
}

impl From<SuggestionResponse> for ResponseWire {
    fn from(r: SuggestionResponse) -> Self {
        ResponseWire { prefix: r.prefix, suggestions: r.suggestions }
    }
}

impl From<ResponseWire> for SuggestionResponse {
    fn from(w: ResponseWire) -> Self {
        let history_count = w.suggestions.iter().filter(|s| s.origin == Origin::History).count();
        SuggestionResponse { prefix: w.prefix, suggestions: w.suggestions, history_count }
    }
}

impl SuggestionResponse {
    pub fn history_texts(&self) -> impl Iterator<Item = &str> {
        self.suggestions.iter().filter(|s| s.origin == Origin::History).map(|s| s.text.as_str())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("response serializes")
    }
}

/// Order in which eligible clicked entries compete for the history slots.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HistoryRanking {
    /// Count descending, then most recent first, then lexicographic.
    #[default]
    FrequencyRecency,
    /// Most recent first, then count descending, then lexicographic.
    RecencyFrequency,
    Lexicographic,
}

impl HistoryRanking {
    /// `Less` means `a` ranks ahead of `b`.
    pub fn compare(self, a: &HistoryEntry, b: &HistoryEntry) -> Ordering {
        let lex = a.query.cmp(&b.query);
        match self {
            HistoryRanking::FrequencyRecency => {
                b.count.cmp(&a.count).then(b.last_time.cmp(&a.last_time)).then(lex)
            }
            HistoryRanking::RecencyFrequency => {
                b.last_time.cmp(&a.last_time).then(b.count.cmp(&a.count)).then(lex)
            }
            HistoryRanking::Lexicographic => lex,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleConfig {
    pub ranking: HistoryRanking,
    pub history_cap: usize,
    pub total_cap: usize,
    pub min_prefix_len: usize,
    /// Entries last searched before this time are not served. `None` keeps
    /// every entry eligible.
    pub eligible_since: Option<i64>,
    pub alphabet: Alphabet,
    /// Substring of the User-Agent that unlocks the mobile history page.
    pub mobile_ua_pattern: String,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            ranking: HistoryRanking::default(),
            history_cap: 3,
            total_cap: 10,
            min_prefix_len: 2,
            eligible_since: None,
            alphabet: Alphabet::default(),
            mobile_ua_pattern: "iPhone".to_string(),
        }
    }
}

impl OracleConfig {
    pub(crate) fn eligible(&self, entry: &HistoryEntry) -> bool {
        entry.clicked && self.eligible_since.is_none_or(|since| entry.last_time >= since)
    }

    fn check_prefix(&self, prefix: &str) -> Result<(), OracleError> {
        if prefix.chars().count() < self.min_prefix_len {
            return Err(OracleError::PrefixTooShort { prefix: prefix.to_string(), min: self.min_prefix_len });
        }
        if !self.alphabet.is_valid_prefix(prefix) {
            return Err(OracleError::UnnormalizedPrefix(prefix.to_string()));
        }
        Ok(())
    }
}

/// Globally popular queries, best first. Serves the generic half of a
/// response.
#[derive(Debug, Clone, Default)]
pub struct GenericCorpus {
    rank_by_text: BTreeMap<String, usize>,
}

impl GenericCorpus {
    pub fn empty() -> Self {
        GenericCorpus::default()
    }

    /// Items are normalized with `alphabet`; the first occurrence of a
    /// query fixes its rank.
    pub fn from_ranked<I, S>(queries: I, alphabet: &Alphabet) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut rank_by_text = BTreeMap::new();
        for (rank, q) in queries.into_iter().enumerate() {
            let q = normalize_with(q.as_ref(), alphabet);
            if !q.is_empty() {
                rank_by_text.entry(q).or_insert(rank);
            }
        }
        GenericCorpus { rank_by_text }
    }

    pub fn len(&self) -> usize {
        self.rank_by_text.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rank_by_text.is_empty()
    }

    /// The best-ranked `limit` completions of `prefix` not in `exclude`.
    pub fn completions(&self, prefix: &str, limit: usize, exclude: &BTreeSet<&str>) -> Vec<String> {
        if limit == 0 {
            return Vec::new();
        }
        let mut matches: Vec<(usize, &str)> = self
            .rank_by_text
            .range::<str, _>((std::ops::Bound::Included(prefix), std::ops::Bound::Unbounded))
            .take_while(|(q, _)| q.starts_with(prefix))
            .filter(|(q, _)| !exclude.contains(q.as_str()))
            .map(|(q, &rank)| (rank, q.as_str()))
            .collect();
        matches.sort_unstable();
        matches.into_iter().take(limit).map(|(_, q)| q.to_string()).collect()
    }
}

/// The suggestion endpoint.
pub fn suggest(
    history: &SearchHistory,
    prefix: &str,
    corpus: &GenericCorpus,
    config: &OracleConfig,
) -> Result<SuggestionResponse, OracleError> {
    config.check_prefix(prefix)?;

    let mut candidates: Vec<&HistoryEntry> =
        history.entries_with_prefix(prefix).filter(|e| config.eligible(e)).collect();
    let cap = config.history_cap.min(config.total_cap);
    if candidates.len() > cap {
        candidates.select_nth_unstable_by(cap, |a, b| config.ranking.compare(a, b));
        candidates.truncate(cap);
    }
    candidates.sort_by(|a, b| config.ranking.compare(a, b));

    let mut suggestions: Vec<Suggestion> = candidates
        .iter()
        .map(|e| Suggestion { text: e.query.clone(), origin: Origin::History })
        .collect();
    let history_count = suggestions.len();

    let taken: BTreeSet<&str> = candidates.iter().map(|e| e.query.as_str()).collect();
    let room = config.total_cap - history_count;
    suggestions.extend(
        corpus
            .completions(prefix, room, &taken)
            .into_iter()
            .map(|text| Suggestion { text, origin: Origin::Generic }),
    );

    Ok(SuggestionResponse { prefix: prefix.to_string(), suggestions, history_count })
}

/// Anything that answers suggestion requests for a single victim.
pub trait SuggestionOracle {
    fn suggest(&self, prefix: &str) -> Result<SuggestionResponse, OracleError>;
}

/// Serves suggestions straight from a history, with no session check.
#[derive(Debug, Clone)]
pub struct SuggestionService<'a> {
    pub history: &'a SearchHistory,
    pub corpus: &'a GenericCorpus,
    pub config: &'a OracleConfig,
}

impl<'a> SuggestionService<'a> {
    pub fn new(history: &'a SearchHistory, corpus: &'a GenericCorpus, config: &'a OracleConfig) -> Self {
        SuggestionService { history, corpus, config }
    }
}

impl SuggestionOracle for SuggestionService<'_> {
    fn suggest(&self, prefix: &str) -> Result<SuggestionResponse, OracleError> {
        suggest(self.history, prefix, self.corpus, self.config)
    }
}

/// Link tag shown next to a previously visited result page.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CustomizationMarker {
    pub url: String,
    pub visit_count: u32,
    pub last_visit: i64,
}

/// Reports which of `probe_result_urls` would carry a visit tag in the
/// victim's personalized results.
///
/// `visit_count` is the number of history entries whose clicks include the
/// URL, `last_visit` the latest `last_time` among them. Markers come back in
/// probe order, one per distinct URL.
pub fn targeted_check<S: AsRef<str>>(history: &SearchHistory, probe_result_urls: &[S]) -> Vec<CustomizationMarker> {
    let mut seen = BTreeSet::new();
    let mut markers = Vec::new();
    for url in probe_result_urls {
        let url = url.as_ref();
        if !seen.insert(url) {
            continue;
        }
        let mut visits = 0u32;
        let mut last_visit = i64::MIN;
        for entry in history.clicked_entries().filter(|e| e.clicked_urls.iter().any(|u| u == url)) {
            visits += 1;
            last_visit = last_visit.max(entry.last_time);
        }
        if visits > 0 {
            markers.push(CustomizationMarker { url: url.to_string(), visit_count: visits, last_visit });
        }
    }
    markers
}

/// One saved location from the Maps page.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapsHistoryEntry {
    pub id: u64,
    pub address: String,
    pub label: String,
    pub created: i64,
    pub count: u32,
}

/// The Maps page embeds the whole location history; one fetch returns all
/// of it.
pub fn maps_dump(maps_history: &[MapsHistoryEntry]) -> String {
    serde_json::to_string(maps_history).expect("maps entries serialize")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MobileDump {
    /// Every query in the history, clicked or not, in query order.
    Full(Vec<String>),
    Refused,
}

pub fn mobile_dump(history: &SearchHistory, user_agent: &str, config: &OracleConfig) -> MobileDump {
    if user_agent.contains(&config.mobile_ua_pattern) {
        MobileDump::Full(history.entries().map(|e| e.query.clone()).collect())
    } else {
        MobileDump::Refused
    }
}

/// A victim account as the provider stores it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Account {
    /// Value of the session cookie the provider issued.
    pub sid: String,
    pub history: SearchHistory,
    #[serde(default)]
    pub maps_history: Vec<MapsHistoryEntry>,
}

/// Provider endpoints reached with a replayed session token. Every call is
/// rejected unless the token matches the account's session.
#[derive(Debug, Clone)]
pub struct HijackedSession<'a> {
    account: &'a Account,
    token: String,
    corpus: &'a GenericCorpus,
    config: &'a OracleConfig,
}

impl<'a> HijackedSession<'a> {
    pub fn new(account: &'a Account, token: impl Into<String>, corpus: &'a GenericCorpus, config: &'a OracleConfig) -> Self {
        HijackedSession { account, token: token.into(), corpus, config }
    }

    fn authorize(&self) -> Result<(), OracleError> {
        if self.token == self.account.sid {
            Ok(())
        } else {
            Err(OracleError::InvalidSession)
        }
    }

    pub fn maps_dump(&self) -> Result<String, OracleError> {
        self.authorize()?;
        Ok(maps_dump(&self.account.maps_history))
    }

    pub fn mobile_dump(&self, user_agent: &str) -> Result<MobileDump, OracleError> {
        self.authorize()?;
        Ok(mobile_dump(&self.account.history, user_agent, self.config))
    }

    pub fn targeted_check<S: AsRef<str>>(&self, probe_result_urls: &[S]) -> Result<Vec<CustomizationMarker>, OracleError> {
        self.authorize()?;
        Ok(targeted_check(&self.account.history, probe_result_urls))
    }
}

impl SuggestionOracle for HijackedSession<'_> {
    fn suggest(&self, prefix: &str) -> Result<SuggestionResponse, OracleError> {
        self.authorize()?;
        suggest(&self.account.history, prefix, self.corpus, self.config)
    }
}
