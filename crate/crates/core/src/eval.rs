//! Datasets and batch evaluation.
//!
//! Histories come from an AOL-format query log or from the seeded synthetic
//! generator. [`brute_force_recoverable`] computes, without any planning,
//! which clicked queries the oracle can reveal at all; it is the reference
//! the attack is checked against. [`run_batch`] attacks every history and
//! aggregates recall.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::NaiveDateTime;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attack::{reconstruct, recall, score, AttackConfig, RecallReport};
use crate::history::{HistoryEntry, SearchHistory};
use crate::oracle::{GenericCorpus, OracleConfig, SuggestionService};
use crate::planner::PrefixPlan;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("cannot read {path}: {source}")]
    Unreadable { path: String, source: std::io::Error },
    #[error("header {0:?} does not name the AnonID, Query, QueryTime, ItemRank, ClickURL columns")]
    HeaderMismatch(String),
    #[error("no histories to evaluate")]
    NoHistories,
    #[error("invalid synthetic configuration: {0}")]
    BadSynthetic(&'static str),
    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

pub const AOL_COLUMNS: [&str; 5] = ["AnonID", "Query", "QueryTime", "ItemRank", "ClickURL"];

/// One line of an AOL-format log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryLogRow {
    pub anon_id: String,
    pub query: String,
    pub query_time: i64,
    pub item_rank: Option<u32>,
    pub click_url: Option<String>,
}

impl QueryLogRow {
    /// `None` for rows that do not parse.
    pub fn parse(line: &str) -> Option<QueryLogRow> {
        let line = line.trim_end_matches(['\r', '\n']);
        let fields: Vec<&str> = line.split('\t').collect();
        if !(3..=5).contains(&fields.len()) {
            return None;
        }
        let field = |i: usize| fields.get(i).map(|s| s.trim()).filter(|s| !s.is_empty());
        let anon_id = field(0)?.to_string();
        let query = fields[1].to_string();
        let query_time = NaiveDateTime::parse_from_str(field(2)?, "%Y-%m-%d %H:%M:%S").ok()?.and_utc().timestamp();
        let item_rank = match field(3) {
            Some(s) => Some(s.parse().ok()?),
            None => None,
        };
        let click_url = field(4).map(str::to_string);
        Some(QueryLogRow { anon_id, query, query_time, item_rank, click_url })
    }
}

#[derive(Debug, Clone, Default)]
pub struct IngestReport {
    pub histories: BTreeMap<String, SearchHistory>,
    pub rows: usize,
    /// Rows that failed to parse or whose query normalized to nothing.
    pub skipped: usize,
}

/// Builds one history per `AnonID`. A row is clicked iff it has a click URL,
/// whether or not it also has an item rank.
pub fn ingest_query_log(path: &Path) -> Result<IngestReport, EvalError> {
    let unreadable = |source| EvalError::Unreadable { path: path.display().to_string(), source };
    let file = File::open(path).map_err(unreadable)?;
    ingest_query_log_from(BufReader::new(file)).map_err(|e| match e {
        EvalError::Unreadable { source, .. } => unreadable(source),
        other => other,
    })
}

pub fn ingest_query_log_from<R: BufRead>(reader: R) -> Result<IngestReport, EvalError> {
    let io_err = |source| EvalError::Unreadable { path: "<reader>".into(), source };
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(line) => line.map_err(io_err)?,
        None => return Err(EvalError::HeaderMismatch(String::new())),
    };
    let names: Vec<&str> = header.trim_end_matches('\r').split('\t').map(str::trim).collect();
    let matches = names.len() == AOL_COLUMNS.len()
        && names.iter().zip(AOL_COLUMNS).all(|(got, want)| got.eq_ignore_ascii_case(want));
    if !matches {
        return Err(EvalError::HeaderMismatch(header));
    }

    let mut report = IngestReport::default();
    for line in lines {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        report.rows += 1;
        let Some(row) = QueryLogRow::parse(&line) else {
            report.skipped += 1;
            continue;
        };
        let history = report
            .histories
            .entry(row.anon_id.clone())
            .or_insert_with(|| SearchHistory::new(row.anon_id.clone()));
        if history.insert_search(&row.query, row.query_time, row.click_url.as_deref()).is_err() {
            report.skipped += 1;
        }
    }
    // A user whose every row was skipped has nothing to attack.
    report.histories.retain(|_, h| !h.is_empty());
    Ok(report)
}

/// Parameters of the synthetic history generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub users: usize,
    pub entries_min: usize,
    pub entries_max: usize,
    pub clicked_fraction: f64,
    /// Queries have between one and this many words.
    pub max_words: usize,
    /// Exponent of the Zipf law over the (shuffled) vocabulary.
    pub zipf_exponent: f64,
    /// Upper bound on how often one query is repeated.
    pub max_repeats: u64,
    /// Share of queries typed as a web address (`www.<word>.com`).
    pub navigational_fraction: f64,
    pub start_time: i64,
    pub time_span: i64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            users: 10,
            entries_min: 50,
            entries_max: 200,
            clicked_fraction: 0.5,
            max_words: 3,
            zipf_exponent: 1.0,
            max_repeats: 10,
            navigational_fraction: 0.0,
            start_time: 1_230_768_000,
            time_span: 31_536_000,
            seed: 1,
        }
    }
}

/// Seeded, reproducible histories. Each user gets a number of distinct
/// queries drawn uniformly from `entries_min..=entries_max`; each query is
/// clicked with probability `clicked_fraction` and searched one or more
/// times.
pub fn gen_synthetic<S: AsRef<str>>(
    config: &SyntheticConfig,
    vocabulary: &[S],
) -> Result<BTreeMap<String, SearchHistory>, EvalError> {
    if !(0.0..=1.0).contains(&config.clicked_fraction) {
        return Err(EvalError::BadSynthetic("clicked_fraction must be in [0, 1]"));
    }
    if !(0.0..=1.0).contains(&config.navigational_fraction) {
        return Err(EvalError::BadSynthetic("navigational_fraction must be in [0, 1]"));
    }
    if config.entries_min > config.entries_max {
        return Err(EvalError::BadSynthetic("entries_min exceeds entries_max"));
    }
    if config.max_words == 0 || config.max_repeats == 0 || config.time_span < 0 {
        return Err(EvalError::BadSynthetic("max_words, max_repeats must be positive and time_span non-negative"));
    }
    let mut words: Vec<&str> = vocabulary.iter().map(AsRef::as_ref).filter(|w| !w.trim().is_empty()).collect();
    if words.is_empty() {
        return Err(EvalError::BadSynthetic("vocabulary is empty"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    words.shuffle(&mut rng);
    let word_law = Zipf::new(words.len() as u64, config.zipf_exponent)
        .map_err(|_| EvalError::BadSynthetic("zipf_exponent must be positive"))?;
    let repeat_law = Zipf::new(config.max_repeats, 2.0).expect("valid repeat law");

    let width = config.users.to_string().len().max(4);
    let mut out = BTreeMap::new();
    for u in 0..config.users {
        let user_id = format!("{:0width$}", u + 1);
        let target = rng.gen_range(config.entries_min..=config.entries_max);
        let mut history = SearchHistory::new(user_id.clone());
        let mut attempts = 0usize;
        while history.n_h() < target && attempts < target.saturating_mul(50) + 50 {
            attempts += 1;
            let n_words = rng.gen_range(1..=config.max_words);
            let query: Vec<&str> = (0..n_words).map(|_| words[word_law.sample(&mut rng) as usize - 1]).collect();
            let (query, url) = if rng.gen_bool(config.navigational_fraction) {
                let site = query.concat();
                (format!("www.{site}.com"), format!("http://www.{site}.com/"))
            } else {
                (query.join(" "), format!("http://www.{}.example.com/", query[0]))
            };
            if history.get(&crate::text::normalize(&query)).is_some() {
                continue;
            }
            let clicked = rng.gen_bool(config.clicked_fraction);
            let repeats = repeat_law.sample(&mut rng) as u64;
            for _ in 0..repeats {
                let t = config.start_time + rng.gen_range(0..=config.time_span);
                if history.insert_search(&query, t, clicked.then_some(url.as_str())).is_err() {
                    break;
                }
            }
        }
        out.insert(user_id, history);
    }
    Ok(out)
}

/// Clicked queries that show up among the history suggestions for at least
/// one of their own prefixes, found by asking every prefix of every clicked
/// query. No planner and no budget are involved.
pub fn brute_force_recoverable(history: &SearchHistory, oracle_config: &OracleConfig) -> BTreeSet<String> {
    let eligible: Vec<&HistoryEntry> = history.entries().filter(|e| oracle_config.eligible(e)).collect();
    let slots = oracle_config.history_cap.min(oracle_config.total_cap);
    let mut top_by_prefix: HashMap<String, Vec<&str>> = HashMap::new();
    let mut found = BTreeSet::new();
    for entry in &eligible {
        let chars: Vec<(usize, char)> = entry.query.char_indices().collect();
        for (n, _) in chars.iter().enumerate() {
            let len = n + 1;
            if len < oracle_config.min_prefix_len {
                continue;
            }
            let end = chars.get(len).map_or(entry.query.len(), |&(i, _)| i);
            let prefix = &entry.query[..end];
            if !oracle_config.alphabet.is_valid_prefix(prefix) {
                continue;
            }
            let top = top_by_prefix.entry(prefix.to_string()).or_insert_with(|| {
                let mut matching: Vec<&HistoryEntry> =
                    eligible.iter().copied().filter(|e| e.query.starts_with(prefix)).collect();
                matching.sort_by(|a, b| oracle_config.ranking.compare(a, b));
                matching.into_iter().take(slots).map(|e| e.query.as_str()).collect()
            });
            if top.contains(&entry.query.as_str()) {
                found.insert(entry.query.clone());
                break;
            }
        }
    }
    found
}

/// Shared, read-only inputs of a batch run.
#[derive(Debug, Clone, Copy)]
pub struct BatchSetup<'a> {
    pub plan: &'a PrefixPlan,
    pub attack: &'a AttackConfig,
    pub oracle: &'a OracleConfig,
    pub corpus: &'a GenericCorpus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserFailure {
    pub user_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub users: usize,
    /// Mean recall over users with at least one clicked query.
    pub mean_recall: f64,
    pub mean_requests: f64,
    pub per_user: Vec<RecallReport>,
    pub failures: Vec<UserFailure>,
}

impl AggregateReport {
    fn from_reports(per_user: Vec<RecallReport>, failures: Vec<UserFailure>) -> Self {
        let with_clicks: Vec<&RecallReport> = per_user.iter().filter(|r| r.n_c > 0).collect();
        let mean_recall = if with_clicks.is_empty() {
            0.0
        } else {
            with_clicks.iter().map(|r| r.recall).sum::<f64>() / with_clicks.len() as f64
        };
        let mean_requests = if per_user.is_empty() {
            0.0
        } else {
            per_user.iter().map(|r| r.n_requests as f64).sum::<f64>() / per_user.len() as f64
        };
        AggregateReport { users: per_user.len(), mean_recall, mean_requests, per_user, failures }
    }

    /// Recall over all entries rather than clicked ones, averaged the same way.
    pub fn mean_recall_over_all_entries(&self) -> f64 {
        let rows: Vec<f64> = self.per_user.iter().filter(|r| r.n_c > 0).map(|r| recall(r.n_s, r.n_h)).collect();
        if rows.is_empty() {
            0.0
        } else {
            rows.iter().sum::<f64>() / rows.len() as f64
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Attacks every history on `workers` threads. Output order and content do
/// not depend on the worker count: users are processed in `user_id` order
/// and means are summed sequentially.
pub fn run_batch(histories: &[SearchHistory], setup: BatchSetup<'_>, workers: usize) -> Result<AggregateReport, EvalError> {
    if histories.is_empty() {
        return Err(EvalError::NoHistories);
    }
    let mut ordered: Vec<&SearchHistory> = histories.iter().collect();
    ordered.sort_by(|a, b| a.user_id().cmp(b.user_id()));

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| EvalError::Pool(e.to_string()))?;
    let outcomes: Vec<Result<RecallReport, UserFailure>> = pool.install(|| {
        ordered
            .par_iter()
            .map(|h| {
                let oracle = SuggestionService::new(h, setup.corpus, setup.oracle);
                reconstruct(&oracle, setup.plan, setup.attack)
                    .map(|result| score(&result, h))
                    .map_err(|e| UserFailure { user_id: h.user_id().to_string(), error: e.to_string() })
            })
            .collect()
    });

    let mut per_user = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(r) => per_user.push(r),
            Err(f) => failures.push(f),
        }
    }
    Ok(AggregateReport::from_reports(per_user, failures))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub budget: u64,
    pub mean_recall: f64,
    pub mean_requests: f64,
}

pub const CURVE_BUDGETS: [u64; 3] = [110, 440, 2000];

/// Mean recall and requests at each budget, all else as in `setup`.
pub fn budget_curve(
    histories: &[SearchHistory],
    setup: BatchSetup<'_>,
    budgets: &[u64],
    workers: usize,
) -> Result<Vec<CurvePoint>, EvalError> {
    budgets
        .iter()
        .map(|&budget| {
            let attack = AttackConfig { budget: Some(budget), ..setup.attack.clone() };
            let report = run_batch(histories, BatchSetup { attack: &attack, ..setup }, workers)?;
            Ok(CurvePoint { budget, mean_recall: report.mean_recall, mean_requests: report.mean_requests })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::PlanConfig;

    const HEADER: &str = "AnonID\tQuery\tQueryTime\tItemRank\tClickURL\n";

    #[test]
    fn ingests_small_log() {
        let log = format!(
            "{HEADER}142\trentdirect.com\t2006-03-01 07:17:12\t\t\n\
             142\twww.prescriptionfortime.com\t2006-03-12 12:31:06\t1\thttp://www.prescriptionfortime.com\n\
             217\tlottery\t2006-03-01 11:58:51\t\t\n"
        );
        let r = ingest_query_log_from(log.as_bytes()).unwrap();
        assert_eq!(r.histories.len(), 2);
        assert_eq!(r.histories["142"].n_c(), 1);
        assert_eq!(r.histories["217"].n_c(), 0);
        assert_eq!(r.histories["142"].get("rentdirectcom").unwrap().first_time, 1141197432);
        assert_eq!((r.rows, r.skipped), (3, 0));
    }

    #[test]
    fn empty_log_gives_no_histories() {
        let r = ingest_query_log_from(HEADER.as_bytes()).unwrap();
        assert!(r.histories.is_empty());
    }

    #[test]
    fn click_without_rank_is_tolerated() {
        let log = format!("{HEADER}7\tpets 2010\t2010-02-05 16:32:00\t\thttp://petsymposium.org/2010/\n");
        let r = ingest_query_log_from(log.as_bytes()).unwrap();
        assert!(r.histories["7"].get("pets 2010").unwrap().clicked);
    }

    #[test]
    fn malformed_rows_skipped() {
        let log = format!(
            "{HEADER}1\tok\t2006-03-01 07:17:12\t\t\n\
             2\tbad time\tyesterday\t\t\n\
             3\t-\t2006-03-01 07:17:12\t\t\n\
             4\tbad rank\t2006-03-01 07:17:12\tx\thttp://a/\n\
             only-one-field\n"
        );
        let r = ingest_query_log_from(log.as_bytes()).unwrap();
        assert_eq!(r.histories.len(), 1);
        assert_eq!((r.rows, r.skipped), (5, 4));
    }

    #[test]
    fn header_checked() {
        assert!(matches!(ingest_query_log_from("id\tq\n".as_bytes()), Err(EvalError::HeaderMismatch(_))));
        assert!(matches!(ingest_query_log_from("".as_bytes()), Err(EvalError::HeaderMismatch(_))));
        assert!(matches!(ingest_query_log(Path::new("/nonexistent/aol.tsv")), Err(EvalError::Unreadable { .. })));
    }

    fn vocab() -> Vec<String> {
        ["privacy", "pets", "symposium", "cookie", "google", "search", "history", "maps", "tor", "exit", "node", "web"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    #[test]
    fn synthetic_is_reproducible() {
        let cfg = SyntheticConfig { users: 5, entries_min: 5, entries_max: 20, seed: 1, ..SyntheticConfig::default() };
        let a = gen_synthetic(&cfg, &vocab()).unwrap();
        let b = gen_synthetic(&cfg, &vocab()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 5);
        let c = gen_synthetic(&SyntheticConfig { seed: 2, ..cfg }, &vocab()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn synthetic_without_clicks() {
        let cfg = SyntheticConfig { users: 4, clicked_fraction: 0.0, entries_min: 10, entries_max: 10, ..SyntheticConfig::default() };
        for h in gen_synthetic(&cfg, &vocab()).unwrap().values() {
            assert_eq!(h.n_c(), 0);
            assert_eq!(h.n_h(), 10);
        }
    }

    #[test]
    fn synthetic_click_share_near_target() {
        // 1000 Bernoulli(0.5) draws: sd = sqrt(1000 * 0.25) ~= 15.8, so
        // [450, 550] is a +-3.16 sd band (two-sided miss chance ~0.16%).
        let words: Vec<String> = (0..5000).map(|i| format!("w{i}")).collect();
        let cfg = SyntheticConfig { users: 1, entries_min: 1000, entries_max: 1000, clicked_fraction: 0.5, ..SyntheticConfig::default() };
        let h = gen_synthetic(&cfg, &words).unwrap().into_values().next().unwrap();
        assert_eq!(h.n_h(), 1000);
        let share = h.n_c() as f64 / h.n_h() as f64;
        assert!((0.45..=0.55).contains(&share), "{share}");
    }

    #[test]
    fn synthetic_navigational_queries_are_normalized_addresses() {
        let words: Vec<String> = (0..5000).map(|i| format!("w{i}")).collect();
        let cfg = SyntheticConfig { users: 1, entries_min: 200, entries_max: 200, navigational_fraction: 1.0, ..SyntheticConfig::default() };
        let h = gen_synthetic(&cfg, &words).unwrap().into_values().next().unwrap();
        for e in h.entries() {
            assert!(e.query.starts_with("www") && e.query.ends_with("com") && !e.query.contains(['.', ' ']), "{}", e.query);
            if e.clicked {
                let site = &e.query[3..e.query.len() - 3];
                assert_eq!(e.clicked_urls, [format!("http://www.{site}.com/")]);
            }
        }
    }

    #[test]
    fn synthetic_rejects_bad_config() {
        let bad = SyntheticConfig { clicked_fraction: 1.5, ..SyntheticConfig::default() };
        assert!(gen_synthetic(&bad, &vocab()).is_err());
        let bad = SyntheticConfig { navigational_fraction: -0.1, ..SyntheticConfig::default() };
        assert!(gen_synthetic(&bad, &vocab()).is_err());
        assert!(gen_synthetic::<String>(&SyntheticConfig::default(), &[]).is_err());
    }

    fn clicked(queries: &[(&str, u32)]) -> SearchHistory {
        let mut h = SearchHistory::new("b");
        for (q, n) in queries {
            for _ in 0..*n {
                h.insert_search(q, 1, Some("http://r/")).unwrap();
            }
        }
        h
    }

    #[test]
    fn single_query_recoverable() {
        let h = clicked(&[("privacy", 1)]);
        assert_eq!(brute_force_recoverable(&h, &OracleConfig::default()), ["privacy".to_string()].into());
    }

    #[test]
    fn shadowed_query_unrecoverable() {
        // "ab" is a strict prefix of three more frequent clicked queries, so
        // at every prefix of "ab" ("ab" itself) those three fill the slots.
        // Hand enumeration: prefix "ab" matches {ab:1, abc:2, abd:2, abe:2};
        // top-3 = abc, abd, abe. Each of those is reached at "ab".
        let h = clicked(&[("ab", 1), ("abc", 2), ("abd", 2), ("abe", 2)]);
        let found = brute_force_recoverable(&h, &OracleConfig::default());
        assert_eq!(found, ["abc", "abd", "abe"].iter().map(|s| s.to_string()).collect());
    }

    #[test]
    fn equal_counts_lexicographic_last_needs_longer_prefix() {
        // Four equal-count queries sharing "ca". Ranking falls back to
        // lexicographic order: at "ca" the top-3 is cab, cac, cad; "cae" is
        // only reached at its own prefix "cae".
        let h = clicked(&[("cab", 1), ("cac", 1), ("cad", 1), ("cae", 1)]);
        let found = brute_force_recoverable(&h, &OracleConfig::default());
        assert_eq!(found.len(), 4);
        let top_at_ca = {
            let r = crate::oracle::suggest(&h, "ca", &GenericCorpus::empty(), &OracleConfig::default()).unwrap();
            r.history_texts().map(str::to_string).collect::<Vec<_>>()
        };
        assert_eq!(top_at_ca, ["cab", "cac", "cad"]);
    }

    #[test]
    fn recoverable_subset_of_clicked() {
        let mut h = clicked(&[("privacy", 1)]);
        h.insert_search("pets 10", 2, None).unwrap();
        let found = brute_force_recoverable(&h, &OracleConfig::default());
        assert!(found.iter().all(|q| h.get(q).unwrap().clicked));
    }

    fn batch_fixture() -> (Vec<SearchHistory>, PrefixPlan) {
        let words = vocab();
        let cfg = SyntheticConfig { users: 6, entries_min: 10, entries_max: 30, seed: 3, ..SyntheticConfig::default() };
        let histories: Vec<SearchHistory> = gen_synthetic(&cfg, &words).unwrap().into_values().collect();
        let plan = PrefixPlan::build(&words, PlanConfig { mass_fraction: 1.0, ..PlanConfig::default() }).unwrap();
        (histories, plan)
    }

    #[test]
    fn batch_independent_of_workers() {
        let (histories, plan) = batch_fixture();
        let attack = AttackConfig::default();
        let oracle = OracleConfig::default();
        let corpus = GenericCorpus::empty();
        let setup = BatchSetup { plan: &plan, attack: &attack, oracle: &oracle, corpus: &corpus };
        let one = run_batch(&histories, setup, 1).unwrap();
        let eight = run_batch(&histories, setup, 8).unwrap();
        assert_eq!(one.to_json_pretty(), eight.to_json_pretty());
        assert_eq!(one.users, 6);
    }

    #[test]
    fn zero_budget_batch() {
        let (histories, plan) = batch_fixture();
        let attack = AttackConfig { budget: Some(0), ..AttackConfig::default() };
        let oracle = OracleConfig::default();
        let corpus = GenericCorpus::empty();
        let setup = BatchSetup { plan: &plan, attack: &attack, oracle: &oracle, corpus: &corpus };
        let r = run_batch(&histories[..1], setup, 1).unwrap();
        assert_eq!((r.mean_recall, r.mean_requests), (0.0, 0.0));
    }

    #[test]
    fn empty_batch_rejected() {
        let (_, plan) = batch_fixture();
        let attack = AttackConfig::default();
        let oracle = OracleConfig::default();
        let corpus = GenericCorpus::empty();
        let setup = BatchSetup { plan: &plan, attack: &attack, oracle: &oracle, corpus: &corpus };
        assert!(matches!(run_batch(&[], setup, 1), Err(EvalError::NoHistories)));
    }

    #[test]
    fn mean_recall_skips_users_without_clicks() {
        let rows = vec![
            RecallReport { user_id: "a".into(), n_h: 4, n_c: 2, n_s: 1, recall: 0.5, n_requests: 10 },
            RecallReport { user_id: "b".into(), n_h: 3, n_c: 0, n_s: 0, recall: 0.0, n_requests: 20 },
            RecallReport { user_id: "c".into(), n_h: 2, n_c: 1, n_s: 1, recall: 1.0, n_requests: 30 },
        ];
        let agg = AggregateReport::from_reports(rows, vec![]);
        assert_eq!(agg.mean_recall, 0.75);
        assert_eq!(agg.mean_requests, 20.0);
        assert_eq!(agg.users, 3);
    }
}
