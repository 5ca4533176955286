//! Captured HTTP traffic: loading, redaction, user counting and account grouping.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{parse_cookie_header, parse_set_cookie, Cookie, Scheme};

/// Body flag set on result pages that link to the user's search history.
pub const HISTORY_LINK_FLAG: &str = "has_history_link";
/// Body flags of the form `entries:<service>=<n>` report how many entries a
/// replayed session could read from `service`.
pub const ENTRIES_FLAG_PREFIX: &str = "entries:";

pub const SID: &str = "SID";
pub const NID: &str = "NID";

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("trace line {line}: {reason}")]
    Invalid { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrafficRecord {
    pub time: i64,
    pub scheme: Scheme,
    pub client_ip: String,
    pub host: String,
    pub path: String,
    #[serde(default)]
    pub headers: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub body_flags: BTreeSet<String>,
}

impl TrafficRecord {
    pub fn new(time: i64, scheme: Scheme, client_ip: &str, host: &str, path: &str) -> Self {
        TrafficRecord {
            time,
            scheme,
            client_ip: client_ip.to_string(),
            host: host.to_ascii_lowercase(),
            path: path.to_string(),
            headers: BTreeMap::new(),
            body_flags: BTreeSet::new(),
        }
    }

    pub fn with_header(mut self, name: &str, value: &str) -> Self {
        self.headers.entry(name.to_string()).or_default().push(value.to_string());
        self
    }

    pub fn with_flag(mut self, flag: &str) -> Self {
        self.body_flags.insert(flag.to_string());
        self
    }

    /// All values of header `name`, matched case-insensitively.
    pub fn header_values<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.headers
            .iter()
            .filter(move |(k, _)| k.eq_ignore_ascii_case(name))
            .flat_map(|(_, vs)| vs.iter().map(String::as_str))
    }

    /// Crumbs from every `Cookie` header on the request.
    pub fn cookie_crumbs(&self) -> Vec<(String, String)> {
        self.header_values("Cookie").flat_map(parse_cookie_header).collect()
    }

    pub fn crumb(&self, name: &str) -> Option<String> {
        self.cookie_crumbs().into_iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    /// Cookies set by the response; unparseable headers are skipped.
    pub fn set_cookies(&self) -> Vec<Cookie> {
        self.header_values("Set-Cookie").filter_map(|v| parse_set_cookie(v, &self.host).ok()).collect()
    }

    /// Drops cookie headers an eavesdropper could not read.
    pub fn redact(&mut self) {
        if self.scheme == Scheme::Https {
            self.headers
                .retain(|k, _| !k.eq_ignore_ascii_case("Cookie") && !k.eq_ignore_ascii_case("Set-Cookie"));
        }
    }

    pub fn is_readable(&self) -> bool {
        self.scheme == Scheme::Http || self.header_values("Cookie").chain(self.header_values("Set-Cookie")).next().is_none()
    }

    /// `(service, n)` pairs from `entries:<service>=<n>` body flags.
    pub fn entry_counts(&self) -> impl Iterator<Item = (&str, u64)> {
        self.body_flags.iter().filter_map(|flag| {
            let (service, n) = flag.strip_prefix(ENTRIES_FLAG_PREFIX)?.split_once('=')?;
            Some((service, n.parse().ok()?))
        })
    }
}

/// Reads a JSON-lines trace and redacts every HTTPS record.
pub fn load_trace<R: BufRead>(reader: R) -> Result<Vec<TrafficRecord>, TraceError> {
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut record: TrafficRecord =
            serde_json::from_str(&line).map_err(|source| TraceError::Json { line: idx + 1, source })?;
        if record.host.is_empty() {
            return Err(TraceError::Invalid { line: idx + 1, reason: "empty host".into() });
        }
        record.host = record.host.to_ascii_lowercase();
        record.redact();
        records.push(record);
    }
    Ok(records)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserCounts {
    pub signed_in: u64,
    pub anonymous: u64,
    pub history_enabled: u64,
}

/// Counts users by cookie: distinct SIDs are signed-in users, distinct NIDs
/// never sent alongside an SID are anonymous users, and SIDs on pages
/// carrying the history link have history enabled.
pub fn count_users(trace: &[TrafficRecord]) -> UserCounts {
    let mut sids = BTreeSet::new();
    let mut with_history = BTreeSet::new();
    let mut nids = BTreeSet::new();
    let mut signed_nids = BTreeSet::new();
    for record in trace.iter().filter(|r| r.is_readable()) {
        let crumbs = record.cookie_crumbs();
        let sid = crumbs.iter().find(|(n, _)| n == SID).map(|(_, v)| v.clone());
        for (_, nid) in crumbs.iter().filter(|(n, _)| n == NID) {
            nids.insert(nid.clone());
            if sid.is_some() {
                signed_nids.insert(nid.clone());
            }
        }
        if let Some(sid) = sid {
            if record.body_flags.contains(HISTORY_LINK_FLAG) {
                with_history.insert(sid.clone());
            }
            sids.insert(sid);
        }
    }
    UserCounts {
        signed_in: sids.len() as u64,
        anonymous: nids.difference(&signed_nids).count() as u64,
        history_enabled: with_history.len() as u64,
    }
}

/// Everything an eavesdropper collected for one signed-in session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapturedAccount {
    pub sid: String,
    /// Client address of the earliest record carrying the SID.
    pub capture_ip: String,
    pub cookies: BTreeSet<Cookie>,
    pub history_enabled: bool,
    /// Largest entry count reported per service.
    pub entries: BTreeMap<String, u64>,
}

/// Registrable part of a host: its last two labels.
fn cookie_domain_for(host: &str) -> String {
    let labels: Vec<&str> = host.rsplitn(3, '.').collect();
    match labels.as_slice() {
        [tld, second, ..] => format!("{second}.{tld}"),
        _ => host.to_string(),
    }
}

/// Groups readable records by SID and reconstructs the cookie jar seen for each.
///
/// A crumb read from a `Cookie` header takes its attributes from a matching
/// `Set-Cookie` when one was observed; otherwise it is assumed to be an
/// insecure cookie for the host's registrable domain and path `/`.
pub fn captured_accounts(trace: &[TrafficRecord]) -> Vec<CapturedAccount> {
    let mut order: Vec<&TrafficRecord> = trace.iter().filter(|r| r.is_readable()).collect();
    order.sort_by_key(|r| r.time);

    let mut observed_sets: BTreeMap<(String, String), Cookie> = BTreeMap::new();
    for record in &order {
        for cookie in record.set_cookies() {
            observed_sets.entry((cookie.name.clone(), cookie.value.clone())).or_insert(cookie);
        }
    }

    let mut accounts: BTreeMap<String, CapturedAccount> = BTreeMap::new();
    for record in order {
        let crumbs = record.cookie_crumbs();
        let set = record.set_cookies();
        let sid = crumbs
            .iter()
            .find(|(n, _)| n == SID)
            .map(|(_, v)| v.clone())
            .or_else(|| set.iter().find(|c| c.name == SID).map(|c| c.value.clone()));
        let Some(sid) = sid else { continue };
        let account = accounts.entry(sid.clone()).or_insert_with(|| CapturedAccount {
            sid,
            capture_ip: record.client_ip.clone(),
            cookies: BTreeSet::new(),
            history_enabled: false,
            entries: BTreeMap::new(),
        });
        for (name, value) in crumbs {
            let cookie = observed_sets.get(&(name.clone(), value.clone())).cloned().unwrap_or_else(|| {
                Cookie::new(name, value, cookie_domain_for(&record.host))
            });
            account.cookies.insert(cookie);
        }
        account.cookies.extend(set);
        account.history_enabled |= record.body_flags.contains(HISTORY_LINK_FLAG);
        for (service, n) in record.entry_counts() {
            let slot = account.entries.entry(service.to_string()).or_insert(0);
            *slot = (*slot).max(n);
        }
    }
    accounts.into_values().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn search(ip: &str, cookie: &str) -> TrafficRecord {
        TrafficRecord::new(100, Scheme::Http, ip, "www.google.com", "/search?q=x").with_header("Cookie", cookie)
    }

    #[test]
    fn empty_trace_counts_zero() {
        assert_eq!(count_users(&[]), UserCounts::default());
    }

    #[test]
    fn counts_signed_in_anonymous_and_history() {
        let trace = vec![
            search("1.1.1.1", "SID=a; NID=n1").with_flag(HISTORY_LINK_FLAG),
            search("1.1.1.1", "SID=a; NID=n1"),
            search("1.1.1.2", "SID=b; NID=n2"),
            search("1.1.1.3", "NID=n3"),
            search("1.1.1.4", "NID=n4; PREF=x"),
            search("1.1.1.4", "NID=n4"),
            TrafficRecord::new(100, Scheme::Http, "1.1.1.5", "maps.google.com", "/"),
        ];
        assert_eq!(count_users(&trace), UserCounts { signed_in: 2, anonymous: 2, history_enabled: 1 });
    }

    #[test]
    fn nid_seen_with_sid_anywhere_is_not_anonymous() {
        let trace = vec![search("1.1.1.1", "NID=n1"), search("1.1.1.1", "SID=a; NID=n1")];
        assert_eq!(count_users(&trace).anonymous, 0);
    }

    #[test]
    fn loader_redacts_https() {
        let lines = [
            r#"{"time":1,"scheme":"HTTPS","client_ip":"1.1.1.1","host":"mail.google.com","path":"/mail","headers":{"cookie":["SID=a; SSID=b"],"Set-Cookie":["GX=1"],"User-Agent":["x"]},"body_flags":[]}"#,
            r#"{"time":2,"scheme":"HTTP","client_ip":"1.1.1.1","host":"WWW.google.com","path":"/search","headers":{"Cookie":["SID=a"]},"body_flags":["has_history_link"]}"#,
        ];
        let trace = load_trace(lines.join("\n").as_bytes()).unwrap();
        assert_eq!(trace.len(), 2);
        assert_eq!(trace[0].header_values("cookie").count(), 0);
        assert_eq!(trace[0].header_values("set-cookie").count(), 0);
        assert_eq!(trace[0].header_values("user-agent").collect::<Vec<_>>(), vec!["x"]);
        assert_eq!(trace[1].host, "www.google.com");
        assert_eq!(count_users(&trace), UserCounts { signed_in: 1, anonymous: 0, history_enabled: 1 });
    }

    #[test]
    fn loader_reports_line_numbers() {
        let err = load_trace("\n{oops".as_bytes()).unwrap_err();
        assert!(matches!(err, TraceError::Json { line: 2, .. }));
        let err = load_trace(r#"{"time":1,"scheme":"HTTP","client_ip":"x","host":"","path":"/"}"#.as_bytes()).unwrap_err();
        assert!(matches!(err, TraceError::Invalid { line: 1, .. }));
    }

    #[test]
    fn accounts_group_by_sid() {
        let trace = vec![
            search("1.1.1.9", "SID=a; NID=n1").with_flag("entries:Maps=22"),
            TrafficRecord::new(50, Scheme::Http, "1.1.1.1", "www.google.com", "/")
                .with_header("Set-Cookie", "SID=a; Domain=.google.com; Path=/")
                .with_header("Set-Cookie", "SSID=s; Domain=.google.com; Path=/; Secure"),
            search("1.1.1.2", "SID=b").with_flag("entries:Maps=3").with_flag("entries:Maps=oops"),
            search("1.1.1.3", "NID=n3"),
        ];
        let accounts = captured_accounts(&trace);
        assert_eq!(accounts.len(), 2);
        let a = &accounts[0];
        assert_eq!(a.sid, "a");
        assert_eq!(a.capture_ip, "1.1.1.1");
        assert_eq!(a.entries.get("Maps"), Some(&22));
        let names: Vec<_> = a.cookies.iter().map(|c| (c.name.as_str(), c.secure)).collect();
        assert!(names.contains(&("SID", false)) && names.contains(&("SSID", true)) && names.contains(&("NID", false)));
        let nid = a.cookies.iter().find(|c| c.name == "NID").unwrap();
        assert_eq!((nid.domain.as_str(), nid.path.as_str()), ("google.com", "/"));
        assert_eq!(accounts[1].entries.get("Maps"), Some(&3));
    }

    fn arb_record() -> impl Strategy<Value = TrafficRecord> {
        (
            prop_oneof![Just(Scheme::Http), Just(Scheme::Https)],
            proptest::option::of("[ab]"),
            proptest::option::of("[xyz]"),
            any::<bool>(),
        )
            .prop_map(|(scheme, sid, nid, hist)| {
                let mut crumbs = Vec::new();
                if let Some(s) = sid {
                    crumbs.push(format!("SID={s}"));
                }
                if let Some(n) = nid {
                    crumbs.push(format!("NID={n}"));
                }
                let mut r = TrafficRecord::new(0, scheme, "10.0.0.1", "www.google.com", "/search");
                if !crumbs.is_empty() {
                    r = r.with_header("Cookie", &crumbs.join("; "));
                }
                if hist {
                    r = r.with_flag(HISTORY_LINK_FLAG);
                }
                r
            })
    }

    proptest! {
        #[test]
        fn count_users_permutation_invariant(trace in proptest::collection::vec(arb_record(), 0..30), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut shuffled = trace.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(count_users(&trace), count_users(&shuffled));
        }

        #[test]
        fn loaded_https_records_expose_no_cookies(trace in proptest::collection::vec(arb_record(), 0..20)) {
            let text: Vec<String> = trace.iter().map(|r| serde_json::to_string(r).unwrap()).collect();
            let loaded = load_trace(text.join("\n").as_bytes()).unwrap();
            for r in &loaded {
                if r.scheme == Scheme::Https {
                    prop_assert_eq!(r.header_values("Cookie").count(), 0);
                }
            }
        }
    }
}
