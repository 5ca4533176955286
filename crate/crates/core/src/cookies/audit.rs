//! Which services a replayed cookie jar unlocks.

use std::collections::BTreeSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::trace::{captured_accounts, TrafficRecord, SID};
use super::{Cookie, Scheme};

/// Cookies that authenticate a signed-in session.
pub const AUTH_COOKIES: [&str; 3] = ["SID", "SSID", "LSID"];

const GOOGLE_CATALOG: &str = include_str!("../../data/google_services.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HttpsSupport {
    No,
    Optional,
    Mandatory,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceCatalogEntry {
    pub service: String,
    pub default_scheme: Scheme,
    pub https_support: HttpsSupport,
    pub uses_domain_cookie: bool,
    pub host_pattern: String,
    pub path_pattern: String,
    /// Kind of information the service holds; used as the report's first column.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub purpose: String,
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("catalog is not a JSON array of services: {0}")]
    Json(#[from] serde_json::Error),
    #[error("service {service:?}: {reason}")]
    Invalid { service: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ServiceCatalogEntry {
    fn validate(&self) -> Result<(), CatalogError> {
        let fail = |reason: &str| Err(CatalogError::Invalid { service: self.service.clone(), reason: reason.into() });
        if self.service.is_empty() {
            return fail("empty service name");
        }
        if self.host_pattern.is_empty() {
            return fail("empty host pattern");
        }
        if !self.path_pattern.starts_with('/') {
            return fail("path pattern must begin with '/'");
        }
        if self.default_scheme == Scheme::Https && self.https_support == HttpsSupport::No {
            return fail("HTTPS by default but HTTPS unsupported");
        }
        Ok(())
    }

    /// The information type reported for this service; falls back to its name.
    pub fn information_type(&self) -> &str {
        if self.purpose.is_empty() {
            &self.service
        } else {
            &self.purpose
        }
    }
}

/// Reads and validates a catalog: a JSON array of services with unique names.
pub fn load_catalog<R: Read>(reader: R) -> Result<Vec<ServiceCatalogEntry>, CatalogError> {
    let catalog: Vec<ServiceCatalogEntry> = serde_json::from_reader(reader)?;
    let mut seen = BTreeSet::new();
    for entry in &catalog {
        entry.validate()?;
        if !seen.insert(entry.service.as_str()) {
            return Err(CatalogError::Invalid { service: entry.service.clone(), reason: "listed twice".into() });
        }
    }
    Ok(catalog)
}

/// The bundled catalog of Google services circa 2010.
pub fn google_catalog() -> Vec<ServiceCatalogEntry> {
    load_catalog(GOOGLE_CATALOG.as_bytes()).expect("bundled catalog is valid")
}

/// Exposure of one captured session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccountExposure {
    /// SID value of the session, or empty when none was captured.
    pub account: String,
    pub services_accessible: Vec<String>,
    pub cookies_seen: Vec<String>,
    pub signed_in: bool,
    pub history_enabled: bool,
    #[serde(default)]
    pub entries: std::collections::BTreeMap<String, u64>,
}

fn accessible(entry: &ServiceCatalogEntry, captured: &[Cookie]) -> bool {
    if entry.https_support == HttpsSupport::Mandatory {
        return false;
    }
    let replayable = |c: &&Cookie| !c.secure && c.applies_to(entry.default_scheme, &entry.host_pattern, &entry.path_pattern, None);
    let authenticated = captured.iter().filter(replayable).any(|c| AUTH_COOKIES.contains(&c.name.as_str()));
    let domain_cookie = !entry.uses_domain_cookie
        || captured.iter().filter(replayable).any(|c| c.domain.eq_ignore_ascii_case(&entry.host_pattern));
    authenticated && domain_cookie
}

/// Services reachable by replaying `captured` from `replay_ip`.
///
/// A service is reachable when it does not mandate HTTPS, an insecure
/// authentication cookie applies to a request at its default scheme, host
/// and path, and, for services with their own domain cookie, an insecure
/// cookie for exactly that host was captured too. With IP binding enforced
/// nothing is reachable from an address other than `capture_ip`.
pub fn audit_services(
    captured: &[Cookie],
    catalog: &[ServiceCatalogEntry],
    enforce_ip_binding: bool,
    capture_ip: &str,
    replay_ip: &str,
) -> AccountExposure {
    let bound_out = enforce_ip_binding && capture_ip != replay_ip;
    let services_accessible = if bound_out {
        Vec::new()
    } else {
        catalog.iter().filter(|e| accessible(e, captured)).map(|e| e.service.clone()).collect()
    };
    let cookies_seen: BTreeSet<String> = captured.iter().map(|c| c.name.clone()).collect();
    let sid = captured.iter().find(|c| c.name == SID);
    AccountExposure {
        account: sid.map(|c| c.value.clone()).unwrap_or_default(),
        services_accessible,
        signed_in: sid.is_some(),
        cookies_seen: cookies_seen.into_iter().collect(),
        history_enabled: false,
        entries: Default::default(),
    }
}

/// Exposure of every signed-in session in a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HijackReport {
    pub catalog: Vec<ServiceCatalogEntry>,
    pub accounts: Vec<AccountExposure>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ServiceExposure {
    pub information_type: String,
    pub service: String,
    pub accounts_accessible: u64,
    /// Mean entry count over accessible accounts that reported one.
    pub mean_entries: Option<f64>,
}

impl HijackReport {
    /// Per-service aggregate in catalog order.
    pub fn by_service(&self) -> Vec<ServiceExposure> {
        self.catalog
            .iter()
            .map(|entry| {
                let reachable: Vec<&AccountExposure> =
                    self.accounts.iter().filter(|a| a.services_accessible.contains(&entry.service)).collect();
                let counts: Vec<u64> = reachable.iter().filter_map(|a| a.entries.get(&entry.service).copied()).collect();
                ServiceExposure {
                    information_type: entry.information_type().to_string(),
                    service: entry.service.clone(),
                    accounts_accessible: reachable.len() as u64,
                    mean_entries: (!counts.is_empty()).then(|| counts.iter().sum::<u64>() as f64 / counts.len() as f64),
                }
            })
            .collect()
    }
}

/// Audits every SID-keyed session in a redacted trace. Each session is
/// replayed from `replay_ip`, or from its own capture address when `None`.
pub fn audit_trace(
    trace: &[TrafficRecord],
    catalog: &[ServiceCatalogEntry],
    enforce_ip_binding: bool,
    replay_ip: Option<&str>,
) -> HijackReport {
    let accounts = captured_accounts(trace)
        .into_iter()
        .map(|account| {
            let cookies: Vec<Cookie> = account.cookies.iter().cloned().collect();
            let replay = replay_ip.unwrap_or(&account.capture_ip);
            let mut exposure = audit_services(&cookies, catalog, enforce_ip_binding, &account.capture_ip, replay);
            exposure.account = account.sid;
            exposure.history_enabled = account.history_enabled;
            exposure.entries = account.entries;
            exposure
        })
        .collect();
    HijackReport { catalog: catalog.to_vec(), accounts }
}

/// Writes the per-service aggregate as
/// `information_type,service,accounts_accessible,mean_entries`.
pub fn write_exposure_csv<W: Write>(writer: W, report: &HijackReport) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["information_type", "service", "accounts_accessible", "mean_entries"])?;
    for row in report.by_service() {
        let mean = row.mean_entries.map(|m| format!("{m:.2}")).unwrap_or_default();
        out.write_record([row.information_type, row.service, row.accounts_accessible.to_string(), mean])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cookies::parse_set_cookie;
    use proptest::prelude::*;

    fn sid() -> Cookie {
        parse_set_cookie("SID=abc; Domain=google.com; Path=/", "www.google.com").unwrap()
    }

    fn services(exposure: &AccountExposure) -> Vec<&str> {
        exposure.services_accessible.iter().map(String::as_str).collect()
    }

    #[test]
    fn bundled_catalog_mirrors_service_table() {
        let catalog = google_catalog();
        assert_eq!(catalog.len(), 14);
        let gmail = catalog.iter().find(|e| e.service == "Gmail").unwrap();
        assert_eq!((gmail.default_scheme, gmail.https_support), (Scheme::Https, HttpsSupport::Mandatory));
        let domain: Vec<_> = catalog.iter().filter(|e| e.uses_domain_cookie).map(|e| e.service.as_str()).collect();
        assert_eq!(domain, ["Docs", "Calendar", "Groups"]);
    }

    #[test]
    fn sid_alone_opens_plain_http_services() {
        let exposure = audit_services(&[sid()], &google_catalog(), false, "1.2.3.4", "6.6.6.6");
        assert_eq!(
            services(&exposure),
            ["Search", "Maps", "Reader", "Contacts", "History", "News", "Bookmarks", "Books", "Suggest"]
        );
        assert!(exposure.signed_in);
        assert_eq!(exposure.account, "abc");
        assert_eq!(exposure.cookies_seen, ["SID"]);
    }

    #[test]
    fn secure_cookies_never_replay() {
        let ssid = parse_set_cookie("SSID=s; Domain=google.com; Path=/; Secure", "www.google.com").unwrap();
        let lsid = parse_set_cookie("LSID=l; Domain=google.com; Path=/accounts; Secure", "www.google.com").unwrap();
        let exposure = audit_services(&[ssid, lsid], &google_catalog(), false, "a", "a");
        assert!(exposure.services_accessible.is_empty());
        assert!(!exposure.signed_in);
    }

    #[test]
    fn anonymous_cookie_grants_nothing() {
        let nid = Cookie::new("NID", "n", "google.com");
        assert!(audit_services(&[nid], &google_catalog(), false, "a", "a").services_accessible.is_empty());
    }

    #[test]
    fn domain_cookie_unlocks_its_service() {
        let cal = Cookie::new("CAL", "c", "calendar.google.com");
        let exposure = audit_services(&[sid(), cal], &google_catalog(), false, "a", "a");
        assert!(services(&exposure).contains(&"Calendar"));
        assert!(!services(&exposure).contains(&"Docs"));
    }

    #[test]
    fn ip_binding_blocks_foreign_replay() {
        assert!(audit_services(&[sid()], &google_catalog(), true, "1.1.1.1", "2.2.2.2").services_accessible.is_empty());
        assert!(!audit_services(&[sid()], &google_catalog(), true, "1.1.1.1", "1.1.1.1").services_accessible.is_empty());
    }

    #[test]
    fn catalog_validation() {
        let bad = r#"[{"service":"X","default_scheme":"HTTPS","https_support":"No","uses_domain_cookie":false,"host_pattern":"x","path_pattern":"/"}]"#;
        assert!(matches!(load_catalog(bad.as_bytes()), Err(CatalogError::Invalid { .. })));
        let rel = r#"[{"service":"X","default_scheme":"HTTP","https_support":"No","uses_domain_cookie":false,"host_pattern":"x","path_pattern":"x"}]"#;
        assert!(load_catalog(rel.as_bytes()).is_err());
        let dup = r#"[{"service":"X","default_scheme":"HTTP","https_support":"No","uses_domain_cookie":false,"host_pattern":"x","path_pattern":"/"},
                      {"service":"X","default_scheme":"HTTP","https_support":"No","uses_domain_cookie":false,"host_pattern":"y","path_pattern":"/"}]"#;
        assert!(load_catalog(dup.as_bytes()).is_err());
        assert!(matches!(load_catalog("{}".as_bytes()), Err(CatalogError::Json(_))));
    }

    #[test]
    fn trace_audit_and_csv() {
        let trace = vec![
            TrafficRecord::new(1, Scheme::Http, "1.1.1.1", "www.google.com", "/search")
                .with_header("Cookie", "SID=a; NID=n")
                .with_flag("entries:Maps=22")
                .with_flag("has_history_link"),
            TrafficRecord::new(2, Scheme::Http, "1.1.1.2", "maps.google.com", "/maps")
                .with_header("Cookie", "SID=b")
                .with_flag("entries:Maps=10"),
            TrafficRecord::new(3, Scheme::Http, "1.1.1.3", "www.google.com", "/").with_header("Cookie", "NID=z"),
        ];
        let catalog = google_catalog();
        let report = audit_trace(&trace, &catalog, false, None);
        assert_eq!(report.accounts.len(), 2);
        assert!(report.accounts[0].history_enabled && !report.accounts[1].history_enabled);
        let maps = report.by_service().into_iter().find(|r| r.service == "Maps").unwrap();
        assert_eq!((maps.accounts_accessible, maps.mean_entries), (2, Some(16.0)));

        let mut buf = Vec::new();
        write_exposure_csv(&mut buf, &report).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("information_type,service,accounts_accessible,mean_entries"));
        assert!(text.contains("Maps search,Maps,2,16.00\n"));
        assert!(text.contains("Web mail application,Gmail,0,\n"));

        let bound = audit_trace(&trace, &catalog, true, Some("9.9.9.9"));
        assert!(bound.accounts.iter().all(|a| a.services_accessible.is_empty()));
        let own_ip = audit_trace(&trace, &catalog, true, None);
        assert_eq!(own_ip, report);
    }

    proptest! {
        #[test]
        fn binding_with_foreign_ip_is_total(
            names in proptest::collection::vec("(SID|SSID|LSID|NID|CAL|HSID)", 0..6),
            secure in proptest::collection::vec(any::<bool>(), 6),
            domains in proptest::collection::vec("(google\\.com|calendar\\.google\\.com|docs\\.google\\.com)", 6),
            capture in "[0-9]\\.[0-9]",
            replay in "[0-9]\\.[0-9]",
        ) {
            prop_assume!(capture != replay);
            let jar: Vec<Cookie> = names.iter().enumerate().map(|(i, n)| {
                let c = Cookie::new(n.clone(), "v", domains[i].clone());
                if secure[i] { c.secure() } else { c }
            }).collect();
            let exposure = audit_services(&jar, &google_catalog(), true, &capture, &replay);
            prop_assert!(exposure.services_accessible.is_empty());
        }

        #[test]
        fn accessible_services_are_catalog_services(names in proptest::collection::vec("(SID|NID|CAL)", 0..4)) {
            let jar: Vec<Cookie> = names.iter().map(|n| Cookie::new(n.clone(), "v", "google.com")).collect();
            let catalog = google_catalog();
            let exposure = audit_services(&jar, &catalog, false, "a", "a");
            for s in &exposure.services_accessible {
                let entry = catalog.iter().find(|e| &e.service == s).unwrap();
                prop_assert!(entry.https_support != HttpsSupport::Mandatory);
            }
        }
    }
}
