//! HTTP cookies as an eavesdropper sees them.
//!
//! Parsing follows the `Set-Cookie` attribute syntax of RFC 2109/2965 and
//! matching uses a simplified rule set: the request host must equal the
//! cookie domain or be a subdomain of it, the request path must start with
//! the cookie path, secure cookies only travel over HTTPS, and expired
//! cookies are never sent.

pub mod audit;
pub mod trace;

use std::fmt;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use audit::{
    audit_services, audit_trace, google_catalog, load_catalog, write_exposure_csv, AccountExposure, CatalogError,
    HijackReport, HttpsSupport, ServiceCatalogEntry, ServiceExposure,
};
pub use trace::{captured_accounts, count_users, load_trace, CapturedAccount, TraceError, TrafficRecord, UserCounts};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "HTTP")]
    Http,
    #[serde(rename = "HTTPS")]
    Https,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Http => "HTTP",
            Scheme::Https => "HTTPS",
        })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CookieError {
    #[error("malformed Set-Cookie header {0:?}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cookie {
    pub name: String,
    pub value: String,
    pub domain: String,
    pub path: String,
    pub secure: bool,
    pub expiry: Option<i64>,
    /// Set without a `Domain` attribute: only the exact host receives it.
    #[serde(default)]
    pub host_only: bool,
}

impl Cookie {
    /// A non-secure session cookie for `domain` and every path.
    pub fn new(name: impl Into<String>, value: impl Into<String>, domain: impl Into<String>) -> Self {
        Cookie {
            name: name.into(),
            value: value.into(),
            domain: domain.into(),
            path: "/".to_string(),
            secure: false,
            expiry: None,
            host_only: false,
        }
    }

    pub fn with_path(mut self, path: impl Into<String>) -> Self {
        self.path = path.into();
        self
    }

    pub fn secure(mut self) -> Self {
        self.secure = true;
        self
    }

    pub fn expiring_at(mut self, time: i64) -> Self {
        self.expiry = Some(time);
        self
    }

    /// Whether a browser would attach this cookie to the given request.
    pub fn applies_to(&self, scheme: Scheme, host: &str, path: &str, time: Option<i64>) -> bool {
        let host = host.to_ascii_lowercase();
        let domain_ok = if self.host_only { host == self.domain } else { domain_matches(&host, &self.domain) };
        domain_ok
            && path.starts_with(&self.path)
            && (!self.secure || scheme == Scheme::Https)
            && match (self.expiry, time) {
                (Some(expiry), Some(now)) => now < expiry,
                _ => true,
            }
    }
}

/// `host` equals `domain` or ends with `"." + domain`.
pub fn domain_matches(host: &str, domain: &str) -> bool {
    let domain = domain.trim_start_matches('.');
    host == domain || (host.len() > domain.len() && host.ends_with(domain) && host[..host.len() - domain.len()].ends_with('.'))
}

/// Whether `cookie` rides along on `record`.
pub fn cookie_applies(cookie: &Cookie, record: &TrafficRecord) -> bool {
    cookie.applies_to(record.scheme, &record.host, &record.path, Some(record.time))
}

const EXPIRES_FORMATS: [&str; 3] = ["%a, %d-%b-%Y %H:%M:%S GMT", "%a, %d %b %Y %H:%M:%S GMT", "%a, %d-%b-%y %H:%M:%S GMT"];

fn parse_expires(value: &str) -> Option<i64> {
    EXPIRES_FORMATS
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(value.trim(), fmt).ok())
        .map(|t| t.and_utc().timestamp())
}

/// Parses a `Set-Cookie` value received from `request_host`.
///
/// Attribute names are case-insensitive. Without `Domain` the cookie is a
/// host cookie for `request_host`; without `Path` it covers `/`. Unknown
/// attributes and unparseable `Expires` dates are ignored.
pub fn parse_set_cookie(header_value: &str, request_host: &str) -> Result<Cookie, CookieError> {
    let mut parts = header_value.split(';');
    let crumb = parts.next().unwrap_or_default();
    let (name, value) = crumb.split_once('=').ok_or_else(|| CookieError::Malformed(header_value.to_string()))?;
    let name = name.trim();
    if name.is_empty() {
        return Err(CookieError::Malformed(header_value.to_string()));
    }

    let mut cookie = Cookie {
        name: name.to_string(),
        value: value.trim().to_string(),
        domain: request_host.to_ascii_lowercase(),
        path: "/".to_string(),
        secure: false,
        expiry: None,
        host_only: true,
    };
    for attr in parts {
        let (key, val) = match attr.split_once('=') {
            Some((k, v)) => (k.trim(), v.trim()),
            None => (attr.trim(), ""),
        };
        match key.to_ascii_lowercase().as_str() {
            "domain" if !val.is_empty() => {
                cookie.domain = val.trim_start_matches('.').to_ascii_lowercase();
                cookie.host_only = false;
            }
            "path" if val.starts_with('/') => cookie.path = val.to_string(),
            "secure" => cookie.secure = true,
            "expires" => cookie.expiry = parse_expires(val).or(cookie.expiry),
            _ => {}
        }
    }
    Ok(cookie)
}

/// Splits a `Cookie` request header into `(name, value)` crumbs.
pub fn parse_cookie_header(header_value: &str) -> Vec<(String, String)> {
    header_value
        .split(';')
        .filter_map(|crumb| {
            let (name, value) = crumb.split_once('=')?;
            let name = name.trim();
            (!name.is_empty()).then(|| (name.to_string(), value.trim().to_string()))
        })
        .collect()
}
