//! Bundled reference data.
//!
//! The word list is Webster's Second International dictionary word list
//! (public domain), lowercased and restricted to alphabetic words. The
//! volunteer fixture is twelve synthetic histories generated by the
//! `calibrate_fixture` example; the author fixture is the four-query
//! history used throughout the guide.

use std::fs;
use std::io;
use std::path::Path;

use crate::history::{read_jsonl, SearchHistory};
use crate::planner::{PlanConfig, PlanError, PrefixPlan};
use crate::text::{normalize_with, Alphabet};

const WORDS: &str = include_str!("../data/words.txt");
const VOLUNTEERS: &str = include_str!("../data/volunteers.jsonl");
const AUTHOR: &str = include_str!("../data/author_history.jsonl");

/// The bundled English word list, one lowercase word per item.
pub fn english_words() -> Vec<&'static str> {
    WORDS.lines().map(str::trim).filter(|w| !w.is_empty()).collect()
}

/// Reads a newline-separated word list, normalizing each line to `alphabet`
/// and dropping lines that normalize to nothing.
pub fn load_word_list(path: &Path, alphabet: &Alphabet) -> io::Result<Vec<String>> {
    let text = fs::read_to_string(path)?;
    Ok(text.lines().map(|line| normalize_with(line, alphabet)).filter(|w| !w.is_empty()).collect())
}

/// A plan built from the bundled word list.
pub fn english_plan(config: PlanConfig) -> Result<PrefixPlan, PlanError> {
    PrefixPlan::build(&english_words(), config)
}

/// Twelve synthetic users calibrated so that the default attack with the
/// word-list plan recovers about 65% of their clicked queries.
pub fn volunteer_fixture() -> Vec<SearchHistory> {
    read_jsonl(VOLUNTEERS.as_bytes()).expect("bundled fixture is valid")
}

/// A single user who searched `privacy`, the symposium name and `pets 2010`
/// with clicks, plus `pets 10` without one.
pub fn author_history() -> SearchHistory {
    read_jsonl(AUTHOR.as_bytes()).expect("bundled fixture is valid").remove(0)
}
