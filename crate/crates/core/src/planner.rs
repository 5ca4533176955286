//! Attacker-side request scheduling from a reference corpus.
//!
//! The planner counts how many corpus items start with each prefix of a
//! given length, keeps the most frequent ones (the *seeds*) and tells the
//! attack which one-character extensions of a saturated prefix are worth
//! asking for.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::Alphabet;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("reference corpus is empty")]
    EmptyCorpus,
    #[error("prefix length must be at least 2, got {0}")]
    LengthTooShort(usize),
    #[error("mass fraction must be in (0, 1], got {0}")]
    BadMass(f64),
    #[error("prefix {0:?} has characters outside the alphabet or the wrong length")]
    BadPrefix(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Counts of corpus items by their leading `length` characters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrefixStats {
    length: usize,
    alphabet: Alphabet,
    counts: BTreeMap<String, u64>,
}

impl PrefixStats {
    /// Items shorter than `length`, or whose leading characters do not form a
    /// valid prefix over the alphabet, are not counted.
    pub fn build<S: AsRef<str>>(corpus: &[S], length: usize, alphabet: &Alphabet) -> Result<Self, PlanError> {
        if length < 2 {
            return Err(PlanError::LengthTooShort(length));
        }
        if corpus.is_empty() {
            return Err(PlanError::EmptyCorpus);
        }
        let mut counts: BTreeMap<String, u64> = BTreeMap::new();
        for item in corpus {
            let head: String = item.as_ref().chars().take(length).collect();
            if head.chars().count() == length && alphabet.is_valid_prefix(&head) {
                *counts.entry(head).or_default() += 1;
            }
        }
        Ok(PrefixStats { length, alphabet: alphabet.clone(), counts })
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// Zero for prefixes never seen.
    pub fn count(&self, prefix: &str) -> u64 {
        self.counts.get(prefix).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Number of prefixes with a nonzero count.
    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    /// Nonzero prefixes by count descending, ties lexicographic.
    pub fn ranked(&self) -> Vec<(&str, u64)> {
        let mut v: Vec<(&str, u64)> = self.counts.iter().map(|(p, &c)| (p.as_str(), c)).collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        v
    }

    /// `prefix,count` rows in ranked order, with a header.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), PlanError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["prefix", "count"])?;
        for (prefix, count) in self.ranked() {
            w.write_record([prefix, &count.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R, alphabet: &Alphabet) -> Result<Self, PlanError> {
        let mut r = csv::Reader::from_reader(reader);
        let mut counts = BTreeMap::new();
        let mut length = None;
        for row in r.deserialize() {
            let (prefix, count): (String, u64) = row?;
            let n = prefix.chars().count();
            if *length.get_or_insert(n) != n || !alphabet.is_valid_prefix(&prefix) {
                return Err(PlanError::BadPrefix(prefix));
            }
            if count > 0 {
                counts.insert(prefix, count);
            }
        }
        let length = length.ok_or(PlanError::EmptyCorpus)?;
        if length < 2 {
            return Err(PlanError::LengthTooShort(length));
        }
        Ok(PrefixStats { length, alphabet: alphabet.clone(), counts })
    }
}

/// How the frequent head of the ranked prefix list is cut.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Selection {
    /// Shortest head whose counts cover the given share of all corpus items.
    #[default]
    Mass,
    /// The given share of the nonzero prefixes, best ranked first.
    Rank,
}

/// The frequent head of `stats`, in ranked order. Fraction 1 returns every
/// nonzero prefix under either rule.
pub fn select_mass(stats: &PrefixStats, mass_fraction: f64, selection: Selection) -> Result<Vec<String>, PlanError> {
    if !(mass_fraction > 0.0 && mass_fraction <= 1.0) {
        return Err(PlanError::BadMass(mass_fraction));
    }
    let ranked = stats.ranked();
    let keep = match selection {
        Selection::Mass => {
            let total = stats.total() as f64;
            let mut covered = 0u64;
            let mut keep = ranked.len();
            for (i, (_, c)) in ranked.iter().enumerate() {
                covered += c;
                if covered as f64 >= mass_fraction * total {
                    keep = i + 1;
                    break;
                }
            }
            keep
        }
        Selection::Rank => ((mass_fraction * ranked.len() as f64).ceil() as usize).min(ranked.len()),
    };
    Ok(ranked.into_iter().take(keep).map(|(p, _)| p.to_string()).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlanConfig {
    pub alphabet: Alphabet,
    pub seed_length: usize,
    /// Longest prefix length with corpus statistics. Extensions past it
    /// append every alphabet character.
    pub max_stats_length: usize,
    pub mass_fraction: f64,
    pub selection: Selection,
    /// Restrict counted extensions to the frequent head at their length.
    pub filter_extensions: bool,
}

impl Default for PlanConfig {
    fn default() -> Self {
        PlanConfig {
            alphabet: Alphabet::letters(),
            seed_length: 2,
            max_stats_length: 3,
            mass_fraction: 0.9,
            selection: Selection::Mass,
            filter_extensions: true,
        }
    }
}

/// Seed prefixes plus the statistics used to extend them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PlanRecord", into = "PlanRecord")]
pub struct PrefixPlan {
    config: PlanConfig,
    seeds: Vec<String>,
    stats_by_length: BTreeMap<usize, PrefixStats>,
    /// Alphabet characters by corpus frequency, most frequent first.
    unigram_order: Vec<char>,
    /// Allowed children per parent prefix, for lengths with statistics.
    children: BTreeMap<String, Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct PlanRecord {
    config: PlanConfig,
    seeds: Vec<String>,
    unigram_order: String,
    stats: Vec<PrefixStats>,
}

impl From<PrefixPlan> for PlanRecord {
    fn from(plan: PrefixPlan) -> Self {
        PlanRecord {
            config: plan.config,
            seeds: plan.seeds,
            unigram_order: plan.unigram_order.into_iter().collect(),
            stats: plan.stats_by_length.into_values().collect(),
        }
    }
}

impl TryFrom<PlanRecord> for PrefixPlan {
    type Error = PlanError;

    fn try_from(record: PlanRecord) -> Result<Self, Self::Error> {
        let stats_by_length = record.stats.into_iter().map(|s| (s.length, s)).collect();
        let unigram_order = record.unigram_order.chars().collect();
        PrefixPlan::assemble(record.config, stats_by_length, unigram_order, Some(record.seeds))
    }
}

impl PrefixPlan {
    pub fn build<S: AsRef<str>>(corpus: &[S], config: PlanConfig) -> Result<Self, PlanError> {
        if corpus.is_empty() {
            return Err(PlanError::EmptyCorpus);
        }
        if config.seed_length < 2 {
            return Err(PlanError::LengthTooShort(config.seed_length));
        }
        let top = config.max_stats_length.max(config.seed_length);
        let mut stats_by_length = BTreeMap::new();
        for length in config.seed_length..=top {
            stats_by_length.insert(length, PrefixStats::build(corpus, length, &config.alphabet)?);
        }
        let unigram_order = unigram_order(corpus, &config.alphabet);
        PrefixPlan::assemble(config, stats_by_length, unigram_order, None)
    }

    fn assemble(
        config: PlanConfig,
        stats_by_length: BTreeMap<usize, PrefixStats>,
        unigram_order: Vec<char>,
        seeds: Option<Vec<String>>,
    ) -> Result<Self, PlanError> {
        let seed_stats = stats_by_length.get(&config.seed_length).ok_or(PlanError::EmptyCorpus)?;
        let seeds = match seeds {
            Some(seeds) => seeds,
            None => select_mass(seed_stats, config.mass_fraction, config.selection)?,
        };
        let mut children: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (&length, stats) in stats_by_length.range(config.seed_length + 1..) {
            let allowed = if config.filter_extensions {
                select_mass(stats, config.mass_fraction, config.selection)?
            } else {
                stats.ranked().into_iter().map(|(p, _)| p.to_string()).collect()
            };
            // `allowed` is already in ranked order, so each parent's list is too.
            for child in allowed {
                let parent: String = child.chars().take(length - 1).collect();
                children.entry(parent).or_default().push(child);
            }
        }
        Ok(PrefixPlan { config, seeds, stats_by_length, unigram_order, children })
    }

    pub fn config(&self) -> &PlanConfig {
        &self.config
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.config.alphabet
    }

    pub fn mass_fraction(&self) -> f64 {
        self.config.mass_fraction
    }

    pub fn seeds(&self) -> &[String] {
        &self.seeds
    }

    pub fn stats(&self, length: usize) -> Option<&PrefixStats> {
        self.stats_by_length.get(&length)
    }

    pub fn stats_by_length(&self) -> impl Iterator<Item = &PrefixStats> {
        self.stats_by_length.values()
    }

    pub fn unigram_order(&self) -> &[char] {
        &self.unigram_order
    }

    /// Corpus count of `prefix` at its own length; zero when that length
    /// has no statistics.
    pub fn corpus_count(&self, prefix: &str) -> u64 {
        self.stats(prefix.chars().count()).map_or(0, |s| s.count(prefix))
    }

    /// One-character extensions of `prefix` worth requesting, best first.
    pub fn extend(&self, prefix: &str) -> Vec<String> {
        let child_len = prefix.chars().count() + 1;
        if self.stats_by_length.contains_key(&child_len) {
            return self.children.get(prefix).cloned().unwrap_or_default();
        }
        // No statistics this deep: try every character. A space may not
        // follow another space.
        self.unigram_order
            .iter()
            .filter(|&&c| !(c == ' ' && (prefix.is_empty() || prefix.ends_with(' '))))
            .map(|&c| {
                let mut child = String::with_capacity(prefix.len() + c.len_utf8());
                child.push_str(prefix);
                child.push(c);
                child
            })
            .collect()
    }
}

/// Alphabet characters by how often they occur in the corpus, most frequent
/// first; ties and unseen characters keep alphabet order.
fn unigram_order<S: AsRef<str>>(corpus: &[S], alphabet: &Alphabet) -> Vec<char> {
    let mut freq = vec![0u64; alphabet.len()];
    for item in corpus {
        for c in item.as_ref().chars() {
            if let Some(i) = alphabet.position(c) {
                freq[i] += 1;
            }
        }
    }
    let mut order: Vec<(usize, char)> = alphabet.chars().iter().copied().enumerate().collect();
    order.sort_by(|a, b| freq[b.0].cmp(&freq[a.0]).then(a.0.cmp(&b.0)));
    order.into_iter().map(|(_, c)| c).collect()
}

/// Every string of exactly `length` characters over `alphabet`, in alphabet
/// order. A corpus made of these gives every valid prefix a nonzero count.
pub fn all_strings(alphabet: &Alphabet, length: usize) -> Vec<String> {
    let mut out = vec![String::new()];
    for _ in 0..length {
        out = out
            .into_iter()
            .flat_map(|s| alphabet.chars().iter().map(move |&c| format!("{s}{c}")))
            .collect();
    }
    out
}
