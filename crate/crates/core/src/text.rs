//! Query normalization and the character sets it is parameterized over.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AlphabetError {
    #[error("alphabet is empty")]
    Empty,
    #[error("alphabet character {0:?} is not lowercase")]
    NotLowercase(char),
    #[error("alphabet character {0:?} is whitespace other than a plain space")]
    BadWhitespace(char),
}

/// An ordered, duplicate-free set of characters that queries and prefixes
/// are restricted to.
///
/// Characters are lowercase. The plain space is the only whitespace
/// character allowed; when present it acts as the word separator.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Alphabet {
    chars: Vec<char>,
}

impl Alphabet {
    pub fn new<I: IntoIterator<Item = char>>(chars: I) -> Result<Self, AlphabetError> {
        let mut out: Vec<char> = Vec::new();
        for c in chars {
            if c.is_whitespace() && c != ' ' {
                return Err(AlphabetError::BadWhitespace(c));
            }
            if c.to_lowercase().ne(std::iter::once(c)) {
                return Err(AlphabetError::NotLowercase(c));
            }
            if !out.contains(&c) {
                out.push(c);
            }
        }
        if out.is_empty() {
            return Err(AlphabetError::Empty);
        }
        Ok(Alphabet { chars: out })
    }

    /// `a`–`z`.
    pub fn letters() -> Self {
        Alphabet { chars: ('a'..='z').collect() }
    }

    /// `a`–`z` and `0`–`9`.
    pub fn alphanumeric() -> Self {
        Alphabet { chars: ('a'..='z').chain('0'..='9').collect() }
    }

    /// `a`–`z`, `0`–`9` and the space. This is the default for history
    /// normalization.
    pub fn alphanumeric_space() -> Self {
        Alphabet {
            chars: ('a'..='z').chain('0'..='9').chain(std::iter::once(' ')).collect(),
        }
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    pub fn contains(&self, c: char) -> bool {
        self.chars.contains(&c)
    }

    pub fn has_space(&self) -> bool {
        self.contains(' ')
    }

    /// Index of `c` in the alphabet order.
    pub fn position(&self, c: char) -> Option<usize> {
        self.chars.iter().position(|&x| x == c)
    }

    /// Whether `prefix` can be typed as a suggestion prefix: every character
    /// is in the alphabet, it does not start with a space and it has no
    /// runs of spaces. A single trailing space is allowed because the user
    /// may have just finished a word.
    pub fn is_valid_prefix(&self, prefix: &str) -> bool {
        if prefix.is_empty() || prefix.starts_with(' ') || prefix.contains("  ") {
            return false;
        }
        prefix.chars().all(|c| self.contains(c))
    }
}

impl Default for Alphabet {
    fn default() -> Self {
        Alphabet::alphanumeric_space()
    }
}

impl fmt::Debug for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Alphabet({:?})", self.to_string())
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.chars {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Accepts the presets `letters`, `alnum` and `alnum-space`, or a literal
/// list of characters.
impl FromStr for Alphabet {
    type Err = AlphabetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "letters" => Ok(Alphabet::letters()),
            "alnum" => Ok(Alphabet::alphanumeric()),
            "alnum-space" => Ok(Alphabet::alphanumeric_space()),
            literal => Alphabet::new(literal.chars()),
        }
    }
}

impl Serialize for Alphabet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Alphabet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Alphabet::new(s.chars()).map_err(serde::de::Error::custom)
    }
}

/// Normalizes with the default alphabet (`a`–`z`, `0`–`9`, space).
pub fn normalize(raw: &str) -> String {
    normalize_with(raw, &Alphabet::default())
}

/// Lowercases, drops characters outside `alphabet`, collapses whitespace
/// runs to one space and trims. Any Unicode whitespace counts as a
/// separator when the alphabet has a space.
///
/// An empty result means the input carries no query.
pub fn normalize_with(raw: &str, alphabet: &Alphabet) -> String {
    let keep_space = alphabet.has_space();
    let mut out = String::with_capacity(raw.len());
    let mut pending_space = false;
    for c in raw.chars().flat_map(char::to_lowercase) {
        if c.is_whitespace() {
            pending_space = keep_space;
            continue;
        }
        if !alphabet.contains(c) {
            continue;
        }
        if pending_space && !out.is_empty() {
            out.push(' ');
        }
        pending_space = false;
        out.push(c);
    }
    out
}
