//! Candidate name generation: the cross product of an adjective list and a
//! small set of base color words.

use std::collections::HashSet;
use std::path::Path;

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Ordered, deduplicated, lowercase adjectives.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdjectiveList {
    words: Vec<String>,
}

impl AdjectiveList {
    /// Lowercases, trims, and deduplicates (first occurrence wins). Errors if
    /// nothing usable remains.
    pub fn from_words<I, S>(words: I) -> Result<AdjectiveList>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for w in words {
            let w = w.as_ref().trim().to_lowercase();
            if w.is_empty() {
                continue;
            }
            if seen.insert(w.clone()) {
                out.push(w);
            }
        }
        if out.is_empty() {
            return Err(Error::Data("adjective list is empty".into()));
        }
        Ok(AdjectiveList { words: out })
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// The base color words paired with every adjective.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BaseColors {
    colors: Vec<String>,
}

impl Default for BaseColors {
    /// The six primary and secondary hues.
    fn default() -> BaseColors {
        BaseColors {
            colors: ["red", "orange", "yellow", "green", "blue", "purple"]
                .map(String::from)
                .to_vec(),
        }
    }
}

impl BaseColors {
    pub fn from_words<I, S>(words: I) -> Result<BaseColors>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let list = AdjectiveList::from_words(words)
            .map_err(|_| Error::Data("base color list is empty".into()))?;
        Ok(BaseColors { colors: list.words })
    }

    pub fn colors(&self) -> &[String] {
        &self.colors
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    /// Always false: construction rejects empty lists.
    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }
}

/// Reads one adjective per line; blank lines and `#` comments are skipped.
pub fn load_adjectives(path: impl AsRef<Path>) -> Result<AdjectiveList> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let words = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    AdjectiveList::from_words(words)
        .map_err(|_| Error::Data(format!("{}: no adjectives found", path.display())))
}

/// Every "adjective color" pair joined by a single space, adjective-major:
/// all colors for the first adjective, then all for the second, and so on.
pub fn generate_names(adjectives: &AdjectiveList, colors: &BaseColors) -> Vec<String> {
    let mut out = Vec::with_capacity(adjectives.len() * colors.len());
    for adj in adjectives.words() {
        for color in colors.colors() {
            out.push(format!("{} {}", adj, color));
        }
    }
    out
}

/// Drops names the dataset already contains (case-insensitive), preserving
/// input order.
pub fn filter_fresh(names: &[String], dataset: &Dataset) -> Vec<String> {
    names
        .iter()
        .filter(|n| !dataset.contains_name(n))
        .cloned()
        .collect()
}
