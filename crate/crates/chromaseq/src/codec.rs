//! Character-level tokenization of color names.
//!
//! A vocabulary maps each character seen in the training names to an integer
//! id. Id 0 is PAD, id 1 is UNK; real characters start at 2 in code-point
//! order, so two datasets with the same character set produce identical
//! vocabularies. Encoded names are right-padded to a fixed length.

use std::collections::{BTreeSet, HashMap};

use crate::data::{canonical_name, Dataset};
use crate::error::{Error, Result};

pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 1;

/// Longest sequence the model will ever see; longer names are truncated.
pub const MAX_LEN_CAP: usize = 40;

/// Immutable character-to-id mapping with PAD=0 and UNK=1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    chars: Vec<char>,
    symbol_to_id: HashMap<char, usize>,
}

impl Vocabulary {
    /// Vocabulary over every character appearing in any dataset name.
    pub fn build(dataset: &Dataset) -> Result<Vocabulary> {
        if dataset.is_empty() {
            return Err(Error::Data("cannot build a vocabulary from an empty dataset".into()));
        }
        let set: BTreeSet<char> = dataset
            .records()
            .iter()
            .flat_map(|r| r.name.chars())
            .collect();
        Ok(Vocabulary::from_chars(set))
    }

    /// Rebuilds a vocabulary from an ordered character list (checkpoint
    /// manifests store exactly this). Ids follow list order starting at 2.
    pub fn from_chars(chars: impl IntoIterator<Item = char>) -> Vocabulary {
        let chars: Vec<char> = chars.into_iter().collect();
        let symbol_to_id = chars
            .iter()
            .enumerate()
            .map(|(i, &c)| (c, i + 2))
            .collect();
        Vocabulary { chars, symbol_to_id }
    }

    /// Total id count including PAD and UNK.
    pub fn size(&self) -> usize {
        self.chars.len() + 2
    }

    /// Id for a character; UNK for anything outside the vocabulary.
    pub fn id_of(&self, c: char) -> usize {
        self.symbol_to_id.get(&c).copied().unwrap_or(UNK_ID)
    }

    /// Character for an id; `None` for PAD, UNK, and out-of-range ids.
    pub fn char_of(&self, id: usize) -> Option<char> {
        if id < 2 {
            None
        } else {
            self.chars.get(id - 2).copied()
        }
    }

    /// The non-special characters in id order.
    pub fn chars(&self) -> &[char] {
        &self.chars
    }
}

/// A name encoded to exactly `max_len` ids; positions at and beyond
/// `true_length` are PAD.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenSequence {
    pub ids: Vec<usize>,
    pub true_length: usize,
}

/// Encodes a canonicalized (trimmed, lowercased) name: one id per character,
/// UNK for unseen characters, truncated then right-padded to `max_len`.
pub fn encode(name: &str, vocab: &Vocabulary, max_len: usize) -> Result<TokenSequence> {
    let canonical = canonical_name(name);
    if canonical.is_empty() {
        return Err(Error::Data(format!("cannot encode empty name {:?}", name)));
    }
    let mut ids: Vec<usize> = canonical
        .chars()
        .take(max_len)
        .map(|c| vocab.id_of(c))
        .collect();
    let true_length = ids.len();
    ids.resize(max_len, PAD_ID);
    Ok(TokenSequence { ids, true_length })
}

/// Inverse of [`encode`] over the non-PAD prefix; UNK renders as '?'.
pub fn decode(seq: &TokenSequence, vocab: &Vocabulary) -> String {
    seq.ids[..seq.true_length]
        .iter()
        .map(|&id| vocab.char_of(id).unwrap_or('?'))
        .collect()
}

/// Length of the longest dataset name, capped at [`MAX_LEN_CAP`].
pub fn max_len_for(dataset: &Dataset) -> usize {
    dataset
        .records()
        .iter()
        .map(|r| r.name.chars().count())
        .max()
        .unwrap_or(1)
        .min(MAX_LEN_CAP)
}
