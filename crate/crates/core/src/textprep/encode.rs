use std::collections::HashMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VocabEntry {
    pub word: String,
    pub count: u64,
}

/// Integer-coded token stream plus its vocabulary.
///
/// Invariants: every id indexes `vocab`, every vocabulary count is positive
/// and the counts sum to the stream length.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenizedCorpus {
    token_ids: Vec<u32>,
    vocab: Vec<VocabEntry>,
}

impl TokenizedCorpus {
    /// Builds a corpus from ids and vocabulary, checking the invariants.
    pub fn from_parts(token_ids: Vec<u32>, vocab: Vec<VocabEntry>) -> Result<Self> {
        let mut counts = vec![0u64; vocab.len()];
        for &id in &token_ids {
            let slot = counts
                .get_mut(id as usize)
                .ok_or_else(|| Error::Format(format!("token id {id} outside vocabulary")))?;
            *slot += 1;
        }
        for (i, (entry, &seen)) in vocab.iter().zip(&counts).enumerate() {
            if entry.count != seen {
                return Err(Error::Format(format!(
                    "vocabulary entry {i} claims count {} but stream has {seen}",
                    entry.count
                )));
            }
            if seen == 0 {
                return Err(Error::Format(format!("vocabulary entry {i} never occurs")));
            }
        }
        Ok(Self { token_ids, vocab })
    }

    /// Skips the validation pass; callers guarantee the invariants.
    pub(crate) fn from_parts_unchecked(token_ids: Vec<u32>, vocab: Vec<VocabEntry>) -> Self {
        debug_assert_eq!(vocab.iter().map(|e| e.count).sum::<u64>(), token_ids.len() as u64);
        Self { token_ids, vocab }
    }

    pub fn token_ids(&self) -> &[u32] {
        &self.token_ids
    }

    pub fn vocab(&self) -> &[VocabEntry] {
        &self.vocab
    }

    /// Text length L.
    pub fn total_tokens(&self) -> u64 {
        self.token_ids.len() as u64
    }

    /// Vocabulary size V.
    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_ids.is_empty()
    }

    /// Per-id counts, indexed by token id.
    pub fn counts(&self) -> Vec<u64> {
        self.vocab.iter().map(|e| e.count).collect()
    }

    /// Decodes the id stream back to token strings.
    pub fn decode(&self) -> Vec<&str> {
        self.token_ids
            .iter()
            .map(|&id| self.vocab[id as usize].word.as_str())
            .collect()
    }
}

/// Word counts without the token stream.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vocabulary {
    pub entries: Vec<VocabEntry>,
    pub total_tokens: u64,
}

struct Interner {
    index: HashMap<String, u32>,
    vocab: Vec<VocabEntry>,
    limit: u64,
}

impl Interner {
    fn new(limit: u64) -> Self {
        Self {
            index: HashMap::new(),
            vocab: Vec::new(),
            limit,
        }
    }

    #[inline]
    fn intern(&mut self, token: &str) -> Result<u32> {
        if let Some(&id) = self.index.get(token) {
            self.vocab[id as usize].count += 1;
            return Ok(id);
        }
        if self.vocab.len() as u64 >= self.limit {
            return Err(Error::Capacity { limit: self.limit });
        }
        let id = self.vocab.len() as u32;
        self.index.insert(token.to_owned(), id);
        self.vocab.push(VocabEntry {
            word: token.to_owned(),
            count: 1,
        });
        Ok(id)
    }
}

const ID_SPACE: u64 = u32::MAX as u64 + 1;

/// Assigns ids in order of first occurrence.
pub struct Encoder {
    interner: Interner,
    ids: Vec<u32>,
}

impl Default for Encoder {
    fn default() -> Self {
        Self::new()
    }
}

impl Encoder {
    pub fn new() -> Self {
        Self::with_limit(ID_SPACE)
    }

    /// Encoder that refuses to grow past `limit` distinct types.
    pub fn with_limit(limit: u64) -> Self {
        Self {
            interner: Interner::new(limit.min(ID_SPACE)),
            ids: Vec::new(),
        }
    }

    pub fn push(&mut self, token: &str) -> Result<()> {
        let id = self.interner.intern(token)?;
        self.ids.push(id);
        Ok(())
    }

    pub fn finish(self) -> TokenizedCorpus {
        TokenizedCorpus::from_parts_unchecked(self.ids, self.interner.vocab)
    }
}

/// Streaming type counter: memory grows with V, not L.
pub struct VocabCounter {
    interner: Interner,
    total: u64,
}

impl Default for VocabCounter {
    fn default() -> Self {
        Self::new()
    }
}

impl VocabCounter {
    pub fn new() -> Self {
        Self {
            interner: Interner::new(ID_SPACE),
            total: 0,
        }
    }

    pub fn push(&mut self, token: &str) -> Result<()> {
        self.interner.intern(token)?;
        self.total += 1;
        Ok(())
    }

    pub fn distinct(&self) -> usize {
        self.interner.vocab.len()
    }

    pub fn finish(self) -> Vocabulary {
        Vocabulary {
            entries: self.interner.vocab,
            total_tokens: self.total,
        }
    }
}

/// Encodes a finite token sequence.
pub fn encode<S: AsRef<str>>(tokens: &[S]) -> Result<TokenizedCorpus> {
    let mut enc = Encoder::new();
    for t in tokens {
        enc.push(t.as_ref())?;
    }
    Ok(enc.finish())
}
