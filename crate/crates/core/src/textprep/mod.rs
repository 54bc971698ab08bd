//! Text normalization and tokenization.
//!
//! A word is any maximal run of characters between whitespace, punctuation
//! (Unicode `P*`) or symbols (Unicode `S*`). Words are lowercased; decimal
//! digits (`Nd`) are removed character by character when `strip_numbers` is
//! set, and a word that ends up empty is dropped. Accented letters are kept
//! unless `preserve_accents` is turned off.
//!
//! The tokenizer is a character-level state machine whose only carried state
//! is the word under construction, so feeding the same text in any chunking
//! yields the same tokens.

mod encode;

use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use unicode_general_category::{get_general_category, GeneralCategory};
use unicode_normalization::{char::is_combining_mark, UnicodeNormalization};

use crate::error::{Error, Result};

pub use encode::{encode, Encoder, TokenizedCorpus, VocabCounter, VocabEntry, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CasingMode {
    /// Locale-independent Unicode lowercasing.
    #[default]
    UnicodeSimple,
    /// Turkish dotted/dotless I: `İ → i`, `I → ı`.
    TurkishAware,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerOptions {
    pub casing_mode: CasingMode,
    pub strip_numbers: bool,
    pub preserve_accents: bool,
}

impl Default for TokenizerOptions {
    fn default() -> Self {
        Self {
            casing_mode: CasingMode::UnicodeSimple,
            strip_numbers: true,
            preserve_accents: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CharClass {
    Boundary,
    Dropped,
    Word,
}

fn classify(c: char, opts: &TokenizerOptions) -> CharClass {
    if c.is_ascii() {
        return if c.is_ascii_alphabetic() {
            CharClass::Word
        } else if c.is_ascii_digit() {
            if opts.strip_numbers {
                CharClass::Dropped
            } else {
                CharClass::Word
            }
        } else {
            // every remaining ASCII character is a separator
            CharClass::Boundary
        };
    }
    if c.is_whitespace() {
        return CharClass::Boundary;
    }
    use GeneralCategory::*;
    match get_general_category(c) {
        ConnectorPunctuation | DashPunctuation | OpenPunctuation | ClosePunctuation | InitialPunctuation
        | FinalPunctuation | OtherPunctuation | MathSymbol | CurrencySymbol | ModifierSymbol | OtherSymbol => {
            CharClass::Boundary
        }
        Control | LineSeparator | ParagraphSeparator | SpaceSeparator => CharClass::Boundary,
        // zero-width joiners, BOM, soft hyphen
        Format => CharClass::Dropped,
        DecimalNumber if opts.strip_numbers => CharClass::Dropped,
        _ => CharClass::Word,
    }
}

fn push_lowercase(buf: &mut String, c: char, mode: CasingMode) {
    if c.is_ascii() {
        buf.push(c.to_ascii_lowercase());
        return;
    }
    match (mode, c) {
        (CasingMode::TurkishAware, '\u{0130}') => buf.push('i'),
        _ => buf.extend(c.to_lowercase()),
    }
}

/// Incremental tokenizer. Feed text with [`Tokenizer::feed`] and flush the
/// trailing word with [`Tokenizer::finish`].
#[derive(Debug, Clone)]
pub struct Tokenizer {
    opts: TokenizerOptions,
    word: String,
    scratch: String,
}

impl Tokenizer {
    pub fn new(opts: TokenizerOptions) -> Self {
        Self {
            opts,
            word: String::new(),
            scratch: String::new(),
        }
    }

    pub fn options(&self) -> &TokenizerOptions {
        &self.opts
    }

    pub fn feed<F: FnMut(&str)>(&mut self, text: &str, emit: &mut F) {
        for c in text.chars() {
            match classify(c, &self.opts) {
                CharClass::Word => {
                    if self.opts.casing_mode == CasingMode::TurkishAware && c == 'I' {
                        self.word.push('\u{0131}');
                    } else {
                        push_lowercase(&mut self.word, c, self.opts.casing_mode);
                    }
                }
                CharClass::Dropped => {}
                CharClass::Boundary => self.flush(emit),
            }
        }
    }

    /// Emit the pending word, if any.
    pub fn finish<F: FnMut(&str)>(&mut self, emit: &mut F) {
        self.flush(emit);
    }

    fn flush<F: FnMut(&str)>(&mut self, emit: &mut F) {
        if self.word.is_empty() {
            return;
        }
        if self.opts.preserve_accents || self.word.is_ascii() {
            emit(&self.word);
        } else {
            self.scratch.clear();
            self.scratch
                .extend(self.word.nfd().filter(|&c| !is_combining_mark(c)).nfc());
            if !self.scratch.is_empty() {
                emit(&self.scratch);
            }
        }
        self.word.clear();
    }
}

/// Tokenize an in-memory string.
pub fn tokenize(text: &str, opts: &TokenizerOptions) -> Vec<String> {
    let mut out = Vec::new();
    let mut tok = Tokenizer::new(*opts);
    let mut emit = |t: &str| out.push(t.to_owned());
    tok.feed(text, &mut emit);
    tok.finish(&mut emit);
    out
}

const CHUNK: usize = 1 << 16;

/// Streams UTF-8 from a reader through a [`Tokenizer`], decoding in fixed
/// chunks. `base_offset` is added to byte offsets in decode errors.
///
/// The pending word is not flushed, so consecutive readers can be fed to the
/// same tokenizer.
pub fn feed_reader<R: Read, F: FnMut(&str)>(
    tokenizer: &mut Tokenizer,
    mut reader: R,
    base_offset: u64,
    emit: &mut F,
) -> Result<u64> {
    let mut buf = vec![0u8; CHUNK + 4];
    let mut carry = 0usize;
    let mut consumed = base_offset;
    loop {
        let n = reader.read(&mut buf[carry..carry + CHUNK])?;
        let filled = carry + n;
        if n == 0 {
            if carry > 0 {
                return Err(Error::Decode { offset: consumed });
            }
            return Ok(consumed - base_offset);
        }
        let (valid, rest) = match std::str::from_utf8(&buf[..filled]) {
            Ok(s) => (s.len(), 0),
            Err(e) => {
                if e.error_len().is_some() {
                    return Err(Error::Decode {
                        offset: consumed + e.valid_up_to() as u64,
                    });
                }
                (e.valid_up_to(), filled - e.valid_up_to())
            }
        };
        let text = std::str::from_utf8(&buf[..valid]).expect("validated prefix");
        tokenizer.feed(text, emit);
        consumed += valid as u64;
        buf.copy_within(valid..filled, 0);
        carry = rest;
    }
}

/// Tokenize a whole reader, calling `emit` for each token.
pub fn tokenize_reader<R: Read, F: FnMut(&str)>(reader: R, opts: &TokenizerOptions, mut emit: F) -> Result<()> {
    let mut tok = Tokenizer::new(*opts);
    feed_reader(&mut tok, reader, 0, &mut emit)?;
    tok.finish(&mut emit);
    Ok(())
}

/// Expands a file or directory into the list of input files, recursing into
/// directories and ordering by full path.
pub fn collect_inputs(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    if !path.is_dir() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("{} does not exist", path.display()),
        )));
    }
    let mut files = Vec::new();
    for entry in walkdir::WalkDir::new(path).follow_links(true) {
        let entry = entry.map_err(|e| Error::Io(e.into()))?;
        if entry.file_type().is_file() {
            files.push(entry.into_path());
        }
    }
    files.sort();
    Ok(files)
}

/// Tokenize a sequence of files as one concatenated stream. File ends are
/// word boundaries. Decode errors report the offset within the concatenation.
pub fn tokenize_files<F: FnMut(&str)>(files: &[PathBuf], opts: &TokenizerOptions, mut emit: F) -> Result<()> {
    let mut tok = Tokenizer::new(*opts);
    let mut offset = 0u64;
    for path in files {
        let file = File::open(path)?;
        offset += feed_reader(&mut tok, file, offset, &mut emit)?;
        tok.finish(&mut emit);
    }
    Ok(())
}
