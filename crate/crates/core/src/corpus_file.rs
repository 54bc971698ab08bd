//! On-disk corpus: `<prefix>.ids` holds the token stream, `<prefix>.vocab.tsv`
//! the vocabulary.
//!
//! ```text
//! .ids       "LXDVCORP" | u32 version | u32 header_len | header JSON
//!            | u64 token_count | token_count × u32 id      (little-endian)
//! .vocab.tsv id<TAB>type<TAB>count, one row per id in id order
//! ```
//!
//! The header records where the corpus came from: the tokenizer options for
//! text, or the generator spec for synthetic data.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpusstats::parse_col;
use crate::error::{Error, Result};
use crate::synth::GeneratorSpec;
use crate::textprep::{TokenizedCorpus, TokenizerOptions, VocabEntry};

pub const MAGIC: &[u8; 8] = b"LXDVCORP";
pub const FORMAT_VERSION: u32 = 1;
const MAX_HEADER: u32 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum CorpusOrigin {
    Text {
        tokenizer: TokenizerOptions,
        inputs: Vec<String>,
    },
    Synthetic {
        generator: GeneratorSpec,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusHeader {
    pub origin: CorpusOrigin,
    pub vocab_size: u64,
    pub tokens: u64,
}

impl CorpusHeader {
    pub fn new(origin: CorpusOrigin, corpus: &TokenizedCorpus) -> Self {
        Self {
            origin,
            vocab_size: corpus.vocab_size() as u64,
            tokens: corpus.total_tokens(),
        }
    }
}

/// `(<prefix>.ids, <prefix>.vocab.tsv)`.
pub fn corpus_paths(prefix: &Path) -> (PathBuf, PathBuf) {
    let with = |ext: &str| {
        let mut s = prefix.as_os_str().to_owned();
        s.push(ext);
        PathBuf::from(s)
    };
    (with(".ids"), with(".vocab.tsv"))
}

pub fn write_ids<W: Write>(mut w: W, corpus: &TokenizedCorpus, header: &CorpusHeader) -> Result<()> {
    let json = serde_json::to_vec(header)?;
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(json.len() as u32).to_le_bytes())?;
    w.write_all(&json)?;
    w.write_all(&corpus.total_tokens().to_le_bytes())?;
    let mut buf = Vec::with_capacity(4 * 65_536);
    for chunk in corpus.token_ids().chunks(65_536) {
        buf.clear();
        buf.extend(chunk.iter().flat_map(|id| id.to_le_bytes()));
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u32::from_le_bytes(b))
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format("corpus file is truncated".into())
    } else {
        Error::Io(e)
    }
}

/// Reads only the header of an `.ids` stream.
pub fn read_header<R: Read>(r: &mut R) -> Result<CorpusHeader> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(truncated)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a corpus file (bad magic number)".into()));
    }
    let version = read_u32(r)?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "corpus format version {version}, expected {FORMAT_VERSION}"
        )));
    }
    let len = read_u32(r)?;
    if len > MAX_HEADER {
        return Err(Error::Format(format!("header length {len} is implausible")));
    }
    let mut json = vec![0u8; len as usize];
    r.read_exact(&mut json).map_err(truncated)?;
    serde_json::from_slice(&json).map_err(|e| Error::Format(format!("bad corpus header: {e}")))
}

pub fn read_ids<R: Read>(mut r: R) -> Result<(CorpusHeader, Vec<u32>)> {
    let header = read_header(&mut r)?;
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(truncated)?;
    let count = u64::from_le_bytes(b);
    if count != header.tokens {
        return Err(Error::Format(format!(
            "header promises {} tokens, stream declares {count}",
            header.tokens
        )));
    }
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() as u64 != count * 4 {
        return Err(Error::Format(format!(
            "expected {} id bytes, found {}",
            count * 4,
            bytes.len()
        )));
    }
    let ids = bytes
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok((header, ids))
}

pub fn write_vocab_tsv<W: Write>(mut w: W, vocab: &[VocabEntry]) -> Result<()> {
    writeln!(w, "id\ttype\tcount")?;
    for (id, e) in vocab.iter().enumerate() {
        if e.word.contains(['\t', '\n', '\r']) {
            return Err(Error::Format(format!("type {:?} cannot be stored in TSV", e.word)));
        }
        writeln!(w, "{id}\t{}\t{}", e.word, e.count)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_vocab_tsv<R: BufRead>(r: R) -> Result<Vec<VocabEntry>> {
    let mut out = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        if lineno == 0 {
            if line != "id\ttype\tcount" {
                return Err(Error::Format("vocabulary header must be id\\ttype\\tcount".into()));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let mut cols = line.splitn(3, '\t');
        let id: usize = parse_col(cols.next(), lineno)?;
        if id != out.len() {
            return Err(Error::Format(format!("line {}: ids must be 0, 1, 2, …", lineno + 1)));
        }
        let word = cols
            .next()
            .ok_or_else(|| Error::Format(format!("line {}: missing type", lineno + 1)))?
            .to_string();
        out.push(VocabEntry {
            word,
            count: parse_col(cols.next(), lineno)?,
        });
    }
    Ok(out)
}

/// Writes both files next to `prefix`.
pub fn write_corpus(prefix: &Path, corpus: &TokenizedCorpus, header: &CorpusHeader) -> Result<()> {
    let (ids, vocab) = corpus_paths(prefix);
    write_ids(BufWriter::new(File::create(ids)?), corpus, header)?;
    write_vocab_tsv(BufWriter::new(File::create(vocab)?), corpus.vocab())
}

/// Reads and cross-validates both files.
pub fn read_corpus(prefix: &Path) -> Result<(TokenizedCorpus, CorpusHeader)> {
    let (ids_path, vocab_path) = corpus_paths(prefix);
    let (header, ids) = read_ids(BufReader::new(File::open(ids_path)?))?;
    let vocab = read_vocab_tsv(BufReader::new(File::open(vocab_path)?))?;
    if vocab.len() as u64 != header.vocab_size {
        return Err(Error::Format(format!(
            "header promises {} types, vocabulary has {}",
            header.vocab_size,
            vocab.len()
        )));
    }
    Ok((TokenizedCorpus::from_parts(ids, vocab)?, header))
}
