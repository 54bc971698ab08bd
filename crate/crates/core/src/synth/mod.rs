//! Synthetic corpora with known ground truth.
//!
//! Tokens are i.i.d. draws from a Zipf law truncated at `vocab` ranks, or
//! from the two-regime law that switches exponent at `r_c` while staying
//! continuous there. Randomness is counter-based: token `i` always consumes
//! the same four 32-bit words of the ChaCha8 stream keyed by the seed, so
//! output does not depend on how generation is split across threads.

mod alias;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{sum, CompensatedSum};
use crate::textprep::{TokenizedCorpus, VocabEntry};

pub use alias::{AliasTable, PROB_SUM_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RankLaw {
    Zipf { a: f64 },
    PiecewiseZipf { a1: f64, a2: f64, r_c: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    #[serde(flatten)]
    pub law: RankLaw,
    /// Support size V.
    pub vocab: u64,
    /// Number of tokens L to emit.
    pub tokens: u64,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn zipf(a: f64, vocab: u64, tokens: u64, seed: u64) -> Self {
        Self {
            law: RankLaw::Zipf { a },
            vocab,
            tokens,
            seed,
        }
    }

    pub fn piecewise(a1: f64, a2: f64, r_c: u64, vocab: u64, tokens: u64, seed: u64) -> Self {
        Self {
            law: RankLaw::PiecewiseZipf { a1, a2, r_c },
            vocab,
            tokens,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.vocab == 0 || self.vocab > u32::MAX as u64 + 1 {
            return Err(Error::domain(format!("vocab {} outside [1, 2^32]", self.vocab)));
        }
        if self.tokens == 0 {
            return Err(Error::domain("tokens must be >= 1"));
        }
        let ok = |a: f64| a > 0.0 && a.is_finite();
        match self.law {
            RankLaw::Zipf { a } if !ok(a) => Err(Error::domain("exponent must be positive")),
            RankLaw::PiecewiseZipf { a1, a2, .. } if !ok(a1) || !ok(a2) => {
                Err(Error::domain("exponents must be positive"))
            }
            RankLaw::PiecewiseZipf { r_c, .. } if r_c < 2 || r_c > self.vocab => {
                Err(Error::domain(format!("r_c = {r_c} outside [2, {}]", self.vocab)))
            }
            _ => Ok(()),
        }
    }

    /// Probability of each rank `1..=vocab`, in rank order.
    pub fn probabilities(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let weight: Box<dyn Fn(f64) -> f64 + Sync> = match self.law {
            RankLaw::Zipf { a } => Box::new(move |lr: f64| (-a * lr).exp()),
            RankLaw::PiecewiseZipf { a1, a2, r_c } => {
                let lrc = (r_c as f64).ln();
                Box::new(move |lr: f64| {
                    if lr < lrc {
                        (-a1 * lr).exp()
                    } else {
                        // matched to the head law at r_c
                        ((a2 - a1) * lrc - a2 * lr).exp()
                    }
                })
            }
        };
        let mut w: Vec<f64> = (1..=self.vocab).map(|r| weight((r as f64).ln())).collect();
        let total = sum(w.iter().copied());
        w.iter_mut().for_each(|x| *x /= total);
        let check = sum(w.iter().copied());
        if (check - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::Numerical(format!("probabilities sum to {check}")));
        }
        Ok(w)
    }
}

/// Exact entropy `−Σ p ln p` of the generating distribution, in nats.
pub fn true_entropy(spec: &GeneratorSpec) -> Result<f64> {
    let p = spec.probabilities()?;
    let h: CompensatedSum = p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).collect();
    Ok(h.value())
}

const BLOCK: u64 = 1 << 16;
const WORDS_PER_TOKEN: u128 = 4;

fn fill_block(table: &AliasTable, seed: u64, start: u64, out: &mut [u32]) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_word_pos(start as u128 * WORDS_PER_TOKEN);
    for slot in out {
        *slot = table.sample(&mut rng);
    }
}

/// Raw draws: `rank − 1` for each of the `tokens` positions.
pub fn gen_ranks(spec: &GeneratorSpec) -> Result<Vec<u32>> {
    let table = AliasTable::new(&spec.probabilities()?)?;
    let mut out = vec![0u32; spec.tokens as usize];
    out.par_chunks_mut(BLOCK as usize)
        .enumerate()
        .for_each(|(b, chunk)| fill_block(&table, spec.seed, b as u64 * BLOCK, chunk));
    Ok(out)
}

/// Same draws as [`gen_ranks`] with an arbitrary block size; used to check
/// that output does not depend on the split.
pub fn gen_ranks_blocked(spec: &GeneratorSpec, block: usize) -> Result<Vec<u32>> {
    if block == 0 {
        return Err(Error::domain("block size must be >= 1"));
    }
    let table = AliasTable::new(&spec.probabilities()?)?;
    let mut out = vec![0u32; spec.tokens as usize];
    out.par_chunks_mut(block)
        .enumerate()
        .for_each(|(b, chunk)| fill_block(&table, spec.seed, (b * block) as u64, chunk));
    Ok(out)
}

/// Generates a corpus. Observed ranks are numbered in rank order, so when
/// every rank occurs the token id is exactly `rank − 1`; the word for rank
/// `r` is `r{r}`.
pub fn gen_corpus(spec: &GeneratorSpec) -> Result<TokenizedCorpus> {
    let ranks = gen_ranks(spec)?;
    Ok(corpus_from_ranks(ranks, spec.vocab as usize))
}

pub(crate) fn corpus_from_ranks(mut ranks: Vec<u32>, vocab: usize) -> TokenizedCorpus {
    let counts = crate::corpusstats::count_ids(&ranks, vocab);
    let mut remap = vec![u32::MAX; vocab];
    let mut entries = Vec::new();
    for (rank0, &c) in counts.iter().enumerate() {
        if c > 0 {
            remap[rank0] = entries.len() as u32;
            entries.push(VocabEntry {
                word: format!("r{}", rank0 + 1),
                count: c,
            });
        }
    }
    if entries.len() != vocab {
        ranks.par_iter_mut().for_each(|r| *r = remap[*r as usize]);
    }
    TokenizedCorpus::from_parts_unchecked(ranks, entries)
}
