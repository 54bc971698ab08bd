//! Counting statistics of a tokenized corpus.

use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::textprep::TokenizedCorpus;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankEntry {
    /// 1-based rank.
    pub rank: u64,
    pub type_id: u32,
    pub count: u64,
}

/// Rank-ordered word counts. Ties in count are ordered by ascending type id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyTable {
    entries: Vec<RankEntry>,
    total_tokens: u64,
}

impl FrequencyTable {
    /// Builds a table from per-id counts; ids with zero count are skipped.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let mut pairs: Vec<(u32, u64)> = counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(id, &c)| (id as u32, c))
            .collect();
        if pairs.is_empty() {
            return Err(Error::EmptyInput("frequency table needs at least one token"));
        }
        pairs.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let total_tokens = pairs.iter().map(|p| p.1).sum();
        let entries = pairs
            .into_iter()
            .enumerate()
            .map(|(i, (type_id, count))| RankEntry {
                rank: i as u64 + 1,
                type_id,
                count,
            })
            .collect();
        Ok(Self { entries, total_tokens })
    }

    /// Table from counts already in rank order (type ids are positional).
    pub fn from_ranked_counts(counts: &[u64]) -> Result<Self> {
        if counts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::domain("counts must be non-increasing in rank"));
        }
        if counts.last() == Some(&0) {
            return Err(Error::domain("every count must be positive"));
        }
        Self::from_counts(counts)
    }

    pub fn entries(&self) -> &[RankEntry] {
        &self.entries
    }

    /// Counts in rank order.
    pub fn counts(&self) -> impl ExactSizeIterator<Item = u64> + '_ {
        self.entries.iter().map(|e| e.count)
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    /// Number of types V.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "rank\tcount")?;
        for e in &self.entries {
            writeln!(w, "{}\t{}", e.rank, e.count)?;
        }
        Ok(())
    }

    /// Reads a `rank<TAB>count` table. Type ids are assigned positionally.
    pub fn read_tsv<R: BufRead>(r: R) -> Result<Self> {
        let mut counts = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            if lineno == 0 && line.starts_with("rank") {
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let mut cols = line.split('\t');
            let rank: u64 = parse_col(cols.next(), lineno)?;
            let count: u64 = parse_col(cols.next(), lineno)?;
            if rank != counts.len() as u64 + 1 {
                return Err(Error::Format(format!("line {}: ranks must be consecutive", lineno + 1)));
            }
            counts.push(count);
        }
        Self::from_ranked_counts(&counts)
    }
}

pub(crate) fn parse_col<T: std::str::FromStr>(col: Option<&str>, lineno: usize) -> Result<T> {
    col.and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| Error::Format(format!("line {}: bad or missing column", lineno + 1)))
}

/// Per-id occurrence counts of a token stream, counted in parallel shards
/// and merged by addition.
pub fn count_ids(ids: &[u32], vocab_size: usize) -> Vec<u64> {
    const SHARD: usize = 1 << 20;
    if ids.len() <= SHARD {
        let mut counts = vec![0u64; vocab_size];
        for &id in ids {
            counts[id as usize] += 1;
        }
        return counts;
    }
    ids.par_chunks(SHARD)
        .map(|chunk| {
            let mut counts = vec![0u64; vocab_size];
            for &id in chunk {
                counts[id as usize] += 1;
            }
            counts
        })
        .reduce(
            || vec![0u64; vocab_size],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        )
}

pub fn frequency_table(corpus: &TokenizedCorpus) -> Result<FrequencyTable> {
    if corpus.is_empty() {
        return Err(Error::EmptyInput("corpus has no tokens"));
    }
    FrequencyTable::from_counts(&corpus.counts())
}

/// Type-token ratio V/L.
pub fn ttr(vocab: u64, tokens: u64) -> Result<f64> {
    if tokens == 0 {
        return Err(Error::domain("TTR undefined for L = 0"));
    }
    if vocab == 0 || vocab > tokens {
        return Err(Error::domain(format!("need 1 <= V <= L, got V={vocab}, L={tokens}")));
    }
    Ok(vocab as f64 / tokens as f64)
}

/// Number of hapax legomena (types seen exactly once).
pub fn hapax_count(table: &FrequencyTable) -> u64 {
    // counts are sorted descending, so the hapaxes form a suffix
    let first = table.entries.partition_point(|e| e.count > 1);
    (table.entries.len() - first) as u64
}

/// Vocabulary growth: `(tokens read, distinct types)` pairs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GrowthCurve {
    pub points: Vec<(u64, u64)>,
}

impl GrowthCurve {
    /// Checks the growth-curve invariants.
    pub fn validate(&self) -> Result<()> {
        let mut prev = (0u64, 0u64);
        for &(l, v) in &self.points {
            if l <= prev.0 || v < prev.1 || v > l || v - prev.1 > l - prev.0 {
                return Err(Error::domain(format!("invalid growth point ({l}, {v})")));
            }
            prev = (l, v);
        }
        Ok(())
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "L\tV")?;
        for (l, v) in &self.points {
            writeln!(w, "{l}\t{v}")?;
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(r: R) -> Result<Self> {
        let mut points = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            if (lineno == 0 && line.starts_with('L')) || line.is_empty() {
                continue;
            }
            let mut cols = line.split('\t');
            points.push((parse_col(cols.next(), lineno)?, parse_col(cols.next(), lineno)?));
        }
        let curve = Self { points };
        curve.validate()?;
        Ok(curve)
    }
}

/// Growth curve sampled every `step` tokens; the last point is the full length.
pub fn growth_curve(corpus: &TokenizedCorpus, step: u64) -> Result<GrowthCurve> {
    if step == 0 {
        return Err(Error::domain("growth curve step must be >= 1"));
    }
    let total = corpus.total_tokens();
    let mut checkpoints: Vec<u64> = (1..=total / step).map(|i| i * step).collect();
    if !total.is_multiple_of(step) {
        checkpoints.push(total);
    }
    growth_curve_at(corpus, &checkpoints)
}

/// Growth curve at explicit, strictly increasing checkpoints `<= L`.
pub fn growth_curve_at(corpus: &TokenizedCorpus, checkpoints: &[u64]) -> Result<GrowthCurve> {
    let total = corpus.total_tokens();
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("checkpoints must be strictly increasing"));
    }
    if checkpoints.first() == Some(&0) || checkpoints.last().is_some_and(|&l| l > total) {
        return Err(Error::domain("checkpoints must lie in [1, L]"));
    }
    let mut seen = vec![false; corpus.vocab_size()];
    let mut distinct = 0u64;
    let mut points = Vec::with_capacity(checkpoints.len());
    let mut pos = 0usize;
    let ids = corpus.token_ids();
    for &cp in checkpoints {
        for &id in &ids[pos..cp as usize] {
            let slot = &mut seen[id as usize];
            if !*slot {
                *slot = true;
                distinct += 1;
            }
        }
        pos = cp as usize;
        points.push((cp, distinct));
    }
    Ok(GrowthCurve { points })
}

/// About `per_decade` log-spaced checkpoints from 1 to L (always including L).
pub fn log_checkpoints(total: u64, per_decade: usize) -> Vec<u64> {
    if total == 0 {
        return Vec::new();
    }
    let decades = (total as f64).log10();
    let n = ((decades * per_decade as f64).ceil() as usize).max(1) + 1;
    let mut cps: Vec<u64> = crate::numeric::logspace(1.0, total as f64, n)
        .into_iter()
        .map(|x| (x.round() as u64).clamp(1, total))
        .collect();
    cps.dedup();
    if cps.last() != Some(&total) {
        cps.push(total);
    }
    cps
}
