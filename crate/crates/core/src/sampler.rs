//! Fragment sampling: for each length `l` on an arithmetic grid, draw `n`
//! contiguous fragments at uniform random offsets and summarize each
//! measure over them.
//!
//! Replicate `(l, i)` draws its offset from the ChaCha8 stream
//! `(seed, stream = l)` at word position `64 i`, so results are identical for
//! any thread count and any evaluation order.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpusstats::parse_col;
use crate::error::{Error, Result};
use crate::estimators::{nsb_entropy, plugin_entropy, Estimator};
use crate::numeric::mean_std;
use crate::textprep::TokenizedCorpus;

/// Support size handed to the NSB estimator for each fragment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NsbSupport {
    /// Types observed in the fragment.
    #[default]
    Observed,
    /// Types in the whole corpus.
    Corpus,
    /// A fixed size, which must cover every fragment's observed types.
    Fixed(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplePlan {
    /// Length increment Δl.
    pub step: u64,
    /// Fragments per length.
    pub replicates: usize,
    pub seed: u64,
    pub l_min: u64,
    /// Largest length; `None` means the corpus length.
    pub l_max: Option<u64>,
    pub nsb_support: NsbSupport,
}

impl Default for SamplePlan {
    fn default() -> Self {
        Self {
            step: 2_500_000,
            replicates: 25,
            seed: 0,
            l_min: 2_500_000,
            l_max: None,
            nsb_support: NsbSupport::Observed,
        }
    }
}

impl SamplePlan {
    /// `l_min, l_min + Δl, …` up to `l_max`.
    pub fn lengths(&self, corpus_len: u64) -> Result<Vec<u64>> {
        let l_max = self.l_max.unwrap_or(corpus_len);
        if self.step == 0 || self.replicates == 0 {
            return Err(Error::domain("step and replicates must be >= 1"));
        }
        if self.l_min == 0 || self.l_min > l_max || l_max > corpus_len {
            return Err(Error::domain(format!(
                "need 1 <= l_min <= l_max <= L, got l_min={}, l_max={l_max}, L={corpus_len}",
                self.l_min
            )));
        }
        Ok((0..)
            .map(|k| self.l_min + k * self.step)
            .take_while(|&l| l <= l_max)
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Replicate {
    pub start: u64,
    pub vocab: u64,
    pub ttr: f64,
    pub h_plugin: f64,
    pub h_nsb: Option<f64>,
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    fn of(values: impl Iterator<Item = f64>) -> Self {
        let v: Vec<f64> = values.collect();
        let (mean, std) = mean_std(&v);
        Self { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub length: u64,
    pub h_plugin: Summary,
    pub h_nsb: Option<Summary>,
    pub vocab: Summary,
    pub ttr: Summary,
    /// Per-replicate values in replicate order; empty when read back from TSV.
    pub replicates: Vec<Replicate>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SampleSeries {
    pub points: Vec<SamplePoint>,
}

const TSV_HEADER: &str = "l\tmean_H_pi\tstd_H_pi\tmean_H_nsb\tstd_H_nsb\tmean_V\tstd_V\tmean_TTR\tstd_TTR";
const NA: &str = "NA";

impl SampleSeries {
    pub fn lengths(&self) -> Vec<u64> {
        self.points.iter().map(|p| p.length).collect()
    }

    /// Aggregates as TSV. Floats use the shortest round-trip form.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{TSV_HEADER}")?;
        for p in &self.points {
            let (nm, ns) = match p.h_nsb {
                Some(s) => (s.mean.to_string(), s.std.to_string()),
                None => (NA.into(), NA.into()),
            };
            writeln!(
                w,
                "{}\t{}\t{}\t{nm}\t{ns}\t{}\t{}\t{}\t{}",
                p.length, p.h_plugin.mean, p.h_plugin.std, p.vocab.mean, p.vocab.std, p.ttr.mean, p.ttr.std
            )?;
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(r: R) -> Result<Self> {
        let mut points = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            if line.is_empty() || (lineno == 0 && line.starts_with("l\t")) {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 9 {
                return Err(Error::Format(format!(
                    "line {}: expected 9 columns, got {}",
                    lineno + 1,
                    cols.len()
                )));
            }
            let f = |i: usize| -> Result<f64> { parse_col(Some(cols[i]), lineno) };
            let h_nsb = match (cols[3], cols[4]) {
                (NA, NA) => None,
                _ => Some(Summary {
                    mean: f(3)?,
                    std: f(4)?,
                }),
            };
            points.push(SamplePoint {
                length: parse_col(Some(cols[0]), lineno)?,
                h_plugin: Summary {
                    mean: f(1)?,
                    std: f(2)?,
                },
                h_nsb,
                vocab: Summary {
                    mean: f(5)?,
                    std: f(6)?,
                },
                ttr: Summary {
                    mean: f(7)?,
                    std: f(8)?,
                },
                replicates: Vec::new(),
            });
        }
        if points.windows(2).any(|w| w[0].length >= w[1].length) {
            return Err(Error::Format("lengths must be strictly increasing".into()));
        }
        Ok(Self { points })
    }

    /// Per-replicate rows: `l, replicate, start, V, TTR, H_pi, H_nsb`.
    pub fn write_replicates_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "l\treplicate\tstart\tV\tTTR\tH_pi\tH_nsb")?;
        for p in &self.points {
            for (i, r) in p.replicates.iter().enumerate() {
                let nsb = r.h_nsb.map_or_else(|| NA.to_string(), |h| h.to_string());
                writeln!(
                    w,
                    "{}\t{i}\t{}\t{}\t{}\t{}\t{nsb}",
                    p.length, r.start, r.vocab, r.ttr, r.h_plugin
                )?;
            }
        }
        Ok(())
    }
}

const WORDS_PER_REPLICATE: u128 = 64;

fn fragment_start(seed: u64, length: u64, replicate: usize, corpus_len: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(length);
    rng.set_word_pos(replicate as u128 * WORDS_PER_REPLICATE);
    rng.random_range(0..=corpus_len - length)
}

/// Reusable per-thread count buffer; only touched slots are reset.
struct Scratch {
    counts: Vec<u64>,
    touched: Vec<u32>,
}

impl Scratch {
    fn new(vocab: usize) -> Self {
        Self {
            counts: vec![0; vocab],
            touched: Vec::new(),
        }
    }

    /// Counts of the fragment's types, in order of first occurrence.
    fn fragment_counts(&mut self, ids: &[u32]) -> Vec<u64> {
        for &id in ids {
            let c = &mut self.counts[id as usize];
            if *c == 0 {
                self.touched.push(id);
            }
            *c += 1;
        }
        let out = self.touched.iter().map(|&id| self.counts[id as usize]).collect();
        for &id in &self.touched {
            self.counts[id as usize] = 0;
        }
        self.touched.clear();
        out
    }
}

/// Runs the sampling protocol. Plug-in entropy is always computed; NSB is
/// added when `estimators` contains it, with support size from
/// `plan.nsb_support`.
pub fn sample_series(corpus: &TokenizedCorpus, plan: &SamplePlan, estimators: &[Estimator]) -> Result<SampleSeries> {
    let total = corpus.total_tokens();
    if total < plan.l_min {
        return Err(Error::domain(format!(
            "corpus has {total} tokens, fewer than l_min = {}",
            plan.l_min
        )));
    }
    let lengths = plan.lengths(total)?;
    let with_nsb = estimators.contains(&Estimator::Nsb);
    let corpus_vocab = corpus.vocab_size() as u64;
    let ids = corpus.token_ids();
    let jobs: Vec<(u64, usize)> = lengths
        .iter()
        .flat_map(|&l| (0..plan.replicates).map(move |i| (l, i)))
        .collect();

    let results: Vec<Result<Replicate>> = jobs
        .par_iter()
        .map_init(
            || Scratch::new(corpus.vocab_size()),
            |scratch, &(l, i)| {
                let start = fragment_start(plan.seed, l, i, total);
                let counts = scratch.fragment_counts(&ids[start as usize..(start + l) as usize]);
                let vocab = counts.len() as u64;
                let h_plugin = plugin_entropy(&counts)?.value;
                let h_nsb = if with_nsb {
                    let support = match plan.nsb_support {
                        NsbSupport::Observed => vocab,
                        NsbSupport::Corpus => corpus_vocab,
                        NsbSupport::Fixed(k) => k,
                    };
                    Some(nsb_entropy(&counts, support)?.value)
                } else {
                    None
                };
                Ok(Replicate {
                    start,
                    vocab,
                    ttr: vocab as f64 / l as f64,
                    h_plugin,
                    h_nsb,
                })
            },
        )
        .collect();

    let mut results = results.into_iter();
    let mut points = Vec::with_capacity(lengths.len());
    for &l in &lengths {
        let reps = (&mut results)
            .take(plan.replicates)
            .collect::<Result<Vec<Replicate>>>()?;
        points.push(SamplePoint {
            length: l,
            h_plugin: Summary::of(reps.iter().map(|r| r.h_plugin)),
            h_nsb: with_nsb.then(|| Summary::of(reps.iter().filter_map(|r| r.h_nsb))),
            vocab: Summary::of(reps.iter().map(|r| r.vocab as f64)),
            ttr: Summary::of(reps.iter().map(|r| r.ttr)),
            replicates: reps,
        });
    }
    Ok(SampleSeries { points })
}

/// Default σ_H band for [`select_fit_range`].
pub const SIGMA_H_LO: f64 = 0.0025;
pub const SIGMA_H_HI: f64 = 0.025;

/// Inclusive range of lengths used for relation fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitRange {
    pub l_low: u64,
    pub l_high: u64,
    /// No length fell inside the band; the central half was used instead.
    pub fallback: bool,
}

impl FitRange {
    pub fn contains(&self, l: u64) -> bool {
        self.l_low <= l && l <= self.l_high
    }
}

/// Longest run `i..j` of values strictly inside `(lo, hi)`, earliest on ties;
/// otherwise the central half `n/4 .. n − n/4`. Returns `(i, j, fallback)`.
pub fn select_run(sigma: &[f64], lo: f64, hi: f64) -> Result<(usize, usize, bool)> {
    let n = sigma.len();
    if n < 3 {
        return Err(Error::domain(format!("need at least 3 lengths, got {n}")));
    }
    if !(lo < hi) {
        return Err(Error::domain("need lo < hi"));
    }
    let mut best = (0, 0);
    let mut run_start = None;
    for (k, &s) in sigma.iter().chain(std::iter::once(&f64::NAN)).enumerate() {
        let inside = s > lo && s < hi;
        match (inside, run_start) {
            (true, None) => run_start = Some(k),
            (false, Some(i)) => {
                if k - i > best.1 - best.0 {
                    best = (i, k);
                }
                run_start = None;
            }
            _ => {}
        }
    }
    if best.1 > best.0 {
        Ok((best.0, best.1, false))
    } else {
        Ok((n / 4, n - n / 4, true))
    }
}

/// Picks the fit range from the plug-in entropy spread per length.
pub fn select_fit_range(series: &SampleSeries, lo: f64, hi: f64) -> Result<FitRange> {
    let sigma: Vec<f64> = series.points.iter().map(|p| p.h_plugin.std).collect();
    let (i, j, fallback) = select_run(&sigma, lo, hi)?;
    Ok(FitRange {
        l_low: series.points[i].length,
        l_high: series.points[j - 1].length,
        fallback,
    })
}
