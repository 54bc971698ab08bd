//! Entropy estimators over count data, in nats.
//!
//! * [`plugin_entropy`]: empirical frequencies substituted into `−Σ p ln p`.
//! * [`nsb_entropy`]: Bayesian posterior mean under the mixture-of-Dirichlets
//!   prior that is flat in expected entropy.
//! * [`partial_entropy_curve`], [`r_h_empirical`], [`r_h_theoretical`]:
//!   how much of the total entropy the low-frequency tail carries.
//! * [`zipf_entropy_exact`]: entropy of a finite Zipf law by direct summation.

mod nsb;

use serde::{Deserialize, Serialize};

use crate::corpusstats::FrequencyTable;
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

pub use nsb::{nsb_entropy, NSB_REL_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Plugin,
    Nsb,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyEstimate {
    /// Entropy in nats.
    pub value: f64,
    pub estimator: Estimator,
    /// Posterior standard deviation; NSB only.
    pub posterior_std: Option<f64>,
}

#[inline]
fn surprisal_term(count: u64, total: f64) -> f64 {
    let p = count as f64 / total;
    -p * p.ln()
}

fn check_counts(counts: &[u64]) -> Result<f64> {
    if counts.is_empty() {
        return Err(Error::domain("entropy of an empty count vector"));
    }
    if counts.contains(&0) {
        return Err(Error::domain("counts must all be >= 1"));
    }
    Ok(counts.iter().sum::<u64>() as f64)
}

/// Plug-in (maximum likelihood) entropy.
pub fn plugin_entropy(counts: &[u64]) -> Result<EntropyEstimate> {
    let total = check_counts(counts)?;
    let h: CompensatedSum = counts.iter().map(|&c| surprisal_term(c, total)).collect();
    Ok(EntropyEstimate {
        value: h.value().max(0.0),
        estimator: Estimator::Plugin,
        posterior_std: None,
    })
}

/// Running sum `H_p(r) = −Σ_{r' ≤ r} p_{r'} ln p_{r'}` over the ranks of a
/// table, probabilities taken over the full text length.
pub fn partial_entropy_curve(table: &FrequencyTable) -> Vec<(u64, f64)> {
    let total = table.total_tokens() as f64;
    let mut acc = CompensatedSum::new();
    table
        .entries()
        .iter()
        .map(|e| {
            acc.add(surprisal_term(e.count, total));
            (e.rank, acc.value())
        })
        .collect()
}

/// Share of the plug-in entropy carried by ranks `>= r_c`.
///
/// `r_c` may be one past the last rank, giving an empty tail.
pub fn r_h_empirical(table: &FrequencyTable, r_c: u64) -> Result<f64> {
    let v = table.len() as u64;
    if r_c < 2 || r_c > v + 1 {
        return Err(Error::domain(format!("r_c = {r_c} outside [2, {}]", v + 1)));
    }
    let total = table.total_tokens() as f64;
    let mut head = CompensatedSum::new();
    let mut tail = CompensatedSum::new();
    for e in table.entries() {
        let t = surprisal_term(e.count, total);
        if e.rank < r_c {
            head.add(t);
        } else {
            tail.add(t);
        }
    }
    let all = head.value() + tail.value();
    if all <= 0.0 {
        return Err(Error::domain("table has zero entropy"));
    }
    Ok(tail.value() / all)
}

/// Power sums of one regime: `Σ r^{-a}` and `Σ r^{-a} ln r` over `lo..=hi`.
fn regime_sums(a: f64, lo: u64, hi: u64) -> (f64, f64) {
    let mut s = CompensatedSum::new();
    let mut t = CompensatedSum::new();
    for r in lo..=hi {
        let lr = (r as f64).ln();
        let w = (-a * lr).exp();
        s.add(w);
        t.add(w * lr);
    }
    (s.value(), t.value())
}

/// Normalization constants of the two-regime rank-frequency law
/// `f = c₁ r^{-a₁}` (r < r_c), `f = c₂ r^{-a₂}` (r ≥ r_c), for a text of
/// `tokens` words over `vocab` ranks.
///
/// `c₂` enforces continuity at `r_c` and total mass L. `c₁` uses the
/// published expression `L / (Σ_{r<r_c} r^{-a₁} + Σ_{r≥r_c} r^{-a₂})`,
/// which is what the reference R'_H values were computed with; it coincides
/// with the continuous normalization only when `a₁ = a₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiecewiseConstants {
    pub c1: f64,
    pub c2: f64,
}

fn check_piecewise(a1: f64, a2: f64, r_c: u64, vocab: u64, tokens: u64) -> Result<()> {
    if !(a1 > 0.0 && a2 > 0.0 && a1.is_finite() && a2.is_finite()) {
        return Err(Error::domain("exponents must be positive"));
    }
    if vocab < 2 || tokens < vocab {
        return Err(Error::domain(format!("need L >= V >= 2, got V={vocab}, L={tokens}")));
    }
    if r_c < 2 || r_c > vocab {
        return Err(Error::domain(format!("r_c = {r_c} outside [2, {vocab}]")));
    }
    Ok(())
}

struct PiecewiseSums {
    head: (f64, f64),
    tail: (f64, f64),
}

fn piecewise_sums(a1: f64, a2: f64, r_c: u64, vocab: u64) -> PiecewiseSums {
    PiecewiseSums {
        head: regime_sums(a1, 1, r_c - 1),
        tail: regime_sums(a2, r_c, vocab),
    }
}

fn constants_from_sums(a1: f64, a2: f64, r_c: u64, tokens: u64, sums: &PiecewiseSums) -> PiecewiseConstants {
    let l = tokens as f64;
    let (s1, s2) = (sums.head.0, sums.tail.0);
    let c1 = l / (s1 + s2);
    let c2 = l / ((r_c as f64).powf(a1 - a2) * s1 + s2);
    PiecewiseConstants { c1, c2 }
}

pub fn piecewise_constants(a1: f64, a2: f64, r_c: u64, vocab: u64, tokens: u64) -> Result<PiecewiseConstants> {
    check_piecewise(a1, a2, r_c, vocab, tokens)?;
    let sums = piecewise_sums(a1, a2, r_c, vocab);
    Ok(constants_from_sums(a1, a2, r_c, tokens, &sums))
}

/// Model-based tail share R'_H from the fitted two-regime law, by direct
/// summation over both regimes.
pub fn r_h_theoretical(a1: f64, a2: f64, r_c: u64, vocab: u64, tokens: u64) -> Result<f64> {
    check_piecewise(a1, a2, r_c, vocab, tokens)?;
    let sums = piecewise_sums(a1, a2, r_c, vocab);
    let PiecewiseConstants { c1, c2 } = constants_from_sums(a1, a2, r_c, tokens, &sums);
    let l = tokens as f64;
    // c Σ r^{-a} ln(c/L · r^{-a}) = c [ln(c/L) Σ r^{-a} − a Σ r^{-a} ln r]
    let head = c1 * ((c1 / l).ln() * sums.head.0 - a1 * sums.head.1);
    let tail = c2 * ((c2 / l).ln() * sums.tail.0 - a2 * sums.tail.1);
    Ok(tail / (head + tail))
}

/// Shannon entropy of the Zipf law `p_r ∝ r^{-a}` on ranks `1..=vocab`:
/// `H = (a / K) Σ ln r / r^a + ln K` with `K = Σ r^{-a}`.
pub fn zipf_entropy_exact(vocab: u64, a: f64) -> Result<f64> {
    if vocab == 0 || !(a > 0.0) || !a.is_finite() {
        return Err(Error::domain("need V >= 1 and a > 0"));
    }
    let (k, s) = regime_sums(a, 1, vocab);
    Ok((a * s / k + k.ln()).max(0.0))
}
