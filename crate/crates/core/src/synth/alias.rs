//! Walker–Vose alias table.

use rand::RngCore;

use crate::error::{Error, Result};
use crate::numeric::sum;

/// Tolerance on `Σ p = 1` accepted by [`AliasTable::new`].
pub const PROB_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct AliasTable {
    threshold: Vec<f64>,
    alias: Vec<u32>,
}

impl AliasTable {
    pub fn new(probabilities: &[f64]) -> Result<Self> {
        let n = probabilities.len();
        if n == 0 {
            return Err(Error::domain("alias table needs at least one outcome"));
        }
        if n as u64 > u32::MAX as u64 + 1 {
            return Err(Error::domain("alias table supports at most 2^32 outcomes"));
        }
        if probabilities.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::domain("probabilities must be finite and non-negative"));
        }
        let total = sum(probabilities.iter().copied());
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::domain(format!("probabilities sum to {total}, not 1")));
        }

        let nf = n as f64;
        let mut scaled: Vec<f64> = probabilities.iter().map(|p| p * nf / total).collect();
        let mut threshold = vec![1.0; n];
        let mut alias: Vec<u32> = (0..n as u32).collect();
        let (mut small, mut large): (Vec<u32>, Vec<u32>) = (0..n as u32).partition(|&i| scaled[i as usize] < 1.0);
        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            threshold[s as usize] = scaled[s as usize];
            alias[s as usize] = l;
            scaled[l as usize] -= 1.0 - scaled[s as usize];
            if scaled[l as usize] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // leftovers are 1 up to rounding
        for i in small.into_iter().chain(large) {
            threshold[i as usize] = 1.0;
        }
        Ok(Self { threshold, alias })
    }

    pub fn len(&self) -> usize {
        self.threshold.len()
    }

    pub fn is_empty(&self) -> bool {
        self.threshold.is_empty()
    }

    /// Maps two uniform 64-bit words to an outcome index.
    #[inline]
    pub fn sample_from_bits(&self, column_bits: u64, coin_bits: u64) -> u32 {
        let col = ((column_bits as u128 * self.threshold.len() as u128) >> 64) as usize;
        let coin = (coin_bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        if coin < self.threshold[col] {
            col as u32
        } else {
            self.alias[col]
        }
    }

    /// Draws one outcome, consuming exactly two `u64`s from `rng`.
    #[inline]
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> u32 {
        let a = rng.next_u64();
        let b = rng.next_u64();
        self.sample_from_bits(a, b)
    }
}
