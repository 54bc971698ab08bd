//! Goodness-of-fit and dependence measures.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::numeric::{sum, CompensatedSum};

fn check_pair(x: &[f64], y: &[f64], min: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::domain(format!("length mismatch: {} vs {}", x.len(), y.len())));
    }
    if x.len() < min {
        return Err(Error::domain(format!("need at least {min} points, got {}", x.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::domain("values must be finite"));
    }
    Ok(())
}

/// Coefficient of determination `1 − SS_res / SS_tot`.
pub fn r_squared(observed: &[f64], predicted: &[f64]) -> Result<f64> {
    check_pair(observed, predicted, 2)?;
    let n = observed.len() as f64;
    let mean = sum(observed.iter().copied()) / n;
    let ss_tot = sum(observed.iter().map(|o| (o - mean).powi(2)));
    if ss_tot == 0.0 {
        return Err(Error::domain("observed values have zero variance"));
    }
    let ss_res = sum(observed.iter().zip(predicted).map(|(o, p)| (o - p).powi(2)));
    Ok(1.0 - ss_res / ss_tot)
}

/// 1-based ranks with ties sharing their mean rank.
pub fn mid_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j hold ranks i+1..=j
        let r = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = sum(x.iter().copied()) / n;
    let my = sum(y.iter().copied()) / n;
    let sxy = sum(x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)));
    let sxx = sum(x.iter().map(|a| (a - mx).powi(2)));
    let syy = sum(y.iter().map(|b| (b - my).powi(2)));
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

fn spearman_rho(x: &[f64], y: &[f64]) -> Result<f64> {
    pearson(&mid_ranks(x), &mid_ranks(y)).ok_or_else(|| Error::domain("constant input"))
}

/// Spearman rank correlation with a two-sided p-value from the Student t
/// approximation on `n − 2` degrees of freedom.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    check_pair(x, y, 3)?;
    let rho = spearman_rho(x, y)?;
    let df = (x.len() - 2) as f64;
    let denom = 1.0 - rho * rho;
    let p = if denom <= 0.0 {
        0.0
    } else {
        let t = rho.abs() * (df / denom).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Numerical(e.to_string()))?;
        (2.0 * (1.0 - dist.cdf(t))).clamp(0.0, 1.0)
    };
    Ok((rho, p))
}

/// Spearman correlation with a permutation p-value
/// `(1 + #{|ρ_perm| ≥ |ρ|}) / (1 + permutations)`.
pub fn spearman_permutation(x: &[f64], y: &[f64], permutations: usize, seed: u64) -> Result<(f64, f64)> {
    check_pair(x, y, 3)?;
    if permutations == 0 {
        return Err(Error::domain("permutations must be >= 1"));
    }
    let (rx, ry) = (mid_ranks(x), mid_ranks(y));
    let rho = pearson(&rx, &ry).ok_or_else(|| Error::domain("constant input"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shuffled = ry.clone();
    let mut hits = 0usize;
    for _ in 0..permutations {
        shuffled.shuffle(&mut rng);
        let r = pearson(&rx, &shuffled).unwrap_or(0.0);
        if r.abs() >= rho.abs() - 1e-12 {
            hits += 1;
        }
    }
    Ok((rho, (1 + hits) as f64 / (1 + permutations) as f64))
}

/// Row means and grand mean of `|v_i − v_j|`.
fn distance_means(v: &[f64]) -> (Vec<f64>, f64) {
    let n = v.len() as f64;
    let rows: Vec<f64> = v
        .par_iter()
        .map(|&a| sum(v.iter().map(|&b| (a - b).abs())) / n)
        .collect();
    let grand = sum(rows.iter().copied()) / n;
    (rows, grand)
}

/// Sample distance correlation in `[0, 1]`, exact O(n²) double centring.
/// Returns 0 when either variable has zero distance variance.
pub fn distance_correlation(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y, 2)?;
    let (ax, gx) = distance_means(x);
    let (ay, gy) = distance_means(y);
    // per-row (Σ A B, Σ A², Σ B²), reduced in row order
    let rows: Vec<[f64; 3]> = (0..x.len())
        .into_par_iter()
        .map(|i| {
            let mut acc = [CompensatedSum::new(); 3];
            for j in 0..x.len() {
                let a = (x[i] - x[j]).abs() - ax[i] - ax[j] + gx;
                let b = (y[i] - y[j]).abs() - ay[i] - ay[j] + gy;
                acc[0].add(a * b);
                acc[1].add(a * a);
                acc[2].add(b * b);
            }
            [acc[0].value(), acc[1].value(), acc[2].value()]
        })
        .collect();
    let dcov = sum(rows.iter().map(|r| r[0]));
    let dvx = sum(rows.iter().map(|r| r[1]));
    let dvy = sum(rows.iter().map(|r| r[2]));
    if dvx <= 0.0 || dvy <= 0.0 {
        return Ok(0.0);
    }
    let r2 = (dcov / (dvx * dvy).sqrt()).max(0.0);
    Ok(r2.sqrt().min(1.0))
}
