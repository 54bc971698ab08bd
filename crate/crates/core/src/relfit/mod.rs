//! Asymptotic entropy laws and their fits.
//!
//! With Zipf and Heaps laws holding, entropy grows with text length as
//! `H(L) = p1 (β/2 ln L + ln ln L) + p2` and, substituting `TTR = L^{β−1}`,
//! falls with the type-token ratio as
//! `H(TTR) = p3 (β/(2(1−β)) ln TTR⁻¹ + ln ln TTR⁻¹) + p4`. Both are linear in
//! their parameters, so the fits are closed-form least squares on the
//! bracketed regressor.

mod metrics;

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::corpusstats::parse_col;
use crate::error::{Error, Result};
use crate::estimators::Estimator;
use crate::numeric::fit_line;
use crate::sampler::{FitRange, SampleSeries};

pub use metrics::{distance_correlation, mid_ranks, r_squared, spearman, spearman_permutation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RelationKind {
    #[serde(rename = "H_of_L")]
    HOfL,
    #[serde(rename = "H_of_TTR")]
    HOfTtr,
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("beta = {beta} outside (0, 1)")))
    }
}

/// `β/2 ln L + ln ln L`, defined for `L > e`.
pub fn regressor_l(tokens: f64, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let ln_l = tokens.ln();
    if !(ln_l > 1.0) || !ln_l.is_finite() {
        return Err(Error::domain(format!("L = {tokens} must exceed e")));
    }
    Ok(0.5 * beta * ln_l + ln_l.ln())
}

/// `β/(2(1−β)) ln TTR⁻¹ + ln ln TTR⁻¹`, defined for `0 < TTR < 1/e`.
pub fn regressor_ttr(ttr: f64, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let u = -ttr.ln();
    if !(ttr > 0.0) || !(u > 1.0) || !u.is_finite() {
        return Err(Error::domain(format!("TTR = {ttr} outside (0, 1/e)")));
    }
    Ok(beta / (2.0 * (1.0 - beta)) * u + u.ln())
}

pub fn model_h_of_l(tokens: f64, beta: f64, p1: f64, p2: f64) -> Result<f64> {
    Ok(p1 * regressor_l(tokens, beta)? + p2)
}

pub fn model_h_of_ttr(ttr: f64, beta: f64, p3: f64, p4: f64) -> Result<f64> {
    Ok(p3 * regressor_ttr(ttr, beta)? + p4)
}

/// `(p3, p4)` giving the same curve as `(p1, p2)` when `TTR = L^{β−1}`.
pub fn map_l_params_to_ttr(beta: f64, p1: f64, p2: f64) -> Result<(f64, f64)> {
    check_beta(beta)?;
    Ok((p1, p2 - p1 * (1.0 - beta).ln()))
}

/// Fit report; `p1, p2` are set for `H_of_L`, `p3, p4` for `H_of_TTR`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationFit {
    pub kind: RelationKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p3: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p4: Option<f64>,
    pub stderr_scale: f64,
    pub stderr_offset: f64,
    pub beta_used: f64,
    pub fit_range: (u64, u64),
    pub estimator: Estimator,
    pub n_points: usize,
    pub rho2: f64,
    pub rho_s: f64,
    pub rho_d: f64,
    pub p_value: f64,
}

impl RelationFit {
    /// `(scale, offset)`: `(p1, p2)` or `(p3, p4)`.
    pub fn params(&self) -> (f64, f64) {
        match self.kind {
            RelationKind::HOfL => (self.p1.unwrap_or(f64::NAN), self.p2.unwrap_or(f64::NAN)),
            RelationKind::HOfTtr => (self.p3.unwrap_or(f64::NAN), self.p4.unwrap_or(f64::NAN)),
        }
    }

    /// Model value at `x`, which is L or TTR according to `kind`.
    pub fn predict(&self, x: f64) -> Result<f64> {
        let (a, b) = self.params();
        match self.kind {
            RelationKind::HOfL => model_h_of_l(x, self.beta_used, a, b),
            RelationKind::HOfTtr => model_h_of_ttr(x, self.beta_used, a, b),
        }
    }
}

/// Mean entropy per length for the chosen estimator.
fn mean_entropy(series: &SampleSeries, estimator: Estimator) -> Result<Vec<f64>> {
    series
        .points
        .iter()
        .map(|p| match estimator {
            Estimator::Plugin => Ok(p.h_plugin.mean),
            Estimator::Nsb => p
                .h_nsb
                .map(|s| s.mean)
                .ok_or_else(|| Error::domain("series carries no NSB entropies")),
        })
        .collect()
}

/// Least-squares fit of one relation over the lengths in `range`.
///
/// Goodness metrics: `rho2` between observed and fitted H; `rho_s`,
/// `p_value` and `rho_d` between the abscissa (L or TTR) and observed H.
pub fn fit_relation(
    series: &SampleSeries,
    kind: RelationKind,
    beta: f64,
    range: FitRange,
    estimator: Estimator,
) -> Result<RelationFit> {
    check_beta(beta)?;
    let h_all = mean_entropy(series, estimator)?;
    let mut abscissa = Vec::new();
    let mut regressor = Vec::new();
    let mut h = Vec::new();
    for (p, &hv) in series.points.iter().zip(&h_all) {
        if !range.contains(p.length) {
            continue;
        }
        let (x, g) = match kind {
            RelationKind::HOfL => (p.length as f64, regressor_l(p.length as f64, beta)?),
            RelationKind::HOfTtr => (p.ttr.mean, regressor_ttr(p.ttr.mean, beta)?),
        };
        abscissa.push(x);
        regressor.push(g);
        h.push(hv);
    }
    if h.len() < 3 {
        return Err(Error::domain(format!(
            "need at least 3 lengths in [{}, {}], got {}",
            range.l_low,
            range.l_high,
            h.len()
        )));
    }
    let line = fit_line(&regressor, &h)?;
    let predicted: Vec<f64> = regressor.iter().map(|&g| line.predict(g)).collect();
    let rho2 = r_squared(&h, &predicted)?;
    let (rho_s, p_value) = spearman(&abscissa, &h)?;
    let rho_d = distance_correlation(&abscissa, &h)?;
    let (scale, offset) = (Some(line.slope), Some(line.intercept));
    let (p1, p2, p3, p4) = match kind {
        RelationKind::HOfL => (scale, offset, None, None),
        RelationKind::HOfTtr => (None, None, scale, offset),
    };
    Ok(RelationFit {
        kind,
        p1,
        p2,
        p3,
        p4,
        stderr_scale: line.stderr_slope,
        stderr_offset: line.stderr_intercept,
        beta_used: beta,
        fit_range: (range.l_low, range.l_high),
        estimator,
        n_points: h.len(),
        rho2,
        rho_s,
        rho_d,
        p_value,
    })
}

/// `(mean TTR, mean H − H_max)` per length, where `H_max` is the mean
/// plug-in entropy at the largest length.
pub fn collapse_h_max(series: &SampleSeries) -> Vec<(f64, f64)> {
    collapse_h_max_with(series, Estimator::Plugin).unwrap_or_default()
}

pub fn collapse_h_max_with(series: &SampleSeries, estimator: Estimator) -> Result<Vec<(f64, f64)>> {
    let h = mean_entropy(series, estimator)?;
    let Some(&h_max) = h.last() else {
        return Ok(Vec::new());
    };
    Ok(series
        .points
        .iter()
        .zip(&h)
        .map(|(p, &hv)| (p.ttr.mean, hv - h_max))
        .collect())
}

pub fn write_collapse_tsv<W: Write>(points: &[(f64, f64)], mut w: W) -> Result<()> {
    writeln!(w, "ttr\th_minus_hmax")?;
    for (t, d) in points {
        writeln!(w, "{t}\t{d}")?;
    }
    Ok(())
}

pub fn read_collapse_tsv<R: BufRead>(r: R) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        if line.is_empty() || (lineno == 0 && line.starts_with("ttr")) {
            continue;
        }
        let mut cols = line.split('\t');
        out.push((parse_col(cols.next(), lineno)?, parse_col(cols.next(), lineno)?));
    }
    Ok(out)
}
