//! Power-law fits in log-log space for the rank-frequency table and the
//! vocabulary growth curve (`V = α L^β`, hence `TTR ∝ L^δ`).
//!
//! All fits are ordinary least squares on logged variables.

use serde::{Deserialize, Serialize};

use crate::corpusstats::{FrequencyTable, GrowthCurve};
use crate::error::{Error, Result};
use crate::estimators::piecewise_constants;
use crate::numeric::{fit_line, logspace, LineFit};

/// Smallest table `fit_zipf` accepts.
pub const MIN_ZIPF_RANKS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZipfFitConfig {
    /// Number of log-spaced breakpoint candidates.
    pub grid_points: usize,
    /// Lowest candidate rank.
    pub grid_lo: f64,
    /// Highest candidate rank as a fraction of V.
    pub grid_hi_fraction: f64,
    /// Relative SSR reduction the two-line fit must achieve over one line.
    pub min_improvement: f64,
    /// Crossing-point refinement passes after the grid search.
    pub max_refinements: usize,
    /// Average `ln f` within log-rank bins before fitting; `None` fits every rank.
    pub log_bins_per_decade: Option<usize>,
}

impl Default for ZipfFitConfig {
    fn default() -> Self {
        Self {
            grid_points: 50,
            grid_lo: 100.0,
            grid_hi_fraction: 0.1,
            min_improvement: 0.05,
            max_refinements: 10,
            log_bins_per_decade: None,
        }
    }
}

/// Two-regime fit `ln f = log_k − a ln r`, head below `r_c`, tail from `r_c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZipfFit {
    pub a1: f64,
    pub a2: f64,
    pub stderr_a1: f64,
    pub stderr_a2: f64,
    pub log_k1: f64,
    pub log_k2: f64,
    /// Critical rank: the rounded crossing of the two lines.
    pub r_c: u64,
    /// Unrounded crossing rank.
    pub crossing: f64,
    pub c1: f64,
    pub c2: f64,
    /// Sum of squared residuals in `ln f`.
    pub residual: f64,
    /// Set when a second regime does not pay for itself; then `a2 = a1`, `r_c = V`.
    pub single_regime: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeapsFit {
    pub alpha: f64,
    pub beta: f64,
    pub stderr_beta: f64,
    /// `0 < beta < 1`.
    pub sublinear: bool,
}

impl HeapsFit {
    pub fn predict(&self, tokens: f64) -> f64 {
        self.alpha * tokens.powf(self.beta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TtrFit {
    pub delta: f64,
    pub prefactor: f64,
    pub stderr_delta: f64,
}

/// Combined fit report as written by the command-line tools.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LawReport {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub zipf: Option<ZipfFit>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub heaps: Option<HeapsFit>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ttr: Option<TtrFit>,
}

struct Points {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Smallest rank represented by each point; non-decreasing.
    rank: Vec<u64>,
}

fn rank_points(table: &FrequencyTable, bins_per_decade: Option<usize>) -> Result<Points> {
    let mut p = Points {
        x: Vec::with_capacity(table.len()),
        y: Vec::with_capacity(table.len()),
        rank: Vec::with_capacity(table.len()),
    };
    match bins_per_decade {
        None => {
            for e in table.entries() {
                p.x.push((e.rank as f64).ln());
                p.y.push((e.count as f64).ln());
                p.rank.push(e.rank);
            }
        }
        Some(0) => return Err(Error::domain("log_bins_per_decade must be >= 1")),
        Some(k) => {
            let width = std::f64::consts::LN_10 / k as f64;
            let mut bin = u64::MAX;
            let (mut sx, mut sy, mut m) = (0.0, 0.0, 0.0);
            for e in table.entries() {
                let lr = (e.rank as f64).ln();
                let b = (lr / width + 1e-9).floor() as u64;
                if b != bin {
                    if m > 0.0 {
                        p.x.push(sx / m);
                        p.y.push(sy / m);
                    }
                    p.rank.push(e.rank);
                    (sx, sy, m, bin) = (0.0, 0.0, 0.0, b);
                }
                sx += lr;
                sy += (e.count as f64).ln();
                m += 1.0;
            }
            p.x.push(sx / m);
            p.y.push(sy / m);
        }
    }
    Ok(p)
}

/// Prefix sums of centred moments; any contiguous OLS fit in O(1).
struct Prefix {
    s: Vec<[f64; 5]>,
}

impl Prefix {
    fn new(x: &[f64], y: &[f64]) -> Self {
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let mut s = Vec::with_capacity(x.len() + 1);
        let mut acc = [0.0; 5];
        s.push(acc);
        for (&xi, &yi) in x.iter().zip(y) {
            let (dx, dy) = (xi - mx, yi - my);
            acc[0] += dx;
            acc[1] += dy;
            acc[2] += dx * dx;
            acc[3] += dx * dy;
            acc[4] += dy * dy;
            s.push(acc);
        }
        Self { s }
    }

    /// SSR of the OLS line through points `i..j`.
    fn ssr(&self, i: usize, j: usize) -> f64 {
        let m = (j - i) as f64;
        let d: Vec<f64> = (0..5).map(|k| self.s[j][k] - self.s[i][k]).collect();
        let sxx = d[2] - d[0] * d[0] / m;
        let sxy = d[3] - d[0] * d[1] / m;
        let syy = d[4] - d[1] * d[1] / m;
        if sxx <= 0.0 {
            return syy.max(0.0);
        }
        (syy - sxy * sxy / sxx).max(0.0)
    }
}

const MIN_SEGMENT: usize = 3;

struct Split {
    idx: usize,
    head: LineFit,
    tail: LineFit,
    ssr: f64,
}

fn split_at(p: &Points, idx: usize) -> Result<Split> {
    let head = fit_line(&p.x[..idx], &p.y[..idx])?;
    let tail = fit_line(&p.x[idx..], &p.y[idx..])?;
    Ok(Split {
        idx,
        head,
        tail,
        ssr: head.ssr + tail.ssr,
    })
}

/// `ln r` where `ln k1 − a1 ln r = ln k2 − a2 ln r`.
fn crossing_log_rank(head: &LineFit, tail: &LineFit) -> f64 {
    (tail.intercept - head.intercept) / (head.slope - tail.slope)
}

/// Fits the two-regime Zipf law to a rank-frequency table.
pub fn fit_zipf(table: &FrequencyTable, config: &ZipfFitConfig) -> Result<ZipfFit> {
    let v = table.len();
    if v < MIN_ZIPF_RANKS {
        return Err(Error::domain(format!(
            "Zipf fit needs at least {MIN_ZIPF_RANKS} ranks, got {v}"
        )));
    }
    if config.grid_points == 0 || !(config.min_improvement >= 0.0) {
        return Err(Error::domain("invalid Zipf fit configuration"));
    }
    let pts = rank_points(table, config.log_bins_per_decade)?;
    let n = pts.x.len();
    let single = fit_line(&pts.x, &pts.y)?;
    let tokens = table.total_tokens();
    let vocab = v as u64;

    let index_of = |rank: u64| pts.rank.partition_point(|&r| r < rank);
    let admissible = |idx: usize| idx >= MIN_SEGMENT && n - idx >= MIN_SEGMENT;

    let hi = (config.grid_hi_fraction * v as f64).max(1.0);
    let lo = config.grid_lo.min(hi);
    let prefix = Prefix::new(&pts.x, &pts.y);
    let mut best: Option<(usize, f64)> = None;
    let mut last_idx = usize::MAX;
    for rank in logspace(lo, hi, config.grid_points) {
        let idx = index_of(rank.round() as u64);
        if idx == last_idx || !admissible(idx) {
            continue;
        }
        last_idx = idx;
        let ssr = prefix.ssr(0, idx) + prefix.ssr(idx, n);
        // strict: ties keep the smaller breakpoint
        if best.is_none_or(|(_, b)| ssr < b) {
            best = Some((idx, ssr));
        }
    }

    let mut split = match best {
        Some((idx, _)) => Some(split_at(&pts, idx)?),
        None => None,
    };
    if let Some(s) = split.as_mut() {
        for _ in 0..config.max_refinements {
            let lx = crossing_log_rank(&s.head, &s.tail);
            if !lx.is_finite() || lx > (vocab as f64).ln() || lx < 2f64.ln() {
                break;
            }
            let idx = index_of(lx.exp().round() as u64);
            if idx == s.idx || !admissible(idx) {
                break;
            }
            let cand = split_at(&pts, idx)?;
            if cand.ssr > s.ssr {
                break;
            }
            *s = cand;
        }
    }

    let two_regime = split.filter(|s| {
        let lx = crossing_log_rank(&s.head, &s.tail);
        let floor = 1e-12 * n as f64;
        -s.tail.slope > -s.head.slope
            && lx.is_finite()
            && lx >= 2f64.ln()
            && lx <= (vocab as f64).ln()
            && single.ssr - s.ssr > config.min_improvement * single.ssr + floor
    });

    let fit = match two_regime {
        Some(s) => {
            let lx = crossing_log_rank(&s.head, &s.tail);
            let r_c = (lx.exp().round() as u64).clamp(2, vocab);
            let (a1, a2) = (-s.head.slope, -s.tail.slope);
            let pc = piecewise_constants(a1, a2, r_c, vocab, tokens)?;
            ZipfFit {
                a1,
                a2,
                stderr_a1: s.head.stderr_slope,
                stderr_a2: s.tail.stderr_slope,
                log_k1: s.head.intercept,
                log_k2: s.tail.intercept,
                r_c,
                crossing: lx.exp(),
                c1: pc.c1,
                c2: pc.c2,
                residual: s.ssr,
                single_regime: false,
            }
        }
        None => {
            let a = -single.slope;
            let pc = piecewise_constants(a.max(f64::MIN_POSITIVE), a.max(f64::MIN_POSITIVE), vocab, vocab, tokens)?;
            ZipfFit {
                a1: a,
                a2: a,
                stderr_a1: single.stderr_slope,
                stderr_a2: single.stderr_slope,
                log_k1: single.intercept,
                log_k2: single.intercept,
                r_c: vocab,
                crossing: vocab as f64,
                c1: pc.c1,
                c2: pc.c2,
                residual: single.ssr,
                single_regime: true,
            }
        }
    };
    Ok(fit)
}

const MIN_POWERLAW_POINTS: usize = 10;

/// Heaps law on a growth curve. Needs at least 10 points spanning two
/// decades of L. A slope outside `(0, 1)` is reported, not rejected.
pub fn fit_heaps(curve: &GrowthCurve) -> Result<HeapsFit> {
    curve.validate()?;
    let pts = &curve.points;
    if pts.len() < MIN_POWERLAW_POINTS {
        return Err(Error::domain(format!(
            "Heaps fit needs at least {MIN_POWERLAW_POINTS} points, got {}",
            pts.len()
        )));
    }
    let (l0, l1) = (pts[0].0 as f64, pts[pts.len() - 1].0 as f64);
    if l1 / l0 < 100.0 * (1.0 - 1e-12) {
        return Err(Error::domain(format!(
            "Heaps fit needs two decades of L, got {l0}..{l1}"
        )));
    }
    let x: Vec<f64> = pts.iter().map(|&(l, _)| (l as f64).ln()).collect();
    let y: Vec<f64> = pts.iter().map(|&(_, v)| (v as f64).ln()).collect();
    let line = fit_line(&x, &y)?;
    Ok(HeapsFit {
        alpha: line.intercept.exp(),
        beta: line.slope,
        stderr_beta: line.stderr_slope,
        sublinear: line.slope > 0.0 && line.slope < 1.0,
    })
}

/// `(L, V/L)` pairs of a growth curve.
pub fn ttr_series(curve: &GrowthCurve) -> Vec<(u64, f64)> {
    curve.points.iter().map(|&(l, v)| (l, v as f64 / l as f64)).collect()
}

/// Power law `TTR = prefactor · L^δ`.
pub fn fit_ttr_powerlaw(series: &[(u64, f64)]) -> Result<TtrFit> {
    if series.len() < MIN_POWERLAW_POINTS {
        return Err(Error::domain(format!(
            "TTR fit needs at least {MIN_POWERLAW_POINTS} points, got {}",
            series.len()
        )));
    }
    if series.windows(2).any(|w| w[0].0 >= w[1].0) || series[0].0 == 0 {
        return Err(Error::domain("L must be positive and strictly increasing"));
    }
    if series.iter().any(|&(_, t)| !(t > 0.0) || !t.is_finite()) {
        return Err(Error::domain("TTR values must be positive"));
    }
    let x: Vec<f64> = series.iter().map(|&(l, _)| (l as f64).ln()).collect();
    let y: Vec<f64> = series.iter().map(|&(_, t)| t.ln()).collect();
    let line = fit_line(&x, &y)?;
    Ok(TtrFit {
        delta: line.slope,
        prefactor: line.intercept.exp(),
        stderr_delta: line.stderr_slope,
    })
}
