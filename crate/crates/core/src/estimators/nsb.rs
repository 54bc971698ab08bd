//! Nemenman–Shafee–Bialek entropy estimator.
//!
//! The counts `n_i` over a support of `K` bins are modelled as multinomial
//! with a symmetric Dirichlet(β) prior on the probabilities, and β itself
//! carries the prior `dξ/dβ` where `ξ(β) = ψ(Kβ + 1) − ψ(β + 1)` is the prior
//! mean entropy, so that the induced prior on H is nearly flat. The
//! posterior over β is
//!
//! ```text
//! P(β | n) ∝ ξ'(β) · Γ(Kβ) / Γ(N + Kβ) · Π_i Γ(n_i + β) / Γ(β)
//! ```
//!
//! and the estimate is `∫ E[H | n, β] P(β | n) dβ`. The integral is done in
//! `t = ln β` with composite 8-point Gauss–Legendre panels over the region
//! where the integrand is within `e^-40` of its peak, doubling the panel
//! count until mean and standard deviation change by less than
//! [`NSB_REL_TOL`] relative.

use std::collections::BTreeMap;

use super::{EntropyEstimate, Estimator};
use crate::error::{Error, Result};
use crate::numeric::{digamma, ln_rising, trigamma, CompensatedSum};

/// Relative convergence tolerance of the β quadrature.
pub const NSB_REL_TOL: f64 = 1e-6;

const T_MIN: f64 = -60.0;
const T_MAX: f64 = 60.0;
/// Integrand cut-off below the peak, in log units.
const LOG_CUTOFF: f64 = 40.0;
const MIN_PANELS: usize = 16;
const MAX_PANELS: usize = 8192;

// 8-point Gauss–Legendre nodes and weights on [-1, 1], digits as tabulated.
#[allow(clippy::excessive_precision)]
const GL_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
#[allow(clippy::excessive_precision)]
const GL_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Counts grouped by value: `(count, multiplicity)`, zero-count bins included.
struct Fingerprint {
    groups: Vec<(f64, f64)>,
    total: f64,
    support: f64,
}

impl Fingerprint {
    fn new(counts: &[u64], support: u64) -> Self {
        let mut map: BTreeMap<u64, u64> = BTreeMap::new();
        for &c in counts {
            *map.entry(c).or_default() += 1;
        }
        let unseen = support - counts.len() as u64;
        if unseen > 0 {
            map.insert(0, unseen);
        }
        Self {
            groups: map.into_iter().map(|(c, m)| (c as f64, m as f64)).collect(),
            total: counts.iter().sum::<u64>() as f64,
            support: support as f64,
        }
    }

    /// `ln ξ'(β) + ln β + ln P(n | β)`, the log integrand in `t = ln β`.
    fn log_weight(&self, t: f64) -> f64 {
        let beta = t.exp();
        let k = self.support;
        let mut ll = -ln_rising(k * beta, self.total);
        for &(n, m) in &self.groups {
            if n > 0.0 {
                ll += m * ln_rising(beta, n);
            }
        }
        prior_slope(beta, k).ln() + t + ll
    }

    /// Posterior mean and variance of H under Dirichlet(n + β).
    fn conditional_moments(&self, beta: f64) -> (f64, f64) {
        let a_tot = self.total + self.support * beta;
        let psi_a1 = digamma(a_tot + 1.0);
        let psi_a2 = digamma(a_tot + 2.0);
        let tri_a2 = trigamma(a_tot + 2.0);

        let mut mean = CompensatedSum::new();
        let mut s_au = CompensatedSum::new();
        let mut s_a2u2 = CompensatedSum::new();
        let mut s_a2 = CompensatedSum::new();
        let mut diag = CompensatedSum::new();
        for &(n, m) in &self.groups {
            let a = n + beta;
            let psi1 = digamma(a + 1.0);
            let u = psi1 - psi_a2;
            mean.add(m * a * psi1);
            s_au.add(m * a * u);
            s_a2u2.add(m * a * a * u * u);
            s_a2.add(m * a * a);
            // ψ(a+2) = ψ(a+1) + 1/(a+1)
            let v = u + 1.0 / (a + 1.0);
            let tri = trigamma(a + 2.0);
            diag.add(m * a * (a + 1.0) * (v * v + tri - tri_a2));
        }
        let e_h = psi_a1 - mean.value() / a_tot;
        let cross = s_au.value() * s_au.value() - s_a2u2.value() - (a_tot * a_tot - s_a2.value()) * tri_a2;
        let e_h2 = (cross + diag.value()) / (a_tot * (a_tot + 1.0));
        (e_h, (e_h2 - e_h * e_h).max(0.0))
    }
}

/// `ξ'(β) = K ψ₁(Kβ + 1) − ψ₁(β + 1)`.
fn prior_slope(beta: f64, k: f64) -> f64 {
    if beta > 1e3 {
        // the two trigamma terms agree to O(1/β); use the expansion of
        // their difference instead
        let b2 = beta * beta;
        let k2 = k * k;
        (1.0 - 1.0 / k) / (2.0 * b2) - (1.0 - 1.0 / k2) / (6.0 * b2 * beta)
            + (1.0 - 1.0 / (k2 * k2)) / (30.0 * b2 * b2 * beta)
    } else {
        k * trigamma(k * beta + 1.0) - trigamma(beta + 1.0)
    }
}

fn golden_max<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if hi - lo < 1e-12 {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}

struct Node {
    weight: f64,
    mean: f64,
    var: f64,
}

fn integrate(fp: &Fingerprint, lo: f64, hi: f64, peak: f64, panels: usize) -> (f64, f64) {
    let width = (hi - lo) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * 8);
    for p in 0..panels {
        let mid = lo + (p as f64 + 0.5) * width;
        let half = 0.5 * width;
        for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
            for t in [mid - half * x, mid + half * x] {
                let weight = w * half * (fp.log_weight(t) - peak).exp();
                if weight > 0.0 {
                    let (mean, var) = fp.conditional_moments(t.exp());
                    nodes.push(Node { weight, mean, var });
                }
            }
        }
    }
    let z: f64 = nodes.iter().map(|n| n.weight).collect::<CompensatedSum>().value();
    let mean = nodes
        .iter()
        .map(|n| n.weight * n.mean)
        .collect::<CompensatedSum>()
        .value()
        / z;
    // law of total variance, centred to avoid cancellation
    let var = nodes
        .iter()
        .map(|n| n.weight * (n.var + (n.mean - mean).powi(2)))
        .collect::<CompensatedSum>()
        .value()
        / z;
    (mean, var.max(0.0).sqrt())
}

/// NSB posterior mean entropy with posterior standard deviation.
///
/// `support_size` is the number of bins K, which must cover every observed
/// type.
pub fn nsb_entropy(counts: &[u64], support_size: u64) -> Result<EntropyEstimate> {
    super::check_counts(counts)?;
    let observed = counts.len() as u64;
    if support_size < observed {
        return Err(Error::domain(format!(
            "support size {support_size} below the {observed} observed types"
        )));
    }
    if support_size == 1 {
        return Ok(EntropyEstimate {
            value: 0.0,
            estimator: Estimator::Nsb,
            posterior_std: Some(0.0),
        });
    }
    let fp = Fingerprint::new(counts, support_size);
    let logw = |t: f64| fp.log_weight(t);

    // coarse scan, then golden-section refinement of the mode
    let mut best = (f64::NEG_INFINITY, 0.0);
    let mut t = T_MIN;
    while t <= T_MAX {
        let v = logw(t);
        if v > best.0 {
            best = (v, t);
        }
        t += 0.5;
    }
    if !best.0.is_finite() {
        return Err(Error::Numerical(format!(
            "NSB posterior not finite anywhere on [{T_MIN}, {T_MAX}] (N={}, K={support_size})",
            fp.total
        )));
    }
    let mode = golden_max(&logw, (best.1 - 0.5).max(T_MIN), (best.1 + 0.5).min(T_MAX));
    let peak = logw(mode);

    // curvature sets the step used to bracket the bulk of the posterior
    let h = 1e-3;
    let d2 = (logw(mode + h) - 2.0 * peak + logw(mode - h)) / (h * h);
    let scale = if d2 < 0.0 {
        (1.0 / (-d2).sqrt()).clamp(1e-6, 1.0)
    } else {
        1.0
    };
    let bracket = |dir: f64| {
        let mut step = scale;
        let mut edge = mode;
        loop {
            let next = (edge + dir * step).clamp(T_MIN, T_MAX);
            edge = next;
            if peak - logw(edge) > LOG_CUTOFF || edge == T_MIN || edge == T_MAX {
                return edge;
            }
            step *= 1.5;
        }
    };
    let lo = bracket(-1.0);
    let hi = bracket(1.0);
    for edge in [lo, hi] {
        if peak - logw(edge) < 20.0 {
            return Err(Error::Numerical(format!(
                "NSB posterior still heavy at t = {edge} (log drop {:.2}); N={}, K={support_size}",
                peak - logw(edge),
                fp.total
            )));
        }
    }

    let mut panels = MIN_PANELS;
    let mut prev = integrate(&fp, lo, hi, peak, panels);
    loop {
        panels *= 2;
        let cur = integrate(&fp, lo, hi, peak, panels);
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(1e-300);
        let mean_ok = rel(cur.0, prev.0) < NSB_REL_TOL || (cur.0 - prev.0).abs() < 1e-12;
        let std_ok = rel(cur.1, prev.1) < NSB_REL_TOL || (cur.1 - prev.1).abs() < 1e-12;
        if mean_ok && std_ok {
            if !cur.0.is_finite() {
                return Err(Error::Numerical("NSB integral is not finite".into()));
            }
            return Ok(EntropyEstimate {
                value: cur.0.max(0.0),
                estimator: Estimator::Nsb,
                posterior_std: Some(cur.1),
            });
        }
        if panels >= MAX_PANELS {
            return Err(Error::Numerical(format!(
                "NSB quadrature did not converge with {panels} panels on [{lo:.3}, {hi:.3}]: \
                 mean {} -> {}, std {} -> {}",
                prev.0, cur.0, prev.1, cur.1
            )));
        }
        prev = cur;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::plugin_entropy;
    use crate::numeric::ln_gamma;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_distr::{Dirichlet, Distribution};

    // Values from arbitrary-precision quadrature of the posterior directly in β.
    const FROZEN: &[(&[u64], u64, f64, f64)] = &[
        (&[1, 1, 1], 3, 0.977_685_328_089_470, 0.130_907_568_247_782),
        (&[3, 1, 1], 5, 1.219_877_669_695_508, 0.270_218_911_133_674),
        (&[5, 2, 1, 1, 1, 1], 20, 2.064_891_338_387_171, 0.354_052_575_255_451),
        (&[1000; 10], 10, 2.302_484_723_640_767, 0.000_099_904_394_249),
    ];

    #[test]
    fn matches_frozen_high_precision_values() {
        for &(counts, k, mean, std) in FROZEN {
            let est = nsb_entropy(counts, k).unwrap();
            assert_abs_diff_eq!(est.value, mean, epsilon = 1e-6);
            assert_abs_diff_eq!(est.posterior_std.unwrap(), std, epsilon = 1e-6);
        }
    }

    /// Independent oracle: brute-force trapezoid in β over β = u / (1 − u),
    /// using the mean formula written out bin by bin.
    fn brute_force_nsb(counts: &[u64], k: usize) -> f64 {
        let n: f64 = counts.iter().sum::<u64>() as f64;
        let kf = k as f64;
        let mut bins: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        bins.resize(k, 0.0);
        let steps = 400_000;
        let (mut z, mut m) = (0.0, 0.0);
        for i in 1..steps {
            let u = i as f64 / steps as f64;
            let beta = u / (1.0 - u);
            let jac = 1.0 / (1.0 - u).powi(2);
            let mut ll = ln_gamma(kf * beta) - ln_gamma(n + kf * beta);
            for &c in &bins {
                ll += ln_gamma(c + beta) - ln_gamma(beta);
            }
            let prior = kf * trigamma(kf * beta + 1.0) - trigamma(beta + 1.0);
            let w = prior * ll.exp() * jac;
            let a = n + kf * beta;
            let eh = digamma(a + 1.0)
                - bins
                    .iter()
                    .map(|&c| (c + beta) / a * digamma(c + beta + 1.0))
                    .sum::<f64>();
            z += w;
            m += w * eh;
        }
        m / z
    }

    #[test]
    fn agrees_with_brute_force_beta_integration() {
        let got = nsb_entropy(&[1, 1, 1], 3).unwrap().value;
        assert_abs_diff_eq!(got, brute_force_nsb(&[1, 1, 1], 3), epsilon = 1e-4);
        let got = nsb_entropy(&[4, 2, 1], 6).unwrap().value;
        assert_abs_diff_eq!(got, brute_force_nsb(&[4, 2, 1], 6), epsilon = 1e-4);
    }

    #[test]
    fn conditional_moments_match_dirichlet_sampling() {
        let counts = [3u64, 1, 1];
        let fp = Fingerprint::new(&counts, 5);
        let beta = 0.7;
        let (mean, var) = fp.conditional_moments(beta);
        let alpha = [3.7, 1.7, 1.7, 0.7, 0.7];
        let dir = Dirichlet::new(alpha).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let draws = 200_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..draws {
            let p: [f64; 5] = dir.sample(&mut rng);
            let h: f64 = p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum();
            s1 += h;
            s2 += h * h;
        }
        let mc_mean = s1 / draws as f64;
        let mc_var = s2 / draws as f64 - mc_mean * mc_mean;
        assert_abs_diff_eq!(mean, mc_mean, epsilon = 3e-3);
        assert_abs_diff_eq!(var, mc_var, epsilon = 2e-3);
    }

    #[test]
    fn degenerate_alphabet() {
        let est = nsb_entropy(&[42], 1).unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(est.posterior_std, Some(0.0));
    }

    #[test]
    fn rejects_small_support() {
        assert!(matches!(nsb_entropy(&[1, 2, 3], 2), Err(Error::Domain(_))));
        assert!(nsb_entropy(&[], 2).is_err());
    }

    #[test]
    fn fully_sampled_uniform_approaches_ln_k() {
        let est = nsb_entropy(&[1000; 10], 10).unwrap();
        assert!((est.value - 10f64.ln()).abs() < 0.01);
        let pi = plugin_entropy(&[1000; 10]).unwrap().value;
        assert!((est.value - pi).abs() < 0.01);
    }

    #[test]
    fn well_sampled_nonuniform_close_to_plugin() {
        let counts = [900u64, 400, 250, 130, 100, 100];
        let nsb = nsb_entropy(&counts, 6).unwrap().value;
        let pi = plugin_entropy(&counts).unwrap().value;
        assert!((nsb - pi).abs() < 0.01, "nsb {nsb} pi {pi}");
    }

    #[test]
    fn large_sparse_sample_is_finite() {
        let mut counts = vec![1u64; 5000];
        counts.extend([2000, 800, 300, 120, 50, 20, 7, 3, 2, 2]);
        let est = nsb_entropy(&counts, 5010).unwrap();
        assert!(est.value.is_finite() && est.value > 0.0);
        assert!(est.value <= 5010f64.ln());
    }
}
