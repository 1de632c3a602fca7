//! Small numerical helpers: standard normal functions, sample moments,
//! type-7 quantiles and ensemble summaries.

use serde::{Deserialize, Serialize};
use libm::erfc;
use statrs::function::erf::erfc_inv;

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    if x == f64::INFINITY {
        return 1.0;
    }
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    0.5 * erfc(-x / SQRT_2)
}

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

/// Log-density of N(mean, var) at `y`.
pub fn norm_logpdf(y: f64, mean: f64, var: f64) -> f64 {
    let z = y - mean;
    -0.5 * z * z / var - 0.5 * var.ln() - LN_SQRT_2PI
}

/// Standard normal quantile; +-inf at the endpoints.
pub fn norm_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let x = -SQRT_2 * erfc_inv(2.0 * p);
    // one Newton step tightens the tails
    let err = norm_cdf(x) - p;
    let d = norm_pdf(x);
    if d > 0.0 && x.is_finite() {
        x - err / d
    } else {
        x
    }
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample variance with the n - 1 denominator.
pub fn variance(v: &[f64]) -> f64 {
    let n = v.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64
}

pub fn sd(v: &[f64]) -> f64 {
    variance(v).sqrt()
}

/// Type-7 (linear interpolation) quantile of already sorted data.
pub fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    let n = sorted.len();
    assert!(n > 0, "quantile of empty data");
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * prob.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Type-7 quantile of unsorted data.
pub fn quantile(values: &[f64], prob: f64) -> f64 {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    quantile_sorted(&s, prob)
}

pub fn sorted(values: &[f64]) -> Vec<f64> {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// Numerically stable `log(sum(exp(v)))`.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Point estimate with a 95% interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub est: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn point(v: f64) -> Self {
        Self { est: v, lo: v, hi: v }
    }

    /// Ensemble mean with 2.5/97.5 percentiles.
    pub fn from_ensemble(values: &[f64]) -> Self {
        let s = sorted(values);
        let est = mean(values);
        Self::ordered(est, quantile_sorted(&s, 0.025), quantile_sorted(&s, 0.975))
    }

    /// Plug-in estimate with bootstrap percentile bounds.
    pub fn from_bootstrap(est: f64, replicates: &[f64]) -> Self {
        if replicates.is_empty() {
            return Self::point(est);
        }
        let s = sorted(replicates);
        Self::ordered(est, quantile_sorted(&s, 0.025), quantile_sorted(&s, 0.975))
    }

    /// Widens the bounds so that `lo <= est <= hi` always holds.
    fn ordered(est: f64, lo: f64, hi: f64) -> Self {
        Self { est, lo: lo.min(est), hi: hi.max(est) }
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.3} ({:.3}, {:.3})", self.est, self.lo, self.hi)
    }
}

/// Pointwise band over a grid.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub est: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Band {
    /// Column-wise ensemble mean and percentiles of `rows` (one row per member).
    pub fn from_ensemble(rows: &[Vec<f64>]) -> Self {
        let m = rows.first().map_or(0, Vec::len);
        let mut band = Band::default();
        let mut col = Vec::with_capacity(rows.len());
        for k in 0..m {
            col.clear();
            col.extend(rows.iter().map(|r| r[k]));
            let iv = Interval::from_ensemble(&col);
            band.est.push(iv.est);
            band.lo.push(iv.lo);
            band.hi.push(iv.hi);
        }
        band
    }

    pub fn from_bootstrap(est: Vec<f64>, rows: &[Vec<f64>]) -> Self {
        let mut band = Band { est: Vec::new(), lo: Vec::new(), hi: Vec::new() };
        let mut col = Vec::with_capacity(rows.len());
        for (k, &e) in est.iter().enumerate() {
            col.clear();
            col.extend(rows.iter().map(|r| r[k]));
            let iv = Interval::from_bootstrap(e, &col);
            band.est.push(iv.est);
            band.lo.push(iv.lo);
            band.hi.push(iv.hi);
        }
        band
    }
}
