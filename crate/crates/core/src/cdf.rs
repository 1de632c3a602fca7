//! Distribution-function models shared by the estimators, with monotone
//! numerical inversion.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{norm_cdf, norm_pdf, norm_quantile, sorted};

/// A CDF with its generalised inverse. `quantile` returns -inf at q <= 0
/// and +inf at q >= 1 for every model so that ROC curves end at (0, 0)
/// and (1, 1).
pub trait CdfModel: Send + Sync {
    fn cdf(&self, y: f64) -> f64;
    fn quantile(&self, q: f64) -> f64;

    /// Quantiles at several probabilities; implementations may reuse work
    /// between neighbouring values.
    fn quantiles(&self, qs: &[f64]) -> Vec<f64> {
        qs.iter().map(|&q| self.quantile(q)).collect()
    }
}

/// Right-continuous empirical CDF, optionally weighted, with the inverse
/// `inf{y : F(y) >= q}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCdf {
    values: Vec<f64>,
    /// Cumulative weights aligned with `values`; `None` for equal weights.
    cum: Option<Vec<f64>>,
}

impl EmpiricalCdf {
    pub fn new(data: &[f64]) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::BadData("empirical CDF of no data".into()));
        }
        Ok(Self { values: sorted(data), cum: None })
    }

    /// Weights need not be normalised.
    pub fn weighted(data: &[f64], weights: &[f64]) -> Result<Self> {
        if data.is_empty() || data.len() != weights.len() {
            return Err(Error::DimMismatch("data and weights lengths differ".into()));
        }
        let mut idx: Vec<usize> = (0..data.len()).collect();
        idx.sort_by(|&a, &b| data[a].total_cmp(&data[b]));
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::BadParameter("weights sum to zero".into()));
        }
        let mut acc = 0.0;
        let cum = idx
            .iter()
            .map(|&i| {
                acc += weights[i] / total;
                acc
            })
            .collect();
        Ok(Self { values: idx.iter().map(|&i| data[i]).collect(), cum: Some(cum) })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl CdfModel for EmpiricalCdf {
    fn cdf(&self, y: f64) -> f64 {
        let k = self.values.partition_point(|v| *v <= y);
        match &self.cum {
            None => k as f64 / self.values.len() as f64,
            Some(c) => {
                if k == 0 {
                    0.0
                } else {
                    c[k - 1].min(1.0)
                }
            }
        }
    }

    fn quantile(&self, q: f64) -> f64 {
        if q <= 0.0 {
            return f64::NEG_INFINITY;
        }
        if q >= 1.0 {
            return f64::INFINITY;
        }
        let n = self.values.len();
        let idx = match &self.cum {
            None => ((q * n as f64 - 1e-9).ceil() as usize).clamp(1, n) - 1,
            Some(c) => c.partition_point(|&v| v < q - 1e-12).min(n - 1),
        };
        self.values[idx]
    }
}

/// Gaussian-kernel smoothed CDF `(1/n) sum Phi((y - y_i) / h)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelCdf {
    data: Vec<f64>,
    h: f64,
}

/// Beyond this many bandwidths a kernel contributes exactly 0 or 1.
const KERNEL_CUTOFF: f64 = 8.5;

impl KernelCdf {
    pub fn new(data: &[f64], h: f64) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::BadData("kernel CDF of no data".into()));
        }
        if !(h > 0.0) {
            return Err(Error::BadParameter(format!("bandwidth {h} must be positive")));
        }
        Ok(Self { data: sorted(data), h })
    }

    pub fn bandwidth(&self) -> f64 {
        self.h
    }

    fn window(&self, y: f64) -> (usize, usize) {
        let lo = self.data.partition_point(|v| *v < y - KERNEL_CUTOFF * self.h);
        let hi = self.data.partition_point(|v| *v <= y + KERNEL_CUTOFF * self.h);
        (lo, hi)
    }

    pub fn pdf(&self, y: f64) -> f64 {
        let (lo, hi) = self.window(y);
        self.data[lo..hi].iter().map(|&v| norm_pdf((y - v) / self.h)).sum::<f64>()
            / (self.h * self.data.len() as f64)
    }

    fn bracket(&self) -> (f64, f64) {
        (self.data[0] - 40.0 * self.h, self.data[self.data.len() - 1] + 40.0 * self.h)
    }
}

impl CdfModel for KernelCdf {
    fn cdf(&self, y: f64) -> f64 {
        let (lo, hi) = self.window(y);
        // everything left of the window is fully below y
        let inner: f64 = self.data[lo..hi].iter().map(|&v| norm_cdf((y - v) / self.h)).sum();
        (lo as f64 + inner) / self.data.len() as f64
    }

    fn quantile(&self, q: f64) -> f64 {
        self.quantiles(&[q])[0]
    }

    fn quantiles(&self, qs: &[f64]) -> Vec<f64> {
        let (lo, hi) = self.bracket();
        let n = self.data.len();
        qs.iter()
            .map(|&q| {
                if q <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                if q >= 1.0 {
                    return f64::INFINITY;
                }
                let start = self.data[((q * n as f64) as usize).min(n - 1)];
                newton_invert(|y| self.cdf(y), |y| self.pdf(y), q, lo, hi, start)
            })
            .collect()
    }
}

/// Finite mixture of normals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalMixture {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl NormalMixture {
    pub fn new(weights: Vec<f64>, means: Vec<f64>, sds: Vec<f64>) -> Result<Self> {
        if weights.len() != means.len() || weights.len() != sds.len() || weights.is_empty() {
            return Err(Error::DimMismatch("mixture component arrays differ in length".into()));
        }
        if sds.iter().any(|s| !(*s > 0.0)) || weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::BadParameter("mixture sds must be positive and weights nonnegative".into()));
        }
        Ok(Self { weights, means, sds })
    }

    pub fn normal(mean: f64, sd: f64) -> Self {
        Self { weights: vec![1.0], means: vec![mean], sds: vec![sd] }
    }

    pub fn pdf(&self, y: f64) -> f64 {
        self.components().map(|(w, m, s)| w * norm_pdf((y - m) / s) / s).sum()
    }

    pub fn log_pdf(&self, y: f64) -> f64 {
        let terms: Vec<f64> = self
            .components()
            .filter(|(w, _, _)| *w > 0.0)
            .map(|(w, m, s)| w.ln() + crate::stats::norm_logpdf(y, m, s * s))
            .collect();
        crate::stats::log_sum_exp(&terms)
    }

    pub fn mean(&self) -> f64 {
        self.components().map(|(w, m, _)| w * m).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.components().map(|(w, mu, s)| w * (s * s + mu * mu)).sum::<f64>() - m * m
    }

    fn components(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.weights.iter().zip(&self.means).zip(&self.sds).map(|((w, m), s)| (*w, *m, *s))
    }

    fn bracket(&self) -> (f64, f64) {
        let lo = self.components().map(|(_, m, s)| m - 40.0 * s).fold(f64::INFINITY, f64::min);
        let hi = self.components().map(|(_, m, s)| m + 40.0 * s).fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }
}

impl CdfModel for NormalMixture {
    fn cdf(&self, y: f64) -> f64 {
        self.components().map(|(w, m, s)| w * norm_cdf((y - m) / s)).sum::<f64>().clamp(0.0, 1.0)
    }

    fn quantile(&self, q: f64) -> f64 {
        if q <= 0.0 {
            return f64::NEG_INFINITY;
        }
        if q >= 1.0 {
            return f64::INFINITY;
        }
        if self.weights.len() == 1 {
            return self.means[0] + self.sds[0] * norm_quantile(q);
        }
        let (lo, hi) = self.bracket();
        let start = self.mean() + self.variance().sqrt() * norm_quantile(q);
        newton_invert(|y| self.cdf(y), |y| self.pdf(y), q, lo, hi, start)
    }

    fn quantiles(&self, qs: &[f64]) -> Vec<f64> {
        let (lo, hi) = self.bracket();
        let (m, s) = (self.mean(), self.variance().sqrt());
        let mut prev: Option<(f64, f64)> = None;
        qs.iter()
            .map(|&q| {
                if q <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                if q >= 1.0 {
                    return f64::INFINITY;
                }
                if self.weights.len() == 1 {
                    return self.means[0] + self.sds[0] * norm_quantile(q);
                }
                let start = match prev {
                    Some((_, y)) => y,
                    None => m + s * norm_quantile(q),
                };
                let y = newton_invert(|y| self.cdf(y), |y| self.pdf(y), q, lo, hi, start);
                prev = Some((q, y));
                y
            })
            .collect()
    }
}

/// Standardised error distribution of a location-scale model.
#[derive(Clone, Debug, PartialEq)]
pub enum ErrorCdf {
    Normal,
    Empirical(Arc<EmpiricalCdf>),
}

impl ErrorCdf {
    pub fn cdf(&self, e: f64) -> f64 {
        match self {
            ErrorCdf::Normal => norm_cdf(e),
            ErrorCdf::Empirical(f) => f.cdf(e),
        }
    }

    pub fn quantile(&self, q: f64) -> f64 {
        match self {
            ErrorCdf::Normal => norm_quantile(q),
            ErrorCdf::Empirical(f) => f.quantile(q),
        }
    }
}

/// `F(y) = F_eps((y - mu) / sigma)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocationScaleCdf {
    pub mu: f64,
    pub sigma: f64,
    pub error: ErrorCdf,
}

impl CdfModel for LocationScaleCdf {
    fn cdf(&self, y: f64) -> f64 {
        self.error.cdf((y - self.mu) / self.sigma)
    }

    fn quantile(&self, q: f64) -> f64 {
        if q <= 0.0 {
            return f64::NEG_INFINITY;
        }
        if q >= 1.0 {
            return f64::INFINITY;
        }
        self.mu + self.sigma * self.error.quantile(q)
    }
}

/// Bisection for `F(c) = q` on `bracket`, stopping when `|F(c) - q| <= 1e-8`
/// or the bracket is narrower than 1e-10.
pub fn invert_cdf<F: Fn(f64) -> f64>(f: F, q: f64, bracket: (f64, f64)) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    let (flo, fhi) = (f(lo), f(hi));
    if !(flo <= q && fhi >= q) {
        return Err(Error::BracketFail { lo, hi, q });
    }
    loop {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if (fm - q).abs() <= 1e-8 || hi - lo <= 1e-10 {
            return Ok(mid);
        }
        if fm < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Newton's method safeguarded by bisection for a continuous increasing CDF.
/// Returns the smallest-width bracket midpoint when Newton stalls.
pub fn newton_invert<F, D>(f: F, pdf: D, q: f64, lo: f64, hi: f64, start: f64) -> f64
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let (mut lo, mut hi) = (lo, hi);
    let mut y = if start > lo && start < hi { start } else { 0.5 * (lo + hi) };
    for _ in 0..200 {
        let fy = f(y) - q;
        if fy.abs() <= 1e-12 {
            return y;
        }
        if fy < 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        if hi - lo <= 1e-12 * (1.0 + y.abs()) {
            return 0.5 * (lo + hi);
        }
        let d = pdf(y);
        let step = if d > 0.0 { y - fy / d } else { f64::NAN };
        y = if step > lo && step < hi { step } else { 0.5 * (lo + hi) };
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empirical_steps_and_inverse() {
        let f = EmpiricalCdf::new(&[3.0, 1.0, 2.0, 2.0]).unwrap();
        assert_eq!(f.cdf(0.5), 0.0);
        assert_eq!(f.cdf(2.0), 0.75);
        assert_eq!(f.cdf(3.0), 1.0);
        assert_eq!(f.quantile(0.25), 1.0);
        assert_eq!(f.quantile(0.26), 2.0);
        assert_eq!(f.quantile(0.75), 2.0);
        assert_eq!(f.quantile(0.76), 3.0);
        assert_eq!(f.quantile(0.0), f64::NEG_INFINITY);
        assert_eq!(f.quantile(1.0), f64::INFINITY);
    }

    #[test]
    fn weighted_empirical_matches_unweighted_for_equal_weights() {
        let data = [0.3, -1.0, 2.5, 0.3, 4.0];
        let a = EmpiricalCdf::new(&data).unwrap();
        let b = EmpiricalCdf::weighted(&data, &[2.0; 5]).unwrap();
        for y in [-2.0, -1.0, 0.0, 0.3, 1.0, 2.5, 5.0] {
            assert!((a.cdf(y) - b.cdf(y)).abs() < 1e-12);
        }
        for q in [0.1, 0.2, 0.21, 0.5, 0.6, 0.61, 0.99] {
            assert_eq!(a.quantile(q), b.quantile(q), "{q}");
        }
    }

    #[test]
    fn mixture_values() {
        let m = NormalMixture::new(vec![0.3, 0.7], vec![0.0, 1.0], vec![1.0, 2.0]).unwrap();
        // 0.3 Phi(0.5) + 0.7 Phi(-0.25)
        assert!((m.cdf(0.5) - 0.488_344_310_404_157_3).abs() < 1e-12);
        let sym = NormalMixture::new(vec![0.5, 0.5], vec![-1.0, 1.0], vec![1.0, 1.0]).unwrap();
        assert!((sym.cdf(0.0) - 0.5).abs() < 1e-15);
        assert!(sym.quantile(0.5).abs() < 1e-9);
        assert_eq!(NormalMixture::normal(0.0, 1.0).cdf(0.0), 0.5);
    }

    #[test]
    fn invert_cdf_normal_and_bracket_fail() {
        let c = invert_cdf(norm_cdf, 0.975, (-10.0, 10.0)).unwrap();
        assert!((c - 1.959_963_984_540_054).abs() < 1e-6);
        assert!(matches!(invert_cdf(norm_cdf, 0.975, (2.0, 10.0)), Err(Error::BracketFail { .. })));
    }

    #[test]
    fn kernel_quantiles_round_trip() {
        let data: Vec<f64> = (0..200).map(|i| ((i * 37) % 101) as f64 / 10.0).collect();
        let k = KernelCdf::new(&data, 0.4).unwrap();
        let qs: Vec<f64> = (1..100).map(|i| i as f64 / 100.0).collect();
        for (q, y) in qs.iter().zip(k.quantiles(&qs)) {
            assert!((k.cdf(y) - q).abs() <= 1e-8);
        }
    }

    proptest! {
        #[test]
        fn mixture_inverse_round_trip(
            w in prop::collection::vec(0.05f64..1.0, 1..5),
            seed in 0u64..1000,
        ) {
            let l = w.len();
            let means: Vec<f64> = (0..l).map(|i| ((seed as f64 + i as f64 * 7.3).sin()) * 4.0).collect();
            let sds: Vec<f64> = (0..l).map(|i| 0.2 + ((seed + i as u64) % 5) as f64 * 0.4).collect();
            let total: f64 = w.iter().sum();
            let m = NormalMixture::new(w.iter().map(|x| x / total).collect(), means, sds).unwrap();
            let qs: Vec<f64> = (1..100).map(|i| i as f64 / 100.0).collect();
            let ys = m.quantiles(&qs);
            for (q, y) in qs.iter().zip(&ys) {
                prop_assert!((m.cdf(*y) - q).abs() <= 1e-8);
            }
            for win in ys.windows(2) {
                prop_assert!(win[1] >= win[0]);
            }
        }
    }
}
