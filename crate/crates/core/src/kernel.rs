//! Gaussian-kernel smoothing: CDF estimates, local polynomial regression,
//! local constant variance functions and bandwidth selection.

use log::warn;
use rayon::prelude::*;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{norm_cdf, quantile_sorted, sd, sorted};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandwidthMethod {
    Srt,
    Lscv,
}

impl FromStr for BandwidthMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "srt" | "SRT" => Ok(Self::Srt),
            "lscv" | "LSCV" | "UCV" | "ucv" => Ok(Self::Lscv),
            _ => Err(Error::Config(format!("unknown bandwidth selector '{s}' (srt, lscv)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bandwidth {
    pub value: f64,
    pub method: BandwidthMethod,
}

/// `0.9 min(SD, IQR / 1.34) n^(-1/5)` with the n - 1 SD and type-7 IQR.
pub fn silverman_bandwidth(y: &[f64]) -> Result<Bandwidth> {
    if y.len() < 2 {
        return Err(Error::BadParameter("bandwidth needs at least two values".into()));
    }
    let s = sd(y);
    if !(s > 0.0) {
        return Err(Error::ZeroVariance("bandwidth data".into()));
    }
    let ys = sorted(y);
    let iqr = quantile_sorted(&ys, 0.75) - quantile_sorted(&ys, 0.25);
    let spread = if iqr > 0.0 { s.min(iqr / 1.34) } else { s };
    Ok(Bandwidth { value: 0.9 * spread * (y.len() as f64).powf(-0.2), method: BandwidthMethod::Srt })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LscvTarget {
    /// Leave-one-out prediction error of a local polynomial of the given order.
    Regression { order: usize },
    /// Leave-one-out error of the local constant fit to squared residuals.
    Variance,
    /// Gaussian-kernel density LSCV on the `y` values alone.
    Cdf,
}

pub const LSCV_GRID: usize = 50;

/// Candidate bandwidths: 50 log-spaced values over [h/20, 20h].
pub fn lscv_grid(h_srt: f64) -> Vec<f64> {
    let (lo, hi) = ((h_srt / 20.0).ln(), (h_srt * 20.0).ln());
    (0..LSCV_GRID).map(|i| (lo + (hi - lo) * i as f64 / (LSCV_GRID - 1) as f64).exp()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LscvResult {
    pub bandwidth: Bandwidth,
    pub candidates: Vec<f64>,
    pub scores: Vec<f64>,
    pub warning: Option<String>,
}

/// Cross-validated bandwidth. `x` is ignored for the CDF target.
pub fn lscv_bandwidth(x: &[f64], y: &[f64], target: LscvTarget) -> Result<LscvResult> {
    if y.len() < 10 {
        return Err(Error::BadParameter(format!("cross-validation needs n >= 10, got {}", y.len())));
    }
    let base = match target {
        LscvTarget::Cdf => y,
        _ => {
            if x.len() != y.len() {
                return Err(Error::DimMismatch("x and y lengths differ".into()));
            }
            x
        }
    };
    let h_srt = silverman_bandwidth(base)?.value;
    let candidates = lscv_grid(h_srt);
    let scores: Vec<f64> = candidates
        .par_iter()
        .map(|&h| match target {
            LscvTarget::Regression { order } => loo_regression_score(x, y, h, order),
            LscvTarget::Variance => loo_regression_score(x, y, h, 0),
            LscvTarget::Cdf => density_lscv_score(y, h),
        })
        .collect();
    let finite: Vec<(usize, f64)> =
        scores.iter().copied().enumerate().filter(|(_, s)| s.is_finite()).collect();
    let (best, best_score) = finite
        .iter()
        .copied()
        .fold((usize::MAX, f64::INFINITY), |acc, (i, s)| if s < acc.1 { (i, s) } else { acc });
    let worst = finite.iter().map(|(_, s)| *s).fold(f64::NEG_INFINITY, f64::max);
    let scale = worst.abs().max(y.iter().map(|v| v * v).sum::<f64>());
    let degenerate = best == usize::MAX || worst - best_score <= 1e-12 * scale;
    if degenerate {
        let msg = "cross-validation scores tie over the whole grid; using Silverman's bandwidth".to_string();
        warn!("{msg}");
        return Ok(LscvResult {
            bandwidth: Bandwidth { value: h_srt, method: BandwidthMethod::Srt },
            candidates,
            scores,
            warning: Some(msg),
        });
    }
    Ok(LscvResult {
        bandwidth: Bandwidth { value: candidates[best], method: BandwidthMethod::Lscv },
        candidates,
        scores,
        warning: None,
    })
}

/// Sum of squared leave-one-out errors; infinite when some point has no
/// neighbour weight.
fn loo_regression_score(x: &[f64], y: &[f64], h: f64, order: usize) -> f64 {
    let mut total = 0.0;
    for i in 0..x.len() {
        match weighted_local(x, y, h, x[i], order, Some(i)) {
            Some(fit) => total += (y[i] - fit).powi(2),
            None => return f64::INFINITY,
        }
    }
    total
}

/// Local fit at `x0` skipping observation `skip`. Weights are rescaled by
/// the largest one and the slope is computed about the weighted mean, so
/// the result stays exact for affine data far from `x0`. `None` when every
/// raw weight underflows.
fn weighted_local(x: &[f64], y: &[f64], h: f64, x0: f64, order: usize, skip: Option<usize>) -> Option<f64> {
    let keep = |j: usize| Some(j) != skip;
    let umin2 = x
        .iter()
        .enumerate()
        .filter(|(j, _)| keep(*j))
        .map(|(_, &xi)| ((xi - x0) / h).powi(2))
        .fold(f64::INFINITY, f64::min);
    if !((-0.5 * umin2).exp() > 1e-300) {
        return None;
    }
    let w = |xi: f64| (-0.5 * (((xi - x0) / h).powi(2) - umin2)).exp();
    let (mut sw, mut swx, mut swy) = (0.0, 0.0, 0.0);
    for j in (0..x.len()).filter(|&j| keep(j)) {
        let wj = w(x[j]);
        sw += wj;
        swx += wj * x[j];
        swy += wj * y[j];
    }
    let (xbar, ybar) = (swx / sw, swy / sw);
    if order == 0 {
        return Some(ybar);
    }
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for j in (0..x.len()).filter(|&j| keep(j)) {
        let wj = w(x[j]);
        let dx = x[j] - xbar;
        sxx += wj * dx * dx;
        sxy += wj * dx * (y[j] - ybar);
    }
    if sxx > 0.0 && sxx.is_finite() {
        Some(ybar + sxy / sxx * (x0 - xbar))
    } else {
        Some(ybar)
    }
}

/// Gaussian density LSCV: int f_h^2 - 2/n sum_i f_{h,-i}(y_i).
fn density_lscv_score(y: &[f64], h: f64) -> f64 {
    let n = y.len() as f64;
    let c1 = 1.0 / (2.0 * h * std::f64::consts::PI.sqrt());
    let c2 = 1.0 / (h * (2.0 * std::f64::consts::PI).sqrt());
    let mut int_sq = 0.0;
    let mut loo = 0.0;
    for i in 0..y.len() {
        for j in (i + 1)..y.len() {
            let u = (y[i] - y[j]) / h;
            int_sq += 2.0 * c1 * (-0.25 * u * u).exp();
            loo += 2.0 * c2 * (-0.5 * u * u).exp();
        }
    }
    int_sq += n * c1;
    int_sq / (n * n) - 2.0 * loo / (n * (n - 1.0))
}

/// `(1/n) sum Phi((y0 - y_i) / h)`.
pub fn kernel_cdf(y0: f64, data: &[f64], h: f64) -> f64 {
    data.iter().map(|&yi| norm_cdf((y0 - yi) / h)).sum::<f64>() / data.len() as f64
}

/// Local constant (`order` 0) or local linear (`order` 1) estimate at `x0`.
pub fn local_poly_regression(x: &[f64], y: &[f64], h: f64, x0: f64, order: usize) -> Result<f64> {
    if order > 1 {
        return Err(Error::BadParameter(format!("local polynomial order {order} not in {{0, 1}}")));
    }
    weighted_local(x, y, h, x0, order, None).ok_or(Error::NoLocalData(x0))
}

pub const VARIANCE_FLOOR: f64 = 1e-10;

/// Nadaraya-Watson fit to squared residuals, floored at 1e-10. The flag
/// reports whether the floor was hit.
pub fn local_constant_variance(x: &[f64], r2: &[f64], h: f64, x0: f64) -> Result<(f64, bool)> {
    let v = local_poly_regression(x, r2, h, x0, 0)?;
    if v < VARIANCE_FLOOR {
        warn!("variance estimate {v} at x0 = {x0} floored at {VARIANCE_FLOOR}");
        Ok((VARIANCE_FLOOR, true))
    } else {
        Ok((v, false))
    }
}

/// `Y = mu(X) + sigma(X) eps` fitted sequentially: mean first, then the
/// variance on squared residuals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocationScaleFit {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub order: usize,
    pub h_mean: f64,
    pub h_var: f64,
    pub r2: Vec<f64>,
    /// Standardised residuals `(y - mu(x)) / sigma(x)`.
    pub residuals: Vec<f64>,
    pub range: (f64, f64),
    pub warnings: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bandwidths {
    pub mean: f64,
    pub var: f64,
}

impl LocationScaleFit {
    /// Selects both bandwidths by cross-validation, then fits.
    pub fn fit_lscv(x: &[f64], y: &[f64], order: usize) -> Result<Self> {
        let mut warnings = Vec::new();
        let hm = lscv_bandwidth(x, y, LscvTarget::Regression { order })?;
        warnings.extend(hm.warning.clone());
        let means = fitted_means(x, y, hm.bandwidth.value, order)?;
        let r2: Vec<f64> = y.iter().zip(&means).map(|(yi, m)| (yi - m).powi(2)).collect();
        let hv = lscv_bandwidth(x, &r2, LscvTarget::Variance)?;
        warnings.extend(hv.warning.clone());
        let mut fit =
            Self::fit_with(x, y, order, Bandwidths { mean: hm.bandwidth.value, var: hv.bandwidth.value })?;
        fit.warnings.splice(0..0, warnings);
        Ok(fit)
    }

    pub fn fit_with(x: &[f64], y: &[f64], order: usize, bw: Bandwidths) -> Result<Self> {
        if x.len() != y.len() || x.is_empty() {
            return Err(Error::DimMismatch("x and y lengths differ".into()));
        }
        let means = fitted_means(x, y, bw.mean, order)?;
        let r2: Vec<f64> = y.iter().zip(&means).map(|(yi, m)| (yi - m).powi(2)).collect();
        let mut warnings = Vec::new();
        let mut floored = false;
        let residuals = x
            .iter()
            .zip(y.iter().zip(&means))
            .map(|(&xi, (yi, m))| {
                let (v, hit) = local_constant_variance(x, &r2, bw.var, xi)?;
                floored |= hit;
                Ok((yi - m) / v.sqrt())
            })
            .collect::<Result<Vec<f64>>>()?;
        if floored {
            warnings.push(format!("variance function floored at {VARIANCE_FLOOR}"));
        }
        let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            x: x.to_vec(),
            y: y.to_vec(),
            order,
            h_mean: bw.mean,
            h_var: bw.var,
            r2,
            residuals,
            range: (lo, hi),
            warnings,
        })
    }

    pub fn bandwidths(&self) -> Bandwidths {
        Bandwidths { mean: self.h_mean, var: self.h_var }
    }

    pub fn mean(&self, x0: f64) -> Result<f64> {
        local_poly_regression(&self.x, &self.y, self.h_mean, x0, self.order)
    }

    pub fn variance(&self, x0: f64) -> Result<f64> {
        Ok(local_constant_variance(&self.x, &self.r2, self.h_var, x0)?.0)
    }

    /// Errors with `NoLocalData` when `x0` is outside the training range.
    pub fn check_range(&self, x0: f64) -> Result<()> {
        if x0 < self.range.0 || x0 > self.range.1 {
            return Err(Error::NoLocalData(x0));
        }
        Ok(())
    }
}

fn fitted_means(x: &[f64], y: &[f64], h: f64, order: usize) -> Result<Vec<f64>> {
    x.iter().map(|&xi| local_poly_regression(x, y, h, xi, order)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{normal, RngStream};
    use crate::stats::{mean, norm_pdf};
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn silverman_oracle() {
        // arbitrary-precision evaluation of 0.9 * (2 / 1.34) * 5^(-1/5)
        let h = silverman_bandwidth(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert!((h.value - 0.973_584_622_850_635_8).abs() < 1e-12);
        let h10 = silverman_bandwidth(&[10.0, 20.0, 30.0, 40.0, 50.0]).unwrap();
        assert!((h10.value - 10.0 * h.value).abs() < 1e-12);
        assert!(matches!(silverman_bandwidth(&[2.0; 5]), Err(Error::ZeroVariance(_))));
    }

    #[test]
    fn kernel_cdf_values() {
        assert_eq!(kernel_cdf(0.0, &[0.0], 1.0), 0.5);
        assert!((kernel_cdf(0.0, &[-1.0, 1.0], 1.0) - 0.5).abs() < 1e-15);
        assert!((kernel_cdf(1.96, &[0.0], 1.0) - 0.975_002_104_851_780).abs() < 1e-12);
    }

    #[test]
    fn nadaraya_watson_hand_value() {
        let v = local_poly_regression(&[0.0, 1.0], &[0.0, 1.0], 1.0, 0.0, 0).unwrap();
        let expect = norm_pdf(1.0) / (norm_pdf(0.0) + norm_pdf(1.0));
        assert!((v - expect).abs() < 1e-15);
        assert!((v - 0.377_540_668_798_145_4).abs() < 1e-12);
        assert!(matches!(
            local_poly_regression(&[0.0, 1.0], &[0.0, 1.0], 0.01, 1e3, 0),
            Err(Error::NoLocalData(_))
        ));
    }

    #[test]
    fn variance_floor_and_constant() {
        let x: Vec<f64> = (0..20).map(f64::from).collect();
        let (v, hit) = local_constant_variance(&x, &[0.0; 20], 2.0, 5.0).unwrap();
        assert!(hit && v == VARIANCE_FLOOR);
        let (v, hit) = local_constant_variance(&x, &[2.5; 20], 2.0, 5.0).unwrap();
        assert!(!hit && (v - 2.5).abs() < 1e-12);
    }

    #[test]
    fn variance_tracks_linear_heteroscedasticity() {
        let mut rng = RngStream::new(11).rng();
        let x: Vec<f64> = (0..1000).map(|_| rng.random::<f64>() * 2.0).collect();
        // E[r^2 | x] = x with r^2 = x * chi2_1
        let r2: Vec<f64> = x.iter().map(|&v| v * normal(&mut rng, 0.0, 1.0).powi(2)).collect();
        let (v, _) = local_constant_variance(&x, &r2, 0.1, 1.0).unwrap();
        assert!((v - 1.0).abs() < 0.1, "{v}");
    }

    fn exhaustive_argmin(x: &[f64], y: &[f64], order: usize) -> f64 {
        let h0 = silverman_bandwidth(x).unwrap().value;
        let grid = lscv_grid(h0);
        let mut best = (f64::INFINITY, 0.0);
        for &h in &grid {
            let mut err = 0.0;
            for i in 0..x.len() {
                let xs: Vec<f64> = x.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| *v).collect();
                let ys: Vec<f64> = y.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| *v).collect();
                err += (y[i] - local_poly_regression(&xs, &ys, h, x[i], order).unwrap()).powi(2);
            }
            if err < best.0 {
                best = (err, h);
            }
        }
        best.1
    }

    #[test]
    fn lscv_matches_exhaustive_oracle() {
        let mut rng = RngStream::new(12).rng();
        let n = 150;
        let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let noise: Vec<f64> = (0..n).map(|_| normal(&mut rng, 0.0, 1.0)).collect();
        let grid = lscv_grid(silverman_bandwidth(&x).unwrap().value);

        let r = lscv_bandwidth(&x, &noise, LscvTarget::Regression { order: 0 }).unwrap();
        assert_eq!(r.bandwidth.value, exhaustive_argmin(&x, &noise, 0));
        assert!(r.bandwidth.value >= grid[40], "pure noise should oversmooth");

        let y: Vec<f64> = x.iter().zip(&noise).map(|(v, e)| (6.0 * v).sin() + 0.1 * e).collect();
        let r = lscv_bandwidth(&x, &y, LscvTarget::Regression { order: 1 }).unwrap();
        assert_eq!(r.bandwidth.value, exhaustive_argmin(&x, &y, 1));
        assert!(r.bandwidth.value < grid[25]);
        assert_eq!(r.bandwidth.method, BandwidthMethod::Lscv);
    }

    #[test]
    fn lscv_small_sample_and_degenerate() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert!(lscv_bandwidth(&x, &x, LscvTarget::Cdf).is_err());
        let x: Vec<f64> = (0..20).map(f64::from).collect();
        let r = lscv_bandwidth(&x, &[3.0; 20], LscvTarget::Regression { order: 0 }).unwrap();
        assert!(r.warning.is_some());
        assert_eq!(r.bandwidth.method, BandwidthMethod::Srt);
    }

    #[test]
    fn location_scale_residuals_standardised() {
        let mut rng = RngStream::new(13).rng();
        let n = 1000;
        let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let y: Vec<f64> =
            x.iter().map(|&v| (3.0 * v).sin() + (0.5 + v) * normal(&mut rng, 0.0, 1.0)).collect();
        let fit = LocationScaleFit::fit_lscv(&x, &y, 1).unwrap();
        let m = mean(&fit.residuals);
        let s = sd(&fit.residuals);
        assert!(m.abs() < 0.05, "{m}");
        assert!((s - 1.0).abs() < 0.1, "{s}");
        assert!(fit.variance(0.9).unwrap() > fit.variance(0.1).unwrap());
    }

    #[test]
    fn kernel_cdf_near_empirical_for_tiny_bandwidth() {
        let mut rng = RngStream::new(14).rng();
        let data: Vec<f64> = (0..500).map(|_| normal(&mut rng, 0.0, 1.0)).collect();
        let h = silverman_bandwidth(&data).unwrap().value / 100.0;
        let s = sorted(&data);
        let mut worst: f64 = 0.0;
        for i in 0..=1000 {
            let y0 = -3.5 + 7.0 * i as f64 / 1000.0;
            let emp = s.partition_point(|v| *v <= y0) as f64 / 500.0;
            worst = worst.max((kernel_cdf(y0, &data, h) - emp).abs());
        }
        assert!(worst <= 0.05, "{worst}");
    }

    proptest! {
        #[test]
        fn local_linear_reproduces_lines(
            xs in prop::collection::vec(-3.0f64..3.0, 5..30),
            a in -5.0f64..5.0, b in -5.0f64..5.0,
            h in 0.2f64..5.0, x0 in -3.0f64..3.0,
        ) {
            let ys: Vec<f64> = xs.iter().map(|x| a + b * x).collect();
            if let Ok(v) = local_poly_regression(&xs, &ys, h, x0, 1) {
                let spread = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                    - xs.iter().copied().fold(f64::INFINITY, f64::min);
                if spread > 0.1 {
                    prop_assert!((v - (a + b * x0)).abs() < 1e-8 * (1.0 + (a + b * x0).abs()));
                }
            }
            let c: Vec<f64> = vec![a; xs.len()];
            if let Ok(v) = local_poly_regression(&xs, &c, h, x0, 0) {
                prop_assert!((v - a).abs() < 1e-12 * (1.0 + a.abs()));
            }
        }

        #[test]
        fn kernel_cdf_monotone(data in prop::collection::vec(-10.0f64..10.0, 1..40), h in 0.01f64..3.0) {
            let mut prev = 0.0;
            for i in 0..200 {
                let y0 = -15.0 + 30.0 * i as f64 / 199.0;
                let v = kernel_cdf(y0, &data, h);
                prop_assert!(v >= prev - 1e-15 && (0.0..=1.0).contains(&v));
                prev = v;
            }
        }
    }
}
