//! Seedable random streams and the distribution samplers used by the
//! Bayesian estimators.
//!
//! Every replicate, chain or draw gets its own [`RngStream`], addressed by a
//! `(label, index)` pair under the root seed. ChaCha's 64-bit stream selector
//! keeps the sequences independent, so results do not depend on how work is
//! scheduled across threads.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Exp1, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{norm_cdf, norm_quantile};

pub type StreamRng = ChaCha8Rng;

/// Stream labels used by the estimators.
pub mod labels {
    pub const BOOTSTRAP: u64 = 1;
    pub const BAYES_BOOT: u64 = 2;
    pub const CHAIN_HEALTHY: u64 = 3;
    pub const CHAIN_DISEASED: u64 = 4;
    pub const PREDICTIVE: u64 = 5;
    pub const PLACEMENT_WEIGHTS: u64 = 6;
    pub const SIMULATE: u64 = 7;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream_id: 0 }
    }

    /// Child stream `(label, index)`; nesting is allowed.
    pub fn substream(&self, label: u64, index: u64) -> Self {
        let id = splitmix64(self.stream_id ^ splitmix64(splitmix64(label) ^ index));
        Self { seed: self.seed, stream_id: id }
    }

    pub fn rng(&self) -> StreamRng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(self.stream_id);
        r
    }
}

/// Gamma with shape `a` and rate `b` (mean a/b).
pub fn gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64, rate: f64) -> Result<f64> {
    if !(shape > 0.0 && rate > 0.0) || !shape.is_finite() || !rate.is_finite() {
        return Err(Error::BadParameter(format!("gamma(shape={shape}, rate={rate})")));
    }
    let g = Gamma::new(shape, 1.0 / rate).map_err(|e| Error::BadParameter(e.to_string()))?;
    Ok(g.sample(rng))
}

pub fn beta<R: Rng + ?Sized>(rng: &mut R, a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::BadParameter(format!("beta({a}, {b})")));
    }
    let d = Beta::new(a, b).map_err(|e| Error::BadParameter(e.to_string()))?;
    Ok(d.sample(rng))
}

pub fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

pub fn normal<R: Rng + ?Sized>(rng: &mut R, mean: f64, sd: f64) -> f64 {
    mean + sd * std_normal(rng)
}

/// Normal restricted to `[lo, hi]`, by inversion.
pub fn truncated_normal<R: Rng + ?Sized>(
    rng: &mut R,
    mean: f64,
    sd: f64,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    if !(sd > 0.0) || !(hi > lo) {
        return Err(Error::BadParameter(format!("truncated_normal(sd={sd}, [{lo}, {hi}])")));
    }
    let a = norm_cdf((lo - mean) / sd);
    let b = norm_cdf((hi - mean) / sd);
    if !(b > a) {
        return Err(Error::BadParameter("truncation interval has no mass".into()));
    }
    let u: f64 = rng.random();
    let x = mean + sd * norm_quantile(a + u * (b - a));
    Ok(x.clamp(lo, hi))
}

/// Index drawn with probability proportional to `weights`.
pub fn categorical<R: Rng + ?Sized>(rng: &mut R, weights: &[f64]) -> Result<usize> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
        return Err(Error::BadParameter("categorical weights".into()));
    }
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last = i;
            if u < acc {
                return Ok(i);
            }
        }
    }
    Ok(last)
}

/// Categorical draw from unnormalised log-weights (log-sum-exp stabilised).
/// `scratch` must have the same length as `log_weights`.
pub fn categorical_log<R: Rng + ?Sized>(
    rng: &mut R,
    log_weights: &[f64],
    scratch: &mut [f64],
) -> Result<usize> {
    let m = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return Err(Error::NumericalCollapse("all allocation weights vanish".into()));
    }
    for (s, &l) in scratch.iter_mut().zip(log_weights) {
        *s = (l - m).exp();
    }
    categorical(rng, scratch)
}

pub fn dirichlet<R: Rng + ?Sized>(rng: &mut R, alpha: &[f64]) -> Result<Vec<f64>> {
    if alpha.is_empty() || alpha.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
        return Err(Error::BadAlpha);
    }
    let mut g = alpha
        .iter()
        .map(|&a| gamma(rng, a, 1.0))
        .collect::<Result<Vec<f64>>>()?;
    let total: f64 = g.iter().sum();
    if !(total > 0.0) {
        return Err(Error::NumericalCollapse("Dirichlet gamma draws underflowed".into()));
    }
    g.iter_mut().for_each(|x| *x /= total);
    Ok(g)
}

/// Dirichlet(1, ..., 1) of dimension `n` via normalised exponentials.
pub fn dirichlet_flat<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut g: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = g.iter().sum();
    g.iter_mut().for_each(|x| *x /= total);
    g
}

/// Indices of a with-replacement resample of size `n`.
pub fn resample_indices<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// With-replacement resample of `y`.
pub fn resample<R: Rng + ?Sized>(rng: &mut R, y: &[f64]) -> Vec<f64> {
    resample_indices(rng, y.len()).into_iter().map(|i| y[i]).collect()
}

/// Stick-breaking weights `w_l = v_l prod_{r<l} (1 - v_r)`; the last
/// fraction must be 1 so that the weights sum to one.
pub fn stick_breaking(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() || v.iter().any(|x| !(0.0..=1.0).contains(x)) || *v.last().unwrap() != 1.0 {
        return Err(Error::BadStick);
    }
    let mut rest = 1.0;
    let mut w = Vec::with_capacity(v.len());
    for &vi in v {
        w.push(vi * rest);
        rest *= 1.0 - vi;
    }
    Ok(w)
}

fn cholesky_lower(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !m.is_square() || (m - m.transpose()).abs().max() > 1e-9 * m.abs().max().max(1.0) {
        return Err(Error::NotSpd);
    }
    m.clone().cholesky().map(|c| c.l()).ok_or(Error::NotSpd)
}

/// Wishart(nu, scale) draw by the Bartlett decomposition; E = nu * scale.
pub fn wishart<R: Rng + ?Sized>(rng: &mut R, nu: f64, scale: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = scale.nrows();
    if !(nu > p as f64 - 1.0) {
        return Err(Error::BadParameter(format!("Wishart degrees of freedom {nu} <= dim - 1")));
    }
    let l = cholesky_lower(scale)?;
    let mut a = DMatrix::<f64>::zeros(p, p);
    for i in 0..p {
        a[(i, i)] = (2.0 * gamma(rng, (nu - i as f64) / 2.0, 1.0)?).sqrt();
        for j in 0..i {
            a[(i, j)] = std_normal(rng);
        }
    }
    let la = &l * a;
    Ok(&la * la.transpose())
}

/// Draw from N(P^{-1} b, P^{-1}) given the precision `P` and `b`.
pub fn mvn_from_precision<R: Rng + ?Sized>(
    rng: &mut R,
    b: &DVector<f64>,
    precision: &DMatrix<f64>,
) -> Result<DVector<f64>> {
    let chol = precision.clone().cholesky().ok_or(Error::NotSpd)?;
    let mean = chol.solve(b);
    let z = DVector::from_iterator(b.len(), (0..b.len()).map(|_| std_normal(rng)));
    // P = L L^T, so L^{-T} z has covariance P^{-1}
    let dev = chol
        .l()
        .transpose()
        .solve_upper_triangular(&z)
        .ok_or_else(|| Error::NumericalCollapse("triangular solve failed".into()))?;
    Ok(mean + dev)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let root = RngStream::new(42);
        let a: Vec<u64> = {
            let mut r = root.substream(1, 7).rng();
            (0..5).map(|_| r.random()).collect()
        };
        let b: Vec<u64> = {
            let mut r = root.substream(1, 7).rng();
            (0..5).map(|_| r.random()).collect()
        };
        let c: Vec<u64> = {
            let mut r = root.substream(1, 8).rng();
            (0..5).map(|_| r.random()).collect()
        };
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(root.substream(1, 2), root.substream(2, 1));
    }

    #[test]
    fn stick_breaking_examples() {
        assert_eq!(stick_breaking(&[0.5, 0.5, 1.0]).unwrap(), vec![0.5, 0.25, 0.25]);
        assert_eq!(stick_breaking(&[1.0]).unwrap(), vec![1.0]);
        let w = stick_breaking(&[0.3, 0.6, 1.0]).unwrap();
        for (a, b) in w.iter().zip([0.3, 0.42, 0.28]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(matches!(stick_breaking(&[0.3, 1.2, 1.0]), Err(Error::BadStick)));
        assert!(matches!(stick_breaking(&[0.3, 0.5]), Err(Error::BadStick)));
    }

    #[test]
    fn dirichlet_mean_and_normalisation() {
        let mut rng = RngStream::new(1).rng();
        let n = 100_000;
        let mut acc = [0.0; 3];
        for _ in 0..n {
            let d = dirichlet(&mut rng, &[1.0, 1.0, 1.0]).unwrap();
            assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(d.iter().all(|&x| x > 0.0));
            for k in 0..3 {
                acc[k] += d[k];
            }
        }
        for a in acc {
            assert!((a / n as f64 - 1.0 / 3.0).abs() < 0.01);
        }
        let d = dirichlet(&mut rng, &[1e6, 1.0]).unwrap();
        assert!((d[0] - 1.0).abs() < 1e-2);
        assert!(matches!(dirichlet(&mut rng, &[1.0, 0.0]), Err(Error::BadAlpha)));
    }

    #[test]
    fn gamma_and_beta_moments() {
        let mut rng = RngStream::new(2).rng();
        let n = 100_000;
        let g: f64 = (0..n).map(|_| gamma(&mut rng, 2.0, 2.0).unwrap()).sum::<f64>() / n as f64;
        // sd of the mean is sqrt(0.5 / n) ~ 0.0022
        assert!((g - 1.0).abs() < 0.02);
        let alpha = 3.0;
        let b: f64 = (0..n).map(|_| beta(&mut rng, 1.0, alpha).unwrap()).sum::<f64>() / n as f64;
        assert!((b - 1.0 / (1.0 + alpha)).abs() < 0.005);
        assert!(gamma(&mut rng, -1.0, 1.0).is_err());
    }

    #[test]
    fn categorical_degenerate_weights() {
        let mut rng = RngStream::new(3).rng();
        for _ in 0..1000 {
            assert_eq!(categorical(&mut rng, &[0.0, 1.0, 0.0]).unwrap(), 1);
        }
        let mut scratch = vec![0.0; 3];
        for _ in 0..100 {
            assert_eq!(categorical_log(&mut rng, &[-1e4, 0.0, -1e4], &mut scratch).unwrap(), 1);
        }
    }

    #[test]
    fn truncated_normal_respects_bounds() {
        let mut rng = RngStream::new(4).rng();
        for _ in 0..1000 {
            let x = truncated_normal(&mut rng, 0.0, 1.0, 1.0, 2.0).unwrap();
            assert!((1.0..=2.0).contains(&x));
        }
    }

    #[test]
    fn wishart_means() {
        let mut rng = RngStream::new(5).rng();
        let n = 100_000;
        let s = DMatrix::from_element(1, 1, 2.5);
        let m: f64 = (0..n).map(|_| wishart(&mut rng, 4.0, &s).unwrap()[(0, 0)]).sum::<f64>()
            / n as f64;
        assert!((m / 10.0 - 1.0).abs() < 0.02);

        let eye = DMatrix::<f64>::identity(2, 2);
        let mut acc = DMatrix::<f64>::zeros(2, 2);
        for _ in 0..n {
            acc += wishart(&mut rng, 5.0, &eye).unwrap();
        }
        acc /= n as f64;
        assert!((acc[(0, 0)] / 5.0 - 1.0).abs() < 0.03);
        assert!((acc[(1, 1)] / 5.0 - 1.0).abs() < 0.03);
        assert!(acc[(0, 1)].abs() < 0.15);

        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(wishart(&mut rng, 5.0, &bad), Err(Error::NotSpd)));
    }

    #[test]
    fn mvn_precision_moments() {
        let mut rng = RngStream::new(6).rng();
        let p = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let b = DVector::from_vec(vec![1.0, -1.0]);
        let target = p.clone().cholesky().unwrap().solve(&b);
        let n = 50_000;
        let mut acc = DVector::zeros(2);
        for _ in 0..n {
            acc += mvn_from_precision(&mut rng, &b, &p).unwrap();
        }
        acc /= n as f64;
        assert!((acc - target).norm() < 0.02);
    }
}
