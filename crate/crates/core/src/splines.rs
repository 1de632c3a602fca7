//! Cubic B-spline bases on an open (clamped) knot vector with
//! quantile-placed interior knots.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{quantile_sorted, sorted};

pub const DEGREE: usize = 3;

/// Interior knots at type-7 quantile levels j/(K+1), j = 1..K.
pub fn quantile_knots(x: &[f64], k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Ok(Vec::new());
    }
    let s = sorted(x);
    let mut distinct = s.clone();
    distinct.dedup();
    if distinct.len() <= k || x.len() <= k + 1 {
        return Err(Error::TooFewPoints { distinct: distinct.len(), knots: k });
    }
    Ok((1..=k).map(|j| quantile_sorted(&s, j as f64 / (k + 1) as f64)).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplineSpec {
    pub degree: usize,
    pub interior_knots: Vec<f64>,
    pub boundary: (f64, f64),
}

impl SplineSpec {
    /// Boundary at the data range, `k` quantile interior knots.
    pub fn fit(x: &[f64], k: usize) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::TooFewPoints { distinct: 0, knots: k });
        }
        let interior_knots = quantile_knots(x, k)?;
        let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(hi > lo) {
            return Err(Error::TooFewPoints { distinct: 1, knots: k });
        }
        Ok(Self { degree: DEGREE, interior_knots, boundary: (lo, hi) })
    }

    pub fn dim(&self) -> usize {
        self.interior_knots.len() + self.degree + 1
    }

    /// Full knot vector with each boundary knot repeated degree + 1 times.
    pub fn knot_vector(&self) -> Vec<f64> {
        let p = self.degree;
        let mut t = vec![self.boundary.0; p + 1];
        t.extend_from_slice(&self.interior_knots);
        t.extend(std::iter::repeat_n(self.boundary.1, p + 1));
        t
    }

    /// Writes the basis at `x` into `out` (length `dim()`). Outside the
    /// boundary the polynomial of the end span is continued when
    /// `extrapolate` is set.
    pub fn eval_into(&self, x: f64, extrapolate: bool, out: &mut [f64]) -> Result<()> {
        let (lo, hi) = self.boundary;
        // Rescaled copies of the training extremes can miss the boundary
        // by rounding; treat those as on it.
        let tol = 1e-9 * (hi - lo);
        let x = if x < lo && x >= lo - tol {
            lo
        } else if x > hi && x <= hi + tol {
            hi
        } else {
            x
        };
        if !extrapolate && (x < lo || x > hi) {
            return Err(Error::OutOfRange { value: x, lo, hi });
        }
        let p = self.degree;
        let t = self.knot_vector();
        let m = self.dim();
        out.iter_mut().for_each(|v| *v = 0.0);
        // span index i with t[i] <= x < t[i+1], restricted to nonempty spans
        let mut span = p;
        for i in p..m {
            if t[i + 1] > t[i] && x >= t[i] {
                span = i;
            }
        }
        let mut n = vec![0.0; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        n[0] = 1.0;
        for j in 1..=p {
            left[j] = x - t[span + 1 - j];
            right[j] = t[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let denom = right[r + 1] + left[j - r];
                let temp = if denom != 0.0 { n[r] / denom } else { 0.0 };
                n[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            n[j] = saved;
        }
        for (j, v) in n.iter().enumerate() {
            out[span - p + j] = *v;
        }
        Ok(())
    }

    pub fn eval(&self, x: f64, extrapolate: bool) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(x, extrapolate, &mut out)?;
        Ok(out)
    }
}

/// n x dim basis matrix in row-major order.
pub fn bspline_design(x: &[f64], spec: &SplineSpec, extrapolate: bool) -> Result<Vec<Vec<f64>>> {
    x.iter().map(|&xi| spec.eval(xi, extrapolate)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    #[test]
    fn knots_at_quartiles() {
        let x: Vec<f64> = (1..=100).map(f64::from).collect();
        let k = quantile_knots(&x, 3).unwrap();
        for (a, b) in k.iter().zip([25.75, 50.5, 75.25]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(quantile_knots(&x, 0).unwrap().is_empty());
        let two = [1.0, 2.0, 1.0, 2.0, 1.0, 2.0];
        assert!(matches!(quantile_knots(&two, 3), Err(Error::TooFewPoints { .. })));
    }

    #[test]
    fn dimension_and_left_boundary() {
        let x: Vec<f64> = (0..50).map(|i| i as f64 / 49.0).collect();
        let spec = SplineSpec::fit(&x, 0).unwrap();
        assert_eq!(spec.dim(), 4);
        let spec = SplineSpec::fit(&x, 3).unwrap();
        assert_eq!(spec.dim(), 7);
        let row = spec.eval(0.0, false).unwrap();
        assert_eq!(row[0], 1.0);
        assert!(row[1..].iter().all(|&v| v == 0.0));
        let row = spec.eval(1.0, false).unwrap();
        assert!((row[6] - 1.0).abs() < 1e-15);
        assert!(matches!(spec.eval(1.5, false), Err(Error::OutOfRange { .. })));
        assert!(spec.eval(1.5, true).is_ok());
    }

    #[test]
    fn single_span_is_bernstein() {
        let spec = SplineSpec { degree: 3, interior_knots: vec![], boundary: (0.0, 1.0) };
        let t: f64 = 0.3;
        let row = spec.eval(t, false).unwrap();
        let bern = [(1.0 - t).powi(3), 3.0 * t * (1.0 - t).powi(2), 3.0 * t * t * (1.0 - t), t.powi(3)];
        for (a, b) in row.iter().zip(bern) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn least_squares_reproduces_cubics() {
        let x: Vec<f64> = (0..200).map(|i| -2.0 + 4.0 * i as f64 / 199.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 1.0 - 2.0 * v + 0.5 * v * v - 0.3 * v * v * v).collect();
        let spec = SplineSpec::fit(&x, 5).unwrap();
        let rows = bspline_design(&x, &spec, false).unwrap();
        let z = DMatrix::from_fn(x.len(), spec.dim(), |i, j| rows[i][j]);
        let beta = z.clone().svd(true, true).solve(&DVector::from_vec(y.clone()), 1e-12).unwrap();
        let fit = &z * beta;
        for (f, t) in fit.iter().zip(&y) {
            assert!((f - t).abs() < 1e-8);
        }
    }

    proptest! {
        #[test]
        fn partition_of_unity(
            xs in prop::collection::vec(-5.0f64..5.0, 20..60),
            k in 0usize..6,
            q in 0.0f64..=1.0,
        ) {
            let spec = match SplineSpec::fit(&xs, k) {
                Ok(s) => s,
                Err(_) => return Ok(()),
            };
            let (lo, hi) = spec.boundary;
            let x0 = lo + q * (hi - lo);
            let row = spec.eval(x0, false).unwrap();
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(row.iter().all(|&v| v >= -1e-15));
            prop_assert!(row.iter().filter(|&&v| v > 0.0).count() <= DEGREE + 1);
        }
    }
}
