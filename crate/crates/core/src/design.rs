//! Design matrices from formulas: intercept, reference-coded factors, linear
//! terms, pairwise interactions and per-level cubic B-spline blocks.

use log::warn;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formula::{Formula, SmoothTerm, Term};
use crate::model::{Column, CovariateFrame};
use crate::splines::SplineSpec;

/// Relative tolerance on the pivoted-QR diagonal for collinearity.
pub const RANK_TOL: f64 = 1e-10;

/// Everything learned from the training frame that prediction must reuse.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedDesign {
    pub formula: Formula,
    pub factor_levels: Vec<(String, Vec<String>)>,
    /// One entry per smooth term, one spec per `by` level (or a single one).
    pub smooths: Vec<Vec<SplineSpec>>,
    pub labels: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct Design {
    pub z: DMatrix<f64>,
    pub fitted: FittedDesign,
    pub rank: usize,
    pub warnings: Vec<String>,
}

impl Design {
    pub fn ncols(&self) -> usize {
        self.z.ncols()
    }
}

/// Builds the training design for `formula` on `frame`.
pub fn build_design(frame: &CovariateFrame, formula: &Formula) -> Result<Design> {
    build_design_covering(frame, formula, None)
}

/// As [`build_design`], but spline boundaries are widened (per `by` level)
/// to also span the values in `cover`, so the basis can be evaluated there
/// without extrapolation. Interior knots still come from `frame`.
pub fn build_design_covering(frame: &CovariateFrame, formula: &Formula, cover: Option<&CovariateFrame>) -> Result<Design> {
    let mut factor_levels = Vec::new();
    for v in formula.variables() {
        match frame.column(&v) {
            None => return Err(Error::MissingColumn(v)),
            Some(Column::Categorical { levels, .. }) => factor_levels.push((v, levels.clone())),
            Some(Column::Continuous(_)) => {}
        }
    }
    let mut smooths = Vec::new();
    for t in &formula.terms {
        if let Term::Smooth(s) = t {
            let mut specs = fit_smooth(frame, s)?;
            if let Some(c) = cover {
                widen(&mut specs, c, s, frame)?;
            }
            smooths.push(specs);
        }
    }
    let mut fitted = FittedDesign { formula: formula.clone(), factor_levels, smooths, labels: vec![] };
    let (z, labels) = assemble(frame, &fitted, false)?;
    fitted.labels = labels;
    let rank = numerical_rank(&z);
    let mut warnings = Vec::new();
    if rank < z.ncols() {
        let msg = format!(
            "design for `{formula}` has collinear columns (rank {rank} < {} columns); kept as is",
            z.ncols()
        );
        warn!("{msg}");
        warnings.push(msg);
    }
    Ok(Design { z, fitted, rank, warnings })
}

impl FittedDesign {
    /// Design rows for new covariate values using the training knots,
    /// boundaries and levels.
    pub fn predict(&self, frame: &CovariateFrame, extrapolate: bool) -> Result<DMatrix<f64>> {
        Ok(assemble(frame, self, extrapolate)?.0)
    }

    pub fn ncols(&self) -> usize {
        self.labels.len()
    }

    /// True when every term is linear (no spline blocks).
    pub fn is_linear(&self) -> bool {
        self.smooths.is_empty()
    }

    fn levels(&self, name: &str) -> Option<&[String]> {
        self.factor_levels.iter().find(|(n, _)| n == name).map(|(_, l)| l.as_slice())
    }
}

fn fit_smooth(frame: &CovariateFrame, s: &SmoothTerm) -> Result<Vec<SplineSpec>> {
    let x = frame.continuous(&s.var)?;
    match &s.by {
        None => Ok(vec![SplineSpec::fit(x, s.k[0])?]),
        Some(by) => {
            let (levels, codes) = categorical(frame, by)?;
            if s.k.len() != levels.len() && s.k.len() != 1 {
                return Err(Error::Formula(format!(
                    "K has {} entries but `{by}` has {} levels",
                    s.k.len(),
                    levels.len()
                )));
            }
            (0..levels.len())
                .map(|l| {
                    let xl: Vec<f64> =
                        x.iter().zip(codes).filter(|(_, &c)| c == l).map(|(v, _)| *v).collect();
                    SplineSpec::fit(&xl, if s.k.len() == 1 { s.k[0] } else { s.k[l] })
                })
                .collect()
        }
    }
}

fn widen(specs: &mut [SplineSpec], cover: &CovariateFrame, s: &SmoothTerm, frame: &CovariateFrame) -> Result<()> {
    let x = cover.continuous(&s.var)?;
    let codes = match &s.by {
        Some(by) => training_codes(cover, by, categorical(frame, by)?.0)?,
        None => vec![0; x.len()],
    };
    for (&v, &c) in x.iter().zip(&codes) {
        let b = &mut specs[c].boundary;
        *b = (b.0.min(v), b.1.max(v));
    }
    Ok(())
}

fn categorical<'a>(frame: &'a CovariateFrame, name: &str) -> Result<(&'a [String], &'a [usize])> {
    match frame.column(name) {
        Some(Column::Categorical { levels, codes }) => Ok((levels, codes)),
        Some(Column::Continuous(_)) => {
            Err(Error::Formula(format!("`by` variable `{name}` must be categorical")))
        }
        None => Err(Error::MissingColumn(name.to_string())),
    }
}

/// Level codes of `name` in `frame`, translated to the training level order.
fn training_codes(frame: &CovariateFrame, name: &str, train_levels: &[String]) -> Result<Vec<usize>> {
    let (levels, codes) = categorical(frame, name)?;
    let map: Vec<usize> = levels
        .iter()
        .map(|l| {
            train_levels.iter().position(|t| t == l).ok_or_else(|| Error::UnknownLevel {
                factor: name.to_string(),
                level: l.clone(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(codes.iter().map(|&c| map[c]).collect())
}

/// Coded columns of a variable: itself if continuous, reference dummies if
/// categorical.
fn coded(frame: &CovariateFrame, name: &str, fitted: &FittedDesign) -> Result<Vec<(String, Vec<f64>)>> {
    match fitted.levels(name) {
        Some(levels) => {
            let codes = training_codes(frame, name, levels)?;
            Ok(levels
                .iter()
                .enumerate()
                .skip(1)
                .map(|(l, lev)| {
                    (format!("{name}{lev}"), codes.iter().map(|&c| f64::from(u8::from(c == l))).collect())
                })
                .collect())
        }
        None => {
            let x = frame.continuous(name)?;
            Ok(vec![(name.to_string(), x.to_vec())])
        }
    }
}

fn assemble(
    frame: &CovariateFrame,
    fitted: &FittedDesign,
    extrapolate: bool,
) -> Result<(DMatrix<f64>, Vec<String>)> {
    let n = frame.nrows();
    let mut cols: Vec<(String, Vec<f64>)> = vec![("(Intercept)".into(), vec![1.0; n])];
    let mut smooth_idx = 0;
    for term in &fitted.formula.terms {
        match term {
            Term::Main(name) => cols.extend(coded(frame, name, fitted)?),
            Term::Interaction(names) => {
                let mut acc: Vec<(String, Vec<f64>)> = vec![(String::new(), vec![1.0; n])];
                for name in names {
                    let c = coded(frame, name, fitted)?;
                    let mut next = Vec::new();
                    for (la, va) in &acc {
                        for (lb, vb) in &c {
                            let label = if la.is_empty() { lb.clone() } else { format!("{la}:{lb}") };
                            next.push((label, va.iter().zip(vb).map(|(a, b)| a * b).collect()));
                        }
                    }
                    acc = next;
                }
                cols.extend(acc);
            }
            Term::Smooth(s) => {
                let specs = &fitted.smooths[smooth_idx];
                smooth_idx += 1;
                let x = frame.continuous(&s.var)?;
                let codes = match &s.by {
                    Some(by) => training_codes(frame, by, fitted.levels(by).unwrap_or(&[]))?,
                    None => vec![0; n],
                };
                let level_names: Vec<String> = match &s.by {
                    Some(by) => fitted.levels(by).unwrap_or(&[]).iter().map(|l| format!(":{by}{l}")).collect(),
                    None => vec![String::new()],
                };
                for (l, spec) in specs.iter().enumerate() {
                    let mut block = vec![vec![0.0; n]; spec.dim()];
                    let mut row = vec![0.0; spec.dim()];
                    for i in 0..n {
                        if codes[i] != l {
                            continue;
                        }
                        spec.eval_into(x[i], extrapolate, &mut row)?;
                        for (b, v) in row.iter().enumerate() {
                            block[b][i] = *v;
                        }
                    }
                    // the first basis function is dropped: the rest plus the
                    // intercept (or level indicator) span the same space
                    for (b, v) in block.into_iter().enumerate().skip(1) {
                        cols.push((format!("f({}){}.B{}", s.var, level_names[l], b), v));
                    }
                }
            }
        }
    }
    let labels = cols.iter().map(|(l, _)| l.clone()).collect();
    let z = DMatrix::from_fn(n, cols.len(), |i, j| cols[j].1[i]);
    Ok((z, labels))
}

/// Rank from the pivoted QR diagonal at relative tolerance [`RANK_TOL`].
pub fn numerical_rank(z: &DMatrix<f64>) -> usize {
    if z.ncols() == 0 || z.nrows() == 0 {
        return 0;
    }
    let r = z.clone().col_piv_qr().r();
    let d: Vec<f64> = (0..r.nrows().min(r.ncols())).map(|i| r[(i, i)].abs()).collect();
    let max = d.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    d.iter().filter(|&&v| v > RANK_TOL * max).count()
}

/// Least-squares solver for a fixed full-rank design; reused across
/// bootstrap refits.
#[derive(Clone, Debug)]
pub struct OlsSolver {
    /// (Z'Z)^{-1} Z'
    pinv: DMatrix<f64>,
    z: DMatrix<f64>,
}

impl OlsSolver {
    pub fn new(z: &DMatrix<f64>) -> Result<Self> {
        let rank = numerical_rank(z);
        if rank < z.ncols() || z.nrows() < z.ncols() {
            return Err(Error::RankDeficient { rank, cols: z.ncols() });
        }
        let ztz = z.transpose() * z;
        let chol = ztz.cholesky().ok_or(Error::RankDeficient { rank, cols: z.ncols() })?;
        let pinv = chol.solve(&z.transpose());
        Ok(Self { pinv, z: z.clone() })
    }

    pub fn coefficients(&self, y: &[f64]) -> DVector<f64> {
        &self.pinv * DVector::from_column_slice(y)
    }

    pub fn fitted(&self, beta: &DVector<f64>) -> DVector<f64> {
        &self.z * beta
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.z
    }
}
