//! Shared data model: diagnostic samples, covariate frames, FPF grids and
//! marker/covariate standardisation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One covariate column. Categorical levels keep first-appearance order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Column {
    Continuous(Vec<f64>),
    Categorical { levels: Vec<String>, codes: Vec<usize> },
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Continuous(v) => v.len(),
            Column::Categorical { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub(crate) fn select(&self, rows: &[usize]) -> Column {
        match self {
            Column::Continuous(v) => Column::Continuous(rows.iter().map(|&r| v[r]).collect()),
            Column::Categorical { levels, codes } => Column::Categorical {
                levels: levels.clone(),
                codes: rows.iter().map(|&r| codes[r]).collect(),
            },
        }
    }
}

/// Named covariate columns of equal length. Also used as the prediction
/// frame at which conditional quantities are evaluated.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CovariateFrame {
    names: Vec<String>,
    columns: Vec<Column>,
    nrows: usize,
}

pub type PredictionFrame = CovariateFrame;

impl CovariateFrame {
    pub fn new() -> Self {
        Self::default()
    }

    /// A frame with `nrows` rows and no columns.
    pub fn empty(nrows: usize) -> Self {
        Self { names: Vec::new(), columns: Vec::new(), nrows }
    }

    pub fn push(&mut self, name: impl Into<String>, column: Column) -> Result<()> {
        let name = name.into();
        if !self.columns.is_empty() && column.len() != self.nrows {
            return Err(Error::DimMismatch(format!(
                "column `{name}` has {} rows, frame has {}",
                column.len(),
                self.nrows
            )));
        }
        if self.names.contains(&name) {
            return Err(Error::Config(format!("duplicate column `{name}`")));
        }
        if self.columns.is_empty() {
            self.nrows = column.len();
        }
        self.names.push(name);
        self.columns.push(column);
        Ok(())
    }

    pub fn with_continuous(mut self, name: &str, values: Vec<f64>) -> Result<Self> {
        self.push(name, Column::Continuous(values))?;
        Ok(self)
    }

    /// Adds a categorical column; levels are ordered by first appearance.
    pub fn with_categorical<S: AsRef<str>>(mut self, name: &str, values: &[S]) -> Result<Self> {
        let mut levels: Vec<String> = Vec::new();
        let mut codes = Vec::with_capacity(values.len());
        for v in values {
            let v = v.as_ref();
            let code = match levels.iter().position(|l| l == v) {
                Some(c) => c,
                None => {
                    levels.push(v.to_string());
                    levels.len() - 1
                }
            };
            codes.push(code);
        }
        self.push(name, Column::Categorical { levels, codes })?;
        Ok(self)
    }

    /// Adds a categorical column with an explicit level set (e.g. the
    /// training levels when building a prediction frame).
    pub fn with_categorical_levels<S: AsRef<str>>(
        mut self,
        name: &str,
        levels: &[String],
        values: &[S],
    ) -> Result<Self> {
        let codes = values
            .iter()
            .map(|v| {
                levels.iter().position(|l| l == v.as_ref()).ok_or_else(|| Error::UnknownLevel {
                    factor: name.to_string(),
                    level: v.as_ref().to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        self.push(name, Column::Categorical { levels: levels.to_vec(), codes })?;
        Ok(self)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.names.iter().position(|n| n == name).map(|i| &self.columns[i])
    }

    pub fn columns(&self) -> impl Iterator<Item = (&str, &Column)> {
        self.names.iter().map(String::as_str).zip(self.columns.iter())
    }

    pub fn select_rows(&self, rows: &[usize]) -> CovariateFrame {
        CovariateFrame {
            names: self.names.clone(),
            columns: self.columns.iter().map(|c| c.select(rows)).collect(),
            nrows: rows.len(),
        }
    }

    /// Keeps only the named columns.
    pub fn project(&self, keep: &[String]) -> Result<CovariateFrame> {
        let mut out = CovariateFrame::empty(self.nrows);
        for name in keep {
            let col = self.column(name).ok_or_else(|| Error::MissingColumn(name.clone()))?;
            out.push(name.clone(), col.clone())?;
        }
        Ok(out)
    }

    pub fn continuous(&self, name: &str) -> Result<&[f64]> {
        match self.column(name) {
            Some(Column::Continuous(v)) => Ok(v),
            Some(_) => Err(Error::Config(format!("covariate `{name}` is not continuous"))),
            None => Err(Error::MissingColumn(name.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Healthy,
    Diseased,
}

/// Counts of rows dropped at ingestion because of missing values.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MissingCounts {
    pub healthy: usize,
    pub diseased: usize,
    /// Rows whose group label itself was missing.
    pub unlabelled: usize,
}

/// Marker values, disease labels and covariates for both groups.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticSample {
    marker: Vec<f64>,
    labels: Vec<String>,
    tag: String,
    covariates: CovariateFrame,
    missing: MissingCounts,
}

impl DiagnosticSample {
    pub fn new(
        marker: Vec<f64>,
        labels: Vec<String>,
        nondiseased_tag: impl Into<String>,
        covariates: CovariateFrame,
    ) -> Result<Self> {
        let tag = nondiseased_tag.into();
        if marker.len() != labels.len() {
            return Err(Error::DimMismatch(format!(
                "{} marker values but {} labels",
                marker.len(),
                labels.len()
            )));
        }
        if !covariates.names().is_empty() && covariates.nrows() != marker.len() {
            return Err(Error::DimMismatch(format!(
                "{} marker values but {} covariate rows",
                marker.len(),
                covariates.nrows()
            )));
        }
        if marker.iter().any(|v| !v.is_finite()) {
            return Err(Error::BadData("marker contains non-finite values".into()));
        }
        let mut other: Option<&str> = None;
        for l in &labels {
            if *l != tag {
                match other {
                    None => other = Some(l),
                    Some(o) if o == l => {}
                    Some(_) => return Err(Error::TooManyGroups),
                }
            }
        }
        let covariates = if covariates.names().is_empty() {
            CovariateFrame::empty(marker.len())
        } else {
            covariates
        };
        Ok(Self { marker, labels, tag, covariates, missing: MissingCounts::default() })
    }

    /// Two-group sample without covariates; labels are "0" (healthy, the
    /// tag) and "1" (diseased).
    pub fn from_groups(healthy: &[f64], diseased: &[f64]) -> Result<Self> {
        Self::from_groups_with_covariates(healthy, diseased, None)
    }

    /// Two-group sample whose covariate frame lists healthy rows first.
    pub fn from_groups_with_covariates(
        healthy: &[f64],
        diseased: &[f64],
        covariates: Option<CovariateFrame>,
    ) -> Result<Self> {
        let marker: Vec<f64> = healthy.iter().chain(diseased).copied().collect();
        let labels = std::iter::repeat_n("0".to_string(), healthy.len())
            .chain(std::iter::repeat_n("1".to_string(), diseased.len()))
            .collect();
        Self::new(marker, labels, "0", covariates.unwrap_or_default())
    }

    pub fn with_missing(mut self, missing: MissingCounts) -> Self {
        self.missing = missing;
        self
    }

    pub fn marker(&self) -> &[f64] {
        &self.marker
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn covariates(&self) -> &CovariateFrame {
        &self.covariates
    }

    pub fn missing(&self) -> MissingCounts {
        self.missing
    }

    pub fn len(&self) -> usize {
        self.marker.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marker.is_empty()
    }

    pub fn is_healthy(&self, row: usize) -> bool {
        self.labels[row] == self.tag
    }

    /// Partitions rows into healthy (label equals the tag) and diseased,
    /// preserving order.
    pub fn split_groups(&self) -> Result<GroupSplit> {
        let (healthy_rows, diseased_rows): (Vec<usize>, Vec<usize>) =
            (0..self.len()).partition(|&i| self.is_healthy(i));
        if healthy_rows.is_empty() {
            return Err(Error::EmptyGroup("healthy"));
        }
        if diseased_rows.is_empty() {
            return Err(Error::EmptyGroup("diseased"));
        }
        Ok(GroupSplit {
            healthy: healthy_rows.iter().map(|&i| self.marker[i]).collect(),
            diseased: diseased_rows.iter().map(|&i| self.marker[i]).collect(),
            healthy_cov: self.covariates.select_rows(&healthy_rows),
            diseased_cov: self.covariates.select_rows(&diseased_rows),
            healthy_rows,
            diseased_rows,
        })
    }

    /// Centres and scales the marker and every continuous covariate with the
    /// combined-sample mean and (n - 1) standard deviation.
    pub fn standardise(&self, enable: bool) -> Result<(DiagnosticSample, StandardisationParams)> {
        if !enable {
            return Ok((self.clone(), StandardisationParams::identity()));
        }
        let marker_affine = Affine::fit(&self.marker, "marker")?;
        let mut params = StandardisationParams { marker: marker_affine, covariates: Vec::new() };
        let mut frame = CovariateFrame::empty(self.len());
        for (name, col) in self.covariates.columns() {
            let col = match col {
                Column::Continuous(v) => {
                    let aff = Affine::fit(v, name)?;
                    params.covariates.push((name.to_string(), aff));
                    Column::Continuous(v.iter().map(|&x| aff.apply(x)).collect())
                }
                c => c.clone(),
            };
            frame.push(name, col)?;
        }
        let marker = self.marker.iter().map(|&y| marker_affine.apply(y)).collect();
        let sample = DiagnosticSample {
            marker,
            labels: self.labels.clone(),
            tag: self.tag.clone(),
            covariates: frame,
            missing: self.missing,
        };
        Ok((sample, params))
    }
}

/// Output of [`DiagnosticSample::split_groups`].
#[derive(Clone, Debug)]
pub struct GroupSplit {
    pub healthy: Vec<f64>,
    pub diseased: Vec<f64>,
    pub healthy_cov: CovariateFrame,
    pub diseased_cov: CovariateFrame,
    pub healthy_rows: Vec<usize>,
    pub diseased_rows: Vec<usize>,
}

impl GroupSplit {
    pub fn n_healthy(&self) -> usize {
        self.healthy.len()
    }

    pub fn n_diseased(&self) -> usize {
        self.diseased.len()
    }
}

/// `z = (x - mean) / sd`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub mean: f64,
    pub sd: f64,
}

impl Affine {
    pub const IDENTITY: Affine = Affine { mean: 0.0, sd: 1.0 };

    pub fn fit(values: &[f64], what: &str) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(Error::ZeroVariance(what.to_string()));
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let sd = var.sqrt();
        if !(sd > 0.0) || !sd.is_finite() {
            return Err(Error::ZeroVariance(what.to_string()));
        }
        Ok(Affine { mean, sd })
    }

    pub fn apply(&self, x: f64) -> f64 {
        (x - self.mean) / self.sd
    }

    pub fn invert(&self, z: f64) -> f64 {
        z * self.sd + self.mean
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StandardisationParams {
    pub marker: Affine,
    pub covariates: Vec<(String, Affine)>,
}

impl StandardisationParams {
    pub fn identity() -> Self {
        Self { marker: Affine::IDENTITY, covariates: Vec::new() }
    }

    pub fn covariate(&self, name: &str) -> Option<Affine> {
        self.covariates.iter().find(|(n, _)| n == name).map(|(_, a)| *a)
    }

    /// Maps a frame (training-scale) into the standardised covariate scale.
    pub fn apply_frame(&self, frame: &CovariateFrame) -> Result<CovariateFrame> {
        let mut out = CovariateFrame::empty(frame.nrows());
        for (name, col) in frame.columns() {
            let col = match (col, self.covariate(name)) {
                (Column::Continuous(v), Some(a)) => {
                    Column::Continuous(v.iter().map(|&x| a.apply(x)).collect())
                }
                (c, _) => c.clone(),
            };
            out.push(name, col)?;
        }
        Ok(out)
    }
}

/// Increasing grid of false positive fractions from 0 to 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FpfGrid(Vec<f64>);

impl FpfGrid {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.len() < 2 || p[0] != 0.0 || *p.last().unwrap() != 1.0 {
            return Err(Error::BadParameter("FPF grid must start at 0 and end at 1".into()));
        }
        if p.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::BadParameter("FPF grid must be strictly increasing".into()));
        }
        Ok(Self(p))
    }

    /// `n` equally spaced points on [0, 1].
    pub fn uniform(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::BadParameter("FPF grid needs at least two points".into()));
        }
        let step = 1.0 / (n - 1) as f64;
        let mut p: Vec<f64> = (0..n).map(|i| i as f64 * step).collect();
        p[n - 1] = 1.0;
        Ok(Self(p))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Default for FpfGrid {
    fn default() -> Self {
        Self::uniform(101).expect("101 points")
    }
}

impl TryFrom<Vec<f64>> for FpfGrid {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<FpfGrid> for Vec<f64> {
    fn from(g: FpfGrid) -> Self {
        g.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn split_partitions_rows() {
        let s = DiagnosticSample::new(
            vec![1.0, 2.0, 3.0],
            vec!["0".into(), "1".into(), "0".into()],
            "0",
            CovariateFrame::new(),
        )
        .unwrap();
        let g = s.split_groups().unwrap();
        assert_eq!(g.healthy, vec![1.0, 3.0]);
        assert_eq!(g.diseased, vec![2.0]);
    }

    #[test]
    fn all_tagged_is_empty_group() {
        let s = DiagnosticSample::new(
            vec![1.0, 2.0],
            vec!["0".into(), "0".into()],
            "0",
            CovariateFrame::new(),
        )
        .unwrap();
        assert!(matches!(s.split_groups(), Err(Error::EmptyGroup("diseased"))));
    }

    #[test]
    fn three_labels_rejected() {
        let r = DiagnosticSample::new(
            vec![1.0, 2.0, 3.0],
            vec!["0".into(), "1".into(), "2".into()],
            "0",
            CovariateFrame::new(),
        );
        assert!(matches!(r, Err(Error::TooManyGroups)));
    }

    #[test]
    fn two_point_standardisation_uses_sample_sd() {
        let s = DiagnosticSample::from_groups(&[0.0], &[2.0]).unwrap();
        let (z, p) = s.standardise(true).unwrap();
        assert!((p.marker.mean - 1.0).abs() < 1e-15);
        assert!((p.marker.sd - 2f64.sqrt()).abs() < 1e-15);
        assert!((z.marker()[0] + 0.7071067811865475).abs() < 1e-12);
        assert!((z.marker()[1] - 0.7071067811865475).abs() < 1e-12);
    }

    #[test]
    fn disabled_standardisation_is_identity() {
        let s = DiagnosticSample::from_groups(&[0.0, 5.0], &[2.0]).unwrap();
        let (z, p) = s.standardise(false).unwrap();
        assert_eq!(p.marker, Affine::IDENTITY);
        assert_eq!(z.marker(), s.marker());
    }

    #[test]
    fn constant_marker_has_zero_variance() {
        let s = DiagnosticSample::from_groups(&[3.0, 3.0], &[3.0]).unwrap();
        assert!(matches!(s.standardise(true), Err(Error::ZeroVariance(_))));
    }

    #[test]
    fn covariates_standardised_with_marker() {
        let cov = CovariateFrame::new()
            .with_continuous("age", vec![10.0, 20.0, 30.0])
            .unwrap()
            .with_categorical("g", &["a", "b", "a"])
            .unwrap();
        let s = DiagnosticSample::from_groups_with_covariates(&[1.0, 2.0], &[4.0], Some(cov))
            .unwrap();
        let (z, p) = s.standardise(true).unwrap();
        let age = z.covariates().continuous("age").unwrap();
        assert!((age[0] + 1.0).abs() < 1e-12 && age[1].abs() < 1e-12);
        assert_eq!(p.covariate("age").unwrap().mean, 20.0);
        assert_eq!(z.covariates().column("g"), s.covariates().column("g"));
    }

    #[test]
    fn uniform_grid() {
        let g = FpfGrid::default();
        assert_eq!(g.len(), 101);
        assert_eq!(g.as_slice()[0], 0.0);
        assert_eq!(g.as_slice()[100], 1.0);
        assert!(FpfGrid::new(vec![0.0, 0.5, 0.5, 1.0]).is_err());
    }

    proptest! {
        #[test]
        fn split_is_a_partition(labels in proptest::collection::vec(any::<bool>(), 2..60)) {
            prop_assume!(labels.iter().any(|&b| b) && labels.iter().any(|&b| !b));
            let marker: Vec<f64> = (0..labels.len()).map(|i| i as f64).collect();
            let lab: Vec<String> = labels.iter().map(|&b| if b { "1".into() } else { "0".into() }).collect();
            let s = DiagnosticSample::new(marker.clone(), lab, "0", CovariateFrame::new()).unwrap();
            let g = s.split_groups().unwrap();
            let mut all: Vec<f64> = g.healthy.iter().chain(&g.diseased).copied().collect();
            all.sort_by(f64::total_cmp);
            prop_assert_eq!(all, marker);
        }

        #[test]
        fn standardisation_round_trips(v in proptest::collection::vec(-1e3f64..1e3, 3..40)) {
            let a = Affine::fit(&v, "x");
            prop_assume!(a.is_ok());
            let a = a.unwrap();
            for &x in &v {
                let back = a.invert(a.apply(x));
                prop_assert!((back - x).abs() <= 1e-12 * x.abs().max(1.0));
            }
        }
    }
}
