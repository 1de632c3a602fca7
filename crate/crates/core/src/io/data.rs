use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Column, CovariateFrame, DiagnosticSample, MissingCounts};

/// Column roles for reading a diagnostic sample.
#[derive(Clone, Debug, Default)]
pub struct CsvColumns {
    pub marker: String,
    pub group: String,
    /// Value of the group column that marks the nondiseased class.
    pub tag: String,
    pub covariates: Vec<String>,
    /// Covariates read as categorical even when every value is numeric.
    pub factors: Vec<String>,
}

fn is_missing(s: &str) -> bool {
    let s = s.trim();
    s.is_empty() || s.eq_ignore_ascii_case("na") || s.eq_ignore_ascii_case("nan")
}

fn parse_number(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Group values equal the tag either as strings or as numbers, so `0` and
/// `0.0` name the same class.
fn same_label(value: &str, tag: &str) -> bool {
    let (v, t) = (value.trim(), tag.trim());
    v == t || matches!((parse_number(v), parse_number(t)), (Some(a), Some(b)) if a == b)
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn read<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            rows.push(rec?.iter().map(str::to_string).collect());
        }
        Ok(Self { header, rows })
    }

    fn index(&self, name: &str) -> Result<usize> {
        self.header.iter().position(|h| h == name).ok_or_else(|| Error::MissingColumn(name.to_string()))
    }
}

/// Reads a diagnostic sample from a CSV file with a header row.
///
/// Rows with a missing marker, group or covariate value are dropped and
/// counted. Categorical levels follow first appearance in the file; a
/// covariate is continuous when all its present values are numeric, unless
/// listed in `factors`.
pub fn ingest_csv(path: impl AsRef<Path>, cols: &CsvColumns) -> Result<DiagnosticSample> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| Error::BadData(format!("cannot open {}: {e}", path.as_ref().display())))?;
    read_sample(file, cols)
}

pub fn read_sample<R: Read>(reader: R, cols: &CsvColumns) -> Result<DiagnosticSample> {
    let table = Table::read(reader)?;
    let im = table.index(&cols.marker)?;
    let ig = table.index(&cols.group)?;
    let ic: Vec<usize> = cols.covariates.iter().map(|c| table.index(c)).collect::<Result<_>>()?;

    let mut missing = MissingCounts::default();
    let mut keep = Vec::new();
    let mut marker = Vec::new();
    let mut labels = Vec::new();
    let mut tag_seen = false;
    for (r, row) in table.rows.iter().enumerate() {
        let g = &row[ig];
        if is_missing(g) {
            missing.unlabelled += 1;
            continue;
        }
        let healthy = same_label(g, &cols.tag);
        tag_seen |= healthy;
        if is_missing(&row[im]) || ic.iter().any(|&c| is_missing(&row[c])) {
            if healthy {
                missing.healthy += 1;
            } else {
                missing.diseased += 1;
            }
            continue;
        }
        let y = parse_number(&row[im])
            .ok_or_else(|| Error::NonNumericMarker { row: r + 1, value: row[im].clone() })?;
        marker.push(y);
        labels.push(if healthy { cols.tag.clone() } else { g.trim().to_string() });
        keep.push(r);
    }
    if !tag_seen {
        return Err(Error::BadTag(cols.tag.clone()));
    }

    let mut frame = CovariateFrame::empty(keep.len());
    for (name, &c) in cols.covariates.iter().zip(&ic) {
        let values: Vec<&str> = keep.iter().map(|&r| table.rows[r][c].as_str()).collect();
        let numeric: Option<Vec<f64>> = values.iter().map(|v| parse_number(v)).collect();
        frame = match numeric {
            Some(v) if !cols.factors.contains(name) => frame.with_continuous(name, v)?,
            _ => frame.with_categorical(name, &values)?,
        };
    }
    Ok(DiagnosticSample::new(marker, labels, cols.tag.clone(), frame)?.with_missing(missing))
}

/// Reads a prediction frame whose columns are typed and levelled like the
/// matching columns of `training`.
pub fn read_newdata(path: impl AsRef<Path>, training: &CovariateFrame, names: &[String]) -> Result<CovariateFrame> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| Error::BadData(format!("cannot open {}: {e}", path.as_ref().display())))?;
    newdata_from_reader(file, training, names)
}

pub fn newdata_from_reader<R: Read>(reader: R, training: &CovariateFrame, names: &[String]) -> Result<CovariateFrame> {
    let table = Table::read(reader)?;
    let mut frame = CovariateFrame::new();
    for name in names {
        let c = table.index(name)?;
        let values: Vec<&str> = table.rows.iter().map(|r| r[c].as_str()).collect();
        if let Some(r) = values.iter().position(|v| is_missing(v)) {
            return Err(Error::BadData(format!("newdata column `{name}` is missing in row {}", r + 1)));
        }
        frame = match training.column(name) {
            Some(Column::Categorical { levels, .. }) => frame.with_categorical_levels(name, levels, &values)?,
            Some(Column::Continuous(_)) => {
                let v = values
                    .iter()
                    .map(|s| parse_number(s).ok_or_else(|| Error::BadData(format!("non-numeric `{s}` in newdata column `{name}`"))))
                    .collect::<Result<Vec<f64>>>()?;
                frame.with_continuous(name, v)?
            }
            None => return Err(Error::MissingColumn(name.clone())),
        };
    }
    if frame.names().is_empty() {
        frame = CovariateFrame::empty(table.rows.len());
    }
    Ok(frame)
}
