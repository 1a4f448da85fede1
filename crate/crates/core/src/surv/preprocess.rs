//! Raw tables to nonnegative covariate matrices.
//!
//! Numeric columns are min-max scaled with statistics from the fitting rows;
//! categorical columns expand into one 0/1 indicator per level (no reference
//! level is dropped).

use std::collections::BTreeSet;
use std::io::Read;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::SurvivalDataset;
use crate::error::{Error, Result};

const MISSING: [&str; 6] = ["", "NA", "NaN", "nan", "null", "?"];

fn is_missing(cell: &str) -> bool {
    MISSING.contains(&cell)
}

/// String cells of a headed table, as read from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: Vec<String>, rows: Vec<Vec<String>>) -> Result<Self> {
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != headers.len()) {
            return Err(Error::schema(
                i + 1,
                "*",
                format!("row has {} cells but the header has {}", r.len(), headers.len()),
            ));
        }
        Ok(Self { headers, rows })
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.iter().map(str::to_owned).collect();
        let rows = rdr
            .records()
            .map(|r| r.map(|rec| rec.iter().map(str::to_owned).collect()))
            .collect::<std::result::Result<Vec<Vec<String>>, _>>()?;
        Self::new(headers, rows)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref()).map_err(|e| {
            Error::invalid(format!("cannot open {}: {e}", path.as_ref().display()))
        })?;
        Self::from_reader(file)
    }

    pub fn headers(&self) -> &[String] {
        &self.headers
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[String] {
        &self.rows[i]
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    pub fn select_rows(&self, indices: &[usize]) -> Self {
        Self {
            headers: self.headers.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    fn cell(&self, row: usize, col: usize) -> &str {
        &self.rows[row][col]
    }
}

/// Which columns carry the survival outcome. Every other column is a feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnRoles {
    pub time: String,
    pub event: String,
    /// Columns to dummy-code even if every cell parses as a number.
    #[serde(default)]
    pub categorical: Vec<String>,
}

impl Default for ColumnRoles {
    fn default() -> Self {
        Self {
            time: "time".into(),
            event: "event".into(),
            categorical: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

/// Fitted encoding of one raw feature column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureEncoding {
    /// `(v - min) / (max - min)`, floored at zero for out-of-range held-out
    /// values. Missing cells take `fill` (the fitting median) before scaling.
    Numeric { column: String, min: f64, max: f64, fill: f64 },
    /// One indicator per level; missing or unseen cells encode as all zeros.
    Categorical { column: String, levels: Vec<String> },
}

impl FeatureEncoding {
    pub fn column(&self) -> &str {
        match self {
            FeatureEncoding::Numeric { column, .. } | FeatureEncoding::Categorical { column, .. } => column,
        }
    }

    pub fn kind(&self) -> ColumnKind {
        match self {
            FeatureEncoding::Numeric { .. } => ColumnKind::Numeric,
            FeatureEncoding::Categorical { .. } => ColumnKind::Categorical,
        }
    }

    fn width(&self) -> usize {
        match self {
            FeatureEncoding::Numeric { .. } => 1,
            FeatureEncoding::Categorical { levels, .. } => levels.len(),
        }
    }

    fn output_names(&self) -> Vec<String> {
        match self {
            FeatureEncoding::Numeric { column, .. } => vec![column.clone()],
            FeatureEncoding::Categorical { column, levels } => {
                levels.iter().map(|l| format!("{column}={l}")).collect()
            }
        }
    }
}

/// Scaling and dummy-coding parameters fitted on one table and reusable on
/// held-out tables with the same feature columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessor {
    roles: ColumnRoles,
    encodings: Vec<FeatureEncoding>,
}

impl Preprocessor {
    /// Fits the encodings on `table` and returns the encoded dataset.
    pub fn fit(table: &Table, roles: &ColumnRoles) -> Result<(Self, SurvivalDataset)> {
        let time_col = required_column(table, &roles.time)?;
        let event_col = required_column(table, &roles.event)?;
        if let Some(name) = roles.categorical.iter().find(|c| table.column_index(c).is_none()) {
            return Err(Error::schema(0, name.clone(), "declared categorical column not found"));
        }

        let mut encodings = Vec::new();
        for (col, name) in table.headers().iter().enumerate() {
            if col == time_col || col == event_col {
                continue;
            }
            encodings.push(fit_column(table, col, name, roles.categorical.contains(name))?);
        }
        let pre = Self {
            roles: roles.clone(),
            encodings,
        };
        let data = pre.transform(table)?;
        Ok((pre, data))
    }

    pub fn roles(&self) -> &ColumnRoles {
        &self.roles
    }

    pub fn encodings(&self) -> &[FeatureEncoding] {
        &self.encodings
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.encodings.iter().flat_map(FeatureEncoding::output_names).collect()
    }

    pub fn n_features(&self) -> usize {
        self.encodings.iter().map(FeatureEncoding::width).sum()
    }

    /// Encodes a table that carries the survival columns.
    pub fn transform(&self, table: &Table) -> Result<SurvivalDataset> {
        let time_col = required_column(table, &self.roles.time)?;
        let event_col = required_column(table, &self.roles.event)?;
        let mut time = Array1::zeros(table.n_rows());
        let mut event = Vec::with_capacity(table.n_rows());
        for row in 0..table.n_rows() {
            time[row] = parse_time(table.cell(row, time_col), row, &self.roles.time)?;
            event.push(parse_event(table.cell(row, event_col), row, &self.roles.event)?);
        }
        let x = self.transform_covariates(table)?;
        SurvivalDataset::new(x, time, event, self.feature_names())
    }

    /// Encodes feature columns only. Survival columns, when present, are
    /// ignored; any other column unknown to the fitted encodings is an error.
    pub fn transform_covariates(&self, table: &Table) -> Result<Array2<f64>> {
        let known: BTreeSet<&str> = self
            .encodings
            .iter()
            .map(FeatureEncoding::column)
            .chain([self.roles.time.as_str(), self.roles.event.as_str()])
            .collect();
        let unknown: Vec<&str> = table
            .headers()
            .iter()
            .map(String::as_str)
            .filter(|h| !known.contains(h))
            .collect();
        let missing: Vec<&str> = self
            .encodings
            .iter()
            .map(FeatureEncoding::column)
            .filter(|c| table.column_index(c).is_none())
            .collect();
        if !unknown.is_empty() || !missing.is_empty() {
            return Err(Error::schema(
                0,
                unknown.first().or(missing.first()).copied().unwrap_or_default(),
                format!("feature columns do not match the fitted model: unknown {unknown:?}, missing {missing:?}"),
            ));
        }

        let mut x = Array2::zeros((table.n_rows(), self.n_features()));
        let mut offset = 0;
        let mut unseen = 0usize;
        for enc in &self.encodings {
            let col = table.column_index(enc.column()).expect("checked above");
            for row in 0..table.n_rows() {
                let cell = table.cell(row, col);
                match enc {
                    FeatureEncoding::Numeric { column, min, max, fill } => {
                        let v = if is_missing(cell) {
                            *fill
                        } else {
                            parse_number(cell, row, column)?
                        };
                        x[[row, offset]] = if max > min { ((v - min) / (max - min)).max(0.0) } else { 0.0 };
                    }
                    FeatureEncoding::Categorical { levels, .. } => {
                        if is_missing(cell) {
                            continue;
                        }
                        match levels.iter().position(|l| l == cell) {
                            Some(k) => x[[row, offset + k]] = 1.0,
                            None => unseen += 1,
                        }
                    }
                }
            }
            offset += enc.width();
        }
        if unseen > 0 {
            log::warn!("{unseen} categorical cell(s) hold levels unseen during fitting; encoded as all zeros");
        }
        Ok(x)
    }
}

fn required_column(table: &Table, name: &str) -> Result<usize> {
    table
        .column_index(name)
        .ok_or_else(|| Error::schema(0, name, "required column is missing from the header"))
}

fn fit_column(table: &Table, col: usize, name: &str, force_categorical: bool) -> Result<FeatureEncoding> {
    let present: Vec<(usize, &str)> = (0..table.n_rows())
        .map(|r| (r, table.cell(r, col)))
        .filter(|(_, c)| !is_missing(c))
        .collect();
    let numeric: Option<Vec<f64>> = if force_categorical {
        None
    } else {
        present.iter().map(|(_, c)| c.parse::<f64>().ok().filter(|v| v.is_finite())).collect()
    };
    match numeric {
        Some(mut values) => {
            if values.is_empty() {
                log::warn!("column `{name}` has no values; encoded as zeros");
                return Ok(FeatureEncoding::Numeric {
                    column: name.to_owned(),
                    min: 0.0,
                    max: 0.0,
                    fill: 0.0,
                });
            }
            values.sort_by(f64::total_cmp);
            let min = values[0];
            let max = values[values.len() - 1];
            if min == max {
                log::warn!("column `{name}` is constant; scaled to all zeros");
            }
            Ok(FeatureEncoding::Numeric {
                column: name.to_owned(),
                min,
                max,
                fill: super::percentile(&values, 50.0),
            })
        }
        None => {
            let levels: BTreeSet<&str> = present.iter().map(|(_, c)| *c).collect();
            Ok(FeatureEncoding::Categorical {
                column: name.to_owned(),
                levels: levels.into_iter().map(str::to_owned).collect(),
            })
        }
    }
}

fn parse_number(cell: &str, row: usize, column: &str) -> Result<f64> {
    cell.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::schema(row + 1, column, format!("`{cell}` is not a finite number")))
}

fn parse_time(cell: &str, row: usize, column: &str) -> Result<f64> {
    let t = parse_number(cell, row, column)?;
    if t <= 0.0 {
        return Err(Error::schema(row + 1, column, format!("time must be positive, got {t}")));
    }
    Ok(t)
}

fn parse_event(cell: &str, row: usize, column: &str) -> Result<bool> {
    match cell.parse::<f64>() {
        Ok(v) if v == 0.0 => Ok(false),
        Ok(v) if v == 1.0 => Ok(true),
        _ => Err(Error::schema(row + 1, column, format!("event must be 0 or 1, got `{cell}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(csv: &str) -> Table {
        Table::from_reader(csv.as_bytes()).unwrap()
    }

    #[test]
    fn full_dummy_coding() {
        let t = table("time,event,g\n1,1,A\n2,0,B\n3,1,A\n");
        let (pre, d) = Preprocessor::fit(&t, &ColumnRoles::default()).unwrap();
        assert_eq!(pre.feature_names(), vec!["g=A", "g=B"]);
        assert_eq!(d.x().row(0).to_vec(), vec![1.0, 0.0]);
        assert_eq!(d.x().row(1).to_vec(), vec![0.0, 1.0]);
        assert_eq!(d.x().row(2).to_vec(), vec![1.0, 0.0]);
    }

    #[test]
    fn min_max_scaling() {
        let t = table("time,event,v\n1,1,2\n2,0,4\n3,1,6\n");
        let (_, d) = Preprocessor::fit(&t, &ColumnRoles::default()).unwrap();
        assert_eq!(d.x().column(0).to_vec(), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn constant_column_is_zero() {
        let t = table("time,event,v\n1,1,7\n2,0,7\n");
        let (_, d) = Preprocessor::fit(&t, &ColumnRoles::default()).unwrap();
        assert_eq!(d.x().column(0).to_vec(), vec![0.0, 0.0]);
    }

    #[test]
    fn nonpositive_time_reports_coordinates() {
        let t = table("time,event,v\n1,1,7\n0,0,7\n");
        match Preprocessor::fit(&t, &ColumnRoles::default()) {
            Err(Error::Schema { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "time");
            }
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn bad_event_rejected() {
        let t = table("time,event,v\n1,2,7\n");
        assert!(matches!(
            Preprocessor::fit(&t, &ColumnRoles::default()),
            Err(Error::Schema { .. })
        ));
    }

    #[test]
    fn missing_event_column() {
        let t = table("time,status,v\n1,1,7\n");
        match Preprocessor::fit(&t, &ColumnRoles::default()) {
            Err(Error::Schema { column, .. }) => assert_eq!(column, "event"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn held_out_uses_fitted_parameters() {
        let train = table("time,event,v,g\n1,1,2,A\n2,1,6,B\n");
        let (pre, _) = Preprocessor::fit(&train, &ColumnRoles::default()).unwrap();
        let test = table("v,g\n4,B\n0,C\n10,A\n");
        let x = pre.transform_covariates(&test).unwrap();
        assert_eq!(x.row(0).to_vec(), vec![0.5, 0.0, 1.0]);
        // below the fitted range floors at 0, unseen level encodes as zeros
        assert_eq!(x.row(1).to_vec(), vec![0.0, 0.0, 0.0]);
        assert_eq!(x.row(2).to_vec(), vec![2.0, 1.0, 0.0]);
    }

    #[test]
    fn unknown_column_rejected() {
        let train = table("time,event,v\n1,1,2\n2,1,6\n");
        let (pre, _) = Preprocessor::fit(&train, &ColumnRoles::default()).unwrap();
        let test = table("v,w\n4,1\n");
        assert!(pre.transform_covariates(&test).is_err());
    }

    #[test]
    fn missing_numeric_takes_median() {
        let t = table("time,event,v\n1,1,0\n2,1,NA\n3,0,10\n4,1,4\n");
        let (_, d) = Preprocessor::fit(&t, &ColumnRoles::default()).unwrap();
        assert!((d.x()[[1, 0]] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn forced_categorical() {
        let t = table("time,event,stage\n1,1,1\n2,1,2\n3,0,3\n");
        let roles = ColumnRoles {
            categorical: vec!["stage".into()],
            ..ColumnRoles::default()
        };
        let (pre, d) = Preprocessor::fit(&t, &roles).unwrap();
        assert_eq!(pre.n_features(), 3);
        assert_eq!(d.x().row(2).to_vec(), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn empty_table_transforms_to_empty_matrix() {
        let train = table("time,event,v\n1,1,2\n2,1,6\n");
        let (pre, _) = Preprocessor::fit(&train, &ColumnRoles::default()).unwrap();
        let x = pre.transform_covariates(&table("v\n")).unwrap();
        assert_eq!(x.dim(), (0, 1));
    }
}
