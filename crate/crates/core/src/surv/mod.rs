//! Right-censored survival data and the nonparametric statistics built on it:
//! Kaplan-Meier curves, inverse probability of censoring weights, follow-up
//! time grids and concordance indices.

mod concordance;
mod grid;
mod km;
mod preprocess;

pub use concordance::{harrell_cindex, uno_cindex};
pub use grid::{percentile, time_grid_from_percentiles, TimeGrid, DEFAULT_PERCENTILES};
pub use km::{ipcw_weights, kaplan_meier, StepFunction};
pub use preprocess::{ColumnKind, ColumnRoles, FeatureEncoding, Preprocessor, Table};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nonnegative covariates with right-censored follow-up.
///
/// Rows of `x` are samples. `time[i]` is the observed event or censoring time
/// and `event[i]` is true when the event was observed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalDataset {
    x: Array2<f64>,
    time: Array1<f64>,
    event: Vec<bool>,
    feature_names: Vec<String>,
    time_unit: String,
}

impl SurvivalDataset {
    pub fn new(
        x: Array2<f64>,
        time: Array1<f64>,
        event: Vec<bool>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let n = x.nrows();
        if time.len() != n || event.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "covariates have {n} rows but time has {} and event has {}",
                time.len(),
                event.len()
            )));
        }
        if feature_names.len() != x.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                x.ncols()
            )));
        }
        if let Some(((i, j), v)) = x.indexed_iter().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            return Err(Error::invalid(format!(
                "covariate ({i}, {j}) = {v} is not a finite nonnegative value"
            )));
        }
        if let Some((i, t)) = time.iter().enumerate().find(|(_, t)| !t.is_finite() || **t <= 0.0) {
            return Err(Error::invalid(format!("time[{i}] = {t} must be positive and finite")));
        }
        if !event.iter().any(|&e| e) {
            return Err(Error::invalid("dataset has no observed events"));
        }
        Ok(Self {
            x,
            time,
            event,
            feature_names,
            time_unit: String::new(),
        })
    }

    pub fn with_time_unit(mut self, unit: impl Into<String>) -> Self {
        self.time_unit = unit.into();
        self
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn time(&self) -> &[f64] {
        self.time.as_slice().expect("time is contiguous")
    }

    pub fn event(&self) -> &[bool] {
        &self.event
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn time_unit(&self) -> &str {
        &self.time_unit
    }

    pub fn n_samples(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn n_events(&self) -> usize {
        self.event.iter().filter(|&&e| e).count()
    }

    /// Rows selected by `indices`, in that order. Fails if the selection
    /// contains no event.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let x = self.x.select(Axis(0), indices);
        let time = indices.iter().map(|&i| self.time[i]).collect();
        let event = indices.iter().map(|&i| self.event[i]).collect();
        Ok(Self::new(x, time, event, self.feature_names.clone())?.with_time_unit(&self.time_unit))
    }

    /// Rows of `self` followed by rows of `other`; feature names must agree.
    pub fn stack(&self, other: &Self) -> Result<Self> {
        if self.feature_names != other.feature_names {
            return Err(Error::DimensionMismatch("stacked datasets have different features".into()));
        }
        let x = ndarray::concatenate(Axis(0), &[self.x.view(), other.x.view()])
            .map_err(|e| Error::DimensionMismatch(e.to_string()))?;
        let time = self.time.iter().chain(other.time.iter()).copied().collect();
        let event = self.event.iter().chain(&other.event).copied().collect();
        Ok(Self::new(x, time, event, self.feature_names.clone())?.with_time_unit(&self.time_unit))
    }

    /// Same survival outcomes with a replacement covariate matrix, e.g. the
    /// latent meta-scores of a factorization.
    pub fn with_covariates(&self, x: Array2<f64>, feature_names: Vec<String>) -> Result<Self> {
        Ok(Self::new(x, self.time.clone(), self.event.clone(), feature_names)?
            .with_time_unit(&self.time_unit))
    }
}

/// Checks the shared preconditions of the survival statistics: equal lengths,
/// nonempty, positive finite times.
pub(crate) fn check_times(time: &[f64], n_other: usize, what: &str) -> Result<()> {
    if time.is_empty() {
        return Err(Error::invalid("empty time vector"));
    }
    if time.len() != n_other {
        return Err(Error::DimensionMismatch(format!(
            "time has length {} but {what} has length {n_other}",
            time.len()
        )));
    }
    if let Some((i, t)) = time.iter().enumerate().find(|(_, t)| !t.is_finite() || **t <= 0.0) {
        return Err(Error::invalid(format!("time[{i}] = {t} must be positive and finite")));
    }
    Ok(())
}
