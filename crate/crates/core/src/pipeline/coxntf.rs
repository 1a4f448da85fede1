use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::coxnet::{coxnet_fit, CoxnetConfig, CoxnetModel};
use crate::error::{Error, Result};
use crate::factorization::{ntf_fit, ntf_transform, HalsConfig};
use crate::surv::{ipcw_weights, SurvivalDataset, TimeGrid};
use crate::tensorize::{build_event_tensor, build_probability_tensor};

/// Covariate and temporal patterns learned from the event tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NtfPatterns {
    /// `p x r`, unit columns.
    pub h: Array2<f64>,
    /// `q x r`, unit columns.
    pub q: Array2<f64>,
    pub grid: TimeGrid,
    pub relative_error: f64,
    pub iterations: usize,
    pub seed: u64,
    pub degenerate: Vec<bool>,
}

impl NtfPatterns {
    pub fn rank(&self) -> usize {
        self.h.ncols()
    }
}

/// Learns `H` and `Q` from the IPCW-weighted event tensor of `data`.
pub fn train_ntf_model(
    data: &SurvivalDataset,
    grid: &TimeGrid,
    rank: usize,
    hals: &HalsConfig,
    seed: u64,
) -> Result<NtfPatterns> {
    let weights = ipcw_weights(data.time(), data.event())?;
    let tensor = build_event_tensor(data.x(), data.time(), data.event(), grid, &weights)?;
    let f = ntf_fit(&tensor, rank, hals, seed)?;
    Ok(NtfPatterns {
        h: f.h,
        q: f.q,
        grid: grid.clone(),
        relative_error: f.relative_error,
        iterations: f.iterations,
        seed,
        degenerate: f.degenerate,
    })
}

/// Two-stage model: a Cox model on the raw covariates supplies per-period
/// event probabilities, the probability tensor is projected on the frozen
/// patterns, and a second Cox model is fitted on the resulting meta-scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoxntfModel {
    pub rank: usize,
    pub grid: TimeGrid,
    pub h: Array2<f64>,
    pub q: Array2<f64>,
    pub stage1: CoxnetModel,
    pub stage2: CoxnetModel,
    pub hals: HalsConfig,
    pub coxnet: CoxnetConfig,
    pub seed: u64,
}

pub fn meta_score_names(rank: usize) -> Vec<String> {
    (1..=rank).map(|k| format!("ntf{k}")).collect()
}

/// Meta-scores of covariate rows under a stage-1 model and frozen patterns.
fn project(
    stage1: &CoxnetModel,
    grid: &TimeGrid,
    h: &Array2<f64>,
    q: &Array2<f64>,
    hals: &HalsConfig,
    x: ArrayView2<'_, f64>,
) -> Result<Array2<f64>> {
    let prob = stage1.period_event_probabilities(x, grid)?;
    let tensor = build_probability_tensor(x, prob.view())?;
    Ok(ntf_transform(&tensor, h.view(), q.view(), hals)?.w)
}

/// Fits both Cox stages. Returns the model and the training meta-scores.
///
/// When `validation` is given, each stage picks its penalty by validation
/// c-index; the validation rows are mapped through stage 1 exactly as new
/// data would be.
pub fn train_coxntf(
    data: &SurvivalDataset,
    patterns: &NtfPatterns,
    coxnet: &CoxnetConfig,
    hals: &HalsConfig,
    validation: Option<&SurvivalDataset>,
) -> Result<(CoxntfModel, Array2<f64>)> {
    let grid = &patterns.grid;
    if patterns.h.nrows() != data.n_features() || patterns.q.nrows() != grid.n_periods() {
        return Err(Error::DimensionMismatch(format!(
            "patterns are {}x{} and {}x{} for {} features and {} periods",
            patterns.h.nrows(),
            patterns.h.ncols(),
            patterns.q.nrows(),
            patterns.q.ncols(),
            data.n_features(),
            grid.n_periods()
        )));
    }
    let rank = patterns.rank();
    let stage1 = coxnet_fit(data, coxnet, validation)?;
    let w = project(&stage1, grid, &patterns.h, &patterns.q, hals, data.x())?;

    let zero: Vec<usize> = (0..rank)
        .filter(|&k| w.column(k).iter().all(|&v| v == 0.0))
        .collect();
    if zero.len() == rank {
        let names: Vec<String> = zero.iter().map(|k| format!("ntf{}", k + 1)).collect();
        return Err(Error::numerical(format!(
            "all meta-scores vanish on the training data (degenerate components: {})",
            names.join(", ")
        )));
    }

    let names = meta_score_names(rank);
    let train_w = data.with_covariates(w.clone(), names.clone())?;
    let val_w = match validation {
        Some(v) => {
            let vw = project(&stage1, grid, &patterns.h, &patterns.q, hals, v.x())?;
            Some(v.with_covariates(vw, names)?)
        }
        None => None,
    };
    let stage2 = coxnet_fit(&train_w, coxnet, val_w.as_ref())?;
    Ok((
        CoxntfModel {
            rank,
            grid: grid.clone(),
            h: patterns.h.clone(),
            q: patterns.q.clone(),
            stage1,
            stage2,
            hals: *hals,
            coxnet: coxnet.clone(),
            seed: patterns.seed,
        },
        w,
    ))
}

impl CoxntfModel {
    /// Meta-scores `W` for new covariate rows. Uses covariates only.
    pub fn meta_scores(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.h.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "model expects {} covariates, got {}",
                self.h.nrows(),
                x.ncols()
            )));
        }
        project(&self.stage1, &self.grid, &self.h, &self.q, &self.hals, x)
    }

    /// Stage-2 linear predictor on the meta-scores of `x`.
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        let w = self.meta_scores(x)?;
        self.stage2.predict_risk(w.view())
    }

    /// Number of meta-scores with a nonzero stage-2 coefficient.
    pub fn n_selected_features(&self) -> usize {
        self.stage2.n_selected_features()
    }
}

/// Risk scores of new covariate rows.
pub fn predict_coxntf(model: &CoxntfModel, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
    model.predict(x)
}
