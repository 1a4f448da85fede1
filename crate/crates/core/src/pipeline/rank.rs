use serde::{Deserialize, Serialize};

use super::{derive_seed, random_split};
use crate::coxnet::{coxnet_fit, CoxnetConfig};
use crate::error::{Error, Result};
use crate::factorization::{nmf_fit, nmf_transform, HalsConfig};
use crate::surv::{uno_cindex, SurvivalDataset, TimeGrid};

use super::coxntf::{train_coxntf, train_ntf_model};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSearch {
    pub candidates: Vec<usize>,
    pub n_repeats: usize,
    /// Share of rows used for training in each split; the rest validates.
    pub train_fraction: f64,
    pub seed: u64,
}

/// Validation c-index of one candidate rank on one random split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankCell {
    pub repeat: usize,
    pub rank: usize,
    pub cindex: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSelection {
    pub chosen: usize,
    /// Mean validation c-index per candidate; `None` when the candidate was
    /// excluded because more than half of its cells failed.
    pub mean_cindex: Vec<(usize, Option<f64>)>,
    pub cells: Vec<RankCell>,
}

/// Picks the CoxNTF rank with the best mean validation c-index over
/// repeated random splits. Ties go to the smaller rank.
pub fn select_rank(
    data: &SurvivalDataset,
    grid: &TimeGrid,
    search: &RankSearch,
    coxnet: &CoxnetConfig,
    hals: &HalsConfig,
) -> Result<RankSelection> {
    select_with(data, search, |train, val, rank, seed| {
        let patterns = train_ntf_model(train, grid, rank, hals, seed)?;
        let (model, _) = train_coxntf(train, &patterns, coxnet, hals, Some(val))?;
        let risk = model.predict(val.x())?;
        uno_cindex(train.time(), train.event(), val.time(), val.event(), risk.as_slice().unwrap(), None)
    })
}

/// Rank selection for the unsupervised NMF baseline, scored the same way.
pub fn select_nmf_rank(
    data: &SurvivalDataset,
    search: &RankSearch,
    coxnet: &CoxnetConfig,
    hals: &HalsConfig,
) -> Result<RankSelection> {
    select_with(data, search, |train, val, rank, seed| {
        let nmf = NmfArm::fit(train, val, rank, coxnet, hals, seed)?;
        let risk = nmf.predict(val)?;
        uno_cindex(train.time(), train.event(), val.time(), val.event(), &risk, None)
    })
}

/// Cox model on NMF meta-scores with the factorization fitted on training
/// covariates only.
pub(crate) struct NmfArm {
    pub h: ndarray::Array2<f64>,
    pub model: crate::coxnet::CoxnetModel,
    hals: HalsConfig,
}

impl NmfArm {
    pub fn fit(
        train: &SurvivalDataset,
        val: &SurvivalDataset,
        rank: usize,
        coxnet: &CoxnetConfig,
        hals: &HalsConfig,
        seed: u64,
    ) -> Result<Self> {
        let f = nmf_fit(train.x(), rank, hals, seed)?;
        let names: Vec<String> = (1..=rank).map(|k| format!("nmf{k}")).collect();
        let train_w = train.with_covariates(f.w, names.clone())?;
        let val_w = nmf_transform(val.x(), f.h.view(), hals)?.w;
        let val_w = val.with_covariates(val_w, names)?;
        let model = coxnet_fit(&train_w, coxnet, Some(&val_w))?;
        Ok(Self { h: f.h, model, hals: *hals })
    }

    pub fn predict(&self, data: &SurvivalDataset) -> Result<Vec<f64>> {
        let w = nmf_transform(data.x(), self.h.view(), &self.hals)?.w;
        Ok(self.model.predict_risk(w.view())?.to_vec())
    }
}

fn select_with<F>(data: &SurvivalDataset, search: &RankSearch, eval: F) -> Result<RankSelection>
where
    F: Fn(&SurvivalDataset, &SurvivalDataset, usize, u64) -> Result<f64>,
{
    if search.candidates.is_empty() {
        return Err(Error::invalid("no candidate ranks"));
    }
    if search.n_repeats == 0 {
        return Err(Error::invalid("n_repeats must be at least 1"));
    }
    if !(search.train_fraction > 0.0 && search.train_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "train fraction must lie in (0, 1), got {}",
            search.train_fraction
        )));
    }
    let mut cells = Vec::with_capacity(search.candidates.len() * search.n_repeats);
    if search.candidates.len() > 1 {
        for repeat in 0..search.n_repeats {
            let split_seed = derive_seed(search.seed, repeat as u64);
            let parts = random_split(
                data.n_samples(),
                &[search.train_fraction, 1.0 - search.train_fraction],
                split_seed,
            );
            let split = data.subset(&parts[0]).and_then(|t| Ok((t, data.subset(&parts[1])?)));
            for &rank in &search.candidates {
                let outcome = split
                    .as_ref()
                    .map_err(|e| Error::invalid(e.to_string()))
                    .and_then(|(train, val)| eval(train, val, rank, derive_seed(split_seed, rank as u64)));
                match outcome {
                    Ok(c) => cells.push(RankCell {
                        repeat,
                        rank,
                        cindex: Some(c),
                        error: None,
                    }),
                    Err(e) => {
                        log::warn!("rank {rank}, repeat {repeat} failed: {e}");
                        cells.push(RankCell {
                            repeat,
                            rank,
                            cindex: None,
                            error: Some(e.to_string()),
                        });
                    }
                }
            }
        }
    }

    let mut mean_cindex = Vec::with_capacity(search.candidates.len());
    let mut best: Option<(usize, f64)> = None;
    for &rank in &search.candidates {
        let scores: Vec<f64> = cells.iter().filter(|c| c.rank == rank).filter_map(|c| c.cindex).collect();
        let failed = search.n_repeats - scores.len();
        let mean = if search.candidates.len() == 1 {
            None
        } else if 2 * failed > search.n_repeats {
            log::warn!("rank {rank} excluded: {failed} of {} splits failed", search.n_repeats);
            None
        } else {
            Some(scores.iter().sum::<f64>() / scores.len() as f64)
        };
        mean_cindex.push((rank, mean));
        if let Some(m) = mean {
            let better = match best {
                None => true,
                Some((r, b)) => m > b || (m == b && rank < r),
            };
            if better {
                best = Some((rank, m));
            }
        }
    }
    let chosen = if search.candidates.len() == 1 {
        search.candidates[0]
    } else {
        best.map(|(r, _)| r)
            .ok_or_else(|| Error::numerical("every candidate rank failed on most splits"))?
    };
    Ok(RankSelection {
        chosen,
        mean_cindex,
        cells,
    })
}
