use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coxnet::CoxnetConfig;
use crate::error::{Error, Result};
use crate::factorization::HalsConfig;
use crate::pipeline::{Arm, BenchmarkConfig, RankPolicy};
use crate::surv::{ColumnRoles, DEFAULT_PERCENTILES};

/// Settings shared by every command. Missing fields take their defaults, so
/// `{}` is a valid config file; the effective config is written next to each
/// command's output and can be fed back with `--config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Dataset CSV. Default: none, must be given here or with `--data`.
    pub dataset: Option<PathBuf>,
    /// Name of the outcome columns and columns forced to be categorical.
    /// Default: `time`, `event`, none.
    pub columns: ColumnRoles,
    /// Percentiles of training times used as period boundaries.
    /// Default: 10, 25, 50, 75, 90.
    pub percentiles: Vec<f64>,
    /// Fixed factorization rank. Default: none, the rank is searched.
    pub rank: Option<usize>,
    /// Ranks tried by the search. Default: 2 to 8, capped at the feature count.
    pub rank_candidates: Vec<usize>,
    /// Random splits per candidate in the search. Default: 5.
    pub rank_repeats: usize,
    /// Training share of each search split; the rest scores the candidate.
    /// The benchmark derives it from `fractions` instead. Default: 0.75.
    pub rank_train_fraction: f64,
    /// Search the rank inside every benchmark repetition instead of once per
    /// dataset. Default: false.
    pub rank_per_repetition: bool,
    /// Elastic-net settings. Default: l1_ratio 0.5, 100 penalties,
    /// lambda_min_ratio by shape, tol 1e-7, 100000 sweeps.
    pub coxnet: CoxnetConfig,
    /// Factorization settings. Default: 200 sweeps, tol 1e-6.
    pub hals: HalsConfig,
    /// Share of rows `fit` holds out to choose the penalties. With 0 every
    /// row is used for training and the middle of the path is taken.
    /// Default: 0.2.
    pub validation_fraction: f64,
    /// Benchmark repetitions. Default: 30.
    pub n_repeats: usize,
    /// Benchmark train, validation and test shares. Default: 0.6, 0.2, 0.2.
    pub fractions: [f64; 3],
    /// Benchmark arms. Default: COX, NMF, NTF.
    pub arms: Vec<Arm>,
    /// Master seed. Default: 0.
    pub seed: u64,
    /// Output directory. Default: `coxntf-out`.
    pub out: PathBuf,
    /// Benchmark worker threads. Default: none, one per core.
    pub workers: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            columns: ColumnRoles::default(),
            percentiles: DEFAULT_PERCENTILES.to_vec(),
            rank: None,
            rank_candidates: (2..=8).collect(),
            rank_repeats: 5,
            rank_train_fraction: 0.75,
            rank_per_repetition: false,
            coxnet: CoxnetConfig::default(),
            hals: HalsConfig::default(),
            validation_fraction: 0.2,
            n_repeats: 30,
            fractions: [0.6, 0.2, 0.2],
            arms: vec![Arm::Cox, Arm::Nmf, Arm::Ntf],
            seed: 0,
            out: PathBuf::from("coxntf-out"),
            workers: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::invalid(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::invalid(format!("bad config {}: {e}", path.display())))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn dataset(&self) -> Result<&Path> {
        self.dataset
            .as_deref()
            .ok_or_else(|| Error::invalid("no dataset given (use --data or the `dataset` config field)"))
    }

    pub fn validate(&self) -> Result<()> {
        self.coxnet.validate()?;
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::invalid(format!(
                "validation_fraction must lie in [0, 1), got {}",
                self.validation_fraction
            )));
        }
        if self.rank == Some(0) {
            return Err(Error::invalid("rank must be at least 1"));
        }
        if self.rank.is_none() && (self.rank_candidates.is_empty() || self.rank_candidates.contains(&0)) {
            return Err(Error::invalid("rank_candidates must be nonempty and positive"));
        }
        if !(self.rank_train_fraction > 0.0 && self.rank_train_fraction < 1.0) {
            return Err(Error::invalid(format!(
                "rank_train_fraction must lie in (0, 1), got {}",
                self.rank_train_fraction
            )));
        }
        if self.rank_repeats == 0 {
            return Err(Error::invalid("rank_repeats must be at least 1"));
        }
        Ok(())
    }

    pub fn rank_policy(&self) -> RankPolicy {
        match self.rank {
            Some(rank) => RankPolicy::Fixed { rank },
            None => RankPolicy::Select {
                candidates: self.rank_candidates.clone(),
                n_repeats: self.rank_repeats,
                per_repetition: self.rank_per_repetition,
            },
        }
    }

    pub fn benchmark_config(&self) -> BenchmarkConfig {
        BenchmarkConfig {
            arms: self.arms.clone(),
            n_repeats: self.n_repeats,
            fractions: self.fractions,
            rank_policy: self.rank_policy(),
            percentiles: self.percentiles.clone(),
            coxnet: self.coxnet.clone(),
            hals: self.hals,
            seed: self.seed,
            workers: self.workers,
        }
    }
}
