use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::coxntf::{train_coxntf, train_ntf_model};
use super::rank::{select_nmf_rank, select_rank, NmfArm, RankSearch, RankSelection};
use super::{derive_seed, random_split};
use crate::coxnet::{coxnet_fit, CoxnetConfig};
use crate::error::{Error, Result};
use crate::factorization::HalsConfig;
use crate::surv::{time_grid_from_percentiles, uno_cindex, ColumnRoles, Preprocessor, SurvivalDataset, Table, TimeGrid, DEFAULT_PERCENTILES};

// seed streams under each repetition seed
const STREAM_RANK: u64 = 0x5241_4e4b;
const STREAM_NMF: u64 = 1;
const STREAM_NTF: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Arm {
    /// Elastic-net Cox on the encoded covariates.
    Cox,
    /// Elastic-net Cox on unsupervised NMF meta-scores.
    Nmf,
    /// The two-stage CoxNTF model.
    Ntf,
}

impl Arm {
    pub fn label(self) -> &'static str {
        match self {
            Arm::Cox => "COX",
            Arm::Nmf => "NMF",
            Arm::Ntf => "NTF",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum RankPolicy {
    Fixed { rank: usize },
    /// Validation c-index search over `candidates`, either once on the first
    /// repetition's training and validation rows or inside every repetition.
    Select {
        candidates: Vec<usize>,
        n_repeats: usize,
        per_repetition: bool,
    },
}

impl Default for RankPolicy {
    fn default() -> Self {
        RankPolicy::Select {
            candidates: (2..=8).collect(),
            n_repeats: 5,
            per_repetition: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkConfig {
    pub arms: Vec<Arm>,
    pub n_repeats: usize,
    /// Train, validation and test shares.
    pub fractions: [f64; 3],
    pub rank_policy: RankPolicy,
    pub percentiles: Vec<f64>,
    pub coxnet: CoxnetConfig,
    pub hals: HalsConfig,
    pub seed: u64,
    /// Worker threads for repetitions; `None` uses every core.
    pub workers: Option<usize>,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            arms: vec![Arm::Cox, Arm::Nmf, Arm::Ntf],
            n_repeats: 30,
            fractions: [0.6, 0.2, 0.2],
            rank_policy: RankPolicy::default(),
            percentiles: DEFAULT_PERCENTILES.to_vec(),
            coxnet: CoxnetConfig::default(),
            hals: HalsConfig::default(),
            seed: 0,
            workers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionFailure {
    pub repetition: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmReport {
    pub arm: Arm,
    /// Mean over successful repetitions.
    pub mean_cindex: Option<f64>,
    pub mean_selected_features: Option<f64>,
    /// One entry per repetition; `None` where the repetition failed.
    pub cindex: Vec<Option<f64>>,
    pub selected_features: Vec<Option<usize>>,
    pub ranks: Vec<Option<usize>>,
    pub failures: Vec<RepetitionFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub dataset: String,
    pub n_samples: usize,
    pub n_raw_features: usize,
    pub config: BenchmarkConfig,
    pub repetition_seeds: Vec<u64>,
    /// Truncation rule for the test c-index.
    pub tau: String,
    /// Rank searches run once per dataset, keyed by arm.
    pub rank_selection: Vec<(Arm, RankSelection)>,
    pub arms: Vec<ArmReport>,
}

impl BenchmarkReport {
    pub fn arm(&self, arm: Arm) -> Option<&ArmReport> {
        self.arms.iter().find(|a| a.arm == arm)
    }
}

struct Partition {
    train: SurvivalDataset,
    validation: SurvivalDataset,
    test: SurvivalDataset,
    grid: TimeGrid,
}

fn partition(table: &Table, roles: &ColumnRoles, config: &BenchmarkConfig, seed: u64) -> Result<Partition> {
    let parts = random_split(table.n_rows(), &config.fractions, seed);
    let (pre, train) = Preprocessor::fit(&table.select_rows(&parts[0]), roles)?;
    let validation = pre.transform(&table.select_rows(&parts[1]))?;
    let test = pre.transform(&table.select_rows(&parts[2]))?;
    let grid = time_grid_from_percentiles(train.time(), &config.percentiles)?;
    Ok(Partition {
        train,
        validation,
        test,
        grid,
    })
}

struct ArmOutcome {
    cindex: f64,
    selected: usize,
    rank: Option<usize>,
}

/// Candidate ranks clamped to `1..=p`, sorted, without duplicates.
pub(crate) fn cap_ranks(candidates: &[usize], p: usize) -> Vec<usize> {
    let mut out: Vec<usize> = candidates.iter().map(|&r| r.clamp(1, p.max(1))).collect();
    out.sort_unstable();
    out.dedup();
    out
}

fn rank_search(config: &BenchmarkConfig, candidates: &[usize], n_repeats: usize, p: usize, seed: u64) -> RankSearch {
    let [train, val, _] = config.fractions;
    RankSearch {
        candidates: cap_ranks(candidates, p),
        n_repeats,
        train_fraction: train / (train + val),
        seed,
    }
}

fn choose_rank(arm: Arm, part: &Partition, config: &BenchmarkConfig, seed: u64) -> Result<RankSelection> {
    let (candidates, n_repeats) = match &config.rank_policy {
        RankPolicy::Fixed { rank } => (vec![*rank], 1),
        RankPolicy::Select {
            candidates, n_repeats, ..
        } => (candidates.clone(), *n_repeats),
    };
    let pooled = part.train.stack(&part.validation)?;
    let search = rank_search(config, &candidates, n_repeats, pooled.n_features(), seed);
    match arm {
        Arm::Ntf => select_rank(&pooled, &part.grid, &search, &config.coxnet, &config.hals),
        _ => select_nmf_rank(&pooled, &search, &config.coxnet, &config.hals),
    }
}

fn run_arm(arm: Arm, part: &Partition, rank: Option<usize>, config: &BenchmarkConfig, seed: u64) -> Result<ArmOutcome> {
    let (train, val, test) = (&part.train, &part.validation, &part.test);
    let cindex = |risk: &[f64]| uno_cindex(train.time(), train.event(), test.time(), test.event(), risk, None);
    match arm {
        Arm::Cox => {
            let model = coxnet_fit(train, &config.coxnet, Some(val))?;
            let risk = model.predict_risk(test.x())?;
            Ok(ArmOutcome {
                cindex: cindex(risk.as_slice().unwrap())?,
                selected: model.n_selected_features(),
                rank: None,
            })
        }
        Arm::Nmf => {
            let rank = rank.expect("NMF arm needs a rank");
            let nmf = NmfArm::fit(train, val, rank, &config.coxnet, &config.hals, derive_seed(seed, STREAM_NMF))?;
            let risk = nmf.predict(test)?;
            Ok(ArmOutcome {
                cindex: cindex(&risk)?,
                selected: nmf.model.n_selected_features(),
                rank: Some(rank),
            })
        }
        Arm::Ntf => {
            let rank = rank.expect("NTF arm needs a rank");
            let patterns = train_ntf_model(train, &part.grid, rank, &config.hals, derive_seed(seed, STREAM_NTF))?;
            let (model, _) = train_coxntf(train, &patterns, &config.coxnet, &config.hals, Some(val))?;
            let risk = model.predict(test.x())?;
            Ok(ArmOutcome {
                cindex: cindex(risk.as_slice().unwrap())?,
                selected: model.n_selected_features(),
                rank: Some(rank),
            })
        }
    }
}

fn validate(config: &BenchmarkConfig) -> Result<()> {
    if config.n_repeats == 0 {
        return Err(Error::invalid("n_repeats must be at least 1"));
    }
    if config.arms.is_empty() {
        return Err(Error::invalid("no benchmark arms configured"));
    }
    if config.fractions.iter().any(|f| !(*f > 0.0)) || (config.fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "split fractions must be positive and sum to 1, got {:?}",
            config.fractions
        )));
    }
    match &config.rank_policy {
        RankPolicy::Fixed { rank } if *rank == 0 => Err(Error::invalid("fixed rank must be at least 1")),
        RankPolicy::Select {
            candidates, n_repeats, ..
        } if candidates.is_empty() || *n_repeats == 0 => {
            Err(Error::invalid("rank search needs candidates and at least one split"))
        }
        _ => Ok(()),
    }
}

/// Repeats random train/validation/test partitions of `table` and scores
/// each configured arm by Uno's c-index on the test rows.
///
/// Scaling and dummy coding are fitted on each training part only. Every arm
/// sees the same partition within a repetition. Repetitions run in parallel
/// but each depends only on its derived seed, so the report is identical for
/// any worker count.
pub fn benchmark(name: &str, table: &Table, roles: &ColumnRoles, config: &BenchmarkConfig) -> Result<BenchmarkReport> {
    validate(config)?;
    let seeds: Vec<u64> = (0..config.n_repeats as u64).map(|r| derive_seed(config.seed, r)).collect();

    let once = !matches!(config.rank_policy, RankPolicy::Select { per_repetition: true, .. });
    let mut rank_selection = Vec::new();
    let mut fixed_ranks: Vec<(Arm, usize)> = Vec::new();
    let latent_arms: Vec<Arm> = config.arms.iter().copied().filter(|a| *a != Arm::Cox).collect();
    if once && !latent_arms.is_empty() {
        let first = partition(table, roles, config, seeds[0])?;
        for &arm in &latent_arms {
            let sel = choose_rank(arm, &first, config, derive_seed(config.seed, STREAM_RANK))?;
            log::info!("{name}: {} rank {} (validation means {:?})", arm.label(), sel.chosen, sel.mean_cindex);
            fixed_ranks.push((arm, sel.chosen));
            rank_selection.push((arm, sel));
        }
    }

    let run_one = |rep: usize| -> Vec<(Arm, Result<ArmOutcome>)> {
        let seed = seeds[rep];
        let part = match partition(table, roles, config, seed) {
            Ok(p) => p,
            Err(e) => {
                let msg = e.to_string();
                return config.arms.iter().map(|&a| (a, Err(Error::invalid(msg.clone())))).collect();
            }
        };
        let out: Vec<(Arm, Result<ArmOutcome>)> = config
            .arms
            .iter()
            .map(|&arm| {
                let rank = if arm == Arm::Cox {
                    Ok(None)
                } else if let Some(&(_, r)) = fixed_ranks.iter().find(|(a, _)| *a == arm) {
                    Ok(Some(r))
                } else {
                    choose_rank(arm, &part, config, derive_seed(seed, STREAM_RANK)).map(|s| Some(s.chosen))
                };
                (arm, rank.and_then(|r| run_arm(arm, &part, r, config, seed)))
            })
            .collect();
        let summary: Vec<String> = out
            .iter()
            .map(|(a, r)| match r {
                Ok(o) => format!("{}={:.3}", a.label(), o.cindex),
                Err(_) => format!("{}=failed", a.label()),
            })
            .collect();
        log::info!("{name}: repetition {}/{} {}", rep + 1, config.n_repeats, summary.join(" "));
        out
    };

    let results: Vec<Vec<(Arm, Result<ArmOutcome>)>> = match config.workers {
        Some(1) => (0..config.n_repeats).map(run_one).collect(),
        workers => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers.unwrap_or(0))
                .build()
                .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
            pool.install(|| (0..config.n_repeats).into_par_iter().map(run_one).collect())
        }
    };

    let arms = config
        .arms
        .iter()
        .enumerate()
        .map(|(slot, &arm)| {
            let mut report = ArmReport {
                arm,
                mean_cindex: None,
                mean_selected_features: None,
                cindex: Vec::with_capacity(config.n_repeats),
                selected_features: Vec::with_capacity(config.n_repeats),
                ranks: Vec::with_capacity(config.n_repeats),
                failures: Vec::new(),
            };
            for (rep, per_arm) in results.iter().enumerate() {
                match &per_arm[slot].1 {
                    Ok(o) => {
                        report.cindex.push(Some(o.cindex));
                        report.selected_features.push(Some(o.selected));
                        report.ranks.push(o.rank);
                    }
                    Err(e) => {
                        log::warn!("{name}: {} failed in repetition {}: {e}", arm.label(), rep + 1);
                        report.cindex.push(None);
                        report.selected_features.push(None);
                        report.ranks.push(None);
                        report.failures.push(RepetitionFailure {
                            repetition: rep,
                            message: e.to_string(),
                        });
                    }
                }
            }
            report.mean_cindex = mean(report.cindex.iter().flatten().copied());
            report.mean_selected_features = mean(report.selected_features.iter().flatten().map(|&v| v as f64));
            report
        })
        .collect();

    Ok(BenchmarkReport {
        dataset: name.to_owned(),
        n_samples: table.n_rows(),
        n_raw_features: table.headers().len().saturating_sub(2),
        config: config.clone(),
        repetition_seeds: seeds,
        tau: "largest test event time".into(),
        rank_selection,
        arms,
    })
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}
