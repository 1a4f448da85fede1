//! Command-line front end.
//!
//! Every command reads the dataset CSV schema of [`crate::surv::Table`],
//! takes its settings from a [`RunConfig`] (JSON file plus flag overrides)
//! and writes its results under the output directory, each file replaced
//! atomically.

mod config;
mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

pub use config::RunConfig;
pub use output::{write_atomic, CsvDoc};

use crate::error::{Error, Result};
use crate::pipeline::{
    benchmark, cap_ranks, cluster_features, cluster_samples, derive_seed, meta_score_names, random_split,
    select_rank, train_coxntf, train_ntf_model, Arm, BenchmarkReport, CoxntfModel, RankSearch, RankSelection,
};
use crate::surv::{time_grid_from_percentiles, Preprocessor, SurvivalDataset, Table, TimeGrid};
use output::{write_clusters, write_json, write_matrix};

pub const MODEL_FILE: &str = "model.json";
pub const CONFIG_FILE: &str = "config.json";

#[derive(Debug, Parser)]
#[command(name = "coxntf", version, about = "Survival-guided nonnegative tensor factorization")]
pub struct Cli {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads for benchmark repetitions.
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a CoxNTF model and write the model, factors and cluster labels.
    Fit(DataArgs),
    /// Score new rows with a fitted model.
    Predict(PredictArgs),
    /// Repeated-split comparison of the COX, NMF and NTF arms.
    Benchmark(BenchmarkArgs),
    /// Choose the rank by validation c-index over random splits.
    RankSelect(DataArgs),
    /// Write pattern loadings, temporal profiles and hazard ratios.
    ExportPatterns(ModelArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset CSV.
    #[arg(long, value_name = "PATH")]
    pub data: Option<PathBuf>,
    /// Fixed rank; skips the rank search.
    #[arg(long)]
    pub rank: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Model file or the directory `fit` wrote.
    #[arg(long, value_name = "PATH")]
    pub model: PathBuf,
    /// CSV with the training feature columns; `time` and `event` are ignored.
    #[arg(long, value_name = "PATH")]
    pub data: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Dataset CSVs; repeat for several datasets.
    #[arg(long, value_name = "PATH")]
    pub data: Vec<PathBuf>,
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long)]
    pub repeats: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, value_name = "PATH")]
    pub model: PathBuf,
}

/// Everything `fit` learns, as stored in `model.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub preprocessor: Preprocessor,
    pub model: CoxntfModel,
    /// Present when the rank was searched.
    pub rank_selection: Option<RankSelection>,
    pub relative_error: f64,
    pub degenerate_components: Vec<usize>,
}

impl ModelFile {
    pub fn load(path: &Path) -> Result<Self> {
        let path = if path.is_dir() { path.join(MODEL_FILE) } else { path.to_path_buf() };
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Error::invalid(format!("cannot read model {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::invalid(format!("bad model file {}: {e}", path.display())))
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Errors are printed to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Effective configuration: the config file, then flag overrides.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(o) = &cli.out {
        config.out = o.clone();
    }
    if let Some(w) = cli.workers {
        config.workers = Some(w);
    }
    match &cli.command {
        Command::Fit(a) | Command::RankSelect(a) => {
            if let Some(d) = &a.data {
                config.dataset = Some(d.clone());
            }
            if a.rank.is_some() {
                config.rank = a.rank;
            }
        }
        Command::Benchmark(a) => {
            if let [single] = a.data.as_slice() {
                config.dataset = Some(single.clone());
            }
            if a.rank.is_some() {
                config.rank = a.rank;
            }
            if let Some(r) = a.repeats {
                config.n_repeats = r;
            }
        }
        _ => {}
    }
    config.validate()?;
    Ok(config)
}

pub fn execute(cli: &Cli) -> Result<()> {
    let config = resolve_config(cli)?;
    match &cli.command {
        Command::Fit(_) => cmd_fit(&config).map(|_| ()),
        Command::Predict(a) => cmd_predict(&config, &a.model, &a.data),
        Command::Benchmark(a) => {
            let paths = if a.data.len() > 1 {
                a.data.clone()
            } else {
                vec![config.dataset()?.to_path_buf()]
            };
            cmd_benchmark(&config, &paths).map(|_| ())
        }
        Command::RankSelect(_) => cmd_rank_select(&config).map(|_| ()),
        Command::ExportPatterns(a) => cmd_export_patterns(&config, &a.model),
    }
}

fn load_dataset(config: &RunConfig) -> Result<(Preprocessor, SurvivalDataset)> {
    let path = config.dataset()?;
    let table = Table::from_path(path)?;
    Preprocessor::fit(&table, &config.columns)
}

fn rank_search(config: &RunConfig, p: usize, seed: u64) -> RankSearch {
    RankSearch {
        candidates: cap_ranks(&config.rank_candidates, p),
        n_repeats: config.rank_repeats,
        train_fraction: config.rank_train_fraction,
        seed,
    }
}

fn save_config(config: &RunConfig) -> Result<()> {
    write_atomic(&config.out.join(CONFIG_FILE), config.to_json()?.as_bytes())
}

fn row_labels(n: usize) -> Vec<String> {
    (1..=n).map(|i| i.to_string()).collect()
}

fn period_cells(grid: &TimeGrid, k: usize) -> [String; 3] {
    let b = grid.boundaries();
    [(k + 1).to_string(), b[k].to_string(), b[k + 1].to_string()]
}

/// Fits the model on the configured dataset and writes `model.json`,
/// `H.csv`, `Q.csv`, `W.csv`, `risk.csv`, `sample_clusters.csv`,
/// `feature_clusters.csv` and the effective `config.json`.
pub fn cmd_fit(config: &RunConfig) -> Result<ModelFile> {
    let (pre, data) = load_dataset(config)?;
    let (train, validation) = if config.validation_fraction > 0.0 {
        let v = config.validation_fraction;
        let parts = random_split(data.n_samples(), &[1.0 - v, v], derive_seed(config.seed, 0));
        (data.subset(&parts[0])?, Some(data.subset(&parts[1])?))
    } else {
        (data.clone(), None)
    };
    let grid = time_grid_from_percentiles(train.time(), &config.percentiles)?;

    let (rank, rank_selection) = match config.rank {
        Some(r) => (r, None),
        None => {
            let search = rank_search(config, data.n_features(), derive_seed(config.seed, 1));
            let sel = select_rank(&data, &grid, &search, &config.coxnet, &config.hals)?;
            log::info!("rank {} chosen from {:?}", sel.chosen, sel.mean_cindex);
            (sel.chosen, Some(sel))
        }
    };

    let patterns = train_ntf_model(&train, &grid, rank, &config.hals, derive_seed(config.seed, 2))?;
    let degenerate_components: Vec<usize> =
        patterns.degenerate.iter().enumerate().filter(|(_, d)| **d).map(|(k, _)| k + 1).collect();
    if !degenerate_components.is_empty() {
        log::warn!("degenerate components: {degenerate_components:?}");
    }
    let (mut model, _) = train_coxntf(&train, &patterns, &config.coxnet, &config.hals, validation.as_ref())?;
    model.stage1.scaling = Some(pre.clone());

    let w = model.meta_scores(data.x())?;
    let risk = model.stage2.predict_risk(w.view())?;
    let names = meta_score_names(rank);
    let out = &config.out;
    let rows = row_labels(data.n_samples());
    let periods: Vec<String> = (1..=grid.n_periods()).map(|k| k.to_string()).collect();

    write_matrix(&out.join("H.csv"), "feature", data.feature_names(), &names, model.h.view())?;
    write_matrix(&out.join("Q.csv"), "period", &periods, &names, model.q.view())?;
    write_matrix(&out.join("W.csv"), "row", &rows, &names, w.view())?;
    let mut doc = CsvDoc::new(&["row", "risk"])?;
    for (label, r) in rows.iter().zip(risk.iter()) {
        doc.row([label.clone(), r.to_string()])?;
    }
    doc.save(&out.join("risk.csv"))?;
    write_clusters(&out.join("sample_clusters.csv"), "row", &rows, &cluster_samples(w.view()))?;
    write_clusters(
        &out.join("feature_clusters.csv"),
        "feature",
        data.feature_names(),
        &cluster_features(model.h.view()),
    )?;

    let file = ModelFile {
        preprocessor: pre,
        model,
        rank_selection,
        relative_error: patterns.relative_error,
        degenerate_components,
    };
    write_json(&out.join(MODEL_FILE), &file)?;
    save_config(config)?;
    Ok(file)
}

/// Writes `predictions.csv` with the risk score and meta-scores of every row
/// of `data`. Only covariate columns are read.
pub fn cmd_predict(config: &RunConfig, model: &Path, data: &Path) -> Result<()> {
    let file = ModelFile::load(model)?;
    let table = Table::from_path(data)?;
    let target = config.out.join("predictions.csv");
    if table.n_rows() == 0 {
        log::info!("{} has no rows", data.display());
        return write_atomic(&target, b"");
    }
    let x = file.preprocessor.transform_covariates(&table)?;
    let w = file.model.meta_scores(x.view())?;
    let risk = file.model.stage2.predict_risk(w.view())?;
    let mut header = vec!["row".to_owned(), "risk".to_owned()];
    header.extend(meta_score_names(file.model.rank));
    let mut doc = CsvDoc::new(&header)?;
    for (i, (r, row)) in risk.iter().zip(w.rows()).enumerate() {
        let mut cells = vec![(i + 1).to_string(), r.to_string()];
        cells.extend(row.iter().map(|v| v.to_string()));
        doc.row(cells)?;
    }
    doc.save(&target)
}

/// Runs the benchmark on each dataset, writing `benchmark_<name>.json` per
/// dataset and one `summary.csv` with a row per dataset and arm.
pub fn cmd_benchmark(config: &RunConfig, paths: &[PathBuf]) -> Result<Vec<BenchmarkReport>> {
    let bench = config.benchmark_config();
    let mut reports = Vec::with_capacity(paths.len());
    for path in paths {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into());
        let table = Table::from_path(path)?;
        log::info!("{name}: {} rows, {} repetitions", table.n_rows(), bench.n_repeats);
        let report = benchmark(&name, &table, &config.columns, &bench)?;
        write_json(&config.out.join(format!("benchmark_{name}.json")), &report)?;
        reports.push(report);
    }
    summary_csv(&reports)?.save(&config.out.join("summary.csv"))?;
    save_config(config)?;
    Ok(reports)
}

/// Long-form table: dataset, shape and, per arm, mean selected features and
/// mean test c-index.
pub fn summary_csv(reports: &[BenchmarkReport]) -> Result<CsvDoc> {
    let mut doc = CsvDoc::new(&[
        "dataset",
        "samples",
        "features",
        "arm",
        "mean_features",
        "mean_cindex",
        "repetitions",
        "failed",
    ])?;
    let fmt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
    for r in reports {
        for a in &r.arms {
            doc.row([
                r.dataset.clone(),
                r.n_samples.to_string(),
                r.n_raw_features.to_string(),
                a.arm.label().to_owned(),
                fmt(a.mean_selected_features),
                fmt(a.mean_cindex),
                a.cindex.len().to_string(),
                a.failures.len().to_string(),
            ])?;
        }
    }
    Ok(doc)
}

/// Writes `rank_selection.json` and `rank_selection.csv`.
pub fn cmd_rank_select(config: &RunConfig) -> Result<RankSelection> {
    let (_, data) = load_dataset(config)?;
    let grid = time_grid_from_percentiles(data.time(), &config.percentiles)?;
    let search = rank_search(config, data.n_features(), derive_seed(config.seed, 1));
    let sel = select_rank(&data, &grid, &search, &config.coxnet, &config.hals)?;
    let mut doc = CsvDoc::new(&["rank", "mean_cindex", "failed_splits", "chosen"])?;
    for (rank, mean) in &sel.mean_cindex {
        let failed = sel.cells.iter().filter(|c| c.rank == *rank && c.cindex.is_none()).count();
        doc.row([
            rank.to_string(),
            mean.map_or_else(String::new, |m| m.to_string()),
            failed.to_string(),
            (*rank == sel.chosen).to_string(),
        ])?;
    }
    doc.save(&config.out.join("rank_selection.csv"))?;
    write_json(&config.out.join("rank_selection.json"), &sel)?;
    save_config(config)?;
    Ok(sel)
}

/// Writes `pattern_loadings.csv` (covariates ranked by loading within each
/// component), `temporal_profiles.csv` and `hazard_ratios.csv` (stage-1
/// `exp(beta)` per covariate).
pub fn cmd_export_patterns(config: &RunConfig, model: &Path) -> Result<()> {
    let file = ModelFile::load(model)?;
    let m = &file.model;
    let features = &m.stage1.feature_names;
    let out = &config.out;

    let mut doc = CsvDoc::new(&["component", "position", "feature", "loading"])?;
    for k in 0..m.rank {
        let mut order: Vec<usize> = (0..m.h.nrows()).collect();
        order.sort_by(|&a, &b| m.h[[b, k]].total_cmp(&m.h[[a, k]]).then(a.cmp(&b)));
        for (pos, &j) in order.iter().enumerate() {
            doc.row([(k + 1).to_string(), (pos + 1).to_string(), features[j].clone(), m.h[[j, k]].to_string()])?;
        }
    }
    doc.save(&out.join("pattern_loadings.csv"))?;

    let mut doc = CsvDoc::new(&["component", "period", "start", "end", "weight"])?;
    for k in 0..m.rank {
        for l in 0..m.grid.n_periods() {
            let [period, start, end] = period_cells(&m.grid, l);
            doc.row([(k + 1).to_string(), period, start, end, m.q[[l, k]].to_string()])?;
        }
    }
    doc.save(&out.join("temporal_profiles.csv"))?;

    let mut doc = CsvDoc::new(&["feature", "beta", "hazard_ratio"])?;
    for ((name, hr), b) in m.stage1.hazard_ratios().into_iter().zip(m.stage1.beta.iter()) {
        doc.row([name, b.to_string(), hr.to_string()])?;
    }
    doc.save(&out.join("hazard_ratios.csv"))
}

/// Meta-scores of `table` under a fitted model file.
pub fn meta_scores_of(file: &ModelFile, table: &Table) -> Result<Array2<f64>> {
    let x = file.preprocessor.transform_covariates(table)?;
    file.model.meta_scores(x.view())
}

/// Arm labels in report order.
pub fn arm_labels(arms: &[Arm]) -> Vec<&'static str> {
    arms.iter().map(|a| a.label()).collect()
}
