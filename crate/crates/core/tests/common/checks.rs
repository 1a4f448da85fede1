//! One function per acceptance criterion. Each returns a short summary on
//! success and the first violation on failure.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use coxntf::coxnet::{coxnet_path, lambda_max, CoxnetConfig};
use coxntf::factorization::{ntf_fit, ntf_transform, reconstruct, HalsConfig, Tensor3};
use coxntf::pipeline::{benchmark, train_coxntf, train_ntf_model, Arm, BenchmarkConfig, BenchmarkReport};
use coxntf::surv::{
    harrell_cindex, ipcw_weights, kaplan_meier, time_grid_from_percentiles, uno_cindex, ColumnRoles, Preprocessor,
    Table, TimeGrid, DEFAULT_PERCENTILES,
};
use coxntf::tensorize::{build_event_tensor, build_probability_tensor};

use super::*;

pub type Outcome = Result<String, String>;

/// Datasets that must be present for the cross-dataset criteria.
pub const REQUIRED_DATASETS: [&str; 4] = ["whas500", "gbsg2", "veterans_lung_cancer", "ds3"];
/// Every study dataset the benchmark criteria look for under `data/`.
pub const STUDY_DATASETS: [&str; 9] = [
    "veterans_lung_cancer",
    "flchain",
    "whas500",
    "breast_cancer",
    "aids",
    "gbsg2",
    "ds1",
    "ds2",
    "ds3",
];

pub fn tight_hals() -> HalsConfig {
    HalsConfig {
        max_iter: 20_000,
        tol: 1e-15,
    }
}

// ---------------------------------------------------------------- coxnet

/// Solver coefficients at a fixed penalty against grid minimization of the
/// penalized partial likelihood, for `p <= 2` and `n <= 10`; and exact zeros
/// at `lambda_max`.
pub fn coxnet_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut compared = 0;
    let mut worst: f64 = 0.0;
    for case in 0..24 {
        let p = 1 + case % 2;
        let n = rng.gen_range(4..=10);
        let data = random_dataset(&mut rng, n, p);
        let alpha = [1.0, 0.5, 0.8][case % 3];
        let lmax = lambda_max(&data, alpha);
        if !(lmax > 0.0) {
            continue;
        }
        let lambda = lmax * rng.gen_range(0.1..0.7);
        let config = CoxnetConfig {
            l1_ratio: alpha,
            ..CoxnetConfig::default()
        };
        let path = coxnet_path(&data, &config, Some(&[lambda])).map_err(|e| e.to_string())?;
        let beta = &path.betas[0];
        let x = data.x().to_owned();
        let grid = cox_grid_minimizer(&x, data.time(), data.event(), lambda, alpha, 0.02);
        if grid.iter().any(|b| b.abs() >= 5.0 - 1e-9) {
            return Err(format!("case {case}: grid optimum on the search boundary {grid:?}"));
        }
        for (a, b) in beta.iter().zip(&grid) {
            let d = (a - b).abs();
            worst = worst.max(d);
            if d > 1e-3 {
                return Err(format!(
                    "case {case} (n={n}, p={p}, alpha={alpha}, lambda={lambda:.4}): solver {beta} vs grid {grid:?}"
                ));
            }
        }
        let at_max = coxnet_path(&data, &config, Some(&[lmax])).map_err(|e| e.to_string())?;
        if at_max.betas[0].iter().any(|&b| b != 0.0) {
            return Err(format!("case {case}: nonzero coefficients at lambda_max: {}", at_max.betas[0]));
        }
        compared += 1;
    }
    Ok(format!("{compared} instances, max |beta - grid| = {worst:.2e}, lambda_max gives exact zeros"))
}

// ---------------------------------------------------------- factorization

fn random_factor(rng: &mut ChaCha8Rng, rows: usize, rank: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, rank), |_| rng.gen_range(0.0..1.0))
}

fn unit_columns(mut m: Array2<f64>) -> Array2<f64> {
    for mut col in m.columns_mut() {
        let norm = col.dot(&col).sqrt();
        col /= norm;
    }
    m
}

fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Errors are recomputed from the reconstruction each sweep, so once HALS
/// has converged they jitter at the level of rounding. A rise counts only
/// beyond `1e-12` relative to the initial error.
pub fn first_rise(trace: &[f64]) -> Option<usize> {
    let slack = 1e-12 * trace.first().copied().unwrap_or(0.0);
    (1..trace.len()).find(|&k| trace[k] > trace[k - 1] + slack)
}

/// Rank-one recovery, per-sweep monotone error on 100 random tensors and
/// planted-W recovery by the fixed-basis projection.
pub fn factorization_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);

    let mut worst_rank1: f64 = 0.0;
    for case in 0..20 {
        let (n, p, q) = (rng.gen_range(2..12), rng.gen_range(2..8), rng.gen_range(2..7));
        let w = random_factor(&mut rng, n, 1) + 0.1;
        let h = random_factor(&mut rng, p, 1) + 0.1;
        let qf = random_factor(&mut rng, q, 1) + 0.1;
        let x = reconstruct(w.view(), h.view(), qf.view());
        let f = ntf_fit(&x, 1, &tight_hals(), case).map_err(|e| e.to_string())?;
        worst_rank1 = worst_rank1.max(f.relative_error);
        if !(f.relative_error < 1e-6) {
            return Err(format!("rank-one case {case}: relative error {:e}", f.relative_error));
        }
    }

    for case in 0..100u64 {
        let (n, p, q) = (rng.gen_range(2..10), rng.gen_range(2..8), rng.gen_range(2..6));
        let rank = rng.gen_range(1..=4);
        let data = ndarray::Array3::from_shape_fn((n, p, q), |_| rng.gen_range(0.0..1.0));
        let x = Tensor3::new(data).unwrap();
        let config = HalsConfig {
            max_iter: 60,
            tol: 0.0,
        };
        let f = ntf_fit(&x, rank, &config, case).map_err(|e| e.to_string())?;
        if let Some(k) = first_rise(&f.error_trace) {
            return Err(format!(
                "random tensor {case}: error rose at sweep {k}: {:e} -> {:e}",
                f.error_trace[k - 1],
                f.error_trace[k]
            ));
        }
    }

    let mut worst_w: f64 = 0.0;
    for case in 0..20 {
        let rank = rng.gen_range(1..=3);
        let (n, p, q) = (rng.gen_range(3..15), rng.gen_range(rank + 1..8), rng.gen_range(rank + 1..6));
        let w = random_factor(&mut rng, n, rank);
        let h = unit_columns(random_factor(&mut rng, p, rank) + 0.05);
        let qf = unit_columns(random_factor(&mut rng, q, rank) + 0.05);
        let x = reconstruct(w.view(), h.view(), qf.view());
        let proj = ntf_transform(&x, h.view(), qf.view(), &tight_hals()).map_err(|e| e.to_string())?;
        let d = max_abs_diff(&proj.w, &w);
        worst_w = worst_w.max(d);
        if d > 1e-5 {
            return Err(format!("planted case {case}: max |W - W*| = {d:e}"));
        }
    }
    Ok(format!(
        "rank-1 max relative error {worst_rank1:.1e}; 100 monotone traces; planted W max error {worst_w:.1e}"
    ))
}

// ------------------------------------------------------------- survival

/// Kaplan-Meier, IPCW, Harrell and Uno against brute force on 1000 random
/// instances with `n <= 60`; equality is exact.
pub fn survival_statistics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for case in 0..1000 {
        let n = rng.gen_range(1..=60);
        let (time, event) = random_outcomes(&mut rng, n);

        let km = kaplan_meier(&time, &event).map_err(|e| format!("case {case}: {e}"))?;
        let mut probes: Vec<f64> = time.clone();
        probes.extend(time.iter().map(|t| t + 0.5));
        probes.push(0.5);
        for &u in &probes {
            let (got, want) = (km.eval(u), km_at(&time, &event, u));
            if got != want {
                return Err(format!("case {case}: KM({u}) = {got}, brute force {want}"));
            }
            let (got, want) = (km.eval_left(u), km_before(&time, &event, u));
            if got != want {
                return Err(format!("case {case}: KM({u}-) = {got}, brute force {want}"));
            }
        }

        let w = ipcw_weights(&time, &event).map_err(|e| format!("case {case}: {e}"))?;
        let want = ipcw_oracle(&time, &event);
        if w != want {
            return Err(format!("case {case}: IPCW {w:?} vs brute force {want:?}"));
        }

        let risk: Vec<f64> = (0..n).map(|_| rng.gen_range(0..5) as f64 * 0.25).collect();
        let got = harrell_cindex(&time, &event, &risk).ok();
        let want = harrell_oracle(&time, &event, &risk);
        if got != want {
            return Err(format!("case {case}: Harrell {got:?} vs brute force {want:?}"));
        }

        let m = rng.gen_range(1..=60);
        let (train_time, train_event) = random_outcomes(&mut rng, m);
        let tau = if rng.gen_bool(0.5) {
            None
        } else {
            Some(rng.gen_range(1..=8) as f64)
        };
        let got = uno_cindex(&train_time, &train_event, &time, &event, &risk, tau).ok();
        let want = uno_oracle(&train_time, &train_event, &time, &event, &risk, tau.unwrap_or(f64::INFINITY));
        if got != want {
            return Err(format!("case {case}: Uno {got:?} vs brute force {want:?}"));
        }
    }
    Ok("1000 instances, all four statistics identical".into())
}

// --------------------------------------------------------- tensorization

/// Both tensor builders against loop-by-loop transcriptions of the
/// construction, exact equality, `n <= 5`.
pub fn tensor_transcription() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..500 {
        let n = rng.gen_range(1..=5);
        let p = rng.gen_range(1..=4);
        let q = rng.gen_range(1..=5);
        let x = Array2::from_shape_fn((n, p), |_| rng.gen_range(0.0..3.0));
        let mut interior: Vec<f64> = (0..q - 1).map(|_| rng.gen_range(1..20) as f64).collect();
        interior.sort_by(f64::total_cmp);
        interior.dedup();
        let grid = TimeGrid::from_interior(&interior).map_err(|e| e.to_string())?;
        let time: Vec<f64> = (0..n).map(|_| rng.gen_range(1..22) as f64).collect();
        let event: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.6)).collect();
        let weights: Vec<f64> = if event.iter().any(|&e| e) && rng.gen_bool(0.5) {
            ipcw_weights(&time, &event).map_err(|e| e.to_string())?
        } else {
            (0..n).map(|_| rng.gen_range(0.0..4.0)).collect()
        };

        let got = build_event_tensor(x.view(), &time, &event, &grid, &weights).map_err(|e| e.to_string())?;
        let want = event_tensor_transcription(&x, &event, &time, grid.boundaries(), &weights);
        if got.view() != want.view() {
            return Err(format!("event tensor case {case} differs"));
        }

        let prob = Array2::from_shape_fn((n, grid.n_periods()), |_| rng.gen_range(0.0..1.0));
        let got = build_probability_tensor(x.view(), prob.view()).map_err(|e| e.to_string())?;
        let want = probability_tensor_transcription(&x, &prob);
        if got.view() != want.view() {
            return Err(format!("probability tensor case {case} differs"));
        }
    }
    Ok("500 random instances, both tensors identical".into())
}

// ------------------------------------------------------------- leakage

fn drop_columns(table: &Table, drop: &[&str]) -> Table {
    let keep: Vec<usize> = (0..table.headers().len())
        .filter(|&j| !drop.contains(&table.headers()[j].as_str()))
        .collect();
    let headers = keep.iter().map(|&j| table.headers()[j].clone()).collect();
    let rows = (0..table.n_rows())
        .map(|i| keep.iter().map(|&j| table.row(i)[j].clone()).collect())
        .collect();
    Table::new(headers, rows).unwrap()
}

fn permute_columns(table: &Table, cols: &[&str], seed: u64) -> Table {
    let idx: Vec<usize> = cols.iter().map(|c| table.column_index(c).unwrap()).collect();
    let mut order: Vec<usize> = (0..table.n_rows()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let rows = (0..table.n_rows())
        .map(|i| {
            let mut row = table.row(i).to_vec();
            for &j in &idx {
                row[j] = table.row(order[i])[j].clone();
            }
            row
        })
        .collect();
    Table::new(table.headers().to_vec(), rows).unwrap()
}

/// Scores of held-out rows do not change when their survival columns are
/// permuted or removed.
pub fn no_leakage() -> Outcome {
    let table = Table::from_path(data_path("synthetic.csv")).map_err(|e| e.to_string())?;
    let n = table.n_rows();
    let train_rows: Vec<usize> = (0..n * 3 / 4).collect();
    let test_rows: Vec<usize> = (n * 3 / 4..n).collect();
    let (pre, train) = Preprocessor::fit(&table.select_rows(&train_rows), &ColumnRoles::default())
        .map_err(|e| e.to_string())?;
    let grid = time_grid_from_percentiles(train.time(), &DEFAULT_PERCENTILES).map_err(|e| e.to_string())?;
    let patterns = train_ntf_model(&train, &grid, 3, &HalsConfig::default(), 1).map_err(|e| e.to_string())?;
    let (model, _) = train_coxntf(&train, &patterns, &CoxnetConfig::default(), &HalsConfig::default(), None)
        .map_err(|e| e.to_string())?;

    let test = table.select_rows(&test_rows);
    let score = |t: &Table| -> Result<Vec<f64>, String> {
        let x = pre.transform_covariates(t).map_err(|e| e.to_string())?;
        Ok(model.predict(x.view()).map_err(|e| e.to_string())?.to_vec())
    };
    let base = score(&test)?;
    for seed in 0..5 {
        if score(&permute_columns(&test, &["time", "event"], seed))? != base {
            return Err(format!("scores changed after permuting survival columns (seed {seed})"));
        }
    }
    if score(&drop_columns(&test, &["time", "event"]))? != base {
        return Err("scores changed after removing survival columns".into());
    }
    if score(&drop_columns(&test, &["event"]))? != base {
        return Err("scores changed after removing the event column".into());
    }
    Ok(format!("{} held-out rows scored identically under 5 permutations and column removal", base.len()))
}

// ------------------------------------------------------------ benchmark

/// Loads `data/<name>.csv` if it is bundled.
pub fn bundled(name: &str) -> Option<Table> {
    let path = data_path(&format!("{name}.csv"));
    path.exists().then(|| Table::from_path(&path).expect("bundled dataset must parse"))
}

pub fn run_benchmark(name: &str, table: &Table) -> Result<BenchmarkReport, String> {
    let config = BenchmarkConfig {
        seed: 2024,
        ..BenchmarkConfig::default()
    };
    benchmark(name, table, &ColumnRoles::default(), &config).map_err(|e| e.to_string())
}

pub fn mean_cindex(report: &BenchmarkReport, arm: Arm) -> f64 {
    report.arm(arm).and_then(|a| a.mean_cindex).unwrap_or(f64::NAN)
}

pub fn mean_features(report: &BenchmarkReport, arm: Arm) -> f64 {
    report.arm(arm).and_then(|a| a.mean_selected_features).unwrap_or(f64::NAN)
}

pub fn describe(report: &BenchmarkReport) -> String {
    [Arm::Cox, Arm::Nmf, Arm::Ntf]
        .iter()
        .map(|&a| format!("{} c={:.3} k={:.2}", a.label(), mean_cindex(report, a), mean_features(report, a)))
        .collect::<Vec<_>>()
        .join(", ")
}

/// whas500 means within 0.05 of COX 0.76, NTF 0.75, NMF 0.66.
pub fn whas500_table(report: Option<&BenchmarkReport>, seconds: f64) -> Outcome {
    let r = report.ok_or("data/whas500.csv is not bundled")?;
    let targets = [(Arm::Cox, 0.76), (Arm::Ntf, 0.75), (Arm::Nmf, 0.66)];
    for (arm, want) in targets {
        let got = mean_cindex(r, arm);
        if !((got - want).abs() <= 0.05) {
            return Err(format!("{} mean c-index {got:.3}, expected {want} +- 0.05 ({})", arm.label(), describe(r)));
        }
    }
    Ok(format!("{} in {seconds:.0}s", describe(r)))
}

/// NTF >= NMF and |NTF - COX| <= 0.05 on every bundled study dataset, which
/// must include the required four.
pub fn ordering(reports: &[(String, BenchmarkReport)]) -> Outcome {
    let mut lines = Vec::new();
    for (name, r) in reports {
        let (ntf, nmf, cox) = (mean_cindex(r, Arm::Ntf), mean_cindex(r, Arm::Nmf), mean_cindex(r, Arm::Cox));
        if !(ntf >= nmf) {
            return Err(format!("{name}: NTF {ntf:.3} < NMF {nmf:.3}"));
        }
        if !((ntf - cox).abs() <= 0.05) {
            return Err(format!("{name}: |NTF {ntf:.3} - COX {cox:.3}| > 0.05"));
        }
        lines.push(format!("{name}: NTF {ntf:.3} NMF {nmf:.3} COX {cox:.3}"));
    }
    let missing: Vec<&str> = REQUIRED_DATASETS
        .iter()
        .copied()
        .filter(|d| !reports.iter().any(|(n, _)| n == d))
        .collect();
    if !missing.is_empty() {
        return Err(format!("not bundled: {}; checked {}", missing.join(", "), lines.join("; ")));
    }
    Ok(lines.join("; "))
}

/// Mean selected NTF meta-scores strictly below mean selected NMF factors on
/// every bundled study dataset.
pub fn parsimony(reports: &[(String, BenchmarkReport)]) -> Outcome {
    if reports.is_empty() {
        return Err("no study dataset is bundled".into());
    }
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, r) in reports {
        let (ntf, nmf) = (mean_features(r, Arm::Ntf), mean_features(r, Arm::Nmf));
        let holds = ntf < nmf;
        ok &= holds;
        let rel = if holds { "<" } else { "not <" };
        lines.push(format!("{name}: NTF {ntf:.2} {rel} NMF {nmf:.2}"));
    }
    if ok {
        Ok(lines.join("; "))
    } else {
        Err(lines.join("; "))
    }
}
