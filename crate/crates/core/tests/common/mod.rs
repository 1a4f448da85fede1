//! Brute-force reference implementations and random instance generators
//! shared by the integration suites and the acceptance run.
#![allow(dead_code)]

pub mod checks;

use ndarray::{Array1, Array2, Array3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use coxntf::surv::SurvivalDataset;

pub fn data_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

/// Random right-censored outcomes. Times come from a small integer range so
/// ties between events and censorings are common.
pub fn random_outcomes(rng: &mut ChaCha8Rng, n: usize) -> (Vec<f64>, Vec<bool>) {
    let levels = rng.gen_range(2..=n.max(2) + 3);
    let time: Vec<f64> = (0..n).map(|_| rng.gen_range(1..=levels) as f64).collect();
    let p_event = rng.gen_range(0.2..1.0);
    let event: Vec<bool> = (0..n).map(|_| rng.gen_bool(p_event)).collect();
    (time, event)
}

/// Survival probability at `u` by the product-limit formula, evaluated
/// directly from its definition: the product over distinct event times
/// `s <= u` of `1 - d(s) / n(s)`.
pub fn km_at(time: &[f64], event: &[bool], u: f64) -> f64 {
    let mut event_times: Vec<f64> = time.iter().zip(event).filter(|(_, &e)| e).map(|(&t, _)| t).collect();
    event_times.sort_by(f64::total_cmp);
    event_times.dedup();
    let mut s = 1.0;
    for &t in event_times.iter().filter(|&&t| t <= u) {
        let d = time.iter().zip(event).filter(|(&ti, &e)| e && ti == t).count();
        let at_risk = time.iter().filter(|&&ti| ti >= t).count();
        s *= 1.0 - d as f64 / at_risk as f64;
    }
    s
}

/// Same curve just before `u`.
pub fn km_before(time: &[f64], event: &[bool], u: f64) -> f64 {
    let mut event_times: Vec<f64> = time.iter().zip(event).filter(|(_, &e)| e).map(|(&t, _)| t).collect();
    event_times.sort_by(f64::total_cmp);
    event_times.dedup();
    let mut s = 1.0;
    for &t in event_times.iter().filter(|&&t| t < u) {
        let d = time.iter().zip(event).filter(|(&ti, &e)| e && ti == t).count();
        let at_risk = time.iter().filter(|&&ti| ti >= t).count();
        s *= 1.0 - d as f64 / at_risk as f64;
    }
    s
}

fn flipped(event: &[bool]) -> Vec<bool> {
    event.iter().map(|e| !e).collect()
}

fn smallest_positive(time: &[f64], event: &[bool]) -> f64 {
    time.iter()
        .map(|&t| km_at(time, event, t))
        .filter(|&v| v > 0.0)
        .fold(1.0, f64::min)
}

/// `1 / G(t-)` for events, 0 for censored rows, with `G` the censoring
/// survival curve; a zero `G` is replaced by its smallest positive value.
pub fn ipcw_oracle(time: &[f64], event: &[bool]) -> Vec<f64> {
    let cens = flipped(event);
    let floor = smallest_positive(time, &cens);
    time.iter()
        .zip(event)
        .map(|(&t, &e)| {
            if !e {
                return 0.0;
            }
            let g = km_before(time, &cens, t);
            1.0 / if g > 0.0 { g } else { floor }
        })
        .collect()
}

/// Harrell's c-index over all ordered pairs, as a ratio of doubled counts.
pub fn harrell_oracle(time: &[f64], event: &[bool], risk: &[f64]) -> Option<f64> {
    let (mut num, mut den) = (0u64, 0u64);
    for i in 0..time.len() {
        for j in 0..time.len() {
            if event[i] && time[i] < time[j] {
                den += 2;
                num += match risk[i].partial_cmp(&risk[j]).unwrap() {
                    std::cmp::Ordering::Greater => 2,
                    std::cmp::Ordering::Equal => 1,
                    std::cmp::Ordering::Less => 0,
                };
            }
        }
    }
    (den > 0).then(|| num as f64 / den as f64)
}

/// Uno's c-index: pairs anchored at test event `i` with `t[i] <= tau` carry
/// weight `G(t[i])^-2`, `G` from the training censoring distribution.
/// Pair tallies are kept per anchor and weighted once.
pub fn uno_oracle(
    train_time: &[f64],
    train_event: &[bool],
    time: &[f64],
    event: &[bool],
    risk: &[f64],
    tau: f64,
) -> Option<f64> {
    let cens = flipped(train_event);
    let floor = smallest_positive(train_time, &cens);
    let n = time.len();
    let mut conc = vec![0u64; n];
    let mut comp = vec![0u64; n];
    for i in 0..n {
        for j in 0..n {
            if event[i] && time[i] <= tau && time[i] < time[j] {
                comp[i] += 2;
                conc[i] += if risk[i] > risk[j] {
                    2
                } else if risk[i] == risk[j] {
                    1
                } else {
                    0
                };
            }
        }
    }
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        if comp[i] == 0 {
            continue;
        }
        let g = km_at(train_time, &cens, time[i]);
        let g = if g > 0.0 { g } else { floor };
        let w = 1.0 / (g * g);
        num += w * conc[i] as f64;
        den += w * comp[i] as f64;
    }
    (den > 0.0).then(|| num / den)
}

/// `-(1/n)` Breslow partial log-likelihood plus the elastic-net penalty,
/// computed pair by pair.
pub fn cox_objective(x: &Array2<f64>, time: &[f64], event: &[bool], beta: &[f64], lambda: f64, alpha: f64) -> f64 {
    let n = time.len();
    let eta: Vec<f64> = (0..n)
        .map(|i| beta.iter().enumerate().map(|(j, b)| b * x[[i, j]]).sum())
        .collect();
    let e: Vec<f64> = eta.iter().map(|v| v.exp()).collect();
    let mut ll = 0.0;
    for i in 0..n {
        if event[i] {
            let risk_set: f64 = (0..n).filter(|&j| time[j] >= time[i]).map(|j| e[j]).sum();
            ll += eta[i] - risk_set.ln();
        }
    }
    let l1: f64 = beta.iter().map(|b| b.abs()).sum();
    let l2: f64 = beta.iter().map(|b| b * b).sum();
    -ll / n as f64 + lambda * (alpha * l1 + 0.5 * (1.0 - alpha) * l2)
}

/// Grid minimizer of [`cox_objective`] over `[-5, 5]^p` for `p <= 2`: a
/// full grid at `coarse` spacing, then a `1e-4` grid around the best point.
pub fn cox_grid_minimizer(
    x: &Array2<f64>,
    time: &[f64],
    event: &[bool],
    lambda: f64,
    alpha: f64,
    coarse: f64,
) -> Vec<f64> {
    let p = x.ncols();
    let f = |b: &[f64]| cox_objective(x, time, event, b, lambda, alpha);
    let axis = |lo: f64, hi: f64, step: f64| -> Vec<f64> {
        let k = ((hi - lo) / step).round() as usize;
        (0..=k).map(|i| lo + i as f64 * step).collect()
    };
    let best_on = |axes: &[Vec<f64>]| -> Vec<f64> {
        let mut best = (f64::INFINITY, vec![0.0; p]);
        match axes {
            [a] => {
                for &u in a {
                    let v = f(&[u]);
                    if v < best.0 {
                        best = (v, vec![u]);
                    }
                }
            }
            [a, b] => {
                for &u in a {
                    for &w in b {
                        let v = f(&[u, w]);
                        if v < best.0 {
                            best = (v, vec![u, w]);
                        }
                    }
                }
            }
            _ => unreachable!("grid search supports one or two coefficients"),
        }
        best.1
    };
    if p == 1 {
        return best_on(&[axis(-5.0, 5.0, 1e-4)]);
    }
    let start = best_on(&vec![axis(-5.0, 5.0, coarse); p]);
    let fine: Vec<Vec<f64>> = start
        .iter()
        .map(|&c| axis((c - 2.0 * coarse).max(-5.0), (c + 2.0 * coarse).min(5.0), 1e-4))
        .collect();
    best_on(&fine)
}

/// Random dataset with positive times, at least one event and covariates in
/// `[0, 1)`.
pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, p: usize) -> SurvivalDataset {
    loop {
        let x = Array2::from_shape_fn((n, p), |_| rng.gen_range(0.0..1.0));
        let time: Vec<f64> = (0..n).map(|_| rng.gen_range(1..=3 * n) as f64).collect();
        let event: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.7)).collect();
        if event.iter().any(|&e| e) {
            let names = (0..p).map(|j| format!("x{j}")).collect();
            return SurvivalDataset::new(x, Array1::from(time), event, names).unwrap();
        }
    }
}

/// Event tensor written as the textbook loops: zero tensor, copy each event
/// row into the period `s(k-1) < t <= s(k)`, then scale every sample's slab
/// by the square root of its weight.
pub fn event_tensor_transcription(
    x: &Array2<f64>,
    c: &[bool],
    t: &[f64],
    s: &[f64],
    ipcw: &[f64],
) -> Array3<f64> {
    let (n, p) = x.dim();
    let q = s.len() - 1;
    let mut tensor = Array3::<f64>::zeros((n, p, q));
    for i in 1..=n {
        if c[i - 1] {
            for k in 1..=q {
                if s[k - 1] < t[i - 1] && t[i - 1] <= s[k] {
                    for j in 0..p {
                        tensor[[i - 1, j, k - 1]] = x[[i - 1, j]];
                    }
                }
            }
        }
    }
    for i in 1..=n {
        let w = ipcw[i - 1].sqrt();
        for j in 0..p {
            for k in 0..q {
                tensor[[i - 1, j, k]] *= w;
            }
        }
    }
    tensor
}

/// Probability tensor as loops: `X(i,:,k) = P(i,k)^(1/2) * X(i,:)`.
pub fn probability_tensor_transcription(x: &Array2<f64>, prob: &Array2<f64>) -> Array3<f64> {
    let (n, p) = x.dim();
    let q = prob.ncols();
    let mut tensor = Array3::<f64>::zeros((n, p, q));
    for i in 0..n {
        for k in 0..q {
            for j in 0..p {
                tensor[[i, j, k]] = prob[[i, k]].sqrt() * x[[i, j]];
            }
        }
    }
    tensor
}

/// Three groups of identical rows: the first pattern alone, the second
/// alone, and both. Hazards are high, low and in between, an ordering no
/// single nonnegative component can reproduce but two components can.
/// Identical rows share their meta-scores, so every rank that orders the
/// groups correctly reaches exactly the same c-index.
pub fn planted_rank_two(rng: &mut ChaCha8Rng, n: usize) -> SurvivalDataset {
    let h1 = [1.0, 0.8, 0.6, 0.0, 0.0, 0.0];
    let h2 = [0.0, 0.0, 0.0, 0.7, 1.0, 0.5];
    let rates = [1.0, 0.05, 0.2];
    let p = h1.len();
    let mut x = Array2::zeros((n, p));
    let mut time = Vec::with_capacity(n);
    let mut event = Vec::with_capacity(n);
    for i in 0..n {
        let group = i % 3;
        for j in 0..p {
            x[[i, j]] = match group {
                0 => h1[j],
                1 => h2[j],
                _ => h1[j] + h2[j],
            };
        }
        let t = -rng.gen_range(f64::EPSILON..1.0f64).ln() / rates[group];
        let censor = rng.gen_range(2.0..20.0);
        time.push(t.min(censor).max(1e-3));
        event.push(t <= censor);
    }
    let names = (0..p).map(|j| format!("x{j}")).collect();
    SurvivalDataset::new(x, Array1::from(time), event, names).unwrap()
}
