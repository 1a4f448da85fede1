//! Elastic-net penalized Cox proportional hazards regression.
//!
//! The solver minimizes
//!
//! ```text
//! -(1/n) l(beta) + lambda * (alpha * |beta|_1 + (1 - alpha) / 2 * |beta|_2^2)
//! ```
//!
//! where `l` is the Breslow partial log-likelihood, by cyclic coordinate
//! descent along a geometric regularization path with warm starts. Each
//! coordinate takes a proximal Newton step on its exact second derivative,
//! backtracked until the objective does not increase, so the objective is
//! monotone across sweeps.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::surv::{harrell_cindex, Preprocessor, StepFunction, SurvivalDataset, TimeGrid};

const MAX_HALVINGS: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoxnetConfig {
    /// Elastic-net mixing in `(0, 1]`; 1 is the lasso.
    pub l1_ratio: f64,
    pub path_length: usize,
    /// Smallest penalty as a fraction of `lambda_max`. `None` picks 0.01 when
    /// there are more samples than features and 0.05 otherwise.
    pub lambda_min_ratio: Option<f64>,
    /// Convergence threshold on the largest coefficient change in a sweep.
    pub tol: f64,
    /// Coordinate sweeps allowed per penalty value.
    pub max_iter: usize,
}

impl Default for CoxnetConfig {
    fn default() -> Self {
        Self {
            l1_ratio: 0.5,
            path_length: 100,
            lambda_min_ratio: None,
            tol: 1e-7,
            max_iter: 100_000,
        }
    }
}

impl CoxnetConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.l1_ratio > 0.0 && self.l1_ratio <= 1.0) {
            return Err(Error::invalid(format!("l1_ratio must lie in (0, 1], got {}", self.l1_ratio)));
        }
        if self.path_length == 0 {
            return Err(Error::invalid("path_length must be at least 1"));
        }
        if let Some(r) = self.lambda_min_ratio {
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::invalid(format!("lambda_min_ratio must lie in (0, 1], got {r}")));
            }
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::invalid("tol must be positive and max_iter at least 1"));
        }
        Ok(())
    }
}

/// Survival data sorted by time with tied times grouped, laid out by column
/// for the coordinate updates.
struct CoxProblem {
    n: usize,
    /// `columns[j][pos]`: feature `j` of the sample at sorted position `pos`.
    columns: Vec<Vec<f64>>,
    /// Tied-time groups in ascending time order: `(start, end, events)` over
    /// sorted positions. The risk set of a group is `start..n`.
    groups: Vec<(usize, usize, usize)>,
    /// Sorted positions of the observed events.
    event_positions: Vec<usize>,
    /// Per feature, the sum over observed events.
    event_sums: Vec<f64>,
}

impl CoxProblem {
    fn new(x: ArrayView2<'_, f64>, time: &[f64], event: &[bool]) -> Self {
        let n = time.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| time[a].total_cmp(&time[b]));
        let columns: Vec<Vec<f64>> = x
            .columns()
            .into_iter()
            .map(|col| order.iter().map(|&i| col[i]).collect())
            .collect();
        let mut groups = Vec::new();
        let mut pos = 0;
        while pos < n {
            let t = time[order[pos]];
            let mut end = pos;
            let mut d = 0;
            while end < n && time[order[end]] == t {
                d += usize::from(event[order[end]]);
                end += 1;
            }
            groups.push((pos, end, d));
            pos = end;
        }
        let event_positions: Vec<usize> = (0..n).filter(|&p| event[order[p]]).collect();
        let event_sums = columns
            .iter()
            .map(|c| event_positions.iter().map(|&p| c[p]).sum())
            .collect();
        Self {
            n,
            columns,
            groups,
            event_positions,
            event_sums,
        }
    }

    fn n_features(&self) -> usize {
        self.columns.len()
    }

    /// Breslow partial log-likelihood of the linear predictor `eta` (sorted).
    fn log_likelihood(&self, eta: &[f64]) -> f64 {
        let (w, shift) = weights(eta);
        let event_eta: f64 = self.event_positions.iter().map(|&p| eta[p]).sum();
        self.log_likelihood_from(&w, shift, event_eta)
    }

    /// Same, from `w = exp(eta - shift)` and the sum of `eta` over events.
    fn log_likelihood_from(&self, w: &[f64], shift: f64, event_eta: f64) -> f64 {
        let mut s0 = 0.0;
        let mut ll = event_eta;
        for &(start, end, d) in self.groups.iter().rev() {
            s0 += w[start..end].iter().sum::<f64>();
            if d > 0 {
                ll -= d as f64 * (s0.ln() + shift);
            }
        }
        ll
    }

    /// Gradient and second derivative of `-(1/n) l` along feature `j`.
    fn coordinate_derivatives(&self, eta: &[f64], j: usize) -> (f64, f64) {
        self.derivatives_from(&weights(eta).0, j)
    }

    fn derivatives_from(&self, w: &[f64], j: usize) -> (f64, f64) {
        let x = &self.columns[j];
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        let (mut grad, mut hess) = (0.0, 0.0);
        for &(start, end, d) in self.groups.iter().rev() {
            for pos in start..end {
                let wx = w[pos] * x[pos];
                s0 += w[pos];
                s1 += wx;
                s2 += wx * x[pos];
            }
            if d > 0 {
                let mean = s1 / s0;
                grad += d as f64 * mean;
                hess += d as f64 * (s2 / s0 - mean * mean).max(0.0);
            }
        }
        let n = self.n as f64;
        ((grad - self.event_sums[j]) / n, hess / n)
    }
}

/// `exp(eta - max(eta))` and the shift used.
fn weights(eta: &[f64]) -> (Vec<f64>, f64) {
    let shift = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let shift = if shift.is_finite() { shift } else { 0.0 };
    (eta.iter().map(|e| (e - shift).exp()).collect(), shift)
}

fn penalty(beta: &[f64], lambda: f64, l1_ratio: f64) -> f64 {
    let l1: f64 = beta.iter().map(|b| b.abs()).sum();
    let l2: f64 = beta.iter().map(|b| b * b).sum();
    lambda * (l1_ratio * l1 + 0.5 * (1.0 - l1_ratio) * l2)
}

fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// Penalized negative partial log-likelihood (scaled by `1/n`) at `beta`.
pub fn penalized_objective(data: &SurvivalDataset, beta: ArrayView1<'_, f64>, lambda: f64, l1_ratio: f64) -> f64 {
    let problem = CoxProblem::new(data.x(), data.time(), data.event());
    let beta = beta.to_vec();
    let eta = linear_predictor(&problem, &beta);
    -problem.log_likelihood(&eta) / problem.n as f64 + penalty(&beta, lambda, l1_ratio)
}

fn linear_predictor(problem: &CoxProblem, beta: &[f64]) -> Vec<f64> {
    let mut eta = vec![0.0; problem.n];
    for (col, &b) in problem.columns.iter().zip(beta) {
        if b != 0.0 {
            for (e, x) in eta.iter_mut().zip(col) {
                *e += b * x;
            }
        }
    }
    eta
}

/// Smallest penalty whose solution is identically zero.
pub fn lambda_max(data: &SurvivalDataset, l1_ratio: f64) -> f64 {
    let problem = CoxProblem::new(data.x(), data.time(), data.event());
    lambda_max_of(&problem, l1_ratio)
}

fn lambda_max_of(problem: &CoxProblem, l1_ratio: f64) -> f64 {
    let eta = vec![0.0; problem.n];
    (0..problem.n_features())
        .map(|j| problem.coordinate_derivatives(&eta, j).0.abs())
        .fold(0.0, f64::max)
        / l1_ratio
}

/// Coordinate-descent state for one penalty path. The risk weights
/// `exp(eta - shift)` are carried along and refreshed once per sweep.
struct Solver<'a> {
    problem: &'a CoxProblem,
    l1_ratio: f64,
    beta: Vec<f64>,
    eta: Vec<f64>,
    w: Vec<f64>,
    shift: f64,
    event_eta: f64,
    loss: f64,
    trial: Vec<f64>,
}

impl<'a> Solver<'a> {
    fn new(problem: &'a CoxProblem, l1_ratio: f64) -> Self {
        let mut solver = Self {
            problem,
            l1_ratio,
            beta: vec![0.0; problem.n_features()],
            eta: vec![0.0; problem.n],
            w: Vec::new(),
            shift: 0.0,
            event_eta: 0.0,
            loss: 0.0,
            trial: vec![0.0; problem.n],
        };
        solver.refresh();
        solver.loss = -problem.log_likelihood_from(&solver.w, solver.shift, solver.event_eta) / problem.n as f64;
        solver
    }

    /// Recomputes the risk weights from `eta`. The tracked loss is left as
    /// is so that reported objectives only ever move through accepted steps.
    fn refresh(&mut self) {
        let (w, shift) = weights(&self.eta);
        self.w = w;
        self.shift = shift;
        self.event_eta = self.problem.event_positions.iter().map(|&p| self.eta[p]).sum();
    }

    fn objective(&self, lambda: f64) -> f64 {
        self.loss + penalty(&self.beta, lambda, self.l1_ratio)
    }

    /// Updates coordinate `j` by a proximal Newton step, halved until the
    /// objective does not increase. Steps shorter than `min_step` are not
    /// tried; near the optimum their gain is below rounding error. Returns
    /// the absolute coefficient change.
    fn update(&mut self, j: usize, lambda: f64, min_step: f64) -> f64 {
        let (grad, hess) = self.problem.derivatives_from(&self.w, j);
        let b = self.beta[j];
        let l1 = lambda * self.l1_ratio;
        let l2 = lambda * (1.0 - self.l1_ratio);
        let denom = hess + l2;
        let target = if denom > 0.0 { soft_threshold(hess * b - grad, l1) / denom } else { 0.0 };
        let step = target - b;
        if step == 0.0 {
            return 0.0;
        }

        let current = self.objective(lambda);
        let x = &self.problem.columns[j];
        let n = self.problem.n as f64;
        let mut t = 1.0;
        for _ in 0..MAX_HALVINGS {
            if t * step.abs() < min_step {
                break;
            }
            let cand = b + t * step;
            let delta = cand - b;
            let unit = delta.exp();
            for ((tw, w), &xi) in self.trial.iter_mut().zip(&self.w).zip(x) {
                *tw = if xi == 0.0 {
                    *w
                } else if xi == 1.0 {
                    w * unit
                } else {
                    w * (delta * xi).exp()
                };
            }
            let event_eta = self.event_eta + delta * self.problem.event_sums[j];
            let loss = -self.problem.log_likelihood_from(&self.trial, self.shift, event_eta) / n;
            self.beta[j] = cand;
            if loss + penalty(&self.beta, lambda, self.l1_ratio) <= current {
                std::mem::swap(&mut self.w, &mut self.trial);
                for (e, xi) in self.eta.iter_mut().zip(x) {
                    *e += delta * xi;
                }
                self.event_eta = event_eta;
                self.loss = loss;
                return delta.abs();
            }
            self.beta[j] = b;
            t *= 0.5;
        }
        0.0
    }

    fn sweep(&mut self, coords: impl Iterator<Item = usize>, lambda: f64, min_step: f64) -> f64 {
        self.refresh();
        coords.map(|j| self.update(j, lambda, min_step)).fold(0.0, f64::max)
    }

    /// Runs to convergence at `lambda`, alternating full sweeps with sweeps
    /// over the active set. Returns `(converged, objective after each sweep)`.
    fn solve(&mut self, lambda: f64, tol: f64, max_iter: usize) -> (bool, Vec<f64>) {
        let p = self.problem.n_features();
        let mut trace = Vec::new();
        let mut sweeps = 0;
        while sweeps < max_iter {
            let change = self.sweep(0..p, lambda, tol);
            sweeps += 1;
            trace.push(self.objective(lambda));
            if change < tol {
                return (true, trace);
            }
            let active: Vec<usize> = (0..p).filter(|&j| self.beta[j] != 0.0).collect();
            while sweeps < max_iter {
                let change = self.sweep(active.iter().copied(), lambda, tol);
                sweeps += 1;
                trace.push(self.objective(lambda));
                if change < tol {
                    break;
                }
            }
        }
        (false, trace)
    }
}

/// Solutions along a decreasing sequence of penalties.
#[derive(Debug, Clone)]
pub struct CoxnetPath {
    pub l1_ratio: f64,
    pub lambdas: Vec<f64>,
    pub betas: Vec<Array1<f64>>,
    pub converged: Vec<bool>,
    /// Objective value after every coordinate sweep, per penalty.
    pub objective_traces: Vec<Vec<f64>>,
}

/// Fits the regularization path. With `lambdas = None` the path is geometric
/// from `lambda_max` down to `lambda_max * lambda_min_ratio`.
pub fn coxnet_path(data: &SurvivalDataset, config: &CoxnetConfig, lambdas: Option<&[f64]>) -> Result<CoxnetPath> {
    config.validate()?;
    let problem = CoxProblem::new(data.x(), data.time(), data.event());
    let lambdas = match lambdas {
        Some(l) => {
            if l.is_empty() || l.iter().any(|v| !(*v >= 0.0)) {
                return Err(Error::invalid("penalties must be nonnegative and nonempty"));
            }
            l.to_vec()
        }
        None => default_path(&problem, config),
    };

    let mut solver = Solver::new(&problem, config.l1_ratio);
    let mut path = CoxnetPath {
        l1_ratio: config.l1_ratio,
        lambdas: lambdas.clone(),
        betas: Vec::with_capacity(lambdas.len()),
        converged: Vec::with_capacity(lambdas.len()),
        objective_traces: Vec::with_capacity(lambdas.len()),
    };
    for &lambda in &lambdas {
        let (ok, trace) = solver.solve(lambda, config.tol, config.max_iter);
        if !ok {
            log::warn!("coordinate descent did not converge at lambda = {lambda:e} within {} sweeps", config.max_iter);
        }
        path.betas.push(Array1::from(solver.beta.clone()));
        path.converged.push(ok);
        path.objective_traces.push(trace);
    }
    Ok(path)
}

fn default_path(problem: &CoxProblem, config: &CoxnetConfig) -> Vec<f64> {
    let mut lmax = lambda_max_of(problem, config.l1_ratio);
    if !(lmax > 0.0) {
        log::warn!("score is zero at beta = 0 for every feature; using a unit penalty scale");
        lmax = 1.0;
    }
    let ratio = config
        .lambda_min_ratio
        .unwrap_or(if problem.n > problem.n_features() { 0.01 } else { 0.05 });
    let len = config.path_length;
    if len == 1 {
        return vec![lmax];
    }
    (0..len)
        .map(|k| lmax * ratio.powf(k as f64 / (len - 1) as f64))
        .collect()
}

/// Fitted elastic-net Cox model at one selected penalty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoxnetModel {
    pub feature_names: Vec<String>,
    pub beta: Array1<f64>,
    pub l1_ratio: f64,
    pub lambda: f64,
    pub lambda_path: Vec<f64>,
    /// Breslow estimate of the baseline cumulative hazard at `beta`.
    pub baseline_cum_hazard: StepFunction,
    pub converged: bool,
    /// Preprocessing that produced the training covariates, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<Preprocessor>,
}

/// Fits the path and keeps one penalty: the one maximizing Harrell's c-index
/// on `validation` when given (ties toward the larger penalty), otherwise
/// the middle of the path by index.
pub fn coxnet_fit(
    data: &SurvivalDataset,
    config: &CoxnetConfig,
    validation: Option<&SurvivalDataset>,
) -> Result<CoxnetModel> {
    let path = coxnet_path(data, config, None)?;
    let mut chosen = path.lambdas.len() / 2;
    if let Some(val) = validation {
        if val.n_features() != data.n_features() {
            return Err(Error::DimensionMismatch(format!(
                "validation has {} features, training has {}",
                val.n_features(),
                data.n_features()
            )));
        }
        let mut best: Option<(usize, f64)> = None;
        for (k, beta) in path.betas.iter().enumerate() {
            let risk = val.x().dot(beta);
            match harrell_cindex(val.time(), val.event(), risk.as_slice().expect("contiguous")) {
                Ok(c) if best.is_none_or(|(_, b)| c > b) => best = Some((k, c)),
                Ok(_) => {}
                Err(e) => {
                    log::warn!("validation c-index unavailable ({e}); using the path midpoint");
                    best = None;
                    break;
                }
            }
        }
        if let Some((k, _)) = best {
            chosen = k;
        }
    }
    model_at(data, &path, chosen)
}

/// Builds the model for path entry `index`, estimating the baseline hazard.
pub fn model_at(data: &SurvivalDataset, path: &CoxnetPath, index: usize) -> Result<CoxnetModel> {
    let beta = path.betas[index].clone();
    let baseline_cum_hazard = breslow_baseline(data, beta.view())?;
    Ok(CoxnetModel {
        feature_names: data.feature_names().to_vec(),
        l1_ratio: path.l1_ratio,
        lambda: path.lambdas[index],
        lambda_path: path.lambdas.clone(),
        baseline_cum_hazard,
        converged: path.converged[index],
        beta,
        scaling: None,
    })
}

/// Breslow estimator of the baseline cumulative hazard:
/// `H0(t) = sum over event times t_k <= t of d_k / sum_{j at risk} exp(eta_j)`.
pub fn breslow_baseline(data: &SurvivalDataset, beta: ArrayView1<'_, f64>) -> Result<StepFunction> {
    let eta = data.x().dot(&beta);
    let time = data.time();
    let event = data.event();
    let mut order: Vec<usize> = (0..time.len()).collect();
    order.sort_by(|&a, &b| time[b].total_cmp(&time[a]));

    // descending pass accumulates the risk-set denominators
    let mut increments: Vec<(f64, f64)> = Vec::new();
    let mut s0 = 0.0;
    let mut pos = 0;
    while pos < order.len() {
        let t = time[order[pos]];
        let mut d = 0usize;
        while pos < order.len() && time[order[pos]] == t {
            s0 += eta[order[pos]].exp();
            d += usize::from(event[order[pos]]);
            pos += 1;
        }
        if d > 0 {
            increments.push((t, d as f64 / s0));
        }
    }
    if !increments.iter().all(|(_, h)| h.is_finite()) {
        return Err(Error::numerical("baseline hazard overflowed; linear predictor too large"));
    }
    increments.reverse();
    let mut cum = 0.0;
    let (knots, values) = increments
        .into_iter()
        .map(|(t, h)| {
            cum += h;
            (t, cum)
        })
        .unzip();
    StepFunction::new(knots, values, 0.0)
}

impl CoxnetModel {
    pub fn n_features(&self) -> usize {
        self.beta.len()
    }

    /// Linear predictor `X beta` for each row.
    pub fn predict_risk(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        if x.ncols() != self.beta.len() {
            return Err(Error::DimensionMismatch(format!(
                "model has {} features, input has {} columns",
                self.beta.len(),
                x.ncols()
            )));
        }
        Ok(x.dot(&self.beta))
    }

    fn eta(&self, x: ArrayView1<'_, f64>) -> Result<f64> {
        if x.len() != self.beta.len() {
            return Err(Error::DimensionMismatch(format!(
                "model has {} features, row has {}",
                self.beta.len(),
                x.len()
            )));
        }
        Ok(x.dot(&self.beta))
    }

    /// `S(u | x) = exp(-H0(u) exp(eta(x)))`. `H0` is held constant past its
    /// last knot.
    pub fn survival_probability(&self, x: ArrayView1<'_, f64>, u: f64) -> Result<f64> {
        Ok(survival_from(self.baseline_cum_hazard.eval(u), self.eta(x)?))
    }

    /// Probability that the event falls in each grid period,
    /// `S(s[k-1] | x) - S(s[k] | x)`, with `S(+inf | x)` taken at the last
    /// baseline knot.
    pub fn period_event_probability(&self, x: ArrayView1<'_, f64>, grid: &TimeGrid) -> Result<Vec<f64>> {
        let eta = self.eta(x)?;
        let h0 = &self.baseline_cum_hazard;
        let surv: Vec<f64> = grid
            .boundaries()
            .iter()
            .map(|&b| {
                if b == 0.0 {
                    1.0
                } else if b.is_infinite() {
                    survival_from(h0.last_value(), eta)
                } else {
                    survival_from(h0.eval(b), eta)
                }
            })
            .collect();
        Ok(surv.windows(2).map(|w| (w[0] - w[1]).max(0.0)).collect())
    }

    /// Period probabilities for every row, `n x q`.
    pub fn period_event_probabilities(&self, x: ArrayView2<'_, f64>, grid: &TimeGrid) -> Result<Array2<f64>> {
        let mut out = Array2::zeros((x.nrows(), grid.n_periods()));
        for (i, row) in x.rows().into_iter().enumerate() {
            let p = self.period_event_probability(row, grid)?;
            out.row_mut(i).assign(&Array1::from(p));
        }
        Ok(out)
    }

    /// Number of coefficients that are exactly nonzero.
    pub fn n_selected_features(&self) -> usize {
        self.beta.iter().filter(|&&b| b != 0.0).count()
    }

    /// `exp(beta)` per feature.
    pub fn hazard_ratios(&self) -> Vec<(String, f64)> {
        self.feature_names
            .iter()
            .cloned()
            .zip(self.beta.iter().map(|b| b.exp()))
            .collect()
    }
}

fn survival_from(cum_hazard: f64, eta: f64) -> f64 {
    if cum_hazard == 0.0 {
        return 1.0;
    }
    (-cum_hazard * eta.exp()).exp()
}
