use serde::{Deserialize, Serialize};

use super::check_times;
use crate::error::{Error, Result};

/// Right-continuous step function with left limits.
///
/// `values[k]` holds on `[knots[k], knots[k + 1])`; below the first knot the
/// function equals `value_before_first_knot`, past the last knot it stays at
/// the last value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    knots: Vec<f64>,
    values: Vec<f64>,
    value_before_first_knot: f64,
}

impl StepFunction {
    pub fn new(knots: Vec<f64>, values: Vec<f64>, value_before_first_knot: f64) -> Result<Self> {
        if knots.len() != values.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} knots but {} values",
                knots.len(),
                values.len()
            )));
        }
        if knots.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("step function knots must be strictly increasing"));
        }
        Ok(Self {
            knots,
            values,
            value_before_first_knot,
        })
    }

    pub fn constant(value: f64) -> Self {
        Self {
            knots: Vec::new(),
            values: Vec::new(),
            value_before_first_knot: value,
        }
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_before_first_knot(&self) -> f64 {
        self.value_before_first_knot
    }

    /// Value at `u` (right-continuous).
    pub fn eval(&self, u: f64) -> f64 {
        match self.knots.partition_point(|&k| k <= u) {
            0 => self.value_before_first_knot,
            idx => self.values[idx - 1],
        }
    }

    /// Left limit at `u`, i.e. the value just before `u`.
    pub fn eval_left(&self, u: f64) -> f64 {
        match self.knots.partition_point(|&k| k < u) {
            0 => self.value_before_first_knot,
            idx => self.values[idx - 1],
        }
    }

    /// Value past the last knot.
    pub fn last_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(self.value_before_first_knot)
    }

    /// Smallest strictly positive value the function attains.
    pub(crate) fn min_positive(&self) -> Option<f64> {
        std::iter::once(self.value_before_first_knot)
            .chain(self.values.iter().copied())
            .filter(|&v| v > 0.0)
            .min_by(f64::total_cmp)
    }
}

/// Product-limit estimate of the survival function.
///
/// Knots sit at the distinct times with at least one event. Observations
/// tied with an event time stay in that time's risk set whether censored or
/// not.
pub fn kaplan_meier(time: &[f64], event: &[bool]) -> Result<StepFunction> {
    check_times(time, event.len(), "event")?;
    let mut order: Vec<usize> = (0..time.len()).collect();
    order.sort_by(|&a, &b| time[a].total_cmp(&time[b]));

    let mut knots = Vec::new();
    let mut values = Vec::new();
    let mut surv = 1.0;
    let mut at_risk = time.len();
    let mut pos = 0;
    while pos < order.len() {
        let t = time[order[pos]];
        let mut end = pos;
        let mut deaths = 0usize;
        while end < order.len() && time[order[end]] == t {
            deaths += usize::from(event[order[end]]);
            end += 1;
        }
        if deaths > 0 {
            surv *= 1.0 - deaths as f64 / at_risk as f64;
            knots.push(t);
            values.push(surv);
        }
        at_risk -= end - pos;
        pos = end;
    }
    StepFunction::new(knots, values, 1.0)
}

/// Inverse probability of censoring weights.
///
/// The censoring survival curve `G` is the Kaplan-Meier estimate with the
/// roles of event and censoring swapped. An observed event at `t` gets weight
/// `1 / G(t-)`; censored rows get weight zero. A zero `G(t-)` is replaced by
/// the smallest positive value `G` attains.
pub fn ipcw_weights(time: &[f64], event: &[bool]) -> Result<Vec<f64>> {
    let censored: Vec<bool> = event.iter().map(|&e| !e).collect();
    let g = kaplan_meier(time, &censored)?;
    let floor = g.min_positive();
    let mut clamped = 0usize;
    let weights = time
        .iter()
        .zip(event)
        .map(|(&t, &e)| {
            if !e {
                return 0.0;
            }
            let mut g_left = g.eval_left(t);
            if g_left <= 0.0 {
                clamped += 1;
                g_left = floor.unwrap_or(1.0);
            }
            1.0 / g_left
        })
        .collect();
    if clamped > 0 {
        log::warn!("censoring survival reached zero before {clamped} event(s); clamped to its smallest positive value");
    }
    Ok(weights)
}
