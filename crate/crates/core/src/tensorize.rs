//! Covariate tensors indexed `(sample, feature, period)`.
//!
//! The event tensor places each observed event's covariate row, scaled by the
//! square root of its censoring weight, in the period containing its event
//! time. The probability tensor spreads every sample's row over all periods,
//! scaled by the square root of the model probability of an event in each.
//! Square roots make the weights act linearly on the squared reconstruction
//! loss.

use ndarray::{s, Array3, ArrayView2};

use crate::error::{Error, Result};
use crate::factorization::Tensor3;
use crate::surv::TimeGrid;

/// Event tensor for survival outcomes `(time, event)` over `grid`.
///
/// Censored samples leave their slab at zero. `weights` are typically
/// [`ipcw_weights`](crate::surv::ipcw_weights) of the same outcomes.
pub fn build_event_tensor(
    x: ArrayView2<'_, f64>,
    time: &[f64],
    event: &[bool],
    grid: &TimeGrid,
    weights: &[f64],
) -> Result<Tensor3> {
    let (n, p) = x.dim();
    if time.len() != n || event.len() != n || weights.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{n} covariate rows, {} times, {} events, {} weights",
            time.len(),
            event.len(),
            weights.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
        return Err(Error::invalid(format!("weights must be finite and nonnegative, got {w}")));
    }
    let mut out = Array3::zeros((n, p, grid.n_periods()));
    for i in (0..n).filter(|&i| event[i]) {
        let k = grid
            .period_of(time[i])
            .ok_or_else(|| Error::invalid(format!("time[{i}] = {} lies outside the grid", time[i])))?;
        let scale = weights[i].sqrt();
        out.slice_mut(s![i, .., k]).assign(&(&x.row(i) * scale));
    }
    Tensor3::new(out)
}

/// Probability tensor: slab `i`, period `k` holds `sqrt(prob[i, k]) * x[i, :]`.
pub fn build_probability_tensor(x: ArrayView2<'_, f64>, prob: ArrayView2<'_, f64>) -> Result<Tensor3> {
    let (n, p) = x.dim();
    if prob.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "{n} covariate rows but {} probability rows",
            prob.nrows()
        )));
    }
    if let Some(((i, k), v)) = prob.indexed_iter().find(|(_, v)| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::invalid(format!("period probability ({i}, {k}) = {v} is not a nonnegative number")));
    }
    let q = prob.ncols();
    let out = Array3::from_shape_fn((n, p, q), |(i, j, k)| prob[[i, k]].sqrt() * x[[i, j]]);
    Tensor3::new(out)
}
