//! Nonnegative CP factorization of order-3 tensors (and its order-2 special
//! case, NMF) by Fast-HALS, plus projection of new data onto frozen factors.
//!
//! The model is `X ~ sum_k w_k o h_k o q_k`. Columns of `H` and `Q` are kept at
//! unit Euclidean norm, so all scale lives in the meta-scores `W`.
//!
//! Each sweep updates the columns of `W`, then `H`, then `Q`, each with the
//! closed-form HALS step
//!
//! ```text
//! f_k <- max(0, f_k + (M_k - F G_k) / G_kk)
//! ```
//!
//! where `M` is the matricized tensor times the Khatri-Rao product of the
//! other two factors and `G` the Hadamard product of their Gram matrices.

mod tensor;

pub use tensor::Tensor3;

use ndarray::{Array2, ArrayView2, Axis, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use self::tensor::khatri_rao;

/// Floor applied to a pattern column that collapses to zero, so that it can
/// still be normalized.
pub const ZERO_COLUMN_FLOOR: f64 = 1e-16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HalsConfig {
    pub max_iter: usize,
    /// Stop once a sweep improves the relative error by less than this.
    pub tol: f64,
}

impl Default for HalsConfig {
    fn default() -> Self {
        Self { max_iter: 200, tol: 1e-6 }
    }
}

/// Result of [`ntf_fit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factorization {
    /// Meta-scores, `n x r`.
    pub w: Array2<f64>,
    /// Covariate patterns, `p x r`, unit columns.
    pub h: Array2<f64>,
    /// Temporal patterns, `q x r`, unit columns.
    pub q: Array2<f64>,
    pub rank: usize,
    /// `|X - [[W, H, Q]]|_F / |X|_F` after the last sweep.
    pub relative_error: f64,
    pub iterations: usize,
    pub seed: u64,
    /// Relative error after every sweep.
    pub error_trace: Vec<f64>,
    /// Components whose meta-scores vanished or whose patterns needed the
    /// zero-column floor in the last sweep.
    pub degenerate: Vec<bool>,
}

/// Result of [`nmf_fit`]: `X ~ W H^T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFactorization {
    pub w: Array2<f64>,
    pub h: Array2<f64>,
    pub rank: usize,
    pub relative_error: f64,
    pub iterations: usize,
    pub seed: u64,
    pub error_trace: Vec<f64>,
    pub degenerate: Vec<bool>,
}

/// Meta-scores of new data under frozen patterns.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub w: Array2<f64>,
    pub relative_error: f64,
    pub iterations: usize,
    pub error_trace: Vec<f64>,
}

/// Fits a rank-`rank` nonnegative CP model to `tensor`.
///
/// `H` and `Q` start uniform in `[0, 1)` from `seed` (then normalized) and
/// `W` starts at zero, so the first sweep computes `W` from the random
/// patterns.
pub fn ntf_fit(tensor: &Tensor3, rank: usize, config: &HalsConfig, seed: u64) -> Result<Factorization> {
    check_fit_inputs(tensor, rank, config)?;
    let (n, p, q_len) = tensor.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = random_unit_columns(&mut rng, p, rank);
    let mut q = random_unit_columns(&mut rng, q_len, rank);
    let mut w = Array2::zeros((n, rank));
    let run = run_hals(tensor, &mut w, &mut h, &mut q, Modes::All, config);
    let degenerate = degenerate_flags(&w, &run.guarded);
    Ok(Factorization {
        w,
        h,
        q,
        rank,
        relative_error: run.trace.last().copied().unwrap_or(1.0),
        iterations: run.trace.len(),
        seed,
        error_trace: run.trace,
        degenerate,
    })
}

/// Nonnegative least-squares meta-scores for `tensor` with `H` and `Q`
/// frozen. Rows are independent; `W` starts at zero.
pub fn ntf_transform(
    tensor: &Tensor3,
    h: ArrayView2<'_, f64>,
    q: ArrayView2<'_, f64>,
    config: &HalsConfig,
) -> Result<Projection> {
    let (n, p, q_len) = tensor.dim();
    if h.nrows() != p || q.nrows() != q_len || h.ncols() != q.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "tensor is {n}x{p}x{q_len} but H is {}x{} and Q is {}x{}",
            h.nrows(),
            h.ncols(),
            q.nrows(),
            q.ncols()
        )));
    }
    check_config(config)?;
    let mut w = Array2::zeros((n, h.ncols()));
    let mut h = h.to_owned();
    let mut q = q.to_owned();
    let run = run_hals(tensor, &mut w, &mut h, &mut q, Modes::WOnly, config);
    Ok(Projection {
        w,
        relative_error: run.trace.last().copied().unwrap_or(0.0),
        iterations: run.trace.len(),
        error_trace: run.trace,
    })
}

/// Fits `X ~ W H^T` with nonnegative factors and unit-norm columns of `H`.
pub fn nmf_fit(x: ArrayView2<'_, f64>, rank: usize, config: &HalsConfig, seed: u64) -> Result<MatrixFactorization> {
    let tensor = Tensor3::from_matrix(x)?;
    check_fit_inputs(&tensor, rank, config)?;
    let (n, p) = x.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = random_unit_columns(&mut rng, p, rank);
    let mut q = Array2::ones((1, rank));
    let mut w = Array2::zeros((n, rank));
    let run = run_hals(&tensor, &mut w, &mut h, &mut q, Modes::WAndH, config);
    let degenerate = degenerate_flags(&w, &run.guarded);
    Ok(MatrixFactorization {
        w,
        h,
        rank,
        relative_error: run.trace.last().copied().unwrap_or(1.0),
        iterations: run.trace.len(),
        seed,
        error_trace: run.trace,
        degenerate,
    })
}

/// Nonnegative least-squares `W` for `x ~ W H^T` with `H` frozen.
pub fn nmf_transform(x: ArrayView2<'_, f64>, h: ArrayView2<'_, f64>, config: &HalsConfig) -> Result<Projection> {
    if h.nrows() != x.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} columns but H has {} rows",
            x.ncols(),
            h.nrows()
        )));
    }
    let tensor = Tensor3::from_matrix(x)?;
    let q = Array2::ones((1, h.ncols()));
    ntf_transform(&tensor, h, q.view(), config)
}

fn check_config(config: &HalsConfig) -> Result<()> {
    if config.max_iter == 0 || !(config.tol >= 0.0) {
        return Err(Error::invalid("HALS needs max_iter >= 1 and a nonnegative tol"));
    }
    Ok(())
}

fn check_fit_inputs(tensor: &Tensor3, rank: usize, config: &HalsConfig) -> Result<()> {
    check_config(config)?;
    if rank == 0 {
        return Err(Error::invalid("rank must be at least 1"));
    }
    if tensor.is_zero() {
        return Err(Error::invalid("cannot factorize an all-zero tensor"));
    }
    let (n, p, q) = tensor.dim();
    if rank > n.max(p).max(q) {
        log::warn!("rank {rank} exceeds the tensor dimensions {n}x{p}x{q}");
    }
    Ok(())
}

fn random_unit_columns(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    let mut m = Array2::from_shape_simple_fn((rows, cols), || rng.gen::<f64>());
    for mut col in m.columns_mut() {
        let norm = col.dot(&col).sqrt();
        if norm > 0.0 {
            col /= norm;
        } else {
            col.fill(1.0 / (rows as f64).sqrt());
        }
    }
    m
}

fn degenerate_flags(w: &Array2<f64>, guarded: &[bool]) -> Vec<bool> {
    w.columns()
        .into_iter()
        .zip(guarded)
        .map(|(col, &g)| g || col.iter().all(|&v| v == 0.0))
        .collect()
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Modes {
    All,
    WAndH,
    WOnly,
}

struct HalsRun {
    trace: Vec<f64>,
    guarded: Vec<bool>,
}

fn run_hals(
    tensor: &Tensor3,
    w: &mut Array2<f64>,
    h: &mut Array2<f64>,
    q: &mut Array2<f64>,
    modes: Modes,
    config: &HalsConfig,
) -> HalsRun {
    let norm_x = tensor.frobenius_norm();
    let rank = w.ncols();
    let mut guarded = vec![false; rank];
    let mut trace = Vec::new();
    if norm_x == 0.0 {
        w.fill(0.0);
        return HalsRun {
            trace: vec![0.0],
            guarded,
        };
    }

    // with frozen patterns the W-mode products never change
    let frozen = (modes == Modes::WOnly).then(|| (mttkrp_samples(tensor, h, q), gram_product(h, q)));

    let mut prev = relative_error(tensor, w, h, q, norm_x);
    for _ in 0..config.max_iter {
        match &frozen {
            Some((m, g)) => {
                hals_columns(w, m, g, false);
            }
            None => {
                let m = mttkrp_samples(tensor, h, q);
                hals_columns(w, &m, &gram_product(h, q), false);
                let m = mttkrp_features(tensor, w, q);
                guarded = hals_columns(h, &m, &gram_product(w, q), true);
                if modes == Modes::All {
                    let m = mttkrp_periods(tensor, w, h);
                    let gq = hals_columns(q, &m, &gram_product(w, h), true);
                    guarded.iter_mut().zip(gq).for_each(|(a, b)| *a |= b);
                    normalize_into(q, w);
                }
                normalize_into(h, w);
            }
        }
        let err = relative_error(tensor, w, h, q, norm_x);
        trace.push(err);
        if prev - err < config.tol {
            break;
        }
        prev = err;
    }
    HalsRun { trace, guarded }
}

/// One HALS pass over the columns of `factor`. With `guard`, a column that
/// projects to all zeros is floored so it can be renormalized; the returned
/// flags mark those columns.
fn hals_columns(factor: &mut Array2<f64>, m: &Array2<f64>, g: &Array2<f64>, guard: bool) -> Vec<bool> {
    let rank = factor.ncols();
    let mut flags = vec![false; rank];
    for k in 0..rank {
        let gkk = g[[k, k]];
        if !(gkk > 0.0) {
            continue;
        }
        let fg = factor.dot(&g.column(k));
        let mut col = factor.column_mut(k);
        Zip::from(&mut col)
            .and(&m.column(k))
            .and(&fg)
            .for_each(|f, &mk, &fgk| *f = (*f + (mk - fgk) / gkk).max(0.0));
        if guard && col.iter().all(|&v| v == 0.0) {
            col.fill(ZERO_COLUMN_FLOOR);
            flags[k] = true;
        }
    }
    flags
}

/// Rescales columns of `pattern` to unit norm, pushing the scale into `w`.
fn normalize_into(pattern: &mut Array2<f64>, w: &mut Array2<f64>) {
    for (mut col, mut wcol) in pattern.columns_mut().into_iter().zip(w.columns_mut()) {
        let norm = col.dot(&col).sqrt();
        if norm > 0.0 {
            col /= norm;
            wcol *= norm;
        }
    }
}

fn gram_product(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    a.t().dot(a) * b.t().dot(b)
}

/// `M[i, k] = sum_{j,l} X[i, j, l] H[j, k] Q[l, k]`.
fn mttkrp_samples(tensor: &Tensor3, h: &Array2<f64>, q: &Array2<f64>) -> Array2<f64> {
    tensor.unfold_samples().dot(&khatri_rao(h.view(), q.view()))
}

/// `M[j, k] = sum_{i,l} X[i, j, l] W[i, k] Q[l, k]`.
fn mttkrp_features(tensor: &Tensor3, w: &Array2<f64>, q: &Array2<f64>) -> Array2<f64> {
    let (n, p, _) = tensor.dim();
    let rank = w.ncols();
    let t = tensor.unfold_periods().dot(q);
    let t = t.as_standard_layout().into_owned().into_shape_with_order((n, p, rank)).expect("same element count");
    let mut m = Array2::zeros((p, rank));
    for (slab, wrow) in t.outer_iter().zip(w.rows()) {
        Zip::from(&mut m)
            .and(&slab)
            .and_broadcast(&wrow.insert_axis(Axis(0)))
            .for_each(|acc, &tv, &wv| *acc += tv * wv);
    }
    m
}

/// `M[l, k] = sum_{i,j} X[i, j, l] W[i, k] H[j, k]`.
fn mttkrp_periods(tensor: &Tensor3, w: &Array2<f64>, h: &Array2<f64>) -> Array2<f64> {
    let (n, p, _) = tensor.dim();
    let rank = w.ncols();
    let mut u = Array2::zeros((n * p, rank));
    for i in 0..n {
        for j in 0..p {
            for k in 0..rank {
                u[[i * p + j, k]] = w[[i, k]] * h[[j, k]];
            }
        }
    }
    tensor.unfold_periods().t().dot(&u)
}

fn relative_error(tensor: &Tensor3, w: &Array2<f64>, h: &Array2<f64>, q: &Array2<f64>, norm_x: f64) -> f64 {
    let recon = w.dot(&khatri_rao(h.view(), q.view()).t());
    let sq: f64 = Zip::from(&tensor.unfold_samples())
        .and(&recon)
        .fold(0.0, |acc, &x, &r| acc + (x - r) * (x - r));
    sq.sqrt() / norm_x
}

/// Reconstruction `sum_k w_k o h_k o q_k` as a dense tensor.
pub fn reconstruct(w: ArrayView2<'_, f64>, h: ArrayView2<'_, f64>, q: ArrayView2<'_, f64>) -> Tensor3 {
    let (n, p, ql) = (w.nrows(), h.nrows(), q.nrows());
    let flat = w.dot(&khatri_rao(h, q).t());
    Tensor3::from_raw(flat.as_standard_layout().into_owned().into_shape_with_order((n, p, ql)).expect("same element count"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array3};

    fn tight() -> HalsConfig {
        HalsConfig {
            max_iter: 5000,
            tol: 1e-14,
        }
    }

    #[test]
    fn rank_one_recovery() {
        let w = array![[1.0], [2.0]];
        let h = array![[0.6], [0.8]];
        let q = array![[1.0], [0.0]];
        let x = reconstruct(w.view(), h.view(), q.view());
        let f = ntf_fit(&x, 1, &tight(), 7).unwrap();
        assert!(f.relative_error < 1e-6, "{}", f.relative_error);
        for (a, b) in f.w.iter().zip(w.iter()) {
            assert!((a - b).abs() < 1e-6);
        }
        for (a, b) in f.h.iter().zip(h.iter()) {
            assert!((a - b).abs() < 1e-6);
        }
        for (a, b) in f.q.iter().zip(q.iter()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn all_zero_tensor_rejected() {
        assert!(ntf_fit(&Tensor3::zeros((2, 2, 2)), 1, &HalsConfig::default(), 0).is_err());
    }

    #[test]
    fn transform_of_zero_is_zero() {
        let h = array![[1.0], [0.0]];
        let q = array![[0.6], [0.8]];
        let p = ntf_transform(&Tensor3::zeros((3, 2, 2)), h.view(), q.view(), &HalsConfig::default()).unwrap();
        assert!(p.w.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn transform_dimension_mismatch() {
        let h = array![[1.0], [0.0], [0.0]];
        let q = array![[1.0], [0.0]];
        let t = Tensor3::new(Array3::ones((2, 2, 2))).unwrap();
        assert!(ntf_transform(&t, h.view(), q.view(), &HalsConfig::default()).is_err());
    }

    #[test]
    fn unit_pattern_columns() {
        let x = Tensor3::new(Array3::from_shape_fn((5, 4, 3), |(i, j, l)| ((i + 2 * j + 3 * l) % 5) as f64)).unwrap();
        let f = ntf_fit(&x, 2, &HalsConfig::default(), 3).unwrap();
        for col in f.h.columns().into_iter().chain(f.q.columns()) {
            assert!((col.dot(&col).sqrt() - 1.0).abs() < 1e-12);
        }
        assert!(f.w.iter().chain(&f.h).chain(&f.q).all(|&v| v >= 0.0));
    }

    #[test]
    fn nmf_rank_one() {
        let u = array![[1.0], [2.0], [0.5]];
        let v = array![[3.0], [0.0], [1.0], [2.0]];
        let x = u.dot(&v.t());
        let f = nmf_fit(x.view(), 1, &tight(), 11).unwrap();
        assert!(f.relative_error < 1e-6);
    }

    #[test]
    fn nmf_diagonal_full_rank() {
        let x = Array2::from_diag(&array![3.0, 1.0, 2.0]);
        // HALS can park two components on one diagonal entry from an
        // unlucky start; this seed reaches the exact factorization
        let f = nmf_fit(x.view(), 3, &tight(), 0).unwrap();
        assert!(f.relative_error < 1e-8, "{}", f.relative_error);
    }

    #[test]
    fn khatri_rao_layout_matches_unfolding() {
        let w = array![[1.0, 0.5]];
        let h = array![[1.0, 2.0], [3.0, 4.0]];
        let q = array![[5.0, 6.0], [7.0, 8.0], [9.0, 1.0]];
        let t = reconstruct(w.view(), h.view(), q.view());
        let v = t.view();
        assert_eq!(v[[0, 1, 2]], 1.0 * 3.0 * 9.0 + 0.5 * 4.0 * 1.0);
    }
}
