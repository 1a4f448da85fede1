use ndarray::{Array2, Array3, ArrayView2, ArrayView3};

use crate::error::{Error, Result};

/// Dense nonnegative order-3 array indexed `(sample, feature, period)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    data: Array3<f64>,
}

impl Tensor3 {
    pub fn new(data: Array3<f64>) -> Result<Self> {
        if let Some(((i, j, k), v)) = data.indexed_iter().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            return Err(Error::invalid(format!(
                "tensor entry ({i}, {j}, {k}) = {v} is not a finite nonnegative value"
            )));
        }
        Ok(Self {
            data: data.as_standard_layout().into_owned(),
        })
    }

    pub fn zeros(shape: (usize, usize, usize)) -> Self {
        Self {
            data: Array3::zeros(shape),
        }
    }

    /// Wraps a nonnegative matrix as an `n x p x 1` tensor.
    pub fn from_matrix(x: ArrayView2<'_, f64>) -> Result<Self> {
        let (n, p) = x.dim();
        Self::new(x.as_standard_layout().into_owned().into_shape_with_order((n, p, 1)).expect("same element count"))
    }

    pub(crate) fn from_raw(data: Array3<f64>) -> Self {
        Self {
            data: data.as_standard_layout().into_owned(),
        }
    }

    pub fn view(&self) -> ArrayView3<'_, f64> {
        self.data.view()
    }

    pub fn dim(&self) -> (usize, usize, usize) {
        self.data.dim()
    }

    pub fn into_inner(self) -> Array3<f64> {
        self.data
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    /// Mode-1 unfolding: `n x (p q)` with column index `j * q + l`.
    pub(crate) fn unfold_samples(&self) -> ArrayView2<'_, f64> {
        let (n, p, q) = self.dim();
        self.data
            .view()
            .into_shape_with_order((n, p * q))
            .expect("standard layout")
    }

    /// `(n p) x q` view with row index `i * p + j`.
    pub(crate) fn unfold_periods(&self) -> ArrayView2<'_, f64> {
        let (n, p, q) = self.dim();
        self.data
            .view()
            .into_shape_with_order((n * p, q))
            .expect("standard layout")
    }
}

impl From<Tensor3> for Array3<f64> {
    fn from(t: Tensor3) -> Self {
        t.data
    }
}

pub(crate) fn khatri_rao(h: ArrayView2<'_, f64>, q: ArrayView2<'_, f64>) -> Array2<f64> {
    // row j * q_len + l holds h[j, k] * q[l, k]
    let (p, r) = h.dim();
    let ql = q.nrows();
    let mut out = Array2::zeros((p * ql, r));
    for j in 0..p {
        for l in 0..ql {
            for k in 0..r {
                out[[j * ql + l, k]] = h[[j, k]] * q[[l, k]];
            }
        }
    }
    out
}
