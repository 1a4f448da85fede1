use ndarray::ArrayView2;

/// Component with the largest loading in each row; ties go to the lowest
/// index and rows with no positive loading are unassigned (`None`).
pub fn cluster_rows(loadings: ArrayView2<'_, f64>) -> Vec<Option<usize>> {
    loadings
        .rows()
        .into_iter()
        .map(|row| {
            let mut best: Option<(usize, f64)> = None;
            for (k, &v) in row.iter().enumerate() {
                if v > 0.0 && best.is_none_or(|(_, b)| v > b) {
                    best = Some((k, v));
                }
            }
            best.map(|(k, _)| k)
        })
        .collect()
}

/// Cluster label per sample from the meta-scores `W` (`n x r`).
pub fn cluster_samples(w: ArrayView2<'_, f64>) -> Vec<Option<usize>> {
    cluster_rows(w)
}

/// Cluster label per covariate from the patterns `H` (`p x r`).
pub fn cluster_features(h: ArrayView2<'_, f64>) -> Vec<Option<usize>> {
    cluster_rows(h)
}
