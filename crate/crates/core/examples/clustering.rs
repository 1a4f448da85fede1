//! Patients and covariates assigned to the pattern with the largest loading.
//!
//!     cargo run --release --example clustering

use coxntf::coxnet::CoxnetConfig;
use coxntf::factorization::HalsConfig;
use coxntf::pipeline::{cluster_features, cluster_samples, train_coxntf, train_ntf_model};
use coxntf::surv::{
    kaplan_meier, time_grid_from_percentiles, ColumnRoles, Preprocessor, Table, DEFAULT_PERCENTILES,
};

fn main() -> coxntf::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/synthetic.csv");
    let (_, data) = Preprocessor::fit(&Table::from_path(path)?, &ColumnRoles::default())?;
    let grid = time_grid_from_percentiles(data.time(), &DEFAULT_PERCENTILES)?;
    let hals = HalsConfig::default();
    let patterns = train_ntf_model(&data, &grid, 3, &hals, 5)?;
    let (_, w) = train_coxntf(&data, &patterns, &CoxnetConfig::default(), &hals, None)?;

    let features = cluster_features(patterns.h.view());
    for k in 0..patterns.rank() {
        let members: Vec<&str> = data
            .feature_names()
            .iter()
            .zip(&features)
            .filter(|(_, c)| **c == Some(k))
            .map(|(n, _)| n.as_str())
            .collect();
        println!("pattern {}: {}", k + 1, members.join(", "));
    }

    let samples = cluster_samples(w.view());
    println!("\ncluster  size  events  median survival");
    for k in 0..patterns.rank() {
        let rows: Vec<usize> = (0..data.n_samples()).filter(|&i| samples[i] == Some(k)).collect();
        if rows.is_empty() {
            println!("{:7}  {:4}", k + 1, 0);
            continue;
        }
        let part = data.subset(&rows)?;
        let km = kaplan_meier(part.time(), part.event())?;
        let median = km
            .knots()
            .iter()
            .zip(km.values())
            .find(|(_, &s)| s <= 0.5)
            .map_or_else(|| "not reached".to_owned(), |(t, _)| format!("{t:.1}"));
        println!("{:7}  {:4}  {:6}  {median}", k + 1, rows.len(), part.n_events());
    }
    let unassigned = samples.iter().filter(|c| c.is_none()).count();
    if unassigned > 0 {
        println!("unassigned {unassigned}");
    }
    Ok(())
}
