//! Two-stage CoxNTF model: train on one split, score held-out rows from
//! their covariates alone.
//!
//!     cargo run --release --example coxntf_train_predict

use coxntf::coxnet::CoxnetConfig;
use coxntf::factorization::HalsConfig;
use coxntf::pipeline::{predict_coxntf, random_split, train_coxntf, train_ntf_model};
use coxntf::surv::{time_grid_from_percentiles, uno_cindex, ColumnRoles, Preprocessor, Table, DEFAULT_PERCENTILES};

fn main() -> coxntf::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/gbsg2.csv");
    let table = Table::from_path(path)?;
    let parts = random_split(table.n_rows(), &[0.6, 0.2, 0.2], 3);
    let roles = ColumnRoles::default();
    let (pre, train) = Preprocessor::fit(&table.select_rows(&parts[0]), &roles)?;
    let val = pre.transform(&table.select_rows(&parts[1]))?;
    let test = table.select_rows(&parts[2]);

    let grid = time_grid_from_percentiles(train.time(), &DEFAULT_PERCENTILES)?;
    let hals = HalsConfig::default();
    let patterns = train_ntf_model(&train, &grid, 3, &hals, 11)?;
    let (model, w) = train_coxntf(&train, &patterns, &CoxnetConfig::default(), &hals, Some(&val))?;
    println!("training meta-scores: {} x {}", w.nrows(), w.ncols());
    println!("stage-2 coefficients {:.3}", model.stage2.beta);

    // Only covariate columns are read; the outcome stays with the caller.
    let x = pre.transform_covariates(&test)?;
    let risk = predict_coxntf(&model, x.view())?;
    let outcome = pre.transform(&test)?;
    let c = uno_cindex(
        train.time(),
        train.event(),
        outcome.time(),
        outcome.event(),
        risk.as_slice().unwrap(),
        None,
    )?;
    println!("test Uno c-index {c:.3} on {} rows", outcome.n_samples());
    Ok(())
}
