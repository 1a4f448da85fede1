//! Elastic-net Cox regularization path on the German breast cancer study,
//! with the penalty chosen on a held-out split.
//!
//!     cargo run --release --example coxnet_path

use coxntf::coxnet::{coxnet_fit, coxnet_path, CoxnetConfig};
use coxntf::pipeline::random_split;
use coxntf::surv::{uno_cindex, ColumnRoles, Preprocessor, Table};

fn main() -> coxntf::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/gbsg2.csv");
    let (_, data) = Preprocessor::fit(&Table::from_path(path)?, &ColumnRoles::default())?;
    let parts = random_split(data.n_samples(), &[0.6, 0.2, 0.2], 1);
    let (train, val, test) = (data.subset(&parts[0])?, data.subset(&parts[1])?, data.subset(&parts[2])?);

    let config = CoxnetConfig::default();
    let full = coxnet_path(&train, &config, None)?;
    println!("path of {} penalties, lambda_max = {:.4}", full.lambdas.len(), full.lambdas[0]);
    for k in [0, 10, 25, 50, 99] {
        let nonzero = full.betas[k].iter().filter(|&&b| b != 0.0).count();
        println!("  lambda {:.5}: {nonzero} nonzero", full.lambdas[k]);
    }

    let model = coxnet_fit(&train, &config, Some(&val))?;
    println!("\nselected lambda {:.5}", model.lambda);
    println!("{:>20}  {:>8}  {:>6}", "feature", "beta", "HR");
    for ((name, hr), b) in model.hazard_ratios().into_iter().zip(model.beta.iter()) {
        println!("{name:>20}  {b:8.3}  {hr:6.3}");
    }
    let risk = model.predict_risk(test.x())?;
    let c = uno_cindex(train.time(), train.event(), test.time(), test.event(), risk.as_slice().unwrap(), None)?;
    println!("\ntest Uno c-index {c:.3}");
    Ok(())
}
