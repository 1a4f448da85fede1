//! Repeated 60/20/20 comparison of the raw Cox model, Cox on NMF factors and
//! CoxNTF.
//!
//!     cargo run --release --example benchmark -- [dataset.csv] [repetitions]

use coxntf::pipeline::{benchmark, Arm, BenchmarkConfig};
use coxntf::surv::{ColumnRoles, Table};

fn main() -> coxntf::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data/veterans_lung_cancer.csv").to_owned());
    let repeats = args.next().map_or(10, |r| r.parse().expect("repetitions must be an integer"));
    let name = std::path::Path::new(&path).file_stem().unwrap().to_string_lossy().into_owned();

    let config = BenchmarkConfig {
        n_repeats: repeats,
        seed: 1,
        ..BenchmarkConfig::default()
    };
    let report = benchmark(&name, &Table::from_path(&path)?, &ColumnRoles::default(), &config)?;
    println!("{name}: {} rows, {} raw features, {repeats} repetitions", report.n_samples, report.n_raw_features);
    for (arm, sel) in &report.rank_selection {
        println!("{} rank {}", arm.label(), sel.chosen);
    }
    println!("\narm  c-index  features  failed");
    for arm in [Arm::Cox, Arm::Nmf, Arm::Ntf] {
        let r = report.arm(arm).unwrap();
        println!(
            "{:4} {:8.3}  {:8.2}  {}",
            arm.label(),
            r.mean_cindex.unwrap_or(f64::NAN),
            r.mean_selected_features.unwrap_or(f64::NAN),
            r.failures.len()
        );
    }
    Ok(())
}
