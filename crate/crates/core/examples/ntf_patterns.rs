//! Covariate and temporal patterns of the IPCW-weighted event tensor.
//!
//!     cargo run --release --example ntf_patterns

use coxntf::factorization::HalsConfig;
use coxntf::pipeline::train_ntf_model;
use coxntf::surv::{time_grid_from_percentiles, ColumnRoles, Preprocessor, Table, DEFAULT_PERCENTILES};

fn main() -> coxntf::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/synthetic.csv");
    let (_, data) = Preprocessor::fit(&Table::from_path(path)?, &ColumnRoles::default())?;
    let grid = time_grid_from_percentiles(data.time(), &DEFAULT_PERCENTILES)?;
    println!("period boundaries {:?}", grid.interior());

    let patterns = train_ntf_model(&data, &grid, 3, &HalsConfig::default(), 7)?;
    println!(
        "rank 3, relative error {:.4} after {} sweeps",
        patterns.relative_error, patterns.iterations
    );
    let names = data.feature_names();
    for k in 0..patterns.rank() {
        let mut order: Vec<usize> = (0..names.len()).collect();
        order.sort_by(|&a, &b| patterns.h[[b, k]].total_cmp(&patterns.h[[a, k]]));
        let top: Vec<String> = order[..3].iter().map(|&j| format!("{} {:.2}", names[j], patterns.h[[j, k]])).collect();
        let profile: Vec<String> = patterns.q.column(k).iter().map(|v| format!("{v:.2}")).collect();
        println!("\npattern {}: {}", k + 1, top.join(", "));
        println!("  temporal profile [{}]", profile.join(" "));
    }
    Ok(())
}
