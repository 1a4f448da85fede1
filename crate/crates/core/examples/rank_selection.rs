//! Rank choice by mean validation c-index over random splits.
//!
//!     cargo run --release --example rank_selection

use coxntf::coxnet::CoxnetConfig;
use coxntf::factorization::HalsConfig;
use coxntf::pipeline::{select_rank, RankSearch};
use coxntf::surv::{time_grid_from_percentiles, ColumnRoles, Preprocessor, Table, DEFAULT_PERCENTILES};

fn main() -> coxntf::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/veterans_lung_cancer.csv");
    let (_, data) = Preprocessor::fit(&Table::from_path(path)?, &ColumnRoles::default())?;
    let grid = time_grid_from_percentiles(data.time(), &DEFAULT_PERCENTILES)?;
    let search = RankSearch {
        candidates: (1..=6).collect(),
        n_repeats: 5,
        train_fraction: 0.75,
        seed: 2,
    };
    let sel = select_rank(&data, &grid, &search, &CoxnetConfig::default(), &HalsConfig::default())?;
    println!("rank  mean validation c-index");
    for (rank, mean) in &sel.mean_cindex {
        let mark = if *rank == sel.chosen { "  <- chosen" } else { "" };
        match mean {
            Some(m) => println!("{rank:4}  {m:.4}{mark}"),
            None => println!("{rank:4}  excluded"),
        }
    }
    Ok(())
}
