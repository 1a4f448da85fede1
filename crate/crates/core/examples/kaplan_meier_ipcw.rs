//! Kaplan-Meier curve, censoring weights and the two concordance indices on
//! the veterans lung cancer trial.
//!
//!     cargo run --example kaplan_meier_ipcw

use coxntf::surv::{harrell_cindex, ipcw_weights, kaplan_meier, uno_cindex, ColumnRoles, Preprocessor, Table};

fn main() -> coxntf::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/veterans_lung_cancer.csv");
    let (_, data) = Preprocessor::fit(&Table::from_path(path)?, &ColumnRoles::default())?;
    let (time, event) = (data.time(), data.event());
    println!("{} patients, {} deaths", data.n_samples(), data.n_events());

    let km = kaplan_meier(time, event)?;
    println!("\n  day  survival");
    for day in [30.0, 90.0, 180.0, 365.0, 730.0] {
        println!("{day:5}  {:.3}", km.eval(day));
    }

    let censored: Vec<bool> = event.iter().map(|e| !e).collect();
    let g = kaplan_meier(time, &censored)?;
    let w = ipcw_weights(time, event)?;
    let (max_i, max_w) = w.iter().enumerate().fold((0, 0.0), |a, (i, &v)| if v > a.1 { (i, v) } else { a });
    println!("\ncensoring survival at day 365: {:.3}", g.eval(365.0));
    println!("largest weight {max_w:.3} on the death at day {}", time[max_i]);

    // Karnofsky score is high for fit patients, so its negation is a risk score.
    let col = data.feature_names().iter().position(|n| n == "karnofsky_score").unwrap();
    let risk: Vec<f64> = data.x().column(col).iter().map(|v| -v).collect();
    println!("\nKarnofsky score as a risk marker:");
    println!("  Harrell c = {:.3}", harrell_cindex(time, event, &risk)?);
    println!("  Uno c     = {:.3}", uno_cindex(time, event, time, event, &risk, None)?);
    Ok(())
}
