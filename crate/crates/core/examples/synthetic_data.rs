//! Generates the bundled `data/synthetic.csv`.
//!
//! Survival times follow a Weibull proportional-hazards model on age, three
//! markers, stage and smoking; follow-up is cut by uniform administrative
//! censoring and random drop-out.
//!
//!     cargo run --example synthetic_data -- data/synthetic.csv

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const N: usize = 400;
const SEED: u64 = 20240611;

fn main() -> std::io::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut out: Box<dyn Write> = match std::env::args().nth(1) {
        Some(p) => Box::new(std::fs::File::create(p)?),
        None => Box::new(std::io::stdout().lock()),
    };
    writeln!(out, "time,event,age,bmi,marker_a,marker_b,marker_c,stage,smoker")?;
    for _ in 0..N {
        let age: f64 = rng.gen_range(40.0..85.0);
        let bmi: f64 = rng.gen_range(18.0..38.0);
        let a: f64 = rng.gen_range(0.0..3.0);
        let b: f64 = rng.gen_range(0.0..3.0);
        let c: f64 = rng.gen_range(0.0..1.0);
        let stage = match rng.gen_range(0..10) {
            0..=3 => "I",
            4..=7 => "II",
            _ => "III",
        };
        let smoker = rng.gen_bool(0.3);
        let stage_effect = match stage {
            "I" => 0.0,
            "II" => 0.6,
            _ => 1.2,
        };
        let eta = 0.04 * (age - 60.0) + 0.7 * a - 0.5 * b + stage_effect + if smoker { 0.4 } else { 0.0 };
        // Weibull with shape 1.5 and scale 20 at eta = 0
        let u: f64 = rng.gen_range(f64::EPSILON..1.0);
        let event_time = 20.0 * (-u.ln() / eta.exp()).powf(1.0 / 1.5);
        let dropout = -rng.gen_range(f64::EPSILON..1.0f64).ln() * 25.0;
        let admin = rng.gen_range(12.0..48.0);
        let censor = dropout.min(admin);
        let (time, event) = if event_time <= censor { (event_time, 1) } else { (censor, 0) };
        writeln!(
            out,
            "{:.2},{event},{:.0},{:.1},{:.3},{:.3},{:.3},{stage},{}",
            time.max(0.01),
            age,
            bmi,
            a,
            b,
            c,
            if smoker { "yes" } else { "no" }
        )?;
    }
    Ok(())
}
