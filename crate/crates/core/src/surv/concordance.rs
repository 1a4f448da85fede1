use super::{check_times, kaplan_meier};
use crate::error::{Error, Result};

/// Per-event comparable-pair tallies. Concordance is kept doubled so that
/// tied risks (worth one half) stay integral.
struct PairCounts {
    concordant_x2: u64,
    comparable: u64,
}

fn pair_counts(time: &[f64], event: &[bool], risk: &[f64], i: usize) -> PairCounts {
    let mut counts = PairCounts {
        concordant_x2: 0,
        comparable: 0,
    };
    for j in 0..time.len() {
        if time[i] < time[j] {
            counts.comparable += 1;
            if risk[i] > risk[j] {
                counts.concordant_x2 += 2;
            } else if risk[i] == risk[j] {
                counts.concordant_x2 += 1;
            }
        }
    }
    debug_assert!(event[i]);
    counts
}

/// Harrell's concordance index.
///
/// A pair `(i, j)` is comparable when `t[i] < t[j]` and `i` had the event; it
/// is concordant when `risk[i] > risk[j]`, and tied risks count one half.
pub fn harrell_cindex(time: &[f64], event: &[bool], risk: &[f64]) -> Result<f64> {
    check_times(time, event.len(), "event")?;
    check_times(time, risk.len(), "risk")?;
    let mut num = 0u64;
    let mut den = 0u64;
    for i in (0..time.len()).filter(|&i| event[i]) {
        let c = pair_counts(time, event, risk, i);
        num += c.concordant_x2;
        den += 2 * c.comparable;
    }
    if den == 0 {
        return Err(Error::invalid("no comparable pairs for the concordance index"));
    }
    Ok(num as f64 / den as f64)
}

/// Uno's IPCW concordance index.
///
/// The censoring distribution `G` is estimated on the training outcomes and
/// every comparable test pair anchored at event `i` is weighted by
/// `G(t[i])^-2`. Pairs are restricted to `t[i] <= tau`; `None` keeps every
/// event, which is the same as truncating at the largest test event time.
pub fn uno_cindex(
    train_time: &[f64],
    train_event: &[bool],
    test_time: &[f64],
    test_event: &[bool],
    test_risk: &[f64],
    tau: Option<f64>,
) -> Result<f64> {
    check_times(test_time, test_event.len(), "event")?;
    check_times(test_time, test_risk.len(), "risk")?;
    let censored: Vec<bool> = train_event.iter().map(|&e| !e).collect();
    let g = kaplan_meier(train_time, &censored)?;
    let floor = g.min_positive().unwrap_or(1.0);
    let tau = tau.unwrap_or(f64::INFINITY);
    if !(tau > 0.0) {
        return Err(Error::invalid(format!("truncation time must be positive, got {tau}")));
    }

    let mut clamped = 0usize;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in (0..test_time.len()).filter(|&i| test_event[i] && test_time[i] <= tau) {
        let c = pair_counts(test_time, test_event, test_risk, i);
        if c.comparable == 0 {
            continue;
        }
        let mut gi = g.eval(test_time[i]);
        if gi <= 0.0 {
            clamped += 1;
            gi = floor;
        }
        let w = 1.0 / (gi * gi);
        num += w * c.concordant_x2 as f64;
        den += w * (2 * c.comparable) as f64;
    }
    if clamped > 0 {
        log::warn!("censoring survival is zero at {clamped} test event time(s); clamped to its smallest positive value");
    }
    if den == 0.0 {
        return Err(Error::invalid("no comparable pairs for the concordance index"));
    }
    Ok(num / den)
}
