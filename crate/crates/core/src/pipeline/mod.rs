//! End-to-end CoxNTF: pattern learning, the two-stage Cox model, rank
//! selection, clustering, and the repeated-split benchmark against the raw
//! Cox and NMF baselines.

mod benchmark;
mod cluster;
mod coxntf;
mod rank;

pub use benchmark::{benchmark, Arm, ArmReport, BenchmarkConfig, BenchmarkReport, RankPolicy, RepetitionFailure};
pub(crate) use benchmark::cap_ranks;
pub use cluster::{cluster_features, cluster_rows, cluster_samples};
pub use coxntf::{meta_score_names, predict_coxntf, train_coxntf, train_ntf_model, CoxntfModel, NtfPatterns};
pub use rank::{select_nmf_rank, select_rank, RankCell, RankSearch, RankSelection};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent seed for sub-stream `stream` of `master` (SplitMix64).
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Shuffles `0..n` and cuts it into consecutive parts with the given
/// fractions (rounded at cumulative boundaries; the last part takes the
/// remainder).
pub fn random_split(n: usize, fractions: &[f64], seed: u64) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let total: f64 = fractions.iter().sum();
    let mut parts = Vec::with_capacity(fractions.len());
    let mut start = 0;
    let mut cum = 0.0;
    for (k, f) in fractions.iter().enumerate() {
        cum += f;
        let end = if k + 1 == fractions.len() {
            n
        } else {
            ((cum / total) * n as f64).round() as usize
        };
        let end = end.clamp(start, n);
        parts.push(idx[start..end].to_vec());
        start = end;
    }
    parts
}
