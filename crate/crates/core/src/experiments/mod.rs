//! Campaigns of episodes and their statistics.

mod campaign;
mod stats;

pub use campaign::{
    run_campaign, run_seed, write_run, Campaign, CampaignResult, ControllerSummary, RunRow,
    SignificanceRow, WorldSummary,
};
pub use stats::{
    classify_runs, compute_phi, fitness, ttest_one_tailed, RunClass, TTest, SIGNIFICANCE_LEVELS,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::immune::ParatopeMatrix;
use crate::{N_ANTIBODIES, N_ANTIGENS};

/// Seeds of the three shipped initial paratopes.
pub const PARATOPE_SEEDS: [(&str, u64); 3] = [("D1", 0xD1), ("D2", 0xD2), ("D3", 0xD3)];

pub const PARATOPE_MIN: f64 = 0.50;
pub const PARATOPE_MAX: f64 = 0.75;

/// Random initial paratope, every element uniform in [0.50, 0.75].
pub fn init_paratope(seed: u64) -> ParatopeMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = [[0.0; N_ANTIGENS]; N_ANTIBODIES];
    for v in rows.iter_mut().flatten() {
        *v = rng.gen_range(PARATOPE_MIN..=PARATOPE_MAX);
    }
    ParatopeMatrix::new(rows)
}

/// Resolves `D1`..`D3` or a bare integer seed.
pub fn paratope_seed(name: &str) -> Result<u64> {
    PARATOPE_SEEDS
        .iter()
        .find(|(n, _)| n.eq_ignore_ascii_case(name))
        .map(|&(_, s)| s)
        .or_else(|| name.parse().ok())
        .ok_or_else(|| Error::Config(format!("unknown paratope `{name}`")))
}

/// The initial paratopes each world is run from.
pub fn default_paratopes(world: &str) -> Vec<String> {
    let second = if world.eq_ignore_ascii_case("m2") {
        "D3"
    } else {
        "D2"
    };
    vec!["D1".into(), second.into()]
}
