//! Campaign configuration files (TOML).
//!
//! ```toml
//! world = "m1"
//! controllers = ["I_D", "R1", "R9"]    # default: all ten
//! paratopes = ["D1", "D2"]             # default: D1 + D2 (m1), D1 + D3 (m2)
//! runs_per_paratope = 6
//! seed = 1
//! max_time = 1800.0
//!
//! [immune]
//! b = 80.0
//! k1 = 0.65
//! k2 = 0.05
//!
//! [rewards]
//! r_success = 0.05
//! r_failure = 0.05
//!
//! [noise]
//! speed = 0.1                          # relative speed error
//! turn = 0.1                           # turn-rate error (rad/s)
//!
//! [schemes.R1]
//! trigger = "none"
//! normal = { mu = 30.0, alternative = "uniform" }
//! ```
//!
//! Every key is optional; missing ones take the standard defaults.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::arbitration::{ControllerId, SchemeParams, SchemeTable};
use crate::error::{Error, Result};
use crate::experiments::{default_paratopes, Campaign};
use crate::immune::ImmuneConfig;
use crate::rl::RewardConfig;
use crate::world::{EpisodeConfig, MotionNoise, DEFAULT_MAX_TIME};

pub const DEFAULT_WORLD: &str = "m1";
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignFile {
    pub world: Option<String>,
    pub controllers: Option<Vec<ControllerId>>,
    pub paratopes: Option<Vec<String>>,
    pub runs_per_paratope: Option<usize>,
    pub seed: Option<u64>,
    pub max_time: Option<f64>,
    pub jobs: Option<usize>,
    pub immune: Option<ImmuneConfig>,
    pub rewards: Option<RewardConfig>,
    pub noise: Option<MotionNoise>,
    #[serde(default)]
    pub schemes: BTreeMap<ControllerId, SchemeParams>,
}

impl CampaignFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Fills in defaults and validates.
    pub fn into_campaign(self) -> Result<Campaign> {
        let world = self.world.unwrap_or_else(|| DEFAULT_WORLD.to_string());
        let c = Campaign {
            controllers: self
                .controllers
                .unwrap_or_else(|| ControllerId::ALL.to_vec()),
            paratopes: self.paratopes.unwrap_or_else(|| default_paratopes(&world)),
            runs_per_paratope: self.runs_per_paratope.unwrap_or(6),
            rng_base_seed: self.seed.unwrap_or(DEFAULT_SEED),
            jobs: self.jobs,
            config: EpisodeConfig {
                immune: self.immune.unwrap_or_default(),
                rewards: self.rewards.unwrap_or_default(),
                schemes: SchemeTable::with_overrides(self.schemes)?,
                max_time: self.max_time.unwrap_or(DEFAULT_MAX_TIME),
                noise: self.noise.unwrap_or_default(),
            },
            world,
        };
        c.config.validate()?;
        Ok(c)
    }
}
