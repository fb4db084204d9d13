//! Behaviour arbitration: the idiotypic controller and the nine
//! probabilistic rivals that reject the best-matched antibody α at fixed
//! rates.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::immune::{
    compute_alpha, AntigenReport, IdiotopeMatrix, ImmuneConfig, ImmuneNetwork, ParatopeMatrix,
    SelectionOutcome, Strengths,
};
use crate::rl::RlOutcome;
use crate::N_ANTIBODIES as N;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ControllerId {
    #[serde(rename = "I_D")]
    Idiotypic,
    R1,
    R2,
    R3,
    R4,
    R5,
    R6,
    R7,
    R8,
    R9,
}

impl ControllerId {
    pub const ALL: [ControllerId; 10] = [
        ControllerId::Idiotypic,
        ControllerId::R1,
        ControllerId::R2,
        ControllerId::R3,
        ControllerId::R4,
        ControllerId::R5,
        ControllerId::R6,
        ControllerId::R7,
        ControllerId::R8,
        ControllerId::R9,
    ];

    pub const PROBABILISTIC: [ControllerId; 9] = [
        ControllerId::R1,
        ControllerId::R2,
        ControllerId::R3,
        ControllerId::R4,
        ControllerId::R5,
        ControllerId::R6,
        ControllerId::R7,
        ControllerId::R8,
        ControllerId::R9,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ControllerId::Idiotypic => "I_D",
            ControllerId::R1 => "R1",
            ControllerId::R2 => "R2",
            ControllerId::R3 => "R3",
            ControllerId::R4 => "R4",
            ControllerId::R5 => "R5",
            ControllerId::R6 => "R6",
            ControllerId::R7 => "R7",
            ControllerId::R8 => "R8",
            ControllerId::R9 => "R9",
        }
    }

    pub fn is_idiotypic(&self) -> bool {
        matches!(self, ControllerId::Idiotypic)
    }
}

impl fmt::Display for ControllerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ControllerId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_uppercase().replace(['_', '-'], "");
        if key == "ID" || key == "IDIOTYPIC" {
            return Ok(ControllerId::Idiotypic);
        }
        ControllerId::PROBABILISTIC
            .into_iter()
            .find(|c| c.name() == key)
            .ok_or_else(|| Error::UnknownController(s.to_string()))
    }
}

/// How the alternative antibody μ is picked once α has been rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    /// Any other antibody, equally likely.
    Uniform,
    /// Drawn in proportion to the paratope column of the dominant antigen,
    /// redrawing while the draw is α.
    ParatopeWeighted,
    /// Percent probabilities of the 2nd, 3rd and 4th best-matched antibody.
    Ranked([f64; 3]),
}

/// One row of a scheme: the percent chance of rejecting α and how the
/// replacement is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Branch {
    pub mu: f64,
    pub alternative: Alternative,
}

impl Branch {
    pub fn uniform(mu: f64) -> Self {
        Branch {
            mu,
            alternative: Alternative::Uniform,
        }
    }

    /// Ranked branch with a 2:1:1 split of the rejection mass.
    pub fn biased(mu: f64) -> Self {
        Branch {
            mu,
            alternative: Alternative::Ranked([mu / 2.0, mu / 4.0, mu / 4.0]),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=100.0).contains(&self.mu) {
            return Err(Error::Config(format!(
                "mu must be within [0, 100], got {}",
                self.mu
            )));
        }
        if let Alternative::Ranked(split) = &self.alternative {
            if split.iter().any(|&v| v < 0.0) {
                return Err(Error::Config("rank probabilities must be >= 0".into()));
            }
            let total: f64 = split.iter().sum();
            if (total - self.mu).abs() > 1e-9 {
                return Err(Error::Config(format!(
                    "rank probabilities sum to {total}, expected mu = {}",
                    self.mu
                )));
            }
        }
        Ok(())
    }
}

/// What switches a scheme to its alert branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    None,
    /// The previous action was scored as a failure.
    RlFailure,
    /// The robot is stalled now or was on the previous tick.
    StallWindow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeParams {
    pub trigger: Trigger,
    pub normal: Branch,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alert: Option<Branch>,
}

impl SchemeParams {
    fn fixed(normal: Branch) -> Self {
        SchemeParams {
            trigger: Trigger::None,
            normal,
            alert: None,
        }
    }

    fn switched(trigger: Trigger, normal: Branch, alert: Branch) -> Self {
        SchemeParams {
            trigger,
            normal,
            alert: Some(alert),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.normal.validate()?;
        match (&self.trigger, &self.alert) {
            (Trigger::None, None) => Ok(()),
            (Trigger::None, Some(_)) => {
                Err(Error::Config("alert branch given without a trigger".into()))
            }
            (_, None) => Err(Error::Config(
                "trigger given without an alert branch".into(),
            )),
            (_, Some(b)) => b.validate(),
        }
    }

    /// The branch in force for a given context.
    pub fn branch(&self, ctx: &SelectionContext) -> &Branch {
        let alert = match self.trigger {
            Trigger::None => false,
            Trigger::RlFailure => !ctx.last_rl.success,
            Trigger::StallWindow => ctx.stall_window,
        };
        match (&self.alert, alert) {
            (Some(b), true) => b,
            _ => &self.normal,
        }
    }
}

/// Scheme parameters for every probabilistic controller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SchemeTable(BTreeMap<ControllerId, SchemeParams>);

impl Default for SchemeTable {
    /// The nine standard schemes.
    fn default() -> Self {
        use ControllerId::*;
        let mut m = BTreeMap::new();
        m.insert(R1, SchemeParams::fixed(Branch::uniform(20.0)));
        m.insert(
            R2,
            SchemeParams::fixed(Branch {
                mu: 20.0,
                alternative: Alternative::ParatopeWeighted,
            }),
        );
        let ranked = |mu, split| Branch {
            mu,
            alternative: Alternative::Ranked(split),
        };
        m.insert(R3, SchemeParams::fixed(ranked(20.0, [20.0, 0.0, 0.0])));
        m.insert(R4, SchemeParams::fixed(ranked(20.0, [10.0, 10.0, 0.0])));
        m.insert(R5, SchemeParams::fixed(ranked(20.0, [10.0, 5.0, 5.0])));
        m.insert(
            R6,
            SchemeParams::switched(
                Trigger::RlFailure,
                Branch::biased(14.0),
                Branch::biased(28.0),
            ),
        );
        m.insert(
            R7,
            SchemeParams::switched(
                Trigger::StallWindow,
                Branch::biased(15.0),
                Branch::biased(33.0),
            ),
        );
        m.insert(
            R8,
            SchemeParams::switched(
                Trigger::StallWindow,
                Branch::biased(13.0),
                Branch::biased(50.0),
            ),
        );
        m.insert(
            R9,
            SchemeParams::switched(
                Trigger::StallWindow,
                Branch::biased(2.0),
                Branch::biased(75.0),
            ),
        );
        SchemeTable(m)
    }
}

impl SchemeTable {
    pub fn get(&self, id: ControllerId) -> Option<&SchemeParams> {
        self.0.get(&id)
    }

    /// Replaces one scheme, e.g. for mu-rate sweeps.
    pub fn set(&mut self, id: ControllerId, params: SchemeParams) -> Result<()> {
        if id.is_idiotypic() {
            return Err(Error::Config("I_D has no probabilistic scheme".into()));
        }
        params.validate()?;
        self.0.insert(id, params);
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.contains_key(&ControllerId::Idiotypic) {
            return Err(Error::Config("I_D has no probabilistic scheme".into()));
        }
        for id in ControllerId::PROBABILISTIC {
            self.0
                .get(&id)
                .ok_or_else(|| Error::Config(format!("missing scheme for {id}")))?
                .validate()?;
        }
        Ok(())
    }

    /// Loads overrides on top of the standard schemes.
    pub fn with_overrides(overrides: BTreeMap<ControllerId, SchemeParams>) -> Result<Self> {
        let mut t = SchemeTable::default();
        for (id, p) in overrides {
            t.set(id, p)?;
        }
        Ok(t)
    }
}

/// Per-tick inputs the probabilistic schemes branch on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionContext {
    pub last_rl: RlOutcome,
    pub stall_window: bool,
}

impl Default for SelectionContext {
    fn default() -> Self {
        SelectionContext {
            last_rl: RlOutcome::neutral(),
            stall_window: false,
        }
    }
}

/// Antibodies ordered by descending strength of match; ties by ascending
/// index. The first entry is α.
pub fn rank_by_match(s1: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..s1.len()).collect();
    // stable sort keeps ascending index among equal strengths
    order.sort_by(|&a, &b| s1[b].total_cmp(&s1[a]));
    order
}

/// Applies a probabilistic scheme branch. Consumes one uniform draw, plus
/// the draws needed to pick the alternative.
pub fn choose_alternative<R: Rng + ?Sized>(
    branch: &Branch,
    p: &ParatopeMatrix,
    dominant: usize,
    s1: &Strengths,
    alpha: usize,
    rng: &mut R,
) -> usize {
    let u: f64 = rng.gen::<f64>() * 100.0;
    match &branch.alternative {
        Alternative::Uniform => {
            if u >= branch.mu {
                return alpha;
            }
            let k = rng.gen_range(0..N - 1);
            if k >= alpha {
                k + 1
            } else {
                k
            }
        }
        Alternative::ParatopeWeighted => {
            if u >= branch.mu {
                return alpha;
            }
            let weights = p.column(dominant);
            let others: f64 = (0..N).filter(|&i| i != alpha).map(|i| weights[i]).sum();
            if others <= 0.0 {
                return alpha;
            }
            let dist = WeightedIndex::new(weights).expect("positive total weight");
            loop {
                let pick = dist.sample(rng);
                if pick != alpha {
                    return pick;
                }
            }
        }
        Alternative::Ranked(split) => {
            let ranked: Vec<usize> = rank_by_match(s1)
                .into_iter()
                .filter(|&i| s1[i] > 0.0 && i != alpha)
                .take(3)
                .collect();
            let mut acc = 0.0;
            for (k, &prob) in split.iter().enumerate() {
                acc += prob;
                if u < acc {
                    // missing ranks fall back to α
                    return ranked.get(k).copied().unwrap_or(alpha);
                }
            }
            alpha
        }
    }
}

/// Running selection counters. A μ event is any tick whose executed
/// antibody differs from α.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionStats {
    pub ticks: u64,
    pub mu_count: u64,
    pub mu_count_stalled: u64,
    pub stalled_ticks: u64,
}

impl SelectionStats {
    pub fn record(mut self, chosen: usize, alpha: usize, stalled: bool) -> Self {
        self.ticks += 1;
        if stalled {
            self.stalled_ticks += 1;
        }
        if chosen != alpha {
            self.mu_count += 1;
            if stalled {
                self.mu_count_stalled += 1;
            }
        }
        self
    }

    pub fn mu_rate(&self) -> f64 {
        ratio(self.mu_count, self.ticks)
    }

    pub fn stalled_mu_rate(&self) -> f64 {
        ratio(self.mu_count_stalled, self.stalled_ticks)
    }

    pub fn free_mu_rate(&self) -> f64 {
        ratio(
            self.mu_count - self.mu_count_stalled,
            self.ticks - self.stalled_ticks,
        )
    }

    pub fn merge(mut self, o: &SelectionStats) -> Self {
        self.ticks += o.ticks;
        self.mu_count += o.mu_count;
        self.mu_count_stalled += o.mu_count_stalled;
        self.stalled_ticks += o.stalled_ticks;
        self
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Result of one arbitration step.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub antibody: usize,
    pub alpha: usize,
    pub s1: Strengths,
    /// Network internals, idiotypic controller only.
    pub immune: Option<SelectionOutcome>,
}

/// A controller instance; one per run.
#[derive(Debug, Clone)]
pub enum Controller {
    Idiotypic(Box<ImmuneNetwork>),
    Probabilistic {
        id: ControllerId,
        scheme: SchemeParams,
    },
}

impl Controller {
    pub fn new(
        id: ControllerId,
        immune: ImmuneConfig,
        idiotope: IdiotopeMatrix,
        schemes: &SchemeTable,
    ) -> Result<Self> {
        if id.is_idiotypic() {
            immune.validate()?;
            return Ok(Controller::Idiotypic(Box::new(ImmuneNetwork::new(
                immune, idiotope,
            ))));
        }
        let scheme = schemes
            .get(id)
            .ok_or_else(|| Error::Config(format!("missing scheme for {id}")))?
            .clone();
        scheme.validate()?;
        Ok(Controller::Probabilistic { id, scheme })
    }

    pub fn id(&self) -> ControllerId {
        match self {
            Controller::Idiotypic(_) => ControllerId::Idiotypic,
            Controller::Probabilistic { id, .. } => *id,
        }
    }

    pub fn network(&self) -> Option<&ImmuneNetwork> {
        match self {
            Controller::Idiotypic(net) => Some(net),
            Controller::Probabilistic { .. } => None,
        }
    }

    /// Picks the antibody to execute. The idiotypic controller never
    /// touches `rng`.
    pub fn select<R: Rng + ?Sized>(
        &mut self,
        p: &ParatopeMatrix,
        report: &AntigenReport,
        ctx: &SelectionContext,
        rng: &mut R,
    ) -> Selection {
        match self {
            Controller::Idiotypic(net) => {
                let out = net.step(p, report);
                Selection {
                    antibody: out.beta,
                    alpha: out.alpha,
                    s1: out.s1,
                    immune: Some(out),
                }
            }
            Controller::Probabilistic { scheme, .. } => {
                let (alpha, s1) = compute_alpha(p, report);
                let branch = scheme.branch(ctx);
                let antibody = choose_alternative(branch, p, report.dominant, &s1, alpha, rng);
                Selection {
                    antibody,
                    alpha,
                    s1,
                    immune: None,
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rank_examples() {
        assert_eq!(rank_by_match(&[3.0, 1.0, 2.0]), vec![0, 2, 1]);
        assert_eq!(rank_by_match(&[1.0; 16]), (0..16).collect::<Vec<_>>());
    }

    #[test]
    fn parse_controller_names() {
        assert_eq!(
            "I_D".parse::<ControllerId>().unwrap(),
            ControllerId::Idiotypic
        );
        assert_eq!("r8".parse::<ControllerId>().unwrap(), ControllerId::R8);
        assert!("R10".parse::<ControllerId>().is_err());
        for c in ControllerId::ALL {
            assert_eq!(c.name().parse::<ControllerId>().unwrap(), c);
        }
    }

    #[test]
    fn standard_table_validates() {
        SchemeTable::default().validate().unwrap();
        let r8 = SchemeTable::default()
            .get(ControllerId::R8)
            .unwrap()
            .clone();
        let stalled = SelectionContext {
            stall_window: true,
            ..Default::default()
        };
        let b = r8.branch(&stalled);
        assert_eq!(b.mu, 50.0);
        assert_eq!(b.alternative, Alternative::Ranked([25.0, 12.5, 12.5]));
        let r9 = SchemeTable::default()
            .get(ControllerId::R9)
            .unwrap()
            .clone();
        assert_eq!(r9.branch(&SelectionContext::default()).mu, 2.0);
    }

    #[test]
    fn r6_switches_on_failure() {
        let r6 = SchemeTable::default()
            .get(ControllerId::R6)
            .unwrap()
            .clone();
        let failed = SelectionContext {
            last_rl: RlOutcome {
                tau: -0.05,
                success: false,
            },
            stall_window: false,
        };
        assert_eq!(
            r6.branch(&failed).alternative,
            Alternative::Ranked([14.0, 7.0, 7.0])
        );
        assert_eq!(
            r6.branch(&SelectionContext::default()).alternative,
            Alternative::Ranked([7.0, 3.5, 3.5])
        );
    }

    #[test]
    fn bad_split_is_rejected() {
        let p = SchemeParams::fixed(Branch {
            mu: 20.0,
            alternative: Alternative::Ranked([10.0, 5.0, 0.0]),
        });
        assert!(p.validate().is_err());
        let mut t = SchemeTable::default();
        assert!(t
            .set(
                ControllerId::Idiotypic,
                SchemeParams::fixed(Branch::uniform(5.0))
            )
            .is_err());
    }

    #[test]
    fn short_rank_list_falls_back_to_alpha() {
        let mut s1 = [0.0; N];
        s1[4] = 2.0;
        s1[9] = 1.0;
        let branch = Branch {
            mu: 100.0,
            alternative: Alternative::Ranked([0.0, 100.0, 0.0]),
        };
        let p = ParatopeMatrix::zeros();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            assert_eq!(choose_alternative(&branch, &p, 0, &s1, 4, &mut rng), 4);
        }
        let branch = Branch {
            mu: 100.0,
            alternative: Alternative::Ranked([100.0, 0.0, 0.0]),
        };
        assert_eq!(choose_alternative(&branch, &p, 0, &s1, 4, &mut rng), 9);
    }

    #[test]
    fn paratope_weighted_without_alternatives_keeps_alpha() {
        let mut p = ParatopeMatrix::zeros();
        p.set(3, 2, 0.7);
        let branch = Branch {
            mu: 100.0,
            alternative: Alternative::ParatopeWeighted,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert_eq!(
            choose_alternative(&branch, &p, 2, &[0.0; N], 3, &mut rng),
            3
        );
    }

    #[test]
    fn stats_counting() {
        let s = SelectionStats::default().record(3, 3, false);
        assert_eq!(s.mu_count, 0);
        let s = s.record(2, 3, true);
        assert_eq!((s.mu_count, s.mu_count_stalled, s.stalled_ticks), (1, 1, 1));
        let mut s = SelectionStats::default();
        for t in 0..10 {
            s = s.record(if t < 2 { 1 } else { 0 }, 0, false);
        }
        assert!((s.mu_rate() - 0.2).abs() < 1e-15);
    }
}
