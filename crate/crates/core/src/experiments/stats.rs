//! Fitness, φ, good/bad classification and the one-tailed Welch test.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Confidence levels (%) reported as significance flags.
pub const SIGNIFICANCE_LEVELS: [f64; 3] = [95.0, 99.0, 99.9];

/// F = ½(T + φσ); with no φ (no stalls anywhere in the world) F = T/2.
pub fn fitness(time: f64, sigma: f64, phi: Option<f64>) -> f64 {
    0.5 * (time + phi.unwrap_or(0.0) * sigma)
}

/// Mean task time over mean stall count. `None` if nothing stalled or
/// there are no runs.
pub fn compute_phi(runs: &[(f64, f64)]) -> Option<f64> {
    if runs.is_empty() {
        return None;
    }
    let n = runs.len() as f64;
    let mean_t = runs.iter().map(|r| r.0).sum::<f64>() / n;
    let mean_s = runs.iter().map(|r| r.1).sum::<f64>() / n;
    (mean_s > 0.0).then(|| mean_t / mean_s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RunClass {
    pub good: bool,
    pub bad: bool,
}

/// Lower F is better. Good: F below the mean. Bad: among the worst
/// `floor(n/10)` values, with every run tied at the boundary also bad. A
/// run is never both.
pub fn classify_runs(fitness: &[f64]) -> Vec<RunClass> {
    let n = fitness.len();
    if n == 0 {
        return Vec::new();
    }
    let mean = fitness.iter().sum::<f64>() / n as f64;
    let k = n / 10;
    let threshold = (k > 0).then(|| {
        let mut sorted = fitness.to_vec();
        sorted.sort_by(|a, b| b.total_cmp(a));
        sorted[k - 1]
    });
    fitness
        .iter()
        .map(|&f| {
            let bad = threshold.is_some_and(|th| f >= th);
            RunClass {
                good: !bad && f < mean,
                bad,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub dof: f64,
    /// One-tailed p for H1: mean(a) < mean(b).
    pub p: f64,
    /// (1 − p) × 100.
    pub confidence: f64,
    pub significant_at: Vec<f64>,
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Welch's unequal-variance t-test, one-tailed for mean(a) < mean(b).
/// `None` when either sample has fewer than two values.
pub fn ttest_one_tailed(a: &[f64], b: &[f64]) -> Option<TTest> {
    if a.len() < 2 || b.len() < 2 {
        return None;
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (sa, sb) = (va / na, vb / nb);
    let se2 = sa + sb;
    let (t, dof, p) = if se2 == 0.0 {
        let p = match ma.total_cmp(&mb) {
            std::cmp::Ordering::Less => 0.0,
            std::cmp::Ordering::Equal => 0.5,
            std::cmp::Ordering::Greater => 1.0,
        };
        // finite stand-in for ±∞ so the value survives JSON
        let t = if p == 0.5 {
            0.0
        } else {
            (ma - mb).signum() * f64::MAX
        };
        (t, na + nb - 2.0, p)
    } else {
        let t = (ma - mb) / se2.sqrt();
        let dof = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
        let dist = StudentsT::new(0.0, 1.0, dof).expect("dof is positive and finite");
        (t, dof, dist.cdf(t))
    };
    let confidence = (1.0 - p) * 100.0;
    Some(TTest {
        t,
        dof,
        p,
        confidence,
        significant_at: SIGNIFICANCE_LEVELS
            .iter()
            .copied()
            .filter(|&lvl| p < 1.0 - lvl / 100.0)
            .collect(),
    })
}
