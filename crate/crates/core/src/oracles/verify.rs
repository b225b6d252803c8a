//! Fast self-checks of the implementation against the oracles, used by `combopt verify`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::*;
use crate::action_sets::ActionSet;
use crate::environments::FeedbackMode;
use crate::exp2::Exp2State;
use crate::legendre::{LegendreFunction, PotentialSpec};
use crate::osmd::{bregman_project, OsmdState};

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn from_outcome(name: &str, outcome: Result<(bool, String)>) -> Self {
        let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
        Self { name: name.to_string(), passed, detail }
    }
}

fn families(d: usize) -> Result<[LegendreFunction; 2]> {
    Ok([
        LegendreFunction::negentropy(d),
        LegendreFunction::potential_legendre(PotentialSpec::power(2.0)?, d)?,
    ])
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn bregman_duality(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for f in families(4)? {
        for _ in 0..200 {
            let x: Vec<f64> = (0..4).map(|_| rng.gen_range(0.05..0.95)).collect();
            let y: Vec<f64> = (0..4).map(|_| rng.gen_range(0.05..0.95)).collect();
            let primal = f.bregman(&x, &y)?;
            let dual = f.dual_bregman(&f.grad(&y)?, &f.grad(&x)?)?;
            worst = worst.max((primal - dual).abs() / primal.abs().max(1e-300));
        }
    }
    Ok((worst <= 1e-8, format!("max relative error {worst:.3e}")))
}

fn unbiasedness(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    let z: Vec<f64> = (0..6).map(|_| rng.gen::<f64>()).collect();
    let set = ActionSet::mset(6, 2)?;
    let mut osmd = OsmdState::new(&set, LegendreFunction::negentropy(6), 0.3, FeedbackMode::SemiBandit)?;
    let warm: Vec<f64> = (0..6).map(|_| rng.gen::<f64>()).collect();
    osmd.update_with_estimate(&warm)?;
    let mean = exact_estimator_mean_osmd(&set, osmd.mean(), &z, FeedbackMode::SemiBandit)?;
    worst = worst.max(max_abs_diff(&mean, &z));
    for (mode, gamma) in [(FeedbackMode::SemiBandit, 0.0), (FeedbackMode::Bandit, 0.2)] {
        let set = ActionSet::mset(4, 1)?;
        let mut s = Exp2State::new(&set, 0.5, gamma, mode)?;
        s.update(&z[..4])?;
        worst = worst.max(max_abs_diff(&exact_estimator_mean_exp2(&s, &z[..4])?, &z[..4]));
    }
    Ok((worst <= 1e-12, format!("max deviation {worst:.3e}")))
}

fn projection_grid(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for (d, m) in [(2, 1), (3, 2)] {
        let set = ActionSet::mset(d, m)?;
        for f in families(d)? {
            for _ in 0..5 {
                let w: Vec<f64> = (0..d).map(|_| rng.gen_range(0.05..3.0)).collect();
                let exact = bregman_project(&f, &w, &set)?;
                let grid = brute_force_projection(&f, &w, &set, 1e-3)?;
                worst = worst.max(max_abs_diff(&exact, &grid));
            }
        }
    }
    Ok((worst <= 1e-3, format!("max coordinate gap {worst:.3e}")))
}

fn tech1_grid() -> Result<(bool, String)> {
    let mut worst = f64::INFINITY;
    for k in 1..=200 {
        for j in 0..=10 {
            worst = worst.min(tech1_ratio(k, 1.0 + j as f64 / 10.0)?);
        }
    }
    Ok((worst >= 1.0 / 3.0 - 1e-12, format!("min ratio {worst:.6}")))
}

fn kl_grid() -> Result<(bool, String)> {
    let mut violations = 0;
    let mut cases = 0;
    for n in 1usize..=8 {
        for l in n.div_ceil(2)..=n {
            for p in [0.2, 0.5, 0.7] {
                for dp in [0.01, 0.1] {
                    let pp = p + dp;
                    for q in [KlQ::P, KlQ::PPrime] {
                        for tail in [0.3, 0.6] {
                            let (kl, bound) = kl_bound_check(p, pp, q, n, l, tail)?;
                            cases += 1;
                            if kl > bound + 1e-15 {
                                violations += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok((violations == 0, format!("{violations} violations in {cases} cases")))
}

fn closed_forms() -> Result<(bool, String)> {
    let alt = exp2_alternating_regret(4, 2, 2.0)?;
    let skew = exp2_epsskew_regret(4, 2, 1.0, 0.1)?;
    let exact = exp2_epsskew_expected_regret(4, 2, 1.0, 0.1)?;
    let ok = (alt - 0.5 * 1f64.tanh()).abs() <= 1e-12 && skew <= exact && (tech1_ratio(1, 2.0)? - 1.0 / 3.0).abs() <= 1e-15;
    Ok((ok, format!("alternating {alt:.6}, skew formula {skew:.6}, skew exact {exact:.6}")))
}

/// Runs every check with a fixed seed.
pub fn run_all(seed: u64) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vec![
        CheckResult::from_outcome("bregman_duality", bregman_duality(&mut rng)),
        CheckResult::from_outcome("estimator_unbiasedness", unbiasedness(&mut rng)),
        CheckResult::from_outcome("projection_vs_grid", projection_grid(&mut rng)),
        CheckResult::from_outcome("tech1_ratio", tech1_grid()),
        CheckResult::from_outcome("kl_binomials", kl_grid()),
        CheckResult::from_outcome("exp2_closed_forms", closed_forms()),
    ]
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_checks_pass() {
        for c in super::run_all(7) {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
