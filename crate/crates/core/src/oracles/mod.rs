//! Independent verifiers: brute-force enumerations, grid searches and exact
//! closed forms for the regret identities and the supporting inequalities.

mod binomial_sums;
mod distributions;
pub mod verify;

pub use binomial_sums::{
    exp2_alternating_regret, exp2_epsskew_expected_regret, exp2_epsskew_regret, ln_binomial, log_sum_exp,
    tech1_ratio,
};
pub use distributions::{kl_bound_check, kl_divergence, poisson_binomial, DiscreteDistribution, KlQ};

use crate::action_sets::ActionSet;
use crate::environments::{observe, FeedbackMode};
use crate::error::{Error, Result};
use crate::exp2::Exp2State;
use crate::legendre::LegendreFunction;
use crate::osmd::{decompose, estimate_semi_bandit};

/// `sum_a p(a) z_est(a)` for the OSMD estimator at mean point `x`, with
/// `p = decompose(x)`. Full feedback returns `z` itself.
pub fn exact_estimator_mean_osmd(set: &ActionSet, x: &[f64], z: &[f64], mode: FeedbackMode) -> Result<Vec<f64>> {
    match mode {
        FeedbackMode::Full => Ok(z.to_vec()),
        FeedbackMode::SemiBandit => {
            let dist = decompose(set, x)?;
            let mut mean = vec![0.0; z.len()];
            for (a, p) in dist.atoms() {
                let crate::environments::Feedback::SemiBandit(obs) = observe(mode, a, z) else { unreachable!() };
                let est = estimate_semi_bandit(x, a, &obs)?;
                mean.iter_mut().zip(&est).for_each(|(m, e)| *m += p * e);
            }
            Ok(mean)
        }
        FeedbackMode::Bandit => Err(Error::Unsupported("OSMD has no bandit estimator".into())),
    }
}

/// `sum_a p~(a) z_est(a)` for an Exp2 state, enumerating every action under the
/// distribution the state actually samples from.
pub fn exact_estimator_mean_exp2(state: &Exp2State, z: &[f64]) -> Result<Vec<f64>> {
    let probs = state.sampling_distribution();
    let mut mean = vec![0.0; z.len()];
    for (a, &p) in state.vertices().iter().zip(&probs) {
        let est = state.estimate(a, &observe(state.mode(), a, z))?;
        mean.iter_mut().zip(&est).for_each(|(m, e)| *m += p * e);
    }
    Ok(mean)
}

/// Grid search for `argmin_{Conv(A)} D_F(., w)` on sets of dimension at most 3.
/// The search refines a coarse grid around its best point, level by level,
/// down to `resolution`; convexity of the divergence makes the zoom safe.
pub fn brute_force_projection(f: &LegendreFunction, w: &[f64], set: &ActionSet, resolution: f64) -> Result<Vec<f64>> {
    let d = set.dim();
    if d > 3 {
        return Err(Error::Unsupported(format!("grid projection needs d <= 3, got {d}")));
    }
    if !(resolution > 0.0 && resolution < 1.0) {
        return Err(Error::invalid("resolution must lie in (0, 1)"));
    }
    let sys = set.conv_constraints();
    let m = set.weight() as f64;
    let free = d - 1;
    let complete = |head: &[f64]| -> Vec<f64> {
        let mut x = head.to_vec();
        x.push(m - head.iter().sum::<f64>());
        x
    };
    let score = |head: &[f64]| -> Option<f64> {
        let x = complete(head);
        if !sys.is_feasible(&x, 1e-12) {
            return None;
        }
        let x: Vec<f64> = x.iter().map(|v| v.clamp(0.0, 1.0)).collect();
        f.bregman(&x, w).ok()
    };
    if free == 0 {
        return Ok(complete(&[]));
    }
    let mut center = vec![0.5; free];
    let mut half_width = 0.5;
    let mut step = 0.01f64.max(resolution);
    loop {
        let per_axis = (2.0 * half_width / step).round() as i64;
        let mut best: Option<(f64, Vec<f64>)> = None;
        let mut idx = vec![0i64; free];
        loop {
            let head: Vec<f64> = idx
                .iter()
                .zip(&center)
                .map(|(&k, &c)| ((c - half_width + k as f64 * step) / step).round() * step)
                .collect();
            if head.iter().all(|v| (0.0..=1.0).contains(v)) {
                if let Some(s) = score(&head) {
                    if best.as_ref().is_none_or(|(b, _)| s < *b) {
                        best = Some((s, head));
                    }
                }
            }
            let mut k = 0;
            while k < free {
                idx[k] += 1;
                if idx[k] <= per_axis {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == free {
                break;
            }
        }
        let (_, head) = best.ok_or_else(|| Error::Infeasible("no feasible grid point".into()))?;
        if step <= resolution * (1.0 + 1e-9) {
            return Ok(complete(&head));
        }
        center = head;
        half_width = 3.0 * step;
        step = (step / 10.0).max(resolution);
    }
}

/// `0.02 m sqrt(d n)`, the minimax lower-bound reference line for bandit feedback.
pub fn minimax_reference(m: usize, d: usize, n: usize) -> Result<f64> {
    if m == 0 || d < 2 * m || n < d {
        return Err(Error::invalid(format!("need n >= d >= 2m >= 2 (m = {m}, d = {d}, n = {n})")));
    }
    Ok(0.02 * m as f64 * ((d * n) as f64).sqrt())
}

/// `(-log x, -(x - 1) + (x - 1)^2 / (2 x0))` for `x >= x0`, `x0 in (0, 1)`.
pub fn log_quadratic_bound(x: f64, x0: f64) -> Result<(f64, f64)> {
    if !(x0 > 0.0 && x0 < 1.0) || x.is_nan() || x < x0 {
        return Err(Error::invalid(format!("need x >= x0 with x0 in (0, 1); got x = {x}, x0 = {x0}")));
    }
    Ok((-x.ln(), -(x - 1.0) + (x - 1.0).powi(2) / (2.0 * x0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::legendre::PotentialSpec;
    use approx::assert_relative_eq;

    #[test]
    fn grid_projection_examples() {
        let set = ActionSet::mset(2, 1).unwrap();
        let f = LegendreFunction::negentropy(2);
        let x = brute_force_projection(&f, &[1.0, 3.0], &set, 1e-4).unwrap();
        assert!((x[0] - 0.25).abs() <= 1e-4);
        let x = brute_force_projection(&f, &[0.3, 0.7], &set, 1e-4).unwrap();
        assert!((x[0] - 0.3).abs() <= 1e-4);
        let g = LegendreFunction::potential_legendre(PotentialSpec::power(2.0).unwrap(), 2).unwrap();
        let grid = brute_force_projection(&g, &[4.0, 1.0], &set, 1e-4).unwrap();
        let exact = crate::osmd::bregman_project(&g, &[4.0, 1.0], &set).unwrap();
        assert!((grid[0] - exact[0]).abs() <= 1e-3);
        assert!(brute_force_projection(&f, &[1.0; 4], &ActionSet::mset(4, 2).unwrap(), 1e-3).is_err());
    }

    #[test]
    fn minimax_reference_examples() {
        assert_relative_eq!(minimax_reference(1, 4, 100).unwrap(), 0.4, epsilon = 1e-15);
        assert_relative_eq!(minimax_reference(2, 4, 4).unwrap(), 0.16, epsilon = 1e-15);
        assert!(minimax_reference(3, 4, 100).is_err());
    }

    #[test]
    fn log_bound_examples() {
        assert_eq!(log_quadratic_bound(1.0, 0.5).unwrap(), (0.0, 0.0));
        let (l, r) = log_quadratic_bound(0.5, 0.5).unwrap();
        assert_relative_eq!(l, 2f64.ln(), epsilon = 1e-15);
        assert_relative_eq!(r, 0.75, epsilon = 1e-15);
        for i in 1..10 {
            let x0 = i as f64 / 10.0;
            for j in 0..200 {
                let x = x0 + j as f64 * 0.05;
                let (l, r) = log_quadratic_bound(x, x0).unwrap();
                assert!(l <= r + 1e-15);
            }
        }
        assert!(log_quadratic_bound(0.2, 0.5).is_err());
        assert!(log_quadratic_bound(2.0, 1.0).is_err());
    }

    #[test]
    fn exp2_bandit_mean_on_uniform_simplex() {
        let set = ActionSet::mset(2, 1).unwrap();
        let s = Exp2State::new(&set, 1.0, 0.2, FeedbackMode::Bandit).unwrap();
        let mean = exact_estimator_mean_exp2(&s, &[0.5, 0.3]).unwrap();
        assert_relative_eq!(mean[0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(mean[1], 0.3, epsilon = 1e-12);
    }
}
