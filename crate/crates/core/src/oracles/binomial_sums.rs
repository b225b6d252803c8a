//! Closed forms built on `sum_i C(k, i)^2 c^i`-type sums, evaluated in the log domain.

use crate::error::{Error, Result};

pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + terms.iter().map(|&t| (t - max).exp()).sum::<f64>().ln()
}

/// `ln C(k, i)` by summing logarithms; exact enough for `k` in the millions.
pub fn ln_binomial(k: usize, i: usize) -> f64 {
    if i > k {
        return f64::NEG_INFINITY;
    }
    let i = i.min(k - i);
    (0..i).map(|j| ((k - j) as f64).ln() - ((j + 1) as f64).ln()).sum()
}

fn ln_binomials(k: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(k + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..=k {
        acc += ((k - i + 1) as f64).ln() - (i as f64).ln();
        out.push(acc);
    }
    out
}

fn check_quarter(d: usize) -> Result<usize> {
    if d == 0 || !d.is_multiple_of(4) {
        return Err(Error::invalid(format!("d must be a positive multiple of 4, got {d}")));
    }
    Ok(d / 4)
}

/// `sum_{i<k} (1 - i/k) C(k,i)^2 c^i / sum_{i<=k} C(k,i)^2 c^i` with `ln c` given.
fn weighted_ratio(k: usize, ln_c: f64) -> f64 {
    let lb = ln_binomials(k);
    let den: Vec<f64> = (0..=k).map(|i| 2.0 * lb[i] + i as f64 * ln_c).collect();
    let num: Vec<f64> = (0..k)
        .map(|i| 2.0 * lb[i] + i as f64 * ln_c + (1.0 - i as f64 / k as f64).ln())
        .collect();
    (log_sum_exp(&num) - log_sum_exp(&den)).exp()
}

/// Ratio `sum (1 - i/k) C(k,i)^2 c^i / sum C(k,i)^2 c^i`.
pub fn tech1_ratio(k: usize, c: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::invalid(format!("c must be positive, got {c}")));
    }
    Ok(weighted_ratio(k, c.ln()))
}

/// `(n d / 16) tanh(eta d / 8)`: expected regret of Exp2 against the alternating adversary.
pub fn exp2_alternating_regret(d: usize, n: usize, eta: f64) -> Result<f64> {
    check_quarter(d)?;
    if !n.is_multiple_of(2) {
        return Err(Error::invalid(format!("n must be even, got {n}")));
    }
    if eta.is_nan() || eta < 0.0 {
        return Err(Error::invalid("eta must be nonnegative"));
    }
    let (d, n) = (d as f64, n as f64);
    Ok(n * d / 16.0 * (eta * d / 8.0).tanh())
}

fn check_skew(d: usize, eta: f64, eps: f64) -> Result<usize> {
    let k = check_quarter(d)?;
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::invalid(format!("eps must lie in (0, 1], got {eps}")));
    }
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::invalid("eta must be finite and nonnegative"));
    }
    Ok(k)
}

/// The ratio formula `(n eps d / 4) sum_{i<k} (1 - i/k) C(k,i)^2 e^{eta i n eps} / sum_{i<=k} C(k,i)^2 e^{eta i n eps}`
/// with `k = d/4`. It weights every round by the weights Exp2 reaches after all
/// `n` rounds, so it lower-bounds the exact expected regret.
pub fn exp2_epsskew_regret(d: usize, n: usize, eta: f64, eps: f64) -> Result<f64> {
    let k = check_skew(d, eta, eps)?;
    let ratio = weighted_ratio(k, eta * n as f64 * eps);
    Ok(n as f64 * eps * d as f64 / 4.0 * ratio)
}

/// Exact expected regret of Exp2 against the epsilon-skew adversary: round `t`
/// uses the weights after `t - 1` rounds.
pub fn exp2_epsskew_expected_regret(d: usize, n: usize, eta: f64, eps: f64) -> Result<f64> {
    let k = check_skew(d, eta, eps)?;
    Ok((0..n)
        .map(|t| eps * k as f64 * weighted_ratio(k, eta * t as f64 * eps))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn binom(n: u64, k: u64) -> f64 {
        (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
    }

    /// Direct (non-log) evaluation, fine for small k.
    fn direct_ratio(k: usize, c: f64) -> f64 {
        let k64 = k as u64;
        let num: f64 = (0..k).map(|i| (1.0 - i as f64 / k as f64) * binom(k64, i as u64).powi(2) * c.powi(i as i32)).sum();
        let den: f64 = (0..=k).map(|i| binom(k64, i as u64).powi(2) * c.powi(i as i32)).sum();
        num / den
    }

    #[test]
    fn tech1_examples() {
        assert_relative_eq!(tech1_ratio(1, 2.0).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(tech1_ratio(2, 1.0).unwrap(), 0.5, epsilon = 1e-15);
        for k in 1..30 {
            for c in [1.0, 1.3, 1.7, 2.0] {
                assert_relative_eq!(tech1_ratio(k, c).unwrap(), direct_ratio(k, c), max_relative = 1e-12);
            }
        }
        assert!(tech1_ratio(0, 1.5).is_err());
    }

    #[test]
    fn ln_binomial_matches_product() {
        for (n, k) in [(10, 3), (20, 10), (7, 0), (7, 7)] {
            assert_relative_eq!(ln_binomial(n, k).exp(), binom(n as u64, k as u64), max_relative = 1e-12);
        }
    }

    #[test]
    fn alternating_examples() {
        assert_relative_eq!(exp2_alternating_regret(4, 2, 2.0).unwrap(), 0.5 * 1f64.tanh(), epsilon = 1e-15);
        assert_relative_eq!(exp2_alternating_regret(4, 2, 2.0).unwrap(), 0.380797, epsilon = 1e-6);
        assert_eq!(exp2_alternating_regret(8, 10, 0.0).unwrap(), 0.0);
        assert_relative_eq!(exp2_alternating_regret(8, 100, 1.0).unwrap(), 38.0797, epsilon = 1e-4);
        assert!(exp2_alternating_regret(6, 2, 1.0).is_err());
        assert!(exp2_alternating_regret(4, 3, 1.0).is_err());
    }

    #[test]
    fn alternating_formula_matches_its_derivation() {
        // nd/16 + nd/8 * 1/(1 + exp(-eta d/4)) - nd/8
        for (d, n, eta) in [(4usize, 10usize, 0.3), (8, 64, 0.05), (12, 6, 2.0)] {
            let (df, nf) = (d as f64, n as f64);
            let raw = nf * df / 16.0 + nf * df / 8.0 / (1.0 + (-eta * df / 4.0).exp()) - nf * df / 8.0;
            assert_relative_eq!(exp2_alternating_regret(d, n, eta).unwrap(), raw, max_relative = 1e-12);
        }
    }

    #[test]
    fn epsskew_small_case() {
        // k = 1: (n eps) * 1 / (1 + e^{eta n eps})
        let v = exp2_epsskew_regret(4, 2, 1.0, 0.1).unwrap();
        assert_relative_eq!(v, 0.2 / (1.0 + 0.2f64.exp()), epsilon = 1e-15);
        // exact expectation: eps * sum_t 1/(1 + e^{eta (t-1) eps})
        let exact = exp2_epsskew_expected_regret(4, 2, 1.0, 0.1).unwrap();
        assert_relative_eq!(exact, 0.1 * (0.5 + 1.0 / (1.0 + 0.1f64.exp())), epsilon = 1e-15);
        assert!(v <= exact);
    }

    #[test]
    fn epsskew_large_eta_stays_finite() {
        // dominant term i = k - 1 when eta grows
        let v = exp2_epsskew_regret(16, 100, 1e6, 0.5).unwrap();
        assert!(v.is_finite() && v >= 0.0);
        let k = 4.0;
        let dominant = 100.0 * 0.5 * 4.0 * (1.0 / k) * k * k * (-1e6 * 100.0 * 0.5f64).exp();
        assert!(v <= dominant.max(1e-300) + 1e-300);
        assert!(exp2_epsskew_regret(16, 100, 1.0, 0.0).is_err());
    }
}
