//! Sums of independent Bernoulli variables and their Kullback-Leibler divergence.

use crate::error::{Error, Result};

/// A distribution on `0..=K`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteDistribution {
    pmf: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(pmf: Vec<f64>) -> Result<Self> {
        if pmf.is_empty() || pmf.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
            return Err(Error::invalid("pmf entries must be finite and nonnegative"));
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("pmf sums to {total}")));
        }
        Ok(Self { pmf })
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn support_max(&self) -> usize {
        self.pmf.len() - 1
    }

    pub fn mean(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }
}

/// Exact pmf of `sum_i Bernoulli(p_i)` by iterated convolution.
pub fn poisson_binomial(params: &[f64]) -> Result<DiscreteDistribution> {
    if let Some(p) = params.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
        return Err(Error::invalid(format!("Bernoulli means must lie in (0, 1), got {p}")));
    }
    let mut pmf = vec![1.0];
    for &p in params {
        let mut next = vec![0.0; pmf.len() + 1];
        for (k, &v) in pmf.iter().enumerate() {
            next[k] += v * (1.0 - p);
            next[k + 1] += v * p;
        }
        pmf = next;
    }
    DiscreteDistribution::new(pmf)
}

/// `KL(P || Q)` in nats. Zero-probability terms of `P` contribute nothing; mass of
/// `P` where `Q` vanishes is rejected.
pub fn kl_divergence(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    if p.pmf.len() != q.pmf.len() {
        return Err(Error::DimensionMismatch { expected: p.pmf.len(), got: q.pmf.len() });
    }
    let mut kl = 0.0;
    for (&a, &b) in p.pmf.iter().zip(&q.pmf) {
        if a == 0.0 {
            continue;
        }
        if b == 0.0 {
            return Err(Error::Numerical("KL is infinite: second argument vanishes on the support".into()));
        }
        kl += a * (a / b).ln();
    }
    Ok(kl.max(0.0))
}

/// Which of the two perturbed means is repeated on the first `l` summands.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KlQ {
    P,
    PPrime,
}

/// Exact `KL(B, B')` and the bound `2 (p' - p)^2 / ((1 - p') (n + 2) q)`, where
/// `B` (resp. `B'`) is the sum of `n + 1` Bernoullis with means `p` (resp. `p'`),
/// then `q` repeated `l` times, then `tail` repeated `n - l` times.
pub fn kl_bound_check(p: f64, p_prime: f64, q: KlQ, n: usize, l: usize, tail: f64) -> Result<(f64, f64)> {
    if n == 0 || 2 * l < n || l > n {
        return Err(Error::invalid(format!("need 1/2 <= n/2 <= l <= n (n = {n}, l = {l})")));
    }
    for (name, v) in [("p", p), ("p'", p_prime), ("tail", tail)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::invalid(format!("{name} must lie in (0, 1), got {v}")));
        }
    }
    let qv = match q {
        KlQ::P => p,
        KlQ::PPrime => p_prime,
    };
    let mut shared = vec![qv; l];
    shared.extend(std::iter::repeat_n(tail, n - l));
    let with = |first: f64| {
        let mut params = vec![first];
        params.extend_from_slice(&shared);
        poisson_binomial(&params)
    };
    let kl = kl_divergence(&with(p)?, &with(p_prime)?)?;
    let bound = 2.0 * (p_prime - p).powi(2) / ((1.0 - p_prime) * (n as f64 + 2.0) * qv);
    Ok((kl, bound))
}
