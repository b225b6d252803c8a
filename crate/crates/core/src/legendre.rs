//! Separable Legendre functions built from a potential `psi`.
//!
//! For a potential `psi: (-inf, a) -> (0, inf)` the associated function is
//! `F(x) = sum_i int_0^{x_i} psi^{-1}(s) ds` on `D = (0, inf)^d`, so that
//! `grad F = psi^{-1}` and `grad F* = psi` coordinatewise. Two families are
//! provided: `psi = exp` (negative entropy) and `psi(x) = (-x)^{-q}`, `q > 1`.

use std::fmt;
use std::str::FromStr;

use crate::action_sets::{parse_params, take_param};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PotentialSpec {
    /// `psi = exp`, giving `F(x) = sum x log x - x`.
    Exp,
    /// `psi(x) = (-x)^{-q}` on `(-inf, 0)`.
    Power { q: f64 },
}

impl PotentialSpec {
    pub fn power(q: f64) -> Result<Self> {
        if !(q.is_finite() && q > 1.0) {
            return Err(Error::invalid(format!("power potential needs q > 1, got {q}")));
        }
        Ok(PotentialSpec::Power { q })
    }

    /// Upper end `a` of the dual domain `(-inf, a)`.
    pub fn dual_upper(&self) -> f64 {
        match self {
            PotentialSpec::Exp => f64::INFINITY,
            PotentialSpec::Power { .. } => 0.0,
        }
    }

    /// `psi(u)`, i.e. one coordinate of `grad F*`.
    #[inline]
    pub fn psi(&self, u: f64) -> f64 {
        match *self {
            PotentialSpec::Exp => u.exp(),
            PotentialSpec::Power { q } => (-u).powf(-q),
        }
    }

    /// `psi^{-1}(x)`, i.e. one coordinate of `grad F`.
    #[inline]
    pub fn psi_inv(&self, x: f64) -> f64 {
        match *self {
            PotentialSpec::Exp => x.ln(),
            PotentialSpec::Power { q } => -x.powf(-1.0 / q),
        }
    }

    #[inline]
    pub fn psi_prime(&self, u: f64) -> f64 {
        match *self {
            PotentialSpec::Exp => u.exp(),
            PotentialSpec::Power { q } => q * (-u).powf(-q - 1.0),
        }
    }

    /// `int_0^x psi^{-1}(s) ds`, continuous at `x = 0`.
    #[inline]
    fn primitive(&self, x: f64) -> f64 {
        match *self {
            PotentialSpec::Exp => {
                if x == 0.0 {
                    0.0
                } else {
                    x * x.ln() - x
                }
            }
            PotentialSpec::Power { q } => -(q / (q - 1.0)) * x.powf(1.0 - 1.0 / q),
        }
    }

    /// One coordinate of the conjugate `F*`.
    #[inline]
    fn conjugate(&self, u: f64) -> f64 {
        match *self {
            PotentialSpec::Exp => u.exp(),
            PotentialSpec::Power { q } => (-u).powf(1.0 - q) / (q - 1.0),
        }
    }
}

impl FromStr for PotentialSpec {
    type Err = Error;

    /// `negentropy` (or `exp`) and `inf:q=<value>`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, body) = s.split_once(':').unwrap_or((s, ""));
        match kind.trim() {
            "negentropy" | "exp" => Ok(PotentialSpec::Exp),
            "inf" | "power" => {
                let p = parse_params(s, body)?;
                PotentialSpec::power(take_param(s, &p, "q")?)
            }
            other => Err(Error::Parse {
                input: s.to_string(),
                reason: format!("unknown Legendre family `{other}`"),
            }),
        }
    }
}

impl fmt::Display for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialSpec::Exp => write!(f, "negentropy"),
            PotentialSpec::Power { q } => write!(f, "inf:q={q}"),
        }
    }
}

/// `Theta(x) = e^x - 1 - x`.
#[inline]
pub fn theta(x: f64) -> f64 {
    x.exp_m1() - x
}

/// A separable Legendre function on `(0, inf)^dim`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LegendreFunction {
    potential: PotentialSpec,
    dim: usize,
}

impl LegendreFunction {
    /// `F(x) = sum x_i log x_i - x_i`.
    pub fn negentropy(dim: usize) -> Self {
        Self {
            potential: PotentialSpec::Exp,
            dim,
        }
    }

    pub fn potential_legendre(spec: PotentialSpec, dim: usize) -> Result<Self> {
        if let PotentialSpec::Power { q } = spec {
            PotentialSpec::power(q)?;
        }
        Ok(Self { potential: spec, dim })
    }

    pub fn potential(&self) -> PotentialSpec {
        self.potential
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        Ok(())
    }

    fn check_closure(&self, x: &[f64]) -> Result<()> {
        self.check_dim(x)?;
        match x.iter().position(|&v| !(v.is_finite() && v >= 0.0)) {
            Some(i) => Err(Error::OutsideDomain(format!("x[{i}] = {} is not in [0, inf)", x[i]))),
            None => Ok(()),
        }
    }

    fn check_interior(&self, x: &[f64]) -> Result<()> {
        self.check_dim(x)?;
        match x.iter().position(|&v| !(v.is_finite() && v > 0.0)) {
            Some(i) => Err(Error::OutsideDomain(format!("x[{i}] = {} is not in (0, inf)", x[i]))),
            None => Ok(()),
        }
    }

    fn check_dual(&self, u: &[f64]) -> Result<()> {
        self.check_dim(u)?;
        let upper = self.potential.dual_upper();
        match u.iter().position(|&v| !(v.is_finite() && v < upper)) {
            Some(i) => Err(Error::OutsideDomain(format!("u[{i}] = {} is outside the dual domain", u[i]))),
            None => Ok(()),
        }
    }

    pub fn in_dual_domain(&self, u: f64) -> bool {
        u.is_finite() && u < self.potential.dual_upper()
    }

    /// `F(x)` on the closure of the domain.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.check_closure(x)?;
        Ok(x.iter().map(|&v| self.potential.primitive(v)).sum())
    }

    /// `grad F(x)`, defined only strictly inside the domain.
    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_interior(x)?;
        Ok(x.iter().map(|&v| self.potential.psi_inv(v)).collect())
    }

    /// The dual map `grad F* = (grad F)^{-1}`.
    pub fn grad_conjugate(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_dual(u)?;
        Ok(u.iter().map(|&v| self.potential.psi(v)).collect())
    }

    /// `F*(u)`.
    pub fn conjugate(&self, u: &[f64]) -> Result<f64> {
        self.check_dual(u)?;
        Ok(u.iter().map(|&v| self.potential.conjugate(v)).sum())
    }

    /// `D_F(x, y) = F(x) - F(y) - (x - y)^T grad F(y)` for `x` in the closure, `y` in the interior.
    pub fn bregman(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_closure(x)?;
        self.check_interior(y)?;
        let p = self.potential;
        Ok(x
            .iter()
            .zip(y)
            .map(|(&a, &b)| match p {
                // rearranged to avoid cancellation: a log(a/b) - a + b
                PotentialSpec::Exp => {
                    if a == 0.0 {
                        b
                    } else {
                        a * (a / b).ln() - a + b
                    }
                }
                PotentialSpec::Power { .. } => p.primitive(a) - p.primitive(b) - (a - b) * p.psi_inv(b),
            })
            .sum())
    }

    /// `D_{F*}(u, v) = F*(u) - F*(v) - (u - v)^T grad F*(v)`. For the negative
    /// entropy this is evaluated as `sum exp(v_i) Theta(u_i - v_i)`.
    pub fn dual_bregman(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        self.check_dual(u)?;
        self.check_dual(v)?;
        match self.potential {
            PotentialSpec::Exp => Ok(u.iter().zip(v).map(|(&a, &b)| b.exp() * theta(a - b)).sum()),
            PotentialSpec::Power { .. } => self.dual_bregman_generic(u, v),
        }
    }

    /// `D_{F*}` straight from the definition, for every family.
    pub fn dual_bregman_generic(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        self.check_dual(u)?;
        self.check_dual(v)?;
        let p = self.potential;
        Ok(u
            .iter()
            .zip(v)
            .map(|(&a, &b)| p.conjugate(a) - p.conjugate(b) - (a - b) * p.psi(b))
            .sum())
    }
}

/// Returns `(D_{F*}(u, v), 1/2 sum psi'(v_i) (u_i - v_i)^2)` for `u <= v` coordinatewise.
pub fn psi_quadratic_bound(spec: PotentialSpec, u: &[f64], v: &[f64]) -> Result<(f64, f64)> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            got: v.len(),
        });
    }
    if let Some(i) = u.iter().zip(v).position(|(a, b)| a > b) {
        return Err(Error::invalid(format!("u[{i}] > v[{i}]; the bound needs u <= v")));
    }
    let f = LegendreFunction::potential_legendre(spec, u.len())?;
    let lhs = f.dual_bregman(u, v)?;
    let rhs = 0.5
        * u.iter()
            .zip(v)
            .map(|(&a, &b)| spec.psi_prime(b) * (a - b) * (a - b))
            .sum::<f64>();
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn inf(q: f64, d: usize) -> LegendreFunction {
        LegendreFunction::potential_legendre(PotentialSpec::power(q).unwrap(), d).unwrap()
    }

    #[test]
    fn negentropy_examples() {
        let f = LegendreFunction::negentropy(2);
        assert_eq!(f.grad(&[1.0, 1.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(f.value(&[1.0, 1.0]).unwrap(), -2.0);
        let g = f.grad_conjugate(&[0.0, -1.0]).unwrap();
        assert_eq!(g[0], 1.0);
        assert_relative_eq!(g[1], 0.36787944117144233, epsilon = 1e-15);
        // boundary: F defined with 0 log 0 = 0, gradient rejected
        assert_eq!(f.value(&[0.0, 1.0]).unwrap(), -1.0);
        assert!(f.grad(&[0.0, 1.0]).is_err());
        assert!(f.value(&[-0.1, 1.0]).is_err());
    }

    #[test]
    fn power_examples() {
        let f = inf(2.0, 2);
        assert_eq!(f.grad(&[1.0, 1.0]).unwrap(), vec![-1.0, -1.0]);
        assert_relative_eq!(f.value(&[1.0, 4.0]).unwrap(), -6.0, epsilon = 1e-14);
        assert_relative_eq!(inf(2.0, 1).grad_conjugate(&[-0.5]).unwrap()[0], 4.0, epsilon = 1e-14);
        assert!(inf(2.0, 1).grad_conjugate(&[0.0]).is_err());
        assert!(PotentialSpec::power(1.0).is_err());
        assert!(PotentialSpec::power(0.5).is_err());
    }

    #[test]
    fn bregman_examples() {
        let f = LegendreFunction::negentropy(2);
        assert_eq!(f.bregman(&[1.0, 1.0], &[1.0, 1.0]).unwrap(), 0.0);
        let f1 = LegendreFunction::negentropy(1);
        assert_relative_eq!(f1.bregman(&[2.0], &[1.0]).unwrap(), 2.0 * 2f64.ln() - 1.0, epsilon = 1e-15);
        assert_relative_eq!(inf(2.0, 1).bregman(&[4.0], &[1.0]).unwrap(), 1.0, epsilon = 1e-14);
        assert!(f1.bregman(&[1.0], &[0.0]).is_err());
    }

    #[test]
    fn dual_bregman_examples() {
        let f1 = LegendreFunction::negentropy(1);
        assert_eq!(f1.dual_bregman(&[0.3], &[0.3]).unwrap(), 0.0);
        assert_relative_eq!(f1.dual_bregman(&[-1.0], &[0.0]).unwrap(), (-1f64).exp(), epsilon = 1e-15);
        let g = inf(2.0, 1);
        assert_relative_eq!(g.dual_bregman(&[-2.0], &[-1.0]).unwrap(), 0.5, epsilon = 1e-14);
        // duality swap: D_F*(u, v) = D_F(grad F*(v), grad F*(u))
        let x = g.grad_conjugate(&[-1.0]).unwrap();
        let y = g.grad_conjugate(&[-2.0]).unwrap();
        assert_relative_eq!(g.bregman(&x, &y).unwrap(), 0.5, epsilon = 1e-14);
        assert!(g.dual_bregman(&[0.5], &[-1.0]).is_err());
    }

    #[test]
    fn quadratic_bound_examples() {
        let spec = PotentialSpec::power(2.0).unwrap();
        assert_eq!(psi_quadratic_bound(spec, &[-1.0], &[-1.0]).unwrap(), (0.0, 0.0));
        let (lhs, rhs) = psi_quadratic_bound(spec, &[-2.0], &[-1.0]).unwrap();
        assert_relative_eq!(lhs, 0.5, epsilon = 1e-14);
        assert_relative_eq!(rhs, 1.0, epsilon = 1e-14);
        assert!(psi_quadratic_bound(spec, &[-0.5], &[-1.0]).is_err());
        let spec3 = PotentialSpec::power(3.0).unwrap();
        for i in 1..40 {
            for j in 1..=i {
                let v = -(j as f64) * 0.1;
                let u = -(i as f64) * 0.1 - 0.05;
                let (l, r) = psi_quadratic_bound(spec3, &[u], &[v]).unwrap();
                assert!(l <= r, "u={u} v={v}: {l} > {r}");
            }
        }
    }

    #[test]
    fn spec_grammar() {
        assert_eq!("negentropy".parse::<PotentialSpec>().unwrap(), PotentialSpec::Exp);
        assert_eq!("inf:q=2".parse::<PotentialSpec>().unwrap(), PotentialSpec::Power { q: 2.0 });
        assert_eq!(PotentialSpec::Power { q: 1.5 }.to_string(), "inf:q=1.5");
        assert!("inf:q=1".parse::<PotentialSpec>().is_err());
        assert!("barrier".parse::<PotentialSpec>().is_err());
    }
}
