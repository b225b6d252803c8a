//! Polyhedral descriptions of `Conv(A)`.
//!
//! Every system carries the box `0 <= x <= 1` implicitly. Kinds whose hull is a
//! product of simple blocks also expose that block structure so the projection
//! solver can use per-block bisection instead of the generic cyclic scheme.

use serde::Serialize;

/// `sum_k coeff_k * x[index_k]` compared against `rhs`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinearConstraint {
    pub terms: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn new(terms: Vec<(usize, f64)>, rhs: f64) -> Self {
        Self { terms, rhs }
    }

    /// Constraint `sum_{i in coords} x_i (op) rhs`.
    pub fn sum_of(coords: impl IntoIterator<Item = usize>, rhs: f64) -> Self {
        Self {
            terms: coords.into_iter().map(|i| (i, 1.0)).collect(),
            rhs,
        }
    }

    pub fn lhs(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(i, c)| c * x[i]).sum()
    }
}

/// Separable pieces of the hull for which an exact one-dimensional projection exists.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Block {
    /// `{ x in [0,1]^coords : sum x = total }`.
    CappedSimplex { coords: Vec<usize>, total: f64 },
    /// `x_j = s` on `first`, `x_j = 1 - s` on `second`, `s in [0,1]`.
    TiedIntervals { first: Vec<usize>, second: Vec<usize> },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstraintSystem {
    pub dim: usize,
    pub equalities: Vec<LinearConstraint>,
    /// Read as `lhs <= rhs`.
    pub inequalities: Vec<LinearConstraint>,
    /// Present when the blocks cover every coordinate exactly once.
    pub blocks: Option<Vec<Block>>,
}

impl ConstraintSystem {
    /// Largest violation over equalities, inequalities and the unit box.
    pub fn violation(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let mut worst = 0.0f64;
        for c in &self.equalities {
            worst = worst.max((c.lhs(x) - c.rhs).abs());
        }
        for c in &self.inequalities {
            worst = worst.max(c.lhs(x) - c.rhs);
        }
        for &v in x {
            worst = worst.max(-v).max(v - 1.0);
        }
        if x.iter().any(|v| !v.is_finite()) {
            return f64::INFINITY;
        }
        worst
    }

    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim && self.violation(x) <= tol
    }

    /// Smallest slack over the inequality rows and the box (negative when violated).
    pub fn min_slack(&self, x: &[f64]) -> f64 {
        let mut slack = f64::INFINITY;
        for c in &self.inequalities {
            slack = slack.min(c.rhs - c.lhs(x));
        }
        for &v in x {
            slack = slack.min(v).min(1.0 - v);
        }
        slack
    }

    /// Largest `theta in [0,1]` such that `(x - theta * a) / (1 - theta)` satisfies
    /// every `<=` constraint, assuming `x` and the vertex `a` both do.
    pub(crate) fn max_inequality_step(&self, x: &[f64], a: &[f64]) -> f64 {
        let mut theta = 1.0f64;
        for c in &self.inequalities {
            let gap_a = c.rhs - c.lhs(a);
            if gap_a > 1e-12 {
                theta = theta.min((c.rhs - c.lhs(x)) / gap_a);
            }
        }
        theta.clamp(0.0, 1.0)
    }
}
