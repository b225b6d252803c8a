//! Bregman projection onto `Conv(A)` for separable Legendre functions.
//!
//! Block-structured hulls are solved exactly by scalar bisection on a single
//! multiplier per block. Other hulls (DAG flows, rankings with several slots)
//! go through cyclic dual coordinate ascent: exact projections on each
//! equality hyperplane, and corrected projections on each half-space, which
//! converges to the projection onto the intersection.

use crate::action_sets::{ActionSet, Block, ConstraintSystem, LinearConstraint};
use crate::error::{Error, Result};
use crate::legendre::{LegendreFunction, PotentialSpec};

pub const MAX_BISECTION_STEPS: usize = 200;
pub const MAX_CYCLIC_SWEEPS: usize = 10_000;
const RESIDUAL_TOL: f64 = 1e-12;
const ACCEPT_TOL: f64 = 1e-9;

/// Finds a root of the nonincreasing function `g` on the open interval
/// `(lower, upper)`; `g` must be positive near `lower` and negative near `upper`.
pub(crate) fn bisect_decreasing(g: impl Fn(f64) -> f64, lower: f64, upper: f64, start: f64) -> Result<f64> {
    let mut lo = start;
    let mut hi = start;
    let mut step = 1.0;
    let mut expansions = 0;
    while g(lo) < 0.0 {
        lo = if lower.is_finite() { lower + (lo - lower) * 0.5 } else { lo - step };
        step *= 2.0;
        expansions += 1;
        if expansions > 2000 {
            return Err(Error::NoConvergence { iterations: expansions, residual: g(lo).abs() });
        }
    }
    step = 1.0;
    while g(hi) > 0.0 {
        hi = if upper.is_finite() { upper - (upper - hi) * 0.5 } else { hi + step };
        step *= 2.0;
        expansions += 1;
        if expansions > 2000 {
            return Err(Error::NoConvergence { iterations: expansions, residual: g(hi).abs() });
        }
    }
    for _ in 0..MAX_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = g(mid);
        if v == 0.0 {
            return Ok(mid);
        }
        if v > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // the endpoint with the smaller residual
    Ok(if g(lo).abs() <= g(hi).abs() { lo } else { hi })
}

/// Exact projection onto `{ x in [0,1]^coords : sum x = total }`, writing into `x`.
fn project_capped_simplex(p: PotentialSpec, w: &[f64], coords: &[usize], total: f64, x: &mut [f64]) -> Result<()> {
    let k = coords.len() as f64;
    if total >= k {
        coords.iter().for_each(|&i| x[i] = 1.0);
        return Ok(());
    }
    let cap = p.psi_inv(1.0);
    let duals: Vec<f64> = coords.iter().map(|&i| p.psi_inv(w[i])).collect();
    let at = |nu: f64| -> f64 { duals.iter().map(|&u| p.psi((u - nu).min(cap))).sum::<f64>() - total };
    let nu = bisect_decreasing(at, f64::NEG_INFINITY, f64::INFINITY, 0.0)?;
    for (&i, &u) in coords.iter().zip(&duals) {
        x[i] = p.psi((u - nu).min(cap));
    }
    Ok(())
}

/// Exact projection onto `x = s` on `first`, `x = 1 - s` on `second`.
fn project_tied(p: PotentialSpec, w: &[f64], first: &[usize], second: &[usize], x: &mut [f64]) -> Result<()> {
    let sum_dual = |idx: &[usize]| idx.iter().map(|&i| p.psi_inv(w[i])).sum::<f64>();
    let (k1, k2) = (first.len() as f64, second.len() as f64);
    let c = sum_dual(first) - sum_dual(second);
    // h(s) = k1 psi^{-1}(s) - k2 psi^{-1}(1 - s) - c is increasing in s.
    let h = |s: f64| k1 * p.psi_inv(s) - k2 * p.psi_inv(1.0 - s) - c;
    // Solve on the side where the root is at most 1/2, in dual coordinates, so
    // tiny probabilities keep their relative accuracy.
    let (small, small_is_first) = if h(0.5) >= 0.0 {
        let g = |u: f64| -(k1 * u - k2 * p.psi_inv(1.0 - p.psi(u)) - c);
        let top = p.psi_inv(0.5);
        let u = bisect_decreasing(g, f64::NEG_INFINITY, top, top)?;
        (p.psi(u).min(0.5), true)
    } else {
        let g = |u: f64| -(k2 * u - k1 * p.psi_inv(1.0 - p.psi(u)) + c);
        let top = p.psi_inv(0.5);
        let u = bisect_decreasing(g, f64::NEG_INFINITY, top, top)?;
        (p.psi(u).min(0.5), false)
    };
    let (s_first, s_second) = if small_is_first { (small, 1.0 - small) } else { (1.0 - small, small) };
    first.iter().for_each(|&i| x[i] = s_first);
    second.iter().for_each(|&i| x[i] = s_second);
    Ok(())
}

/// Multiplier `nu` with `sum c_i psi(u_i - nu c_i) = rhs`.
fn hyperplane_multiplier(p: PotentialSpec, u: &[f64], row: &LinearConstraint) -> Result<f64> {
    let upper_dual = p.dual_upper();
    // admissible nu keeps every touched coordinate inside the dual domain
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    if upper_dual.is_finite() {
        for &(i, c) in &row.terms {
            let bound = (u[i] - upper_dual) / c;
            if c > 0.0 {
                lo = lo.max(bound);
            } else if c < 0.0 {
                hi = hi.min(bound);
            }
        }
    }
    let g = |nu: f64| -> f64 {
        row.terms.iter().map(|&(i, c)| c * p.psi(u[i] - nu * c)).sum::<f64>() - row.rhs
    };
    let start = match (lo.is_finite(), hi.is_finite()) {
        (true, true) => 0.5 * (lo + hi),
        (true, false) => lo + 1.0,
        (false, true) => hi - 1.0,
        (false, false) => 0.0,
    };
    bisect_decreasing(g, lo, hi, start)
}

fn cyclic_projection(f: &LegendreFunction, w: &[f64], sys: &ConstraintSystem) -> Result<Vec<f64>> {
    let p = f.potential();
    let mut u = f.grad(w)?;
    let mut lambdas = vec![0.0; sys.inequalities.len()];
    let mut x: Vec<f64> = u.iter().map(|&v| p.psi(v)).collect();
    let mut residual = sys.violation(&x);
    for sweep in 0..MAX_CYCLIC_SWEEPS {
        let before = u.clone();
        for row in &sys.equalities {
            let nu = hyperplane_multiplier(p, &u, row)?;
            for &(i, c) in &row.terms {
                u[i] -= nu * c;
            }
        }
        for (row, lambda) in sys.inequalities.iter().zip(lambdas.iter_mut()) {
            // undo the previous multiplier, then re-solve with lambda >= 0
            for &(i, c) in &row.terms {
                u[i] += *lambda * c;
            }
            let inside = row.terms.iter().all(|&(i, _)| f.in_dual_domain(u[i]));
            let satisfied = inside && row.terms.iter().map(|&(i, c)| c * p.psi(u[i])).sum::<f64>() <= row.rhs;
            *lambda = if satisfied { 0.0 } else { hyperplane_multiplier(p, &u, row)?.max(0.0) };
            for &(i, c) in &row.terms {
                u[i] -= *lambda * c;
            }
        }
        x = u.iter().map(|&v| p.psi(v)).collect();
        residual = sys.violation(&x);
        let moved = u.iter().zip(&before).fold(0.0f64, |a, (v, b)| a.max((v - b).abs()));
        if residual <= RESIDUAL_TOL && moved <= 1e-10 {
            return Ok(x);
        }
        if sweep + 1 == MAX_CYCLIC_SWEEPS {
            break;
        }
    }
    if residual <= ACCEPT_TOL {
        Ok(x)
    } else {
        Err(Error::NoConvergence { iterations: MAX_CYCLIC_SWEEPS, residual })
    }
}

/// `argmin_{x in Conv(A)} D_F(x, w)` for `w` in the domain of `F`.
pub fn bregman_project(f: &LegendreFunction, w: &[f64], set: &ActionSet) -> Result<Vec<f64>> {
    if w.len() != set.dim() {
        return Err(Error::DimensionMismatch { expected: set.dim(), got: w.len() });
    }
    f.grad(w)?;
    let sys = set.conv_constraints();
    project_onto(f, w, &sys)
}

pub(crate) fn project_onto(f: &LegendreFunction, w: &[f64], sys: &ConstraintSystem) -> Result<Vec<f64>> {
    let p = f.potential();
    let x = match &sys.blocks {
        Some(blocks) => {
            let mut x = vec![0.0; w.len()];
            for block in blocks {
                match block {
                    Block::CappedSimplex { coords, total } => project_capped_simplex(p, w, coords, *total, &mut x)?,
                    Block::TiedIntervals { first, second } => project_tied(p, w, first, second, &mut x)?,
                }
            }
            x
        }
        None => cyclic_projection(f, w, sys)?,
    };
    let residual = sys.violation(&x);
    if residual > ACCEPT_TOL {
        return Err(Error::NoConvergence { iterations: MAX_BISECTION_STEPS, residual });
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn inf2(d: usize) -> LegendreFunction {
        LegendreFunction::potential_legendre(PotentialSpec::power(2.0).unwrap(), d).unwrap()
    }

    #[test]
    fn simplex_negentropy_is_normalization() {
        let set = ActionSet::mset(2, 1).unwrap();
        let f = LegendreFunction::negentropy(2);
        let x = bregman_project(&f, &[1.0, 3.0], &set).unwrap();
        assert_relative_eq!(x[0], 0.25, epsilon = 1e-12);
        assert_relative_eq!(x[1], 0.75, epsilon = 1e-12);
        let x = bregman_project(&f, &[2.0, 2.0], &set).unwrap();
        assert_relative_eq!(x[0], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn feasible_point_is_fixed() {
        let set = ActionSet::mset(4, 2).unwrap();
        let w = [0.3, 0.7, 0.6, 0.4];
        for f in [LegendreFunction::negentropy(4), inf2(4)] {
            let x = bregman_project(&f, &w, &set).unwrap();
            for (a, b) in x.iter().zip(&w) {
                assert_relative_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn capped_coordinates() {
        // one huge weight saturates at 1
        let set = ActionSet::mset(3, 2).unwrap();
        for f in [LegendreFunction::negentropy(3), inf2(3)] {
            let x = bregman_project(&f, &[100.0, 0.001, 0.001], &set).unwrap();
            assert_relative_eq!(x[0], 1.0, epsilon = 1e-12);
            assert_relative_eq!(x[1], 0.5, epsilon = 1e-9);
        }
    }

    #[test]
    fn tied_block_negentropy_closed_form() {
        // second half of exp2lb(4): coordinates 2 and 3, s = w2 / (w2 + w3)
        let set = ActionSet::exp2_lower_bound(4).unwrap();
        let f = LegendreFunction::negentropy(4);
        let x = bregman_project(&f, &[0.5, 0.5, 1e-6, 3.0], &set).unwrap();
        assert_relative_eq!(x[2], 1e-6 / (3.0 + 1e-6), max_relative = 1e-10);
        assert_relative_eq!(x[3], 1.0 - 1e-6 / (3.0 + 1e-6), epsilon = 1e-12);
    }

    #[test]
    fn cyclic_matches_block_solver() {
        // ranking with one slot is a simplex; compare the generic path against the block path
        let set = ActionSet::ranking(1, 4).unwrap();
        let mut sys = set.conv_constraints();
        let w = [0.2, 1.7, 0.4, 0.9];
        for f in [LegendreFunction::negentropy(4), inf2(4)] {
            let exact = project_onto(&f, &w, &sys).unwrap();
            sys.blocks = None;
            let cyclic = project_onto(&f, &w, &sys).unwrap();
            sys.blocks = set.conv_constraints().blocks;
            for (a, b) in exact.iter().zip(&cyclic) {
                assert_relative_eq!(a, b, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn rejects_points_outside_domain() {
        let set = ActionSet::mset(2, 1).unwrap();
        assert!(bregman_project(&LegendreFunction::negentropy(2), &[0.0, 1.0], &set).is_err());
        assert!(bregman_project(&LegendreFunction::negentropy(3), &[1.0, 1.0], &set).is_err());
    }
}
