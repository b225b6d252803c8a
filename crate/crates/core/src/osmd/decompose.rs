//! Carathéodory peeling: write a point of `Conv(A)` as a distribution over vertices.

use rand::{Rng, RngCore};

use crate::action_sets::{ActionSet, ActionVector};
use crate::error::{Error, Result};

const FEASIBILITY_TOL: f64 = 1e-9;
const SNAP_TOL: f64 = 1e-13;
const MIN_STEP: f64 = 1e-14;

/// A finite distribution over vertices whose mean is the decomposed point.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexDistribution {
    atoms: Vec<(ActionVector, f64)>,
}

impl VertexDistribution {
    pub fn atoms(&self) -> &[(ActionVector, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `sum_a p(a) a`.
    pub fn mean(&self) -> Vec<f64> {
        let d = self.atoms.first().map_or(0, |(a, _)| a.dim());
        let mut x = vec![0.0; d];
        for (a, p) in &self.atoms {
            for &i in a.support() {
                x[i] += p;
            }
        }
        x
    }

    /// Inverse-CDF draw over the atoms in construction order.
    pub fn sample(&self, rng: &mut dyn RngCore) -> &ActionVector {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (a, p) in &self.atoms {
            acc += p;
            if u < acc {
                return a;
            }
        }
        &self.atoms.last().expect("nonempty distribution").0
    }
}

/// Greedy peeling on the unnormalized residual `r` (initially `x`) with remaining
/// mass `mu`. Each step takes the linear-minimization vertex for the direction
/// `-r` (with a penalty on coordinates already at zero), removes the largest
/// multiple `lambda a` that keeps `r / mu` inside the hull, and repeats. Each step
/// pins at least one more coordinate to `0` or `mu`, so at most `d + 1` atoms are
/// produced. Working with `r` rather than the rescaled point keeps rounding errors
/// absolute instead of amplifying them by `1 / mu`.
pub fn decompose(set: &ActionSet, x: &[f64]) -> Result<VertexDistribution> {
    let d = set.dim();
    if x.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x.len() });
    }
    let sys = set.conv_constraints();
    let violation = sys.violation(x);
    if violation > FEASIBILITY_TOL {
        return Err(Error::Infeasible(format!("point violates the hull constraints by {violation:e}")));
    }
    let penalty = set.weight() as f64 + 1.0;
    let mut r: Vec<f64> = x.iter().map(|v| v.clamp(0.0, 1.0)).collect();
    let mut mu = 1.0f64;
    let mut atoms: Vec<(ActionVector, f64)> = Vec::new();

    for _ in 0..=d {
        for v in r.iter_mut() {
            if *v <= SNAP_TOL {
                *v = 0.0;
            } else if mu - *v <= SNAP_TOL {
                *v = mu;
            }
        }
        if r.iter().all(|&v| v == 0.0 || v == mu) {
            let a = ActionVector::from_bits(&r.iter().map(|&v| u8::from(v == mu)).collect::<Vec<_>>())?;
            push_atom(&mut atoms, a, mu);
            return Ok(VertexDistribution { atoms });
        }
        let direction: Vec<f64> = r.iter().map(|&v| if v == 0.0 { penalty } else { -v }).collect();
        let y: Vec<f64> = r.iter().map(|v| v / mu).collect();
        let step = |a: &ActionVector| -> f64 {
            let mut lambda = mu;
            for (i, &ri) in r.iter().enumerate() {
                lambda = lambda.min(if a.contains(i) { ri } else { mu - ri });
            }
            lambda.min(mu * sys.max_inequality_step(&y, &a.to_dense())).max(0.0)
        };
        let mut a = set.linear_minimize(&direction)?;
        let mut lambda = step(&a);
        if lambda <= MIN_STEP * mu {
            // the oracle left the minimal face; fall back to a scan when possible
            let verts = set.enumerate_vertices().map_err(|_| {
                Error::Numerical("peeling stalled and the vertex set is too large to scan".into())
            })?;
            let best = verts.iter().map(|v| (v, step(v))).fold(None::<(&ActionVector, f64)>, |best, (v, t)| {
                match best {
                    Some((_, bt)) if bt >= t => best,
                    _ => Some((v, t)),
                }
            });
            match best {
                Some((v, t)) if t > MIN_STEP * mu => {
                    a = v.clone();
                    lambda = t;
                }
                _ => return Err(Error::Numerical("peeling stalled: no vertex admits a positive step".into())),
            }
        }
        if lambda >= mu * (1.0 - MIN_STEP) {
            push_atom(&mut atoms, a, mu);
            return Ok(VertexDistribution { atoms });
        }
        for &i in a.support() {
            r[i] -= lambda;
        }
        push_atom(&mut atoms, a, lambda);
        mu -= lambda;
    }
    Err(Error::Numerical(format!("decomposition needed more than {} atoms", d + 1)))
}

fn push_atom(atoms: &mut Vec<(ActionVector, f64)>, a: ActionVector, p: f64) {
    if let Some(slot) = atoms.iter_mut().find(|(b, _)| *b == a) {
        slot.1 += p;
    } else {
        atoms.push((a, p));
    }
}
