//! Online stochastic mirror descent over `Conv(A)`.
//!
//! One round: sample `a_t` from a vertex distribution with mean `x_t`, build a
//! loss estimate, take the dual step `grad F(w) = grad F(x_t) - eta * z_est`,
//! and Bregman-project `w` back onto the hull.

mod decompose;
mod projection;

pub use decompose::{decompose, VertexDistribution};
pub use projection::{bregman_project, MAX_BISECTION_STEPS, MAX_CYCLIC_SWEEPS};

use rand::RngCore;

use crate::action_sets::{ActionSet, ActionVector, ConstraintSystem};
use crate::environments::{Feedback, FeedbackMode};
use crate::error::{Error, Result};
use crate::legendre::{LegendreFunction, PotentialSpec};

pub const DEFAULT_INTERIOR_FLOOR: f64 = 1e-12;
const MIN_PLAYED_MASS: f64 = 1e-10;

/// `z_est(i) = z(i) a(i) / x(i)` from the masked observation `a(i) z(i)`.
pub fn estimate_semi_bandit(x: &[f64], a: &ActionVector, observed: &[f64]) -> Result<Vec<f64>> {
    if x.len() != a.dim() || observed.len() != a.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: x.len().min(observed.len()) });
    }
    let mut est = vec![0.0; x.len()];
    for &i in a.support() {
        if x[i] < MIN_PLAYED_MASS {
            return Err(Error::Numerical(format!(
                "played coordinate {i} has mean {:e}; the iterate left the interior",
                x[i]
            )));
        }
        est[i] = observed[i] / x[i];
    }
    Ok(est)
}

/// Which potential family supplies the tuned learning rate and regret bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundFamily {
    /// Negative entropy: `eta = sqrt(2 m log(d/m) / (n d))`, `R_n <= sqrt(2 m d n log(d/m))`.
    Negentropy,
    /// Power potential `(-x)^{-q}`: `R_n <= q sqrt(2 m d n / (q - 1))`.
    Power { q: f64 },
}

impl BoundFamily {
    pub fn for_potential(p: PotentialSpec) -> Self {
        match p {
            PotentialSpec::Exp => BoundFamily::Negentropy,
            PotentialSpec::Power { q } => BoundFamily::Power { q },
        }
    }

    fn check(&self, m: usize, d: usize) -> Result<()> {
        if m == 0 || d < m {
            return Err(Error::invalid(format!("need d >= m >= 1 (m = {m}, d = {d})")));
        }
        match *self {
            BoundFamily::Negentropy if d == m => Err(Error::invalid("d = m makes log(d/m) vanish")),
            BoundFamily::Power { q } if q.is_nan() || q <= 1.0 => Err(Error::invalid(format!("q must exceed 1, got {q}"))),
            _ => Ok(()),
        }
    }
}

pub fn tuned_eta(family: BoundFamily, m: usize, d: usize, n: usize) -> Result<f64> {
    family.check(m, d)?;
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let (m, d, n) = (m as f64, d as f64, n as f64);
    Ok(match family {
        BoundFamily::Negentropy => (2.0 * m * (d / m).ln() / (n * d)).sqrt(),
        BoundFamily::Power { q } => {
            let e = 1.0 - 2.0 / q;
            (2.0 / (q - 1.0) * m.powf(e) / d.powf(e) / n).sqrt()
        }
    })
}

pub fn regret_bound(family: BoundFamily, m: usize, d: usize, n: usize) -> Result<f64> {
    family.check(m, d)?;
    let (m, d, n) = (m as f64, d as f64, n as f64);
    Ok(match family {
        BoundFamily::Negentropy => (2.0 * m * d * n * (d / m).ln()).sqrt(),
        BoundFamily::Power { q } => q * (2.0 / (q - 1.0) * m * d * n).sqrt(),
    })
}

/// Mutable OSMD state for one game.
#[derive(Clone, Debug)]
pub struct OsmdState {
    set: ActionSet,
    legendre: LegendreFunction,
    constraints: ConstraintSystem,
    eta: f64,
    mode: FeedbackMode,
    x: Vec<f64>,
    round: usize,
    floor: f64,
    floor_events: usize,
    current: Option<VertexDistribution>,
}

impl OsmdState {
    /// Starts at `x_1 = argmin_{Conv(A)} F`, obtained as the projection of a point
    /// whose gradient is constant (`F` differs from that divergence by a linear
    /// term that is constant on the hull since every point sums to `m`).
    pub fn new(set: &ActionSet, legendre: LegendreFunction, eta: f64, mode: FeedbackMode) -> Result<Self> {
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::invalid(format!("eta must be positive, got {eta}")));
        }
        if mode == FeedbackMode::Bandit {
            return Err(Error::Unsupported("OSMD runs with full or semi-bandit feedback only".into()));
        }
        if legendre.dim() != set.dim() {
            return Err(Error::DimensionMismatch { expected: set.dim(), got: legendre.dim() });
        }
        // every coordinate must be used by some vertex, otherwise Conv(A) misses the open domain
        for i in 0..set.dim() {
            let mut w = vec![0.0; set.dim()];
            w[i] = -1.0;
            if !set.linear_minimize(&w)?.contains(i) {
                return Err(Error::Infeasible(format!("coordinate {i} is zero on every action")));
            }
        }
        let constraints = set.conv_constraints();
        let x = projection::project_onto(&legendre, &vec![1.0; set.dim()], &constraints)?;
        if x.iter().any(|&v| v <= 0.0) {
            return Err(Error::Infeasible("starting point touches the domain boundary".into()));
        }
        Ok(Self {
            set: set.clone(),
            legendre,
            constraints,
            eta,
            mode,
            x,
            round: 1,
            floor: DEFAULT_INTERIOR_FLOOR,
            floor_events: 0,
            current: None,
        })
    }

    pub fn with_floor(mut self, floor: f64) -> Self {
        self.floor = floor;
        self
    }

    pub fn mean(&self) -> &[f64] {
        &self.x
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn mode(&self) -> FeedbackMode {
        self.mode
    }

    pub fn legendre(&self) -> &LegendreFunction {
        &self.legendre
    }

    pub fn set(&self) -> &ActionSet {
        &self.set
    }

    /// Number of rounds in which a coordinate had to be lifted to the floor.
    pub fn floor_events(&self) -> usize {
        self.floor_events
    }

    /// `w = grad F*(grad F(x_t) - eta z_est)`.
    pub fn dual_step(&self, estimate: &[f64]) -> Result<Vec<f64>> {
        if estimate.len() != self.x.len() {
            return Err(Error::DimensionMismatch { expected: self.x.len(), got: estimate.len() });
        }
        if let Some(i) = estimate.iter().position(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::invalid(format!("loss estimate coordinate {i} is {}", estimate[i])));
        }
        let grad = self.legendre.grad(&self.x)?;
        let dual: Vec<f64> = grad.iter().zip(estimate).map(|(g, z)| g - self.eta * z).collect();
        self.legendre.grad_conjugate(&dual).map_err(|e| Error::Numerical(format!("consistency violated: {e}")))
    }

    /// Loss estimate for the played action.
    pub fn estimate(&self, a: &ActionVector, feedback: &Feedback) -> Result<Vec<f64>> {
        match (self.mode, feedback) {
            (FeedbackMode::Full, Feedback::Full(z)) => Ok(z.clone()),
            (FeedbackMode::SemiBandit, Feedback::SemiBandit(obs)) => estimate_semi_bandit(&self.x, a, obs),
            _ => Err(Error::invalid(format!("feedback {:?} does not match mode {}", feedback.mode(), self.mode))),
        }
    }

    /// Distribution over actions for the current round.
    pub fn distribution(&mut self) -> Result<&VertexDistribution> {
        if self.current.is_none() {
            self.current = Some(decompose(&self.set, &self.x)?);
        }
        Ok(self.current.as_ref().expect("just set"))
    }

    pub fn sample(&mut self, rng: &mut dyn RngCore) -> Result<ActionVector> {
        Ok(self.distribution()?.sample(rng).clone())
    }

    /// Estimate, dual step, projection; advances the round counter.
    pub fn update(&mut self, a: &ActionVector, feedback: &Feedback) -> Result<()> {
        let estimate = self.estimate(a, feedback)?;
        self.update_with_estimate(&estimate)
    }

    pub fn update_with_estimate(&mut self, estimate: &[f64]) -> Result<()> {
        let w = self.dual_step(estimate)?;
        let mut x = projection::project_onto(&self.legendre, &w, &self.constraints)?;
        if x.iter().any(|&v| v < self.floor) {
            self.floor_events += 1;
            x.iter_mut().for_each(|v| *v = v.max(self.floor));
            x = projection::project_onto(&self.legendre, &x, &self.constraints)?;
            x.iter_mut().for_each(|v| *v = v.max(self.floor));
        }
        self.x = x;
        self.round += 1;
        self.current = None;
        Ok(())
    }

    /// Samples `a_t`, asks `respond` for the feedback it generates, and updates.
    pub fn play_round(
        &mut self,
        rng: &mut dyn RngCore,
        respond: impl FnOnce(&ActionVector) -> Feedback,
    ) -> Result<ActionVector> {
        let a = self.sample(rng)?;
        let feedback = respond(&a);
        self.update(&a, &feedback)?;
        Ok(a)
    }
}

/// Starting point `argmin_{Conv(A)} F`.
pub fn osmd_init(set: &ActionSet, legendre: LegendreFunction, eta: f64, mode: FeedbackMode) -> Result<OsmdState> {
    OsmdState::new(set, legendre, eta, mode)
}
