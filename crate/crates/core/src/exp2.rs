//! Exp2: exponential weights over the explicit vertex list.
//!
//! Weights are kept in the log domain and shifted by their maximum after each
//! update. In bandit mode the played distribution is mixed with the uniform
//! distribution over `A` and the loss is estimated with the pseudo-inverse of
//! the second-moment matrix `P = E[a a^T]` under that mixture.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, RngCore};

use crate::action_sets::{ActionSet, ActionVector};
use crate::environments::{Feedback, FeedbackMode};
use crate::error::{Error, Result};

const MIN_COORD_PROB: f64 = 1e-12;
const EIGEN_CUTOFF: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct Exp2State {
    vertices: Arc<[ActionVector]>,
    dim: usize,
    log_weights: Vec<f64>,
    eta: f64,
    gamma: f64,
    mode: FeedbackMode,
}

/// Hedge tuning for `|A|` experts with per-round losses in `[0, m]`.
pub fn hedge_eta(num_actions: usize, m: usize, n: usize) -> Result<f64> {
    if num_actions < 2 || m == 0 || n == 0 {
        return Err(Error::invalid("hedge tuning needs |A| >= 2, m >= 1, n >= 1"));
    }
    Ok((8.0 * (num_actions as f64).ln() / (n as f64)).sqrt() / m as f64)
}

impl Exp2State {
    /// Uniform start. `gamma` must be 0 outside bandit mode and positive in bandit mode.
    pub fn new(set: &ActionSet, eta: f64, gamma: f64, mode: FeedbackMode) -> Result<Self> {
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::invalid(format!("eta must be positive, got {eta}")));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::invalid(format!("gamma must lie in [0, 1], got {gamma}")));
        }
        match mode {
            FeedbackMode::Bandit if gamma == 0.0 => {
                return Err(Error::invalid("bandit mode needs an exploration mix gamma > 0"))
            }
            FeedbackMode::Full | FeedbackMode::SemiBandit if gamma != 0.0 => {
                return Err(Error::invalid("exploration mixing is only used with bandit feedback"))
            }
            _ => {}
        }
        let vertices: Arc<[ActionVector]> = set.enumerate_vertices()?.to_vec().into();
        Ok(Self {
            log_weights: vec![0.0; vertices.len()],
            vertices,
            dim: set.dim(),
            eta,
            gamma,
            mode,
        })
    }

    pub fn vertices(&self) -> &[ActionVector] {
        &self.vertices
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn mode(&self) -> FeedbackMode {
        self.mode
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// `p_t(a) = exp(logw(a)) / sum_b exp(logw(b))`.
    pub fn probabilities(&self) -> Vec<f64> {
        let max = self.log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut p: Vec<f64> = self.log_weights.iter().map(|&l| (l - max).exp()).collect();
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= total);
        p
    }

    /// `(1 - gamma) p_t + gamma * Uniform(A)`.
    pub fn sampling_distribution(&self) -> Vec<f64> {
        let p = self.probabilities();
        if self.gamma == 0.0 {
            return p;
        }
        let u = 1.0 / p.len() as f64;
        p.iter().map(|&v| (1.0 - self.gamma) * v + self.gamma * u).collect()
    }

    /// Draws an action index from the sampling distribution.
    pub fn sample_index(&self, rng: &mut dyn RngCore) -> usize {
        let probs = self.sampling_distribution();
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        probs.len() - 1
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> &ActionVector {
        &self.vertices[self.sample_index(rng)]
    }

    /// Marginals `q_i = sum_{a : a(i) = 1} p(a)` under `probs`.
    fn marginals(&self, probs: &[f64]) -> Vec<f64> {
        let mut q = vec![0.0; self.dim];
        for (a, &p) in self.vertices.iter().zip(probs) {
            for &i in a.support() {
                q[i] += p;
            }
        }
        q
    }

    /// `P = sum_a p(a) a a^T` under `probs`.
    pub fn second_moment(&self, probs: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (a, &p) in self.vertices.iter().zip(probs) {
            for &i in a.support() {
                for &j in a.support() {
                    m[(i, j)] += p;
                }
            }
        }
        m
    }

    /// Loss estimate for the played action.
    pub fn estimate(&self, a: &ActionVector, feedback: &Feedback) -> Result<Vec<f64>> {
        match (self.mode, feedback) {
            (FeedbackMode::Full, Feedback::Full(z)) => Ok(z.clone()),
            (FeedbackMode::SemiBandit, Feedback::SemiBandit(obs)) => {
                let q = self.marginals(&self.probabilities());
                let mut est = vec![0.0; self.dim];
                for &i in a.support() {
                    if q[i] < MIN_COORD_PROB {
                        return Err(Error::Numerical(format!("coordinate {i} has probability {:e}", q[i])));
                    }
                    est[i] = obs[i] / q[i];
                }
                Ok(est)
            }
            (FeedbackMode::Bandit, Feedback::Bandit(loss)) => {
                let pinv = pseudo_inverse(&self.second_moment(&self.sampling_distribution()))?;
                let av = DVector::from_vec(a.to_dense());
                Ok((pinv * av * *loss).iter().copied().collect())
            }
            _ => Err(Error::invalid(format!("feedback {:?} does not match mode {}", feedback.mode(), self.mode))),
        }
    }

    /// `logw(a) -= eta a^T z_est`, then shift by the maximum.
    pub fn update(&mut self, estimate: &[f64]) -> Result<()> {
        if estimate.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: estimate.len() });
        }
        if estimate.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("loss estimate is not finite"));
        }
        for (lw, a) in self.log_weights.iter_mut().zip(self.vertices.iter()) {
            *lw -= self.eta * a.dot(estimate);
        }
        let max = self.log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::Numerical("log-weights overflowed; eta * |z_est| is too large".into()));
        }
        self.log_weights.iter_mut().for_each(|l| *l -= max);
        Ok(())
    }
}

/// Moore-Penrose pseudo-inverse of a symmetric PSD matrix, dropping eigenvalues
/// below `1e-10 * lambda_max`.
pub fn pseudo_inverse(p: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(p.clone());
    let lmax = eig.eigenvalues.iter().copied().fold(0.0f64, f64::max);
    if lmax <= 0.0 {
        return Err(Error::Numerical("second-moment matrix is zero".into()));
    }
    let cutoff = EIGEN_CUTOFF * lmax;
    let inv = eig.eigenvalues.map(|l| if l > cutoff { 1.0 / l } else { 0.0 });
    let pinv = &eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose();
    let residual = (p * &pinv * p - p).amax();
    if residual > 1e-8 * lmax {
        return Err(Error::Numerical(format!("pseudo-inverse residual {residual:e}")));
    }
    Ok(pinv)
}
