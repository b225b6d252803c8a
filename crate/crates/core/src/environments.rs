//! Loss generators and the feedback channel.
//!
//! Besides fixed and i.i.d. sequences this module ships the lower-bound
//! constructions: the alternating and epsilon-skew adversaries against Exp2 on
//! [`ActionSet::exp2_lower_bound`], and the stochastic alpha-adversary on
//! [`ActionSet::parallel_games`].

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, RngCore};

use crate::action_sets::{parse_params, take_param, ActionSet, ActionVector, SetKind};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FeedbackMode {
    Full,
    SemiBandit,
    Bandit,
}

impl FromStr for FeedbackMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "full" => Ok(FeedbackMode::Full),
            "semi" | "semi-bandit" => Ok(FeedbackMode::SemiBandit),
            "bandit" => Ok(FeedbackMode::Bandit),
            other => Err(Error::Parse {
                input: s.to_string(),
                reason: format!("unknown feedback mode `{other}`"),
            }),
        }
    }
}

impl fmt::Display for FeedbackMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeedbackMode::Full => "full",
            FeedbackMode::SemiBandit => "semi",
            FeedbackMode::Bandit => "bandit",
        })
    }
}

/// What the player sees after playing `a` against `z`.
#[derive(Clone, Debug, PartialEq)]
pub enum Feedback {
    /// The whole loss vector.
    Full(Vec<f64>),
    /// `a(i) z(i)` for every coordinate.
    SemiBandit(Vec<f64>),
    /// `a^T z`.
    Bandit(f64),
}

impl Feedback {
    pub fn mode(&self) -> FeedbackMode {
        match self {
            Feedback::Full(_) => FeedbackMode::Full,
            Feedback::SemiBandit(_) => FeedbackMode::SemiBandit,
            Feedback::Bandit(_) => FeedbackMode::Bandit,
        }
    }
}

pub fn observe(mode: FeedbackMode, a: &ActionVector, z: &[f64]) -> Feedback {
    match mode {
        FeedbackMode::Full => Feedback::Full(z.to_vec()),
        FeedbackMode::SemiBandit => {
            let mut masked = vec![0.0; z.len()];
            for &i in a.support() {
                masked[i] = z[i];
            }
            Feedback::SemiBandit(masked)
        }
        FeedbackMode::Bandit => Feedback::Bandit(a.dot(z)),
    }
}

/// How pseudo-regret picks its comparator for a given loss generator.
#[derive(Clone, Debug, PartialEq)]
pub enum Comparator {
    /// Oblivious sequence: best fixed action in hindsight on the realized losses.
    Hindsight,
    /// Stationary stochastic losses with known means: best action in expectation.
    Expected(Vec<f64>),
    /// Adaptive generator without a resolvable comparator.
    Unavailable,
}

/// One round of history visible to an adaptive generator.
#[derive(Clone, Debug)]
pub struct PastRound {
    pub action: ActionVector,
    pub loss: Vec<f64>,
}

/// A loss generator. `t` is 1-based; `history` holds rounds `1..t`.
/// Losses for round `t` are fixed before the player's action for round `t` is drawn.
pub trait LossGenerator {
    fn dim(&self) -> usize;
    fn next_loss(&mut self, t: usize, history: &[PastRound], rng: &mut dyn RngCore) -> Result<Vec<f64>>;
    fn comparator(&self) -> Comparator;
    /// Whether the generator ignores `history`.
    fn is_oblivious(&self) -> bool {
        true
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Adversary {
    FixedSequence { losses: Vec<Vec<f64>> },
    AlternatingLB { d: usize },
    EpsilonSkewLB { d: usize, eps: f64 },
    /// Independent `Bernoulli(1/2 - eps * alpha(i))` losses.
    AlphaStochastic { alpha: ActionVector, eps: f64 },
    /// Independent `Uniform[0, 1]` losses.
    IIDUniform { d: usize },
}

fn check_quarter(d: usize) -> Result<()> {
    if d == 0 || !d.is_multiple_of(4) {
        return Err(Error::invalid(format!("d must be a positive multiple of 4, got {d}")));
    }
    Ok(())
}

/// Zero loss on the first half; unit loss on the first interval of the second
/// half at odd rounds and on the second interval at even rounds.
pub fn alternating_adversary(d: usize) -> Result<Adversary> {
    check_quarter(d)?;
    Ok(Adversary::AlternatingLB { d })
}

/// Constant `z(i) = 1 - eps` on the first quarter, `1` on the second quarter, `0` on the second half.
pub fn epsilon_skew_adversary(d: usize, eps: f64) -> Result<Adversary> {
    check_quarter(d)?;
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::invalid(format!("eps must lie in (0, 1], got {eps}")));
    }
    Ok(Adversary::EpsilonSkewLB { d, eps })
}

/// Bernoulli losses with mean `1/2 - eps * alpha(i, j)` on a parallel-games set.
pub fn alpha_adversary(set: &ActionSet, alpha: ActionVector, eps: f64) -> Result<Adversary> {
    if !matches!(set.kind(), SetKind::ParallelGames) {
        return Err(Error::invalid("the alpha-adversary is defined on parallel-games sets"));
    }
    if !(0.0..0.5).contains(&eps) {
        return Err(Error::invalid(format!("eps must lie in [0, 1/2), got {eps}")));
    }
    if alpha.dim() != set.dim() || !set.contains(&alpha) {
        return Err(Error::invalid("alpha must be an action of the set"));
    }
    Ok(Adversary::AlphaStochastic { alpha, eps })
}

pub fn fixed_sequence(losses: Vec<Vec<f64>>) -> Result<Adversary> {
    let Some(first) = losses.first() else {
        return Err(Error::invalid("empty loss sequence"));
    };
    let d = first.len();
    for (t, z) in losses.iter().enumerate() {
        if z.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: z.len() });
        }
        if z.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid(format!("loss row {} leaves [0, 1]", t + 1)));
        }
    }
    Ok(Adversary::FixedSequence { losses })
}

/// Reads an `n x d` loss matrix, one round per line, no header.
pub fn read_loss_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let row = record
            .iter()
            .map(|v| {
                v.parse::<f64>().map_err(|_| Error::Parse {
                    input: path.display().to_string(),
                    reason: format!("not a number: `{v}`"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

impl Adversary {
    /// Builds an adversary from `alternating`, `epsskew:eps=0.1`,
    /// `alpha:eps=0.1,alpha=<vertex index>`, `iid` or `file:<csv>` against `set`.
    pub fn from_descriptor(desc: &str, set: &ActionSet) -> Result<Self> {
        let (kind, body) = desc.split_once(':').unwrap_or((desc, ""));
        let d = set.dim();
        match kind.trim() {
            "alternating" => alternating_adversary(d),
            "epsskew" => {
                let p = parse_params(desc, body)?;
                epsilon_skew_adversary(d, take_param(desc, &p, "eps")?)
            }
            "alpha" => {
                let p = parse_params(desc, body)?;
                let eps = take_param(desc, &p, "eps")?;
                let index: usize = take_param(desc, &p, "alpha")?;
                let alpha = set
                    .enumerate_vertices()?
                    .get(index)
                    .cloned()
                    .ok_or_else(|| Error::invalid(format!("alpha index {index} out of range")))?;
                alpha_adversary(set, alpha, eps)
            }
            "iid" => Ok(Adversary::IIDUniform { d }),
            "file" => {
                let losses = read_loss_csv(Path::new(body.trim()))?;
                let adv = fixed_sequence(losses)?;
                if adv.dim() != d {
                    return Err(Error::DimensionMismatch { expected: d, got: adv.dim() });
                }
                Ok(adv)
            }
            other => Err(Error::Parse {
                input: desc.to_string(),
                reason: format!("unknown adversary `{other}`"),
            }),
        }
    }

    /// Expected loss vector of a stochastic adversary.
    pub fn mean_loss(&self) -> Option<Vec<f64>> {
        match self {
            Adversary::AlphaStochastic { alpha, eps } => {
                let mut mu = vec![0.5; alpha.dim()];
                for &i in alpha.support() {
                    mu[i] -= eps;
                }
                Some(mu)
            }
            Adversary::IIDUniform { d } => Some(vec![0.5; *d]),
            _ => None,
        }
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(self, Adversary::AlphaStochastic { .. } | Adversary::IIDUniform { .. })
    }

    /// Loss vector of a deterministic adversary at round `t` (1-based).
    pub fn deterministic_loss(&self, t: usize) -> Result<Vec<f64>> {
        match self {
            Adversary::FixedSequence { losses } => losses
                .get(t.wrapping_sub(1))
                .cloned()
                .ok_or_else(|| Error::invalid(format!("fixed sequence has no round {t}"))),
            Adversary::AlternatingLB { d } => {
                let q = d / 4;
                let mut z = vec![0.0; *d];
                let hot = if t % 2 == 1 { 2 * q..3 * q } else { 3 * q..4 * q };
                z[hot].iter_mut().for_each(|v| *v = 1.0);
                Ok(z)
            }
            Adversary::EpsilonSkewLB { d, eps } => {
                let q = d / 4;
                Ok((0..*d)
                    .map(|i| {
                        if i < q {
                            1.0 - eps
                        } else if i < 2 * q {
                            1.0
                        } else {
                            0.0
                        }
                    })
                    .collect())
            }
            _ => Err(Error::invalid("stochastic adversary has no deterministic loss")),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Adversary::FixedSequence { losses } => format!("fixed:n={}", losses.len()),
            Adversary::AlternatingLB { .. } => "alternating".into(),
            Adversary::EpsilonSkewLB { eps, .. } => format!("epsskew:eps={eps}"),
            Adversary::AlphaStochastic { alpha, eps } => format!("alpha:eps={eps},alpha={alpha}"),
            Adversary::IIDUniform { .. } => "iid".into(),
        }
    }
}

impl LossGenerator for Adversary {
    fn dim(&self) -> usize {
        match self {
            Adversary::FixedSequence { losses } => losses[0].len(),
            Adversary::AlternatingLB { d } | Adversary::EpsilonSkewLB { d, .. } | Adversary::IIDUniform { d } => *d,
            Adversary::AlphaStochastic { alpha, .. } => alpha.dim(),
        }
    }

    fn next_loss(&mut self, t: usize, _history: &[PastRound], rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        match self {
            Adversary::AlphaStochastic { .. } => {
                let mu = self.mean_loss().expect("stochastic");
                Ok(mu.iter().map(|&p| if rng.gen::<f64>() < p { 1.0 } else { 0.0 }).collect())
            }
            Adversary::IIDUniform { d } => Ok((0..*d).map(|_| rng.gen::<f64>()).collect()),
            _ => self.deterministic_loss(t),
        }
    }

    fn comparator(&self) -> Comparator {
        match self.mean_loss() {
            Some(mu) => Comparator::Expected(mu),
            None => Comparator::Hindsight,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn alternating_examples() {
        let adv = alternating_adversary(4).unwrap();
        assert_eq!(adv.deterministic_loss(1).unwrap(), vec![0.0, 0.0, 1.0, 0.0]);
        assert_eq!(adv.deterministic_loss(2).unwrap(), vec![0.0, 0.0, 0.0, 1.0]);
        assert!(alternating_adversary(6).is_err());
    }

    #[test]
    fn alternating_vertex_totals() {
        for d in [4usize, 8, 12] {
            let set = ActionSet::exp2_lower_bound(d).unwrap();
            let adv = alternating_adversary(d).unwrap();
            let n = 10;
            let mut cum = vec![0.0; d];
            for t in 1..=n {
                if t % 2 == 1 {
                    // equal cumulative loss for every vertex at the start of odd rounds
                    let totals: Vec<f64> = set.enumerate_vertices().unwrap().iter().map(|a| a.dot(&cum)).collect();
                    assert!(totals.iter().all(|&v| v == totals[0]));
                }
                for (c, z) in cum.iter_mut().zip(adv.deterministic_loss(t).unwrap()) {
                    *c += z;
                }
            }
            for a in set.enumerate_vertices().unwrap() {
                assert_eq!(a.dot(&cum), (n * d) as f64 / 8.0);
            }
        }
    }

    #[test]
    fn epsilon_skew_examples() {
        assert_eq!(epsilon_skew_adversary(4, 0.5).unwrap().deterministic_loss(3).unwrap(), vec![0.5, 1.0, 0.0, 0.0]);
        assert_eq!(epsilon_skew_adversary(4, 1.0).unwrap().deterministic_loss(1).unwrap()[0], 0.0);
        assert_eq!(
            epsilon_skew_adversary(8, 0.25).unwrap().deterministic_loss(1).unwrap(),
            vec![0.75, 0.75, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]
        );
        assert!(epsilon_skew_adversary(8, 0.0).is_err());
        assert!(epsilon_skew_adversary(8, 1.5).is_err());
    }

    #[test]
    fn alpha_adversary_means() {
        let set = ActionSet::parallel_games(2, 1).unwrap();
        let alpha = ActionVector::from_bits(&[1, 0]).unwrap();
        let adv = alpha_adversary(&set, alpha.clone(), 0.1).unwrap();
        let mu = adv.mean_loss().unwrap();
        assert!((mu[0] - 0.4).abs() < 1e-15 && mu[1] == 0.5);
        let e2 = ActionVector::from_bits(&[0, 1]).unwrap();
        assert!((e2.dot(&mu) - alpha.dot(&mu) - 0.1).abs() < 1e-12);
        assert!(alpha_adversary(&set, alpha.clone(), 0.5).is_err());
        assert!(alpha_adversary(&ActionSet::mset(2, 1).unwrap(), alpha, 0.1).is_err());
        let flat = alpha_adversary(&set, e2, 0.0).unwrap().mean_loss().unwrap();
        assert_eq!(flat, vec![0.5, 0.5]);
    }

    #[test]
    fn alpha_adversary_concentration() {
        let set = ActionSet::parallel_games(4, 2).unwrap();
        let alpha = set.enumerate_vertices().unwrap()[1].clone();
        let mut adv = alpha_adversary(&set, alpha, 0.2).unwrap();
        let mu = adv.mean_loss().unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mut sums = [0.0; 4];
        for t in 1..=n {
            let z = adv.next_loss(t, &[], &mut rng).unwrap();
            assert!(z.iter().all(|&v| v == 0.0 || v == 1.0));
            sums.iter_mut().zip(&z).for_each(|(s, v)| *s += v);
        }
        for (s, p) in sums.iter().zip(&mu) {
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            assert!((s / n as f64 - p).abs() <= 3.0 * sigma);
        }
    }

    #[test]
    fn iid_losses_in_unit_box() {
        let mut adv = Adversary::IIDUniform { d: 5 };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for t in 1..100 {
            assert!(adv.next_loss(t, &[], &mut rng).unwrap().iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn feedback_examples() {
        let e1 = ActionVector::from_bits(&[1, 0]).unwrap();
        assert_eq!(observe(FeedbackMode::SemiBandit, &e1, &[0.6, 0.2]), Feedback::SemiBandit(vec![0.6, 0.0]));
        let a = ActionVector::from_bits(&[1, 1, 0]).unwrap();
        let Feedback::Bandit(v) = observe(FeedbackMode::Bandit, &a, &[0.2, 0.3, 0.9]) else { panic!() };
        assert!((v - 0.5).abs() < 1e-15);
        assert_eq!(observe(FeedbackMode::Full, &e1, &[0.6, 0.2]), Feedback::Full(vec![0.6, 0.2]));
    }

    #[test]
    fn descriptors() {
        let set = ActionSet::exp2_lower_bound(8).unwrap();
        assert_eq!(Adversary::from_descriptor("alternating", &set).unwrap(), Adversary::AlternatingLB { d: 8 });
        assert_eq!(
            Adversary::from_descriptor("epsskew:eps=0.1", &set).unwrap(),
            Adversary::EpsilonSkewLB { d: 8, eps: 0.1 }
        );
        assert!(Adversary::from_descriptor("alpha:eps=0.1,alpha=0", &set).is_err());
        let pg = ActionSet::parallel_games(4, 2).unwrap();
        assert!(matches!(
            Adversary::from_descriptor("alpha:eps=0.1,alpha=3", &pg).unwrap(),
            Adversary::AlphaStochastic { .. }
        ));
        assert!(Adversary::from_descriptor("storm", &set).is_err());
        assert!(fixed_sequence(vec![vec![0.5, 1.2]]).is_err());
    }
}
