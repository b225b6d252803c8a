//! Seeded player-vs-adversary games, pseudo-regret reports and CSV sweeps.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;

use crate::action_sets::{build_action_set, parse_params, ActionSet, ActionVector, SetDescriptor, SetKind};
use crate::environments::{observe, Adversary, Comparator, Feedback, FeedbackMode, LossGenerator, PastRound};
use crate::error::{Error, Result};
use crate::exp2::{hedge_eta, Exp2State};
use crate::legendre::{LegendreFunction, PotentialSpec};
use crate::oracles::{exp2_alternating_regret, exp2_epsskew_expected_regret, exp2_epsskew_regret, minimax_reference};
use crate::osmd::{regret_bound, tuned_eta, BoundFamily, OsmdState};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "COMBOPT_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "combopt-out";
const PLAYER_STREAM: u64 = 0;
const ENVIRONMENT_STREAM: u64 = 1;

/// A learner that draws one action per round and learns from the feedback.
pub trait Player {
    fn choose(&mut self, rng: &mut dyn RngCore) -> Result<ActionVector>;
    fn observe(&mut self, a: &ActionVector, feedback: &Feedback) -> Result<()>;
    fn feedback_mode(&self) -> FeedbackMode;
}

impl Player for Exp2State {
    fn choose(&mut self, rng: &mut dyn RngCore) -> Result<ActionVector> {
        Ok(self.sample(rng).clone())
    }

    fn observe(&mut self, a: &ActionVector, feedback: &Feedback) -> Result<()> {
        let est = self.estimate(a, feedback)?;
        self.update(&est)
    }

    fn feedback_mode(&self) -> FeedbackMode {
        self.mode()
    }
}

impl Player for OsmdState {
    fn choose(&mut self, rng: &mut dyn RngCore) -> Result<ActionVector> {
        self.sample(rng)
    }

    fn observe(&mut self, a: &ActionVector, feedback: &Feedback) -> Result<()> {
        self.update(a, feedback)
    }

    fn feedback_mode(&self) -> FeedbackMode {
        self.mode()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PlayerKind {
    Exp2,
    Osmd,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EtaSetting {
    /// Tuned from `(m, d, n)`: the bound-minimizing rate for OSMD, Hedge tuning for Exp2.
    Auto,
    Fixed(f64),
}

impl fmt::Display for EtaSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EtaSetting::Auto => f.write_str("auto"),
            EtaSetting::Fixed(v) => write!(f, "{v}"),
        }
    }
}

impl FromStr for EtaSetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "auto" => Ok(EtaSetting::Auto),
            v => v.parse().map(EtaSetting::Fixed).map_err(|_| Error::Parse {
                input: s.to_string(),
                reason: "eta must be `auto` or a number".into(),
            }),
        }
    }
}

/// Which player to build and with which parameters.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(try_from = "PlayerConfig")]
pub struct PlayerSpec {
    pub kind: PlayerKind,
    pub eta: EtaSetting,
    pub gamma: f64,
    pub feedback: FeedbackMode,
    pub legendre: PotentialSpec,
}

impl PlayerSpec {
    pub fn exp2(eta: EtaSetting, gamma: f64, feedback: FeedbackMode) -> Self {
        Self { kind: PlayerKind::Exp2, eta, gamma, feedback, legendre: PotentialSpec::Exp }
    }

    pub fn osmd(legendre: PotentialSpec, eta: EtaSetting, feedback: FeedbackMode) -> Self {
        Self { kind: PlayerKind::Osmd, eta, gamma: 0.0, feedback, legendre }
    }

    pub fn with_eta(&self, eta: EtaSetting) -> Self {
        Self { eta, ..self.clone() }
    }

    /// Learning rate actually used on `set` over `n` rounds.
    pub fn resolve_eta(&self, set: &ActionSet, n: usize) -> Result<f64> {
        match (self.eta, self.kind) {
            (EtaSetting::Fixed(v), _) => Ok(v),
            (EtaSetting::Auto, PlayerKind::Osmd) => {
                tuned_eta(BoundFamily::for_potential(self.legendre), set.weight(), set.dim(), n)
            }
            (EtaSetting::Auto, PlayerKind::Exp2) => {
                let count = usize::try_from(set.count()).map_err(|_| Error::invalid("too many actions for Exp2"))?;
                hedge_eta(count, set.weight(), n)
            }
        }
    }

    /// Regret bound for OSMD at its tuned rate.
    pub fn bound(&self, set: &ActionSet, n: usize) -> Result<Option<f64>> {
        match (self.eta, self.kind) {
            (EtaSetting::Auto, PlayerKind::Osmd) => {
                regret_bound(BoundFamily::for_potential(self.legendre), set.weight(), set.dim(), n).map(Some)
            }
            _ => Ok(None),
        }
    }

    pub fn build(&self, set: &ActionSet, n: usize) -> Result<Box<dyn Player>> {
        let eta = self.resolve_eta(set, n)?;
        Ok(match self.kind {
            PlayerKind::Exp2 => Box::new(Exp2State::new(set, eta, self.gamma, self.feedback)?),
            PlayerKind::Osmd => {
                let f = LegendreFunction::potential_legendre(self.legendre, set.dim())?;
                Box::new(OsmdState::new(set, f, eta, self.feedback)?)
            }
        })
    }
}

impl fmt::Display for PlayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            PlayerKind::Exp2 => write!(f, "exp2:eta={},gamma={},feedback={}", self.eta, self.gamma, self.feedback),
            PlayerKind::Osmd => {
                write!(f, "osmd:legendre={},eta={},feedback={}", self.legendre, self.eta, self.feedback)
            }
        }
    }
}

/// `exp2:eta=auto,gamma=0.1,feedback=bandit` or `osmd:legendre=inf:q=2,eta=0.05,feedback=semi`.
impl FromStr for PlayerSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, body) = s.split_once(':').unwrap_or((s, ""));
        // `legendre=inf:q=2` carries its own separator, so split it off before the generic parser.
        let (body, legendre) = match body.find("legendre=") {
            Some(start) => {
                let rest = &body[start + "legendre=".len()..];
                let end = ["eta=", "gamma=", "feedback="]
                    .iter()
                    .filter_map(|k| rest.find(&format!(",{k}")))
                    .min()
                    .unwrap_or(rest.len());
                let remaining = format!("{}{}", &body[..start], rest[end..].trim_start_matches(','));
                (remaining, Some(rest[..end].to_string()))
            }
            None => (body.to_string(), None),
        };
        let params = parse_params(s, body.trim_end_matches(','))?;
        let unknown = params.keys().find(|k| !["eta", "gamma", "feedback"].contains(&k.as_str()));
        if let Some(k) = unknown {
            return Err(Error::Parse { input: s.into(), reason: format!("unknown key `{k}`") });
        }
        PlayerConfig {
            player: kind.trim().to_string(),
            eta: params.get("eta").map(|v| EtaField::Text(v.clone())),
            gamma: params.get("gamma").map(|v| v.parse()).transpose().map_err(|_| Error::Parse {
                input: s.into(),
                reason: "gamma must be a number".into(),
            })?,
            feedback: params.get("feedback").cloned(),
            legendre,
        }
        .try_into()
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum EtaField {
    Number(f64),
    Text(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PlayerConfig {
    player: String,
    #[serde(default)]
    eta: Option<EtaField>,
    #[serde(default)]
    gamma: Option<f64>,
    #[serde(default)]
    feedback: Option<String>,
    #[serde(default)]
    legendre: Option<String>,
}

impl TryFrom<PlayerConfig> for PlayerSpec {
    type Error = Error;

    fn try_from(c: PlayerConfig) -> Result<Self> {
        let eta = match c.eta {
            None => EtaSetting::Auto,
            Some(EtaField::Number(v)) => EtaSetting::Fixed(v),
            Some(EtaField::Text(t)) => t.parse()?,
        };
        if let EtaSetting::Fixed(v) = eta {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("eta must be positive, got {v}")));
            }
        }
        let feedback = c.feedback.as_deref().unwrap_or("full").parse()?;
        match c.player.as_str() {
            "exp2" => {
                if c.legendre.is_some() {
                    return Err(Error::invalid("exp2 takes no legendre function"));
                }
                Ok(PlayerSpec::exp2(eta, c.gamma.unwrap_or(0.0), feedback))
            }
            "osmd" => {
                if c.gamma.is_some() {
                    return Err(Error::invalid("osmd takes no gamma"));
                }
                let legendre = c.legendre.as_deref().unwrap_or("negentropy").parse()?;
                Ok(PlayerSpec::osmd(legendre, eta, feedback))
            }
            other => Err(Error::Parse { input: other.into(), reason: "player must be `exp2` or `osmd`".into() }),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundRecord {
    pub t: usize,
    /// Position of `a_t` in the enumeration order, when the set is enumerated.
    pub action_index: Option<usize>,
    pub inst_loss: f64,
    pub cum_loss: f64,
    pub cum_regret: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GameTrace {
    pub set: String,
    pub player: String,
    pub adversary: String,
    pub eta: f64,
    pub gamma: f64,
    pub seed: u64,
    pub records: Vec<RoundRecord>,
    /// `sum_t z_t`, enough to recompute the hindsight comparator.
    pub cumulative_loss_vector: Vec<f64>,
    /// Per-round loss vectors, kept when requested.
    pub losses: Option<Vec<Vec<f64>>>,
}

impl GameTrace {
    pub fn n(&self) -> usize {
        self.records.len()
    }

    pub fn total_loss(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.cum_loss)
    }

    pub fn final_regret(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.cum_regret)
    }
}

/// Loss of the comparator after `t` rounds with cumulative losses `cum`.
fn comparator_loss(set: &ActionSet, comparator: &Comparator, cum: &[f64], t: usize) -> Result<f64> {
    match comparator {
        Comparator::Hindsight => Ok(set.linear_minimize(cum)?.dot(cum)),
        Comparator::Expected(mu) => Ok(t as f64 * set.linear_minimize(mu)?.dot(mu)),
        Comparator::Unavailable => Err(Error::Unsupported("adaptive adversary has no comparator".into())),
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct GameOptions {
    pub keep_losses: bool,
}

pub fn run_game(player: &PlayerSpec, adversary: &Adversary, set: &ActionSet, n: usize, seed: u64) -> Result<GameTrace> {
    run_game_with(player, adversary, set, n, seed, GameOptions::default())
}

/// Plays `n` rounds. The player and the adversary draw from separate streams of a
/// generator seeded with `seed`; the adversary's `z_t` is fixed before `a_t` is drawn.
pub fn run_game_with(
    spec: &PlayerSpec,
    adversary: &Adversary,
    set: &ActionSet,
    n: usize,
    seed: u64,
    options: GameOptions,
) -> Result<GameTrace> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    if adversary.dim() != set.dim() {
        return Err(Error::DimensionMismatch { expected: set.dim(), got: adversary.dim() });
    }
    let eta = spec.resolve_eta(set, n)?;
    let mut player = spec.build(set, n)?;
    let mut adversary = adversary.clone();
    let comparator = adversary.comparator();
    let mut player_rng = ChaCha8Rng::seed_from_u64(seed);
    player_rng.set_stream(PLAYER_STREAM);
    let mut env_rng = ChaCha8Rng::seed_from_u64(seed);
    env_rng.set_stream(ENVIRONMENT_STREAM);

    let d = set.dim();
    let mut history: Vec<PastRound> = Vec::new();
    let mut cum_z = vec![0.0; d];
    let mut cum_loss = 0.0;
    let mut records = Vec::with_capacity(n);
    let mut losses = options.keep_losses.then(|| Vec::with_capacity(n));
    for t in 1..=n {
        let mut step = |player: &mut Box<dyn Player>, adversary: &mut Adversary, history: &[PastRound]| -> Result<_> {
            let z = adversary.next_loss(t, history, &mut env_rng)?;
            if z.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: z.len() });
            }
            let a = player.choose(&mut player_rng)?;
            let feedback = observe(player.feedback_mode(), &a, &z);
            player.observe(&a, &feedback)?;
            Ok((a, z))
        };
        let (a, z) = step(&mut player, &mut adversary, &history).map_err(|e| e.at_round(t))?;
        let inst_loss = a.dot(&z);
        cum_loss += inst_loss;
        cum_z.iter_mut().zip(&z).for_each(|(c, v)| *c += v);
        let best = comparator_loss(set, &comparator, &cum_z, t).map_err(|e| e.at_round(t))?;
        records.push(RoundRecord {
            t,
            action_index: set.index_of(&a),
            inst_loss,
            cum_loss,
            cum_regret: cum_loss - best,
        });
        if !adversary.is_oblivious() {
            history.push(PastRound { action: a, loss: z.clone() });
        }
        if let Some(l) = losses.as_mut() {
            l.push(z);
        }
    }
    Ok(GameTrace {
        set: set_label(set),
        player: spec.to_string(),
        adversary: adversary.label(),
        eta,
        gamma: spec.gamma,
        seed,
        records,
        cumulative_loss_vector: cum_z,
        losses,
    })
}

fn set_label(set: &ActionSet) -> String {
    let (d, m) = (set.dim(), set.weight());
    match set.kind() {
        SetKind::MSet => format!("mset:d={d},m={m}"),
        SetKind::Exp2LowerBound => format!("exp2lb:d={d}"),
        SetKind::ParallelGames => format!("pgames:d={d},m={m}"),
        SetKind::Ranking { items } => format!("ranking:m={m},M={items}"),
        SetKind::DagPaths(dag) => format!("dag:edges={},m={m}", dag.num_edges()),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegretReport {
    pub seeds: Vec<u64>,
    pub per_seed: Vec<f64>,
    pub mean: f64,
    pub stderr: f64,
    pub bound: Option<f64>,
}

impl RegretReport {
    pub fn from_values(seeds: Vec<u64>, per_seed: Vec<f64>, bound: Option<f64>) -> Result<Self> {
        if per_seed.is_empty() || seeds.len() != per_seed.len() {
            return Err(Error::invalid("a report needs one value per seed and at least one seed"));
        }
        let k = per_seed.len() as f64;
        let mean = per_seed.iter().sum::<f64>() / k;
        let stderr = if per_seed.len() < 2 {
            0.0
        } else {
            let var = per_seed.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
            (var / k).sqrt()
        };
        Ok(Self { seeds, per_seed, mean, stderr, bound })
    }

    pub fn bound_satisfied(&self) -> Option<bool> {
        self.bound.map(|b| self.mean <= b)
    }
}

/// Recomputes each trace's regret from its stored columns and aggregates.
pub fn pseudo_regret(traces: &[GameTrace], set: &ActionSet, adversary: &Adversary) -> Result<RegretReport> {
    let first = traces.first().ok_or_else(|| Error::invalid("no traces"))?;
    let comparator = adversary.comparator();
    let mut per_seed = Vec::with_capacity(traces.len());
    for tr in traces {
        if (&tr.set, &tr.player, &tr.adversary, tr.n()) != (&first.set, &first.player, &first.adversary, first.n()) {
            return Err(Error::invalid("traces do not share their specs"));
        }
        let total: f64 = tr.records.iter().map(|r| r.inst_loss).sum();
        per_seed.push(total - comparator_loss(set, &comparator, &tr.cumulative_loss_vector, tr.n())?);
    }
    RegretReport::from_values(traces.iter().map(|t| t.seed).collect(), per_seed, None)
}

/// JSON sweep description. Players mirror the CLI flags, e.g.
/// `{"player": "osmd", "legendre": "inf:q=2", "eta": "auto", "feedback": "semi"}`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub set: String,
    pub n: usize,
    pub seeds: Vec<u64>,
    pub players: Vec<PlayerSpec>,
    pub adversaries: Vec<String>,
    /// When present, every player is run once per grid value instead of at its own eta.
    #[serde(default)]
    pub eta_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl SweepConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

#[derive(Clone, Debug)]
pub struct CellSummary {
    pub cell_id: String,
    pub player: PlayerSpec,
    pub adversary: String,
    pub eta: f64,
    pub n: usize,
    pub report: RegretReport,
    /// Named closed-form or reference values that apply to this cell.
    pub references: Vec<(String, f64)>,
}

pub fn default_output_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

fn references(spec: &PlayerSpec, adversary: &Adversary, set: &ActionSet, n: usize, eta: f64) -> Vec<(String, f64)> {
    let mut out = Vec::new();
    let d = set.dim();
    if spec.kind == PlayerKind::Exp2 && spec.feedback == FeedbackMode::Full && matches!(set.kind(), SetKind::Exp2LowerBound) {
        match adversary {
            Adversary::AlternatingLB { .. } => {
                if let Ok(v) = exp2_alternating_regret(d, n, eta) {
                    out.push(("exp2_alternating".into(), v));
                }
            }
            Adversary::EpsilonSkewLB { eps, .. } => {
                if let Ok(v) = exp2_epsskew_regret(d, n, eta, *eps) {
                    out.push(("exp2_epsskew_formula".into(), v));
                }
                if let Ok(v) = exp2_epsskew_expected_regret(d, n, eta, *eps) {
                    out.push(("exp2_epsskew_exact".into(), v));
                }
            }
            _ => {}
        }
    }
    if spec.feedback == FeedbackMode::Bandit {
        if let Ok(v) = minimax_reference(set.weight(), d, n) {
            out.push(("minimax_reference".into(), v));
        }
    }
    out
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Runs every (player, eta, adversary) cell over all seeds in parallel and writes
/// `cell_<id>.csv` per cell, `summary.csv` and `reference.csv` into the output directory.
/// Row order and float formatting depend only on the config.
pub fn sweep(config: &SweepConfig) -> Result<Vec<CellSummary>> {
    let out_dir = config.output_dir.clone().unwrap_or_else(default_output_dir);
    sweep_into(config, &out_dir)
}

pub fn sweep_into(config: &SweepConfig, out_dir: &Path) -> Result<Vec<CellSummary>> {
    if config.seeds.is_empty() {
        return Err(Error::invalid("seed list is empty"));
    }
    if config.players.is_empty() || config.adversaries.is_empty() {
        return Err(Error::invalid("sweep needs at least one player and one adversary"));
    }
    if let Some(grid) = &config.eta_grid {
        if grid.is_empty() || grid.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::invalid("eta grid must be a nonempty list of positive numbers"));
        }
    }
    let set = build_action_set(&config.set.parse::<SetDescriptor>()?)?;
    let adversaries = config
        .adversaries
        .iter()
        .map(|a| Adversary::from_descriptor(a, &set))
        .collect::<Result<Vec<_>>>()?;
    let mut cells = Vec::new();
    for player in &config.players {
        let variants = match &config.eta_grid {
            Some(grid) => grid.iter().map(|&v| player.with_eta(EtaSetting::Fixed(v))).collect(),
            None => vec![player.clone()],
        };
        for spec in variants {
            for adv in &adversaries {
                cells.push((format!("c{:03}", cells.len()), spec.clone(), adv));
            }
        }
    }

    let jobs: Vec<(usize, u64)> =
        (0..cells.len()).flat_map(|c| config.seeds.iter().map(move |&s| (c, s))).collect();
    let traces = jobs
        .par_iter()
        .map(|&(c, seed)| run_game(&cells[c].1, cells[c].2, &set, config.n, seed))
        .collect::<Result<Vec<_>>>()?;

    fs::create_dir_all(out_dir)?;
    let mut summaries = Vec::with_capacity(cells.len());
    for (c, (cell_id, spec, adv)) in cells.iter().enumerate() {
        let cell_traces = &traces[c * config.seeds.len()..(c + 1) * config.seeds.len()];
        write_traces(&out_dir.join(format!("cell_{cell_id}.csv")), cell_id, cell_traces)?;
        let report = pseudo_regret(cell_traces, &set, adv)?;
        let report = RegretReport { bound: spec.bound(&set, config.n)?, ..report };
        let eta = cell_traces[0].eta;
        summaries.push(CellSummary {
            cell_id: cell_id.clone(),
            player: spec.clone(),
            adversary: adv.label(),
            eta,
            n: config.n,
            references: references(spec, adv, &set, config.n, eta),
            report,
        });
    }

    let mut w = csv::Writer::from_path(out_dir.join("summary.csv"))?;
    w.write_record([
        "cell_id", "player", "adversary", "eta", "gamma", "n", "seeds", "mean_regret", "stderr", "bound", "bound_satisfied",
    ])?;
    for s in &summaries {
        w.write_record([
            s.cell_id.clone(),
            s.player.to_string(),
            s.adversary.clone(),
            s.eta.to_string(),
            s.player.gamma.to_string(),
            s.n.to_string(),
            s.report.seeds.len().to_string(),
            s.report.mean.to_string(),
            s.report.stderr.to_string(),
            fmt_opt(s.report.bound),
            s.report.bound_satisfied().map(|b| b.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(out_dir.join("reference.csv"))?;
    w.write_record(["cell_id", "reference", "value"])?;
    for s in &summaries {
        for (name, v) in &s.references {
            w.write_record([s.cell_id.as_str(), name, &v.to_string()])?;
        }
    }
    w.flush()?;
    Ok(summaries)
}

/// Writes traces in the fixed per-round schema. `run_id` is `<prefix>-s<seed>`.
pub fn write_traces(path: &Path, prefix: &str, traces: &[GameTrace]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["run_id", "seed", "t", "action_index", "inst_loss", "cum_loss", "cum_regret"])?;
    for tr in traces {
        let run_id = format!("{prefix}-s{}", tr.seed);
        let seed = tr.seed.to_string();
        for r in &tr.records {
            w.write_record([
                run_id.as_str(),
                &seed,
                &r.t.to_string(),
                &r.action_index.map(|i| i.to_string()).unwrap_or_default(),
                &r.inst_loss.to_string(),
                &r.cum_loss.to_string(),
                &r.cum_regret.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
