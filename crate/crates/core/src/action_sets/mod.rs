//! Combinatorial action families `A ⊂ {0,1}^d` with `||a||_1 = m`.
//!
//! Vertices are ordered lexicographically by their sorted support, which for
//! equal-weight binary vectors is the order in which a `1` at an earlier
//! coordinate sorts first: `(1,0) < (0,1)`. The same order breaks ties in
//! [`ActionSet::linear_minimize`].

mod assignment;
mod constraints;
mod dag;

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

pub use constraints::{Block, ConstraintSystem, LinearConstraint};
pub use dag::Dag;

use crate::error::{Error, Result};

pub const DEFAULT_ENUMERATION_CAP: usize = 1_000_000;

/// A vertex of the hypercube with constant weight, stored by its sorted support.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActionVector {
    support: Vec<usize>,
    dim: usize,
}

impl ActionVector {
    pub fn from_support(dim: usize, mut support: Vec<usize>) -> Result<Self> {
        support.sort_unstable();
        support.dedup();
        if support.last().is_some_and(|&i| i >= dim) {
            return Err(Error::invalid("support index out of range"));
        }
        Ok(Self { support, dim })
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::invalid("action coordinates must be 0 or 1"));
        }
        let support = bits.iter().enumerate().filter(|(_, &b)| b == 1).map(|(i, _)| i).collect();
        Ok(Self { support, dim: bits.len() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weight(&self) -> usize {
        self.support.len()
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn contains(&self, i: usize) -> bool {
        self.support.binary_search(&i).is_ok()
    }

    /// `a^T w`, summed in coordinate order.
    pub fn dot(&self, w: &[f64]) -> f64 {
        self.support.iter().map(|&i| w[i]).sum()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for &i in &self.support {
            v[i] = 1.0;
        }
        v
    }

    pub fn bits(&self) -> Vec<u8> {
        let mut v = vec![0u8; self.dim];
        for &i in &self.support {
            v[i] = 1;
        }
        v
    }
}

impl fmt::Display for ActionVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits() {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SetKind {
    MSet,
    DagPaths(Dag),
    /// `m` ranked slots filled from `items` candidates; coordinate `(slot, item) -> slot * items + item`.
    Ranking { items: usize },
    /// First half: `d/4` of `d/2` coordinates; second half: one of two intervals of length `d/4`.
    Exp2LowerBound,
    /// `m` parallel games with `d/m` actions each; coordinate `(row, col) -> row * (d/m) + col`.
    ParallelGames,
}

impl SetKind {
    pub fn name(&self) -> &'static str {
        match self {
            SetKind::MSet => "mset",
            SetKind::DagPaths(_) => "dag",
            SetKind::Ranking { .. } => "ranking",
            SetKind::Exp2LowerBound => "exp2lb",
            SetKind::ParallelGames => "pgames",
        }
    }
}

/// Textual set descriptor, e.g. `mset:d=8,m=2`, `exp2lb:d=8`, `pgames:d=8,m=2`,
/// `ranking:m=2,M=4`, `dag:file=edges.csv[,source=s,sink=t]`.
#[derive(Clone, Debug, PartialEq)]
pub enum SetDescriptor {
    MSet { d: usize, m: usize },
    Exp2LowerBound { d: usize },
    ParallelGames { d: usize, m: usize },
    Ranking { m: usize, items: usize },
    Dag { file: PathBuf, source: Option<String>, sink: Option<String> },
}

pub(crate) fn parse_params(input: &str, body: &str) -> Result<HashMap<String, String>> {
    let mut out = HashMap::new();
    for part in body.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| Error::Parse {
            input: input.to_string(),
            reason: format!("expected key=value, got `{part}`"),
        })?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

pub(crate) fn take_param<T: FromStr>(input: &str, params: &HashMap<String, String>, key: &str) -> Result<T> {
    let raw = params.get(key).ok_or_else(|| Error::Parse {
        input: input.to_string(),
        reason: format!("missing `{key}`"),
    })?;
    raw.parse().map_err(|_| Error::Parse {
        input: input.to_string(),
        reason: format!("bad value for `{key}`: `{raw}`"),
    })
}

impl FromStr for SetDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, body) = s.split_once(':').unwrap_or((s, ""));
        let p = parse_params(s, body)?;
        match kind.trim() {
            "mset" => Ok(SetDescriptor::MSet { d: take_param(s, &p, "d")?, m: take_param(s, &p, "m")? }),
            "exp2lb" => Ok(SetDescriptor::Exp2LowerBound { d: take_param(s, &p, "d")? }),
            "pgames" => Ok(SetDescriptor::ParallelGames { d: take_param(s, &p, "d")?, m: take_param(s, &p, "m")? }),
            "ranking" => {
                let items = if p.contains_key("M") { take_param(s, &p, "M")? } else { take_param(s, &p, "items")? };
                Ok(SetDescriptor::Ranking { m: take_param(s, &p, "m")?, items })
            }
            "dag" => Ok(SetDescriptor::Dag {
                file: PathBuf::from(take_param::<String>(s, &p, "file")?),
                source: p.get("source").cloned(),
                sink: p.get("sink").cloned(),
            }),
            other => Err(Error::Parse { input: s.to_string(), reason: format!("unknown set kind `{other}`") }),
        }
    }
}

impl fmt::Display for SetDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetDescriptor::MSet { d, m } => write!(f, "mset:d={d},m={m}"),
            SetDescriptor::Exp2LowerBound { d } => write!(f, "exp2lb:d={d}"),
            SetDescriptor::ParallelGames { d, m } => write!(f, "pgames:d={d},m={m}"),
            SetDescriptor::Ranking { m, items } => write!(f, "ranking:m={m},M={items}"),
            SetDescriptor::Dag { file, source, sink } => {
                write!(f, "dag:file={}", file.display())?;
                if let Some(s) = source {
                    write!(f, ",source={s}")?;
                }
                if let Some(t) = sink {
                    write!(f, ",sink={t}")?;
                }
                Ok(())
            }
        }
    }
}

/// An immutable action family. Vertices are enumerated once at construction when
/// their number is below the cap; larger sets run in oracle-only mode.
#[derive(Clone, Debug)]
pub struct ActionSet {
    kind: SetKind,
    d: usize,
    m: usize,
    cap: usize,
    vertices: Option<Arc<[ActionVector]>>,
    index: Option<Arc<HashMap<ActionVector, usize>>>,
}

/// Builds and validates the set named by `spec`.
pub fn build_action_set(spec: &SetDescriptor) -> Result<ActionSet> {
    match spec {
        SetDescriptor::MSet { d, m } => ActionSet::mset(*d, *m),
        SetDescriptor::Exp2LowerBound { d } => ActionSet::exp2_lower_bound(*d),
        SetDescriptor::ParallelGames { d, m } => ActionSet::parallel_games(*d, *m),
        SetDescriptor::Ranking { m, items } => ActionSet::ranking(*m, *items),
        SetDescriptor::Dag { file, source, sink } => {
            ActionSet::dag_paths(Dag::from_csv(file, source.as_deref(), sink.as_deref())?)
        }
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// All `k`-subsets of `items` in lexicographic order.
fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    let n = items.len();
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.iter().map(|&i| items[i]).collect());
        // rightmost position that can still advance
        let Some(i) = (0..k).rev().find(|&i| idx[i] < n - k + i) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

impl ActionSet {
    fn finish(kind: SetKind, d: usize, m: usize, cap: usize) -> Result<Self> {
        let mut set = Self { kind, d, m, cap, vertices: None, index: None };
        if set.count() <= cap as u128 {
            let mut verts = set.generate();
            verts.sort();
            verts.dedup();
            debug_assert!(verts.iter().all(|v| v.weight() == m && v.dim() == d));
            let index = verts.iter().cloned().enumerate().map(|(i, v)| (v, i)).collect();
            set.vertices = Some(verts.into());
            set.index = Some(Arc::new(index));
        }
        Ok(set)
    }

    /// All `C(d, m)` binary vectors with `m` ones.
    pub fn mset(d: usize, m: usize) -> Result<Self> {
        Self::mset_with_cap(d, m, DEFAULT_ENUMERATION_CAP)
    }

    pub fn mset_with_cap(d: usize, m: usize, cap: usize) -> Result<Self> {
        if d == 0 || m == 0 {
            return Err(Error::invalid("mset needs d >= 1 and m >= 1"));
        }
        if m > d {
            return Err(Error::invalid(format!("m = {m} exceeds d = {d}")));
        }
        Self::finish(SetKind::MSet, d, m, cap)
    }

    pub fn exp2_lower_bound(d: usize) -> Result<Self> {
        if d == 0 || !d.is_multiple_of(4) {
            return Err(Error::invalid(format!("exp2lb needs d a positive multiple of 4, got {d}")));
        }
        Self::finish(SetKind::Exp2LowerBound, d, d / 2, DEFAULT_ENUMERATION_CAP)
    }

    pub fn parallel_games(d: usize, m: usize) -> Result<Self> {
        if d == 0 || m == 0 {
            return Err(Error::invalid("pgames needs d >= 1 and m >= 1"));
        }
        if m > d {
            return Err(Error::invalid(format!("m = {m} exceeds d = {d}")));
        }
        if !d.is_multiple_of(m) {
            return Err(Error::invalid(format!("pgames needs d a multiple of m (d = {d}, m = {m})")));
        }
        Self::finish(SetKind::ParallelGames, d, m, DEFAULT_ENUMERATION_CAP)
    }

    pub fn ranking(m: usize, items: usize) -> Result<Self> {
        if m == 0 || items == 0 {
            return Err(Error::invalid("ranking needs m >= 1 and M >= 1"));
        }
        if m > items {
            return Err(Error::invalid(format!("ranking needs m <= M (m = {m}, M = {items})")));
        }
        Self::finish(SetKind::Ranking { items }, m * items, m, DEFAULT_ENUMERATION_CAP)
    }

    pub fn dag_paths(dag: Dag) -> Result<Self> {
        let d = dag.num_edges();
        let m = dag.path_len();
        Self::finish(SetKind::DagPaths(dag), d, m, DEFAULT_ENUMERATION_CAP)
    }

    pub fn kind(&self) -> &SetKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Common weight `m` of every action.
    pub fn weight(&self) -> usize {
        self.m
    }

    /// `|A|`, saturating at `u128::MAX`.
    pub fn count(&self) -> u128 {
        let (d, m) = (self.d, self.m);
        match &self.kind {
            SetKind::MSet => binomial(d, m),
            SetKind::Exp2LowerBound => binomial(d / 2, d / 4).saturating_mul(2),
            SetKind::ParallelGames => {
                let k = (d / m) as u128;
                (0..m).try_fold(1u128, |acc, _| acc.checked_mul(k)).unwrap_or(u128::MAX)
            }
            SetKind::Ranking { items } => (0..m)
                .try_fold(1u128, |acc, r| acc.checked_mul((items - r) as u128))
                .unwrap_or(u128::MAX),
            SetKind::DagPaths(dag) => dag.count_paths(),
        }
    }

    pub fn is_enumerated(&self) -> bool {
        self.vertices.is_some()
    }

    /// The complete, duplicate-free, lexicographically ordered vertex list.
    pub fn enumerate_vertices(&self) -> Result<&[ActionVector]> {
        self.vertices.as_deref().ok_or_else(|| Error::EnumerationCap {
            count: self.count().to_string(),
            cap: self.cap,
        })
    }

    /// Position of `a` in the enumeration order.
    pub fn index_of(&self, a: &ActionVector) -> Option<usize> {
        self.index.as_ref()?.get(a).copied()
    }

    pub fn contains(&self, a: &ActionVector) -> bool {
        match &self.index {
            Some(index) => index.contains_key(a),
            None => a.dim() == self.d && a.weight() == self.m && self.conv_constraints().is_feasible(&a.to_dense(), 1e-12),
        }
    }

    fn generate(&self) -> Vec<ActionVector> {
        let (d, m) = (self.d, self.m);
        let mk = |support: Vec<usize>| ActionVector { support, dim: d };
        match &self.kind {
            SetKind::MSet => combinations(&(0..d).collect::<Vec<_>>(), m).into_iter().map(mk).collect(),
            SetKind::Exp2LowerBound => {
                let q = d / 4;
                let first_half: Vec<usize> = (0..2 * q).collect();
                let mut out = Vec::new();
                for combo in combinations(&first_half, q) {
                    for interval in [2 * q..3 * q, 3 * q..4 * q] {
                        let mut s = combo.clone();
                        s.extend(interval);
                        out.push(mk(s));
                    }
                }
                out
            }
            SetKind::ParallelGames => {
                let k = d / m;
                odometer(m, k, false).into_iter().map(|cols| mk(cols.iter().enumerate().map(|(r, &c)| r * k + c).collect())).collect()
            }
            SetKind::Ranking { items } => odometer(m, *items, true)
                .into_iter()
                .map(|cols| mk(cols.iter().enumerate().map(|(r, &c)| r * items + c).collect()))
                .collect(),
            SetKind::DagPaths(dag) => dag.paths().into_iter().map(mk).collect(),
        }
    }

    /// `argmin_{a in A} a^T w`, ties broken toward the lexicographically smallest vertex.
    pub fn linear_minimize(&self, w: &[f64]) -> Result<ActionVector> {
        if w.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: w.len() });
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("linear_minimize needs a finite direction"));
        }
        let (d, m) = (self.d, self.m);
        let smallest = |coords: &[usize], k: usize| -> Vec<usize> {
            let mut c = coords.to_vec();
            c.sort_by(|&i, &j| w[i].total_cmp(&w[j]).then(i.cmp(&j)));
            c.truncate(k);
            c
        };
        let support = match &self.kind {
            SetKind::MSet => smallest(&(0..d).collect::<Vec<_>>(), m),
            SetKind::Exp2LowerBound => {
                let q = d / 4;
                let mut s = smallest(&(0..2 * q).collect::<Vec<_>>(), q);
                let first: f64 = (2 * q..3 * q).map(|i| w[i]).sum();
                let second: f64 = (3 * q..4 * q).map(|i| w[i]).sum();
                if first <= second {
                    s.extend(2 * q..3 * q);
                } else {
                    s.extend(3 * q..4 * q);
                }
                s
            }
            SetKind::ParallelGames => {
                let k = d / m;
                (0..m)
                    .map(|r| {
                        let row = r * k..(r + 1) * k;
                        row.min_by(|&i, &j| w[i].total_cmp(&w[j]).then(i.cmp(&j))).expect("nonempty row")
                    })
                    .collect()
            }
            SetKind::Ranking { items } => ranking_minimize(w, m, *items),
            SetKind::DagPaths(dag) => dag.shortest_path(w),
        };
        ActionVector::from_support(d, support)
    }

    /// Linear description of `Conv(A)`.
    pub fn conv_constraints(&self) -> ConstraintSystem {
        let (d, m) = (self.d, self.m);
        match &self.kind {
            SetKind::MSet => ConstraintSystem {
                dim: d,
                equalities: vec![LinearConstraint::sum_of(0..d, m as f64)],
                inequalities: vec![],
                blocks: Some(vec![Block::CappedSimplex { coords: (0..d).collect(), total: m as f64 }]),
            },
            SetKind::ParallelGames => {
                let k = d / m;
                ConstraintSystem {
                    dim: d,
                    equalities: (0..m).map(|r| LinearConstraint::sum_of(r * k..(r + 1) * k, 1.0)).collect(),
                    inequalities: vec![],
                    blocks: Some(
                        (0..m).map(|r| Block::CappedSimplex { coords: (r * k..(r + 1) * k).collect(), total: 1.0 }).collect(),
                    ),
                }
            }
            SetKind::Exp2LowerBound => {
                let q = d / 4;
                let first: Vec<usize> = (2 * q..3 * q).collect();
                let second: Vec<usize> = (3 * q..4 * q).collect();
                let mut equalities = vec![LinearConstraint::sum_of(0..2 * q, q as f64)];
                for group in [&first, &second] {
                    for &j in &group[1..] {
                        equalities.push(LinearConstraint::new(vec![(j, 1.0), (group[0], -1.0)], 0.0));
                    }
                }
                equalities.push(LinearConstraint::sum_of([first[0], second[0]], 1.0));
                ConstraintSystem {
                    dim: d,
                    equalities,
                    inequalities: vec![],
                    blocks: Some(vec![
                        Block::CappedSimplex { coords: (0..2 * q).collect(), total: q as f64 },
                        Block::TiedIntervals { first, second },
                    ]),
                }
            }
            SetKind::Ranking { items } => {
                let items = *items;
                ConstraintSystem {
                    dim: d,
                    equalities: (0..m).map(|r| LinearConstraint::sum_of(r * items..(r + 1) * items, 1.0)).collect(),
                    inequalities: (0..items).map(|j| LinearConstraint::sum_of((0..m).map(|r| r * items + j), 1.0)).collect(),
                    blocks: if m == 1 {
                        Some(vec![Block::CappedSimplex { coords: (0..items).collect(), total: 1.0 }])
                    } else {
                        None
                    },
                }
            }
            SetKind::DagPaths(dag) => ConstraintSystem {
                dim: d,
                equalities: dag.flow_constraints(),
                inequalities: vec![],
                blocks: None,
            },
        }
    }

    /// Mean of all vertices (requires enumeration).
    pub fn barycenter(&self) -> Result<Vec<f64>> {
        let verts = self.enumerate_vertices()?;
        let mut x = vec![0.0; self.d];
        for v in verts {
            for &i in v.support() {
                x[i] += 1.0;
            }
        }
        let n = verts.len() as f64;
        x.iter_mut().for_each(|v| *v /= n);
        Ok(x)
    }
}

/// Sequences of length `len` over `0..base` (distinct entries when `distinct`),
/// first position most significant.
fn odometer(len: usize, base: usize, distinct: bool) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(len);
    fn rec(len: usize, base: usize, distinct: bool, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for c in 0..base {
            if distinct && cur.contains(&c) {
                continue;
            }
            cur.push(c);
            rec(len, base, distinct, cur, out);
            cur.pop();
        }
    }
    rec(len, base, distinct, &mut cur, &mut out);
    out
}

/// Min-cost ranking with lexicographic tie-breaking: slot by slot, keep the
/// smallest item whose choice still admits an optimal completion.
fn ranking_minimize(w: &[f64], m: usize, items: usize) -> Vec<usize> {
    let all_rows: Vec<usize> = (0..m).collect();
    let all_cols: Vec<usize> = (0..items).collect();
    let (opt, _) = assignment::min_cost_assignment(w, items, &all_rows, &all_cols);
    let scale = 1.0 + w.iter().fold(0.0f64, |a, b| a.max(b.abs())) * m as f64;
    let tol = 1e-12 * scale;
    let mut fixed_cost = 0.0;
    let mut used = vec![false; items];
    let mut support = Vec::with_capacity(m);
    for r in 0..m {
        let rest_rows: Vec<usize> = (r + 1..m).collect();
        let mut chosen = None;
        for j in 0..items {
            if used[j] {
                continue;
            }
            let cols: Vec<usize> = (0..items).filter(|&c| !used[c] && c != j).collect();
            let (rest, _) = assignment::min_cost_assignment(w, items, &rest_rows, &cols);
            if fixed_cost + w[r * items + j] + rest <= opt + tol {
                chosen = Some(j);
                break;
            }
        }
        let j = chosen.expect("an optimal completion always exists");
        used[j] = true;
        fixed_cost += w[r * items + j];
        support.push(r * items + j);
    }
    support
}
