//! Directed acyclic graphs whose source-to-sink paths form an action set.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

/// A DAG with a designated source and sink. Edge `k` is coordinate `k` of the action vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Dag {
    labels: Vec<String>,
    edges: Vec<(usize, usize)>,
    source: usize,
    sink: usize,
    topo: Vec<usize>,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
    path_len: usize,
}

impl Dag {
    /// Builds a DAG over nodes `0..nodes`. Rejects cycles, empty path sets and
    /// path sets whose paths differ in length.
    pub fn new(nodes: usize, edges: Vec<(usize, usize)>, source: usize, sink: usize) -> Result<Self> {
        let labels = (0..nodes).map(|v| v.to_string()).collect();
        Self::with_labels(labels, edges, source, sink)
    }

    fn with_labels(labels: Vec<String>, edges: Vec<(usize, usize)>, source: usize, sink: usize) -> Result<Self> {
        let nodes = labels.len();
        if edges.is_empty() {
            return Err(Error::invalid("DAG has no edges"));
        }
        if source >= nodes || sink >= nodes || source == sink {
            return Err(Error::invalid("invalid source/sink"));
        }
        let mut out_edges = vec![Vec::new(); nodes];
        let mut in_edges = vec![Vec::new(); nodes];
        for (k, &(u, v)) in edges.iter().enumerate() {
            if u >= nodes || v >= nodes {
                return Err(Error::invalid(format!("edge {k} references an unknown node")));
            }
            if u == v {
                return Err(Error::invalid(format!("edge {k} is a self-loop")));
            }
            out_edges[u].push(k);
            in_edges[v].push(k);
        }

        // Kahn's algorithm; smallest ready node first keeps the order deterministic.
        let mut indeg: Vec<usize> = in_edges.iter().map(Vec::len).collect();
        let mut ready: std::collections::BTreeSet<usize> =
            (0..nodes).filter(|&v| indeg[v] == 0).collect();
        let mut topo = Vec::with_capacity(nodes);
        while let Some(v) = ready.pop_first() {
            topo.push(v);
            for &k in &out_edges[v] {
                let w = edges[k].1;
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    ready.insert(w);
                }
            }
        }
        if topo.len() != nodes {
            return Err(Error::invalid("graph contains a cycle"));
        }

        let mut dag = Self {
            labels,
            edges,
            source,
            sink,
            topo,
            out_edges,
            in_edges,
            path_len: 0,
        };
        let (shortest, longest) = dag.path_length_range();
        match (shortest, longest) {
            (Some(lo), Some(hi)) if lo == hi => dag.path_len = lo,
            (Some(lo), Some(hi)) => {
                return Err(Error::invalid(format!(
                    "source-sink paths have unequal lengths ({lo}..={hi})"
                )))
            }
            _ => return Err(Error::invalid("no path from source to sink")),
        }
        Ok(dag)
    }

    /// Reads a `from,to` edge list (with header). Node labels are arbitrary strings.
    /// Without explicit endpoints the unique node with no incoming edge is the
    /// source and the unique node with no outgoing edge is the sink.
    pub fn from_csv(path: &Path, source: Option<&str>, sink: Option<&str>) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
        let mut ids: HashMap<String, usize> = HashMap::new();
        let mut labels = Vec::new();
        let mut edges = Vec::new();
        let mut id_of = |label: &str, labels: &mut Vec<String>| -> usize {
            *ids.entry(label.to_string()).or_insert_with(|| {
                labels.push(label.to_string());
                labels.len() - 1
            })
        };
        for record in reader.records() {
            let record = record?;
            if record.len() < 2 {
                return Err(Error::Parse {
                    input: path.display().to_string(),
                    reason: "edge rows need two columns".into(),
                });
            }
            let u = id_of(&record[0], &mut labels);
            let v = id_of(&record[1], &mut labels);
            edges.push((u, v));
        }
        let nodes = labels.len();
        let find = |name: Option<&str>, pick: &dyn Fn(usize) -> bool, what: &str| -> Result<usize> {
            match name {
                Some(label) => labels
                    .iter()
                    .position(|l| l == label)
                    .ok_or_else(|| Error::invalid(format!("unknown {what} node `{label}`"))),
                None => {
                    let cands: Vec<usize> = (0..nodes).filter(|&v| pick(v)).collect();
                    if cands.len() == 1 {
                        Ok(cands[0])
                    } else {
                        Err(Error::invalid(format!("cannot infer a unique {what} node")))
                    }
                }
            }
        };
        let has_in = |v: usize| edges.iter().any(|&(_, b)| b == v);
        let has_out = |v: usize| edges.iter().any(|&(a, _)| a == v);
        let s = find(source, &|v| !has_in(v), "source")?;
        let t = find(sink, &|v| !has_out(v), "sink")?;
        Self::with_labels(labels, edges, s, t)
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.labels.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    pub fn label(&self, node: usize) -> &str {
        &self.labels[node]
    }

    /// Common length of every source-sink path.
    pub fn path_len(&self) -> usize {
        self.path_len
    }

    fn path_length_range(&self) -> (Option<usize>, Option<usize>) {
        let n = self.labels.len();
        let mut lo: Vec<Option<usize>> = vec![None; n];
        let mut hi: Vec<Option<usize>> = vec![None; n];
        lo[self.source] = Some(0);
        hi[self.source] = Some(0);
        for &v in &self.topo {
            let (Some(l), Some(h)) = (lo[v], hi[v]) else { continue };
            for &k in &self.out_edges[v] {
                let w = self.edges[k].1;
                lo[w] = Some(lo[w].map_or(l + 1, |x| x.min(l + 1)));
                hi[w] = Some(hi[w].map_or(h + 1, |x| x.max(h + 1)));
            }
        }
        // Only paths that actually end at the sink count; nodes that cannot reach
        // the sink do not contribute to the range.
        (lo[self.sink], hi[self.sink])
    }

    /// Number of source-sink paths, saturating.
    pub fn count_paths(&self) -> u128 {
        let mut count = vec![0u128; self.labels.len()];
        count[self.source] = 1;
        for &v in &self.topo {
            let c = count[v];
            if c == 0 {
                continue;
            }
            for &k in &self.out_edges[v] {
                let w = self.edges[k].1;
                count[w] = count[w].saturating_add(c);
            }
        }
        count[self.sink]
    }

    /// Every source-sink path as a sorted list of edge indices.
    pub fn paths(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut stack = Vec::new();
        self.walk(self.source, &mut stack, &mut out);
        for p in &mut out {
            p.sort_unstable();
        }
        out
    }

    fn walk(&self, v: usize, stack: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if v == self.sink {
            out.push(stack.clone());
            return;
        }
        for &k in &self.out_edges[v] {
            stack.push(k);
            self.walk(self.edges[k].1, stack, out);
            stack.pop();
        }
    }

    /// Minimum-weight path; among (numerically) tied optima the one whose sorted
    /// edge list is lexicographically smallest.
    pub fn shortest_path(&self, w: &[f64]) -> Vec<usize> {
        let n = self.labels.len();
        // cost-to-sink
        let mut h = vec![f64::INFINITY; n];
        h[self.sink] = 0.0;
        for &v in self.topo.iter().rev() {
            for &k in &self.out_edges[v] {
                let c = w[k] + h[self.edges[k].1];
                if c < h[v] {
                    h[v] = c;
                }
            }
        }
        let scale = 1.0 + w.iter().fold(0.0f64, |a, b| a.max(b.abs())) * self.path_len as f64;
        let tol = 1e-12 * scale;
        let tight: Vec<bool> = self
            .edges
            .iter()
            .enumerate()
            .map(|(k, &(u, v))| h[u].is_finite() && h[v].is_finite() && w[k] + h[v] <= h[u] + tol)
            .collect();

        // Greedy over edge indices: keep an edge whenever some optimal path through
        // all kept edges (and none of the rejected ones) still exists.
        let mut allowed = tight.clone();
        let mut required: Vec<usize> = Vec::new();
        for k in 0..self.edges.len() {
            if !allowed[k] {
                continue;
            }
            required.push(k);
            if !self.chain_exists(&required, &allowed) {
                required.pop();
                allowed[k] = false;
            }
            if required.len() == self.path_len {
                break;
            }
        }
        required.sort_unstable();
        required
    }

    /// Whether a source-sink path using only `allowed` edges passes through every `required` edge.
    fn chain_exists(&self, required: &[usize], allowed: &[bool]) -> bool {
        let pos: HashMap<usize, usize> = self.topo.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut req = required.to_vec();
        req.sort_by_key(|&k| pos[&self.edges[k].0]);
        let mut at = self.source;
        for &k in &req {
            let (u, v) = self.edges[k];
            if !self.reaches(at, u, allowed) {
                return false;
            }
            at = v;
        }
        self.reaches(at, self.sink, allowed)
    }

    fn reaches(&self, from: usize, to: usize, allowed: &[bool]) -> bool {
        if from == to {
            return true;
        }
        let mut seen = vec![false; self.labels.len()];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(v) = stack.pop() {
            for &k in &self.out_edges[v] {
                if !allowed[k] {
                    continue;
                }
                let w = self.edges[k].1;
                if w == to {
                    return true;
                }
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        false
    }

    /// Flow conservation at every inner node plus unit outflow at the source.
    pub(crate) fn flow_constraints(&self) -> Vec<super::LinearConstraint> {
        let mut rows = Vec::new();
        for v in 0..self.labels.len() {
            if v == self.sink {
                continue;
            }
            let mut terms: Vec<(usize, f64)> = self.out_edges[v].iter().map(|&k| (k, 1.0)).collect();
            if v == self.source {
                terms.extend(self.in_edges[v].iter().map(|&k| (k, -1.0)));
                rows.push(super::LinearConstraint::new(terms, 1.0));
            } else {
                if self.out_edges[v].is_empty() && self.in_edges[v].is_empty() {
                    continue;
                }
                terms.extend(self.in_edges[v].iter().map(|&k| (k, -1.0)));
                rows.push(super::LinearConstraint::new(terms, 0.0));
            }
        }
        rows
    }
}
