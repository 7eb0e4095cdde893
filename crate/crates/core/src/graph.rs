//! Weighted undirected graphs with an explicit per-node diagonal mass.
//!
//! The diagonal mass `d_i` is stored separately from the off-diagonal
//! weights. A node's own-community membership receives `d_i / 2` and its
//! strength receives the full `d_i`, which for a base graph with a self-loop
//! of weight `l` means `d_i = 2l`.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::table::{self, fmt_num, parse_number};

pub const EDGE_HEADER: [&str; 3] = ["src", "dst", "weight"];
pub const DIAGONAL_HEADER: [&str; 2] = ["node", "diagonal_mass"];

/// An undirected pair `(i, j)` with `i < j` and its weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
}

/// Symmetric weighted graph with a diagonal mass per node.
///
/// Immutable after construction. Off-diagonal pairs are stored once, sorted by
/// `(source, target)`, and mirrored into a CSR adjacency for neighbor scans.
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    labels: Vec<String>,
    diagonal: Vec<f64>,
    edges: Vec<Edge>,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    neighbor_weights: Vec<f64>,
}

impl PartialEq for WeightedGraph {
    fn eq(&self, other: &Self) -> bool {
        // The adjacency is derived from `edges`.
        self.labels == other.labels && self.diagonal == other.diagonal && self.edges == other.edges
    }
}

impl WeightedGraph {
    /// Builds a graph from raw `(i, j, w)` triples.
    ///
    /// Pairs are unordered: `(i, j)` and `(j, i)` accumulate into the same
    /// stored weight, summed in input order.
    pub fn new(
        labels: Vec<String>,
        diagonal: Vec<f64>,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::InvalidGraph("a graph needs at least one node".into()));
        }
        if diagonal.len() != n {
            return Err(Error::InvalidGraph(format!(
                "{} diagonal masses for {} nodes",
                diagonal.len(),
                n
            )));
        }
        for (i, &d) in diagonal.iter().enumerate() {
            if !(d.is_finite() && d >= 0.0) {
                return Err(Error::InvalidGraph(format!(
                    "diagonal mass of node `{}` must be finite and nonnegative, got {d}",
                    labels[i]
                )));
            }
        }
        {
            let mut seen = HashMap::with_capacity(n);
            for label in &labels {
                if seen.insert(label.as_str(), ()).is_some() {
                    return Err(Error::InvalidGraph(format!("duplicate node label `{label}`")));
                }
            }
        }

        let mut pairs = Vec::new();
        for (i, j, w) in edges {
            if i >= n || j >= n {
                return Err(Error::NodeOutOfRange {
                    index: i.max(j),
                    node_count: n,
                });
            }
            if i == j {
                return Err(Error::InvalidGraph(format!(
                    "self-pair on node `{}`; self-connections belong in the diagonal",
                    labels[i]
                )));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidGraph(format!(
                    "weight between `{}` and `{}` must be finite and positive, got {w}",
                    labels[i], labels[j]
                )));
            }
            pairs.push((i.min(j), i.max(j), w));
        }
        // Stable sort keeps input order among duplicates, so the merged sum is
        // reproducible.
        pairs.sort_by_key(|&(i, j, _)| (i, j));
        let mut merged: Vec<Edge> = Vec::with_capacity(pairs.len());
        for (i, j, w) in pairs {
            match merged.last_mut() {
                Some(last) if last.source == i && last.target == j => last.weight += w,
                _ => merged.push(Edge {
                    source: i,
                    target: j,
                    weight: w,
                }),
            }
        }
        Ok(Self::from_sorted(labels, diagonal, merged))
    }

    /// Same as [`WeightedGraph::new`] with labels `0..n`.
    pub fn unlabeled(diagonal: Vec<f64>, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let labels = (0..diagonal.len()).map(|i| i.to_string()).collect();
        Self::new(labels, diagonal, edges)
    }

    fn from_sorted(labels: Vec<String>, diagonal: Vec<f64>, edges: Vec<Edge>) -> Self {
        let n = labels.len();
        let mut degree = vec![0usize; n];
        for e in &edges {
            degree[e.source] += 1;
            degree[e.target] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor = offsets[..n].to_vec();
        let mut neighbors = vec![0usize; offsets[n]];
        let mut neighbor_weights = vec![0.0; offsets[n]];
        // Edges are sorted by (source, target), which leaves every row sorted
        // by neighbor index.
        for e in &edges {
            neighbors[cursor[e.source]] = e.target;
            neighbor_weights[cursor[e.source]] = e.weight;
            cursor[e.source] += 1;
        }
        for e in &edges {
            neighbors[cursor[e.target]] = e.source;
            neighbor_weights[cursor[e.target]] = e.weight;
            cursor[e.target] += 1;
        }
        for i in 0..n {
            let (lo, hi) = (offsets[i], offsets[i + 1]);
            let mut row: Vec<(usize, f64)> = neighbors[lo..hi]
                .iter()
                .copied()
                .zip(neighbor_weights[lo..hi].iter().copied())
                .collect();
            row.sort_by_key(|&(j, _)| j);
            for (k, (j, w)) in row.into_iter().enumerate() {
                neighbors[lo + k] = j;
                neighbor_weights[lo + k] = w;
            }
        }
        Self {
            labels,
            diagonal,
            edges,
            offsets,
            neighbors,
            neighbor_weights,
        }
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    /// Number of stored unordered pairs.
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn diagonal(&self, i: usize) -> f64 {
        self.diagonal[i]
    }

    pub fn diagonal_masses(&self) -> &[f64] {
        &self.diagonal
    }

    /// Neighbors of `i` (excluding `i` itself) in increasing index order.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[i]..self.offsets[i + 1];
        self.neighbors[range.clone()]
            .iter()
            .copied()
            .zip(self.neighbor_weights[range].iter().copied())
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    /// Off-diagonal weight `w_ij`; zero when the pair is absent or `i == j`.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let range = self.offsets[i]..self.offsets[i + 1];
        match self.neighbors[range.clone()].binary_search(&j) {
            Ok(pos) => self.neighbor_weights[range.start + pos],
            Err(_) => 0.0,
        }
    }

    /// `d_i + Σ_{j≠i} w_ij`.
    pub fn strength(&self, i: usize) -> Result<f64> {
        if i >= self.node_count() {
            return Err(Error::NodeOutOfRange {
                index: i,
                node_count: self.node_count(),
            });
        }
        Ok(self.strength_unchecked(i))
    }

    pub(crate) fn strength_unchecked(&self, i: usize) -> f64 {
        let range = self.offsets[i]..self.offsets[i + 1];
        self.diagonal[i] + self.neighbor_weights[range].iter().sum::<f64>()
    }

    pub fn strengths(&self) -> Vec<f64> {
        (0..self.node_count()).map(|i| self.strength_unchecked(i)).collect()
    }

    /// `Σ_i strength(i)`, i.e. twice the total mass.
    pub fn total_strength(&self) -> f64 {
        self.strengths().iter().sum()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Label to dense index lookup table.
    pub fn label_index(&self) -> HashMap<&str, usize> {
        self.labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect()
    }

    /// Returns the same graph with nodes reordered so that new node `k` is old
    /// node `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let n = self.node_count();
        if order.len() != n {
            return Err(Error::Mismatch(format!(
                "permutation of length {} for {n} nodes",
                order.len()
            )));
        }
        let mut position = vec![usize::MAX; n];
        for (new, &old) in order.iter().enumerate() {
            if old >= n || position[old] != usize::MAX {
                return Err(Error::Mismatch("not a permutation".into()));
            }
            position[old] = new;
        }
        let labels = order.iter().map(|&o| self.labels[o].clone()).collect();
        let diagonal = order.iter().map(|&o| self.diagonal[o]).collect();
        let edges = self
            .edges
            .iter()
            .map(|e| (position[e.source], position[e.target], e.weight));
        Self::new(labels, diagonal, edges)
    }
}

/// A disjoint community label per node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommunityAssignment {
    labels: Vec<usize>,
    names: Vec<String>,
}

impl CommunityAssignment {
    /// Every label must lie in `0..count` and every community must be used.
    pub fn new(labels: Vec<usize>, count: usize) -> Result<Self> {
        let names = (0..count).map(|k| k.to_string()).collect();
        Self::with_names(labels, names)
    }

    pub fn with_names(labels: Vec<usize>, names: Vec<String>) -> Result<Self> {
        let count = names.len();
        let mut used = vec![false; count];
        for &l in &labels {
            if l >= count {
                return Err(Error::Mismatch(format!("community label {l} outside 0..{count}")));
            }
            used[l] = true;
        }
        if let Some(k) = used.iter().position(|u| !u) {
            return Err(Error::Mismatch(format!("community {k} has no members")));
        }
        Ok(Self { labels, names })
    }

    /// Relabels arbitrary integer labels to `0..r` in order of first
    /// appearance.
    pub fn from_raw_labels(raw: &[usize]) -> Self {
        let mut map = HashMap::new();
        let labels: Vec<usize> = raw
            .iter()
            .map(|&l| {
                let next = map.len();
                *map.entry(l).or_insert(next)
            })
            .collect();
        let names = (0..map.len()).map(|k| k.to_string()).collect();
        Self { labels, names }
    }

    /// Everyone in one community.
    pub fn single(node_count: usize) -> Self {
        Self {
            labels: vec![0; node_count],
            names: vec!["0".into()],
        }
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn community_count(&self) -> usize {
        self.names.len()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Member lists per community, each in increasing node order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.community_count()];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }

    pub(crate) fn check_covers(&self, g: &WeightedGraph) -> Result<()> {
        if self.node_count() != g.node_count() {
            return Err(Error::Mismatch(format!(
                "partition labels {} nodes but the graph has {}",
                self.node_count(),
                g.node_count()
            )));
        }
        Ok(())
    }
}

/// Parses an edge list and an optional diagonal table.
///
/// Dense indices follow first appearance, reading the diagonal table before
/// the edge list.
pub fn load_graph(edge_text: &str, diagonal_text: Option<&str>) -> Result<WeightedGraph> {
    load_graph_named("edges", edge_text, diagonal_text.map(|t| ("diagonal", t)))
}

fn load_graph_named(edge_name: &str, edge_text: &str, diagonal: Option<(&str, &str)>) -> Result<WeightedGraph> {
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut labels: Vec<String> = Vec::new();
    let mut intern = |name: &str| -> usize {
        if let Some(&i) = index.get(name) {
            return i;
        }
        let i = labels.len();
        labels.push(name.to_string());
        index.insert(name.to_string(), i);
        i
    };

    let mut diag_rows = Vec::new();
    if let Some((diag_name, text)) = diagonal {
        let mut seen = HashMap::new();
        for row in table::parse_rows(diag_name, text, &DIAGONAL_HEADER)? {
            let mass = parse_number(diag_name, row.line, row.fields[1], "diagonal mass")?;
            if mass < 0.0 {
                return Err(Error::format(diag_name, row.line, "diagonal mass must be nonnegative"));
            }
            if seen.insert(row.fields[0].to_string(), ()).is_some() {
                return Err(Error::format(
                    diag_name,
                    row.line,
                    format!("node `{}` has more than one diagonal row", row.fields[0]),
                ));
            }
            diag_rows.push((intern(row.fields[0]), mass));
        }
    }

    let mut edges = Vec::new();
    for row in table::parse_rows(edge_name, edge_text, &EDGE_HEADER)? {
        let (a, b) = (row.fields[0], row.fields[1]);
        if a == b {
            return Err(Error::format(
                edge_name,
                row.line,
                format!("self-pair `{a}`: self-connections must be given in the diagonal file"),
            ));
        }
        let w = parse_number(edge_name, row.line, row.fields[2], "weight")?;
        if w <= 0.0 {
            return Err(Error::format(
                edge_name,
                row.line,
                format!("weight must be positive, got {w}"),
            ));
        }
        edges.push((intern(a), intern(b), w));
    }

    if labels.is_empty() {
        return Err(Error::InvalidGraph("no nodes in input".into()));
    }
    let mut diag = vec![0.0; labels.len()];
    for (i, m) in diag_rows {
        diag[i] = m;
    }
    WeightedGraph::new(labels, diag, edges)
}

/// Reads a graph from an edge file and an optional diagonal file.
pub fn load_graph_files(edge_path: &Path, diagonal_path: Option<&Path>) -> Result<WeightedGraph> {
    let edge_text = table::read_to_string(edge_path)?;
    let diag_text = diagonal_path.map(table::read_to_string).transpose()?;
    let edge_name = edge_path.display().to_string();
    let diag_name = diagonal_path.map(|p| p.display().to_string());
    load_graph_named(&edge_name, &edge_text, diag_name.as_deref().zip(diag_text.as_deref()))
}

/// Serializes to `(edge_text, diagonal_text)`.
///
/// The diagonal table lists every node, in index order, so isolated nodes and
/// the node order both survive a reload.
pub fn save_graph(g: &WeightedGraph) -> (String, String) {
    let mut edges = EDGE_HEADER.join("\t");
    edges.push('\n');
    for e in g.edges() {
        edges.push_str(&format!(
            "{}\t{}\t{}\n",
            g.label(e.source),
            g.label(e.target),
            fmt_num(e.weight)
        ));
    }
    let mut diag = DIAGONAL_HEADER.join("\t");
    diag.push('\n');
    for i in 0..g.node_count() {
        diag.push_str(&format!("{}\t{}\n", g.label(i), fmt_num(g.diagonal(i))));
    }
    (edges, diag)
}

pub fn save_graph_files(g: &WeightedGraph, edge_path: &Path, diagonal_path: &Path) -> Result<()> {
    let (edges, diag) = save_graph(g);
    table::write_string(edge_path, &edges)?;
    table::write_string(diagonal_path, &diag)
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Four nodes: w_12 = 2, w_23 = 1, w_34 = 3, d_1 = 4.
    pub fn g4() -> WeightedGraph {
        WeightedGraph::new(
            vec!["1".into(), "2".into(), "3".into(), "4".into()],
            vec![4.0, 0.0, 0.0, 0.0],
            [(0, 1, 2.0), (1, 2, 1.0), (2, 3, 3.0)],
        )
        .unwrap()
    }

    /// Communities A = {1, 2}, B = {3, 4}.
    pub fn g4_communities() -> CommunityAssignment {
        CommunityAssignment::with_names(vec![0, 0, 1, 1], vec!["A".into(), "B".into()]).unwrap()
    }
}
