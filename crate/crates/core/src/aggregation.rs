//! Collapsing a graph by a disjoint node partition and moving community
//! labels between the aggregate and the fine scale.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::graph::{CommunityAssignment, WeightedGraph};
use crate::table::{self, parse_number};

pub const PARTITION_HEADER: [&str; 2] = ["node", "set_id"];
pub const SIZES_HEADER: [&str; 2] = ["set_id", "size"];

/// Total, disjoint assignment of fine nodes to aggregate sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregationMap {
    assignment: Vec<usize>,
    set_labels: Vec<String>,
    set_sizes: Vec<usize>,
}

impl AggregationMap {
    /// Every set in `0..set_labels.len()` must receive at least one node.
    pub fn new(assignment: Vec<usize>, set_labels: Vec<String>) -> Result<Self> {
        let n_sets = set_labels.len();
        let mut set_sizes = vec![0usize; n_sets];
        for (node, &s) in assignment.iter().enumerate() {
            if s >= n_sets {
                return Err(Error::Mismatch(format!(
                    "node {node} assigned to set {s}, but there are only {n_sets} sets"
                )));
            }
            set_sizes[s] += 1;
        }
        if let Some(empty) = set_sizes.iter().position(|&c| c == 0) {
            return Err(Error::Mismatch(format!(
                "aggregate set `{}` is empty",
                set_labels[empty]
            )));
        }
        Ok(Self {
            assignment,
            set_labels,
            set_sizes,
        })
    }

    /// Sets labelled `set_<index>`.
    pub fn unlabeled(assignment: Vec<usize>, n_sets: usize) -> Result<Self> {
        Self::new(assignment, (0..n_sets).map(|s| format!("set_{s}")).collect())
    }

    /// Every node in its own set, named after the node.
    pub fn identity(g: &WeightedGraph) -> Self {
        let n = g.node_count();
        Self {
            assignment: (0..n).collect(),
            set_labels: g.labels().to_vec(),
            set_sizes: vec![1; n],
        }
    }

    /// All nodes in a single set.
    pub fn all_in_one(node_count: usize) -> Self {
        Self {
            assignment: vec![0; node_count],
            set_labels: vec!["set_0".into()],
            set_sizes: vec![node_count],
        }
    }

    pub fn node_count(&self) -> usize {
        self.assignment.len()
    }

    pub fn set_count(&self) -> usize {
        self.set_labels.len()
    }

    pub fn set_of(&self, node: usize) -> usize {
        self.assignment[node]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn set_labels(&self) -> &[String] {
        &self.set_labels
    }

    pub fn set_sizes(&self) -> &[usize] {
        &self.set_sizes
    }

    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.set_count()];
        for (i, &s) in self.assignment.iter().enumerate() {
            out[s].push(i);
        }
        out
    }

    fn check_covers(&self, g: &WeightedGraph) -> Result<()> {
        if self.node_count() != g.node_count() {
            return Err(Error::Mismatch(format!(
                "aggregation map covers {} nodes but the graph has {}",
                self.node_count(),
                g.node_count()
            )));
        }
        Ok(())
    }
}

/// Sum of internal off-diagonal weight `W_e(S_x)` for every set.
fn internal_pair_weight(g: &WeightedGraph, a: &AggregationMap) -> Vec<f64> {
    let mut internal = vec![0.0; a.set_count()];
    for e in g.edges() {
        let x = a.set_of(e.source);
        if x == a.set_of(e.target) {
            internal[x] += e.weight;
        }
    }
    internal
}

/// Collapses `g` by `a`.
///
/// Cross-set weights are summed, and the diagonal of set `x` becomes
/// `4·W_e(S_x) + Σ_{i∈S_x} d_i`. With that diagonal, raw memberships computed
/// on the result equal the per-set sums of fine-level memberships.
pub fn aggregate(g: &WeightedGraph, a: &AggregationMap) -> Result<WeightedGraph> {
    a.check_covers(g)?;
    let internal = internal_pair_weight(g, a);
    let mut diagonal: Vec<f64> = internal.iter().map(|w| 4.0 * w).collect();
    for i in 0..g.node_count() {
        diagonal[a.set_of(i)] += g.diagonal(i);
    }
    // Accumulate in edge order so the floating-point sums are reproducible.
    let mut cross: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for e in g.edges() {
        let (x, y) = (a.set_of(e.source), a.set_of(e.target));
        if x != y {
            *cross.entry((x.min(y), x.max(y))).or_insert(0.0) += e.weight;
        }
    }
    WeightedGraph::new(
        a.set_labels().to_vec(),
        diagonal,
        cross.into_iter().map(|((x, y), w)| (x, y, w)),
    )
}

/// Literal half-edge count of each set: `2·W_e(S_x) + Σ_{i∈S_x} d_i`.
///
/// Diagnostic only; this is not the diagonal that makes memberships add up
/// across scales.
pub fn half_edge_counts(g: &WeightedGraph, a: &AggregationMap) -> Result<Vec<f64>> {
    a.check_covers(g)?;
    let mut counts: Vec<f64> = internal_pair_weight(g, a).iter().map(|w| 2.0 * w).collect();
    for i in 0..g.node_count() {
        counts[a.set_of(i)] += g.diagonal(i);
    }
    Ok(counts)
}

/// Gives every fine node the community of its aggregate set.
pub fn lift_communities(c: &CommunityAssignment, a: &AggregationMap) -> Result<CommunityAssignment> {
    if c.node_count() != a.set_count() {
        return Err(Error::Mismatch(format!(
            "community assignment labels {} sets but the aggregation has {}",
            c.node_count(),
            a.set_count()
        )));
    }
    let labels = a.assignment().iter().map(|&s| c.label(s)).collect();
    CommunityAssignment::with_names(labels, c.names().to_vec())
}

/// Node `i` goes to `outer(inner(i))`.
pub fn compose(outer: &AggregationMap, inner: &AggregationMap) -> Result<AggregationMap> {
    if outer.node_count() != inner.set_count() {
        return Err(Error::Mismatch(format!(
            "outer map covers {} sets but the inner map produces {}",
            outer.node_count(),
            inner.set_count()
        )));
    }
    let assignment = inner.assignment().iter().map(|&s| outer.set_of(s)).collect();
    AggregationMap::new(assignment, outer.set_labels().to_vec())
}

/// Parses a `node\tset_id` table into a map for `g`.
///
/// Set indices are assigned in order of first appearance when walking the
/// graph's nodes in index order.
pub fn load_aggregation(text: &str, g: &WeightedGraph) -> Result<AggregationMap> {
    let (labels, names) = load_node_table("partition", text, g, &PARTITION_HEADER)?;
    AggregationMap::new(labels, names)
}

/// Shared reader for `node\t<group>` tables: returns compacted group indices
/// per node and the group names.
pub(crate) fn load_node_table(
    source_name: &str,
    text: &str,
    g: &WeightedGraph,
    header: &[&str],
) -> Result<(Vec<usize>, Vec<String>)> {
    let index = g.label_index();
    let mut group_of: Vec<Option<&str>> = vec![None; g.node_count()];
    for row in table::parse_rows(source_name, text, header)? {
        let node = row.fields[0];
        let &i = index.get(node).ok_or_else(|| Error::UnknownNode(node.to_string()))?;
        if group_of[i].is_some() {
            return Err(Error::DuplicateNode(node.to_string()));
        }
        group_of[i] = Some(row.fields[1]);
    }
    let mut ids: HashMap<&str, usize> = HashMap::new();
    let mut names = Vec::new();
    let mut labels = Vec::with_capacity(g.node_count());
    for (i, group) in group_of.iter().enumerate() {
        let group = group.ok_or_else(|| Error::MissingNode(g.label(i).to_string()))?;
        let id = *ids.entry(group).or_insert_with(|| {
            names.push(group.to_string());
            names.len() - 1
        });
        labels.push(id);
    }
    Ok((labels, names))
}

pub fn save_aggregation(a: &AggregationMap, g: &WeightedGraph) -> String {
    save_node_table(&PARTITION_HEADER, g, a.assignment(), a.set_labels())
}

pub(crate) fn save_node_table(header: &[&str], g: &WeightedGraph, groups: &[usize], names: &[String]) -> String {
    let mut out = header.join("\t");
    out.push('\n');
    for (i, &s) in groups.iter().enumerate() {
        out.push_str(g.label(i));
        out.push('\t');
        out.push_str(&names[s]);
        out.push('\n');
    }
    out
}

/// `set_id\tsize` rows for every set.
pub fn save_set_sizes(a: &AggregationMap) -> String {
    let mut out = SIZES_HEADER.join("\t");
    out.push('\n');
    for (label, size) in a.set_labels().iter().zip(a.set_sizes()) {
        out.push_str(&format!("{label}\t{size}\n"));
    }
    out
}

/// Reads set sizes aligned with the nodes of the aggregated graph `g`.
pub fn load_set_sizes(text: &str, g: &WeightedGraph) -> Result<Vec<usize>> {
    let index = g.label_index();
    let mut sizes: Vec<Option<usize>> = vec![None; g.node_count()];
    for row in table::parse_rows("sizes", text, &SIZES_HEADER)? {
        let &i = index
            .get(row.fields[0])
            .ok_or_else(|| Error::UnknownNode(row.fields[0].to_string()))?;
        let v = parse_number("sizes", row.line, row.fields[1], "set size")?;
        if v < 1.0 || v.fract() != 0.0 {
            return Err(Error::format("sizes", row.line, "set size must be a positive integer"));
        }
        if sizes[i].replace(v as usize).is_some() {
            return Err(Error::DuplicateNode(row.fields[0].to_string()));
        }
    }
    sizes
        .into_iter()
        .enumerate()
        .map(|(i, s)| s.ok_or_else(|| Error::MissingNode(g.label(i).to_string())))
        .collect()
}
