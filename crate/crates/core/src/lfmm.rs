//! Link fraction mixed membership.
//!
//! The raw membership of node `i` in community `k` is the link weight from
//! `i` to members of `k`, with the node's diagonal mass contributing `d_i / 2`
//! to its own community:
//!
//! ```text
//! M_i(k) = Σ_{j∈k, j≠i} w_ij + [c(i) = k] · d_i / 2
//! ```
//!
//! Raw memberships are linear in the weights, so summing them over the members
//! of an aggregate set gives the membership of that set computed directly on
//! the aggregated graph. [`conservation_check`] evaluates both routes.

use std::fmt;

use crate::aggregation::{aggregate, lift_communities, AggregationMap};
use crate::error::{Error, Result};
use crate::graph::{CommunityAssignment, WeightedGraph};
use crate::sparse::{CsrMatrix, DenseMatrix};
use crate::table::{fmt_num, parse_number};

/// Largest supported diffusion step count.
pub const MAX_DIFFUSION_STEPS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MembershipKind {
    Raw,
    /// Rows are unit shares.
    NodeNormalized,
    /// Row `x` sums to `|S_x|`.
    AggregateNormalized,
    /// `t`-step random-walk landing probabilities.
    Diffusion {
        steps: usize,
    },
}

impl fmt::Display for MembershipKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MembershipKind::Raw => f.write_str("raw"),
            MembershipKind::NodeNormalized => f.write_str("node-normalized"),
            MembershipKind::AggregateNormalized => f.write_str("aggregate-normalized"),
            MembershipKind::Diffusion { steps } => write!(f, "diffusion-{steps}"),
        }
    }
}

/// `n × r` nonnegative membership values.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipMatrix {
    values: DenseMatrix,
    kind: MembershipKind,
    zero_rows: Vec<usize>,
}

impl MembershipMatrix {
    pub fn kind(&self) -> MembershipKind {
        self.kind
    }

    pub fn node_count(&self) -> usize {
        self.values.rows()
    }

    pub fn community_count(&self) -> usize {
        self.values.cols()
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.values.get(i, k)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.values.row(i)
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).iter().sum()
    }

    pub fn values(&self) -> &DenseMatrix {
        &self.values
    }

    /// Rows that were all-zero when normalized (zero-strength nodes).
    pub fn zero_rows(&self) -> &[usize] {
        &self.zero_rows
    }
}

/// One-hot `n × r` community indicator.
#[derive(Debug, Clone, PartialEq)]
pub struct CommunityIndicator(DenseMatrix);

impl CommunityIndicator {
    pub fn new(c: &CommunityAssignment) -> Self {
        let mut m = DenseMatrix::zeros(c.node_count(), c.community_count());
        for (i, &k) in c.labels().iter().enumerate() {
            m.set(i, k, 1.0);
        }
        Self(m)
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.0
    }
}

/// Direct summation of the raw membership over each node's neighbors.
pub fn raw_membership(g: &WeightedGraph, c: &CommunityAssignment) -> Result<MembershipMatrix> {
    c.check_covers(g)?;
    let mut values = DenseMatrix::zeros(g.node_count(), c.community_count());
    for i in 0..g.node_count() {
        let row = values.row_mut(i);
        row[c.label(i)] += g.diagonal(i) / 2.0;
        for (j, w) in g.neighbors(i) {
            row[c.label(j)] += w;
        }
    }
    Ok(MembershipMatrix {
        values,
        kind: MembershipKind::Raw,
        zero_rows: Vec::new(),
    })
}

/// Row sums of the membership operator: `d_i / 2 + Σ_{j≠i} w_ij`.
///
/// Equals [`WeightedGraph::strength`] minus half the diagonal mass, and is the
/// total raw membership of each node.
pub fn membership_mass(g: &WeightedGraph) -> Vec<f64> {
    (0..g.node_count())
        .map(|i| g.diagonal(i) / 2.0 + g.neighbors(i).map(|(_, w)| w).sum::<f64>())
        .collect()
}

fn scale_rows(raw: &MembershipMatrix, kind: MembershipKind, factor: impl Fn(usize) -> f64) -> MembershipMatrix {
    let mut values = raw.values.clone();
    let mut zero_rows = Vec::new();
    for i in 0..values.rows() {
        let sum: f64 = values.row(i).iter().sum();
        if sum == 0.0 {
            zero_rows.push(i);
            continue;
        }
        let f = factor(i);
        for v in values.row_mut(i) {
            *v = f * *v / sum;
        }
    }
    MembershipMatrix {
        values,
        kind,
        zero_rows,
    }
}

fn expect_raw(m: &MembershipMatrix) -> Result<()> {
    if m.kind != MembershipKind::Raw {
        return Err(Error::Mismatch(format!("expected raw memberships, got {}", m.kind)));
    }
    Ok(())
}

/// Divides each nonzero row by its sum; zero rows stay zero and are listed.
pub fn normalize_node(raw: &MembershipMatrix) -> Result<MembershipMatrix> {
    expect_raw(raw)?;
    Ok(scale_rows(raw, MembershipKind::NodeNormalized, |_| 1.0))
}

/// Scales row `x` to sum to `|S_x|`.
pub fn normalize_aggregate(raw: &MembershipMatrix, set_sizes: &[usize]) -> Result<MembershipMatrix> {
    expect_raw(raw)?;
    if set_sizes.len() != raw.node_count() {
        return Err(Error::Mismatch(format!(
            "{} set sizes for {} membership rows",
            set_sizes.len(),
            raw.node_count()
        )));
    }
    Ok(scale_rows(raw, MembershipKind::AggregateNormalized, |i| {
        set_sizes[i] as f64
    }))
}

/// The modified adjacency `A'`: off-diagonal `w_ij`, diagonal `d_i / 2`.
pub fn membership_operator(g: &WeightedGraph) -> CsrMatrix {
    let n = g.node_count();
    let mut triplets = Vec::with_capacity(2 * g.edge_count() + n);
    for e in g.edges() {
        triplets.push((e.source, e.target, e.weight));
        triplets.push((e.target, e.source, e.weight));
    }
    for (i, &d) in g.diagonal_masses().iter().enumerate() {
        if d > 0.0 {
            triplets.push((i, i, d / 2.0));
        }
    }
    CsrMatrix::from_triplets(n, n, triplets)
}

/// Raw memberships as the product `A' · C`.
pub fn membership_by_matrix(g: &WeightedGraph, c: &CommunityAssignment) -> Result<MembershipMatrix> {
    c.check_covers(g)?;
    let values = membership_operator(g).mul_dense(CommunityIndicator::new(c).matrix());
    Ok(MembershipMatrix {
        values,
        kind: MembershipKind::Raw,
        zero_rows: Vec::new(),
    })
}

/// Probability that a walker leaving each node lands in each community after
/// exactly `steps` steps of `P = D⁻¹A'`.
///
/// Propagates the `n × r` indicator one step at a time; `P^t` is never formed.
/// The first step is computed exactly as [`normalize_node`] of
/// [`raw_membership`], so `steps = 1` reproduces it bit for bit.
pub fn diffusion_membership(g: &WeightedGraph, c: &CommunityAssignment, steps: usize) -> Result<MembershipMatrix> {
    if !(1..=MAX_DIFFUSION_STEPS).contains(&steps) {
        return Err(Error::Config(format!(
            "diffusion steps must be in 1..={MAX_DIFFUSION_STEPS}, got {steps}"
        )));
    }
    let raw = raw_membership(g, c)?;
    let degree: Vec<f64> = (0..raw.node_count()).map(|i| raw.row_sum(i)).collect();
    if let Some(i) = degree.iter().position(|&d| d == 0.0) {
        return Err(Error::ZeroStrength(g.label(i).to_string()));
    }
    let mut current = scale_rows(&raw, MembershipKind::NodeNormalized, |_| 1.0).values;
    let r = c.community_count();
    for _ in 1..steps {
        let mut next = DenseMatrix::zeros(g.node_count(), r);
        for (i, &deg) in degree.iter().enumerate() {
            let out = next.row_mut(i);
            let self_weight = g.diagonal(i) / 2.0;
            for (o, v) in out.iter_mut().zip(current.row(i)) {
                *o += self_weight * v;
            }
            for (j, w) in g.neighbors(i) {
                for (o, v) in out.iter_mut().zip(current.row(j)) {
                    *o += w * v;
                }
            }
            for o in out.iter_mut() {
                *o /= deg;
            }
        }
        current = next;
    }
    Ok(MembershipMatrix {
        values: current,
        kind: MembershipKind::Diffusion { steps },
        zero_rows: Vec::new(),
    })
}

/// One `(set, community)` entry of a conservation report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservationEntry {
    pub set: usize,
    pub community: usize,
    /// Membership computed on the aggregated graph.
    pub aggregate: f64,
    /// Sum of fine-level memberships over the set's members.
    pub summed: f64,
}

impl ConservationEntry {
    pub fn discrepancy(&self) -> f64 {
        (self.aggregate - self.summed).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConservationReport {
    pub entries: Vec<ConservationEntry>,
    pub max_discrepancy: f64,
    /// Largest fine-level node strength; the scale for relative tolerances.
    pub max_strength: f64,
}

impl ConservationReport {
    /// Whether the largest discrepancy is within `relative_tolerance` of the
    /// largest fine-level strength (or of 1 for very light graphs).
    pub fn passes(&self, relative_tolerance: f64) -> bool {
        self.max_discrepancy <= relative_tolerance * self.max_strength.max(1.0)
    }

    /// The entry with the largest discrepancy.
    pub fn worst(&self) -> Option<&ConservationEntry> {
        self.entries
            .iter()
            .max_by(|a, b| a.discrepancy().total_cmp(&b.discrepancy()))
    }
}

/// Computes set memberships on `aggregate(fine, a)` and by summing fine
/// memberships under the lifted partition, and reports the difference.
pub fn conservation_check(
    fine: &WeightedGraph,
    a: &AggregationMap,
    communities_on_sets: &CommunityAssignment,
) -> Result<ConservationReport> {
    let aggregated = aggregate(fine, a)?;
    conservation_check_against(fine, &aggregated, a, communities_on_sets)
}

/// Like [`conservation_check`] but against an aggregated graph supplied by
/// the caller, e.g. one read from disk.
pub fn conservation_check_against(
    fine: &WeightedGraph,
    aggregated: &WeightedGraph,
    a: &AggregationMap,
    communities_on_sets: &CommunityAssignment,
) -> Result<ConservationReport> {
    if aggregated.node_count() != a.set_count() {
        return Err(Error::Mismatch(format!(
            "aggregated graph has {} nodes but the aggregation has {} sets",
            aggregated.node_count(),
            a.set_count()
        )));
    }
    let direct = raw_membership(aggregated, communities_on_sets)?;
    let lifted = lift_communities(communities_on_sets, a)?;
    let fine_m = raw_membership(fine, &lifted)?;
    let r = communities_on_sets.community_count();
    let mut summed = DenseMatrix::zeros(a.set_count(), r);
    for i in 0..fine.node_count() {
        let target = summed.row_mut(a.set_of(i));
        for (t, v) in target.iter_mut().zip(fine_m.row(i)) {
            *t += v;
        }
    }
    let mut entries = Vec::with_capacity(a.set_count() * r);
    let mut max_discrepancy: f64 = 0.0;
    for x in 0..a.set_count() {
        for k in 0..r {
            let entry = ConservationEntry {
                set: x,
                community: k,
                aggregate: direct.get(x, k),
                summed: summed.get(x, k),
            };
            max_discrepancy = max_discrepancy.max(entry.discrepancy());
            entries.push(entry);
        }
    }
    let max_strength = fine.strengths().into_iter().fold(0.0, f64::max);
    Ok(ConservationReport {
        entries,
        max_discrepancy,
        max_strength,
    })
}

/// CSV with header `node,<community names>`, rows ordered by node label.
pub fn membership_to_csv(m: &MembershipMatrix, row_labels: &[String], community_names: &[String]) -> Result<String> {
    if row_labels.len() != m.node_count() || community_names.len() != m.community_count() {
        return Err(Error::Mismatch("membership table labels do not match its shape".into()));
    }
    let mut out = String::from("node");
    for name in community_names {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    let mut order: Vec<usize> = (0..m.node_count()).collect();
    order.sort_by(|&a, &b| row_labels[a].cmp(&row_labels[b]));
    for i in order {
        out.push_str(&row_labels[i]);
        for &v in m.row(i) {
            out.push(',');
            out.push_str(&fmt_num(v));
        }
        out.push('\n');
    }
    Ok(out)
}

/// A membership table read back from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipTable {
    pub row_labels: Vec<String>,
    pub community_names: Vec<String>,
    pub values: DenseMatrix,
}

pub fn parse_membership_csv(text: &str) -> Result<MembershipTable> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let (hline, header) = lines
        .next()
        .ok_or_else(|| Error::format("membership", 1, "empty membership table"))?;
    let header: Vec<&str> = header.split(',').map(str::trim).collect();
    if header.first() != Some(&"node") || header.len() < 2 {
        return Err(Error::format(
            "membership",
            hline + 1,
            "expected header `node,<communities...>`",
        ));
    }
    let community_names: Vec<String> = header[1..].iter().map(|s| s.to_string()).collect();
    let r = community_names.len();
    let mut row_labels = Vec::new();
    let mut data = Vec::new();
    for (idx, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != r + 1 {
            return Err(Error::format(
                "membership",
                idx + 1,
                format!("expected {} fields, found {}", r + 1, fields.len()),
            ));
        }
        row_labels.push(fields[0].to_string());
        for f in &fields[1..] {
            let v = parse_number("membership", idx + 1, f, "membership value")?;
            if v < 0.0 {
                return Err(Error::format(
                    "membership",
                    idx + 1,
                    "membership values must be nonnegative",
                ));
            }
            data.push(v);
        }
    }
    let n = row_labels.len();
    Ok(MembershipTable {
        row_labels,
        community_names,
        values: DenseMatrix::from_vec(n, r, data),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::{g4, g4_communities};
    use proptest::prelude::*;

    /// Dense double loop over every ordered pair; no adjacency structure.
    fn brute_raw(g: &WeightedGraph, c: &CommunityAssignment) -> Vec<Vec<f64>> {
        let n = g.node_count();
        let mut out = vec![vec![0.0; c.community_count()]; n];
        for i in 0..n {
            for j in 0..n {
                let w = if i == j { g.diagonal(i) / 2.0 } else { g.weight(i, j) };
                out[i][c.label(j)] += w;
            }
        }
        out
    }

    fn rows(m: &MembershipMatrix) -> Vec<Vec<f64>> {
        (0..m.node_count()).map(|i| m.row(i).to_vec()).collect()
    }

    fn aggregated_g4() -> (WeightedGraph, CommunityAssignment) {
        let a = AggregationMap::new(vec![0, 0, 1, 1], vec!["X".into(), "Y".into()]).unwrap();
        (
            aggregate(&g4(), &a).unwrap(),
            CommunityAssignment::new(vec![0, 1], 2).unwrap(),
        )
    }

    #[test]
    fn raw_membership_of_fixture() {
        let m = raw_membership(&g4(), &g4_communities()).unwrap();
        let expected = vec![vec![4.0, 0.0], vec![2.0, 1.0], vec![1.0, 3.0], vec![0.0, 3.0]];
        assert_eq!(rows(&m), expected);
        assert_eq!(brute_raw(&g4(), &g4_communities()), expected);
    }

    #[test]
    fn raw_membership_of_aggregated_fixture() {
        let (agg, c) = aggregated_g4();
        assert_eq!(
            rows(&raw_membership(&agg, &c).unwrap()),
            vec![vec![6.0, 1.0], vec![1.0, 6.0]]
        );
    }

    #[test]
    fn isolated_node_has_zero_row() {
        let g = WeightedGraph::unlabeled(vec![0.0, 0.0, 0.0], [(0, 1, 1.0)]).unwrap();
        let c = CommunityAssignment::new(vec![0, 0, 1], 2).unwrap();
        let raw = raw_membership(&g, &c).unwrap();
        assert_eq!(raw.row(2), &[0.0, 0.0]);
        let norm = normalize_node(&raw).unwrap();
        assert_eq!(norm.zero_rows(), &[2]);
        assert_eq!(norm.row(2), &[0.0, 0.0]);
        assert!(matches!(diffusion_membership(&g, &c, 1), Err(Error::ZeroStrength(ref n)) if n == "2"));
    }

    #[test]
    fn node_normalization() {
        let raw = raw_membership(&g4(), &g4_communities()).unwrap();
        let m = normalize_node(&raw).unwrap();
        assert_eq!(m.row(1), &[2.0 / 3.0, 1.0 / 3.0]);
        assert_eq!(m.row(0), &[1.0, 0.0]);
        assert!(m.zero_rows().is_empty());
        assert!(normalize_node(&m).is_err());
    }

    #[test]
    fn aggregate_normalization() {
        let (agg, c) = aggregated_g4();
        let raw = raw_membership(&agg, &c).unwrap();
        let m = normalize_aggregate(&raw, &[2, 2]).unwrap();
        assert_eq!(m.row(0), &[12.0 / 7.0, 2.0 / 7.0]);
        let unit = normalize_aggregate(&raw, &[1, 1]).unwrap();
        assert_eq!(unit.values(), normalize_node(&raw).unwrap().values());
        assert!(normalize_aggregate(&raw, &[2]).is_err());

        let g = WeightedGraph::unlabeled(vec![0.0, 0.0], [(0, 1, 1.0)]).unwrap();
        let c = CommunityAssignment::new(vec![0, 1], 2).unwrap();
        let isolated = WeightedGraph::unlabeled(vec![0.0], []).unwrap();
        let zero = raw_membership(&isolated, &CommunityAssignment::single(1)).unwrap();
        assert_eq!(normalize_aggregate(&zero, &[5]).unwrap().row(0), &[0.0]);
        assert!(raw_membership(&g, &c).is_ok());
    }

    #[test]
    fn matrix_route_matches_direct_route() {
        let direct = raw_membership(&g4(), &g4_communities()).unwrap();
        let product = membership_by_matrix(&g4(), &g4_communities()).unwrap();
        assert_eq!(direct, product);

        let single = membership_by_matrix(&g4(), &CommunityAssignment::single(4)).unwrap();
        let mass = membership_mass(&g4());
        for i in 0..4 {
            assert_eq!(single.get(i, 0), mass[i]);
        }
    }

    #[test]
    fn matrix_route_is_permutation_equivariant() {
        let g = g4();
        let c = g4_communities();
        let order = [2, 0, 3, 1];
        let pg = g.permuted(&order).unwrap();
        let pc =
            CommunityAssignment::with_names(order.iter().map(|&o| c.label(o)).collect(), c.names().to_vec()).unwrap();
        let base = membership_by_matrix(&g, &c).unwrap();
        let perm = membership_by_matrix(&pg, &pc).unwrap();
        for (new, &old) in order.iter().enumerate() {
            assert_eq!(perm.row(new), base.row(old));
        }
    }

    #[test]
    fn diffusion_on_aggregated_fixture() {
        let (agg, c) = aggregated_g4();
        let one = diffusion_membership(&agg, &c, 1).unwrap();
        assert_eq!(one.row(0), &[6.0 / 7.0, 1.0 / 7.0]);
        assert_eq!(one.row(1), &[1.0 / 7.0, 6.0 / 7.0]);
        let two = diffusion_membership(&agg, &c, 2).unwrap();
        for (got, want) in two.row(0).iter().zip([37.0 / 49.0, 12.0 / 49.0]) {
            assert!((got - want).abs() < 1e-15);
        }
        for (got, want) in two.row(1).iter().zip([12.0 / 49.0, 37.0 / 49.0]) {
            assert!((got - want).abs() < 1e-15);
        }
        assert!(diffusion_membership(&agg, &c, 0).is_err());
        assert!(diffusion_membership(&agg, &c, MAX_DIFFUSION_STEPS + 1).is_err());
    }

    #[test]
    fn long_diffusion_reaches_community_strength_shares() {
        let g = WeightedGraph::unlabeled(
            vec![2.0, 1.0, 0.5, 3.0, 1.0],
            [
                (0, 1, 1.0),
                (1, 2, 2.0),
                (2, 3, 0.5),
                (3, 4, 1.5),
                (4, 0, 1.0),
                (1, 3, 0.25),
            ],
        )
        .unwrap();
        let c = CommunityAssignment::new(vec![0, 0, 1, 1, 2], 3).unwrap();
        // Stationary distribution by power iteration on a distribution vector.
        let degree = membership_mass(&g);
        let n = g.node_count();
        let mut pi = vec![1.0 / n as f64; n];
        for _ in 0..5000 {
            let mut next = vec![0.0; n];
            for i in 0..n {
                next[i] += pi[i] * (g.diagonal(i) / 2.0) / degree[i];
                for (j, w) in g.neighbors(i) {
                    next[j] += pi[i] * w / degree[i];
                }
            }
            pi = next;
        }
        let mut shares = vec![0.0; 3];
        for i in 0..n {
            shares[c.label(i)] += pi[i];
        }
        let m = diffusion_membership(&g, &c, MAX_DIFFUSION_STEPS).unwrap();
        for i in 0..n {
            for k in 0..3 {
                assert!((m.get(i, k) - shares[k]).abs() < 1e-3, "node {i} community {k}");
            }
        }
    }

    #[test]
    fn conservation_on_fixture() {
        let a = AggregationMap::new(vec![0, 0, 1, 1], vec!["X".into(), "Y".into()]).unwrap();
        let c = CommunityAssignment::new(vec![0, 1], 2).unwrap();
        let report = conservation_check(&g4(), &a, &c).unwrap();
        assert_eq!(report.max_discrepancy, 0.0);
        let table: Vec<(f64, f64)> = report.entries.iter().map(|e| (e.aggregate, e.summed)).collect();
        assert_eq!(table, vec![(6.0, 6.0), (1.0, 1.0), (1.0, 1.0), (6.0, 6.0)]);
        assert!(report.passes(1e-9));

        let singleton = conservation_check(&g4(), &AggregationMap::identity(&g4()), &g4_communities()).unwrap();
        assert_eq!(singleton.max_discrepancy, 0.0);
    }

    #[test]
    fn conservation_detects_corrupted_diagonal() {
        let a = AggregationMap::new(vec![0, 0, 1, 1], vec!["X".into(), "Y".into()]).unwrap();
        let c = CommunityAssignment::new(vec![0, 1], 2).unwrap();
        let agg = aggregate(&g4(), &a).unwrap();
        let corrupted = WeightedGraph::new(
            agg.labels().to_vec(),
            vec![agg.diagonal(0), 7.0],
            agg.edges().iter().map(|e| (e.source, e.target, e.weight)),
        )
        .unwrap();
        let report = conservation_check_against(&g4(), &corrupted, &a, &c).unwrap();
        assert!(!report.passes(1e-9));
        assert_eq!(report.worst().unwrap().set, 1);
    }

    #[test]
    fn csv_round_trip() {
        let raw = raw_membership(&g4(), &g4_communities()).unwrap();
        let m = normalize_node(&raw).unwrap();
        let labels = g4().labels().to_vec();
        let csv = membership_to_csv(&m, &labels, g4_communities().names()).unwrap();
        assert!(csv.starts_with("node,A,B\n1,1,0\n2,"));
        let table = parse_membership_csv(&csv).unwrap();
        assert_eq!(&table.values, m.values());
        assert_eq!(table.row_labels, labels);
    }

    fn arb_case() -> impl Strategy<Value = (WeightedGraph, CommunityAssignment)> {
        (1usize..40).prop_flat_map(|n| {
            let diag = proptest::collection::vec(prop_oneof![Just(0.0), 0.0f64..5.0], n);
            let edges = proptest::collection::vec((0..n, 0..n, 0.01f64..10.0), 0..120);
            let labels = proptest::collection::vec(0usize..4, n);
            (diag, edges, labels).prop_map(|(diag, edges, labels)| {
                let g = WeightedGraph::unlabeled(diag, edges.into_iter().filter(|(i, j, _)| i != j)).unwrap();
                (g, CommunityAssignment::from_raw_labels(&labels))
            })
        })
    }

    proptest! {
        #[test]
        fn direct_route_matches_brute_force((g, c) in arb_case()) {
            let m = raw_membership(&g, &c).unwrap();
            let brute = brute_raw(&g, &c);
            for i in 0..g.node_count() {
                for k in 0..c.community_count() {
                    prop_assert!((m.get(i, k) - brute[i][k]).abs() <= 1e-12 * brute[i][k].max(1.0));
                }
            }
        }

        #[test]
        fn row_mass_is_strength_minus_half_diagonal((g, c) in arb_case()) {
            let m = raw_membership(&g, &c).unwrap();
            for i in 0..g.node_count() {
                let expected = g.strength(i).unwrap() - g.diagonal(i) / 2.0;
                prop_assert!((m.row_sum(i) - expected).abs() <= 1e-9 * expected.max(1.0));
            }
        }

        #[test]
        fn community_relabeling_permutes_columns((g, c) in arb_case()) {
            let r = c.community_count();
            let flipped: Vec<usize> = c.labels().iter().map(|&k| r - 1 - k).collect();
            let fc = CommunityAssignment::new(flipped, r).unwrap();
            let a = raw_membership(&g, &c).unwrap();
            let b = raw_membership(&g, &fc).unwrap();
            for i in 0..g.node_count() {
                for k in 0..r {
                    prop_assert_eq!(a.get(i, k), b.get(i, r - 1 - k));
                }
            }
        }

        #[test]
        fn node_rows_sum_to_one((g, c) in arb_case()) {
            let m = normalize_node(&raw_membership(&g, &c).unwrap()).unwrap();
            for i in 0..g.node_count() {
                if m.zero_rows().contains(&i) {
                    prop_assert_eq!(m.row_sum(i), 0.0);
                } else {
                    prop_assert!((m.row_sum(i) - 1.0).abs() <= 1e-9);
                }
            }
        }
    }
}
