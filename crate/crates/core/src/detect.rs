//! Community detection with the Leiden algorithm.
//!
//! The objective is the Reichardt–Bornholdt Potts quality against the
//! configuration null model:
//!
//! ```text
//! Q = 1/(2W) · Σ_k [ 2·W_int(k) − γ·K_k² / (2W) ]
//! ```
//!
//! where `2W` is the total strength, `W_int(k)` the internal pair weight of
//! community `k` plus half the diagonal mass of its members, and `K_k` the
//! summed strength of its members. At `γ = 1` this is modularity.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::aggregation::{load_node_table, save_node_table};
use crate::error::{Error, Result};
use crate::graph::{CommunityAssignment, WeightedGraph};
use crate::rng;

pub const COMMUNITY_HEADER: [&str; 2] = ["node", "community"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectConfig {
    /// Resolution `γ`; larger values favor smaller communities.
    pub resolution: f64,
    pub seed: u64,
    /// Upper bound on move/refine/aggregate passes.
    pub max_passes: usize,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            resolution: 1.0,
            seed: 0,
            max_passes: 32,
        }
    }
}

impl DetectConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.resolution.is_finite() && self.resolution > 0.0) {
            return Err(Error::Config(format!(
                "resolution must be finite and positive, got {}",
                self.resolution
            )));
        }
        if self.max_passes == 0 {
            return Err(Error::Config("max_passes must be at least 1".into()));
        }
        Ok(())
    }
}

/// Reichardt–Bornholdt quality of `c` on `g`.
pub fn rb_quality(g: &WeightedGraph, c: &CommunityAssignment, resolution: f64) -> Result<f64> {
    c.check_covers(g)?;
    let total = g.total_strength();
    if total <= 0.0 {
        return Err(Error::UndefinedQuality);
    }
    let r = c.community_count();
    let mut internal = vec![0.0; r];
    let mut strength = vec![0.0; r];
    for i in 0..g.node_count() {
        internal[c.label(i)] += g.diagonal(i) / 2.0;
        strength[c.label(i)] += g.strength_unchecked(i);
    }
    for e in g.edges() {
        let k = c.label(e.source);
        if k == c.label(e.target) {
            internal[k] += e.weight;
        }
    }
    let sum: f64 = internal
        .iter()
        .zip(&strength)
        .map(|(w_in, k)| 2.0 * w_in - resolution * k * k / total)
        .sum();
    Ok(sum / total)
}

/// Working graph for one level of the Leiden hierarchy.
#[derive(Debug, Clone)]
struct Level {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    weights: Vec<f64>,
    /// Mass that stays internal to whatever community holds the node.
    self_weight: Vec<f64>,
    strength: Vec<f64>,
}

impl Level {
    fn from_graph(g: &WeightedGraph) -> Self {
        let n = g.node_count();
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let mut neighbors = Vec::new();
        let mut weights = Vec::new();
        for i in 0..n {
            for (j, w) in g.neighbors(i) {
                neighbors.push(j);
                weights.push(w);
            }
            offsets.push(neighbors.len());
        }
        Self {
            offsets,
            neighbors,
            weights,
            self_weight: g.diagonal_masses().iter().map(|d| d / 2.0).collect(),
            strength: g.strengths(),
        }
    }

    fn len(&self) -> usize {
        self.strength.len()
    }

    fn adjacent(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[v]..self.offsets[v + 1];
        self.neighbors[range.clone()]
            .iter()
            .copied()
            .zip(self.weights[range].iter().copied())
    }

    /// Collapses nodes by `groups` (dense, `0..count`).
    fn collapse(&self, groups: &[usize], count: usize) -> Self {
        let mut self_weight = vec![0.0; count];
        let mut strength = vec![0.0; count];
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); count];
        for v in 0..self.len() {
            let gv = groups[v];
            self_weight[gv] += self.self_weight[v];
            strength[gv] += self.strength[v];
            for (u, w) in self.adjacent(v) {
                let gu = groups[u];
                if gu == gv {
                    // Each internal pair is visited from both ends.
                    if v < u {
                        self_weight[gv] += w;
                    }
                } else {
                    rows[gv].push((gu, w));
                }
            }
        }
        let mut offsets = Vec::with_capacity(count + 1);
        offsets.push(0);
        let mut neighbors = Vec::new();
        let mut weights = Vec::new();
        for mut row in rows {
            row.sort_by_key(|&(u, _)| u);
            let start = neighbors.len();
            for (u, w) in row {
                if neighbors.len() > start && *neighbors.last().unwrap() == u {
                    *weights.last_mut().unwrap() += w;
                } else {
                    neighbors.push(u);
                    weights.push(w);
                }
            }
            offsets.push(neighbors.len());
        }
        Self {
            offsets,
            neighbors,
            weights,
            self_weight,
            strength,
        }
    }
}

/// Community strengths plus a pool of empty community ids.
struct Partition {
    membership: Vec<usize>,
    strength: Vec<f64>,
    size: Vec<usize>,
    empty: Vec<usize>,
}

impl Partition {
    fn new(level: &Level, membership: Vec<usize>) -> Self {
        let n = level.len();
        let mut strength = vec![0.0; n];
        let mut size = vec![0usize; n];
        for (v, &c) in membership.iter().enumerate() {
            strength[c] += level.strength[v];
            size[c] += 1;
        }
        // Popped from the back, so the lowest free id is reused first.
        let empty = (0..n).rev().filter(|&c| size[c] == 0).collect();
        Self {
            membership,
            strength,
            size,
            empty,
        }
    }

    fn singletons(level: &Level) -> Self {
        Self::new(level, (0..level.len()).collect())
    }

    fn move_node(&mut self, v: usize, node_strength: f64, to: usize) {
        let from = self.membership[v];
        if from == to {
            return;
        }
        self.strength[from] -= node_strength;
        self.size[from] -= 1;
        if self.size[from] == 0 {
            self.strength[from] = 0.0;
            self.empty.push(from);
        }
        if self.size[to] == 0 {
            if let Some(pos) = self.empty.iter().rposition(|&c| c == to) {
                self.empty.remove(pos);
            }
        }
        self.strength[to] += node_strength;
        self.size[to] += 1;
        self.membership[v] = to;
    }

    /// Relabels communities to `0..count` in order of first appearance.
    fn compacted(&self) -> (Vec<usize>, usize) {
        let mut map = vec![usize::MAX; self.membership.len()];
        let mut next = 0;
        let labels = self
            .membership
            .iter()
            .map(|&c| {
                if map[c] == usize::MAX {
                    map[c] = next;
                    next += 1;
                }
                map[c]
            })
            .collect();
        (labels, next)
    }
}

/// Scratch accumulator of link weight from one node to each community.
struct LinkWeights {
    weight: Vec<f64>,
    seen: Vec<bool>,
    touched: Vec<usize>,
}

impl LinkWeights {
    fn new(n: usize) -> Self {
        Self {
            weight: vec![0.0; n],
            seen: vec![false; n],
            touched: Vec::new(),
        }
    }

    fn add(&mut self, c: usize, w: f64) {
        if !self.seen[c] {
            self.seen[c] = true;
            self.touched.push(c);
        }
        self.weight[c] += w;
    }

    fn clear(&mut self) {
        for &c in &self.touched {
            self.weight[c] = 0.0;
            self.seen[c] = false;
        }
        self.touched.clear();
    }
}

struct Optimizer {
    resolution: f64,
    /// Total strength `2W`.
    total: f64,
    rng: ChaCha8Rng,
}

impl Optimizer {
    /// Queue-based local moving.
    fn move_nodes(&mut self, level: &Level, part: &mut Partition) {
        let n = level.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut self.rng);
        let mut queue: VecDeque<usize> = order.into();
        let mut queued = vec![true; n];
        let mut links = LinkWeights::new(n);

        while let Some(v) = queue.pop_front() {
            queued[v] = false;
            let own = part.membership[v];
            let kv = level.strength[v];
            for (u, w) in level.adjacent(v) {
                links.add(part.membership[u], w);
            }
            // Gains are measured with v taken out of its community.
            let own_strength = part.strength[own] - kv;
            let scale = self.resolution * kv / self.total;
            let stay = links.weight[own] - scale * own_strength;

            let mut best = own;
            let mut best_gain = stay;
            let mut candidates = links.touched.clone();
            candidates.sort_unstable();
            for &c in &candidates {
                if c == own {
                    continue;
                }
                let gain = links.weight[c] - scale * part.strength[c];
                if gain > best_gain {
                    best = c;
                    best_gain = gain;
                }
            }
            // Isolating v gains exactly zero.
            if part.size[own] > 1 && 0.0 > best_gain {
                best = *part.empty.last().expect("a non-singleton community leaves a free id");
            }
            links.clear();

            if best != own {
                part.move_node(v, kv, best);
                for (u, _) in level.adjacent(v) {
                    if !queued[u] && part.membership[u] != best {
                        queued[u] = true;
                        queue.push_back(u);
                    }
                }
            }
        }
    }

    /// Splits every community of `part` into well-connected subcommunities.
    fn refine(&mut self, level: &Level, part: &Partition) -> Partition {
        let n = level.len();
        let mut refined = Partition::singletons(level);
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); n];
        for v in 0..n {
            members[part.membership[v]].push(v);
        }
        // Weight from each refined community to the rest of its parent.
        let mut external = vec![0.0; n];
        let mut links = LinkWeights::new(n);

        for (parent, nodes) in members.iter().enumerate() {
            if nodes.len() < 2 {
                continue;
            }
            let parent_strength = part.strength[parent];
            for &v in nodes {
                external[v] = level
                    .adjacent(v)
                    .filter(|&(u, _)| part.membership[u] == parent)
                    .map(|(_, w)| w)
                    .sum();
            }
            let mut order = nodes.clone();
            order.shuffle(&mut self.rng);
            for v in order {
                if refined.size[refined.membership[v]] != 1 {
                    continue;
                }
                let kv = level.strength[v];
                let threshold = |k: f64| self.resolution * k * (parent_strength - k) / self.total;
                if external[v] < threshold(kv) {
                    continue;
                }
                for (u, w) in level.adjacent(v) {
                    if part.membership[u] == parent {
                        links.add(refined.membership[u], w);
                    }
                }
                let own = refined.membership[v];
                let scale = self.resolution * kv / self.total;
                let mut candidates: Vec<usize> = links
                    .touched
                    .iter()
                    .copied()
                    .filter(|&t| t != own)
                    .filter(|&t| external[t] >= threshold(refined.strength[t]))
                    .filter(|&t| links.weight[t] - scale * refined.strength[t] >= 0.0)
                    .collect();
                candidates.sort_unstable();
                if !candidates.is_empty() {
                    let target = candidates[self.rng.random_range(0..candidates.len())];
                    external[target] += external[v] - 2.0 * links.weight[target];
                    refined.move_node(v, kv, target);
                }
                links.clear();
            }
        }
        refined
    }
}

/// Runs Leiden and also returns the quality of the projected partition after
/// every pass, starting with the singleton partition.
pub fn leiden_with_trace(g: &WeightedGraph, cfg: &DetectConfig) -> Result<(CommunityAssignment, Vec<f64>)> {
    cfg.validate()?;
    let n = g.node_count();
    let total = g.total_strength();
    if total <= 0.0 {
        // No links at all: every node is its own community.
        return Ok((
            CommunityAssignment::from_raw_labels(&(0..n).collect::<Vec<_>>()),
            Vec::new(),
        ));
    }

    let mut opt = Optimizer {
        resolution: cfg.resolution,
        total,
        rng: rng::stream(cfg.seed, &[]),
    };
    let mut level = Level::from_graph(g);
    let mut part = Partition::singletons(&level);
    // Level node of every fine node.
    let mut fine_to_level: Vec<usize> = (0..n).collect();
    let project = |fine_to_level: &[usize], part: &Partition| -> Vec<usize> {
        fine_to_level.iter().map(|&v| part.membership[v]).collect()
    };
    let quality_of = |labels: &[usize]| -> Result<f64> {
        rb_quality(g, &CommunityAssignment::from_raw_labels(labels), cfg.resolution)
    };
    let mut trace = vec![quality_of(&project(&fine_to_level, &part))?];

    for _ in 0..cfg.max_passes {
        opt.move_nodes(&level, &mut part);
        let (labels, count) = part.compacted();
        let q = quality_of(&project(&fine_to_level, &part))?;
        trace.push(q);
        // Done once every community is a single node at the current level.
        if count == level.len() {
            break;
        }
        let refined = opt.refine(&level, &part);
        let (mut groups, mut group_count) = refined.compacted();
        if group_count == level.len() {
            // Refinement merged nothing; collapse the communities themselves
            // so the next level is strictly smaller.
            groups.clone_from(&labels);
            group_count = count;
        }
        // Aggregate nodes start in the community of their members.
        let mut next_membership = vec![0usize; group_count];
        for v in 0..level.len() {
            next_membership[groups[v]] = labels[v];
        }
        level = level.collapse(&groups, group_count);
        for f in fine_to_level.iter_mut() {
            *f = groups[*f];
        }
        part = Partition::new(&level, next_membership);
    }

    let labels = split_disconnected(g, &project(&fine_to_level, &part));
    let c = CommunityAssignment::from_raw_labels(&labels);
    Ok((c, trace))
}

/// Leiden optimization of [`rb_quality`].
///
/// Deterministic for a given graph and seed. Every returned community induces
/// a connected subgraph.
pub fn leiden(g: &WeightedGraph, cfg: &DetectConfig) -> Result<CommunityAssignment> {
    leiden_with_trace(g, cfg).map(|(c, _)| c)
}

/// Splits each community into its connected components. Never lowers the
/// quality: there is no weight between the pieces.
fn split_disconnected(g: &WeightedGraph, labels: &[usize]) -> Vec<usize> {
    let n = g.node_count();
    let mut out = vec![usize::MAX; n];
    let mut next = 0;
    let mut stack = Vec::new();
    for start in 0..n {
        if out[start] != usize::MAX {
            continue;
        }
        out[start] = next;
        stack.push(start);
        while let Some(v) = stack.pop() {
            for (u, _) in g.neighbors(v) {
                if out[u] == usize::MAX && labels[u] == labels[start] {
                    out[u] = next;
                    stack.push(u);
                }
            }
        }
        next += 1;
    }
    out
}

/// Parses a `node\tcommunity` table; communities are numbered in order of
/// first appearance over the graph's nodes.
pub fn load_partition(text: &str, g: &WeightedGraph) -> Result<CommunityAssignment> {
    let (labels, names) = load_node_table("partition", text, g, &COMMUNITY_HEADER)?;
    CommunityAssignment::with_names(labels, names)
}

pub fn save_partition(c: &CommunityAssignment, g: &WeightedGraph) -> String {
    save_node_table(&COMMUNITY_HEADER, g, c.labels(), c.names())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::{g4, g4_communities};

    /// `Q = 1/(2W) Σ_ij [A_ij − γ k_i k_j / 2W] δ(c_i, c_j)` with `A_ii = d_i`.
    fn brute_quality(g: &WeightedGraph, labels: &[usize], gamma: f64) -> f64 {
        let n = g.node_count();
        let k: Vec<f64> = (0..n).map(|i| g.strength(i).unwrap()).collect();
        let two_w: f64 = k.iter().sum();
        let mut q = 0.0;
        for i in 0..n {
            for j in 0..n {
                if labels[i] != labels[j] {
                    continue;
                }
                let a = if i == j { g.diagonal(i) } else { g.weight(i, j) };
                q += a - gamma * k[i] * k[j] / two_w;
            }
        }
        q / two_w
    }

    /// Restricted-growth strings enumerate each set partition exactly once.
    pub(crate) fn all_partitions(n: usize) -> Vec<Vec<usize>> {
        fn go(prefix: &mut Vec<usize>, max: usize, n: usize, out: &mut Vec<Vec<usize>>) {
            if prefix.len() == n {
                out.push(prefix.clone());
                return;
            }
            for l in 0..=max + 1 {
                prefix.push(l);
                go(prefix, max.max(l), n, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        go(&mut vec![0], 0, n, &mut out);
        out
    }

    fn two_cliques() -> WeightedGraph {
        let mut edges = Vec::new();
        for base in [0, 4] {
            for i in 0..4 {
                for j in i + 1..4 {
                    edges.push((base + i, base + j, 1.0));
                }
            }
        }
        WeightedGraph::unlabeled(vec![0.0; 8], edges).unwrap()
    }

    #[test]
    fn partition_enumeration_counts() {
        assert_eq!(all_partitions(4).len(), 15);
        assert_eq!(all_partitions(8).len(), 4140);
    }

    #[test]
    fn quality_of_fixture() {
        let q = rb_quality(&g4(), &g4_communities(), 1.0).unwrap();
        assert_eq!(q, (8.0 - 81.0 / 16.0 + 6.0 - 49.0 / 16.0) / 16.0);
        assert!((q - 0.3672).abs() < 5e-5);
        assert!((q - brute_quality(&g4(), &[0, 0, 1, 1], 1.0)).abs() < 1e-15);
    }

    #[test]
    fn single_community_has_zero_quality() {
        let q = rb_quality(&g4(), &CommunityAssignment::single(4), 1.0).unwrap();
        assert!(q.abs() < 1e-15);
    }

    #[test]
    fn zero_resolution_favors_one_community() {
        let g = g4();
        let single = rb_quality(&g, &CommunityAssignment::single(4), 0.0).unwrap();
        assert_eq!(single, 1.0);
        for labels in all_partitions(4) {
            let q = rb_quality(&g, &CommunityAssignment::from_raw_labels(&labels), 0.0).unwrap();
            assert!(q <= single);
        }
    }

    #[test]
    fn quality_rejects_empty_mass() {
        let g = WeightedGraph::unlabeled(vec![0.0, 0.0], []).unwrap();
        assert!(matches!(
            rb_quality(&g, &CommunityAssignment::single(2), 1.0),
            Err(Error::UndefinedQuality)
        ));
    }

    #[test]
    fn quality_matches_brute_force_on_all_partitions() {
        let g = two_cliques();
        for labels in all_partitions(8).into_iter().step_by(7) {
            let c = CommunityAssignment::from_raw_labels(&labels);
            for gamma in [0.5, 1.0, 2.0] {
                let fast = rb_quality(&g, &c, gamma).unwrap();
                assert!((fast - brute_quality(&g, &labels, gamma)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn leiden_finds_optimum_of_fixture() {
        let cfg = DetectConfig::default();
        let c = leiden(&g4(), &cfg).unwrap();
        assert_eq!(c.labels(), [0, 0, 1, 1]);
        let best = all_partitions(4)
            .into_iter()
            .map(|l| rb_quality(&g4(), &CommunityAssignment::from_raw_labels(&l), 1.0).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(rb_quality(&g4(), &c, 1.0).unwrap(), best);
    }

    #[test]
    fn leiden_separates_cliques() {
        let g = two_cliques();
        for seed in 0..5 {
            let c = leiden(
                &g,
                &DetectConfig {
                    seed,
                    ..Default::default()
                },
            )
            .unwrap();
            assert_eq!(c.labels(), [0, 0, 0, 0, 1, 1, 1, 1]);
        }
    }

    #[test]
    fn trivial_graphs() {
        let one = WeightedGraph::unlabeled(vec![3.0], []).unwrap();
        assert_eq!(
            leiden(&one, &DetectConfig::default()).unwrap(),
            CommunityAssignment::single(1)
        );
        let empty = WeightedGraph::unlabeled(vec![0.0; 3], []).unwrap();
        assert_eq!(leiden(&empty, &DetectConfig::default()).unwrap().community_count(), 3);
    }

    #[test]
    fn rejects_bad_config() {
        let bad = DetectConfig {
            resolution: 0.0,
            ..Default::default()
        };
        assert!(leiden(&g4(), &bad).is_err());
        let bad = DetectConfig {
            max_passes: 0,
            ..Default::default()
        };
        assert!(leiden(&g4(), &bad).is_err());
    }

    #[test]
    fn partition_file() {
        let g = g4();
        let c = load_partition("node\tcommunity\n1\ta\n2\ta\n3\tb\n4\tb\n", &g).unwrap();
        assert_eq!(c.community_count(), 2);
        assert_eq!(c.names(), ["a", "b"]);
        let err = load_partition("node\tcommunity\n1\ta\n1\ta\n", &g).unwrap_err();
        assert!(err.to_string().contains('1'));
        let c = load_partition("node\tcommunity\n1\t7\n2\t7\n3\t3\n4\t3\n", &g).unwrap();
        assert_eq!(c.labels(), [0, 0, 1, 1]);
        assert_eq!(load_partition(&save_partition(&c, &g), &g).unwrap(), c);
    }

    #[test]
    fn splitting_disconnected_parts() {
        let g = WeightedGraph::unlabeled(vec![0.0; 4], [(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        assert_eq!(split_disconnected(&g, &[0, 0, 0, 0]), vec![0, 0, 1, 1]);
    }
}
