//! Planted-partition benchmarks and the experiments built on them.
//!
//! [`generate_sbm`] draws a stochastic block model together with a noisy,
//! community-aligned aggregation. [`run_consistency_experiment`] compares
//! memberships computed on the aggregate with those summed from the fine
//! graph; [`run_heatmap_experiment`] sweeps affinity against aggregation
//! mixing.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::aggregation::{aggregate, lift_communities, AggregationMap};
use crate::detect::{leiden, DetectConfig};
use crate::error::{Error, Result};
use crate::graph::{CommunityAssignment, WeightedGraph};
use crate::lfmm::{normalize_aggregate, normalize_node, raw_membership, MembershipMatrix};
use crate::rng;
use crate::sparse::DenseMatrix;
use crate::table::fmt_num;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SbmConfig {
    pub nodes: usize,
    pub communities: usize,
    /// Expected fraction of a node's edges that leave its community (`μ`).
    pub affinity: f64,
    pub mean_degree: f64,
    /// Aggregate sets; must be a multiple of `communities`.
    pub sets: usize,
    /// Probability that a node's set is drawn uniformly from all sets rather
    /// than from its community's aligned sets.
    pub mixing: f64,
    pub seed: u64,
}

impl Default for SbmConfig {
    fn default() -> Self {
        Self {
            nodes: 1000,
            communities: 2,
            affinity: 0.05,
            mean_degree: 20.0,
            sets: 50,
            mixing: 0.2,
            seed: 0,
        }
    }
}

impl SbmConfig {
    /// Within- and between-community edge probabilities.
    pub fn probabilities(&self) -> Result<(f64, f64)> {
        let (n, r, k, mu) = (self.nodes, self.communities, self.mean_degree, self.affinity);
        if r == 0 || n < r {
            return Err(Error::Config(format!(
                "need 1 <= communities <= nodes, got {r} and {n}"
            )));
        }
        if !(k.is_finite() && k >= 0.0 && k < n as f64) {
            return Err(Error::Config(format!("mean degree must lie in [0, {n}), got {k}")));
        }
        if !(0.0..=1.0).contains(&mu) || !(0.0..=1.0).contains(&self.mixing) {
            return Err(Error::Config("affinity and mixing must lie in [0, 1]".into()));
        }
        if self.sets == 0 || !self.sets.is_multiple_of(r) {
            return Err(Error::Config(format!(
                "sets ({}) must be a positive multiple of communities ({r})",
                self.sets
            )));
        }
        let size = n as f64 / r as f64;
        let inside = size - 1.0;
        let outside = n as f64 - size;
        let p_in = if k * (1.0 - mu) == 0.0 {
            0.0
        } else {
            k * (1.0 - mu) / inside
        };
        let p_out = if k * mu == 0.0 { 0.0 } else { k * mu / outside };
        let lo = if inside > 0.0 { (1.0 - inside / k).max(0.0) } else { 1.0 };
        let hi = if outside > 0.0 { (outside / k).min(1.0) } else { 0.0 };
        if !(0.0..=1.0).contains(&p_in) || !(0.0..=1.0).contains(&p_out) || !p_in.is_finite() || !p_out.is_finite() {
            return Err(Error::Config(format!(
                "affinity {mu} is infeasible for this size and degree (p_in = {p_in}, p_out = {p_out}); feasible affinity range is [{lo}, {hi}]"
            )));
        }
        Ok((p_in, p_out))
    }
}

/// A generated benchmark.
#[derive(Debug, Clone)]
pub struct SbmInstance {
    pub graph: WeightedGraph,
    pub planted: CommunityAssignment,
    pub aggregation: AggregationMap,
    pub p_in: f64,
    pub p_out: f64,
}

/// Index gaps between successes of independent Bernoulli(`p`) trials.
fn bernoulli_successes(rng: &mut ChaCha8Rng, p: f64, trials: u64, mut emit: impl FnMut(u64)) {
    if p <= 0.0 || trials == 0 {
        return;
    }
    if p >= 1.0 {
        (0..trials).for_each(emit);
        return;
    }
    let log_q = (1.0 - p).ln();
    let mut k: u64 = 0;
    loop {
        let u: f64 = rng.random();
        let skip = ((1.0 - u).ln() / log_q).floor();
        if skip >= (trials - k) as f64 {
            return;
        }
        k += skip as u64;
        emit(k);
        k += 1;
        if k >= trials {
            return;
        }
    }
}

/// Draws the planted graph and its aggregation. Deterministic given the seed;
/// edges and set assignments use separate streams.
pub fn generate_sbm(cfg: &SbmConfig) -> Result<SbmInstance> {
    let (p_in, p_out) = cfg.probabilities()?;
    let (n, r) = (cfg.nodes, cfg.communities);
    let mut starts = Vec::with_capacity(r + 1);
    starts.push(0usize);
    for c in 0..r {
        let size = n / r + usize::from(c < n % r);
        starts.push(starts[c] + size);
    }
    let labels: Vec<usize> = (0..r)
        .flat_map(|c| std::iter::repeat_n(c, starts[c + 1] - starts[c]))
        .collect();

    let mut edge_rng = rng::stream(cfg.seed, &[0]);
    let mut edges = Vec::new();
    for a in 0..r {
        let (a0, sa) = (starts[a], starts[a + 1] - starts[a]);
        // Pairs (i, j), j < i, enumerated row by row.
        let pairs = (sa as u64) * (sa as u64).saturating_sub(1) / 2;
        bernoulli_successes(&mut edge_rng, p_in, pairs, |k| {
            let i = ((1.0 + (1.0 + 8.0 * k as f64).sqrt()) / 2.0).floor() as u64;
            let mut i = i.max(1);
            while i * (i - 1) / 2 > k {
                i -= 1;
            }
            while (i + 1) * i / 2 <= k {
                i += 1;
            }
            let j = k - i * (i - 1) / 2;
            edges.push((a0 + i as usize, a0 + j as usize, 1.0));
        });
        for b in a + 1..r {
            let (b0, sb) = (starts[b], starts[b + 1] - starts[b]);
            bernoulli_successes(&mut edge_rng, p_out, (sa * sb) as u64, |k| {
                let (i, j) = ((k / sb as u64) as usize, (k % sb as u64) as usize);
                edges.push((a0 + i, b0 + j, 1.0));
            });
        }
    }
    let graph = WeightedGraph::unlabeled(vec![0.0; n], edges)?;

    let per_community = cfg.sets / r;
    let mut set_rng = rng::stream(cfg.seed, &[1]);
    let raw_sets: Vec<usize> = labels
        .iter()
        .map(|&c| {
            if set_rng.random::<f64>() < cfg.mixing {
                set_rng.random_range(0..cfg.sets)
            } else {
                c * per_community + set_rng.random_range(0..per_community)
            }
        })
        .collect();
    // Drop sets that drew no nodes, keeping the original ids as labels.
    let mut used = vec![false; cfg.sets];
    raw_sets.iter().for_each(|&s| used[s] = true);
    let mut remap = vec![usize::MAX; cfg.sets];
    let mut set_labels = Vec::new();
    for s in 0..cfg.sets {
        if used[s] {
            remap[s] = set_labels.len();
            set_labels.push(format!("set_{s}"));
        }
    }
    let aggregation = AggregationMap::new(raw_sets.iter().map(|&s| remap[s]).collect(), set_labels)?;

    Ok(SbmInstance {
        graph,
        planted: CommunityAssignment::new(labels, r)?,
        aggregation,
        p_in,
        p_out,
    })
}

/// Product-moment correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::UndefinedCorrelation(format!(
            "need two equal-length sequences of at least 2 values, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Normalized mutual information, `2·I(A;B) / (H(A) + H(B))`.
pub fn nmi(a: &CommunityAssignment, b: &CommunityAssignment) -> Result<f64> {
    if a.node_count() != b.node_count() {
        return Err(Error::Mismatch(format!(
            "partitions cover {} and {} nodes",
            a.node_count(),
            b.node_count()
        )));
    }
    let n = a.node_count() as f64;
    let mut joint: HashMap<(usize, usize), f64> = HashMap::new();
    let mut pa = vec![0.0; a.community_count()];
    let mut pb = vec![0.0; b.community_count()];
    for (&x, &y) in a.labels().iter().zip(b.labels()) {
        *joint.entry((x, y)).or_insert(0.0) += 1.0;
        pa[x] += 1.0;
        pb[y] += 1.0;
    }
    let entropy = |counts: &[f64]| -> f64 {
        counts
            .iter()
            .filter(|&&c| c > 0.0)
            .map(|&c| -(c / n) * (c / n).ln())
            .sum()
    };
    let (ha, hb) = (entropy(&pa), entropy(&pb));
    if ha + hb == 0.0 {
        return Ok(1.0);
    }
    let mut keys: Vec<_> = joint.keys().copied().collect();
    keys.sort_unstable();
    let mi: f64 = keys
        .into_iter()
        .map(|(x, y)| {
            let pxy = joint[&(x, y)] / n;
            pxy * (pxy * n * n / (pa[x] * pb[y])).ln()
        })
        .sum();
    Ok((2.0 * mi / (ha + hb)).clamp(0.0, 1.0))
}

/// The three comparisons of the consistency experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Series {
    /// Summed raw memberships against aggregate raw memberships.
    Raw,
    /// Summed unit shares against size-scaled aggregate shares.
    Normalized,
    /// Summed raw memberships under communities detected on the fine graph
    /// against aggregate raw memberships.
    IndividualDetection,
}

impl Series {
    pub fn name(self) -> &'static str {
        match self {
            Series::Raw => "raw",
            Series::Normalized => "normalized",
            Series::IndividualDetection => "individual",
        }
    }
}

/// One `(set, community)` point; `x` is the fine-level sum, `y` the value
/// computed on the aggregate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterPoint {
    pub set: usize,
    pub community: usize,
    pub x: f64,
    pub y: f64,
    pub series: Series,
}

#[derive(Debug, Clone)]
pub struct ConsistencyResult {
    pub points: Vec<ScatterPoint>,
    pub raw_correlation: f64,
    pub normalized_correlation: f64,
    pub individual_correlation: f64,
    /// Largest `|x − y|` on the raw series.
    pub raw_max_discrepancy: f64,
    /// Largest fine-level node strength.
    pub max_strength: f64,
    /// Mean over sets of aggregate minority share minus the minority share
    /// under fine-level detection.
    pub minority_bias: f64,
    pub aggregate_communities: CommunityAssignment,
    pub individual_communities: CommunityAssignment,
    pub set_labels: Vec<String>,
    pub p_in: f64,
    pub p_out: f64,
}

fn summed_by_set(m: &MembershipMatrix, a: &AggregationMap) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(a.set_count(), m.community_count());
    for i in 0..m.node_count() {
        let row = out.row_mut(a.set_of(i));
        for (o, v) in row.iter_mut().zip(m.row(i)) {
            *o += v;
        }
    }
    out
}

/// Maps each fine community to the aggregate community it overlaps most;
/// ties go to the lower index.
fn overlap_targets(fine: &CommunityAssignment, lifted: &CommunityAssignment) -> Vec<usize> {
    let mut overlap = vec![vec![0usize; lifted.community_count()]; fine.community_count()];
    for (&f, &l) in fine.labels().iter().zip(lifted.labels()) {
        overlap[f][l] += 1;
    }
    overlap
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .fold((0, 0), |best, (k, &c)| if c > best.1 { (k, c) } else { best })
                .0
        })
        .collect()
}

/// Per-set raw memberships of `g` under the fine partition `c`, with columns
/// relabeled through `target`.
fn summed_under_mapping(
    g: &WeightedGraph,
    a: &AggregationMap,
    c: &CommunityAssignment,
    target: &[usize],
    r: usize,
) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(a.set_count(), r);
    for i in 0..g.node_count() {
        let row = out.row_mut(a.set_of(i));
        row[target[c.label(i)]] += g.diagonal(i) / 2.0;
        for (j, w) in g.neighbors(i) {
            row[target[c.label(j)]] += w;
        }
    }
    out
}

fn unit_minority(row: &[f64], own: usize) -> Option<f64> {
    let total: f64 = row.iter().sum();
    (total > 0.0).then(|| 1.0 - row[own] / total)
}

/// Runs the aggregate-versus-fine comparison on one generated instance.
pub fn run_consistency_experiment(sbm: &SbmConfig, detect: &DetectConfig) -> Result<ConsistencyResult> {
    let inst = generate_sbm(sbm)?;
    let a = &inst.aggregation;
    let agg = aggregate(&inst.graph, a)?;
    let c_agg = leiden(&agg, detect)?;
    let lifted = lift_communities(&c_agg, a)?;
    let r = c_agg.community_count();

    let agg_raw = raw_membership(&agg, &c_agg)?;
    let fine_raw = raw_membership(&inst.graph, &lifted)?;
    let summed_raw = summed_by_set(&fine_raw, a);

    let agg_norm = normalize_aggregate(&agg_raw, a.set_sizes())?;
    let summed_norm = summed_by_set(&normalize_node(&fine_raw)?, a);

    // Fine-level detection may find a different number of communities; each
    // is credited to the aggregate community it overlaps most.
    let c_fine = leiden(&inst.graph, detect)?;
    let target = overlap_targets(&c_fine, &lifted);
    let summed_ind = summed_under_mapping(&inst.graph, a, &c_fine, &target, r);

    let mut points = Vec::with_capacity(3 * a.set_count() * r);
    let mut raw_max_discrepancy: f64 = 0.0;
    for x in 0..a.set_count() {
        for k in 0..r {
            raw_max_discrepancy = raw_max_discrepancy.max((summed_raw.get(x, k) - agg_raw.get(x, k)).abs());
            points.push(ScatterPoint {
                set: x,
                community: k,
                x: summed_raw.get(x, k),
                y: agg_raw.get(x, k),
                series: Series::Raw,
            });
        }
    }
    for x in 0..a.set_count() {
        for k in 0..r {
            points.push(ScatterPoint {
                set: x,
                community: k,
                x: summed_norm.get(x, k),
                y: agg_norm.get(x, k),
                series: Series::Normalized,
            });
        }
    }
    for x in 0..a.set_count() {
        for k in 0..r {
            points.push(ScatterPoint {
                set: x,
                community: k,
                x: summed_ind.get(x, k),
                y: agg_raw.get(x, k),
                series: Series::IndividualDetection,
            });
        }
    }
    let correlation = |series: Series| -> Result<f64> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().filter(|p| p.series == series).map(|p| (p.x, p.y)).unzip();
        pearson(&xs, &ys)
    };

    let mut bias_sum = 0.0;
    let mut bias_count = 0usize;
    for x in 0..a.set_count() {
        let own = c_agg.label(x);
        if let (Some(agg_min), Some(ind_min)) = (
            unit_minority(agg_raw.row(x), own),
            unit_minority(summed_ind.row(x), own),
        ) {
            bias_sum += agg_min - ind_min;
            bias_count += 1;
        }
    }

    Ok(ConsistencyResult {
        raw_correlation: correlation(Series::Raw)?,
        normalized_correlation: correlation(Series::Normalized)?,
        individual_correlation: correlation(Series::IndividualDetection)?,
        points,
        raw_max_discrepancy,
        max_strength: inst.graph.strengths().into_iter().fold(0.0, f64::max),
        minority_bias: if bias_count > 0 {
            bias_sum / bias_count as f64
        } else {
            0.0
        },
        aggregate_communities: c_agg,
        individual_communities: c_fine,
        set_labels: a.set_labels().to_vec(),
        p_in: inst.p_in,
        p_out: inst.p_out,
    })
}

/// `set,community,x,y,series` rows.
pub fn scatter_to_csv(result: &ConsistencyResult) -> String {
    let mut out = String::from("set,community,x,y,series\n");
    let names = result.aggregate_communities.names();
    for p in &result.points {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            result.set_labels[p.set],
            names[p.community],
            fmt_num(p.x),
            fmt_num(p.y),
            p.series.name()
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapConfig {
    /// Seed, sizes and degree; `affinity` and `mixing` are overridden per cell.
    pub base: SbmConfig,
    pub affinities: Vec<f64>,
    pub mixings: Vec<f64>,
    pub replicates: usize,
    pub detect: DetectConfig,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatmapCell {
    pub affinity: f64,
    pub mixing: f64,
    /// `None` when the cell's configuration is infeasible.
    pub mean_minority: Option<f64>,
}

/// Mean over sets of the unit-share membership outside each set's own
/// detected community.
pub fn mean_minority_membership(inst: &SbmInstance, detect: &DetectConfig) -> Result<f64> {
    let agg = aggregate(&inst.graph, &inst.aggregation)?;
    let c = leiden(&agg, detect)?;
    let raw = raw_membership(&agg, &c)?;
    let minorities: Vec<f64> = (0..agg.node_count())
        .filter_map(|x| unit_minority(raw.row(x), c.label(x)))
        .collect();
    if minorities.is_empty() {
        return Err(Error::Mismatch("no set has positive membership mass".into()));
    }
    Ok(minorities.iter().sum::<f64>() / minorities.len() as f64)
}

/// Evaluates every `(affinity, mixing)` cell; rows follow `affinities`,
/// columns follow `mixings`. Jobs are independent and run in parallel, but
/// the output does not depend on scheduling.
pub fn run_heatmap_experiment(cfg: &HeatmapConfig) -> Result<Vec<HeatmapCell>> {
    if cfg.replicates == 0 {
        return Err(Error::Config("replicates must be at least 1".into()));
    }
    cfg.detect.validate()?;
    let cells: Vec<(f64, f64)> = cfg
        .affinities
        .iter()
        .flat_map(|&mu| cfg.mixings.iter().map(move |&m| (mu, m)))
        .collect();
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..cfg.replicates).map(move |rep| (c, rep)))
        .collect();
    let values: Vec<Result<Option<f64>>> = jobs
        .par_iter()
        .map(|&(cell, rep)| {
            let (affinity, mixing) = cells[cell];
            let seed = rng::derive_seed(cfg.base.seed, &[cell as u64, rep as u64]);
            let sbm = SbmConfig {
                affinity,
                mixing,
                seed,
                ..cfg.base
            };
            let inst = match generate_sbm(&sbm) {
                Ok(inst) => inst,
                Err(Error::Config(_)) => return Ok(None),
                Err(e) => return Err(e),
            };
            let detect = DetectConfig { seed, ..cfg.detect };
            mean_minority_membership(&inst, &detect).map(Some)
        })
        .collect();

    let mut out = Vec::with_capacity(cells.len());
    for (cell, &(affinity, mixing)) in cells.iter().enumerate() {
        let mut sum = 0.0;
        let mut feasible = true;
        for rep in 0..cfg.replicates {
            match &values[cell * cfg.replicates + rep] {
                Ok(Some(v)) => sum += v,
                Ok(None) => feasible = false,
                Err(e) => return Err(Error::Mismatch(format!("cell ({affinity}, {mixing}): {e}"))),
            }
        }
        out.push(HeatmapCell {
            affinity,
            mixing,
            mean_minority: feasible.then(|| sum / cfg.replicates as f64),
        });
    }
    Ok(out)
}

/// `mu,m,mean_minority` rows; infeasible cells are written as `NA`.
pub fn grid_to_csv(cells: &[HeatmapCell]) -> String {
    let mut out = String::from("mu,m,mean_minority\n");
    for c in cells {
        let v = c.mean_minority.map_or_else(|| "NA".to_string(), fmt_num);
        out.push_str(&format!("{},{},{}\n", fmt_num(c.affinity), fmt_num(c.mixing), v));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_affinity_has_no_cross_edges() {
        let cfg = SbmConfig {
            affinity: 0.0,
            ..Default::default()
        };
        let inst = generate_sbm(&cfg).unwrap();
        assert_eq!(inst.p_out, 0.0);
        for e in inst.graph.edges() {
            assert_eq!(inst.planted.label(e.source), inst.planted.label(e.target));
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = SbmConfig {
            seed: 42,
            ..Default::default()
        };
        let a = generate_sbm(&cfg).unwrap();
        let b = generate_sbm(&cfg).unwrap();
        assert_eq!(a.graph, b.graph);
        assert_eq!(a.aggregation, b.aggregation);
        let c = generate_sbm(&SbmConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a.graph, c.graph);
    }

    #[test]
    fn pair_index_decoding_covers_every_pair_once() {
        let cfg = SbmConfig {
            nodes: 30,
            communities: 3,
            affinity: 0.0,
            mean_degree: 9.0,
            sets: 3,
            mixing: 0.0,
            seed: 1,
        };
        let inst = generate_sbm(&cfg).unwrap();
        // p_in = 1: every within-community pair must appear.
        assert_eq!(inst.p_in, 1.0);
        assert_eq!(inst.graph.edge_count(), 3 * 45);
    }

    #[test]
    fn infeasible_affinity_reports_range() {
        let cfg = SbmConfig {
            nodes: 40,
            mean_degree: 30.0,
            affinity: 0.0,
            sets: 2,
            ..Default::default()
        };
        let err = generate_sbm(&cfg).unwrap_err().to_string();
        assert!(err.contains("feasible affinity range"), "{err}");
        assert!(generate_sbm(&SbmConfig {
            sets: 51,
            ..Default::default()
        })
        .is_err());
    }

    #[test]
    fn sets_are_aligned_without_mixing() {
        let cfg = SbmConfig {
            mixing: 0.0,
            ..Default::default()
        };
        let inst = generate_sbm(&cfg).unwrap();
        for i in 0..cfg.nodes {
            let label = &inst.aggregation.set_labels()[inst.aggregation.set_of(i)];
            let id: usize = label.trim_start_matches("set_").parse().unwrap();
            assert_eq!(id / 25, inst.planted.label(i));
        }
    }

    #[test]
    fn pearson_examples() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let affine: Vec<f64> = xs.iter().map(|x| 2.0 * x + 3.0).collect();
        assert!((pearson(&xs, &affine).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert!((pearson(&xs, &neg).unwrap() + 1.0).abs() < 1e-15);
        // Centered: x = (-1.5, -0.5, 0.5, 1.5), y = (-1.75, -0.75, 0.25, 2.25).
        let expected = 6.5 / (5.0f64 * 8.75).sqrt();
        assert!((pearson(&xs, &[1.0, 2.0, 3.0, 5.0]).unwrap() - expected).abs() < 1e-14);
        assert!((expected - 0.9827).abs() < 5e-5);
        assert!(pearson(&xs, &[1.0; 4]).is_err());
        assert!(pearson(&xs, &[1.0]).is_err());
    }

    #[test]
    fn nmi_examples() {
        let a = CommunityAssignment::new(vec![0, 0, 1, 1], 2).unwrap();
        assert_eq!(nmi(&a, &a).unwrap(), 1.0);
        let swapped = CommunityAssignment::new(vec![1, 1, 0, 0], 2).unwrap();
        assert!((nmi(&a, &swapped).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(nmi(&a, &CommunityAssignment::single(4)).unwrap(), 0.0);
        assert!(nmi(&a, &CommunityAssignment::single(3)).is_err());
        let b = CommunityAssignment::new(vec![0, 1, 1, 2], 3).unwrap();
        assert!((nmi(&a, &b).unwrap() - nmi(&b, &a).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn scatter_and_grid_formats() {
        let cfg = SbmConfig {
            nodes: 200,
            sets: 10,
            seed: 3,
            ..Default::default()
        };
        let result = run_consistency_experiment(&cfg, &DetectConfig::default()).unwrap();
        let csv = scatter_to_csv(&result);
        assert!(csv.starts_with("set,community,x,y,series\n"));
        assert_eq!(csv.lines().count(), 1 + result.points.len());
        let cells = [HeatmapCell {
            affinity: 0.1,
            mixing: 0.0,
            mean_minority: None,
        }];
        assert_eq!(grid_to_csv(&cells), "mu,m,mean_minority\n0.1,0,NA\n");
    }
}
