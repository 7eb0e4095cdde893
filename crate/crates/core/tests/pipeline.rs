use std::collections::VecDeque;

use lfmm_core::aggregation::{load_aggregation, save_aggregation};
use lfmm_core::detect::{leiden_with_trace, load_partition, save_partition};
use lfmm_core::diversity::{null_diversity, GravityConfig, SpatialAttributes};
use lfmm_core::graph::{load_graph, save_graph};
use lfmm_core::lfmm::{conservation_check, raw_membership};
use lfmm_core::synth::{generate_sbm, run_heatmap_experiment, HeatmapConfig, SbmConfig};
use lfmm_core::{
    aggregate, compose, leiden, lift_communities, rb_quality, AggregationMap, CommunityAssignment, DetectConfig,
};

fn small_sbm(seed: u64) -> lfmm_core::synth::SbmInstance {
    generate_sbm(&SbmConfig {
        nodes: 300,
        sets: 20,
        seed,
        ..Default::default()
    })
    .unwrap()
}

#[test]
fn files_round_trip_through_the_whole_pipeline() {
    let inst = small_sbm(4);
    let (edges, diag) = save_graph(&inst.graph);
    let g = load_graph(&edges, Some(&diag)).unwrap();
    assert_eq!(g, inst.graph);

    let a = load_aggregation(&save_aggregation(&inst.aggregation, &g), &g).unwrap();
    let agg = aggregate(&g, &a).unwrap();
    let c = leiden(&agg, &DetectConfig::default()).unwrap();
    let reloaded = load_partition(&save_partition(&c, &agg), &agg).unwrap();
    assert_eq!(reloaded.labels(), c.labels());
    assert!(conservation_check(&g, &a, &reloaded).unwrap().passes(1e-12));
}

#[test]
fn two_level_aggregation_conserves_membership() {
    let inst = small_sbm(8);
    let g = &inst.graph;
    let inner = &inst.aggregation;
    let mid = aggregate(g, inner).unwrap();
    let outer = AggregationMap::unlabeled((0..mid.node_count()).map(|x| x % 4).collect(), 4).unwrap();
    let top = aggregate(&mid, &outer).unwrap();
    let direct = aggregate(g, &compose(&outer, inner).unwrap()).unwrap();
    assert_eq!(top.diagonal_masses(), direct.diagonal_masses());

    let c_top = CommunityAssignment::new(vec![0, 1, 0, 1], 2).unwrap();
    let top_m = raw_membership(&top, &c_top).unwrap();
    let c_fine = lift_communities(&c_top, &compose(&outer, inner).unwrap()).unwrap();
    let fine_m = raw_membership(g, &c_fine).unwrap();
    let both = compose(&outer, inner).unwrap();
    for x in 0..4 {
        for k in 0..2 {
            let summed: f64 = (0..g.node_count())
                .filter(|&i| both.set_of(i) == x)
                .map(|i| fine_m.get(i, k))
                .sum();
            assert_eq!(summed, top_m.get(x, k));
        }
    }
}

fn connected_within(g: &lfmm_core::WeightedGraph, members: &[usize], labels: &[usize]) -> bool {
    let mut seen = vec![false; g.node_count()];
    let mut queue = VecDeque::from([members[0]]);
    seen[members[0]] = true;
    let mut reached = 1;
    while let Some(u) = queue.pop_front() {
        for (v, _) in g.neighbors(u) {
            if !seen[v] && labels[v] == labels[u] {
                seen[v] = true;
                reached += 1;
                queue.push_back(v);
            }
        }
    }
    reached == members.len()
}

#[test]
fn leiden_is_deterministic_monotone_and_connected() {
    for seed in 0..5 {
        let inst = generate_sbm(&SbmConfig {
            nodes: 500,
            affinity: 0.3,
            seed,
            ..Default::default()
        })
        .unwrap();
        let cfg = DetectConfig {
            seed,
            ..Default::default()
        };
        let (c, trace) = leiden_with_trace(&inst.graph, &cfg).unwrap();
        assert_eq!(c, leiden(&inst.graph, &cfg).unwrap());
        for w in trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "quality fell: {trace:?}");
        }
        let q = rb_quality(&inst.graph, &c, 1.0).unwrap();
        assert!((q - trace.last().unwrap()).abs() < 1e-9);
        for members in c.members() {
            assert!(connected_within(&inst.graph, &members, c.labels()));
        }
    }
}

#[test]
fn leiden_on_singleton_aggregate_matches_fine_graph() {
    let inst = small_sbm(2);
    let same = aggregate(&inst.graph, &AggregationMap::identity(&inst.graph)).unwrap();
    let cfg = DetectConfig::default();
    assert_eq!(
        leiden(&same, &cfg).unwrap().labels(),
        leiden(&inst.graph, &cfg).unwrap().labels()
    );
}

#[test]
fn parallel_drivers_ignore_thread_count() {
    let heatmap = HeatmapConfig {
        base: SbmConfig {
            nodes: 200,
            sets: 10,
            ..Default::default()
        },
        affinities: vec![0.0, 0.2],
        mixings: vec![0.0, 0.3],
        replicates: 2,
        detect: DetectConfig::default(),
    };
    let n = 12;
    let labels: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
    let spatial = SpatialAttributes::new(
        labels.clone(),
        (0..n).map(|i| (i % 4) as f64 * 3.0 + 0.1 * i as f64).collect(),
        (0..n).map(|i| (i / 4) as f64 * 2.5).collect(),
        (0..n).map(|i| 50.0 + 10.0 * i as f64).collect(),
    )
    .unwrap();
    let edges = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b, 1.0 + ((a * b) % 5) as f64)));
    let g = lfmm_core::WeightedGraph::new(labels, vec![2.0; n], edges).unwrap();
    let c = CommunityAssignment::from_raw_labels(&(0..n).map(|i| i % 3).collect::<Vec<_>>());
    let gravity = GravityConfig {
        samples: 25,
        seed: 3,
        ..Default::default()
    };

    let results: Vec<_> = [1, 3]
        .iter()
        .map(|&threads| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| {
                (
                    run_heatmap_experiment(&heatmap).unwrap(),
                    null_diversity(&g, &c, &spatial, &gravity).unwrap(),
                )
            })
        })
        .collect();
    assert_eq!(results[0], results[1]);
}
