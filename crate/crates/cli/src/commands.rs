//! Subcommand implementations. Each one reads its inputs, writes its outputs
//! and a manifest into the output directory, and returns a [`Status`].

use std::path::Path;

use anyhow::{bail, Context, Result};
use lfmm_core::aggregation::{load_aggregation, load_set_sizes, save_set_sizes};
use lfmm_core::detect::{leiden_with_trace, load_partition, save_partition};
use lfmm_core::diversity::{
    diversity_to_csv, gsi, gsi_to_csv, load_spatial_file, null_diversity, observed_gsi, GravityConfig,
};
use lfmm_core::graph::{load_graph_files, save_graph};
use lfmm_core::lfmm::{
    conservation_check_against, diffusion_membership, membership_to_csv, normalize_aggregate, normalize_node,
    parse_membership_csv, raw_membership,
};
use lfmm_core::synth::{
    grid_to_csv, run_consistency_experiment, run_heatmap_experiment, scatter_to_csv, HeatmapConfig, SbmConfig,
};
use lfmm_core::table::{fmt_num, read_to_string};
use lfmm_core::{aggregate as aggregate_graph, rb_quality, DetectConfig, WeightedGraph};

use crate::config::KeyValues;
use crate::manifest::{write_output, RunManifest};
use crate::{DiversityArgs, Experiment, GraphInput, Kind, Status};

fn load(graph: &GraphInput, manifest: &mut RunManifest) -> Result<WeightedGraph> {
    manifest.input("edges", &graph.edges)?;
    if let Some(d) = &graph.diagonal {
        manifest.input("diagonal", d)?;
    }
    Ok(load_graph_files(&graph.edges, graph.diagonal.as_deref())?)
}

fn read(path: &Path, role: &str, manifest: &mut RunManifest) -> Result<String> {
    manifest.input(role, path)?;
    Ok(read_to_string(path)?)
}

pub fn aggregate(graph: &GraphInput, partition: &Path, out: &Path, seed: u64) -> Result<Status> {
    let mut manifest = RunManifest::new("aggregate", seed);
    let g = load(graph, &mut manifest)?;
    let a = load_aggregation(&read(partition, "partition", &mut manifest)?, &g)
        .with_context(|| format!("reading {}", partition.display()))?;
    let agg = aggregate_graph(&g, &a)?;
    let (edges, diagonal) = save_graph(&agg);
    write_output(out, "edges.tsv", &edges)?;
    write_output(out, "diagonal.tsv", &diagonal)?;
    write_output(out, "sizes.tsv", &save_set_sizes(&a))?;
    manifest.write(out)?;
    println!("sets={} edges={}", agg.node_count(), agg.edge_count());
    Ok(Status::Ok)
}

pub fn detect(graph: &GraphInput, resolution: f64, max_passes: usize, out: &Path, seed: u64) -> Result<Status> {
    let mut manifest = RunManifest::new("detect", seed);
    manifest
        .config("resolution", fmt_num(resolution))
        .config("max_passes", max_passes);
    let g = load(graph, &mut manifest)?;
    let cfg = DetectConfig {
        resolution,
        seed,
        max_passes,
    };
    let (c, _) = leiden_with_trace(&g, &cfg)?;
    let q = rb_quality(&g, &c, resolution).ok();
    let summary = format!(
        "communities={}\nquality={}\n",
        c.community_count(),
        q.map_or_else(|| "NA".to_string(), fmt_num)
    );
    write_output(out, "partition.tsv", &save_partition(&c, &g))?;
    write_output(out, "summary.txt", &summary)?;
    manifest.write(out)?;
    print!("{summary}");
    Ok(Status::Ok)
}

pub fn membership(
    graph: &GraphInput,
    partition: &Path,
    kind: Kind,
    t: usize,
    sizes: Option<&Path>,
    out: &Path,
    seed: u64,
) -> Result<Status> {
    let mut manifest = RunManifest::new("membership", seed);
    let g = load(graph, &mut manifest)?;
    let c = load_partition(&read(partition, "partition", &mut manifest)?, &g)
        .with_context(|| format!("reading {}", partition.display()))?;
    let m = match kind {
        Kind::Raw => raw_membership(&g, &c)?,
        Kind::NodeNormalized => normalize_node(&raw_membership(&g, &c)?)?,
        Kind::AggregateNormalized => {
            let Some(path) = sizes else {
                bail!("--kind aggregate-normalized needs --sizes");
            };
            let sizes = load_set_sizes(&read(path, "sizes", &mut manifest)?, &g)?;
            normalize_aggregate(&raw_membership(&g, &c)?, &sizes)?
        }
        Kind::Diffusion => diffusion_membership(&g, &c, t)?,
    };
    manifest.config("kind", m.kind());
    write_output(out, "membership.csv", &membership_to_csv(&m, g.labels(), c.names())?)?;
    manifest.write(out)?;
    if !m.zero_rows().is_empty() {
        eprintln!("warning: {} node(s) have no membership mass", m.zero_rows().len());
    }
    Ok(Status::Ok)
}

pub fn diversity(args: &DiversityArgs, seed: u64) -> Result<Status> {
    let mut manifest = RunManifest::new("diversity", seed);
    let csv = if let Some(path) = &args.membership {
        if args.spatial.is_some() {
            bail!("z-scores need the graph and partition; pass --edges and --partition instead of --membership");
        }
        let table = parse_membership_csv(&read(path, "membership", &mut manifest)?)?;
        let values: Vec<Option<f64>> = (0..table.values.rows()).map(|i| gsi(table.values.row(i))).collect();
        gsi_to_csv(&table.row_labels, &values)
    } else {
        let (Some(edges), Some(partition)) = (&args.edges, &args.partition) else {
            bail!("pass either --membership or both --edges and --partition");
        };
        let graph = GraphInput {
            edges: edges.clone(),
            diagonal: args.diagonal.clone(),
        };
        let g = load(&graph, &mut manifest)?;
        let c = load_partition(&read(partition, "partition", &mut manifest)?, &g)
            .with_context(|| format!("reading {}", partition.display()))?;
        match &args.spatial {
            None => gsi_to_csv(g.labels(), &observed_gsi(&g, &c)?),
            Some(spatial) => {
                manifest.input("spatial", spatial)?;
                let s = load_spatial_file(spatial)?;
                let exponent = match args.exponent.as_str() {
                    "fit" => None,
                    v => Some(v.parse::<f64>().with_context(|| format!("bad --exponent `{v}`"))?),
                };
                let cfg = GravityConfig {
                    exponent,
                    samples: args.samples,
                    seed,
                    self_distance_factor: args.self_distance_factor,
                    sigma_floor: args.sigma_floor,
                    redetect: args.redetect.then_some(DetectConfig {
                        resolution: args.resolution,
                        seed,
                        ..Default::default()
                    }),
                };
                manifest
                    .config("exponent", &args.exponent)
                    .config("samples", args.samples)
                    .config("self_distance_factor", fmt_num(args.self_distance_factor))
                    .config("sigma_floor", fmt_num(args.sigma_floor))
                    .config("redetect", args.redetect)
                    .config("resolution", fmt_num(args.resolution));
                let result = null_diversity(&g, &c, &s, &cfg)?;
                println!(
                    "kappa={} beta={}",
                    fmt_num(result.model.kappa),
                    fmt_num(result.model.beta)
                );
                diversity_to_csv(g.labels(), &result)
            }
        }
    };
    write_output(&args.out, "diversity.csv", &csv)?;
    manifest.write(&args.out)?;
    Ok(Status::Ok)
}

fn sbm_from(kv: &mut KeyValues, seed: u64) -> Result<SbmConfig> {
    let d = SbmConfig::default();
    Ok(SbmConfig {
        nodes: kv.take("nodes", d.nodes)?,
        communities: kv.take("communities", d.communities)?,
        affinity: kv.take("affinity", d.affinity)?,
        mean_degree: kv.take("mean_degree", d.mean_degree)?,
        sets: kv.take("sets", d.sets)?,
        mixing: kv.take("mixing", d.mixing)?,
        seed,
    })
}

fn detect_from(kv: &mut KeyValues, seed: u64) -> Result<DetectConfig> {
    let d = DetectConfig::default();
    Ok(DetectConfig {
        resolution: kv.take("resolution", d.resolution)?,
        seed,
        max_passes: kv.take("max_passes", d.max_passes)?,
    })
}

fn record_sbm(manifest: &mut RunManifest, sbm: &SbmConfig, detect: &DetectConfig) {
    manifest
        .config("nodes", sbm.nodes)
        .config("communities", sbm.communities)
        .config("affinity", fmt_num(sbm.affinity))
        .config("mean_degree", fmt_num(sbm.mean_degree))
        .config("sets", sbm.sets)
        .config("mixing", fmt_num(sbm.mixing))
        .config("resolution", fmt_num(detect.resolution))
        .config("max_passes", detect.max_passes);
}

fn join(values: &[f64]) -> String {
    values.iter().map(|&v| fmt_num(v)).collect::<Vec<_>>().join(",")
}

pub fn bench(experiment: Experiment, config: Option<&Path>, out: &Path, seed: u64) -> Result<Status> {
    let name = match experiment {
        Experiment::Consistency => "bench consistency",
        Experiment::Heatmap => "bench heatmap",
    };
    let mut manifest = RunManifest::new(name, seed);
    let mut kv = match config {
        Some(path) => KeyValues::parse(&read(path, "config", &mut manifest)?)
            .with_context(|| format!("reading {}", path.display()))?,
        None => KeyValues::default(),
    };
    let sbm = sbm_from(&mut kv, seed)?;
    let detect = detect_from(&mut kv, seed)?;
    record_sbm(&mut manifest, &sbm, &detect);
    match experiment {
        Experiment::Consistency => {
            kv.finish()?;
            let result = run_consistency_experiment(&sbm, &detect)?;
            let summary = format!(
                "raw_correlation={}\nnormalized_correlation={}\nindividual_correlation={}\n\
                 raw_max_discrepancy={}\nminority_bias={}\naggregate_communities={}\n\
                 individual_communities={}\np_in={}\np_out={}\n",
                fmt_num(result.raw_correlation),
                fmt_num(result.normalized_correlation),
                fmt_num(result.individual_correlation),
                fmt_num(result.raw_max_discrepancy),
                fmt_num(result.minority_bias),
                result.aggregate_communities.community_count(),
                result.individual_communities.community_count(),
                fmt_num(result.p_in),
                fmt_num(result.p_out),
            );
            write_output(out, "scatter.csv", &scatter_to_csv(&result))?;
            write_output(out, "summary.txt", &summary)?;
            print!("{summary}");
        }
        Experiment::Heatmap => {
            let grid = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5];
            let cfg = HeatmapConfig {
                base: sbm,
                affinities: kv.take_list("affinities", &grid)?,
                mixings: kv.take_list("mixings", &grid)?,
                replicates: kv.take("replicates", 5)?,
                detect,
            };
            kv.finish()?;
            manifest
                .config("affinities", join(&cfg.affinities))
                .config("mixings", join(&cfg.mixings))
                .config("replicates", cfg.replicates);
            write_output(out, "heatmap.csv", &grid_to_csv(&run_heatmap_experiment(&cfg)?))?;
        }
    }
    manifest.write(out)?;
    Ok(Status::Ok)
}

pub fn check(
    graph: &GraphInput,
    aggregation: &Path,
    partition: &Path,
    aggregated: Option<(&Path, &Path)>,
    tolerance: f64,
    out: &Path,
    seed: u64,
) -> Result<Status> {
    if tolerance.is_nan() || tolerance < 0.0 {
        bail!("--tolerance must be nonnegative");
    }
    let mut manifest = RunManifest::new("check", seed);
    manifest.config("tolerance", fmt_num(tolerance));
    let g = load(graph, &mut manifest)?;
    let a = load_aggregation(&read(aggregation, "aggregation", &mut manifest)?, &g)
        .with_context(|| format!("reading {}", aggregation.display()))?;
    let agg = match aggregated {
        None => aggregate_graph(&g, &a)?,
        Some((edges, diagonal)) => {
            let supplied = load(
                &GraphInput {
                    edges: edges.to_path_buf(),
                    diagonal: Some(diagonal.to_path_buf()),
                },
                &mut manifest,
            )?;
            // Align the supplied graph's node order with the set order.
            let index = supplied.label_index();
            let order = a
                .set_labels()
                .iter()
                .map(|l| {
                    index
                        .get(l.as_str())
                        .copied()
                        .with_context(|| format!("set `{l}` is missing from the aggregated graph"))
                })
                .collect::<Result<Vec<_>>>()?;
            if order.len() != supplied.node_count() {
                bail!(
                    "aggregated graph has {} nodes but the aggregation defines {} sets",
                    supplied.node_count(),
                    order.len()
                );
            }
            supplied.permuted(&order)?
        }
    };
    let c = load_partition(&read(partition, "partition", &mut manifest)?, &agg)
        .with_context(|| format!("reading {}", partition.display()))?;
    let report = conservation_check_against(&g, &agg, &a, &c)?;

    let mut entries = report.entries.clone();
    entries
        .sort_by(|x, y| (agg.label(x.set), &c.names()[x.community]).cmp(&(agg.label(y.set), &c.names()[y.community])));
    let mut csv = String::from("set_id,community,aggregate,summed,discrepancy\n");
    for e in &entries {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            agg.label(e.set),
            c.names()[e.community],
            fmt_num(e.aggregate),
            fmt_num(e.summed),
            fmt_num(e.discrepancy())
        ));
    }
    write_output(out, "conservation.csv", &csv)?;
    manifest.write(out)?;

    let scale = report.max_strength.max(1.0);
    println!(
        "max_discrepancy={} relative={}",
        fmt_num(report.max_discrepancy),
        fmt_num(report.max_discrepancy / scale)
    );
    if report.passes(tolerance) {
        println!("conservation holds");
        Ok(Status::Ok)
    } else {
        let worst = report.worst().expect("a failing report has entries");
        println!(
            "conservation violated at set `{}`, community `{}`: aggregate {} vs summed {}",
            agg.label(worst.set),
            c.names()[worst.community],
            fmt_num(worst.aggregate),
            fmt_num(worst.summed)
        );
        Ok(Status::CheckFailed)
    }
}
