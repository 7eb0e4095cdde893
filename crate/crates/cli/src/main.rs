//! `lfmm`: aggregation, community detection, mixed membership and diversity
//! from the command line.
//!
//! Exit codes: 0 on success, 1 when `check` finds a conservation violation,
//! 2 on any input or configuration error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod config;
mod manifest;

#[derive(Parser, Debug)]
#[command(name = "lfmm", version, about = "Link fraction mixed membership toolkit")]
struct Cli {
    /// Seed for every random choice in the run.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; outputs do not depend on this.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

/// An edge file with an optional diagonal-mass file.
#[derive(Args, Debug, Clone)]
pub struct GraphInput {
    /// Tab-separated `src dst weight` edge list.
    #[arg(long)]
    pub edges: PathBuf,
    /// Tab-separated `node diagonal_mass` table.
    #[arg(long)]
    pub diagonal: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Collapse a graph by a node-to-set table.
    Aggregate {
        #[command(flatten)]
        graph: GraphInput,
        /// Tab-separated `node set_id` table.
        #[arg(long)]
        partition: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Find communities with the Leiden algorithm.
    Detect {
        #[command(flatten)]
        graph: GraphInput,
        #[arg(long, default_value_t = 1.0)]
        resolution: f64,
        #[arg(long, default_value_t = 32)]
        max_passes: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute membership shares for every node.
    Membership {
        #[command(flatten)]
        graph: GraphInput,
        /// Tab-separated `node community` table.
        #[arg(long)]
        partition: PathBuf,
        #[arg(long, value_enum, default_value_t = Kind::NodeNormalized)]
        kind: Kind,
        /// Random-walk steps for `--kind diffusion`.
        #[arg(long, default_value_t = 1)]
        t: usize,
        /// Tab-separated `set_id size` table, needed by `aggregate-normalized`.
        #[arg(long)]
        sizes: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Gini–Simpson diversity, with gravity-null z-scores given a spatial file.
    Diversity(DiversityArgs),
    /// Run a synthetic benchmark from a `key = value` config file.
    Bench {
        #[arg(value_enum)]
        experiment: Experiment,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Verify that fine memberships add up to aggregate ones.
    Check {
        #[command(flatten)]
        graph: GraphInput,
        /// Tab-separated `node set_id` table.
        #[arg(long)]
        aggregation: PathBuf,
        /// Tab-separated `node community` table keyed by set id.
        #[arg(long)]
        partition: PathBuf,
        /// Aggregated edge list to check instead of recomputing it.
        #[arg(long, requires = "aggregate_diagonal")]
        aggregate_edges: Option<PathBuf>,
        #[arg(long, requires = "aggregate_edges")]
        aggregate_diagonal: Option<PathBuf>,
        /// Largest allowed discrepancy relative to the largest strength.
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
pub struct DiversityArgs {
    /// Membership CSV; diversity only, no z-scores.
    #[arg(long, conflicts_with_all = ["edges", "partition"])]
    pub membership: Option<PathBuf>,
    #[arg(long, requires = "partition")]
    pub edges: Option<PathBuf>,
    #[arg(long, requires = "edges")]
    pub diagonal: Option<PathBuf>,
    #[arg(long, requires = "edges")]
    pub partition: Option<PathBuf>,
    /// Tab-separated `set_id x y population` table.
    #[arg(long)]
    pub spatial: Option<PathBuf>,
    /// Distance exponent, or `fit` to estimate it.
    #[arg(long, default_value = "fit")]
    pub exponent: String,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 0.5)]
    pub self_distance_factor: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub sigma_floor: f64,
    /// Re-detect communities on every null sample.
    #[arg(long)]
    pub redetect: bool,
    #[arg(long, default_value_t = 1.0)]
    pub resolution: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Raw,
    NodeNormalized,
    AggregateNormalized,
    Diffusion,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Consistency,
    Heatmap,
}

/// Outcome of a command that ran to completion.
pub enum Status {
    Ok,
    CheckFailed,
}

fn run(cli: Cli) -> anyhow::Result<Status> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()?;
    }
    let seed = cli.seed;
    match cli.command {
        Command::Aggregate { graph, partition, out } => commands::aggregate(&graph, &partition, &out, seed),
        Command::Detect {
            graph,
            resolution,
            max_passes,
            out,
        } => commands::detect(&graph, resolution, max_passes, &out, seed),
        Command::Membership {
            graph,
            partition,
            kind,
            t,
            sizes,
            out,
        } => commands::membership(&graph, &partition, kind, t, sizes.as_deref(), &out, seed),
        Command::Diversity(args) => commands::diversity(&args, seed),
        Command::Bench {
            experiment,
            config,
            out,
        } => commands::bench(experiment, config.as_deref(), &out, seed),
        Command::Check {
            graph,
            aggregation,
            partition,
            aggregate_edges,
            aggregate_diagonal,
            tolerance,
            out,
        } => commands::check(
            &graph,
            &aggregation,
            &partition,
            aggregate_edges.as_deref().zip(aggregate_diagonal.as_deref()),
            tolerance,
            &out,
            seed,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::CheckFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
