mod commands;
mod input;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::Failure;

/// Cycle-level simulator for an edge-centric GNN accelerator.
#[derive(Debug, Parser)]
#[command(name = "engn", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a layer stack on one graph and write JSONL/CSV reports.
    Run(RunArgs),
    /// Print the tile I/O cost model and map-strategy metrics as JSON rows.
    Analyze(AnalyzeArgs),
    /// Generate an RMAT edge list.
    GenGraph(GenGraphArgs),
    /// Check that an edge list loads and satisfies the graph invariants.
    Validate(ValidateArgs),
    /// Run the cross product of parameter lists, one report row per point and layer.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct GraphArgs {
    /// Edge-list file: `src dst [relation] [weight]` per line.
    #[arg(long, conflicts_with = "synthetic")]
    graph: Option<std::path::PathBuf>,
    /// Synthetic RMAT graph, e.g. `n=1000,e=8000,seed=1`.
    #[arg(long)]
    synthetic: Option<String>,
    /// Vertex count for `--graph`; defaults to max id + 1.
    #[arg(long)]
    num_vertices: Option<usize>,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// gcn, gs-pool, rgcn, gated-gcn or grn.
    #[arg(long, default_value = "gcn")]
    model: String,
    /// Layer dims as F:H, one per layer.
    #[arg(long, num_args = 1.., default_values_t = vec!["16:16".to_string()])]
    dims: Vec<String>,
    /// Aggregator override (sum, max, mean).
    #[arg(long)]
    aggregator: Option<String>,
    /// Relation count for R-GCN layers; defaults to the graph's.
    #[arg(long)]
    relations: Option<usize>,
    /// Weight files replacing each layer's primary matrix, one per layer.
    #[arg(long, num_args = 1..)]
    weights: Vec<std::path::PathBuf>,
}

#[derive(Debug, Args)]
struct SimArgs {
    /// Flat key=value file merged under the flags.
    #[arg(long)]
    config: Option<std::path::PathBuf>,
    /// Single config override, repeatable: `--set rows=64`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    #[arg(long)]
    davc_bytes: Option<usize>,
    #[arg(long)]
    rho: Option<f64>,
    /// Tile grid size; defaults to the smallest that fits the result banks.
    #[arg(long)]
    q: Option<usize>,
    /// fau, afu or auto.
    #[arg(long, default_value = "auto")]
    order: String,
    /// column, row or adaptive.
    #[arg(long, default_value = "adaptive")]
    tile_order: String,
    /// Defaults to ENGN_SEED, then 1.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    sim: SimArgs,
    /// Output prefix; writes PREFIX.jsonl, PREFIX.csv and PREFIX.cfg.
    #[arg(long, default_value = "engn_report")]
    out: String,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[arg(long)]
    q: Option<u64>,
    #[arg(long)]
    f: Option<u64>,
    #[arg(long)]
    h: Option<u64>,
    /// Map strategy: vs, vfs, hs or all.
    #[arg(long)]
    map: Option<String>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long, default_value_t = 128)]
    r: u64,
    #[arg(long, default_value_t = 16)]
    c: u64,
    /// Graph whose per-bank ring schedules are dumped with `--dump-banks`.
    #[arg(long)]
    graph: Option<std::path::PathBuf>,
    /// CSV path for the bank schedules of every source batch (q = 1).
    #[arg(long, requires = "graph")]
    dump_banks: Option<std::path::PathBuf>,
}

#[derive(Debug, Args)]
struct GenGraphArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    e: usize,
    /// Defaults to ENGN_SEED, then 1.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: std::path::PathBuf,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    path: std::path::PathBuf,
    #[arg(long)]
    num_vertices: Option<usize>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Flat key=value file merged under the flags.
    #[arg(long)]
    config: Option<std::path::PathBuf>,
    /// Fixed config override, repeatable: `--set rows=64`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Defaults to ENGN_SEED, then 1.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated values to sweep.
    #[arg(long, value_name = "LIST")]
    rows: Option<String>,
    #[arg(long, value_name = "LIST")]
    cols: Option<String>,
    #[arg(long, value_name = "LIST")]
    davc_bytes: Option<String>,
    #[arg(long, value_name = "LIST")]
    rho: Option<String>,
    #[arg(long, value_name = "LIST")]
    q: Option<String>,
    #[arg(long, value_name = "LIST")]
    order: Option<String>,
    #[arg(long, value_name = "LIST")]
    tile_order: Option<String>,
    /// Any other axis as `key=v1,v2,...`, repeatable.
    #[arg(long = "axis", value_name = "KEY=V1,V2")]
    axes: Vec<String>,
    /// Output prefix; writes PREFIX.jsonl and PREFIX.csv.
    #[arg(long, default_value = "engn_sweep")]
    out: String,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run(a) => commands::run(a),
        Command::Analyze(a) => commands::analyze(a),
        Command::GenGraph(a) => commands::gen_graph(a),
        Command::Validate(a) => commands::validate(a),
        Command::Sweep(a) => commands::sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Invariant(msg)) => {
            eprintln!("internal invariant failure: {msg}");
            ExitCode::from(3)
        }
    }
}
