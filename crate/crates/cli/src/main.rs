//! `mwl`: build sphere graphs, inspect spectra, simulate tensor walks and
//! compare them with expander Chernoff bounds.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mwl_core::experiment::{
    bounds_for_graph, build_graph_from_config, fit_envelope_files, observables_for, run_experiment, tail_for_graph,
    ExperimentConfig,
};
use mwl_core::graph::{assemble_matrices, read_graph, write_graph, GraphMatrices, WeightedGraph};
use mwl_core::io::{write_json, write_text};
use mwl_core::spectral::{SpectralSummary, SpectrumReport};
use mwl_core::walk::Execution;
use mwl_core::{Error, Result};

#[derive(Parser)]
#[command(name = "mwl", version, about = "Random walks on weighted sphere graphs and tensor Chernoff bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the manifold, estimate measures and write the weighted graph.
    BuildGraph {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Laplacian and transition spectra of a graph file.
    Spectrum {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Empirical tail of the walk statistic as CSV.
    Walk {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Run trials on one thread (results are identical).
        #[arg(long)]
        sequential: bool,
    },
    /// Bound table for every threshold and gap source as CSV.
    Bound {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Full pipeline: report.json, tail.csv, bound.csv and optionally tail.svg.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        svg: bool,
        #[arg(long)]
        sequential: bool,
    },
    /// Empirical envelope constant from refinements of one manifold.
    FitEnvelope {
        #[arg(long, num_args = 1.., required = true)]
        graphs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("MWL_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| Error::precondition(format!("MWL_THREADS must be a nonnegative integer, got {raw:?}")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::precondition(format!("cannot configure thread pool: {e}")))?;
    }
    Ok(())
}

fn load(graph: &Path) -> Result<(WeightedGraph<f64>, GraphMatrices<f64>)> {
    let g = read_graph(graph)?;
    let m = assemble_matrices(&g)?;
    Ok((g, m))
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::BuildGraph { config, out } => {
            let cfg = ExperimentConfig::read(&config)?;
            let g = build_graph_from_config(&cfg)?;
            write_graph(&out, &g)
        }
        Command::Spectrum { graph, out } => {
            let (_, m) = load(&graph)?;
            let report = SpectrumReport::from_matrices(&m).map_err(|e| e.in_stage("spectrum"))?;
            write_json(&out, &report)
        }
        Command::Walk {
            graph,
            config,
            out,
            sequential,
        } => {
            let cfg = ExperimentConfig::read(&config)?;
            let (_, m) = load(&graph)?;
            let obs = observables_for(&cfg, &m).map_err(|e| e.in_stage("observables"))?;
            let tail = tail_for_graph(&cfg, &m, &obs, execution(sequential)).map_err(|e| e.in_stage("walk"))?;
            write_text(&out, &tail.to_csv())
        }
        Command::Bound { graph, config, out } => {
            let cfg = ExperimentConfig::read(&config)?;
            let (g, m) = load(&graph)?;
            let table = SpectralSummary::compute(&m, cfg.bound.gap_convention)
                .and_then(|s| bounds_for_graph(&cfg, &g, &m, &s))
                .map_err(|e| e.in_stage("bound"))?;
            write_text(&out, &table.to_csv())
        }
        Command::Experiment {
            config,
            out_dir,
            svg,
            sequential,
        } => {
            let cfg = ExperimentConfig::read(&config)?;
            let out = run_experiment(&cfg, execution(sequential))?;
            std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
            write_json(out_dir.join("report.json"), &out.report)?;
            write_text(out_dir.join("tail.csv"), &out.tail_csv)?;
            write_text(out_dir.join("bound.csv"), &out.bound_csv)?;
            if svg {
                write_text(out_dir.join("tail.svg"), &out.svg)?;
            }
            Ok(())
        }
        Command::FitEnvelope { graphs, out } => {
            let fit = fit_envelope_files(&graphs)?;
            for w in &fit.warnings {
                eprintln!("mwl: warning: {w}");
            }
            write_json(&out, &fit)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mwl: error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
