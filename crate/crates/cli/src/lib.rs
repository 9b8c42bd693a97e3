//! Command-line front end: simulations, signal processing, session
//! analysis and spider clustering.

pub mod commands;
pub mod config;
pub mod io;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

/// Problems with flags or configuration (exit code 2).
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug, Parser)]
#[command(
    name = "edpcgrl",
    version,
    about = "Adaptive spider generation: simulation, signal processing and analysis"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a simulated experiment over a virtual population.
    Simulate {
        #[arg(value_enum)]
        kind: SimulationKind,
        /// TOML run configuration (the `seed` key is required).
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write each subject's final RL Q-table (session runs only).
        #[arg(long)]
        export_qtables: bool,
    },
    /// Turn a raw `t_s,value` recording into windowed features.
    Process {
        #[arg(value_enum)]
        signal: SignalKind,
        /// Input CSV with header `t_s,value`.
        #[arg(long = "in")]
        input: PathBuf,
        /// Output feature CSV; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// EDA: relaxed interval `start:end` in seconds whose minimum tonic level anchors normalization.
        #[arg(long)]
        relax_window: Option<String>,
        /// EDA: tonic/phasic decomposition.
        #[arg(long, value_enum, default_value_t = Method::Median)]
        method: Method,
        /// EDA: running-median window in seconds.
        #[arg(long, default_value_t = edpcgrl_core::signals::DEFAULT_MEDIAN_WINDOW_S)]
        median_window_s: f64,
        /// EDA: minimum response amplitude in microsiemens.
        #[arg(long, default_value_t = edpcgrl_core::signals::SCR_MIN_AMPLITUDE)]
        min_amplitude: f64,
        /// EDA: tonic level mapped to 10 by normalization, in microsiemens.
        #[arg(long, default_value_t = edpcgrl_core::signals::SCL_ASSUMED_MAX)]
        assumed_max: f64,
        /// EDA: feature window length in seconds (trailing remainder dropped).
        #[arg(long, default_value_t = 60.0)]
        segment_s: f64,
        /// EDA: also write the per-second decomposition here.
        #[arg(long)]
        series_out: Option<PathBuf>,
    },
    /// Statistical report over a directory of session traces.
    Analyze {
        #[arg(value_enum)]
        target: AnalyzeTarget,
        /// Directory holding trace CSVs.
        #[arg(long)]
        traces: PathBuf,
        /// Output directory for `session_report.csv` and `session_tests.csv`.
        #[arg(long)]
        out: PathBuf,
        /// Run configuration supplying protocol timing and targets.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Cluster spiders (e.g. those at maximum anxiety) with k-means.
    Cluster {
        #[arg(value_enum)]
        target: ClusterTarget,
        /// CSV with attribute columns `loc,aom,close,large,hair,color`.
        #[arg(long = "in")]
        input: PathBuf,
        /// Number of clusters, or `auto` for the elbow rule.
        #[arg(long, default_value = "auto")]
        k: String,
        /// Largest k scanned by `--k auto`.
        #[arg(long, default_value_t = 8)]
        k_max: usize,
        /// Seeded restarts per k; the lowest within-cluster sum of squares wins.
        #[arg(long, default_value_t = 10)]
        restarts: usize,
        /// Seed for center initialization (`EDPCGRL_SEED` overrides).
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory for centers, assignments and the elbow curve.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SimulationKind {
    Search,
    Session,
    Reversed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SignalKind {
    Eda,
    Ppg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Median,
    Highpass,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AnalyzeTarget {
    Session,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ClusterTarget {
    Spiders,
}

/// Exit code for an error: 2 for usage/config problems, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    let usage = err.chain().any(|e| {
        e.downcast_ref::<UsageError>().is_some()
            || matches!(
                e.downcast_ref::<edpcgrl_core::Error>(),
                Some(edpcgrl_core::Error::Config(_))
            )
    });
    if usage {
        2
    } else {
        1
    }
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Simulate {
            kind,
            config,
            out,
            export_qtables,
        } => commands::simulate(kind, &config, out.as_deref(), export_qtables),
        Command::Process {
            signal,
            input,
            out,
            relax_window,
            method,
            median_window_s,
            min_amplitude,
            assumed_max,
            segment_s,
            series_out,
        } => match signal {
            SignalKind::Eda => commands::process_eda(&commands::EdaArgs {
                input,
                out,
                relax_window,
                method,
                median_window_s,
                min_amplitude,
                assumed_max,
                segment_s,
                series_out,
            }),
            SignalKind::Ppg => commands::process_ppg(&input, out.as_deref()),
        },
        Command::Analyze {
            target: AnalyzeTarget::Session,
            traces,
            out,
            config,
        } => commands::analyze_session(&traces, &out, config.as_deref()),
        Command::Cluster {
            target: ClusterTarget::Spiders,
            input,
            k,
            k_max,
            restarts,
            seed,
            out,
        } => commands::cluster_spiders(&input, &k, k_max, restarts, seed, &out),
    }
}
