//! Argument surface and process exit mapping. Usage problems (including
//! everything clap rejects) exit 2, internal numerical failures exit 1,
//! and the error's stable variant name is the first token on stderr.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands;

#[derive(Parser)]
#[command(
    name = "pathmon",
    version,
    about = "Path sampling, spectral analysis, and linear prediction for additive network metrics"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenspectra under identity and supplied covariance, plus first and second eigenvector energies
    Spectrum {
        /// Topology CSV path, or `abilene` for the bundled network
        #[arg(long)]
        topology: String,
        /// identity | estimate:<series csv> | file:<covariance csv>
        #[arg(long, default_value = "identity")]
        cov: String,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Pick the k paths whose measurements best determine the rest
    Select {
        #[arg(long)]
        topology: String,
        /// identity | estimate:<series csv> | file:<covariance csv>
        #[arg(long, default_value = "identity")]
        cov: String,
        /// Sample size, or `auto` for the 95% effective rank
        #[arg(long, default_value = "auto")]
        k: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict a linear summary of every epoch from k sampled paths
    Predict {
        #[arg(long)]
        topology: String,
        /// identity | estimate:<series csv> | file:<covariance csv>
        #[arg(long, default_value = "identity")]
        cov: String,
        /// Per-link measurement series CSV
        #[arg(long)]
        series: PathBuf,
        /// Sample size, or `auto` for the 95% effective rank
        #[arg(long, default_value = "auto")]
        k: String,
        /// mean | diff:<node1>,<node2>
        #[arg(long, default_value = "mean")]
        functional: String,
        /// Remove the constant prediction bias using the first epoch
        #[arg(long)]
        calibrate: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Flag spikes in a predictions file, optionally with a ROC sweep against the actual column
    Detect {
        /// predictions.csv from the predict command
        #[arg(long)]
        input: PathBuf,
        /// Rolling baseline length in epochs
        #[arg(long, default_value_t = pathmon::analytics::DEFAULT_SPIKE_WINDOW)]
        window: usize,
        /// Detection threshold in baseline standard deviations
        #[arg(long, default_value_t = 3.0)]
        sigmas: f64,
        /// Also sweep thresholds and write roc.csv
        #[arg(long)]
        roc: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Delete every link set of the given size and report spectra of the survivors
    Robustness {
        #[arg(long)]
        topology: String,
        /// identity | estimate:<series csv> | file:<covariance csv>
        #[arg(long, default_value = "identity")]
        cov: String,
        /// Links removed per variant (1 or 2)
        #[arg(long, default_value_t = 1)]
        depth: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a seeded synthetic per-link delay series
    Synth {
        #[arg(long)]
        topology: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 432)]
        epochs: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the whole seeded pipeline on the bundled network into one directory
    Reproduce {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

pub fn run() -> i32 {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Spectrum { topology, cov, out } => commands::cmd_spectrum(&topology, &cov, &out),
        Command::Select {
            topology,
            cov,
            k,
            out,
        } => commands::cmd_select(&topology, &cov, &k, &out),
        Command::Predict {
            topology,
            cov,
            series,
            k,
            functional,
            calibrate,
            out,
        } => commands::cmd_predict(&topology, &cov, &series, &k, &functional, calibrate, &out),
        Command::Detect {
            input,
            window,
            sigmas,
            roc,
            out,
        } => commands::cmd_detect(&input, window, sigmas, roc, &out),
        Command::Robustness {
            topology,
            cov,
            depth,
            out,
        } => commands::cmd_robustness(&topology, &cov, depth, &out),
        Command::Synth {
            topology,
            seed,
            epochs,
            out,
        } => commands::cmd_synth(&topology, seed, epochs, &out),
        Command::Reproduce { seed, out } => commands::cmd_reproduce(seed, &out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            if e.is_invalid_input() {
                2
            } else {
                1
            }
        }
    }
}
