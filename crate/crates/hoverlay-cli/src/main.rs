//! Batch front-end for the hoverlay pipeline: synthesize session corpora,
//! run overlay capture attacks, cross-validate inference models, and
//! analyze capture streams. Every command records a replayable manifest
//! and never lets wall-clock time into an output.

use clap::{Parser, Subcommand};

mod cmd_attack;
mod cmd_biometrics;
mod cmd_detect;
mod cmd_eval;
mod cmd_synth;
mod error;
mod manifest;
mod specs;
mod table;
mod util;

use error::CliError;

#[derive(Parser)]
#[command(
    name = "hoverlay",
    version,
    about = "Hover-capture attack simulator and analysis toolkit"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a corpus of synthetic user sessions from a TOML config.
    Synth(cmd_synth::SynthParams),
    /// Run the overlay attack over sessions, emitting capture streams.
    Attack(cmd_attack::AttackParams),
    /// Join captures to ground truth and cross-validate models.
    Eval(cmd_eval::EvalParams),
    /// Flag suspected typing bursts in a capture stream.
    Detect(cmd_detect::DetectParams),
    /// Extract per-click timing features from a capture stream.
    Biometrics(cmd_biometrics::BiometricsParams),
    /// Re-run a recorded manifest, reproducing its outputs byte for byte.
    Replay {
        /// A manifest.json written by a previous command.
        manifest: String,
    },
}

fn run(cmd: Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::Synth(p) => cmd_synth::run(&p),
        Cmd::Attack(p) => cmd_attack::run(&p),
        Cmd::Eval(p) => cmd_eval::run(&p),
        Cmd::Detect(p) => cmd_detect::run(&p),
        Cmd::Biometrics(p) => cmd_biometrics::run(&p),
        Cmd::Replay { manifest } => manifest::replay(&manifest),
    }
}

fn main() {
    // clap itself exits with code 2 on malformed command lines, matching
    // CliError::Usage.
    let cli = Cli::parse();
    if let Err(e) = run(cli.cmd) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
