//! Run manifests. Every command records its exact parameters next to its
//! outputs; `hoverlay replay manifest.json` re-runs the command and, as
//! long as the inputs are unchanged, reproduces the outputs byte for
//! byte. Nothing time- or host-dependent is ever written.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{data, CliError};
use crate::{cmd_attack, cmd_biometrics, cmd_detect, cmd_eval, cmd_synth};

pub const TOOL_NAME: &str = "hoverlay";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// The full parameter set of one command invocation, as given on the
/// command line. Paths stay verbatim: replaying from a different working
/// directory is the caller's responsibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", content = "params", rename_all = "snake_case")]
pub enum CommandParams {
    Synth(cmd_synth::SynthParams),
    Attack(cmd_attack::AttackParams),
    Eval(cmd_eval::EvalParams),
    Detect(cmd_detect::DetectParams),
    Biometrics(cmd_biometrics::BiometricsParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    #[serde(flatten)]
    pub cmd: CommandParams,
}

/// Writes the manifest for a completed command. Directory outputs get a
/// `manifest.json` inside; file outputs get a `<file>.manifest.json`
/// sibling.
pub fn write_for(target: &Path, target_is_dir: bool, cmd: CommandParams) -> Result<(), CliError> {
    let path = if target_is_dir {
        target.join("manifest.json")
    } else {
        let mut name = target.file_name().unwrap_or_default().to_os_string();
        name.push(".manifest.json");
        target.with_file_name(name)
    };
    let manifest = RunManifest {
        tool: TOOL_NAME.to_string(),
        version: TOOL_VERSION.to_string(),
        cmd,
    };
    let body = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    std::fs::write(&path, body).map_err(|e| data(format!("cannot write {}: {e}", path.display())))
}

/// Re-runs a recorded command. The tool version must match exactly:
/// a manifest from another version gives no reproducibility promise.
pub fn replay(path: &str) -> Result<(), CliError> {
    let bytes =
        std::fs::read(path).map_err(|e| data(format!("cannot read manifest {path}: {e}")))?;
    let manifest: RunManifest = serde_json::from_slice(&bytes)
        .map_err(|e| data(format!("manifest {path} is not valid: {e}")))?;
    if manifest.tool != TOOL_NAME {
        return Err(data(format!(
            "manifest {path} was written by {:?}, not {TOOL_NAME:?}",
            manifest.tool
        )));
    }
    if manifest.version != TOOL_VERSION {
        return Err(data(format!(
            "manifest {path} needs tool version {}, this is {TOOL_VERSION}; \
             a replay would not be reproducible",
            manifest.version
        )));
    }
    match manifest.cmd {
        CommandParams::Synth(p) => cmd_synth::run(&p),
        CommandParams::Attack(p) => cmd_attack::run(&p),
        CommandParams::Eval(p) => cmd_eval::run(&p),
        CommandParams::Detect(p) => cmd_detect::run(&p),
        CommandParams::Biometrics(p) => cmd_biometrics::run(&p),
    }
}
