//! `hoverlay attack`: run the overlay capture service against recorded
//! sessions, writing one 40-byte-record stream per session plus a
//! stealth audit.

use std::collections::HashSet;
use std::path::Path;

use clap::Args;
use serde::{Deserialize, Serialize};

use hoverlay::attacker::{run_attack, write_captures, AttackerConfig, StealthAudit};

use crate::error::{data, usage, CliError};
use crate::manifest::{self, CommandParams};
use crate::specs::{parse_anchor, parse_policy};
use crate::util::{expand_inputs, load_session, write_output};

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct AttackParams {
    /// Session files, or directories of .jsonl session files.
    #[arg(required = true)]
    pub sessions: Vec<String>,
    /// Output directory: <session>.cap per input plus audit.json.
    #[arg(long)]
    pub out: String,
    /// Dispatch policy toggles, comma separated: foreground-only-hover,
    /// filter-touches-when-obscured, forbid-watch-outside, min-view-px=N.
    #[arg(long, default_value = "")]
    pub policy: String,
    /// Observation window anchor: down or up.
    #[arg(long, default_value = "up")]
    pub anchor: String,
    /// Hover samples kept per click (1..=4).
    #[arg(long, default_value_t = 4)]
    pub k_hovers: usize,
    /// How long the overlay stays up past the anchor event, ms.
    #[arg(long, default_value_t = 70)]
    pub activation_ms: u32,
    /// Service reaction latency between notification and overlay, µs.
    #[arg(long, default_value_t = 1000)]
    pub latency_us: u64,
}

#[derive(Debug, Serialize)]
struct SessionAudit {
    session: String,
    user_id: u32,
    clicks: usize,
    captures: usize,
    #[serde(flatten)]
    audit: StealthAudit,
}

#[derive(Debug, Serialize)]
struct AuditReport {
    sessions: Vec<SessionAudit>,
    total: StealthAudit,
}

pub fn run(params: &AttackParams) -> Result<(), CliError> {
    let config = AttackerConfig {
        activation_ms: params.activation_ms,
        max_hovers: params.k_hovers,
        reaction_latency_us: params.latency_us,
        window_anchor: parse_anchor(&params.anchor)?,
    };
    config.validate().map_err(|e| usage(e.to_string()))?;
    let policy = parse_policy(&params.policy)?;
    let inputs = expand_inputs(&params.sessions, "jsonl")?;

    let out = Path::new(&params.out);
    std::fs::create_dir_all(out)
        .map_err(|e| data(format!("cannot create {}: {e}", out.display())))?;

    let mut seen_stems = HashSet::new();
    let mut session_audits = Vec::new();
    let mut total = StealthAudit::default();
    for path in &inputs {
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("session")
            .to_string();
        if !seen_stems.insert(stem.clone()) {
            return Err(usage(format!(
                "two inputs share the name {stem:?}; their captures would collide"
            )));
        }
        let session = load_session(path)?;
        let outcome = run_attack(&session, &config, &policy).map_err(|e| usage(e.to_string()))?;
        let bytes = write_captures(&outcome.captures).map_err(|e| {
            data(format!(
                "{}: captures cannot be encoded: {e}",
                path.display()
            ))
        })?;
        write_output(&out.join(format!("{stem}.cap")), &bytes)?;
        total.obstructed_clicks += outcome.audit.obstructed_clicks;
        total.touches_to_overlay += outcome.audit.touches_to_overlay;
        total.illegal_commands += outcome.audit.illegal_commands;
        session_audits.push(SessionAudit {
            session: stem,
            user_id: session.user_id,
            clicks: session.truth_clicks.len(),
            captures: outcome.captures.len(),
            audit: outcome.audit,
        });
    }

    let report = AuditReport {
        sessions: session_audits,
        total,
    };
    let body = serde_json::to_string_pretty(&report).expect("audit serializes") + "\n";
    write_output(&out.join("audit.json"), body.as_bytes())?;
    manifest::write_for(out, true, CommandParams::Attack(params.clone()))
}
