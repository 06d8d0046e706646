//! `hoverlay synth`: expand a TOML corpus description into one session
//! file per user.

use std::path::Path;

use clap::Args;
use serde::{Deserialize, Serialize};

use hoverlay::events::{serialize_session, InputMethod, ScreenSpec};
use hoverlay::synth::{default_profile, synth_session, TrajectoryProfile, UseCase};

use crate::error::{data, usage, CliError};
use crate::manifest::{self, CommandParams};
use crate::util::write_output;

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SynthParams {
    /// Corpus description, TOML.
    #[arg(long)]
    pub config: String,
    /// Directory that receives user_NNN.jsonl session files.
    #[arg(long)]
    pub out: String,
    /// Master seed; each user's session draws from a seed derived from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// The config mirrors the library types field for field, so a corpus
/// file reads like the profile it overrides.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Config {
    users: u32,
    method: String,
    use_case: String,
    text: Option<String>,
    clicks: Option<u32>,
    screen: Option<ScreenConfig>,
    profile: Option<ProfileConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScreenConfig {
    width_px: u32,
    height_px: u32,
    hover_range_mm: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileConfig {
    sample_mean_ms: Option<f64>,
    sample_jitter_ms: Option<f64>,
    path_noise_px: Option<f64>,
    offset_bias_px: Option<[f64; 2]>,
    direction_gain_px: Option<f64>,
    click_duration_median_ms: Option<f64>,
    interclick_median_ms: Option<f64>,
    interclick_sigma_log: Option<f64>,
}

impl ProfileConfig {
    /// Overrides only the fields the config names; note an explicit
    /// offset_bias_px applies to every user, losing the per-user draw.
    fn apply(&self, mut base: TrajectoryProfile) -> TrajectoryProfile {
        if let Some(v) = self.sample_mean_ms {
            base.sample_mean_ms = v;
        }
        if let Some(v) = self.sample_jitter_ms {
            base.sample_jitter_ms = v;
        }
        if let Some(v) = self.path_noise_px {
            base.path_noise_px = v;
        }
        if let Some(v) = self.offset_bias_px {
            base.offset_bias_px = v;
        }
        if let Some(v) = self.direction_gain_px {
            base.direction_gain_px = v;
        }
        if let Some(v) = self.click_duration_median_ms {
            base.click_duration_median_ms = v;
        }
        if let Some(v) = self.interclick_median_ms {
            base.interclick_median_ms = v;
        }
        if let Some(v) = self.interclick_sigma_log {
            base.interclick_sigma_log = v;
        }
        base
    }
}

fn interpret(config: &Config) -> Result<(InputMethod, UseCase, ScreenSpec), CliError> {
    if config.users == 0 {
        return Err(usage("users must be at least 1"));
    }
    let method = match config.method.as_str() {
        "stylus" => InputMethod::Stylus,
        "finger" => InputMethod::Finger,
        other => {
            return Err(usage(format!(
                "method must be stylus or finger, got {other:?}"
            )))
        }
    };
    let use_case = match config.use_case.as_str() {
        "typing" => {
            if config.clicks.is_some() {
                return Err(usage("clicks only applies to use_case = \"ball_game\""));
            }
            let text = config
                .text
                .clone()
                .ok_or_else(|| usage("use_case = \"typing\" needs a text field"))?;
            UseCase::Typing { text }
        }
        "ball_game" => {
            if config.text.is_some() {
                return Err(usage("text only applies to use_case = \"typing\""));
            }
            let n_clicks = config
                .clicks
                .ok_or_else(|| usage("use_case = \"ball_game\" needs a clicks field"))?;
            UseCase::BallGame { n_clicks }
        }
        other => {
            return Err(usage(format!(
                "use_case must be typing or ball_game, got {other:?}"
            )))
        }
    };
    let screen = match &config.screen {
        None => ScreenSpec {
            width_px: 720,
            height_px: 1280,
            hover_range_mm: 20.0,
        },
        Some(s) => ScreenSpec {
            width_px: s.width_px,
            height_px: s.height_px,
            hover_range_mm: s.hover_range_mm.unwrap_or(20.0),
        },
    };
    Ok((method, use_case, screen))
}

/// Spreads the master seed into decorrelated per-user streams. User 0
/// keeps the master seed itself, so single-user runs are transparent.
pub fn per_user_seed(base: u64, user_id: u32) -> u64 {
    base ^ (user_id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

pub fn run(params: &SynthParams) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&params.config)
        .map_err(|e| usage(format!("cannot read config {}: {e}", params.config)))?;
    let config: Config =
        toml::from_str(&text).map_err(|e| usage(format!("config {}: {e}", params.config)))?;
    let (method, use_case, screen) = interpret(&config)?;

    let out = Path::new(&params.out);
    std::fs::create_dir_all(out)
        .map_err(|e| data(format!("cannot create {}: {e}", out.display())))?;
    for user_id in 0..config.users {
        let mut profile = default_profile(method, user_id);
        if let Some(overrides) = &config.profile {
            profile = overrides.apply(profile);
        }
        let session = synth_session(
            screen,
            method,
            &use_case,
            &profile,
            user_id,
            per_user_seed(params.seed, user_id),
        )
        .map_err(|e| usage(format!("config cannot be synthesized: {e}")))?;
        let body = serialize_session(&session);
        write_output(
            &out.join(format!("user_{user_id:03}.jsonl")),
            body.as_bytes(),
        )?;
    }
    manifest::write_for(out, true, CommandParams::Synth(params.clone()))
}
