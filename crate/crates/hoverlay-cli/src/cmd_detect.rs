//! `hoverlay detect`: flag suspected typing bursts in a capture stream,
//! and optionally score them against known typing ranges.

use std::path::Path;

use clap::Args;
use serde::{Deserialize, Serialize};

use hoverlay::analysis::{detect_keyboard, score_detection, HeuristicConfig};

use crate::error::{usage, CliError};
use crate::manifest::{self, CommandParams};
use crate::table::{num, Csv};
use crate::util::{expand_inputs, load_captures, require_time_ordered, write_output};

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct DetectParams {
    /// Capture streams: .cap files or directories of them.
    #[arg(required = true)]
    pub captures: Vec<String>,
    /// Segments CSV path.
    #[arg(long)]
    pub out: String,
    /// simple flags every keyboard-region run; refined also drops short
    /// or hasty runs.
    #[arg(long, default_value = "refined")]
    pub mode: String,
    /// Screen size WxH the captures came from; places the keyboard band.
    #[arg(long, default_value = "720x1280")]
    pub screen: String,
    /// Refined mode: drop runs shorter than this many clicks.
    #[arg(long, default_value_t = 4)]
    pub min_seq_len: usize,
    /// Refined mode: drop runs that start sooner than this after the
    /// preceding click, ms.
    #[arg(long, default_value_t = 500)]
    pub first_key_delay_ms: u32,
    /// Ground-truth typing ranges "a..b[,c..d]", half-open click indices.
    #[arg(long)]
    pub truth: Option<String>,
    /// Score CSV path; requires --truth.
    #[arg(long)]
    pub report: Option<String>,
}

fn parse_screen(s: &str) -> Result<(u32, u32), CliError> {
    let parse = |v: &str| {
        v.parse::<u32>()
            .map_err(|_| usage(format!("screen must be WxH in px, got {s:?}")))
    };
    match s.split_once('x') {
        Some((w, h)) => Ok((parse(w)?, parse(h)?)),
        None => Err(usage(format!("screen must be WxH in px, got {s:?}"))),
    }
}

fn parse_ranges(s: &str) -> Result<Vec<(usize, usize)>, CliError> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (a, b) = part
            .split_once("..")
            .ok_or_else(|| usage(format!("ranges look like a..b, got {part:?}")))?;
        let a: usize = a
            .parse()
            .map_err(|_| usage(format!("bad range start {a:?}")))?;
        let b: usize = b
            .parse()
            .map_err(|_| usage(format!("bad range end {b:?}")))?;
        if a >= b {
            return Err(usage(format!("range {part:?} is empty")));
        }
        out.push((a, b));
    }
    if out.is_empty() {
        return Err(usage("truth ranges are empty"));
    }
    Ok(out)
}

pub fn run(params: &DetectParams) -> Result<(), CliError> {
    let (width, height) = parse_screen(&params.screen)?;
    let refined = match params.mode.as_str() {
        "simple" => false,
        "refined" => true,
        other => {
            return Err(usage(format!(
                "mode must be simple or refined, got {other:?}"
            )))
        }
    };
    let truth = match (&params.truth, &params.report) {
        (Some(t), Some(_)) => Some(parse_ranges(t)?),
        (None, None) => None,
        (Some(_), None) => return Err(usage("--truth needs --report PATH for the score")),
        (None, Some(_)) => return Err(usage("--report needs --truth ranges to score against")),
    };

    let captures = load_captures(&expand_inputs(&params.captures, "cap")?)?;
    require_time_ordered(&captures)?;

    let mut config = HeuristicConfig::for_screen(width, height);
    config.min_seq_len = params.min_seq_len;
    config.first_key_delay_ms = params.first_key_delay_ms;
    config.refined = refined;
    let segments = detect_keyboard(&captures, &config);

    let mut csv = Csv::new(&["segment", "start", "end", "n_clicks"]);
    for (i, segment) in segments.iter().enumerate() {
        csv.row(&[
            i.to_string(),
            segment.start.to_string(),
            segment.end.to_string(),
            segment.len().to_string(),
        ]);
    }
    let out = Path::new(&params.out);
    write_output(out, csv.into_string().as_bytes())?;

    if let Some(truth) = truth {
        let score = score_detection(captures.len(), &segments, &truth);
        let mut csv = Csv::new(&[
            "mode",
            "n_captures",
            "false_positives",
            "false_negatives",
            "fp_rate",
            "fn_rate",
        ]);
        csv.row(&[
            params.mode.clone(),
            captures.len().to_string(),
            score.false_positives.to_string(),
            score.false_negatives.to_string(),
            num(score.fp_rate),
            num(score.fn_rate),
        ]);
        let report = params.report.as_ref().expect("checked above");
        write_output(Path::new(report), csv.into_string().as_bytes())?;
    }
    manifest::write_for(out, false, CommandParams::Detect(params.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn screens_parse() {
        assert_eq!(parse_screen("720x1280").unwrap(), (720, 1280));
        assert!(parse_screen("720by1280").is_err());
        assert!(parse_screen("widex1280").is_err());
    }

    #[test]
    fn ranges_parse() {
        assert_eq!(parse_ranges("0..4").unwrap(), vec![(0, 4)]);
        assert_eq!(parse_ranges("2..4, 9..12").unwrap(), vec![(2, 4), (9, 12)]);
        assert!(parse_ranges("4..4").is_err());
        assert!(parse_ranges("4-6").is_err());
        assert!(parse_ranges("").is_err());
    }
}
