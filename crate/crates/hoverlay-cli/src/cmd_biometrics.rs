//! `hoverlay biometrics`: per-click timing features of a capture stream,
//! computed purely from what the attacker recorded.

use std::path::Path;

use clap::Args;
use serde::{Deserialize, Serialize};

use hoverlay::analysis::biometrics;

use crate::error::{data, CliError};
use crate::manifest::{self, CommandParams};
use crate::table::Csv;
use crate::util::{expand_inputs, load_captures, require_time_ordered, write_output};

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct BiometricsParams {
    /// Capture streams: .cap files or directories of them.
    #[arg(required = true)]
    pub captures: Vec<String>,
    /// Feature CSV path.
    #[arg(long)]
    pub out: String,
}

pub fn run(params: &BiometricsParams) -> Result<(), CliError> {
    let captures = load_captures(&expand_inputs(&params.captures, "cap")?)?;
    require_time_ordered(&captures)?;
    let records = biometrics(&captures).map_err(|e| data(e.to_string()))?;

    let mut csv = Csv::new(&[
        "click_index",
        "click_duration_ms",
        "inter_click_ms",
        "hover_gap_ms",
    ]);
    for r in &records {
        let opt = |v: Option<u32>| v.map(|x| x.to_string()).unwrap_or_default();
        csv.row(&[
            r.click_index.to_string(),
            r.click_duration_ms.to_string(),
            opt(r.inter_click_ms),
            opt(r.hover_gap_ms),
        ]);
    }
    let out = Path::new(&params.out);
    write_output(out, csv.into_string().as_bytes())?;
    manifest::write_for(out, false, CommandParams::Biometrics(params.clone()))
}
