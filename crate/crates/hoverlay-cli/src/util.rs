//! Input and output plumbing shared by the commands: collecting input
//! files in a stable order, decoding the two stream formats, and writing
//! outputs with their parent directories.

use std::path::{Path, PathBuf};

use hoverlay::attacker::{read_captures, CapturedClick};
use hoverlay::events::{parse_session, validate_session, Session};

use crate::error::{data, usage, CliError};

/// Expands each argument to itself (a file) or to the files with the
/// given extension directly inside it (a directory), sorted by name so
/// processing order never depends on filesystem iteration order.
pub fn expand_inputs(args: &[String], ext: &str) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Vec::new();
    for arg in args {
        let path = Path::new(arg);
        let meta = std::fs::metadata(path).map_err(|e| data(format!("cannot read {arg}: {e}")))?;
        if meta.is_dir() {
            let mut found = Vec::new();
            let entries =
                std::fs::read_dir(path).map_err(|e| data(format!("cannot list {arg}: {e}")))?;
            for entry in entries {
                let entry = entry.map_err(|e| data(format!("cannot list {arg}: {e}")))?;
                let p = entry.path();
                if p.is_file() && p.extension().and_then(|e| e.to_str()) == Some(ext) {
                    found.push(p);
                }
            }
            found.sort();
            out.extend(found);
        } else {
            out.push(path.to_path_buf());
        }
    }
    if out.is_empty() {
        return Err(usage(format!("no .{ext} files among the inputs")));
    }
    Ok(out)
}

pub fn load_session(path: &Path) -> Result<Session, CliError> {
    let bytes =
        std::fs::read(path).map_err(|e| data(format!("cannot read {}: {e}", path.display())))?;
    let session = parse_session(&bytes).map_err(|e| {
        data(format!(
            "{} is not a valid session file: {e}",
            path.display()
        ))
    })?;
    if let Some(v) = validate_session(&session).first() {
        return Err(data(format!(
            "{} breaks session invariants: {v:?}",
            path.display()
        )));
    }
    Ok(session)
}

/// Reads and concatenates capture streams in input order.
pub fn load_captures(paths: &[PathBuf]) -> Result<Vec<CapturedClick>, CliError> {
    let mut all = Vec::new();
    for path in paths {
        let bytes = std::fs::read(path)
            .map_err(|e| data(format!("cannot read {}: {e}", path.display())))?;
        let captures = read_captures(&bytes).map_err(|e| {
            data(format!(
                "{} is not a valid capture stream: {e}",
                path.display()
            ))
        })?;
        all.extend(captures);
    }
    Ok(all)
}

/// The capture analyses read one stream at a time; concatenating streams
/// from different runs would interleave unrelated clocks, so reject any
/// input whose press times go backwards.
pub fn require_time_ordered(captures: &[CapturedClick]) -> Result<(), CliError> {
    for pair in captures.windows(2) {
        if pair[1].t_down_ms < pair[0].t_down_ms {
            return Err(data(
                "captures are not time ordered; analyses want a single session's stream"
                    .to_string(),
            ));
        }
    }
    Ok(())
}

pub fn write_output(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| data(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    std::fs::write(path, bytes).map_err(|e| data(format!("cannot write {}: {e}", path.display())))
}
