//! Screens, input events, sessions, and the line-oriented session format.
//!
//! A [`Session`] is the ground truth a simulation works from: one user, one
//! screen, one ordered stream of hover/touch events, plus the true clicks
//! that produced the stream. Sessions are value types; nothing here touches
//! a clock or an RNG.
//!
//! The interchange format is JSON Lines: a header object on the first line,
//! then one object per event, with click objects allowed to interleave
//! anywhere after the header. [`parse_session`] sorts internally, so writers
//! are free to emit clicks next to the touch pair that produced them (which
//! is what [`serialize_session`] does).

use crate::geom::Point;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Physical screen description. `hover_range_mm` is the height of the band
/// above the glass in which the digitizer still reports positions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScreenSpec {
    pub width_px: u32,
    pub height_px: u32,
    pub hover_range_mm: f64,
}

impl ScreenSpec {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= 0.0 && x < self.width_px as f64 && y >= 0.0 && y < self.height_px as f64
    }
}

/// Input device. Finger hover sensing is far noisier than stylus sensing,
/// which is what the per-method synthesis profiles encode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputMethod {
    Stylus,
    Finger,
}

/// Event kinds in the order they surround a click: hovers while the device
/// floats, `HoverExit` immediately before contact, `TouchDown`/`TouchUp`
/// for the contact itself, hovers again as the device retreats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    #[serde(rename = "hover_enter")]
    HoverEnter,
    #[serde(rename = "hover")]
    HoverMove,
    #[serde(rename = "hover_exit")]
    HoverExit,
    #[serde(rename = "down")]
    TouchDown,
    #[serde(rename = "up")]
    TouchUp,
}

impl EventKind {
    /// Hover-plane events carry a sensed position above the glass.
    pub fn is_hover(self) -> bool {
        matches!(
            self,
            EventKind::HoverEnter | EventKind::HoverMove | EventKind::HoverExit
        )
    }

    pub fn is_touch(self) -> bool {
        matches!(self, EventKind::TouchDown | EventKind::TouchUp)
    }
}

/// One sensed event. Timestamps are microseconds from session start and
/// strictly increase across the stream; ties are forbidden.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputEvent {
    pub t_us: u64,
    pub kind: EventKind,
    pub x: f64,
    pub y: f64,
}

impl InputEvent {
    pub fn pos(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// A ground-truth click: the actual contact interval and position, plus the
/// intended key for typing workloads (`None` for free-form taps).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Click {
    pub t_down_us: u64,
    pub t_up_us: u64,
    pub x: f64,
    pub y: f64,
    pub key_label: Option<char>,
}

impl Click {
    pub fn pos(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// One user's event stream with its ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub screen: ScreenSpec,
    pub method: InputMethod,
    pub user_id: u32,
    pub events: Vec<InputEvent>,
    pub truth_clicks: Vec<Click>,
    pub seed: u64,
}

/// A broken session invariant. Violations are data: the validator reports
/// all of them instead of panicking, so corrupt corpora can be triaged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// `events[index]` does not strictly increase over its predecessor.
    NonMonotonicTime { index: usize },
    /// `events[index]` lies outside the screen.
    OutOfBounds { index: usize },
    /// The TouchDown at `events[index]` is not immediately preceded by a
    /// HoverExit.
    MissingHoverExit { index: usize },
    /// The touch event at `events[index]` breaks Down/Up alternation.
    BrokenAlternation { index: usize },
    /// A TouchDown at `events[index]` never gets a matching TouchUp.
    UnterminatedTouch { index: usize },
    /// `truth_clicks[click]` has `t_up_us <= t_down_us`.
    ClickNotOrdered { click: usize },
    /// `truth_clicks[click]` lies outside the screen.
    ClickOutOfBounds { click: usize },
    /// `truth_clicks[click]` does not match the event stream's touch pair
    /// with the same ordinal by timestamps.
    ClickPairMismatch { click: usize },
    /// The stream has `pairs` Down/Up pairs but `clicks` truth clicks.
    PairCountMismatch { pairs: usize, clicks: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonMonotonicTime { index } => {
                write!(f, "event {index}: timestamp does not strictly increase")
            }
            Violation::OutOfBounds { index } => {
                write!(f, "event {index}: position outside screen bounds")
            }
            Violation::MissingHoverExit { index } => {
                write!(
                    f,
                    "event {index}: TouchDown not immediately preceded by HoverExit"
                )
            }
            Violation::BrokenAlternation { index } => {
                write!(f, "event {index}: TouchDown/TouchUp alternation broken")
            }
            Violation::UnterminatedTouch { index } => {
                write!(f, "event {index}: TouchDown without matching TouchUp")
            }
            Violation::ClickNotOrdered { click } => {
                write!(f, "click {click}: up time not after down time")
            }
            Violation::ClickOutOfBounds { click } => {
                write!(f, "click {click}: position outside screen bounds")
            }
            Violation::ClickPairMismatch { click } => {
                write!(f, "click {click}: timestamps do not match the touch pair")
            }
            Violation::PairCountMismatch { pairs, clicks } => {
                write!(f, "{pairs} touch pairs but {clicks} truth clicks")
            }
        }
    }
}

/// Checks every session invariant and returns all violations found.
///
/// Checked invariants: strictly increasing timestamps, on-screen positions,
/// HoverExit immediately before every TouchDown, strict Down/Up alternation,
/// well-ordered on-screen truth clicks, and a one-to-one timestamp match
/// between truth clicks and Down/Up pairs.
pub fn validate_session(session: &Session) -> Vec<Violation> {
    let mut v = Vec::new();
    let events = &session.events;

    let mut down_open: Option<usize> = None;
    let mut pairs: Vec<(u64, u64)> = Vec::new();
    for (i, e) in events.iter().enumerate() {
        if i > 0 && e.t_us <= events[i - 1].t_us {
            v.push(Violation::NonMonotonicTime { index: i });
        }
        if !session.screen.contains(e.x, e.y) {
            v.push(Violation::OutOfBounds { index: i });
        }
        match e.kind {
            EventKind::TouchDown => {
                if i == 0 || events[i - 1].kind != EventKind::HoverExit {
                    v.push(Violation::MissingHoverExit { index: i });
                }
                if down_open.is_some() {
                    v.push(Violation::BrokenAlternation { index: i });
                } else {
                    down_open = Some(i);
                }
            }
            EventKind::TouchUp => match down_open.take() {
                Some(di) => pairs.push((events[di].t_us, e.t_us)),
                None => v.push(Violation::BrokenAlternation { index: i }),
            },
            _ => {}
        }
    }
    if let Some(di) = down_open {
        v.push(Violation::UnterminatedTouch { index: di });
    }

    for (ci, c) in session.truth_clicks.iter().enumerate() {
        if c.t_up_us <= c.t_down_us {
            v.push(Violation::ClickNotOrdered { click: ci });
        }
        if !session.screen.contains(c.x, c.y) {
            v.push(Violation::ClickOutOfBounds { click: ci });
        }
    }
    if pairs.len() != session.truth_clicks.len() {
        v.push(Violation::PairCountMismatch {
            pairs: pairs.len(),
            clicks: session.truth_clicks.len(),
        });
    }
    for (ci, (c, &(td, tu))) in session.truth_clicks.iter().zip(&pairs).enumerate() {
        if c.t_down_us != td || c.t_up_us != tu {
            v.push(Violation::ClickPairMismatch { click: ci });
        }
    }

    v
}

#[derive(Debug, Serialize, Deserialize)]
struct HeaderLine {
    version: u32,
    width_px: u32,
    height_px: u32,
    hover_range_mm: f64,
    method: InputMethod,
    user_id: u32,
    seed: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ClickJson {
    t_down_us: u64,
    t_up_us: u64,
    x: f64,
    y: f64,
    key: Option<char>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum BodyLine {
    Click { click: ClickJson },
    Event(InputEvent),
}

pub const FORMAT_VERSION: u32 = 1;

/// Writes a session in the JSON Lines format: header first, then events in
/// stream order with each click object emitted right after its TouchUp
/// line. Output is deterministic byte-for-byte.
pub fn serialize_session(session: &Session) -> String {
    let mut out = String::new();
    let header = HeaderLine {
        version: FORMAT_VERSION,
        width_px: session.screen.width_px,
        height_px: session.screen.height_px,
        hover_range_mm: session.screen.hover_range_mm,
        method: session.method,
        user_id: session.user_id,
        seed: session.seed,
    };
    out.push_str(&serde_json::to_string(&header).expect("header serializes"));
    out.push('\n');

    let mut next_click = 0usize;
    for e in &session.events {
        out.push_str(&serde_json::to_string(e).expect("event serializes"));
        out.push('\n');
        if e.kind == EventKind::TouchUp {
            if let Some(c) = session.truth_clicks.get(next_click) {
                if c.t_up_us == e.t_us {
                    let line = BodyLine::Click {
                        click: ClickJson {
                            t_down_us: c.t_down_us,
                            t_up_us: c.t_up_us,
                            x: c.x,
                            y: c.y,
                            key: c.key_label,
                        },
                    };
                    out.push_str(&serde_json::to_string(&line).expect("click serializes"));
                    out.push('\n');
                    next_click += 1;
                }
            }
        }
    }
    // Clicks whose pair never appeared in the stream still need to survive a
    // round trip; append them (the validator flags such sessions anyway).
    for c in &session.truth_clicks[next_click..] {
        let line = BodyLine::Click {
            click: ClickJson {
                t_down_us: c.t_down_us,
                t_up_us: c.t_up_us,
                x: c.x,
                y: c.y,
                key: c.key_label,
            },
        };
        out.push_str(&serde_json::to_string(&line).expect("click serializes"));
        out.push('\n');
    }
    out
}

/// Why and where parsing failed. `line` is 1-based, `offset` is the byte
/// offset of the offending line's start within the input.
#[derive(Debug, thiserror::Error)]
#[error("line {line} (byte offset {offset}): {kind}")]
pub struct ParseError {
    pub line: usize,
    pub offset: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, thiserror::Error)]
pub enum ParseErrorKind {
    #[error("input ends before a header line")]
    MissingHeader,
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
    #[error("line is not valid UTF-8")]
    Utf8,
    #[error("malformed line: {0}")]
    Json(String),
}

/// Parses the JSON Lines format back into a [`Session`].
///
/// Click lines may interleave anywhere after the header; events and clicks
/// are sorted internally by timestamp. For any session that serializes
/// cleanly, `parse_session(serialize_session(s).as_bytes()) == s`.
pub fn parse_session(bytes: &[u8]) -> Result<Session, ParseError> {
    let mut line_no = 0usize;
    let mut offset = 0usize;
    let mut header: Option<HeaderLine> = None;
    let mut events: Vec<InputEvent> = Vec::new();
    let mut clicks: Vec<Click> = Vec::new();

    for raw in bytes.split(|&b| b == b'\n') {
        let line_start = offset;
        offset += raw.len() + 1;
        if raw.is_empty() {
            continue;
        }
        line_no += 1;
        let text = std::str::from_utf8(raw).map_err(|_| ParseError {
            line: line_no,
            offset: line_start,
            kind: ParseErrorKind::Utf8,
        })?;
        if header.is_none() {
            let h: HeaderLine = serde_json::from_str(text).map_err(|e| ParseError {
                line: line_no,
                offset: line_start,
                kind: ParseErrorKind::Json(e.to_string()),
            })?;
            if h.version != FORMAT_VERSION {
                return Err(ParseError {
                    line: line_no,
                    offset: line_start,
                    kind: ParseErrorKind::UnsupportedVersion(h.version),
                });
            }
            header = Some(h);
            continue;
        }
        let body: BodyLine = serde_json::from_str(text).map_err(|e| ParseError {
            line: line_no,
            offset: line_start,
            kind: ParseErrorKind::Json(e.to_string()),
        })?;
        match body {
            BodyLine::Event(e) => events.push(e),
            BodyLine::Click { click } => clicks.push(Click {
                t_down_us: click.t_down_us,
                t_up_us: click.t_up_us,
                x: click.x,
                y: click.y,
                key_label: click.key,
            }),
        }
    }

    let header = header.ok_or(ParseError {
        line: line_no.max(1),
        offset: 0,
        kind: ParseErrorKind::MissingHeader,
    })?;

    events.sort_by_key(|e| e.t_us);
    clicks.sort_by_key(|c| c.t_down_us);

    Ok(Session {
        screen: ScreenSpec {
            width_px: header.width_px,
            height_px: header.height_px,
            hover_range_mm: header.hover_range_mm,
        },
        method: header.method,
        user_id: header.user_id,
        events,
        truth_clicks: clicks,
        seed: header.seed,
    })
}
