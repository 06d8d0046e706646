//! Deterministic simulator and analysis toolkit for hover-based input
//! inference.
//!
//! Touchscreens with "floating touch" report the position of a stylus or
//! finger while it hovers above the screen. Around every tap the input
//! stack emits a fixed event pattern: hover samples while the device
//! approaches, a hover exit immediately before the touch down, the touch
//! up, and then hover samples again as the device moves away. A background
//! service that briefly places a transparent full-screen overlay right
//! after each tap can read the post-click hover samples and recover where
//! the tap landed, without ever receiving the tap itself.
//!
//! This crate models that pipeline end to end, deterministically:
//!
//! * [`events`] defines screens, input event streams, and a line-oriented
//!   session format with a validator.
//! * [`layout`] and [`synth`] generate realistic sessions: an on-screen
//!   keyboard, minimum-jerk hover trajectories, and per-method noise
//!   profiles for stylus and finger input.
//! * [`dispatch`] reproduces the window event routing rules that make the
//!   overlay trick possible, including the countermeasure toggles.
//! * [`attacker`] runs the overlay state machine against a session and
//!   encodes what it saw as fixed 40-byte capture records.
//! * [`learn`] infers click positions and keys from captures with
//!   from-scratch regression and classification models plus cross
//!   validation.
//! * [`analysis`] holds detection heuristics, keystroke biometrics, and
//!   text reconstruction helpers.
//!
//! Everything downstream of a seed is reproducible: same seed, same bytes.

pub mod analysis;
pub mod attacker;
pub mod dispatch;
pub mod events;
pub mod layout;
pub mod learn;
pub mod synth;

mod geom;

pub use geom::{Point, Rect};

// The guide chapters under book/src/ contain runnable examples against the
// public API. Including them here keeps every snippet compiled and executed
// by `cargo test --doc`, so the book cannot drift from the crate.
#[doc = include_str!("../../../book/src/introduction.md")]
#[doc(hidden)]
pub mod _guide_introduction {}

#[doc = include_str!("../../../book/src/events.md")]
#[doc(hidden)]
pub mod _guide_events {}

#[doc = include_str!("../../../book/src/synthesis.md")]
#[doc(hidden)]
pub mod _guide_synthesis {}

#[doc = include_str!("../../../book/src/dispatch.md")]
#[doc(hidden)]
pub mod _guide_dispatch {}

#[doc = include_str!("../../../book/src/attacker.md")]
#[doc(hidden)]
pub mod _guide_attacker {}

#[doc = include_str!("../../../book/src/learning.md")]
#[doc(hidden)]
pub mod _guide_learning {}

#[doc = include_str!("../../../book/src/analysis.md")]
#[doc(hidden)]
pub mod _guide_analysis {}
