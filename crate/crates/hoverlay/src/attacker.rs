//! The overlay attack: a background service that reconstructs where the
//! user clicked without ever receiving the clicks.
//!
//! The service owns two windows. A permanent zero-sized listener watches
//! for outside touches, which tells it *when* every click happens but not
//! where. On each click it briefly raises a full-screen transparent
//! overlay: the input stream atomicity rule keeps the click itself bound
//! to the app underneath, while the hover samples that follow the lift-off
//! land on the overlay. Those few samples trail the true click position
//! closely enough to recover it.
//!
//! [`run_attack`] plays the closed loop against a recorded session and
//! returns what the attacker collected plus a stealth audit of everything
//! a defender could have noticed.

use crate::dispatch::{
    dispatch, CommandAction, DeliveryKind, DeliveryLog, DispatchPolicy, Owner, StackCommand,
    ViewSpec,
};
use crate::events::{EventKind, InputMethod, Session};
use crate::geom::Rect;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const LISTENER_VIEW_ID: u32 = 100;
pub const OVERLAY_VIEW_ID: u32 = 101;
const LISTENER_Z: i32 = 10;
const OVERLAY_Z: i32 = 20;

/// A capture record stores at most this many hover samples; the on-disk
/// format has exactly four slots.
pub const MAX_HOVER_SLOTS: usize = 4;

/// Record size on disk.
pub const RECORD_BYTES: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WindowAnchor {
    /// Overlay comes down `activation_ms` after the touch press.
    TouchDown,
    /// Overlay comes down `activation_ms` after the lift-off (default);
    /// the observation window then covers the full post-click hover tail.
    TouchUp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackerConfig {
    /// How long the overlay stays up past the anchor event, in ms.
    pub activation_ms: u32,
    /// Hover samples kept per click, at most [`MAX_HOVER_SLOTS`].
    pub max_hovers: usize,
    /// Delay between the press notification and the overlay actually
    /// appearing, in µs. Models service wake-up plus window-add cost.
    pub reaction_latency_us: u64,
    pub window_anchor: WindowAnchor,
}

impl Default for AttackerConfig {
    fn default() -> Self {
        AttackerConfig {
            activation_ms: 70,
            max_hovers: 4,
            reaction_latency_us: 1_000,
            window_anchor: WindowAnchor::TouchUp,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("max_hovers must be between 1 and {MAX_HOVER_SLOTS}, got {0}")]
    BadMaxHovers(usize),
}

impl AttackerConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.max_hovers == 0 || self.max_hovers > MAX_HOVER_SLOTS {
            return Err(ConfigError::BadMaxHovers(self.max_hovers));
        }
        Ok(())
    }
}

/// One hover sample the overlay saw, timed relative to the click's press.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoverPoint {
    pub dt_ms: u16,
    pub x: f64,
    pub y: f64,
}

/// Everything the attacker holds about one click: press time, press
/// duration, and the post-click hover tail. Never the touch coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapturedClick {
    pub user_id: u16,
    pub click_index: u16,
    pub t_down_ms: u32,
    pub dt_up_ms: u16,
    pub hovers: Vec<HoverPoint>,
    pub method: InputMethod,
}

/// What a defender could have noticed, aggregated over the run. All three
/// counters stay zero when the attack goes undetected.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StealthAudit {
    /// Clicks whose normal delivery was disturbed (consumed or blocked).
    pub obstructed_clicks: usize,
    /// Touch events that landed on the overlay instead of the app.
    pub touches_to_overlay: usize,
    /// Window commands the system rejected.
    pub illegal_commands: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackOutcome {
    pub captures: Vec<CapturedClick>,
    pub audit: StealthAudit,
    /// The full dispatch log, for inspection and tests.
    pub log: DeliveryLog,
}

fn listener_view() -> ViewSpec {
    ViewSpec {
        view_id: LISTENER_VIEW_ID,
        z: LISTENER_Z,
        bounds: Rect::new(0.0, 0.0, 0.0, 0.0),
        intercepts_events: true,
        watch_outside: true,
        owner: Owner::AttackerService,
    }
}

fn overlay_view(session: &Session) -> ViewSpec {
    ViewSpec {
        view_id: OVERLAY_VIEW_ID,
        z: OVERLAY_Z,
        bounds: Rect::new(
            0.0,
            0.0,
            session.screen.width_px as f64,
            session.screen.height_px as f64,
        ),
        intercepts_events: true,
        watch_outside: false,
        owner: Owner::AttackerService,
    }
}

/// The overlay schedule an attacker derives from timestamp-only press and
/// lift notifications. One pending removal timer, reset by each anchor
/// event; a press while the overlay is already up never double-adds.
fn plan_overlay(
    notifications: &[(u64, EventKind)],
    config: &AttackerConfig,
    session: &Session,
) -> Vec<StackCommand> {
    let activation_us = config.activation_ms as u64 * 1_000;
    let mut commands: Vec<StackCommand> = Vec::new();
    // Live generation: add time and the index of its pending Remove.
    let mut live: Option<(u64, Option<usize>)> = None;

    let live_at =
        |live: &Option<(u64, Option<usize>)>, commands: &[StackCommand], t: u64| match live {
            Some((add_t, remove_idx)) => {
                *add_t <= t && remove_idx.is_none_or(|i| t < commands[i].t_us)
            }
            None => false,
        };

    for &(t, kind) in notifications {
        match kind {
            EventKind::TouchDown => {
                if !live_at(&live, &commands, t) {
                    let add_t = t + config.reaction_latency_us;
                    commands.push(StackCommand {
                        t_us: add_t,
                        action: CommandAction::Add(overlay_view(session)),
                    });
                    live = Some((add_t, None));
                }
                if config.window_anchor == WindowAnchor::TouchDown {
                    schedule_remove(&mut commands, &mut live, t + activation_us);
                }
            }
            EventKind::TouchUp
                if config.window_anchor == WindowAnchor::TouchUp
                    && live_at(&live, &commands, t) =>
            {
                schedule_remove(&mut commands, &mut live, t + activation_us);
            }
            _ => {}
        }
    }
    commands.sort_by_key(|c| c.t_us);
    commands
}

/// Sets or resets the live generation's removal timer. The removal never
/// precedes the overlay's own appearance.
fn schedule_remove(
    commands: &mut Vec<StackCommand>,
    live: &mut Option<(u64, Option<usize>)>,
    t: u64,
) {
    if let Some((add_t, remove_idx)) = live {
        let t = t.max(*add_t + 1);
        match remove_idx {
            Some(i) => commands[*i].t_us = t,
            None => {
                commands.push(StackCommand {
                    t_us: t,
                    action: CommandAction::Remove(OVERLAY_VIEW_ID),
                });
                *remove_idx = Some(commands.len() - 1);
            }
        }
    }
}

/// Runs the attack service against a session under a dispatch policy.
///
/// The loop is honest about the attacker's information set: overlay
/// scheduling uses only the timestamps the listener was actually notified
/// of, so a policy that rejects the listener silences the whole attack.
pub fn run_attack(
    session: &Session,
    config: &AttackerConfig,
    policy: &DispatchPolicy,
) -> Result<AttackOutcome, ConfigError> {
    config.validate()?;
    let install = StackCommand {
        t_us: 0,
        action: CommandAction::Add(listener_view()),
    };

    // Pass 1: what does the listener hear? Overlay presence never changes
    // outside-touch notifications, so this pre-pass is exact.
    let probe = dispatch(session, std::slice::from_ref(&install), policy);
    let notifications: Vec<(u64, EventKind)> = probe
        .records
        .iter()
        .filter(|r| {
            r.delivery == DeliveryKind::OutsideNotify && r.receiver == Some(LISTENER_VIEW_ID)
        })
        .map(|r| (r.t_us, r.kind))
        .collect();

    let mut commands = vec![install];
    commands.extend(plan_overlay(&notifications, config, session));

    // Pass 2: the real run.
    let log = dispatch(session, &commands, policy);

    // Pair press and lift notifications into clicks as the service would:
    // a lift concludes the most recent open press.
    let mut clicks: Vec<(u64, Option<u64>)> = Vec::new();
    for &(t, kind) in &notifications {
        match kind {
            EventKind::TouchDown => clicks.push((t, None)),
            EventKind::TouchUp => {
                if let Some(last) = clicks.last_mut() {
                    if last.1.is_none() {
                        last.1 = Some(t);
                    }
                }
            }
            _ => {}
        }
    }

    // Hover payloads the overlay received, with coordinates rejoined from
    // the stream (Full delivery hands the view the whole event).
    let hover_payloads: Vec<(u64, f64, f64)> = {
        let mut by_t = std::collections::HashMap::new();
        for e in &session.events {
            by_t.insert(e.t_us, (e.x, e.y));
        }
        log.records
            .iter()
            .filter(|r| {
                r.delivery == DeliveryKind::Full
                    && r.receiver == Some(OVERLAY_VIEW_ID)
                    && r.kind.is_hover()
            })
            .map(|r| {
                let (x, y) = by_t[&r.t_us];
                (r.t_us, x, y)
            })
            .collect()
    };

    let anchor_time = |&(down, up): &(u64, Option<u64>)| match config.window_anchor {
        WindowAnchor::TouchDown => Some(down),
        WindowAnchor::TouchUp => up,
    };

    let mut captures: Vec<CapturedClick> = clicks
        .iter()
        .enumerate()
        .map(|(i, &(down, up))| CapturedClick {
            user_id: session.user_id as u16,
            click_index: i as u16,
            t_down_ms: ((down + 500) / 1_000) as u32,
            dt_up_ms: up
                .map(|u| (((u - down) + 500) / 1_000).min(u16::MAX as u64) as u16)
                .unwrap_or(0),
            hovers: Vec::new(),
            method: session.method,
        })
        .collect();

    // Each overlay hover belongs to the latest click whose anchor it
    // follows; the record keeps the first max_hovers of them.
    for &(t, x, y) in &hover_payloads {
        let owner = clicks
            .iter()
            .enumerate()
            .filter(|(_, c)| anchor_time(c).is_some_and(|a| a <= t))
            .map(|(i, _)| i)
            .next_back();
        if let Some(i) = owner {
            if captures[i].hovers.len() < config.max_hovers {
                let down = clicks[i].0;
                captures[i].hovers.push(HoverPoint {
                    dt_ms: (((t - down) + 500) / 1_000).min(u16::MAX as u64) as u16,
                    x,
                    y,
                });
            }
        }
    }

    let touches_to_overlay = log
        .records
        .iter()
        .filter(|r| {
            r.delivery == DeliveryKind::Full
                && r.receiver == Some(OVERLAY_VIEW_ID)
                && r.kind.is_touch()
        })
        .count();
    let audit = StealthAudit {
        obstructed_clicks: log.obstruction_events.len(),
        touches_to_overlay,
        illegal_commands: log.illegal_commands.len(),
    };

    Ok(AttackOutcome {
        captures,
        audit,
        log,
    })
}

/// CRC-16/CCITT-FALSE: polynomial 0x1021, init 0xFFFF, no reflection.
/// Check value: crc16 over b"123456789" is 0x29B1.
pub fn crc16(bytes: &[u8]) -> u16 {
    let mut crc: u16 = 0xFFFF;
    for &b in bytes {
        crc ^= (b as u16) << 8;
        for _ in 0..8 {
            crc = if crc & 0x8000 != 0 {
                (crc << 1) ^ 0x1021
            } else {
                crc << 1
            };
        }
    }
    crc
}

#[derive(Debug, Error, PartialEq)]
pub enum RecordError {
    #[error("checksum mismatch: stored {stored:#06x}, computed {computed:#06x}")]
    Checksum { stored: u16, computed: u16 },
    #[error("hover count {0} exceeds {MAX_HOVER_SLOTS} slots")]
    BadHoverCount(u8),
    #[error("unknown input method tag {0}")]
    BadMethod(u8),
    #[error("unused hover slot {0} is not blank")]
    DirtySlot(usize),
}

#[derive(Debug, Error, PartialEq)]
pub enum CaptureStreamError {
    #[error("stream length {0} is not a multiple of {RECORD_BYTES}")]
    Truncated(usize),
    #[error("record {index}: {source}")]
    Record { index: usize, source: RecordError },
}

const EMPTY_SLOT_DT: u16 = 0xFFFF;

fn coord_to_u16(v: f64) -> u16 {
    // Round half up, clamp into the representable range.
    (v + 0.5).floor().clamp(0.0, u16::MAX as f64) as u16
}

/// Fixed 40-byte little-endian wire format, checksummed:
///
/// ```text
/// 0   u16  user_id
/// 2   u16  click_index
/// 4   u32  t_down_ms
/// 8   u16  dt_up_ms
/// 10  4 x (u16 dt_ms, u16 x, u16 y)   hover slots; blank = (0xFFFF, 0, 0)
/// 34  u8   n_hovers
/// 35  u8   method (0 = stylus, 1 = finger)
/// 36  u16  reserved, zero
/// 38  u16  crc16 over bytes 0..38
/// ```
pub fn encode_captured(c: &CapturedClick) -> Result<[u8; RECORD_BYTES], RecordError> {
    if c.hovers.len() > MAX_HOVER_SLOTS {
        return Err(RecordError::BadHoverCount(c.hovers.len() as u8));
    }
    let mut buf = [0u8; RECORD_BYTES];
    buf[0..2].copy_from_slice(&c.user_id.to_le_bytes());
    buf[2..4].copy_from_slice(&c.click_index.to_le_bytes());
    buf[4..8].copy_from_slice(&c.t_down_ms.to_le_bytes());
    buf[8..10].copy_from_slice(&c.dt_up_ms.to_le_bytes());
    for slot in 0..MAX_HOVER_SLOTS {
        let off = 10 + slot * 6;
        let (dt, x, y) = match c.hovers.get(slot) {
            Some(h) => (h.dt_ms, coord_to_u16(h.x), coord_to_u16(h.y)),
            None => (EMPTY_SLOT_DT, 0, 0),
        };
        buf[off..off + 2].copy_from_slice(&dt.to_le_bytes());
        buf[off + 2..off + 4].copy_from_slice(&x.to_le_bytes());
        buf[off + 4..off + 6].copy_from_slice(&y.to_le_bytes());
    }
    buf[34] = c.hovers.len() as u8;
    buf[35] = match c.method {
        InputMethod::Stylus => 0,
        InputMethod::Finger => 1,
    };
    // bytes 36..38 stay zero
    let crc = crc16(&buf[0..38]);
    buf[38..40].copy_from_slice(&crc.to_le_bytes());
    Ok(buf)
}

pub fn decode_captured(buf: &[u8; RECORD_BYTES]) -> Result<CapturedClick, RecordError> {
    let stored = u16::from_le_bytes([buf[38], buf[39]]);
    let computed = crc16(&buf[0..38]);
    if stored != computed {
        return Err(RecordError::Checksum { stored, computed });
    }
    let n = buf[34];
    if n as usize > MAX_HOVER_SLOTS {
        return Err(RecordError::BadHoverCount(n));
    }
    let method = match buf[35] {
        0 => InputMethod::Stylus,
        1 => InputMethod::Finger,
        other => return Err(RecordError::BadMethod(other)),
    };
    let mut hovers = Vec::with_capacity(n as usize);
    for slot in 0..MAX_HOVER_SLOTS {
        let off = 10 + slot * 6;
        let dt = u16::from_le_bytes([buf[off], buf[off + 1]]);
        let x = u16::from_le_bytes([buf[off + 2], buf[off + 3]]);
        let y = u16::from_le_bytes([buf[off + 4], buf[off + 5]]);
        if slot < n as usize {
            hovers.push(HoverPoint {
                dt_ms: dt,
                x: x as f64,
                y: y as f64,
            });
        } else if dt != EMPTY_SLOT_DT || x != 0 || y != 0 {
            return Err(RecordError::DirtySlot(slot));
        }
    }
    Ok(CapturedClick {
        user_id: u16::from_le_bytes([buf[0], buf[1]]),
        click_index: u16::from_le_bytes([buf[2], buf[3]]),
        t_down_ms: u32::from_le_bytes([buf[4], buf[5], buf[6], buf[7]]),
        dt_up_ms: u16::from_le_bytes([buf[8], buf[9]]),
        hovers,
        method,
    })
}

/// Concatenated fixed-size records; the format needs no framing.
pub fn write_captures(captures: &[CapturedClick]) -> Result<Vec<u8>, RecordError> {
    let mut out = Vec::with_capacity(captures.len() * RECORD_BYTES);
    for c in captures {
        out.extend_from_slice(&encode_captured(c)?);
    }
    Ok(out)
}

pub fn read_captures(bytes: &[u8]) -> Result<Vec<CapturedClick>, CaptureStreamError> {
    if !bytes.len().is_multiple_of(RECORD_BYTES) {
        return Err(CaptureStreamError::Truncated(bytes.len()));
    }
    bytes
        .chunks_exact(RECORD_BYTES)
        .enumerate()
        .map(|(index, chunk)| {
            let buf: &[u8; RECORD_BYTES] = chunk.try_into().unwrap();
            decode_captured(buf).map_err(|source| CaptureStreamError::Record { index, source })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::{InputEvent, ScreenSpec};
    use crate::synth::{default_profile, synth_session, UseCase};

    fn screen() -> ScreenSpec {
        ScreenSpec {
            width_px: 400,
            height_px: 600,
            hover_range_mm: 20.0,
        }
    }

    fn ev(t_us: u64, kind: EventKind, x: f64, y: f64) -> InputEvent {
        InputEvent { t_us, kind, x, y }
    }

    /// One click at (50, 60): approach hovers, contact 60ms, then a hover
    /// tail at the 19ms cadence drifting away.
    fn one_click_session() -> Session {
        let events = vec![
            ev(10_000, EventKind::HoverEnter, 40.0, 48.0),
            ev(29_000, EventKind::HoverMove, 45.0, 54.0),
            ev(48_000, EventKind::HoverMove, 49.0, 59.0),
            ev(59_000, EventKind::HoverExit, 50.0, 60.0),
            ev(60_000, EventKind::TouchDown, 50.0, 60.0),
            ev(120_000, EventKind::TouchUp, 50.0, 60.0),
            ev(121_000, EventKind::HoverEnter, 50.2, 60.2),
            ev(140_000, EventKind::HoverMove, 51.0, 61.0),
            ev(159_000, EventKind::HoverMove, 52.5, 62.0),
            ev(178_000, EventKind::HoverMove, 54.0, 63.5),
            ev(197_000, EventKind::HoverMove, 56.0, 65.0),
        ];
        Session {
            screen: screen(),
            method: InputMethod::Stylus,
            user_id: 3,
            events,
            truth_clicks: Vec::new(),
            seed: 0,
        }
    }

    #[test]
    fn single_click_yields_four_post_up_hovers_and_clean_audit() {
        let out = run_attack(
            &one_click_session(),
            &AttackerConfig::default(),
            &DispatchPolicy::default(),
        )
        .unwrap();
        assert_eq!(out.audit, StealthAudit::default());
        assert_eq!(out.captures.len(), 1);
        let c = &out.captures[0];
        assert_eq!(c.user_id, 3);
        assert_eq!(c.click_index, 0);
        assert_eq!(c.t_down_ms, 60);
        assert_eq!(c.dt_up_ms, 60);
        // Overlay up from up+70ms window start... the overlay rises at
        // down+1ms, so every post-up hover inside the window is caught:
        // 121, 140, 159, 178ms. The 197ms sample falls past up+70 = 190ms.
        let dts: Vec<u16> = c.hovers.iter().map(|h| h.dt_ms).collect();
        assert_eq!(dts, vec![61, 80, 99, 118]);
        assert!((c.hovers[0].x - 50.2).abs() < 1e-12);
        assert!((c.hovers[3].y - 63.5).abs() < 1e-12);
    }

    #[test]
    fn pre_click_hovers_never_reach_the_overlay() {
        let out = run_attack(
            &one_click_session(),
            &AttackerConfig::default(),
            &DispatchPolicy::default(),
        )
        .unwrap();
        let overlay_hover_times: Vec<u64> = out
            .log
            .records
            .iter()
            .filter(|r| r.receiver == Some(OVERLAY_VIEW_ID) && r.kind.is_hover())
            .map(|r| r.t_us)
            .collect();
        assert!(overlay_hover_times.iter().all(|&t| t > 120_000));
    }

    /// Two presses 50ms apart: the overlay is still up at the second press
    /// and consumes that click entirely. Timeline (ms):
    ///   click1 down 60, up 120; overlay up at 61, removal timer 190.
    ///   click2 down 170 (< 190: overlay live, consumed), up 230.
    ///   The timer fires at 190 mid-contact; binding keeps the up on the
    ///   overlay. At up 230 the overlay is gone, so nothing reschedules
    ///   and the post-click2 hovers fall to the foreground.
    #[test]
    fn overlay_live_at_next_press_consumes_it_and_shows_in_audit() {
        let events = vec![
            ev(10_000, EventKind::HoverEnter, 40.0, 48.0),
            ev(29_000, EventKind::HoverMove, 45.0, 54.0),
            ev(48_000, EventKind::HoverMove, 49.0, 59.0),
            ev(59_000, EventKind::HoverExit, 50.0, 60.0),
            ev(60_000, EventKind::TouchDown, 50.0, 60.0),
            ev(120_000, EventKind::TouchUp, 50.0, 60.0),
            ev(121_000, EventKind::HoverEnter, 50.2, 60.2),
            ev(140_000, EventKind::HoverMove, 55.0, 66.0),
            ev(159_000, EventKind::HoverMove, 68.0, 78.0),
            ev(169_000, EventKind::HoverExit, 80.0, 90.0),
            ev(170_000, EventKind::TouchDown, 80.0, 90.0),
            ev(230_000, EventKind::TouchUp, 80.0, 90.0),
            ev(231_000, EventKind::HoverEnter, 80.5, 90.5),
            ev(250_000, EventKind::HoverMove, 81.0, 91.0),
        ];
        let mut session = one_click_session();
        session.events = events;

        let out = run_attack(
            &session,
            &AttackerConfig::default(),
            &DispatchPolicy::default(),
        )
        .unwrap();
        assert_eq!(out.audit.obstructed_clicks, 1);
        assert_eq!(out.audit.touches_to_overlay, 2);
        assert_eq!(out.audit.illegal_commands, 0);
        assert_eq!(out.captures.len(), 2);
        // Click 2 was noticed (listener heard it) but captured no hovers.
        assert_eq!(out.captures[1].t_down_ms, 170);
        assert_eq!(out.captures[1].dt_up_ms, 60);
        assert!(out.captures[1].hovers.is_empty());
        // Click 1 captured its tail, including the exit that already sits
        // on the next click's position: the best predictor there is.
        let dts: Vec<u16> = out.captures[0].hovers.iter().map(|h| h.dt_ms).collect();
        assert_eq!(dts, vec![61, 80, 99, 109]);
        let last = out.captures[0].hovers[3];
        assert_eq!((last.x, last.y), (80.0, 90.0));
    }

    #[test]
    fn longer_activation_captures_no_fewer_hovers() {
        let session = one_click_session();
        let counts: Vec<usize> = [30u32, 50, 70, 120]
            .iter()
            .map(|&ms| {
                let cfg = AttackerConfig {
                    activation_ms: ms,
                    ..Default::default()
                };
                let out = run_attack(&session, &cfg, &DispatchPolicy::default()).unwrap();
                out.captures[0].hovers.len()
            })
            .collect();
        assert!(counts.windows(2).all(|w| w[0] <= w[1]), "{counts:?}");
        assert_eq!(*counts.last().unwrap(), 4);
    }

    #[test]
    fn max_hovers_truncates_the_tail() {
        let cfg = AttackerConfig {
            max_hovers: 2,
            ..Default::default()
        };
        let out = run_attack(&one_click_session(), &cfg, &DispatchPolicy::default()).unwrap();
        let dts: Vec<u16> = out.captures[0].hovers.iter().map(|h| h.dt_ms).collect();
        assert_eq!(dts, vec![61, 80], "keeps the earliest samples");
    }

    #[test]
    fn invalid_max_hovers_is_rejected() {
        for bad in [0usize, 5, 100] {
            let cfg = AttackerConfig {
                max_hovers: bad,
                ..Default::default()
            };
            let err = run_attack(&one_click_session(), &cfg, &DispatchPolicy::default());
            assert_eq!(err.unwrap_err(), ConfigError::BadMaxHovers(bad));
        }
    }

    #[test]
    fn down_anchor_watches_the_contact_not_the_tail() {
        let cfg = AttackerConfig {
            window_anchor: WindowAnchor::TouchDown,
            ..Default::default()
        };
        let out = run_attack(&one_click_session(), &cfg, &DispatchPolicy::default()).unwrap();
        // Window: down 60ms + 70 = 130ms. Contact runs to 120ms, leaving
        // room for exactly one post-up hover (121ms).
        let dts: Vec<u16> = out.captures[0].hovers.iter().map(|h| h.dt_ms).collect();
        assert_eq!(dts, vec![61]);
    }

    #[test]
    fn attack_over_synthesized_sessions_is_clean_and_complete() {
        for seed in [11u64, 12, 13] {
            let profile = default_profile(InputMethod::Stylus, 7);
            let session = synth_session(
                screen(),
                InputMethod::Stylus,
                &UseCase::BallGame { n_clicks: 25 },
                &profile,
                7,
                seed,
            )
            .unwrap();
            let out = run_attack(
                &session,
                &AttackerConfig::default(),
                &DispatchPolicy::default(),
            )
            .unwrap();
            assert_eq!(out.audit, StealthAudit::default(), "seed {seed}");
            assert_eq!(out.captures.len(), 25);
            for (c, truth) in out.captures.iter().zip(&session.truth_clicks) {
                assert_eq!(c.t_down_ms as u64, (truth.t_down_us + 500) / 1_000);
                assert!(!c.hovers.is_empty());
            }
        }
    }

    #[test]
    fn crc16_check_value() {
        assert_eq!(crc16(b"123456789"), 0x29B1);
        assert_eq!(crc16(b""), 0xFFFF);
    }

    fn sample_capture(n_hovers: usize) -> CapturedClick {
        CapturedClick {
            user_id: 12,
            click_index: 345,
            t_down_ms: 678_901,
            dt_up_ms: 64,
            hovers: (0..n_hovers)
                .map(|i| HoverPoint {
                    dt_ms: 70 + 19 * i as u16,
                    x: 100.4 + i as f64,
                    y: 200.6 + i as f64,
                })
                .collect(),
            method: InputMethod::Finger,
        }
    }

    #[test]
    fn record_round_trips_with_half_up_rounding() {
        for n in 0..=4usize {
            let c = sample_capture(n);
            let buf = encode_captured(&c).unwrap();
            let back = decode_captured(&buf).unwrap();
            assert_eq!(back.user_id, 12);
            assert_eq!(back.click_index, 345);
            assert_eq!(back.t_down_ms, 678_901);
            assert_eq!(back.dt_up_ms, 64);
            assert_eq!(back.method, InputMethod::Finger);
            assert_eq!(back.hovers.len(), n);
            for (i, h) in back.hovers.iter().enumerate() {
                assert_eq!(h.dt_ms, 70 + 19 * i as u16);
                // 100.4 rounds down, 200.6 rounds up.
                assert_eq!(h.x, (100 + i) as f64);
                assert_eq!(h.y, (201 + i) as f64);
            }
        }
    }

    #[test]
    fn every_single_byte_corruption_is_caught() {
        let c = sample_capture(3);
        let clean = encode_captured(&c).unwrap();
        for pos in 0..RECORD_BYTES {
            for flip in [0x01u8, 0x80, 0xFF] {
                let mut bad = clean;
                bad[pos] ^= flip;
                assert!(
                    decode_captured(&bad).is_err(),
                    "corruption at byte {pos} xor {flip:#x} slipped through"
                );
            }
        }
    }

    #[test]
    fn capture_stream_round_trips_and_rejects_truncation() {
        // Integral coordinates, so the u16 quantization is the identity
        // and the stream round-trips exactly.
        let captures: Vec<CapturedClick> = (0..3)
            .map(|i| {
                let mut c = sample_capture(i + 1);
                c.click_index = i as u16;
                for h in &mut c.hovers {
                    h.x = h.x.round();
                    h.y = h.y.round();
                }
                c
            })
            .collect();
        let bytes = write_captures(&captures).unwrap();
        assert_eq!(bytes.len(), 3 * RECORD_BYTES);
        assert_eq!(read_captures(&bytes).unwrap(), captures);

        let err = read_captures(&bytes[..bytes.len() - 7]).unwrap_err();
        assert_eq!(err, CaptureStreamError::Truncated(113));

        let mut bad = bytes.clone();
        bad[RECORD_BYTES + 3] ^= 0xFF;
        match read_captures(&bad).unwrap_err() {
            CaptureStreamError::Record { index: 1, .. } => {}
            other => panic!("wrong error: {other}"),
        }
    }

    #[test]
    fn attack_is_deterministic() {
        let profile = default_profile(InputMethod::Finger, 2);
        let session = synth_session(
            screen(),
            InputMethod::Finger,
            &UseCase::BallGame { n_clicks: 10 },
            &profile,
            2,
            99,
        )
        .unwrap();
        let a = run_attack(
            &session,
            &AttackerConfig::default(),
            &DispatchPolicy::default(),
        )
        .unwrap();
        let b = run_attack(
            &session,
            &AttackerConfig::default(),
            &DispatchPolicy::default(),
        )
        .unwrap();
        assert_eq!(a, b);
        assert_eq!(
            write_captures(&a.captures).unwrap(),
            write_captures(&b.captures).unwrap()
        );
    }
}
