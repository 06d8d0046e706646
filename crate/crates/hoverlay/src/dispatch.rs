//! Window stacking and event routing.
//!
//! The model mirrors how a mobile window manager hands input to a stack of
//! views. Views are axis-aligned rectangles with a unique z order. Active
//! views (`intercepts_events`) take part in hit testing; passive views are
//! skipped for routing but still obscure what lies beneath them. A view may
//! additionally watch for outside touches, in which case it learns the
//! timestamp of every touch delivered elsewhere, never the coordinates —
//! the record type carries no position at all.
//!
//! Routing rules:
//!
//! * Hover events go to the topmost active view containing the point,
//!   re-evaluated per event. With `foreground_only_hover` only
//!   foreground-owned views are eligible.
//! * A TouchDown binds its whole Down..Up stream to the view selected at
//!   Down time; stack changes during the contact do not re-bind.
//! * With `filter_touches_when_obscured`, a touch whose receiver is covered
//!   at the touch point by any higher-z view of a different owner is
//!   Blocked: nobody receives it, and the obstruction is logged.
//! * A touch consumed by an attacker-owned view is delivered there in full
//!   and logged as an obstruction: the foreground never saw the click.
//! * Stack commands that violate policy (`min_view_px`,
//!   `forbid_watch_outside`) or stack integrity (duplicate ids, duplicate
//!   z, removing what is not there) are recorded as illegal and ignored;
//!   they never crash a simulation.
//!
//! Commands act atomically at their timestamp. When a command and an event
//! share a timestamp the event is processed first, so a command scheduled
//! "in reaction to" an event at the same instant cannot affect that event.

use crate::events::{EventKind, Session};
use crate::geom::{Point, Rect};
use serde::{Deserialize, Serialize};

/// The implicit always-present application window: full screen, z = 0.
pub const FOREGROUND_VIEW_ID: u32 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Owner {
    Foreground,
    AttackerService,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewSpec {
    pub view_id: u32,
    pub z: i32,
    pub bounds: Rect,
    /// Active views take part in hit testing; passive ones are skipped but
    /// still obscure views beneath them.
    pub intercepts_events: bool,
    /// Receive timestamp-only notifications of touches delivered elsewhere.
    pub watch_outside: bool,
    pub owner: Owner,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CommandAction {
    Add(ViewSpec),
    Remove(u32),
}

/// A stack mutation at a point in time. Command timestamps must be distinct
/// from event timestamps; ties resolve events-first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackCommand {
    pub t_us: u64,
    pub action: CommandAction,
}

/// Countermeasure toggles. The default policy (everything off) reproduces
/// a stock permissive system.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DispatchPolicy {
    /// Hover events are only ever delivered to foreground-owned views.
    pub foreground_only_hover: bool,
    /// Touches landing on a receiver covered by a foreign view are dropped.
    pub filter_touches_when_obscured: bool,
    /// Minimum view edge length in px for added views; 0 = unrestricted.
    /// Any positive value outlaws zero-sized listener views.
    pub min_view_px: u32,
    /// Reject views that ask for outside-touch notifications.
    pub forbid_watch_outside: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DeliveryKind {
    /// Normal delivery with full event payload.
    Full,
    /// Timestamp-only outside-touch notification.
    OutsideNotify,
    /// Suppressed by touch filtering; nobody received the event.
    Blocked,
}

/// One routing decision. Deliberately position-free: what a view learned
/// beyond timing must be reconstructed from the session by whoever holds
/// it, and OutsideNotify receivers hold nothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeliveryRecord {
    pub t_us: u64,
    pub kind: EventKind,
    /// The selected receiver (Full/Blocked) or the notified watcher
    /// (OutsideNotify). None when no view contained the event.
    pub receiver: Option<u32>,
    pub delivery: DeliveryKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IllegalCommand {
    pub t_us: u64,
    pub reason: String,
}

/// Everything observable about a dispatch run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DeliveryLog {
    pub records: Vec<DeliveryRecord>,
    /// Timestamps of TouchDowns whose normal delivery was disturbed:
    /// either blocked by filtering or consumed by an attacker view.
    pub obstruction_events: Vec<u64>,
    pub illegal_commands: Vec<IllegalCommand>,
}

impl DeliveryLog {
    /// Full deliveries to one view, in stream order.
    pub fn full_to(&self, view_id: u32) -> impl Iterator<Item = &DeliveryRecord> {
        self.records
            .iter()
            .filter(move |r| r.delivery == DeliveryKind::Full && r.receiver == Some(view_id))
    }
}

/// True iff some higher-z view of a different owner contains the point.
///
/// Zero-sized views never cover anything. Passive views do cover: a window
/// above you obscures you whether or not it takes input, which is exactly
/// the situation touch filtering exists to flag.
pub fn coverage_check(stack: &[ViewSpec], subject: &ViewSpec, p: Point) -> bool {
    stack
        .iter()
        .any(|v| v.z > subject.z && v.owner != subject.owner && v.bounds.contains(p))
}

fn foreground_view(session: &Session) -> ViewSpec {
    ViewSpec {
        view_id: FOREGROUND_VIEW_ID,
        z: 0,
        bounds: Rect::new(
            0.0,
            0.0,
            session.screen.width_px as f64,
            session.screen.height_px as f64,
        ),
        intercepts_events: true,
        watch_outside: false,
        owner: Owner::Foreground,
    }
}

/// Applies one command to the stack, recording it as illegal (and leaving
/// the stack untouched) if it violates policy or stack integrity.
fn apply_command(
    stack: &mut Vec<ViewSpec>,
    cmd: &StackCommand,
    policy: &DispatchPolicy,
    illegal: &mut Vec<IllegalCommand>,
) {
    let mut reject = |t_us: u64, reason: String| {
        illegal.push(IllegalCommand { t_us, reason });
    };
    match &cmd.action {
        CommandAction::Add(v) => {
            if policy.forbid_watch_outside && v.watch_outside {
                return reject(cmd.t_us, "outside-touch watching is forbidden".into());
            }
            let min = policy.min_view_px as f64;
            if policy.min_view_px > 0 && (v.bounds.width() < min || v.bounds.height() < min) {
                return reject(
                    cmd.t_us,
                    format!("view below minimum size {}px", policy.min_view_px),
                );
            }
            if stack.iter().any(|s| s.view_id == v.view_id) {
                return reject(cmd.t_us, format!("duplicate view id {}", v.view_id));
            }
            if stack.iter().any(|s| s.z == v.z) {
                return reject(cmd.t_us, format!("duplicate z order {}", v.z));
            }
            stack.push(v.clone());
        }
        CommandAction::Remove(id) => {
            if *id == FOREGROUND_VIEW_ID {
                return reject(cmd.t_us, "cannot remove the foreground view".into());
            }
            match stack.iter().position(|s| s.view_id == *id) {
                Some(i) => {
                    stack.remove(i);
                }
                None => reject(cmd.t_us, format!("no live view with id {id}")),
            }
        }
    }
}

fn topmost(stack: &[ViewSpec], p: Point, foreground_only: bool) -> Option<&ViewSpec> {
    stack
        .iter()
        .filter(|v| v.intercepts_events && v.bounds.contains(p))
        .filter(|v| !foreground_only || v.owner == Owner::Foreground)
        .max_by_key(|v| v.z)
}

/// Routes every session event through the view stack as `commands` mutate
/// it, under `policy`. Pure: same inputs, same log.
pub fn dispatch(
    session: &Session,
    commands: &[StackCommand],
    policy: &DispatchPolicy,
) -> DeliveryLog {
    let mut log = DeliveryLog::default();
    let mut stack = vec![foreground_view(session)];
    // The live touch stream: receiver chosen at Down time and whether the
    // stream was blocked.
    let mut bound: Option<(Option<u32>, bool)> = None;

    let mut ci = 0usize;
    for e in &session.events {
        while ci < commands.len() && commands[ci].t_us < e.t_us {
            apply_command(&mut stack, &commands[ci], policy, &mut log.illegal_commands);
            ci += 1;
        }
        let p = e.pos();
        match e.kind {
            EventKind::HoverEnter | EventKind::HoverMove | EventKind::HoverExit => {
                let recv = topmost(&stack, p, policy.foreground_only_hover);
                log.records.push(DeliveryRecord {
                    t_us: e.t_us,
                    kind: e.kind,
                    receiver: recv.map(|v| v.view_id),
                    delivery: DeliveryKind::Full,
                });
            }
            EventKind::TouchDown => {
                let recv = topmost(&stack, p, false);
                let blocked = match recv {
                    Some(v) if policy.filter_touches_when_obscured => coverage_check(&stack, v, p),
                    _ => false,
                };
                let receiver = recv.map(|v| v.view_id);
                let to_attacker = recv.is_some_and(|v| v.owner == Owner::AttackerService);
                if blocked {
                    log.obstruction_events.push(e.t_us);
                    log.records.push(DeliveryRecord {
                        t_us: e.t_us,
                        kind: e.kind,
                        receiver,
                        delivery: DeliveryKind::Blocked,
                    });
                } else {
                    if to_attacker {
                        log.obstruction_events.push(e.t_us);
                    }
                    log.records.push(DeliveryRecord {
                        t_us: e.t_us,
                        kind: e.kind,
                        receiver,
                        delivery: DeliveryKind::Full,
                    });
                }
                bound = Some((receiver, blocked));
                notify_watchers(&stack, e, if blocked { None } else { receiver }, &mut log);
            }
            EventKind::TouchUp => {
                let (receiver, blocked) = bound.take().unwrap_or((None, false));
                log.records.push(DeliveryRecord {
                    t_us: e.t_us,
                    kind: e.kind,
                    receiver,
                    delivery: if blocked {
                        DeliveryKind::Blocked
                    } else {
                        DeliveryKind::Full
                    },
                });
                notify_watchers(&stack, e, if blocked { None } else { receiver }, &mut log);
            }
        }
    }
    for cmd in &commands[ci..] {
        apply_command(&mut stack, cmd, policy, &mut log.illegal_commands);
    }
    log
}

/// Timestamp-only notifications for watching views; the Full receiver of
/// the touch itself is exempt. Emitted in ascending view id order.
fn notify_watchers(
    stack: &[ViewSpec],
    e: &crate::events::InputEvent,
    full_receiver: Option<u32>,
    log: &mut DeliveryLog,
) {
    let mut watchers: Vec<u32> = stack
        .iter()
        .filter(|v| v.watch_outside && Some(v.view_id) != full_receiver)
        .map(|v| v.view_id)
        .collect();
    watchers.sort_unstable();
    for id in watchers {
        log.records.push(DeliveryRecord {
            t_us: e.t_us,
            kind: e.kind,
            receiver: Some(id),
            delivery: DeliveryKind::OutsideNotify,
        });
    }
}

pub mod reference {
    //! A from-scratch reference model of the routing rules, used to
    //! cross-check the incremental engine. It keeps no running state:
    //! every event re-derives the stack and the stream binding from the
    //! command list and the raw event stream. Slow and obviously correct.

    use super::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// The stack as of an event at `t_us` (commands strictly earlier than
    /// the event have applied), with illegal commands filtered the same way
    /// the engine filters them.
    fn stack_before(
        session: &Session,
        commands: &[StackCommand],
        policy: &DispatchPolicy,
        t_us: u64,
    ) -> Vec<ViewSpec> {
        let mut stack = vec![foreground_view(session)];
        let mut sink = Vec::new();
        for c in commands.iter().filter(|c| c.t_us < t_us) {
            apply_command(&mut stack, c, policy, &mut sink);
        }
        stack
    }

    /// Index of the TouchDown that opened the stream a touch event at
    /// `index` belongs to, by scanning the stream from the beginning.
    fn stream_down_index(session: &Session, index: usize) -> Option<usize> {
        let mut open: Option<usize> = None;
        for (i, e) in session.events.iter().enumerate().take(index + 1) {
            match e.kind {
                EventKind::TouchDown => open = Some(i),
                EventKind::TouchUp if i < index => open = None,
                _ => {}
            }
        }
        open
    }

    /// Reference dispatch: identical observable behaviour to
    /// [`super::dispatch`], derived from scratch per event.
    pub fn dispatch_reference(
        session: &Session,
        commands: &[StackCommand],
        policy: &DispatchPolicy,
    ) -> DeliveryLog {
        let mut log = DeliveryLog::default();
        for (i, e) in session.events.iter().enumerate() {
            let p = e.pos();
            match e.kind {
                k if k.is_hover() => {
                    let stack = stack_before(session, commands, policy, e.t_us);
                    let recv = topmost(&stack, p, policy.foreground_only_hover);
                    log.records.push(DeliveryRecord {
                        t_us: e.t_us,
                        kind: e.kind,
                        receiver: recv.map(|v| v.view_id),
                        delivery: DeliveryKind::Full,
                    });
                }
                _ => {
                    // Touches: the binding decision is a pure function of the
                    // stream's Down event.
                    let down_i = stream_down_index(session, i);
                    let (receiver, blocked) = match down_i {
                        Some(di) => {
                            let de = &session.events[di];
                            let stack = stack_before(session, commands, policy, de.t_us);
                            let recv = topmost(&stack, de.pos(), false);
                            let blocked = match recv {
                                Some(v) if policy.filter_touches_when_obscured => {
                                    coverage_check(&stack, v, de.pos())
                                }
                                _ => false,
                            };
                            (recv.map(|v| v.view_id), blocked)
                        }
                        None => (None, false),
                    };
                    if e.kind == EventKind::TouchDown {
                        let stack = stack_before(session, commands, policy, e.t_us);
                        let is_attacker = receiver.is_some_and(|id| {
                            stack
                                .iter()
                                .any(|v| v.view_id == id && v.owner == Owner::AttackerService)
                        });
                        if blocked || is_attacker {
                            log.obstruction_events.push(e.t_us);
                        }
                    }
                    log.records.push(DeliveryRecord {
                        t_us: e.t_us,
                        kind: e.kind,
                        receiver,
                        delivery: if blocked {
                            DeliveryKind::Blocked
                        } else {
                            DeliveryKind::Full
                        },
                    });
                    let stack = stack_before(session, commands, policy, e.t_us);
                    notify_watchers(&stack, e, if blocked { None } else { receiver }, &mut log);
                }
            }
        }
        // Illegal commands, replayed once over the whole timeline.
        let mut stack = vec![foreground_view(session)];
        for c in commands {
            apply_command(&mut stack, c, policy, &mut log.illegal_commands);
        }
        log
    }

    /// A random dispatch instance: up to 20 events, 3 distinct extra views,
    /// 6 commands, and random policy toggles. Event times are even
    /// microseconds and command times odd, keeping them distinct as the
    /// contract requires. Deterministic in `seed`.
    pub fn random_instance(seed: u64) -> (Session, Vec<StackCommand>, DispatchPolicy) {
        use crate::events::{InputEvent, InputMethod, ScreenSpec};
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let screen = ScreenSpec {
            width_px: 400,
            height_px: 600,
            hover_range_mm: 20.0,
        };

        let n_events = rng.gen_range(1..=20);
        let mut t = 0u64;
        let mut events = Vec::new();
        for _ in 0..n_events {
            t += rng.gen_range(1..=40) * 2; // even
            let kind = match rng.gen_range(0..10) {
                0 => EventKind::HoverEnter,
                1..=4 => EventKind::HoverMove,
                5 => EventKind::HoverExit,
                6..=7 => EventKind::TouchDown,
                _ => EventKind::TouchUp,
            };
            events.push(InputEvent {
                t_us: t,
                kind,
                x: rng.gen_range(-50.0..450.0),
                y: rng.gen_range(-50.0..650.0),
            });
        }
        let t_max = t + 80;

        let mut commands = Vec::new();
        let mut ct = 0u64;
        for _ in 0..rng.gen_range(0..=8) {
            ct += rng.gen_range(0..=t_max / 8) * 2 + 1; // odd
            let action = if rng.gen_bool(0.75) {
                let zero_sized = rng.gen_bool(0.2);
                let x0 = rng.gen_range(0.0..300.0);
                let y0 = rng.gen_range(0.0..500.0);
                let (x1, y1) = if zero_sized {
                    (x0, y0)
                } else {
                    (
                        x0 + rng.gen_range(1.0..400.0),
                        y0 + rng.gen_range(1.0..400.0),
                    )
                };
                CommandAction::Add(ViewSpec {
                    view_id: rng.gen_range(1..=8),
                    z: rng.gen_range(-3..15),
                    bounds: Rect::new(x0, y0, x1, y1),
                    intercepts_events: rng.gen_bool(0.65),
                    watch_outside: rng.gen_bool(0.3),
                    owner: if rng.gen_bool(0.5) {
                        Owner::AttackerService
                    } else {
                        Owner::Foreground
                    },
                })
            } else {
                CommandAction::Remove(rng.gen_range(0..=8))
            };
            commands.push(StackCommand { t_us: ct, action });
        }

        let mut policy = DispatchPolicy {
            foreground_only_hover: rng.gen_bool(0.3),
            filter_touches_when_obscured: rng.gen_bool(0.4),
            min_view_px: *[0u32, 0, 1, 50].get(rng.gen_range(0..4)).unwrap(),
            forbid_watch_outside: rng.gen_bool(0.2),
        };
        // A quarter of instances stage the touch-filter scenario outright:
        // a passive foreign cover over most of the screen plus the filter
        // policy, so blocking is exercised often rather than by luck.
        if rng.gen_bool(0.25) {
            policy.filter_touches_when_obscured = true;
            policy.min_view_px = 0;
            commands.insert(
                0,
                StackCommand {
                    t_us: 1,
                    action: CommandAction::Add(ViewSpec {
                        view_id: 9,
                        z: 100,
                        bounds: Rect::new(-50.0, -50.0, 450.0, 650.0),
                        intercepts_events: false,
                        watch_outside: false,
                        owner: Owner::AttackerService,
                    }),
                },
            );
        }

        let session = Session {
            screen,
            method: InputMethod::Stylus,
            user_id: 0,
            events,
            truth_clicks: Vec::new(),
            seed,
        };
        (session, commands, policy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::{InputEvent, InputMethod, ScreenSpec};

    fn screen() -> ScreenSpec {
        ScreenSpec {
            width_px: 400,
            height_px: 600,
            hover_range_mm: 20.0,
        }
    }

    fn session(events: Vec<InputEvent>) -> Session {
        Session {
            screen: screen(),
            method: InputMethod::Stylus,
            user_id: 0,
            events,
            truth_clicks: Vec::new(),
            seed: 0,
        }
    }

    fn ev(t_us: u64, kind: EventKind, x: f64, y: f64) -> InputEvent {
        InputEvent { t_us, kind, x, y }
    }

    fn overlay(id: u32, z: i32) -> ViewSpec {
        ViewSpec {
            view_id: id,
            z,
            bounds: Rect::new(0.0, 0.0, 400.0, 600.0),
            intercepts_events: true,
            watch_outside: false,
            owner: Owner::AttackerService,
        }
    }

    fn listener(id: u32, z: i32) -> ViewSpec {
        ViewSpec {
            view_id: id,
            z,
            bounds: Rect::new(0.0, 0.0, 0.0, 0.0),
            intercepts_events: true,
            watch_outside: true,
            owner: Owner::AttackerService,
        }
    }

    fn click_events() -> Vec<InputEvent> {
        vec![
            ev(1_000, EventKind::HoverMove, 5.0, 5.0),
            ev(2_000, EventKind::HoverExit, 5.0, 5.0),
            ev(3_000, EventKind::TouchDown, 5.0, 5.0),
            ev(4_000, EventKind::TouchUp, 5.0, 5.0),
            ev(5_000, EventKind::HoverMove, 6.0, 6.0),
            ev(6_000, EventKind::HoverMove, 7.0, 7.0),
        ]
    }

    #[test]
    fn quiet_stack_delivers_everything_to_foreground() {
        let s = session(click_events());
        let log = dispatch(&s, &[], &DispatchPolicy::default());
        assert_eq!(log.records.len(), 6);
        for r in &log.records {
            assert_eq!(r.receiver, Some(FOREGROUND_VIEW_ID));
            assert_eq!(r.delivery, DeliveryKind::Full);
        }
        assert!(log.obstruction_events.is_empty());
        assert!(log.illegal_commands.is_empty());
    }

    /// Hand-simulated trace: overlay added mid-contact receives only the
    /// post-up hovers; the bound click stays with the foreground.
    #[test]
    fn overlay_added_during_contact_gets_only_post_up_hovers() {
        let s = session(click_events());
        let commands = vec![StackCommand {
            t_us: 3_500,
            action: CommandAction::Add(overlay(7, 5)),
        }];
        let log = dispatch(&s, &commands, &DispatchPolicy::default());
        let expect = |t_us, kind, receiver| DeliveryRecord {
            t_us,
            kind,
            receiver: Some(receiver),
            delivery: DeliveryKind::Full,
        };
        assert_eq!(
            log.records,
            vec![
                expect(1_000, EventKind::HoverMove, 0),
                expect(2_000, EventKind::HoverExit, 0),
                expect(3_000, EventKind::TouchDown, 0),
                expect(4_000, EventKind::TouchUp, 0),
                expect(5_000, EventKind::HoverMove, 7),
                expect(6_000, EventKind::HoverMove, 7),
            ]
        );
        assert!(log.obstruction_events.is_empty());
    }

    #[test]
    fn watcher_gets_timestamp_only_notifications_for_down_and_up() {
        let s = session(click_events());
        let commands = vec![StackCommand {
            t_us: 1,
            action: CommandAction::Add(listener(9, 3)),
        }];
        let log = dispatch(&s, &commands, &DispatchPolicy::default());
        let notifies: Vec<&DeliveryRecord> = log
            .records
            .iter()
            .filter(|r| r.delivery == DeliveryKind::OutsideNotify)
            .collect();
        assert_eq!(notifies.len(), 2);
        assert_eq!(notifies[0].t_us, 3_000);
        assert_eq!(notifies[0].kind, EventKind::TouchDown);
        assert_eq!(notifies[1].t_us, 4_000);
        assert_eq!(notifies[1].kind, EventKind::TouchUp);
        assert!(notifies.iter().all(|r| r.receiver == Some(9)));
        // The zero-sized listener never receives anything in full.
        assert_eq!(log.full_to(9).count(), 0);
    }

    #[test]
    fn overlay_live_at_down_consumes_the_click_and_is_logged() {
        let s = session(click_events());
        let commands = vec![StackCommand {
            t_us: 2_500,
            action: CommandAction::Add(overlay(7, 5)),
        }];
        let log = dispatch(&s, &commands, &DispatchPolicy::default());
        let down = &log.records[2];
        assert_eq!(down.kind, EventKind::TouchDown);
        assert_eq!(down.receiver, Some(7));
        assert_eq!(down.delivery, DeliveryKind::Full);
        // Binding holds for the up as well.
        let up = &log.records[3];
        assert_eq!(up.receiver, Some(7));
        assert_eq!(log.obstruction_events, vec![3_000]);
    }

    #[test]
    fn stream_binding_survives_receiver_removal() {
        let s = session(click_events());
        let commands = vec![
            StackCommand {
                t_us: 2_500,
                action: CommandAction::Add(overlay(7, 5)),
            },
            StackCommand {
                t_us: 3_501,
                action: CommandAction::Remove(7),
            },
        ];
        let log = dispatch(&s, &commands, &DispatchPolicy::default());
        assert_eq!(log.records[3].receiver, Some(7), "up follows the binding");
        assert_eq!(log.records[4].receiver, Some(FOREGROUND_VIEW_ID));
    }

    #[test]
    fn foreground_only_hover_starves_the_overlay() {
        let s = session(click_events());
        let commands = vec![StackCommand {
            t_us: 1,
            action: CommandAction::Add(overlay(7, 5)),
        }];
        let policy = DispatchPolicy {
            foreground_only_hover: true,
            ..Default::default()
        };
        let log = dispatch(&s, &commands, &policy);
        for r in log.records.iter().filter(|r| r.kind.is_hover()) {
            assert_eq!(r.receiver, Some(FOREGROUND_VIEW_ID));
        }
        // Touches are unaffected by the hover restriction.
        assert_eq!(log.records[2].receiver, Some(7));
    }

    #[test]
    fn passive_foreign_cover_blocks_filtered_touches() {
        let s = session(click_events());
        let mut passive = overlay(7, 5);
        passive.intercepts_events = false;
        let commands = vec![StackCommand {
            t_us: 1,
            action: CommandAction::Add(passive),
        }];
        let policy = DispatchPolicy {
            filter_touches_when_obscured: true,
            ..Default::default()
        };
        let log = dispatch(&s, &commands, &policy);
        // Passive views are invisible to routing: hovers reach the
        // foreground...
        assert_eq!(log.records[0].receiver, Some(FOREGROUND_VIEW_ID));
        // ...but the covered click is blocked.
        assert_eq!(log.records[2].delivery, DeliveryKind::Blocked);
        assert_eq!(log.records[2].receiver, Some(FOREGROUND_VIEW_ID));
        assert_eq!(log.records[3].delivery, DeliveryKind::Blocked);
        assert_eq!(log.obstruction_events, vec![3_000]);

        // Without the policy the same stack is harmless.
        let log = dispatch(&s, &commands, &DispatchPolicy::default());
        assert_eq!(log.records[2].delivery, DeliveryKind::Full);
        assert!(log.obstruction_events.is_empty());
    }

    #[test]
    fn illegal_commands_are_observable_and_ignored() {
        let s = session(click_events());
        let commands = vec![
            StackCommand {
                t_us: 1,
                action: CommandAction::Add(listener(9, 3)),
            },
            StackCommand {
                t_us: 3,
                action: CommandAction::Add(listener(9, 4)),
            },
            StackCommand {
                t_us: 5,
                action: CommandAction::Remove(42),
            },
            StackCommand {
                t_us: 7,
                action: CommandAction::Remove(FOREGROUND_VIEW_ID),
            },
        ];
        let log = dispatch(&s, &commands, &DispatchPolicy::default());
        assert_eq!(log.illegal_commands.len(), 3);
        assert!(log.illegal_commands[0].reason.contains("duplicate view id"));
        assert!(log.illegal_commands[1].reason.contains("no live view"));
        assert!(log.illegal_commands[2].reason.contains("foreground"));
    }

    #[test]
    fn policy_rejects_tiny_and_watching_views() {
        let s = session(click_events());
        let commands = vec![
            StackCommand {
                t_us: 1,
                action: CommandAction::Add(listener(9, 3)),
            },
            StackCommand {
                t_us: 3,
                action: CommandAction::Add(overlay(7, 5)),
            },
        ];
        let policy = DispatchPolicy {
            min_view_px: 1,
            forbid_watch_outside: true,
            ..Default::default()
        };
        let log = dispatch(&s, &commands, &policy);
        assert_eq!(log.illegal_commands.len(), 1, "listener rejected");
        assert!(log.illegal_commands[0].reason.contains("forbidden"));
        // The full-size overlay passes min_view_px and, once live, takes
        // all four hovers plus the click.
        assert_eq!(log.full_to(7).count(), 6);

        let policy = DispatchPolicy {
            min_view_px: 1,
            ..Default::default()
        };
        let log = dispatch(&s, &commands, &policy);
        assert!(log.illegal_commands[0].reason.contains("minimum size"));
    }

    #[test]
    fn coverage_check_examples() {
        let s = session(vec![]);
        let fg = foreground_view(&s);
        // Zero-sized listener above the foreground covers nothing.
        assert!(!coverage_check(
            &[fg.clone(), listener(9, 3)],
            &fg,
            Point::new(0.0, 0.0)
        ));
        // Full-screen overlay above covers everywhere.
        let stack = [fg.clone(), overlay(7, 5)];
        for p in [Point::new(0.0, 0.0), Point::new(399.0, 599.0)] {
            assert!(coverage_check(&stack, &fg, p));
        }
        // Same-owner views never cover each other.
        let mut fg_dialog = overlay(8, 6);
        fg_dialog.owner = Owner::Foreground;
        assert!(!coverage_check(
            &[fg.clone(), fg_dialog],
            &fg,
            Point::new(1.0, 1.0)
        ));
        // Empty stack: nothing covers.
        assert!(!coverage_check(&[], &fg, Point::new(1.0, 1.0)));
    }

    #[test]
    fn up_without_down_routes_to_nobody() {
        let s = session(vec![ev(1_000, EventKind::TouchUp, 5.0, 5.0)]);
        let log = dispatch(&s, &[], &DispatchPolicy::default());
        assert_eq!(log.records[0].receiver, None);
    }

    #[test]
    fn engine_matches_reference_on_random_instances() {
        for seed in 0..300u64 {
            let (s, commands, policy) = reference::random_instance(seed);
            let a = dispatch(&s, &commands, &policy);
            let b = reference::dispatch_reference(&s, &commands, &policy);
            assert_eq!(a, b, "divergence at seed {seed}");
        }
    }

    #[test]
    fn random_instances_exercise_every_delivery_kind() {
        let mut kinds = std::collections::HashSet::new();
        let mut saw_illegal = false;
        let mut saw_obstruction = false;
        for seed in 0..300u64 {
            let (s, commands, policy) = reference::random_instance(seed);
            let log = dispatch(&s, &commands, &policy);
            for r in &log.records {
                kinds.insert(r.delivery);
            }
            saw_illegal |= !log.illegal_commands.is_empty();
            saw_obstruction |= !log.obstruction_events.is_empty();
        }
        assert!(kinds.contains(&DeliveryKind::Full));
        assert!(kinds.contains(&DeliveryKind::OutsideNotify));
        assert!(kinds.contains(&DeliveryKind::Blocked));
        assert!(saw_illegal);
        assert!(saw_obstruction);
    }
}
