//! Synthetic session generation.
//!
//! Sessions are built from a sequence of ground-truth clicks joined by
//! straight hover paths with minimum-jerk time parameterization, the
//! standard model for aimed human pointing motion: the device starts slow,
//! peaks mid-path, and decelerates into the target, which concentrates
//! hover samples near click sites.
//!
//! The hover digitizer is modeled as a fixed-cadence sampler with per-sample
//! phase noise: after each lift-off the first sample fires almost
//! immediately, then samples follow a `sample_mean_ms` grid, each displaced
//! by `Normal(0, sample_jitter_ms)` and never closer than 5ms to its
//! predecessor. Sensed hover positions are the true path position plus iid
//! Gaussian noise plus a per-click systematic offset
//! `offset_bias_px + direction_gain_px * unit_movement_direction`, which is
//! what makes finger hover data noisy but learnable.
//!
//! Everything is drawn from a single seeded stream: same inputs, same
//! session, byte for byte.

use crate::events::{Click, EventKind, InputEvent, InputMethod, ScreenSpec, Session};
use crate::geom::Point;
use crate::layout::{make_layout, LayoutError};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

/// Click duration lognormal spread (dimensionless, log-space).
const CLICK_DURATION_SIGMA_LOG: f64 = 0.3;
/// Typing aims scatter around key centers with this spread before clamping.
const AIM_SIGMA_PX: f64 = 10.0;
/// Free-form taps keep this distance from screen edges.
const BALLGAME_MARGIN_PX: f64 = 20.0;
/// Kinematic floor on lift-off to next contact. Humans do not re-click
/// within a few tens of milliseconds of leaving the glass; the floor also
/// guarantees that a 70ms post-click observation window never overlaps the
/// next touch.
const MIN_UP_TO_DOWN_MS: f64 = 100.0;
/// The digitizer reports once almost immediately after the device enters
/// the hover band, then settles into its sampling grid.
const FIRST_SAMPLE_DELAY_MS: f64 = 1.0;
/// Hard floor between consecutive hover samples.
const MIN_SAMPLE_SPACING_MS: f64 = 5.0;
/// The hover exit fires this long before the touch down.
const EXIT_LEAD_MS: f64 = 1.0;

/// Per-method generation parameters. Distances in px, times in ms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryProfile {
    /// Hover sampling grid period.
    pub sample_mean_ms: f64,
    /// Per-sample phase noise (standard deviation).
    pub sample_jitter_ms: f64,
    /// Iid Gaussian noise on every sensed hover position, per axis.
    pub path_noise_px: f64,
    /// Constant sensing offset, e.g. a user's finger-pad geometry.
    pub offset_bias_px: [f64; 2],
    /// Offset along the movement direction, scaled by this gain.
    pub direction_gain_px: f64,
    /// Median contact duration; lognormal with sigma_log 0.3.
    pub click_duration_median_ms: f64,
    /// Median down-to-down interval.
    pub interclick_median_ms: f64,
    /// Lognormal spread of the down-to-down interval.
    pub interclick_sigma_log: f64,
}

/// What the simulated user is doing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum UseCase {
    /// Free-form taps at uniform random positions (a casual game).
    BallGame { n_clicks: u32 },
    /// Typing `text` on the on-screen keyboard.
    Typing { text: String },
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SynthError {
    #[error("use case produces no clicks")]
    EmptyUseCase,
    #[error("text character {ch:?} at index {index} is not on the keyboard")]
    UnsupportedChar { ch: char, index: usize },
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error("screen too small for free-form taps with a {BALLGAME_MARGIN_PX}px margin")]
    ScreenTooSmall,
}

/// The calibrated per-method defaults. Stylus hover sensing is tight
/// (a couple of px of noise, no systematic offset); finger sensing is noisy
/// and systematically displaced, with a per-user constant bias drawn once
/// from `Normal(0, 30px)` per axis. The bias is a pure function of
/// `user_id`, independent of any session seed.
pub fn default_profile(method: InputMethod, user_id: u32) -> TrajectoryProfile {
    let base = TrajectoryProfile {
        sample_mean_ms: 19.0,
        sample_jitter_ms: 4.0,
        path_noise_px: 3.0,
        offset_bias_px: [0.0, 0.0],
        direction_gain_px: 0.0,
        click_duration_median_ms: 60.0,
        interclick_median_ms: 400.0,
        interclick_sigma_log: 0.45,
    };
    match method {
        InputMethod::Stylus => base,
        InputMethod::Finger => {
            let mut rng = ChaCha8Rng::seed_from_u64(user_bias_seed(user_id));
            let bias = Normal::new(0.0, 30.0).unwrap();
            TrajectoryProfile {
                path_noise_px: 40.0,
                direction_gain_px: 60.0,
                offset_bias_px: [bias.sample(&mut rng), bias.sample(&mut rng)],
                ..base
            }
        }
    }
}

fn user_bias_seed(user_id: u32) -> u64 {
    // Domain-separated so session seeds can never collide with bias seeds.
    0x6269_6173_0000_0000u64 ^ user_id as u64
}

/// Minimum-jerk position profile: fraction of the path covered at time
/// fraction `tau` in [0, 1].
fn minimum_jerk(tau: f64) -> f64 {
    let t = tau.clamp(0.0, 1.0);
    t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
}

struct Segment {
    a: Point,
    b: Point,
    t_start_us: u64,
    t_end_us: u64,
}

struct Emitter {
    events: Vec<InputEvent>,
    last_t_us: u64,
    width: f64,
    height: f64,
}

impl Emitter {
    fn push(&mut self, t_us: u64, kind: EventKind, x: f64, y: f64) {
        // Strictly increasing timestamps; 1us separation on rounding ties.
        let t = t_us.max(self.last_t_us + 1);
        self.last_t_us = t;
        self.events.push(InputEvent {
            t_us: t,
            kind,
            x: x.clamp(0.0, self.width - 1e-9),
            y: y.clamp(0.0, self.height - 1e-9),
        });
    }
}

/// Generates one session. Deterministic in `(screen, method, use_case,
/// profile, user_id, seed)`; the wall clock is never consulted.
pub fn synth_session(
    screen: ScreenSpec,
    method: InputMethod,
    use_case: &UseCase,
    profile: &TrajectoryProfile,
    user_id: u32,
    seed: u64,
) -> Result<Session, SynthError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = screen.width_px as f64;
    let h = screen.height_px as f64;

    // Phase 1: ground-truth click positions and labels.
    let mut points: Vec<Point> = Vec::new();
    let mut labels: Vec<Option<char>> = Vec::new();
    match use_case {
        UseCase::BallGame { n_clicks } => {
            if *n_clicks == 0 {
                return Err(SynthError::EmptyUseCase);
            }
            if w <= 2.0 * BALLGAME_MARGIN_PX || h <= 2.0 * BALLGAME_MARGIN_PX {
                return Err(SynthError::ScreenTooSmall);
            }
            for _ in 0..*n_clicks {
                points.push(Point::new(
                    rng.gen_range(BALLGAME_MARGIN_PX..w - BALLGAME_MARGIN_PX),
                    rng.gen_range(BALLGAME_MARGIN_PX..h - BALLGAME_MARGIN_PX),
                ));
                labels.push(None);
            }
        }
        UseCase::Typing { text } => {
            if text.is_empty() {
                return Err(SynthError::EmptyUseCase);
            }
            let layout = make_layout(screen.width_px, screen.height_px)?;
            let aim = Normal::new(0.0, AIM_SIGMA_PX).unwrap();
            for (index, ch) in text.chars().enumerate() {
                let rect = layout
                    .key_rect(ch)
                    .ok_or(SynthError::UnsupportedChar { ch, index })?;
                let c = rect.center();
                // Clamp strictly inside the half-open rect so the intended
                // label stays true under key_at.
                let x = (c.x + aim.sample(&mut rng)).clamp(rect.x0 + 0.5, rect.x1 - 0.5);
                let y = (c.y + aim.sample(&mut rng)).clamp(rect.y0 + 0.5, rect.y1 - 0.5);
                points.push(Point::new(x, y));
                labels.push(Some(ch));
            }
        }
    }
    let n = points.len();

    // Phase 2: contact timing. Down-to-down intervals are lognormal with a
    // kinematic floor on the lift-off to next contact gap.
    let interclick = LogNormal::new(
        profile.interclick_median_ms.ln(),
        profile.interclick_sigma_log,
    )
    .unwrap();
    let duration = LogNormal::new(
        profile.click_duration_median_ms.ln(),
        CLICK_DURATION_SIGMA_LOG,
    )
    .unwrap();

    let mut t_down_ms: Vec<f64> = Vec::with_capacity(n);
    let mut t_up_ms: Vec<f64> = Vec::with_capacity(n);
    for i in 0..n {
        let d = if i == 0 {
            interclick.sample(&mut rng)
        } else {
            let cand = t_down_ms[i - 1] + interclick.sample(&mut rng);
            let floor: f64 = t_up_ms[i - 1] + MIN_UP_TO_DOWN_MS;
            cand.max(floor)
        };
        t_down_ms.push(d);
        t_up_ms.push(d + duration.sample(&mut rng));
    }
    // The device keeps hovering toward one more (never clicked) target so
    // the last click has a normal post-click hover tail.
    let phantom_end_ms =
        (t_down_ms[n - 1] + interclick.sample(&mut rng)).max(t_up_ms[n - 1] + MIN_UP_TO_DOWN_MS);

    // Phase 3: path endpoints around the clicks.
    let start = Point::new(
        rng.gen_range(BALLGAME_MARGIN_PX..w - BALLGAME_MARGIN_PX),
        rng.gen_range(BALLGAME_MARGIN_PX..h - BALLGAME_MARGIN_PX),
    );
    let phantom_target = Point::new(
        rng.gen_range(BALLGAME_MARGIN_PX..w - BALLGAME_MARGIN_PX),
        rng.gen_range(BALLGAME_MARGIN_PX..h - BALLGAME_MARGIN_PX),
    );

    let to_us = |ms: f64| (ms * 1000.0).round() as u64;
    let mut segments = Vec::with_capacity(n + 1);
    segments.push(Segment {
        a: start,
        b: points[0],
        t_start_us: 0,
        t_end_us: to_us(t_down_ms[0]),
    });
    for i in 1..n {
        segments.push(Segment {
            a: points[i - 1],
            b: points[i],
            t_start_us: to_us(t_up_ms[i - 1]),
            t_end_us: to_us(t_down_ms[i]),
        });
    }
    segments.push(Segment {
        a: points[n - 1],
        b: phantom_target,
        t_start_us: to_us(t_up_ms[n - 1]),
        t_end_us: to_us(phantom_end_ms),
    });

    // Phase 4: emit hover paths and touches.
    let mut em = Emitter {
        events: Vec::new(),
        last_t_us: 0,
        width: w,
        height: h,
    };
    let phase = Normal::new(0.0, profile.sample_jitter_ms).unwrap();
    let jitter = Normal::new(0.0, profile.path_noise_px).unwrap();

    for (si, seg) in segments.iter().enumerate() {
        let t_total_ms = (seg.t_end_us - seg.t_start_us) as f64 / 1000.0;
        let dx = seg.b.x - seg.a.x;
        let dy = seg.b.y - seg.a.y;
        let dist = (dx * dx + dy * dy).sqrt();
        let (ux, uy) = if dist > 1e-9 {
            (dx / dist, dy / dist)
        } else {
            (0.0, 0.0)
        };
        let off_x = profile.offset_bias_px[0] + profile.direction_gain_px * ux;
        let off_y = profile.offset_bias_px[1] + profile.direction_gain_px * uy;

        let sense = |t_ms: f64, r: &mut ChaCha8Rng, jit: &Normal<f64>| -> (f64, f64) {
            let s = minimum_jerk(t_ms / t_total_ms);
            (
                seg.a.x + dx * s + off_x + jit.sample(r),
                seg.a.y + dy * s + off_y + jit.sample(r),
            )
        };

        // Hover samples on the phase-noise grid, stopping short of the exit.
        let exit_ms = t_total_ms - EXIT_LEAD_MS;
        let mut prev_ms = -f64::INFINITY;
        let mut k = 0u64;
        loop {
            let mut t_ms = FIRST_SAMPLE_DELAY_MS + k as f64 * profile.sample_mean_ms;
            if k > 0 {
                t_ms += phase.sample(&mut rng);
            }
            if t_ms < prev_ms + MIN_SAMPLE_SPACING_MS {
                t_ms = prev_ms + MIN_SAMPLE_SPACING_MS;
            }
            // Grid exhausted when the undisturbed grid point passes the exit.
            if FIRST_SAMPLE_DELAY_MS + k as f64 * profile.sample_mean_ms >= exit_ms - 0.3
                || t_ms >= exit_ms - 0.3
            {
                break;
            }
            let kind = if k == 0 {
                EventKind::HoverEnter
            } else {
                EventKind::HoverMove
            };
            let (x, y) = sense(t_ms, &mut rng, &jitter);
            em.push(seg.t_start_us + to_us(t_ms), kind, x, y);
            prev_ms = t_ms;
            k += 1;
        }

        let (ex, ey) = sense(exit_ms.max(0.0), &mut rng, &jitter);
        em.push(
            seg.t_end_us.saturating_sub(to_us(EXIT_LEAD_MS)),
            EventKind::HoverExit,
            ex,
            ey,
        );

        if si < n {
            // Contact carries the true position; the hover plane is silent
            // until the device lifts off again.
            let p = points[si];
            em.push(to_us(t_down_ms[si]), EventKind::TouchDown, p.x, p.y);
            em.push(to_us(t_up_ms[si]), EventKind::TouchUp, p.x, p.y);
        }
    }

    let truth_clicks = (0..n)
        .map(|i| Click {
            t_down_us: to_us(t_down_ms[i]),
            t_up_us: to_us(t_up_ms[i]),
            x: points[i].x,
            y: points[i].y,
            key_label: labels[i],
        })
        .collect();

    Ok(Session {
        screen,
        method,
        user_id,
        events: em.events,
        truth_clicks,
        seed,
    })
}
