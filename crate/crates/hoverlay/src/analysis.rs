//! What an attacker does with a capture stream besides regression:
//! spotting when a keyboard is in use, timing side channels, and text
//! reconstruction scoring.

use crate::attacker::CapturedClick;
use crate::geom::Rect;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("no captures to analyze")]
    NoCaptures,
}

/// Tuning for the keyboard-use detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeuristicConfig {
    /// Where the keyboard lives when shown (the lower band of the screen).
    pub keyboard_region: Rect,
    /// Refined mode: runs shorter than this are discarded as stray taps.
    pub min_seq_len: usize,
    /// Refined mode: a genuine typing burst starts at least this long
    /// after the preceding click, because the field tap plus the keyboard
    /// slide-in take time. Hastier bursts are discarded.
    pub first_key_delay_ms: u32,
    /// Apply the two refinements above; otherwise any in-region run,
    /// however short or hasty, is reported.
    pub refined: bool,
}

impl HeuristicConfig {
    /// Defaults matched to [`crate::layout::make_layout`]: the keyboard
    /// band is the bottom two fifths of the given screen.
    pub fn for_screen(width_px: u32, height_px: u32) -> HeuristicConfig {
        let h = height_px as f64;
        HeuristicConfig {
            keyboard_region: Rect::new(
                0.0,
                h - (height_px as u64 * 2 / 5) as f64,
                width_px as f64,
                h,
            ),
            min_seq_len: 4,
            first_key_delay_ms: 500,
            refined: true,
        }
    }
}

/// Half-open range `start..end` of capture indices forming one suspected
/// typing burst.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    pub fn contains(&self, i: usize) -> bool {
        self.start <= i && i < self.end
    }
}

fn first_hover_in_region(c: &CapturedClick, region: &Rect) -> bool {
    c.hovers
        .first()
        .is_some_and(|h| region.contains(crate::geom::Point::new(h.x, h.y)))
}

/// Finds suspected typing bursts: maximal runs of captures whose first
/// hover falls inside the keyboard region. A capture without hovers gives
/// the detector nothing to look at and breaks any run.
///
/// Refined mode drops runs that are too short to be words and runs that
/// start implausibly soon after the preceding click.
pub fn detect_keyboard(captures: &[CapturedClick], config: &HeuristicConfig) -> Vec<Segment> {
    let mut segments = Vec::new();
    let mut run_start: Option<usize> = None;
    for i in 0..=captures.len() {
        let in_region =
            i < captures.len() && first_hover_in_region(&captures[i], &config.keyboard_region);
        match (run_start, in_region) {
            (None, true) => run_start = Some(i),
            (Some(s), false) => {
                segments.push(Segment { start: s, end: i });
                run_start = None;
            }
            _ => {}
        }
    }
    if !config.refined {
        return segments;
    }
    segments
        .into_iter()
        .filter(|seg| {
            if seg.len() < config.min_seq_len {
                return false;
            }
            if seg.start > 0 {
                let prev = &captures[seg.start - 1];
                let first = &captures[seg.start];
                let gap = first.t_down_ms.saturating_sub(prev.t_down_ms);
                if gap < config.first_key_delay_ms {
                    return false;
                }
            }
            true
        })
        .collect()
}

/// Click-level detector quality against ground truth typing intervals
/// (half-open capture index ranges).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionScore {
    /// Non-typing clicks flagged as typing.
    pub false_positives: usize,
    /// Typing clicks the detector missed.
    pub false_negatives: usize,
    /// `false_positives` over the number of non-typing clicks; 0 when
    /// there are none.
    pub fp_rate: f64,
    /// `false_negatives` over the number of typing clicks; 0 when there
    /// are none.
    pub fn_rate: f64,
}

pub fn score_detection(
    n_captures: usize,
    segments: &[Segment],
    truth: &[(usize, usize)],
) -> DetectionScore {
    let predicted = |i: usize| segments.iter().any(|s| s.contains(i));
    let actual = |i: usize| truth.iter().any(|&(a, b)| a <= i && i < b);
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    let mut n_typing = 0usize;
    for i in 0..n_captures {
        if actual(i) {
            n_typing += 1;
            if !predicted(i) {
                fn_ += 1;
            }
        } else if predicted(i) {
            fp += 1;
        }
    }
    let n_other = n_captures - n_typing;
    let rate = |num: usize, den: usize| {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    DetectionScore {
        false_positives: fp,
        false_negatives: fn_,
        fp_rate: rate(fp, n_other),
        fn_rate: rate(fn_, n_typing),
    }
}

/// Timing features of one click, computed purely from capture records:
/// everything here leaks through the timestamp side channel alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BiometricRecord {
    /// Position in the capture stream.
    pub click_index: usize,
    /// Press-to-release time.
    pub click_duration_ms: u16,
    /// Press-to-press time from the previous click; None for the first.
    pub inter_click_ms: Option<u32>,
    /// Air time: previous release to this press; None for the first.
    pub hover_gap_ms: Option<u32>,
}

/// Per-click timing profile of a capture stream. Two clicks pressed at
/// 0ms and 300ms lasting 50ms and 60ms give the second click an
/// inter-click time of 300ms and an air gap of 250ms.
pub fn biometrics(captures: &[CapturedClick]) -> Result<Vec<BiometricRecord>, AnalysisError> {
    if captures.is_empty() {
        return Err(AnalysisError::NoCaptures);
    }
    Ok(captures
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let prev = (i > 0).then(|| &captures[i - 1]);
            BiometricRecord {
                click_index: i,
                click_duration_ms: c.dt_up_ms,
                inter_click_ms: prev.map(|p| c.t_down_ms.saturating_sub(p.t_down_ms)),
                hover_gap_ms: prev
                    .map(|p| c.t_down_ms.saturating_sub(p.t_down_ms + p.dt_up_ms as u32)),
            }
        })
        .collect())
}

/// Concatenates predicted key labels into recovered text.
pub fn reconstruct_text(keys: &[char]) -> String {
    keys.iter().collect()
}

/// Levenshtein distance: insertions, deletions, and substitutions all
/// cost one.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, &ca) in a.iter().enumerate() {
        let mut row = vec![i + 1];
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            row.push(sub.min(prev[j + 1] + 1).min(row[j] + 1));
        }
        prev = row;
    }
    prev[b.len()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attacker::HoverPoint;
    use crate::events::InputMethod;

    fn cap(t_down_ms: u32, dt_up_ms: u16, hover: Option<(f64, f64)>) -> CapturedClick {
        CapturedClick {
            user_id: 1,
            click_index: 0,
            t_down_ms,
            dt_up_ms,
            hovers: hover
                .map(|(x, y)| {
                    vec![HoverPoint {
                        dt_ms: dt_up_ms + 1,
                        x,
                        y,
                    }]
                })
                .unwrap_or_default(),
            method: InputMethod::Stylus,
        }
    }

    fn config(refined: bool) -> HeuristicConfig {
        HeuristicConfig {
            refined,
            ..HeuristicConfig::for_screen(720, 1280)
        }
    }

    const KB: (f64, f64) = (300.0, 900.0); // inside the lower band
    const TOP: (f64, f64) = (300.0, 200.0); // well above it

    #[test]
    fn default_region_is_the_bottom_two_fifths() {
        let c = HeuristicConfig::for_screen(720, 1280);
        assert_eq!(c.keyboard_region, Rect::new(0.0, 768.0, 720.0, 1280.0));
    }

    #[test]
    fn simple_mode_reports_every_in_region_run() {
        let captures = vec![
            cap(0, 50, Some(TOP)),
            cap(1_000, 50, Some(KB)),
            cap(1_200, 50, Some(KB)),
            cap(2_000, 50, Some(TOP)),
            cap(3_000, 50, Some(KB)),
        ];
        let segs = detect_keyboard(&captures, &config(false));
        assert_eq!(
            segs,
            vec![Segment { start: 1, end: 3 }, Segment { start: 4, end: 5 }]
        );
    }

    #[test]
    fn refined_mode_drops_short_runs() {
        let captures = vec![
            cap(0, 50, Some(TOP)),
            cap(1_000, 50, Some(KB)),
            cap(1_200, 50, Some(KB)),
            cap(2_000, 50, Some(TOP)),
            cap(3_000, 50, Some(KB)),
            cap(3_300, 50, Some(KB)),
            cap(3_600, 50, Some(KB)),
            cap(3_900, 50, Some(KB)),
        ];
        let segs = detect_keyboard(&captures, &config(true));
        assert_eq!(segs, vec![Segment { start: 4, end: 8 }]);
    }

    #[test]
    fn refined_mode_drops_hasty_bursts() {
        // Four in-region clicks, but only 200ms behind the previous click:
        // no keyboard could have appeared that fast.
        let captures = vec![
            cap(0, 50, Some(TOP)),
            cap(200, 50, Some(KB)),
            cap(500, 50, Some(KB)),
            cap(800, 50, Some(KB)),
            cap(1_100, 50, Some(KB)),
        ];
        assert!(detect_keyboard(&captures, &config(true)).is_empty());
        // The same burst preceded by a quiet half second is kept.
        let mut delayed = captures.clone();
        for c in &mut delayed[1..] {
            c.t_down_ms += 400;
        }
        assert_eq!(
            detect_keyboard(&delayed, &config(true)),
            vec![Segment { start: 1, end: 5 }]
        );
    }

    #[test]
    fn burst_at_stream_start_needs_no_delay() {
        let captures = vec![
            cap(0, 50, Some(KB)),
            cap(300, 50, Some(KB)),
            cap(600, 50, Some(KB)),
            cap(900, 50, Some(KB)),
        ];
        assert_eq!(
            detect_keyboard(&captures, &config(true)),
            vec![Segment { start: 0, end: 4 }]
        );
    }

    #[test]
    fn hoverless_captures_break_runs() {
        let captures = vec![
            cap(0, 50, Some(KB)),
            cap(600, 50, Some(KB)),
            cap(1_200, 50, None),
            cap(1_800, 50, Some(KB)),
            cap(2_400, 50, Some(KB)),
        ];
        let segs = detect_keyboard(&captures, &config(false));
        assert_eq!(
            segs,
            vec![Segment { start: 0, end: 2 }, Segment { start: 3, end: 5 }]
        );
    }

    #[test]
    fn scoring_counts_click_level_errors() {
        let segments = vec![Segment { start: 2, end: 6 }];
        let truth = vec![(4usize, 8usize)];
        let score = score_detection(10, &segments, &truth);
        // Predicted 2,3,4,5; truth 4,5,6,7. FP at 2,3; FN at 6,7.
        assert_eq!(score.false_positives, 2);
        assert_eq!(score.false_negatives, 2);
        assert!((score.fp_rate - 2.0 / 6.0).abs() < 1e-12);
        assert!((score.fn_rate - 2.0 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn empty_denominators_score_zero() {
        let score = score_detection(5, &[], &[]);
        assert_eq!(score.fp_rate, 0.0);
        assert_eq!(score.fn_rate, 0.0);
        let score = score_detection(3, &[Segment { start: 0, end: 3 }], &[(0, 3)]);
        assert_eq!(score.fp_rate, 0.0); // no non-typing clicks exist
        assert_eq!(score.fn_rate, 0.0);
    }

    #[test]
    fn biometrics_follow_the_documented_example() {
        let captures = vec![cap(0, 50, Some(KB)), cap(300, 60, Some(KB))];
        let bio = biometrics(&captures).unwrap();
        assert_eq!(bio[0].click_duration_ms, 50);
        assert_eq!(bio[0].inter_click_ms, None);
        assert_eq!(bio[0].hover_gap_ms, None);
        assert_eq!(bio[1].click_duration_ms, 60);
        assert_eq!(bio[1].inter_click_ms, Some(300));
        assert_eq!(bio[1].hover_gap_ms, Some(250));
    }

    #[test]
    fn biometrics_require_input() {
        assert_eq!(biometrics(&[]), Err(AnalysisError::NoCaptures));
    }

    #[test]
    fn edit_distance_cases() {
        assert_eq!(edit_distance("kitten", "sitting"), 3);
        assert_eq!(edit_distance("", ""), 0);
        assert_eq!(edit_distance("abc", ""), 3);
        assert_eq!(edit_distance("abc", "abc"), 0);
        assert_eq!(edit_distance("the cat", "the bat"), 1);
    }

    #[test]
    fn reconstruct_concatenates() {
        assert_eq!(reconstruct_text(&['h', 'i', ' ', 'u']), "hi u");
    }
}
