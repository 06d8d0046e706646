//! Deterministic on-screen keyboard geometry.
//!
//! The layout fills the bottom 40% of the screen with four equal-height
//! rows: the three qwerty letter rows and a punctuation row around a wide
//! space bar. All rectangles are half-open, so neighbouring keys never
//! overlap and a point on a shared edge belongs to the key on the right
//! (or below).

use crate::geom::{Point, Rect};
use serde::{Deserialize, Serialize};

const ROW_LETTERS: [&str; 3] = ["qwertyuiop", "asdfghjkl", "zxcvbnm"];
/// Bottom row: comma, a space bar six key-widths wide, period.
const ROW_BOTTOM: [(char, u32); 3] = [(',', 1), (' ', 6), ('.', 1)];

/// Minimum screen for a usable keyboard.
pub const MIN_WIDTH_PX: u32 = 360;
pub const MIN_HEIGHT_PX: u32 = 640;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Key {
    pub label: char,
    pub rect: Rect,
}

/// A concrete keyboard: the region it occupies and every key rectangle,
/// in row-major order. `rows` holds the key indices of each row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyboardLayout {
    pub region: Rect,
    pub keys: Vec<Key>,
    pub rows: Vec<Vec<usize>>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum LayoutError {
    #[error("screen {width}x{height} is below the {MIN_WIDTH_PX}x{MIN_HEIGHT_PX} minimum")]
    ScreenTooSmall { width: u32, height: u32 },
}

/// Builds the keyboard for a screen of `width_px` x `height_px`.
///
/// The region is the bottom 40% of the screen (`floor(0.4 * height)` tall),
/// split into four equal-height rows with any height remainder absorbed by
/// the bottom row. Within a row, the key width is
/// `floor(region_width / width_units)` and the width remainder goes to the
/// row's last key, so every row spans the full region width.
pub fn make_layout(width_px: u32, height_px: u32) -> Result<KeyboardLayout, LayoutError> {
    if width_px < MIN_WIDTH_PX || height_px < MIN_HEIGHT_PX {
        return Err(LayoutError::ScreenTooSmall {
            width: width_px,
            height: height_px,
        });
    }

    let region_h = height_px * 2 / 5;
    let region_y0 = height_px - region_h;
    let row_h = region_h / 4;

    let mut keys = Vec::new();
    let mut rows = Vec::new();

    let mut row_specs: Vec<Vec<(char, u32)>> = ROW_LETTERS
        .iter()
        .map(|r| r.chars().map(|c| (c, 1)).collect())
        .collect();
    row_specs.push(ROW_BOTTOM.to_vec());

    for (ri, spec) in row_specs.iter().enumerate() {
        let y0 = region_y0 + ri as u32 * row_h;
        // The last row absorbs the division remainder of the region height.
        let y1 = if ri == 3 { height_px } else { y0 + row_h };

        let units: u32 = spec.iter().map(|&(_, u)| u).sum();
        let key_w = width_px / units;
        let mut row = Vec::new();
        let mut x0 = 0u32;
        for (ki, &(label, u)) in spec.iter().enumerate() {
            let x1 = if ki == spec.len() - 1 {
                width_px
            } else {
                x0 + u * key_w
            };
            row.push(keys.len());
            keys.push(Key {
                label,
                rect: Rect::new(x0 as f64, y0 as f64, x1 as f64, y1 as f64),
            });
            x0 = x1;
        }
        rows.push(row);
    }

    Ok(KeyboardLayout {
        region: Rect::new(0.0, region_y0 as f64, width_px as f64, height_px as f64),
        keys,
        rows,
    })
}

impl KeyboardLayout {
    /// The key under a point, if any. Rectangles are half-open, so a point
    /// on the shared edge of two keys belongs to the right/lower one.
    pub fn key_at(&self, p: Point) -> Option<char> {
        self.keys
            .iter()
            .find(|k| k.rect.contains(p))
            .map(|k| k.label)
    }

    /// The key whose center is closest to `p`; distance ties resolve to the
    /// earliest key in row-major order. Useful as a fallback for points
    /// that miss every rectangle.
    pub fn nearest_key(&self, p: Point) -> char {
        let mut best = self.keys[0].label;
        let mut best_d = f64::INFINITY;
        for k in &self.keys {
            let d = k.rect.center().dist(p);
            if d < best_d {
                best_d = d;
                best = k.label;
            }
        }
        best
    }

    pub fn key_rect(&self, label: char) -> Option<Rect> {
        self.keys.iter().find(|k| k.label == label).map(|k| k.rect)
    }

    pub fn labels(&self) -> impl Iterator<Item = char> + '_ {
        self.keys.iter().map(|k| k.label)
    }
}
