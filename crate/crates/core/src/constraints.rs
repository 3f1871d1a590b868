//! Activated constraints: windows during which the human cannot help with a door.

use serde::{Deserialize, Serialize};

/// Times closer than this are treated as equal.
pub const TIME_EPS: f64 = 1e-9;

/// `AssistUnavailable(start, end)`: no door-opening assistance in `(start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub start: f64,
    pub end: f64,
}

impl Window {
    pub fn new(start: f64, end: f64) -> Self {
        assert!(start < end, "window start {start} must precede end {end}");
        Window { start, end }
    }

    /// Strictly inside the window (the endpoints are free).
    pub fn contains_interior(&self, t: f64) -> bool {
        t > self.start + TIME_EPS && t < self.end - TIME_EPS
    }

    pub fn active_at(&self, t: f64) -> bool {
        t >= self.start && t < self.end
    }
}

/// Normalized set of windows: sorted by start, non-overlapping.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConstraintSet {
    windows: Vec<Window>,
}

impl ConstraintSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a normalized set; overlapping or touching windows are merged.
    pub fn new(windows: impl IntoIterator<Item = Window>) -> Self {
        let mut ws: Vec<Window> = windows.into_iter().collect();
        ws.sort_by(|a, b| a.start.total_cmp(&b.start).then(a.end.total_cmp(&b.end)));
        let mut merged: Vec<Window> = Vec::with_capacity(ws.len());
        for w in ws {
            match merged.last_mut() {
                Some(last) if w.start <= last.end => last.end = last.end.max(w.end),
                _ => merged.push(w),
            }
        }
        ConstraintSet { windows: merged }
    }

    pub fn single(start: f64, end: f64) -> Self {
        ConstraintSet {
            windows: vec![Window::new(start, end)],
        }
    }

    pub fn windows(&self) -> &[Window] {
        &self.windows
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    /// Drops windows that ended before `clock`.
    pub fn without_expired(&self, clock: f64) -> Self {
        ConstraintSet {
            windows: self.windows.iter().copied().filter(|w| w.end >= clock).collect(),
        }
    }

    /// Window whose interior contains `t`, if any.
    pub fn blocking(&self, t: f64) -> Option<&Window> {
        self.windows.iter().find(|w| w.contains_interior(t))
    }

    pub fn active_at(&self, t: f64) -> Option<&Window> {
        self.windows.iter().find(|w| w.active_at(t))
    }
}

/// A door service interval already claimed by another robot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reservation {
    pub door: usize,
    pub start: f64,
    pub end: f64,
}

impl Reservation {
    fn overlaps(&self, start: f64, end: f64) -> bool {
        start < self.end - TIME_EPS && self.start < end - TIME_EPS
    }
}

/// Earliest start `s ≥ t` for an assisted door leg that arrives at `t`: the
/// door request takes `open_s`, the traversal `through_s`.
///
/// The request may not overlap the interior of any window (so neither it nor the
/// traversal starts inside one), and the whole service interval must not overlap
/// another robot's reservation of the same door. The result is the smallest feasible start, so it never
/// decreases as `t` grows or as windows are added.
pub fn door_leg_start(
    t: f64,
    door: usize,
    open_s: f64,
    through_s: f64,
    constraints: &ConstraintSet,
    reservations: &[Reservation],
) -> f64 {
    let mut s = t;
    loop {
        let mut needed = s;
        for w in constraints.windows() {
            if s < w.end - TIME_EPS && w.start < s + open_s - TIME_EPS {
                needed = needed.max(w.end);
            }
        }
        for r in reservations.iter().filter(|r| r.door == door) {
            if r.overlaps(s, s + open_s + through_s) {
                needed = needed.max(r.end);
            }
        }
        if needed <= s + TIME_EPS {
            return s;
        }
        s = needed;
    }
}
