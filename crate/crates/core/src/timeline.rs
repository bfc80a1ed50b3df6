//! Discrete time axis: moments, directed intervals and observation windows.
//!
//! A window is described by an anchor moment and a signed duration. The far
//! endpoint sits at `anchor - duration`, so a positive duration looks back into
//! the past and a negative one reaches forward. The frequency of a finite
//! window is the exact rational `1 / duration`.

use std::cmp::Ordering;
use std::fmt;

use num_rational::Rational64;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};

/// A point on the time axis, counted in whole ticks from zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct TimeMoment(u64);

impl TimeMoment {
    pub const fn new(tick: u64) -> Self {
        Self(tick)
    }

    pub const fn tick(self) -> u64 {
        self.0
    }

    pub const fn succ(self) -> Self {
        Self(self.0 + 1)
    }
}

impl From<u64> for TimeMoment {
    fn from(tick: u64) -> Self {
        Self(tick)
    }
}

impl fmt::Display for TimeMoment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

/// How far a window reaches from its anchor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Extent {
    /// Signed number of ticks; never zero.
    Finite(i64),
    /// Every tick on the past side of the anchor.
    PastInfinite,
}

/// Which way a window extends from its anchor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// Far endpoint lies before the anchor (positive duration, positive frequency).
    Past,
    /// Far endpoint lies after the anchor (negative duration, negative frequency).
    Future,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ObservationWindow {
    anchor: TimeMoment,
    extent: Extent,
    anchor_closed: bool,
    far_closed: bool,
}

impl ObservationWindow {
    pub fn new(
        anchor: TimeMoment,
        extent: Extent,
        anchor_closed: bool,
        far_closed: bool,
    ) -> Result<Self> {
        if extent == Extent::Finite(0) {
            return Err(Error::ZeroDuration);
        }
        Ok(Self {
            anchor,
            extent,
            anchor_closed,
            far_closed: far_closed && extent != Extent::PastInfinite,
        })
    }

    /// The window `(F, t]`: all history up to and including `anchor`.
    pub fn up_to(anchor: TimeMoment) -> Self {
        Self {
            anchor,
            extent: Extent::PastInfinite,
            anchor_closed: true,
            far_closed: false,
        }
    }

    /// Rebuilds a window from its frequency and anchor. A zero frequency maps to
    /// [`Extent::PastInfinite`].
    pub fn from_frequency(
        frequency: Rational64,
        anchor: TimeMoment,
        anchor_closed: bool,
        far_closed: bool,
    ) -> Result<Self> {
        if frequency.is_zero() {
            return Self::new(anchor, Extent::PastInfinite, anchor_closed, false);
        }
        let duration = frequency.recip();
        if !duration.is_integer() {
            return Err(Error::NonIntegralDuration(frequency.to_string()));
        }
        Self::new(
            anchor,
            Extent::Finite(duration.to_integer()),
            anchor_closed,
            far_closed,
        )
    }

    pub fn anchor(&self) -> TimeMoment {
        self.anchor
    }

    pub fn extent(&self) -> Extent {
        self.extent
    }

    pub fn anchor_closed(&self) -> bool {
        self.anchor_closed
    }

    pub fn far_closed(&self) -> bool {
        self.far_closed
    }

    /// `sign(duration) / |duration|`, or zero for an unbounded window.
    pub fn frequency(&self) -> Rational64 {
        match self.extent {
            Extent::Finite(d) => Rational64::new(1, d),
            Extent::PastInfinite => Rational64::zero(),
        }
    }

    pub fn far_endpoint(&self) -> Option<i128> {
        match self.extent {
            Extent::Finite(d) => Some(self.anchor.0 as i128 - d as i128),
            Extent::PastInfinite => None,
        }
    }

    pub fn direction(&self) -> Direction {
        match self.extent {
            Extent::Finite(d) if d < 0 => Direction::Future,
            _ => Direction::Past,
        }
    }

    pub fn contains(&self, moment: TimeMoment) -> bool {
        let t = moment.0 as i128;
        let anchor = self.anchor.0 as i128;
        let within = |lo: i128, lo_closed: bool, hi: i128, hi_closed: bool| {
            let above = if lo_closed { t >= lo } else { t > lo };
            let below = if hi_closed { t <= hi } else { t < hi };
            above && below
        };
        match self.extent {
            Extent::PastInfinite => {
                if self.anchor_closed {
                    t <= anchor
                } else {
                    t < anchor
                }
            }
            Extent::Finite(d) => {
                let far = anchor - d as i128;
                if d > 0 {
                    within(far, self.far_closed, anchor, self.anchor_closed)
                } else {
                    within(anchor, self.anchor_closed, far, self.far_closed)
                }
            }
        }
    }
}

impl fmt::Display for ObservationWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.extent, self.direction()) {
            (Extent::PastInfinite, _) => write!(
                f,
                "(F, {}{}",
                self.anchor.0,
                if self.anchor_closed { "]" } else { ")" }
            ),
            (Extent::Finite(_), Direction::Past) => write!(
                f,
                "{}{}, {}{}",
                if self.far_closed { "[" } else { "(" },
                self.far_endpoint().unwrap_or_default(),
                self.anchor.0,
                if self.anchor_closed { "]" } else { ")" }
            ),
            (Extent::Finite(_), Direction::Future) => write!(
                f,
                "{}{}, {}{}",
                if self.anchor_closed { "[" } else { "(" },
                self.anchor.0,
                self.far_endpoint().unwrap_or_default(),
                if self.far_closed { "]" } else { ")" }
            ),
        }
    }
}

/// Frequency of the directed interval from `start` to `end`, `1 / (end - start)`.
pub fn interval_to_frequency(start: TimeMoment, end: TimeMoment) -> Result<Rational64> {
    let span = end.0 as i128 - start.0 as i128;
    if span == 0 {
        return Err(Error::ZeroLengthInterval);
    }
    let span = i64::try_from(span).map_err(|_| Error::NonIntegralDuration(span.to_string()))?;
    Ok(Rational64::new(1, span))
}

pub fn window_contains(window: &ObservationWindow, moment: TimeMoment) -> bool {
    window.contains(moment)
}

/// Orders two finite windows by length. Equivalent to the reverse order of `|F|`.
pub fn compare_durations(a: &ObservationWindow, b: &ObservationWindow) -> Result<Ordering> {
    match (a.extent, b.extent) {
        (Extent::Finite(x), Extent::Finite(y)) => Ok(x.unsigned_abs().cmp(&y.unsigned_abs())),
        _ => Err(Error::UnboundedWindow),
    }
}

/// Orders two finite windows by `|F|`; the inverse of [`compare_durations`].
pub fn compare_frequencies(a: &ObservationWindow, b: &ObservationWindow) -> Result<Ordering> {
    if a.extent == Extent::PastInfinite || b.extent == Extent::PastInfinite {
        return Err(Error::UnboundedWindow);
    }
    Ok(a.frequency().abs().cmp(&b.frequency().abs()))
}
