use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Breakpoint {
    /// Arclength from the start line (m).
    pub s: f64,
    /// Track angle with the horizontal (rad), held until the next breakpoint.
    pub slope: f64,
    /// Maximal safety speed (m/s), linearly interpolated between breakpoints.
    pub vsafe: f64,
}

/// Track geometry: piecewise-constant slope, piecewise-linear safety speed.
#[derive(Clone, Debug, PartialEq)]
pub struct TrackProfile {
    breakpoints: Vec<Breakpoint>,
}

impl TrackProfile {
    pub fn new(breakpoints: Vec<Breakpoint>) -> Result<Self> {
        let Some(first) = breakpoints.first() else {
            return Err(Error::Validation("track has no breakpoints".into()));
        };
        if first.s != 0.0 {
            return Err(Error::Validation(format!(
                "track must start at arclength 0, first breakpoint is at {}",
                first.s
            )));
        }
        for (i, b) in breakpoints.iter().enumerate() {
            if !b.s.is_finite() || !b.slope.is_finite() || !b.vsafe.is_finite() {
                return Err(Error::Validation(format!(
                    "breakpoint {i} has a non-finite value"
                )));
            }
            if b.slope.abs() >= std::f64::consts::FRAC_PI_2 {
                return Err(Error::Validation(format!(
                    "breakpoint {i}: slope {} rad is not a valid angle",
                    b.slope
                )));
            }
            if b.vsafe <= 0.0 {
                return Err(Error::Validation(format!(
                    "breakpoint {i}: safety speed must be positive, got {}",
                    b.vsafe
                )));
            }
        }
        if let Some(i) = breakpoints.windows(2).position(|w| w[1].s <= w[0].s) {
            return Err(Error::Validation(format!(
                "arclengths must be strictly increasing (breakpoint {} at {} m follows {} m)",
                i + 1,
                breakpoints[i + 1].s,
                breakpoints[i].s
            )));
        }
        Ok(TrackProfile { breakpoints })
    }

    /// A flat track with constant safety speed.
    pub fn flat(length: f64, vsafe: f64) -> Result<Self> {
        let mut bps = vec![Breakpoint {
            s: 0.0,
            slope: 0.0,
            vsafe,
        }];
        if length > 0.0 {
            bps.push(Breakpoint {
                s: length,
                slope: 0.0,
                vsafe,
            });
        }
        Self::new(bps)
    }

    pub fn breakpoints(&self) -> &[Breakpoint] {
        &self.breakpoints
    }

    pub fn length(&self) -> f64 {
        self.breakpoints.last().map_or(0.0, |b| b.s)
    }

    /// Index of the slope segment containing `x1`. Segments are `[s_i, s_{i+1})`;
    /// the finish line belongs to the last segment.
    fn segment(&self, x1: f64) -> usize {
        let n = self.breakpoints.len();
        if n < 2 {
            return 0;
        }
        let i = self.breakpoints.partition_point(|b| b.s <= x1);
        i.saturating_sub(1).min(n - 2)
    }

    pub fn slope_at(&self, x1: f64) -> f64 {
        self.breakpoints[self.segment(x1)].slope
    }

    pub fn vsafe_at(&self, x1: f64) -> f64 {
        let n = self.breakpoints.len();
        if n < 2 {
            return self.breakpoints[0].vsafe;
        }
        let i = self.segment(x1);
        let (b0, b1) = (self.breakpoints[i], self.breakpoints[i + 1]);
        let w = ((x1 - b0.s) / (b1.s - b0.s)).clamp(0.0, 1.0);
        b0.vsafe + w * (b1.vsafe - b0.vsafe)
    }

    /// First breakpoint strictly ahead of `x1`.
    pub fn next_breakpoint(&self, x1: f64) -> Option<f64> {
        let i = self.breakpoints.partition_point(|b| b.s <= x1);
        self.breakpoints.get(i).map(|b| b.s)
    }
}

/// Along-track wind speed on a rectangular (arclength, time) grid, held
/// piecewise-constant in both axes. An empty field is calm everywhere.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WindField {
    s: Vec<f64>,
    t: Vec<f64>,
    /// Row-major values: `v[i * t.len() + j]` at `(s[i], t[j])`.
    v: Vec<f64>,
}

impl WindField {
    pub fn calm() -> Self {
        Self::default()
    }

    pub fn new(s: Vec<f64>, t: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if s.is_empty() && t.is_empty() && v.is_empty() {
            return Ok(Self::calm());
        }
        if s.is_empty() || t.is_empty() {
            return Err(Error::Validation("wind grid needs at least one sample".into()));
        }
        for (axis, grid) in [("arclength", &s), ("time", &t)] {
            if grid.iter().any(|x| !x.is_finite()) {
                return Err(Error::Validation(format!("wind {axis} axis is not finite")));
            }
            if grid.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::Validation(format!(
                    "wind {axis} axis must be strictly increasing"
                )));
            }
        }
        if v.len() != s.len() * t.len() {
            return Err(Error::Validation(format!(
                "wind grid is not rectangular: {} values for {} x {} axes",
                v.len(),
                s.len(),
                t.len()
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Validation("wind values must be finite".into()));
        }
        Ok(WindField { s, t, v })
    }

    /// The same wind everywhere on the track, changing at the given times.
    pub fn uniform_schedule(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(vec![0.0], times, values)
    }

    pub fn is_calm(&self) -> bool {
        self.v.is_empty()
    }

    pub fn arclengths(&self) -> &[f64] {
        &self.s
    }

    pub fn times(&self) -> &[f64] {
        &self.t
    }

    pub fn values(&self) -> &[f64] {
        &self.v
    }

    pub fn at(&self, x1: f64, t: f64) -> f64 {
        if self.is_calm() {
            return 0.0;
        }
        let i = cell(&self.s, x1);
        let j = cell(&self.t, t);
        self.v[i * self.t.len() + j]
    }

    pub fn next_arclength(&self, x1: f64) -> Option<f64> {
        next_after(&self.s, x1)
    }

    pub fn next_time(&self, t: f64) -> Option<f64> {
        next_after(&self.t, t)
    }
}

fn cell(grid: &[f64], x: f64) -> usize {
    grid.partition_point(|g| *g <= x).saturating_sub(1)
}

fn next_after(grid: &[f64], x: f64) -> Option<f64> {
    let i = grid.partition_point(|g| *g <= x);
    grid.get(i).copied()
}

/// Track plus weather: the non-autonomous environment of a race.
#[derive(Clone, Debug, PartialEq)]
pub struct Course {
    pub track: TrackProfile,
    pub wind: WindField,
}

impl Course {
    pub fn new(track: TrackProfile, wind: WindField) -> Self {
        Course { track, wind }
    }

    pub fn flat(length: f64, vsafe: f64) -> Result<Self> {
        Ok(Course::new(TrackProfile::flat(length, vsafe)?, WindField::calm()))
    }

    pub fn length(&self) -> f64 {
        self.track.length()
    }

    pub fn check_position(&self, x1: f64) -> Result<()> {
        let length = self.length();
        if !(0.0..=length).contains(&x1) {
            return Err(Error::OutOfTrack { x1, length });
        }
        Ok(())
    }

    /// Slope and wind at `(x1, t)`.
    pub fn conditions(&self, x1: f64, t: f64) -> (f64, f64) {
        (self.track.slope_at(x1), self.wind.at(x1, t))
    }

    pub fn vsafe_at(&self, x1: f64) -> f64 {
        self.track.vsafe_at(x1)
    }

    /// Nearest arclength ahead of `x1` where slope or wind may change.
    pub(crate) fn next_position_boundary(&self, x1: f64) -> Option<f64> {
        match (self.track.next_breakpoint(x1), self.wind.next_arclength(x1)) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    pub(crate) fn next_time_boundary(&self, t: f64) -> Option<f64> {
        self.wind.next_time(t)
    }
}
