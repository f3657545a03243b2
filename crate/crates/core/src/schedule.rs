//! Control paths x(t) driving the coupling imbalance from +1 to -1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The coupling path of one transfer run over t in [0, T].
#[derive(Debug, Clone, PartialEq)]
pub enum CouplingSchedule {
    /// Constant-rate ramp x(t) = (T - 2t) / T.
    Linear { duration: f64 },
    /// Tabulated path, linearly interpolated between knots.
    Table(ScheduleTable),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleTable {
    duration: f64,
    times: Vec<f64>,
    xs: Vec<f64>,
}

impl ScheduleTable {
    /// Validates the protocol invariants: knots strictly time-sorted inside
    /// [0, T], x within [-1, 1] and non-increasing, x(0) = +1 and x(T) = -1.
    pub fn new(duration: f64, times: Vec<f64>, xs: Vec<f64>) -> Result<Self> {
        if !(duration > 0.0) {
            return Err(Error::config(format!("schedule duration must be positive, got {duration}")));
        }
        if times.len() != xs.len() || times.len() < 2 {
            return Err(Error::config("schedule table needs matching times and xs, at least two knots"));
        }
        for w in times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::config("schedule knots must be strictly time-sorted"));
            }
        }
        if times[0] < -1e-12 || *times.last().unwrap() > duration * (1.0 + 1e-12) {
            return Err(Error::config("schedule knots must lie inside [0, T]"));
        }
        for w in xs.windows(2) {
            if w[1] > w[0] + 1e-12 {
                return Err(Error::config("schedule x(t) must be non-increasing"));
            }
        }
        for &x in &xs {
            if x < -1.0 - 1e-9 || x > 1.0 + 1e-9 {
                return Err(Error::config(format!("schedule x value {x} outside [-1, 1]")));
            }
        }
        if (times[0]).abs() > 1e-9 * duration.max(1.0)
            || (times.last().unwrap() - duration).abs() > 1e-9 * duration.max(1.0)
        {
            return Err(Error::config("schedule table must cover t = 0 and t = T"));
        }
        if (xs[0] - 1.0).abs() > 1e-6 || (xs.last().unwrap() + 1.0).abs() > 1e-6 {
            return Err(Error::config("schedule must start at x = +1 and end at x = -1"));
        }
        Ok(ScheduleTable { duration, times, xs })
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().cloned().zip(self.xs.iter().cloned())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn segment(&self, t: f64) -> usize {
        let last = self.times.len() - 1;
        if t <= self.times[0] {
            return 0;
        }
        if t >= self.times[last] {
            return last - 1;
        }
        let mut lo = 0usize;
        let mut hi = last;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.times[mid] <= t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    fn eval(&self, t: f64) -> f64 {
        if t <= self.times[0] {
            return self.xs[0];
        }
        let last = self.times.len() - 1;
        if t >= self.times[last] {
            return self.xs[last];
        }
        let lo = self.segment(t);
        let f = (t - self.times[lo]) / (self.times[lo + 1] - self.times[lo]);
        self.xs[lo] + f * (self.xs[lo + 1] - self.xs[lo])
    }

    fn slope(&self, t: f64) -> f64 {
        let last = self.times.len() - 1;
        if t < self.times[0] || t > self.times[last] {
            return 0.0;
        }
        let lo = self.segment(t);
        (self.xs[lo + 1] - self.xs[lo]) / (self.times[lo + 1] - self.times[lo])
    }
}

impl CouplingSchedule {
    pub fn linear(duration: f64) -> Result<Self> {
        if !(duration > 0.0) {
            return Err(Error::config(format!("schedule duration must be positive, got {duration}")));
        }
        Ok(CouplingSchedule::Linear { duration })
    }

    pub fn duration(&self) -> f64 {
        match self {
            CouplingSchedule::Linear { duration } => *duration,
            CouplingSchedule::Table(t) => t.duration,
        }
    }

    /// x(t), clamped to [0, T] outside the schedule domain.
    pub fn x_at(&self, t: f64) -> f64 {
        match self {
            CouplingSchedule::Linear { duration } => {
                let t = t.clamp(0.0, *duration);
                (duration - 2.0 * t) / duration
            }
            CouplingSchedule::Table(table) => table.eval(t),
        }
    }

    /// dx/dt, exact for both the linear ramp and the segment containing t.
    pub fn slope_at(&self, t: f64) -> f64 {
        match self {
            CouplingSchedule::Linear { duration } => -2.0 / duration,
            CouplingSchedule::Table(table) => table.slope(t),
        }
    }

    /// Times at which the slope may jump (segment boundaries), including
    /// both endpoints. The linear ramp has a single segment.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            CouplingSchedule::Linear { duration } => vec![0.0, *duration],
            CouplingSchedule::Table(t) => t.times.clone(),
        }
    }

    pub fn descriptor(&self) -> ScheduleDescriptor {
        match self {
            CouplingSchedule::Linear { duration } => ScheduleDescriptor {
                kind: "linear".to_string(),
                duration: *duration,
                knots: 0,
            },
            CouplingSchedule::Table(t) => ScheduleDescriptor {
                kind: "table".to_string(),
                duration: t.duration,
                knots: t.len(),
            },
        }
    }
}

/// Compact serializable summary of a schedule recorded next to run outputs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ScheduleDescriptor {
    pub kind: String,
    pub duration: f64,
    pub knots: usize,
}
