//! Trapezoidal-velocity motion law for a single joint: constant
//! acceleration for `ramp_time`, cruise at constant rate, then a symmetric
//! constant deceleration arriving at rest at `total_time`.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrajectoryError {
    #[error("ramp time {ramp_time} s must satisfy 0 < ramp <= total/2 (total {total_time} s)")]
    InvalidTiming { ramp_time: f64, total_time: f64 },
    #[error("time {t} s lies outside [0, {total_time}] s")]
    OutOfRange { t: f64, total_time: f64 },
    #[error("non-finite profile parameter")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapezoidalProfile {
    theta_initial: f64,
    theta_final: f64,
    ramp_time: f64,
    total_time: f64,
}

/// Piece of the profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segment {
    Accelerate,
    Cruise,
    Decelerate,
}

impl TrapezoidalProfile {
    pub fn new(theta_initial: f64, theta_final: f64, ramp_time: f64, total_time: f64) -> Result<Self, TrajectoryError> {
        if ![theta_initial, theta_final, ramp_time, total_time].iter().all(|v| v.is_finite()) {
            return Err(TrajectoryError::NonFinite);
        }
        if !(ramp_time > 0.0 && ramp_time <= 0.5 * total_time) {
            return Err(TrajectoryError::InvalidTiming { ramp_time, total_time });
        }
        Ok(Self {
            theta_initial,
            theta_final,
            ramp_time,
            total_time,
        })
    }

    /// Zero-length profile that holds `theta` at `t = 0`.
    pub fn hold(theta: f64) -> Self {
        Self {
            theta_initial: theta,
            theta_final: theta,
            ramp_time: 0.0,
            total_time: 0.0,
        }
    }

    pub fn theta_initial(&self) -> f64 {
        self.theta_initial
    }

    pub fn theta_final(&self) -> f64 {
        self.theta_final
    }

    pub fn ramp_time(&self) -> f64 {
        self.ramp_time
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    fn is_hold(&self) -> bool {
        self.total_time == 0.0
    }

    /// Cruise rate `(theta_f - theta_i) / (t_f - ramp)`.
    pub fn cruise_rate(&self) -> f64 {
        if self.is_hold() {
            return 0.0;
        }
        (self.theta_final - self.theta_initial) / (self.total_time - self.ramp_time)
    }

    /// Ramp acceleration `cruise_rate / ramp`.
    pub fn ramp_accel(&self) -> f64 {
        if self.is_hold() {
            return 0.0;
        }
        self.cruise_rate() / self.ramp_time
    }

    // Interior breakpoints belong to the segment on their left.
    fn segment(&self, t: f64) -> Result<Segment, TrajectoryError> {
        if !(0.0..=self.total_time).contains(&t) {
            return Err(TrajectoryError::OutOfRange {
                t,
                total_time: self.total_time,
            });
        }
        Ok(if t <= self.ramp_time {
            Segment::Accelerate
        } else if t <= self.total_time - self.ramp_time {
            Segment::Cruise
        } else {
            Segment::Decelerate
        })
    }

    /// Segment containing `t`.
    pub fn segment_at(&self, t: f64) -> Result<Segment, TrajectoryError> {
        self.segment(t)
    }

    /// `(position, velocity, acceleration)` of one segment's polynomial,
    /// evaluated at any `t` without range checks. Comparing neighbouring
    /// segments at a breakpoint gives the one-sided limits there.
    pub fn segment_sample(&self, seg: Segment, t: f64) -> (f64, f64, f64) {
        if self.is_hold() {
            return (self.theta_initial, 0.0, 0.0);
        }
        let (w, a) = (self.cruise_rate(), self.ramp_accel());
        match seg {
            Segment::Accelerate => (self.theta_initial + 0.5 * t * t * a, t * a, a),
            Segment::Cruise => (self.theta_initial + (t - 0.5 * self.ramp_time) * w, w, 0.0),
            Segment::Decelerate => {
                let left = self.total_time - t;
                (self.theta_final - 0.5 * left * left * a, left * a, -a)
            }
        }
    }

    pub fn position(&self, t: f64) -> Result<f64, TrajectoryError> {
        Ok(self.segment_sample(self.segment(t)?, t).0)
    }

    pub fn velocity(&self, t: f64) -> Result<f64, TrajectoryError> {
        Ok(self.segment_sample(self.segment(t)?, t).1)
    }

    /// Piecewise-constant acceleration; interior breakpoints take the
    /// left-limit value.
    pub fn acceleration(&self, t: f64) -> Result<f64, TrajectoryError> {
        Ok(self.segment_sample(self.segment(t)?, t).2)
    }

    /// `(position, velocity, acceleration)` at `t`.
    pub fn sample(&self, t: f64) -> Result<(f64, f64, f64), TrajectoryError> {
        Ok(self.segment_sample(self.segment(t)?, t))
    }
}
