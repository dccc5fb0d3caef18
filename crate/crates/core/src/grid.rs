//! Geometric partition of the horizon into intervals `]τ_{s-1}, τ_s]` with
//! `τ_s = (1+ε)^s`, the interval index function, and the approximation
//! factor of the disaggregated schedule.

use thiserror::Error;

use crate::model::{IntervalIdx, Period};

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("aggregation parameter must be positive and finite, got {0}")]
    Epsilon(f64),
    #[error("horizon must be at least one period")]
    Horizon,
    #[error("discount rate must be greater than -1, got {0}")]
    Rate(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalGrid {
    epsilon: f64,
    horizon: Period,
    count: IntervalIdx,
    /// `tau[s]` for `s = 0..=count`.
    tau: Vec<f64>,
}

pub fn build_grid(epsilon: f64, horizon: Period) -> Result<IntervalGrid, GridError> {
    IntervalGrid::new(epsilon, horizon)
}

impl IntervalGrid {
    pub fn new(epsilon: f64, horizon: Period) -> Result<Self, GridError> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(GridError::Epsilon(epsilon));
        }
        if horizon < 1 {
            return Err(GridError::Horizon);
        }
        let mut tau = vec![1.0];
        while *tau.last().unwrap() < f64::from(horizon) {
            tau.push(power(epsilon, tau.len() as i32));
        }
        let count = (tau.len() - 1) as IntervalIdx;
        Ok(Self { epsilon, horizon, count, tau })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn horizon(&self) -> Period {
        self.horizon
    }

    /// Number of intervals `T_I`.
    pub fn count(&self) -> IntervalIdx {
        self.count
    }

    /// Interval indices `1..=T_I`.
    pub fn intervals(&self) -> std::ops::RangeInclusive<IntervalIdx> {
        1..=self.count
    }

    /// `τ_s`; defined for every `s`, also past the last interval.
    pub fn tau(&self, s: IntervalIdx) -> f64 {
        self.tau.get(s as usize).copied().unwrap_or_else(|| power(self.epsilon, s as i32))
    }

    /// Length `τ_s - τ_{s-1}` of interval `s ≥ 1`.
    pub fn length(&self, s: IntervalIdx) -> f64 {
        self.tau(s) - self.tau(s - 1)
    }

    /// `⌈log_{1+ε} t⌉` for `t ≥ 1`, and 0 for `t < 1`. Exact at the grid
    /// points: `interval_of(τ_s) == s`.
    pub fn interval_of(&self, t: f64) -> IntervalIdx {
        if !(t > 1.0) {
            return 0;
        }
        let guess = (t.ln() / self.epsilon.ln_1p()).ceil().max(1.0) as IntervalIdx;
        let mut s = guess;
        while s > 1 && self.tau(s - 1) >= t {
            s -= 1;
        }
        while self.tau(s) < t {
            s += 1;
        }
        s
    }

    /// Interval that holds a completion at time `t` in the aggregated model.
    /// Period 1 has no interval of its own (`I(1) = 0`), so it is folded into
    /// interval 1; times below 1 map to the sentinel 0.
    pub fn completion_interval(&self, t: f64) -> IntervalIdx {
        if t < 1.0 {
            0
        } else {
            self.interval_of(t).max(1)
        }
    }

    /// Horizon long enough for every completion produced by disaggregation:
    /// `⌈τ_{T_I} (1+2ε)/(1+ε)⌉`, never shorter than `T`.
    pub fn extended_horizon(&self) -> Period {
        let ext = (self.tau(self.count) * (1.0 + 2.0 * self.epsilon) / (1.0 + self.epsilon)).ceil();
        (ext as Period).max(self.horizon)
    }
}

fn power(epsilon: f64, s: i32) -> f64 {
    (1.0 + epsilon).powi(s)
}

/// Approximation factor `(1+r)^{-T·2ε/(1+ε)}` of the disaggregated schedule.
pub fn gamma_bound(rate: f64, horizon: f64, epsilon: f64) -> f64 {
    (1.0 + rate).powf(-horizon * 2.0 * epsilon / (1.0 + epsilon))
}

/// Re-expresses a per-period rate when one target period spans
/// `1/periods_per_target` source periods: `(1+r)^{1/periods_per_target} - 1`.
pub fn convert_rate(rate: f64, periods_per_target: f64) -> Result<f64, GridError> {
    if !(rate > -1.0) {
        return Err(GridError::Rate(rate));
    }
    Ok(((1.0 + rate).ln() / periods_per_target).exp_m1())
}
