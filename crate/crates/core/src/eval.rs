//! Objective values, feasibility certificates for both schedule spaces, the
//! period-to-interval lift and the optimality gap.
//!
//! The checkers simulate resource ledgers directly from the instance data and
//! never look at a [`crate::mip::MipModel`].

use std::fmt;

use serde::Serialize;

use crate::graph::DeltaMatrix;
use crate::grid::IntervalGrid;
use crate::model::{AggSchedule, AtSchedule, Gap, Instance, JobId, Semantics};

/// Absolute-or-relative slack allowed on every resource inequality.
pub const FEAS_TOL: f64 = 1e-9;

pub fn within(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + FEAS_TOL * rhs.abs().max(1.0)
}

pub fn npv(sched: &AtSchedule, inst: &Instance) -> f64 {
    inst.jobs
        .iter()
        .filter_map(|j| sched.get(j.id).map(|c| j.profit * inst.discount(f64::from(c))))
        .sum()
}

/// Aggregated objective: gains at the start of their interval, losses at its end.
pub fn npv_hat(x: &AggSchedule, inst: &Instance, grid: &IntervalGrid) -> f64 {
    inst.jobs
        .iter()
        .filter_map(|j| x.get(j.id).map(|s| npv_hat_term(j.profit, s, inst.rate, grid)))
        .sum()
}

pub(crate) fn npv_hat_term(profit: f64, s: u32, rate: f64, grid: &IntervalGrid) -> f64 {
    if profit > 0.0 {
        profit * (1.0 + rate).powf(-grid.tau(s - 1))
    } else if profit < 0.0 {
        profit * (1.0 + rate).powf(-grid.tau(s))
    } else {
        0.0
    }
}

/// `100 (ub - value) / value`, undefined when `value ≤ 0`.
pub fn gap(npv_value: f64, npv_hat_ub: f64) -> Gap {
    if npv_value > 0.0 {
        Gap::Percent(100.0 * (npv_hat_ub - npv_value) / npv_value)
    } else {
        Gap::Undefined
    }
}

/// Maps every completion period to the interval that contains it.
pub fn lift_to_agg(sched: &AtSchedule, grid: &IntervalGrid) -> AggSchedule {
    AggSchedule {
        interval: sched
            .completion
            .iter()
            .map(|(&id, c)| (id, c.map(|c| grid.completion_interval(f64::from(c)))))
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Issue {
    /// Completion (period or interval) outside the schedule's range.
    OutOfRange { job: JobId, slot: u32 },
    /// Finishes before its processing time has elapsed.
    ProcessingTime { job: JobId, slot: u32 },
    /// Scheduled while a required predecessor is not.
    MissingPredecessor { job: JobId, pred: JobId },
    /// Predecessor finishes too late; `slack` is latest allowed minus actual.
    Precedence { job: JobId, pred: JobId, time: u32, slack: f64 },
    /// Consumption exceeds availability; `slack` is availability minus consumption.
    Resource { resource: u32, time: u32, slack: f64 },
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Issue::OutOfRange { job, slot } => write!(f, "job {job}: completion {slot} out of range"),
            Issue::ProcessingTime { job, slot } => write!(f, "job {job}: completion {slot} before its processing time"),
            Issue::MissingPredecessor { job, pred } => write!(f, "job {job}: predecessor {pred} not scheduled"),
            Issue::Precedence { job, pred, time, slack } => {
                write!(f, "job {job} at {time}: predecessor {pred} late by {}", -slack)
            }
            Issue::Resource { resource, time, slack } => {
                write!(f, "resource {resource} at {time}: over by {}", -slack)
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub issues: Vec<Issue>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.issues.is_empty()
    }
}

impl fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.issues.is_empty() {
            return f.write_str("feasible");
        }
        for (i, issue) in self.issues.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

/// Right-hand sides of the period resource rows, `cap[k][t-1]` for `t = 1..=horizon`.
pub(crate) fn at_capacity(inst: &Instance, horizon: u32) -> Vec<Vec<f64>> {
    inst.resources
        .iter()
        .map(|r| match inst.semantics {
            Semantics::Cumulative => (1..=horizon)
                .scan(0.0, |acc, t| {
                    *acc += r.at(t);
                    Some(*acc)
                })
                .collect(),
            Semantics::Renewable => (1..=horizon).map(|t| r.at(t)).collect(),
        })
        .collect()
}

/// Calls `add(k, t, amount)` for every period row that job `j` completing at
/// `c` contributes to.
pub(crate) fn at_usage(inst: &Instance, j: usize, c: u32, horizon: u32, mut add: impl FnMut(usize, u32, f64)) {
    let job = &inst.jobs[j];
    let p = i64::from(job.p);
    let start = i64::from(c) - p + 1;
    let first = start.max(1) as u32;
    for (k, &q) in job.demands.iter().enumerate() {
        if q == 0.0 {
            continue;
        }
        match inst.semantics {
            Semantics::Cumulative => {
                for t in first..=horizon {
                    let done = (i64::from(t) - start + 1).min(p);
                    add(k, t, q * done as f64);
                }
            }
            Semantics::Renewable => {
                for t in first..=c.min(horizon) {
                    add(k, t, q);
                }
            }
        }
    }
}

/// Right-hand sides of the interval resource rows, `cap[k][t-1]` for `t = 1..=T_I`.
pub(crate) fn agg_capacity(inst: &Instance, grid: &IntervalGrid) -> Vec<Vec<f64>> {
    inst.resources
        .iter()
        .map(|r| {
            grid.intervals()
                .map(|t| {
                    let hi = grid.tau(t).ceil() as u32;
                    match inst.semantics {
                        Semantics::Cumulative => r.sum(1, hi),
                        Semantics::Renewable => r.sum(grid.tau(t - 1).ceil() as u32 + 1, hi),
                    }
                })
                .collect()
        })
        .collect()
}

/// Interval-row coefficient of a job with duration `p` finishing in interval
/// `u`, seen from row `t`, per unit of demand.
pub(crate) fn agg_coefficient(semantics: Semantics, grid: &IntervalGrid, p: u32, u: u32, t: u32) -> f64 {
    let p = f64::from(p);
    match semantics {
        Semantics::Cumulative => {
            let c = p - (grid.tau(u) - grid.tau(t)).max(0.0);
            if c > 0.0 {
                c
            } else {
                0.0
            }
        }
        Semantics::Renewable => {
            if u < t {
                return 0.0;
            }
            let c = p - (grid.tau(u) - grid.tau(t));
            if c > 0.0 {
                c.min(grid.length(t))
            } else {
                0.0
            }
        }
    }
}

pub(crate) fn agg_usage(inst: &Instance, grid: &IntervalGrid, j: usize, s: u32, mut add: impl FnMut(usize, u32, f64)) {
    let job = &inst.jobs[j];
    for (k, &q) in job.demands.iter().enumerate() {
        if q == 0.0 {
            continue;
        }
        for t in grid.intervals() {
            let c = agg_coefficient(inst.semantics, grid, job.p, s, t);
            if c > 0.0 {
                add(k, t, q * c);
            }
        }
    }
}

fn resource_issues(inst: &Instance, cap: &[Vec<f64>], usage: &[Vec<f64>], out: &mut Vec<Issue>) {
    for (k, (cap_k, use_k)) in cap.iter().zip(usage).enumerate() {
        for (t, (&c, &u)) in cap_k.iter().zip(use_k).enumerate() {
            if !within(u, c) {
                out.push(Issue::Resource { resource: inst.resources[k].id, time: t as u32 + 1, slack: c - u });
            }
        }
    }
}

/// Checks completion bounds, direct precedences and the period resource rows
/// of the instance's semantics over `1..=sched.horizon`.
pub fn check_feasible_at(sched: &AtSchedule, inst: &Instance) -> FeasibilityReport {
    let horizon = sched.horizon;
    let slots = sched.slots(inst);
    let preds = inst.pred_indices();
    let mut issues = Vec::new();
    let mut placed = vec![None; inst.n_jobs()];
    for (j, job) in inst.jobs.iter().enumerate() {
        let Some(c) = slots[j] else { continue };
        if c == 0 || c > horizon {
            issues.push(Issue::OutOfRange { job: job.id, slot: c });
            continue;
        }
        if c < job.p {
            issues.push(Issue::ProcessingTime { job: job.id, slot: c });
            continue;
        }
        placed[j] = Some(c);
    }
    for (j, job) in inst.jobs.iter().enumerate() {
        let Some(c) = slots[j] else { continue };
        for &k in &preds[j] {
            let pred = inst.jobs[k].id;
            match slots[k] {
                None => issues.push(Issue::MissingPredecessor { job: job.id, pred }),
                Some(ck) => {
                    let latest = i64::from(c) - i64::from(job.p);
                    if i64::from(ck) > latest {
                        issues.push(Issue::Precedence { job: job.id, pred, time: c, slack: (latest - i64::from(ck)) as f64 });
                    }
                }
            }
        }
    }
    let cap = at_capacity(inst, horizon);
    let mut usage = vec![vec![0.0; horizon as usize]; inst.n_resources()];
    for (j, c) in placed.iter().enumerate() {
        if let Some(c) = *c {
            at_usage(inst, j, c, horizon, |k, t, a| usage[k][t as usize - 1] += a);
        }
    }
    resource_issues(inst, &cap, &usage, &mut issues);
    FeasibilityReport { issues }
}

/// Checks interval bounds, closure precedences with longest-path spans and the
/// interval resource rows of the instance's semantics.
pub fn check_feasible_agg(x: &AggSchedule, inst: &Instance, grid: &IntervalGrid, delta: &DeltaMatrix) -> FeasibilityReport {
    let slots = x.slots(inst);
    let mut issues = Vec::new();
    let mut placed = vec![None; inst.n_jobs()];
    for (j, job) in inst.jobs.iter().enumerate() {
        let Some(s) = slots[j] else { continue };
        if s == 0 || s > grid.count() {
            issues.push(Issue::OutOfRange { job: job.id, slot: s });
            continue;
        }
        if s < grid.interval_of(f64::from(job.p)) {
            issues.push(Issue::ProcessingTime { job: job.id, slot: s });
            continue;
        }
        placed[j] = Some(s);
    }
    for (j, job) in inst.jobs.iter().enumerate() {
        let Some(s) = placed[j] else { continue };
        for &(i, span) in delta.row(j) {
            let pred = inst.jobs[i].id;
            let limit = grid.completion_interval(grid.tau(s) - f64::from(span));
            match slots[i] {
                None => issues.push(Issue::MissingPredecessor { job: job.id, pred }),
                Some(si) if si > limit => issues.push(Issue::Precedence {
                    job: job.id,
                    pred,
                    time: s,
                    slack: f64::from(limit) - f64::from(si),
                }),
                Some(_) => {}
            }
        }
    }
    let cap = agg_capacity(inst, grid);
    let mut usage = vec![vec![0.0; grid.count() as usize]; inst.n_resources()];
    for (j, s) in placed.iter().enumerate() {
        if let Some(s) = *s {
            agg_usage(inst, grid, j, s, |k, t, a| usage[k][t as usize - 1] += a);
        }
    }
    resource_issues(inst, &cap, &usage, &mut issues);
    FeasibilityReport { issues }
}
