//! Turning an interval schedule into a period schedule by list scheduling.
//!
//! Jobs are taken in a topological order keyed by (interval, -profit, id).
//! Each job starts its search at the first period after the start of its
//! interval (and after its predecessors) and moves right until the resources
//! over its occupied window `[t - p + 1, t]` suffice.

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{check_feasible_agg, within, FeasibilityReport};
use crate::graph::{longest_path_deltas, topological_order, GraphError, PrecGraph, Priority};
use crate::grid::IntervalGrid;
use crate::model::{AggSchedule, AtSchedule, Instance, JobId, Period, Semantics};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnplaceablePolicy {
    /// Leave the job and everything that depends on it unscheduled.
    #[default]
    DropJob,
    Fail,
}

#[derive(Debug, Error)]
pub enum DisaggregateError {
    #[error("interval schedule is not feasible:\n{0}")]
    Infeasible(FeasibilityReport),
    #[error("job {0} cannot be placed at any period")]
    Unplaceable(JobId),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Disaggregation {
    pub schedule: AtSchedule,
    pub dropped: Vec<JobId>,
    /// Some completion lies after the instance horizon.
    pub beyond_horizon: bool,
}

/// Free resources per period, with a suffix minimum for cumulative rows.
struct Ledger {
    semantics: Semantics,
    /// `slack[k][t]` for `t = 0..=limit` (index 0 unused).
    slack: Vec<Vec<f64>>,
    /// `suffix_min[k][t] = min_{u ≥ t} slack[k][u]`.
    suffix_min: Vec<Vec<f64>>,
    /// Largest single-period availability, for the renewable early exit.
    peak: Vec<f64>,
}

impl Ledger {
    fn new(inst: &Instance, limit: Period) -> Self {
        let mut slack = Vec::new();
        let mut peak = Vec::new();
        for r in &inst.resources {
            let mut row = vec![0.0; limit as usize + 1];
            let mut acc = 0.0;
            let mut top = 0.0f64;
            for t in 1..=limit {
                let fresh = r.at(t);
                top = top.max(fresh);
                acc += fresh;
                row[t as usize] = match inst.semantics {
                    Semantics::Cumulative => acc,
                    Semantics::Renewable => fresh,
                };
            }
            slack.push(row);
            peak.push(top);
        }
        let mut ledger = Self { semantics: inst.semantics, suffix_min: slack.clone(), slack, peak };
        for k in 0..ledger.slack.len() {
            ledger.refresh(k);
        }
        ledger
    }

    fn limit(&self) -> Period {
        self.slack.first().map_or(Period::MAX, |r| r.len() as Period - 1)
    }

    fn refresh(&mut self, k: usize) {
        let row = &self.slack[k];
        let mins = &mut self.suffix_min[k];
        let mut m = f64::INFINITY;
        for t in (1..row.len()).rev() {
            m = m.min(row[t]);
            mins[t] = m;
        }
    }

    fn never_fits(&self, demands: &[f64]) -> bool {
        self.semantics == Semantics::Renewable && demands.iter().zip(&self.peak).any(|(&q, &r)| !within(q, r))
    }

    fn fits(&self, demands: &[f64], p: u32, c: Period) -> bool {
        if c > self.limit() {
            return false;
        }
        let start = c - p;
        demands.iter().enumerate().filter(|(_, &q)| q > 0.0).all(|(k, &q)| {
            let row = &self.slack[k];
            match self.semantics {
                Semantics::Cumulative => {
                    (start + 1..c).all(|t| within(q * f64::from(t - start), row[t as usize]))
                        && within(q * f64::from(p), self.suffix_min[k][c as usize])
                }
                Semantics::Renewable => (start + 1..=c).all(|t| within(q, row[t as usize])),
            }
        })
    }

    fn place(&mut self, demands: &[f64], p: u32, c: Period) {
        let start = c - p;
        for (k, &q) in demands.iter().enumerate() {
            if q <= 0.0 {
                continue;
            }
            let row = &mut self.slack[k];
            match self.semantics {
                Semantics::Cumulative => {
                    for t in start + 1..row.len() as Period {
                        row[t as usize] -= q * f64::from((t - start).min(p));
                    }
                }
                Semantics::Renewable => {
                    for t in start + 1..=c {
                        row[t as usize] -= q;
                    }
                }
            }
            self.refresh(k);
        }
    }
}

/// Last period the search may probe: far enough that a job that does not fit
/// by then never will.
fn probe_limit(inst: &Instance, grid: &IntervalGrid) -> Period {
    let total_p: u64 = inst.jobs.iter().map(|j| u64::from(j.p)).sum();
    let vector_len = inst
        .resources
        .iter()
        .map(|r| match &r.availability {
            crate::model::Availability::Vector(v) => v.len() as u64,
            crate::model::Availability::Constant(_) => 0,
        })
        .max()
        .unwrap_or(0);
    let mut extra = 0u64;
    if inst.semantics == Semantics::Cumulative {
        for (k, r) in inst.resources.iter().enumerate() {
            let demand: f64 = inst.jobs.iter().map(|j| j.demands[k] * f64::from(j.p)).sum();
            let tail = r.at(Period::MAX);
            if tail > 0.0 {
                extra = extra.max((demand / tail).ceil() as u64);
            }
        }
    }
    let base = u64::from(grid.extended_horizon()).max(vector_len);
    (base + total_p + extra.min(1_000_000) + 1).min(u64::from(Period::MAX / 2)) as Period
}

/// Disaggregates an interval schedule that satisfies the interval model.
pub fn disaggregate(
    x: &AggSchedule,
    inst: &Instance,
    grid: &IntervalGrid,
    policy: UnplaceablePolicy,
) -> Result<Disaggregation, DisaggregateError> {
    let g = PrecGraph::from_instance(inst);
    let delta = longest_path_deltas(&g)?;
    let report = check_feasible_agg(x, inst, grid, &delta);
    if !report.is_feasible() {
        return Err(DisaggregateError::Infeasible(report));
    }
    let slots = x.slots(inst);
    let priority: Vec<Option<Priority>> = inst
        .jobs
        .iter()
        .zip(&slots)
        .map(|(job, s)| s.map(|interval| Priority { interval, profit: job.profit }))
        .collect();
    let order = topological_order(&g, &priority)?;

    let mut ledger = Ledger::new(inst, probe_limit(inst, grid));
    let mut completion: Vec<Option<Period>> = vec![None; inst.n_jobs()];
    let mut dropped = Vec::new();
    for j in order {
        let job = &inst.jobs[j];
        let s = slots[j].expect("ordered jobs are scheduled");
        let mut pred_done = Some(0u32);
        for &k in g.preds(j) {
            pred_done = match (pred_done, completion[k]) {
                (Some(a), Some(c)) => Some(a.max(c)),
                _ => None,
            };
        }
        let Some(pred_done) = pred_done else {
            dropped.push(job.id);
            continue;
        };
        let mut t = (grid.tau(s - 1).floor() as Period + 1).max(pred_done + job.p).max(job.p);
        if ledger.never_fits(&job.demands) {
            t = ledger.limit() + 1;
        }
        while t <= ledger.limit() && !ledger.fits(&job.demands, job.p, t) {
            t += 1;
        }
        if t > ledger.limit() {
            match policy {
                UnplaceablePolicy::Fail => return Err(DisaggregateError::Unplaceable(job.id)),
                UnplaceablePolicy::DropJob => {
                    warn!("job {} cannot be placed; dropping it and its dependents", job.id);
                    dropped.push(job.id);
                    continue;
                }
            }
        }
        ledger.place(&job.demands, job.p, t);
        completion[j] = Some(t);
    }

    let latest = completion.iter().flatten().copied().max().unwrap_or(0);
    let horizon = grid.extended_horizon().max(inst.horizon).max(latest);
    Ok(Disaggregation {
        beyond_horizon: latest > inst.horizon,
        schedule: AtSchedule::from_slots(inst, &completion, horizon),
        dropped,
    })
}
