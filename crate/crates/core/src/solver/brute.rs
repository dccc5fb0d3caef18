use std::collections::BTreeMap;
use std::time::Instant;

use super::{MipSolution, SolveError};
use crate::eval::{
    agg_capacity, agg_usage, at_capacity, at_usage, check_feasible_agg, check_feasible_at, npv_hat_term, within,
};
use crate::graph::{longest_path_deltas, DeltaMatrix, PrecGraph};
use crate::grid::IntervalGrid;
use crate::mip::FormulationKind;
use crate::model::{validate_instance, AggSchedule, AtSchedule, Instance, SolveStatus};

pub const MAX_JOBS: usize = 8;
pub const MAX_PERIODS: u32 = 14;
pub const MAX_INTERVALS: u32 = 14;

/// Search space: one domain of slots per job plus the resource rows each
/// choice loads. Jobs are visited in a topological order.
struct Space<'a> {
    inst: &'a Instance,
    order: Vec<usize>,
    domains: Vec<Vec<u32>>,
    gains: Vec<Vec<f64>>,
    loads: Vec<Vec<Vec<(usize, f64)>>>,
    cap: Vec<f64>,
    prec: Precedence<'a>,
}

enum Precedence<'a> {
    /// Direct predecessors: `C_k ≤ C_j - p_j`.
    Periods(Vec<Vec<usize>>),
    /// Closure with spans: `s_k ≤ I(τ_{s_j} - Δ_jk)`.
    Intervals(&'a IntervalGrid, DeltaMatrix),
}

impl Space<'_> {
    fn precedence_ok(&self, j: usize, slot: u32, slots: &[Option<u32>]) -> bool {
        match &self.prec {
            Precedence::Periods(preds) => {
                let latest = i64::from(slot) - i64::from(self.inst.jobs[j].p);
                preds[j].iter().all(|&k| slots[k].is_some_and(|c| i64::from(c) <= latest))
            }
            Precedence::Intervals(grid, delta) => delta.row(j).iter().all(|&(k, span)| {
                let limit = grid.completion_interval(grid.tau(slot) - f64::from(span));
                slots[k].is_some_and(|s| s <= limit)
            }),
        }
    }

    fn has_unscheduled_pred(&self, j: usize, slots: &[Option<u32>]) -> bool {
        match &self.prec {
            Precedence::Periods(preds) => preds[j].iter().any(|&k| slots[k].is_none()),
            Precedence::Intervals(_, delta) => delta.row(j).iter().any(|&(k, _)| slots[k].is_none()),
        }
    }
}

fn guard(inst: &Instance) -> Result<(), SolveError> {
    let report = validate_instance(inst);
    if !report.is_valid() {
        return Err(SolveError::Invalid(report.to_string()));
    }
    if inst.n_jobs() > MAX_JOBS {
        return Err(SolveError::TooLarge(format!("{} jobs (at most {MAX_JOBS})", inst.n_jobs())));
    }
    Ok(())
}

fn period_space(inst: &Instance) -> Result<Space<'_>, SolveError> {
    guard(inst)?;
    if inst.horizon > MAX_PERIODS {
        return Err(SolveError::TooLarge(format!("horizon {} (at most {MAX_PERIODS})", inst.horizon)));
    }
    let horizon = inst.horizon;
    let g = PrecGraph::from_instance(inst);
    let order = g.topo().map_err(|e| SolveError::Invalid(e.to_string()))?;
    let rows = horizon as usize;
    let cap: Vec<f64> = at_capacity(inst, horizon).concat();
    let mut domains = Vec::new();
    let mut gains = Vec::new();
    let mut loads = Vec::new();
    for (j, job) in inst.jobs.iter().enumerate() {
        let dom: Vec<u32> = (job.p.max(1)..=horizon).collect();
        gains.push(dom.iter().map(|&c| job.profit * inst.discount(f64::from(c))).collect());
        loads.push(
            dom.iter()
                .map(|&c| {
                    let mut l = Vec::new();
                    at_usage(inst, j, c, horizon, |k, t, a| l.push((k * rows + t as usize - 1, a)));
                    l
                })
                .collect(),
        );
        domains.push(dom);
    }
    Ok(Space { inst, order, domains, gains, loads, cap, prec: Precedence::Periods(inst.pred_indices()) })
}

fn interval_space<'a>(inst: &'a Instance, grid: &'a IntervalGrid) -> Result<Space<'a>, SolveError> {
    guard(inst)?;
    if grid.count() > MAX_INTERVALS {
        return Err(SolveError::TooLarge(format!("{} intervals (at most {MAX_INTERVALS})", grid.count())));
    }
    let g = PrecGraph::from_instance(inst);
    let order = g.topo().map_err(|e| SolveError::Invalid(e.to_string()))?;
    let delta = longest_path_deltas(&g).map_err(|e| SolveError::Invalid(e.to_string()))?;
    let rows = grid.count() as usize;
    let cap: Vec<f64> = agg_capacity(inst, grid).concat();
    let mut domains = Vec::new();
    let mut gains = Vec::new();
    let mut loads = Vec::new();
    for (j, job) in inst.jobs.iter().enumerate() {
        let lo = grid.interval_of(f64::from(job.p)).max(1);
        let dom: Vec<u32> = (lo..=grid.count()).collect();
        gains.push(dom.iter().map(|&s| npv_hat_term(job.profit, s, inst.rate, grid)).collect());
        loads.push(
            dom.iter()
                .map(|&s| {
                    let mut l = Vec::new();
                    agg_usage(inst, grid, j, s, |k, t, a| l.push((k * rows + t as usize - 1, a)));
                    l
                })
                .collect(),
        );
        domains.push(dom);
    }
    Ok(Space { inst, order, domains, gains, loads, cap, prec: Precedence::Intervals(grid, delta) })
}

struct Search<'s, 'a, F: FnMut(&[Option<u32>], f64) -> bool> {
    space: &'s Space<'a>,
    slots: Vec<Option<u32>>,
    used: Vec<f64>,
    /// Best value reachable from the remaining jobs, for pruning; `None` disables it.
    optimistic: Option<Vec<f64>>,
    leaf: F,
    best: f64,
}

impl<F: FnMut(&[Option<u32>], f64) -> bool> Search<'_, '_, F> {
    fn run(&mut self, depth: usize, value: f64) {
        if depth == self.space.order.len() {
            if (self.leaf)(&self.slots, value) {
                self.best = self.best.max(value);
            }
            return;
        }
        if let Some(rest) = &self.optimistic {
            let bound = value + rest[depth];
            if bound < self.best - 1e-9 * self.best.abs().max(1.0) {
                return;
            }
        }
        let space = self.space;
        let j = space.order[depth];
        if !space.has_unscheduled_pred(j, &self.slots) {
            for (d, &slot) in space.domains[j].iter().enumerate() {
                if !space.precedence_ok(j, slot, &self.slots) {
                    continue;
                }
                let load = &space.loads[j][d];
                for &(r, a) in load {
                    self.used[r] += a;
                }
                if load.iter().all(|&(r, _)| within(self.used[r], space.cap[r])) {
                    self.slots[j] = Some(slot);
                    self.run(depth + 1, value + space.gains[j][d]);
                    self.slots[j] = None;
                }
                for &(r, a) in load {
                    self.used[r] -= a;
                }
            }
        }
        self.run(depth + 1, value);
    }
}

fn optimistic(space: &Space) -> Vec<f64> {
    let mut rest = vec![0.0; space.order.len() + 1];
    for d in (0..space.order.len()).rev() {
        let j = space.order[d];
        let best = space.gains[j].iter().copied().fold(0.0, f64::max);
        rest[d] = rest[d + 1] + best;
    }
    rest
}

/// Maximizer over all feasible assignments; ties go to the lexicographically
/// smallest slot vector in job order, with unscheduled below every slot.
fn maximize(space: &Space) -> (f64, Vec<Option<u32>>) {
    let n = space.inst.n_jobs();
    let mut best_slots = vec![None; n];
    let mut best_value = 0.0f64;
    let mut search = Search {
        space,
        slots: vec![None; n],
        used: vec![0.0; space.cap.len()],
        optimistic: Some(optimistic(space)),
        leaf: |slots: &[Option<u32>], value: f64| {
            let tol = 1e-12 * best_value.abs().max(1.0);
            if value > best_value + tol || (value >= best_value - tol && slots < best_slots.as_slice()) {
                best_value = value;
                best_slots = slots.to_vec();
            }
            true
        },
        best: 0.0,
    };
    search.run(0, 0.0);
    drop(search);
    (best_value, best_slots)
}

fn enumerate(space: &Space, mut f: impl FnMut(&[Option<u32>])) {
    let n = space.inst.n_jobs();
    let mut search = Search {
        space,
        slots: vec![None; n],
        used: vec![0.0; space.cap.len()],
        optimistic: None,
        leaf: |slots: &[Option<u32>], _| {
            f(slots);
            false
        },
        best: f64::NEG_INFINITY,
    };
    search.run(0, 0.0);
}

/// Optimal period schedule and its NPV.
pub fn bruteforce_at(inst: &Instance) -> Result<(f64, AtSchedule), SolveError> {
    let space = period_space(inst)?;
    let (value, slots) = maximize(&space);
    let sched = AtSchedule::from_slots(inst, &slots, inst.horizon);
    let report = check_feasible_at(&sched, inst);
    assert!(report.is_feasible(), "exhaustive search produced an infeasible schedule: {report}");
    Ok((value, sched))
}

/// Optimal interval schedule and its aggregated objective.
pub fn bruteforce_agg(inst: &Instance, grid: &IntervalGrid) -> Result<(f64, AggSchedule), SolveError> {
    let space = interval_space(inst, grid)?;
    let (value, slots) = maximize(&space);
    let x = AggSchedule::from_slots(inst, &slots);
    if let Precedence::Intervals(_, delta) = &space.prec {
        let report = check_feasible_agg(&x, inst, grid, delta);
        assert!(report.is_feasible(), "exhaustive search produced an infeasible schedule: {report}");
    }
    Ok((value, x))
}

/// Visits the completion vector (job order) of every feasible period schedule.
pub fn for_each_feasible_at(inst: &Instance, f: impl FnMut(&[Option<u32>])) -> Result<(), SolveError> {
    let space = period_space(inst)?;
    enumerate(&space, f);
    Ok(())
}

/// Visits the interval vector (job order) of every feasible interval schedule.
pub fn for_each_feasible_agg(inst: &Instance, grid: &IntervalGrid, f: impl FnMut(&[Option<u32>])) -> Result<(), SolveError> {
    let space = interval_space(inst, grid)?;
    enumerate(&space, f);
    Ok(())
}

/// Exhaustive solve reported in the variable naming of the matching model.
pub fn solve_bruteforce(
    inst: &Instance,
    kind: FormulationKind,
    grid: Option<&IntervalGrid>,
) -> Result<MipSolution, SolveError> {
    let started = Instant::now();
    let mut values = BTreeMap::new();
    let objective = match kind {
        FormulationKind::OrigAt => {
            let (v, sched) = bruteforce_at(inst)?;
            for (id, c) in &sched.completion {
                if let Some(c) = c {
                    values.insert(format!("x_{id}_{c}"), 1.0);
                }
            }
            v
        }
        FormulationKind::AggAt | FormulationKind::AggBy => {
            let grid = grid.ok_or(SolveError::MissingGrid)?;
            let (v, x) = bruteforce_agg(inst, grid)?;
            for (id, s) in &x.interval {
                let Some(s) = *s else { continue };
                if kind == FormulationKind::AggAt {
                    values.insert(format!("X_{id}_{s}"), 1.0);
                } else {
                    for u in s..=grid.count() {
                        values.insert(format!("Y_{id}_{u}"), 1.0);
                    }
                }
            }
            v
        }
    };
    Ok(MipSolution { status: SolveStatus::Optimal, values, objective, seconds: started.elapsed().as_secs_f64() })
}
