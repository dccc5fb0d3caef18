//! End-to-end solve: preprocess, build, solve, disaggregate, evaluate.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use log::{debug, info};
use thiserror::Error;

use crate::eval::{check_feasible_at, gap, npv, npv_hat, FeasibilityReport};
use crate::graph::{longest_path_deltas, max_closure_preprocess, prune_by_horizon, GraphError, PrecGraph};
use crate::grid::{gamma_bound, GridError, IntervalGrid};
use crate::io::PsplibOptions;
use crate::mip::{build_model, BuildError, FormulationKind, ModelError};
use crate::model::{
    validate_instance, AtSchedule, Gap, Instance, JobId, Semantics, SolveReport, SolveStatus, ValidationReport,
};
use crate::reconstruct::{disaggregate, DisaggregateError, UnplaceablePolicy};
use crate::solver::{solve_bruteforce, solve_external, SolveError, SolverConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum SolverChoice {
    External(SolverConfig),
    /// Exhaustive search; only for tiny instances.
    BruteForce,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PreprocessConfig {
    /// Remove jobs that cannot finish by this period.
    pub horizon_limit: Option<u32>,
    /// Keep only the maximum closure under profits scaled by this factor.
    pub nested_pit_alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub epsilon: f64,
    /// Overrides the instance discount rate.
    pub rate: Option<f64>,
    /// Overrides the instance semantics.
    pub semantics: Option<Semantics>,
    pub formulation: FormulationKind,
    pub solver: SolverChoice,
    /// Profit of non-dummy jobs read from PSPLib files.
    pub profit_default: f64,
    pub preprocess: PreprocessConfig,
    pub policy: UnplaceablePolicy,
}

impl RunConfig {
    pub fn new(epsilon: f64, formulation: FormulationKind, solver: SolverChoice) -> Self {
        Self {
            epsilon,
            rate: None,
            semantics: None,
            formulation,
            solver,
            profit_default: 1.0,
            preprocess: PreprocessConfig::default(),
            policy: UnplaceablePolicy::DropJob,
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |msg: String| Err(PipelineError::Config(msg));
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if let Some(r) = self.rate {
            if !(r >= 0.0) || !r.is_finite() {
                return bad(format!("rate must be non-negative, got {r}"));
            }
        }
        if let Some(a) = self.preprocess.nested_pit_alpha {
            if !(0.0..=1.0).contains(&a) {
                return bad(format!("alpha must lie in [0, 1], got {a}"));
            }
        }
        if self.preprocess.horizon_limit == Some(0) {
            return bad("horizon limit must be at least 1".into());
        }
        Ok(())
    }

    /// Options for reading PSPLib files under this configuration.
    pub fn psplib_options(&self) -> PsplibOptions {
        let defaults = PsplibOptions::default();
        PsplibOptions {
            profit_default: self.profit_default,
            rate: self.rate.unwrap_or(defaults.rate),
            semantics: self.semantics.unwrap_or(defaults.semantics),
        }
    }

    /// The instance with the configured rate and semantics applied.
    pub fn apply(&self, inst: &Instance) -> Instance {
        let mut inst = inst.clone();
        if let Some(r) = self.rate {
            inst.rate = r;
        }
        if let Some(s) = self.semantics {
            inst.semantics = s;
        }
        inst
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("validate: invalid instance:\n{0}")]
    Invalid(ValidationReport),
    #[error("grid: {0}")]
    Grid(#[from] GridError),
    #[error("preprocess: {0}")]
    Preprocess(#[from] GraphError),
    #[error("build: {0}")]
    Build(#[from] BuildError),
    #[error("solve: {0}")]
    Solve(#[from] SolveError),
    #[error("decode: {0}")]
    Decode(#[from] ModelError),
    #[error("disaggregate: {0}")]
    Disaggregate(#[from] DisaggregateError),
    #[error("evaluate: produced schedule is infeasible:\n{0}")]
    Evaluate(FeasibilityReport),
}

impl PipelineError {
    pub fn phase(&self) -> &'static str {
        match self {
            PipelineError::Config(_) => "configuration",
            PipelineError::Invalid(_) => "validate",
            PipelineError::Grid(_) => "grid",
            PipelineError::Preprocess(_) => "preprocess",
            PipelineError::Build(_) => "build",
            PipelineError::Solve(_) => "solve",
            PipelineError::Decode(_) => "decode",
            PipelineError::Disaggregate(_) => "disaggregate",
            PipelineError::Evaluate(_) => "evaluate",
        }
    }
}

/// Positions of the jobs that survive horizon pruning and the closure filter.
pub fn preprocess(inst: &Instance, cfg: &PreprocessConfig) -> Result<BTreeSet<usize>, GraphError> {
    let mut keep: BTreeSet<usize> = (0..inst.n_jobs()).collect();
    if let Some(limit) = cfg.horizon_limit {
        let g = PrecGraph::from_instance(inst);
        let delta = longest_path_deltas(&g)?;
        let durations: Vec<u32> = inst.jobs.iter().map(|j| j.p).collect();
        for j in prune_by_horizon(&delta, &durations, limit) {
            keep.remove(&j);
        }
    }
    if let Some(alpha) = cfg.nested_pit_alpha {
        let sub = inst.restrict(&keep);
        let positions: Vec<usize> = keep.iter().copied().collect();
        let weights: Vec<f64> = sub.jobs.iter().map(|j| j.profit).collect();
        let closure = max_closure_preprocess(&PrecGraph::from_instance(&sub), &weights, alpha);
        keep = closure.into_iter().map(|i| positions[i]).collect();
    }
    Ok(keep)
}

struct Clock {
    times: BTreeMap<String, f64>,
    started: Instant,
    lap: Instant,
}

impl Clock {
    fn new() -> Self {
        let now = Instant::now();
        Self { times: BTreeMap::new(), started: now, lap: now }
    }

    fn lap(&mut self, phase: &str) {
        let now = Instant::now();
        self.times.insert(phase.to_string(), (now - self.lap).as_secs_f64());
        self.lap = now;
    }

    fn finish(mut self) -> BTreeMap<String, f64> {
        self.times.insert("total".into(), self.started.elapsed().as_secs_f64());
        self.times
    }
}

/// Runs the full pipeline on one instance.
///
/// For interval formulations the report carries the aggregated optimum as
/// upper bound; for the period formulation the bound is the proven optimum.
/// Both are only set when the solver proved optimality. Jobs removed by
/// preprocessing or dropped during disaggregation stay unscheduled, and the
/// bound then refers to the preprocessed instance.
pub fn run_pipeline(cfg: &RunConfig, inst: &Instance) -> Result<SolveReport, PipelineError> {
    cfg.validate()?;
    let mut clock = Clock::new();
    let inst = cfg.apply(inst);
    let report = validate_instance(&inst);
    if !report.is_valid() {
        return Err(PipelineError::Invalid(report));
    }
    let grid = IntervalGrid::new(cfg.epsilon, inst.horizon)?;

    let keep = preprocess(&inst, &cfg.preprocess)?;
    let removed: Vec<JobId> =
        inst.jobs.iter().enumerate().filter(|(i, _)| !keep.contains(i)).map(|(_, j)| j.id).collect();
    let sub = inst.restrict(&keep);
    if !removed.is_empty() {
        info!("preprocessing removed {} of {} jobs", removed.len(), inst.n_jobs());
    }
    clock.lap("preprocess");

    let model = build_model(&sub, cfg.formulation, &grid)?;
    debug!("{} model: {} variables, {} rows", cfg.formulation, model.n_vars(), model.n_constraints());
    clock.lap("build");

    let solution = match &cfg.solver {
        SolverChoice::External(sc) => solve_external(&model, sc)?,
        SolverChoice::BruteForce => solve_bruteforce(&sub, cfg.formulation, Some(&grid))?,
    };
    clock.lap("solve");
    let values = solution.dense(&model);

    let (sub_schedule, aggregated, dropped, hat) = if cfg.formulation.is_aggregated() {
        let x = model.decode_agg(&sub, &values)?;
        let d = disaggregate(&x, &sub, &grid, cfg.policy)?;
        let hat = npv_hat(&x, &sub, &grid);
        (d.schedule, Some(x), d.dropped, hat)
    } else {
        let s = model.decode_at(&sub, &values, sub.horizon)?;
        let v = npv(&s, &sub);
        (s, None, Vec::new(), v)
    };
    clock.lap("disaggregate");

    let feasibility = check_feasible_at(&sub_schedule, &sub);
    if !feasibility.is_feasible() {
        return Err(PipelineError::Evaluate(feasibility));
    }
    let mut schedule = AtSchedule::empty(&inst);
    schedule.horizon = sub_schedule.horizon;
    for (id, c) in &sub_schedule.completion {
        schedule.completion.insert(*id, *c);
    }
    let value = npv(&schedule, &inst);
    let npv_hat_ub = (solution.status == SolveStatus::Optimal).then_some(hat);
    let gap = npv_hat_ub.map_or(Gap::Undefined, |ub| gap(value, ub));
    let gamma = if cfg.formulation.is_aggregated() {
        gamma_bound(inst.rate, f64::from(inst.horizon), cfg.epsilon)
    } else {
        1.0
    };
    clock.lap("evaluate");

    let mut wall_times = clock.finish();
    // Solver wall time only; file handling is counted in the total.
    wall_times.insert("solve".into(), solution.seconds);

    Ok(SolveReport {
        npv: value,
        npv_hat_ub,
        gap,
        gamma,
        solver_status: solution.status,
        wall_times,
        beyond_horizon: schedule.completion.values().flatten().any(|&c| c > inst.horizon),
        schedule,
        aggregated,
        dropped,
        removed,
    })
}
