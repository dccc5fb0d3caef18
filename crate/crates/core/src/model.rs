//! Domain types shared by every stage of the pipeline: jobs, resource
//! profiles, instances, and the two schedule spaces (periods and intervals).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Identifier of a job as it appears in instance files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JobId(pub u32);

impl fmt::Display for JobId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Discrete time period, 1-based.
pub type Period = u32;

/// Index of a geometric interval, 1-based (0 only as a sentinel for "before time 1").
pub type IntervalIdx = u32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub id: JobId,
    /// Processing time in periods. Zero only for structural dummy jobs.
    pub p: u32,
    /// Revenue collected on completion; may be negative.
    pub profit: f64,
    /// Per-period consumption of each resource while the job is active.
    pub demands: Vec<f64>,
    /// Jobs that must finish before this one starts.
    #[serde(default)]
    pub preds: BTreeSet<JobId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Availability {
    /// Same amount in every period.
    Constant(f64),
    /// One value per period `1..=T`.
    Vector(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceProfile {
    pub id: u32,
    pub availability: Availability,
}

impl ResourceProfile {
    pub fn constant(id: u32, rate: f64) -> Self {
        Self { id, availability: Availability::Constant(rate) }
    }

    /// Fresh amount available at period `t` (1-based). Vector profiles are
    /// extended past their end by repeating the last value.
    pub fn at(&self, t: Period) -> f64 {
        if t == 0 {
            return 0.0;
        }
        match &self.availability {
            Availability::Constant(rate) => *rate,
            Availability::Vector(values) => {
                let idx = (t as usize - 1).min(values.len().saturating_sub(1));
                values.get(idx).copied().unwrap_or(0.0)
            }
        }
    }

    /// Total amount received over periods `from..=to` (empty when `from > to`).
    pub fn sum(&self, from: Period, to: Period) -> f64 {
        let from = from.max(1);
        if from > to {
            return 0.0;
        }
        match &self.availability {
            Availability::Constant(rate) => rate * f64::from(to - from + 1),
            Availability::Vector(_) => (from..=to).map(|t| self.at(t)).sum(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Semantics {
    /// Unused resources carry over to later periods.
    #[default]
    Cumulative,
    /// Per-period capacity; unused amounts are lost.
    Renewable,
}

impl fmt::Display for Semantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Semantics::Cumulative => "cumulative",
            Semantics::Renewable => "renewable",
        })
    }
}

impl std::str::FromStr for Semantics {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cumulative" => Ok(Semantics::Cumulative),
            "renewable" => Ok(Semantics::Renewable),
            other => Err(format!("unknown resource semantics '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub jobs: Vec<Job>,
    pub resources: Vec<ResourceProfile>,
    /// Planning horizon `T` in periods.
    #[serde(rename = "T", alias = "horizon")]
    pub horizon: u32,
    /// Discount rate per period.
    pub rate: f64,
    #[serde(default)]
    pub semantics: Semantics,
}

impl Instance {
    pub fn n_jobs(&self) -> usize {
        self.jobs.len()
    }

    pub fn n_resources(&self) -> usize {
        self.resources.len()
    }

    /// Map from job id to its position in `jobs`.
    pub fn index_map(&self) -> HashMap<JobId, usize> {
        self.jobs.iter().enumerate().map(|(i, j)| (j.id, i)).collect()
    }

    /// Direct predecessors as positions into `jobs`. Dangling ids are skipped;
    /// run [`validate_instance`] first when that matters.
    pub fn pred_indices(&self) -> Vec<Vec<usize>> {
        let index = self.index_map();
        self.jobs
            .iter()
            .map(|j| j.preds.iter().filter_map(|p| index.get(p).copied()).collect())
            .collect()
    }

    pub fn discount(&self, t: f64) -> f64 {
        (1.0 + self.rate).powf(-t)
    }

    /// Copy of the instance restricted to the jobs in `keep` (positions).
    /// Predecessor sets are filtered to the retained jobs.
    pub fn restrict(&self, keep: &BTreeSet<usize>) -> Instance {
        let kept_ids: BTreeSet<JobId> = keep.iter().map(|&i| self.jobs[i].id).collect();
        let jobs = keep
            .iter()
            .map(|&i| {
                let mut job = self.jobs[i].clone();
                job.preds.retain(|p| kept_ids.contains(p));
                job
            })
            .collect();
        Instance { jobs, ..self.clone() }
    }
}

/// A problem found by [`validate_instance`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    DuplicateId { job: JobId },
    SelfPrecedence { job: JobId },
    DanglingPred { job: JobId, pred: JobId },
    Cycle { jobs: Vec<JobId> },
    DemandLength { job: JobId, expected: usize, found: usize },
    NegativeDemand { job: JobId, resource: usize, value: f64 },
    NonFiniteProfit { job: JobId },
    AvailabilityLength { resource: u32, expected: usize, found: usize },
    NegativeAvailability { resource: u32, period: Period, value: f64 },
    ZeroHorizon,
    NegativeRate { rate: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateId { job } => write!(f, "duplicate job id {job}"),
            Violation::SelfPrecedence { job } => write!(f, "self-precedence at job {job}"),
            Violation::DanglingPred { job, pred } => {
                write!(f, "job {job} lists unknown predecessor {pred}")
            }
            Violation::Cycle { jobs } => {
                let ids: Vec<String> = jobs.iter().map(ToString::to_string).collect();
                write!(f, "precedence cycle [{}]", ids.join(","))
            }
            Violation::DemandLength { job, expected, found } => {
                write!(f, "job {job} has {found} demands, expected {expected}")
            }
            Violation::NegativeDemand { job, resource, value } => {
                write!(f, "job {job} has negative demand {value} on resource {resource}")
            }
            Violation::NonFiniteProfit { job } => write!(f, "job {job} has a non-finite profit"),
            Violation::AvailabilityLength { resource, expected, found } => {
                write!(f, "resource {resource} has {found} availability values, expected {expected}")
            }
            Violation::NegativeAvailability { resource, period, value } => {
                write!(f, "resource {resource} has negative availability {value} at period {period}")
            }
            Violation::ZeroHorizon => f.write_str("horizon must be at least 1"),
            Violation::NegativeRate { rate } => write!(f, "discount rate {rate} is negative"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Collects every structural problem of an instance. Never fails: an empty
/// report means the instance is usable by all builders.
pub fn validate_instance(inst: &Instance) -> ValidationReport {
    let mut violations = Vec::new();
    let k = inst.n_resources();

    if inst.horizon == 0 {
        violations.push(Violation::ZeroHorizon);
    }
    if !(inst.rate >= 0.0) {
        violations.push(Violation::NegativeRate { rate: inst.rate });
    }

    let mut seen = BTreeSet::new();
    for job in &inst.jobs {
        if !seen.insert(job.id) {
            violations.push(Violation::DuplicateId { job: job.id });
        }
    }

    for job in &inst.jobs {
        if !job.profit.is_finite() {
            violations.push(Violation::NonFiniteProfit { job: job.id });
        }
        if job.preds.contains(&job.id) {
            violations.push(Violation::SelfPrecedence { job: job.id });
        }
        for pred in &job.preds {
            if !seen.contains(pred) {
                violations.push(Violation::DanglingPred { job: job.id, pred: *pred });
            }
        }
        if job.demands.len() != k {
            violations.push(Violation::DemandLength {
                job: job.id,
                expected: k,
                found: job.demands.len(),
            });
        }
        for (r, &q) in job.demands.iter().enumerate() {
            if !(q >= 0.0) || !q.is_finite() {
                violations.push(Violation::NegativeDemand { job: job.id, resource: r, value: q });
            }
        }
    }

    for res in &inst.resources {
        match &res.availability {
            Availability::Constant(rate) => {
                if !(*rate >= 0.0) {
                    violations.push(Violation::NegativeAvailability {
                        resource: res.id,
                        period: 1,
                        value: *rate,
                    });
                }
            }
            Availability::Vector(values) => {
                if values.len() != inst.horizon as usize {
                    violations.push(Violation::AvailabilityLength {
                        resource: res.id,
                        expected: inst.horizon as usize,
                        found: values.len(),
                    });
                }
                for (t, &v) in values.iter().enumerate() {
                    if !(v >= 0.0) {
                        violations.push(Violation::NegativeAvailability {
                            resource: res.id,
                            period: t as Period + 1,
                            value: v,
                        });
                    }
                }
            }
        }
    }

    // Self-loops are already reported; search cycles among the remaining arcs.
    let index = inst.index_map();
    let preds: Vec<Vec<usize>> = inst
        .jobs
        .iter()
        .map(|j| {
            j.preds
                .iter()
                .filter(|p| **p != j.id)
                .filter_map(|p| index.get(p).copied())
                .collect()
        })
        .collect();
    if let Some(cycle) = crate::graph::find_cycle(&preds) {
        violations.push(Violation::Cycle { jobs: cycle.into_iter().map(|i| inst.jobs[i].id).collect() });
    }

    ValidationReport { violations }
}

/// Completion period of every job; `None` means the job is not scheduled.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtSchedule {
    pub completion: BTreeMap<JobId, Option<Period>>,
    /// Last period the schedule may use (at least the instance horizon).
    pub horizon: Period,
}

impl AtSchedule {
    pub fn empty(inst: &Instance) -> Self {
        Self {
            completion: inst.jobs.iter().map(|j| (j.id, None)).collect(),
            horizon: inst.horizon,
        }
    }

    /// Builds a schedule from completions listed in job order.
    pub fn from_slots(inst: &Instance, slots: &[Option<Period>], horizon: Period) -> Self {
        Self {
            completion: inst.jobs.iter().zip(slots).map(|(j, &c)| (j.id, c)).collect(),
            horizon,
        }
    }

    /// Completions aligned with `inst.jobs`; jobs missing from the map are unscheduled.
    pub fn slots(&self, inst: &Instance) -> Vec<Option<Period>> {
        inst.jobs.iter().map(|j| self.completion.get(&j.id).copied().flatten()).collect()
    }

    pub fn get(&self, job: JobId) -> Option<Period> {
        self.completion.get(&job).copied().flatten()
    }

    pub fn scheduled_count(&self) -> usize {
        self.completion.values().filter(|c| c.is_some()).count()
    }
}

/// Interval in which every job finishes; `None` means not scheduled.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggSchedule {
    pub interval: BTreeMap<JobId, Option<IntervalIdx>>,
}

impl AggSchedule {
    pub fn empty(inst: &Instance) -> Self {
        Self { interval: inst.jobs.iter().map(|j| (j.id, None)).collect() }
    }

    pub fn from_slots(inst: &Instance, slots: &[Option<IntervalIdx>]) -> Self {
        Self { interval: inst.jobs.iter().zip(slots).map(|(j, &s)| (j.id, s)).collect() }
    }

    pub fn slots(&self, inst: &Instance) -> Vec<Option<IntervalIdx>> {
        inst.jobs.iter().map(|j| self.interval.get(&j.id).copied().flatten()).collect()
    }

    pub fn get(&self, job: JobId) -> Option<IntervalIdx> {
        self.interval.get(&job).copied().flatten()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Feasible,
    TimeLimit,
    Infeasible,
    Error,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Feasible => "feasible",
            SolveStatus::TimeLimit => "time_limit",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Error => "error",
        })
    }
}

/// Optimality gap in percent; undefined when the heuristic value is not positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Gap {
    Percent(f64),
    Undefined,
}

impl Gap {
    pub fn percent(&self) -> Option<f64> {
        match self {
            Gap::Percent(p) => Some(*p),
            Gap::Undefined => None,
        }
    }
}

impl fmt::Display for Gap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gap::Percent(p) => write!(f, "{p:.4}"),
            Gap::Undefined => f.write_str("undefined"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub npv: f64,
    /// Upper bound on the optimum: the aggregated objective for interval
    /// formulations, the proven optimum for the period formulation.
    pub npv_hat_ub: Option<f64>,
    pub gap: Gap,
    pub gamma: f64,
    pub solver_status: SolveStatus,
    /// Seconds per phase (`preprocess`, `build`, `solve`, `disaggregate`, `evaluate`, `total`).
    pub wall_times: BTreeMap<String, f64>,
    pub schedule: AtSchedule,
    pub aggregated: Option<AggSchedule>,
    /// Some completion lies past the instance horizon.
    pub beyond_horizon: bool,
    /// Jobs dropped during disaggregation because they could not be placed.
    pub dropped: Vec<JobId>,
    /// Jobs removed by preprocessing before the model was built.
    pub removed: Vec<JobId>,
}

impl SolveReport {
    /// Holds whenever the report comes from an optimal solve with non-negative profits.
    pub fn respects_bound(&self) -> bool {
        self.npv_hat_ub.is_none_or(|ub| self.npv <= ub + 1e-9 * ub.abs().max(1.0))
    }
}
