//! Solver-agnostic 0-1 linear models for the period ("at") formulation and
//! the two interval formulations ("at" and cumulative "by").

mod build;
mod lp;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::within;
use crate::model::{AggSchedule, AtSchedule, Instance, JobId};

pub use build::{build_agg_at, build_agg_by, build_model, build_orig_at, BuildError};
pub use lp::{parse_lp, write_lp, LpError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormulationKind {
    /// Binary `x_jt`: job `j` finishes at period `t`.
    OrigAt,
    /// Binary `X_js`: job `j` finishes in interval `s`.
    AggAt,
    /// Binary `Y_js`: job `j` has finished by the end of interval `s`.
    AggBy,
}

impl FormulationKind {
    pub fn is_aggregated(self) -> bool {
        !matches!(self, FormulationKind::OrigAt)
    }

    fn prefix(self) -> &'static str {
        match self {
            FormulationKind::OrigAt => "x",
            FormulationKind::AggAt => "X",
            FormulationKind::AggBy => "Y",
        }
    }
}

impl fmt::Display for FormulationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FormulationKind::OrigAt => "orig-at",
            FormulationKind::AggAt => "agg-at",
            FormulationKind::AggBy => "agg-by",
        })
    }
}

impl FromStr for FormulationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "orig-at" => Ok(FormulationKind::OrigAt),
            "agg-at" => Ok(FormulationKind::AggAt),
            "agg-by" => Ok(FormulationKind::AggBy),
            other => Err(format!("unknown formulation '{other}' (orig-at, agg-at, agg-by)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Var {
    pub name: String,
    pub kind: VarKind,
    pub job: JobId,
    /// Period for `x`, interval for `X` and `Y`.
    pub slot: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    /// `(variable index, coefficient)`.
    pub terms: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("duplicate name '{0}'")]
    DuplicateName(String),
    #[error("term references undeclared variable {0}")]
    UnknownVar(usize),
    #[error("no variable for job {job} at {slot} in this model")]
    MissingVar { job: JobId, slot: u32 },
    #[error("value {value} of '{name}' is not binary")]
    NotBinary { name: String, value: f64 },
}

/// Maximization model over binary variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MipModel {
    pub kind: FormulationKind,
    pub vars: Vec<Var>,
    pub objective: Vec<(usize, f64)>,
    pub constraints: Vec<Constraint>,
}

/// Outcome of evaluating a model at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointEval {
    pub objective: f64,
    /// Names of the rows that do not hold.
    pub violated: Vec<String>,
}

impl PointEval {
    pub fn is_feasible(&self) -> bool {
        self.violated.is_empty()
    }
}

impl MipModel {
    pub fn empty(kind: FormulationKind) -> Self {
        Self { kind, vars: Vec::new(), objective: Vec::new(), constraints: Vec::new() }
    }

    pub fn n_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn n_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn var_index(&self) -> HashMap<&str, usize> {
        self.vars.iter().enumerate().map(|(i, v)| (v.name.as_str(), i)).collect()
    }

    fn slot_index(&self) -> HashMap<(JobId, u32), usize> {
        self.vars.iter().enumerate().map(|(i, v)| ((v.job, v.slot), i)).collect()
    }

    /// Checks that names are unique and every term points at a declared variable.
    pub fn validate(&self) -> Result<(), ModelError> {
        let mut seen = std::collections::HashSet::new();
        for name in self.vars.iter().map(|v| &v.name).chain(self.constraints.iter().map(|c| &c.name)) {
            if !seen.insert(name.as_str()) {
                return Err(ModelError::DuplicateName(name.clone()));
            }
        }
        let n = self.vars.len();
        for &(v, _) in self.objective.iter().chain(self.constraints.iter().flat_map(|c| c.terms.iter())) {
            if v >= n {
                return Err(ModelError::UnknownVar(v));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().map(|&(v, c)| c * values[v]).sum()
    }

    /// Objective and violated rows at `values` (one entry per variable).
    pub fn evaluate(&self, values: &[f64]) -> PointEval {
        let violated = self
            .constraints
            .iter()
            .filter(|c| {
                let lhs: f64 = c.terms.iter().map(|&(v, a)| a * values[v]).sum();
                match c.relation {
                    Relation::Le => !within(lhs, c.rhs),
                    Relation::Eq => !(within(lhs, c.rhs) && within(c.rhs, lhs)),
                }
            })
            .map(|c| c.name.clone())
            .collect();
        PointEval { objective: self.objective_value(values), violated }
    }

    /// Binary point of a period schedule; fails when a completion has no variable.
    pub fn point_for_at(&self, sched: &AtSchedule) -> Result<Vec<f64>, ModelError> {
        let index = self.slot_index();
        let mut values = vec![0.0; self.vars.len()];
        for (&job, &c) in &sched.completion {
            if let Some(c) = c {
                let &v = index.get(&(job, c)).ok_or(ModelError::MissingVar { job, slot: c })?;
                values[v] = 1.0;
            }
        }
        Ok(values)
    }

    /// Binary point of an interval schedule for either interval formulation.
    pub fn point_for_agg(&self, x: &AggSchedule) -> Result<Vec<f64>, ModelError> {
        let index = self.slot_index();
        let mut values = vec![0.0; self.vars.len()];
        for (&job, &s) in &x.interval {
            let Some(s) = s else { continue };
            match self.kind {
                FormulationKind::AggBy => {
                    if !index.contains_key(&(job, s)) {
                        return Err(ModelError::MissingVar { job, slot: s });
                    }
                    for (&(j, u), &v) in &index {
                        if j == job && u >= s {
                            values[v] = 1.0;
                        }
                    }
                }
                _ => {
                    let &v = index.get(&(job, s)).ok_or(ModelError::MissingVar { job, slot: s })?;
                    values[v] = 1.0;
                }
            }
        }
        Ok(values)
    }

    fn round_binary(&self, values: &[f64]) -> Result<Vec<bool>, ModelError> {
        self.vars
            .iter()
            .zip(values)
            .map(|(var, &x)| {
                if (x - 1.0).abs() <= 1e-4 {
                    Ok(true)
                } else if x.abs() <= 1e-4 {
                    Ok(false)
                } else {
                    Err(ModelError::NotBinary { name: var.name.clone(), value: x })
                }
            })
            .collect()
    }

    /// Completion periods of an `x` solution; the earliest set slot wins.
    pub fn decode_at(&self, inst: &Instance, values: &[f64], horizon: u32) -> Result<AtSchedule, ModelError> {
        let mut sched = AtSchedule::empty(inst);
        sched.horizon = horizon;
        for (var, on) in self.vars.iter().zip(self.round_binary(values)?) {
            if on {
                let entry = sched.completion.entry(var.job).or_insert(None);
                if entry.is_none_or(|c| var.slot < c) {
                    *entry = Some(var.slot);
                }
            }
        }
        Ok(sched)
    }

    /// Interval of every job from an `X` or `Y` solution. For `Y` this is the
    /// first interval with `Y_js = 1`.
    pub fn decode_agg(&self, inst: &Instance, values: &[f64]) -> Result<AggSchedule, ModelError> {
        let mut x = AggSchedule::empty(inst);
        for (var, on) in self.vars.iter().zip(self.round_binary(values)?) {
            if on {
                let entry = x.interval.entry(var.job).or_insert(None);
                if entry.is_none_or(|s| var.slot < s) {
                    *entry = Some(var.slot);
                }
            }
        }
        Ok(x)
    }
}
