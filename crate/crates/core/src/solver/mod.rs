//! Solving models: an external MIP solver driven through files, and an
//! exhaustive search usable on tiny instances.

mod brute;
mod external;

use std::collections::BTreeMap;
use std::path::PathBuf;

use thiserror::Error;

use crate::mip::{LpError, MipModel};
use crate::model::SolveStatus;

pub use brute::{
    bruteforce_agg, bruteforce_at, for_each_feasible_agg, for_each_feasible_at, solve_bruteforce, MAX_INTERVALS,
    MAX_JOBS, MAX_PERIODS,
};
pub use external::{solve_external, SolverConfig, SOLVER_ENV};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),
    #[error("interval formulations need a grid")]
    MissingGrid,
    #[error("invalid solver command template: {0}")]
    Template(String),
    #[error("i/o error in {dir}: {source}")]
    Io {
        dir: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("solution file {file}, line {line}: {msg}")]
    SolutionFormat { file: PathBuf, line: usize, msg: String },
    #[error("solver exited with {code:?} (files kept in {dir}):\n{output}")]
    Failed { code: Option<i32>, output: String, dir: PathBuf },
    #[error("invalid instance: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MipSolution {
    pub status: SolveStatus,
    /// Variables set to one; every other variable is zero.
    pub values: BTreeMap<String, f64>,
    /// Objective recomputed from the model coefficients.
    pub objective: f64,
    /// Wall time spent solving, in seconds.
    pub seconds: f64,
}

impl MipSolution {
    /// Dense value vector aligned with `model.vars`.
    pub fn dense(&self, model: &MipModel) -> Vec<f64> {
        model.vars.iter().map(|v| self.values.get(&v.name).copied().unwrap_or(0.0)).collect()
    }
}
