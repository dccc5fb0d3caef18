use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use super::{MipSolution, SolveError};
use crate::mip::{write_lp, MipModel};
use crate::model::SolveStatus;

/// Environment variable holding the default command template.
pub const SOLVER_ENV: &str = "GEOMSCHED_SOLVER_CMD";

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Whitespace-separated command; `{model}` and `{solution}` are replaced by
    /// file paths, `{time_limit}` and `{mip_gap}` by the numbers below.
    pub command_template: String,
    pub time_limit_s: f64,
    pub mip_gap: f64,
}

impl SolverConfig {
    pub fn new(command_template: impl Into<String>, time_limit_s: f64, mip_gap: f64) -> Result<Self, SolveError> {
        let command_template = command_template.into();
        for placeholder in ["{model}", "{solution}"] {
            if !command_template.contains(placeholder) {
                return Err(SolveError::Template(format!("'{command_template}' lacks {placeholder}")));
            }
        }
        if !(time_limit_s > 0.0) {
            return Err(SolveError::Template(format!("time limit must be positive, got {time_limit_s}")));
        }
        if !(mip_gap >= 0.0) {
            return Err(SolveError::Template(format!("mip gap must be non-negative, got {mip_gap}")));
        }
        Ok(Self { command_template, time_limit_s, mip_gap })
    }

    /// Template taken from the environment, if set.
    pub fn from_env(time_limit_s: f64, mip_gap: f64) -> Option<Result<Self, SolveError>> {
        std::env::var(SOLVER_ENV).ok().map(|t| Self::new(t, time_limit_s, mip_gap))
    }

    fn argv(&self, model: &Path, solution: &Path) -> Vec<String> {
        self.command_template
            .split_whitespace()
            .map(|tok| {
                tok.replace("{model}", &model.to_string_lossy())
                    .replace("{solution}", &solution.to_string_lossy())
                    .replace("{time_limit}", &self.time_limit_s.to_string())
                    .replace("{mip_gap}", &self.mip_gap.to_string())
            })
            .collect()
    }
}

fn parse_solution(path: &Path, model: &MipModel) -> Result<BTreeMap<String, f64>, SolveError> {
    let text = fs::read_to_string(path).map_err(|source| SolveError::Io { dir: path.to_path_buf(), source })?;
    let names = model.var_index();
    let mut values = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |msg: String| SolveError::SolutionFormat { file: path.to_path_buf(), line: no + 1, msg };
        let mut parts = line.split_whitespace();
        let (Some(name), Some(value), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(bad(format!("expected 'name value', got '{line}'")));
        };
        if !names.contains_key(name) {
            return Err(bad(format!("unknown variable '{name}'")));
        }
        let v: f64 = value.parse().map_err(|_| bad(format!("bad value '{value}'")))?;
        let rounded = v.round();
        if (v - rounded).abs() > 1e-4 || !(rounded == 0.0 || rounded == 1.0) {
            return Err(bad(format!("value {v} of '{name}' is not binary")));
        }
        if rounded == 1.0 {
            values.insert(name.to_string(), 1.0);
        }
    }
    Ok(values)
}

/// Writes the model to a temporary directory, runs the configured command and
/// reads back its solution file.
///
/// Exit status 0 means optimal, 10 infeasible, 11 time limit, 12 stopped with
/// an incumbent; anything else is an error. On errors the directory is kept.
pub fn solve_external(model: &MipModel, cfg: &SolverConfig) -> Result<MipSolution, SolveError> {
    let dir = tempfile::Builder::new()
        .prefix("geomsched-")
        .tempdir()
        .map_err(|source| SolveError::Io { dir: std::env::temp_dir(), source })?;
    let model_path = dir.path().join("model.lp");
    let sol_path = dir.path().join("solution.txt");
    let io = |source| SolveError::Io { dir: dir.path().to_path_buf(), source };
    fs::write(&model_path, write_lp(model)?).map_err(io)?;

    let argv = cfg.argv(&model_path, &sol_path);
    let started = Instant::now();
    let output = Command::new(&argv[0]).args(&argv[1..]).output();
    let seconds = started.elapsed().as_secs_f64();
    let output = match output {
        Ok(o) => o,
        Err(e) => {
            return Err(SolveError::Failed { code: None, output: format!("cannot run '{}': {e}", argv[0]), dir: dir.keep() })
        }
    };
    let code = output.status.code();
    let captured = || {
        format!("{}{}", String::from_utf8_lossy(&output.stdout), String::from_utf8_lossy(&output.stderr))
    };
    let has_solution = sol_path.exists();
    let status = match (code, has_solution) {
        (Some(0), true) => SolveStatus::Optimal,
        (Some(10), _) => SolveStatus::Infeasible,
        (Some(11), _) => SolveStatus::TimeLimit,
        (Some(12), true) => SolveStatus::Feasible,
        _ => return Err(SolveError::Failed { code, output: captured(), dir: dir.keep() }),
    };
    let values = if has_solution && status != SolveStatus::Infeasible {
        match parse_solution(&sol_path, model) {
            Ok(v) => v,
            Err(e) => {
                let _ = dir.keep();
                return Err(e);
            }
        }
    } else {
        BTreeMap::new()
    };
    let dense: Vec<f64> = model.vars.iter().map(|v| values.get(&v.name).copied().unwrap_or(0.0)).collect();
    Ok(MipSolution { status, objective: model.objective_value(&dense), values, seconds })
}
