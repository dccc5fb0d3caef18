//! Batch runs over instance files with per-ε summaries.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use log::error;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::read_instance;
use crate::model::{Semantics, SolveStatus};
use crate::pipeline::{run_pipeline, RunConfig};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("bad pattern '{pattern}': {msg}")]
    Pattern { pattern: String, msg: String },
    #[error("no instance matches '{0}'")]
    NoMatch(String),
    #[error("cannot start worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One instance solved at one ε. Failed runs have status `error` and no values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub instance: String,
    pub epsilon: f64,
    pub semantics: Semantics,
    pub status: SolveStatus,
    pub solve_seconds: Option<f64>,
    pub npv: Option<f64>,
    pub npv_hat_ub: Option<f64>,
    pub gap_percent: Option<f64>,
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub epsilon: f64,
    pub instances: usize,
    /// Runs that finished with a proof of optimality.
    pub solved: usize,
    pub avg_seconds: Option<f64>,
    /// Mean over runs with a defined gap.
    pub avg_gap_percent: Option<f64>,
}

pub fn bench_glob(pattern: &str) -> Result<Vec<PathBuf>, BenchError> {
    let paths = glob::glob(pattern).map_err(|e| BenchError::Pattern { pattern: pattern.into(), msg: e.to_string() })?;
    let mut found: Vec<PathBuf> = paths.filter_map(Result::ok).filter(|p| p.is_file()).collect();
    found.sort();
    if found.is_empty() {
        return Err(BenchError::NoMatch(pattern.into()));
    }
    Ok(found)
}

fn instance_name(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn run_one(cfg: &RunConfig, path: &Path, epsilon: f64) -> BenchRow {
    let mut cfg = cfg.clone();
    cfg.epsilon = epsilon;
    let name = instance_name(path);
    let failed = |semantics| BenchRow {
        instance: name.clone(),
        epsilon,
        semantics,
        status: SolveStatus::Error,
        solve_seconds: None,
        npv: None,
        npv_hat_ub: None,
        gap_percent: None,
        gamma: None,
    };
    let inst = match read_instance(path, &cfg.psplib_options()) {
        Ok(inst) => cfg.apply(&inst),
        Err(e) => {
            error!("{}: {e}", path.display());
            return failed(cfg.semantics.unwrap_or_default());
        }
    };
    match run_pipeline(&cfg, &inst) {
        Ok(rep) => BenchRow {
            instance: name,
            epsilon,
            semantics: inst.semantics,
            status: rep.solver_status,
            solve_seconds: rep.wall_times.get("solve").copied(),
            npv: Some(rep.npv),
            npv_hat_ub: rep.npv_hat_ub,
            gap_percent: rep.gap.percent(),
            gamma: Some(rep.gamma),
        },
        Err(e) => {
            error!("{} at epsilon {epsilon}: {e}", path.display());
            failed(inst.semantics)
        }
    }
}

/// Solves every file at every ε on `jobs` threads. Rows come back sorted by
/// (instance, ε) whatever the thread count.
pub fn bench(cfg: &RunConfig, paths: &[PathBuf], epsilons: &[f64], jobs: usize) -> Result<Vec<BenchRow>, BenchError> {
    let tasks: Vec<(&PathBuf, f64)> = paths.iter().flat_map(|p| epsilons.iter().map(move |&e| (p, e))).collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().map_err(|e| BenchError::Pool(e.to_string()))?;
    let mut rows: Vec<BenchRow> = pool.install(|| tasks.par_iter().map(|&(p, e)| run_one(cfg, p, e)).collect());
    rows.sort_by(|a, b| a.instance.cmp(&b.instance).then(a.epsilon.total_cmp(&b.epsilon)));
    Ok(rows)
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// One summary per distinct ε, in ascending order.
pub fn summarize(rows: &[BenchRow]) -> Vec<BenchSummary> {
    let mut epsilons: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
    epsilons.sort_by(f64::total_cmp);
    epsilons.dedup();
    epsilons
        .into_iter()
        .map(|epsilon| {
            let group: Vec<&BenchRow> = rows.iter().filter(|r| r.epsilon == epsilon).collect();
            BenchSummary {
                epsilon,
                instances: group.len(),
                solved: group.iter().filter(|r| r.status == SolveStatus::Optimal).count(),
                avg_seconds: mean(group.iter().filter_map(|r| r.solve_seconds)),
                avg_gap_percent: mean(group.iter().filter_map(|r| r.gap_percent)),
            }
        })
        .collect()
}

pub fn write_csv(rows: &[BenchRow], out: impl Write) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads rows back; `#` lines (the summary) are skipped.
pub fn read_csv(input: impl Read) -> Result<Vec<BenchRow>, BenchError> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(input).deserialize().map(|r| r.map_err(BenchError::from)).collect()
}

/// Summary lines in the layout `epsilon, solved/instances, avg time, avg gap`.
pub fn write_summary(summary: &[BenchSummary], mut out: impl Write) -> std::io::Result<()> {
    let opt = |v: Option<f64>, prec: usize| v.map_or_else(|| "-".to_string(), |v| format!("{v:.prec$}"));
    for s in summary {
        writeln!(
            out,
            "# epsilon {}: solved {}/{}, avg time {} s, avg gap {} %",
            s.epsilon,
            s.solved,
            s.instances,
            opt(s.avg_seconds, 3),
            opt(s.avg_gap_percent, 2)
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct JsonReport<'a> {
    rows: &'a [BenchRow],
    summary: Vec<BenchSummary>,
}

pub fn write_json(rows: &[BenchRow], out: impl Write) -> Result<(), BenchError> {
    serde_json::to_writer_pretty(out, &JsonReport { rows, summary: summarize(rows) }).map_err(std::io::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(name: &str, epsilon: f64, status: SolveStatus, gap: Option<f64>) -> BenchRow {
        BenchRow {
            instance: name.into(),
            epsilon,
            semantics: Semantics::Cumulative,
            status,
            solve_seconds: Some(0.125),
            npv: gap.map(|_| 1.0 / 3.0),
            npv_hat_ub: gap.map(|g| (1.0 / 3.0) * (1.0 + g / 100.0)),
            gap_percent: gap,
            gamma: Some(0.9),
        }
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![
            row("a", 0.5, SolveStatus::Optimal, Some(0.1)),
            row("b", 1.0, SolveStatus::Error, None),
        ];
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        write_summary(&summarize(&rows), &mut buf).unwrap();
        let header = String::from_utf8(buf.clone()).unwrap();
        assert!(header.starts_with(
            "instance,epsilon,semantics,status,solve_seconds,npv,npv_hat_ub,gap_percent,gamma\n"
        ));
        assert_eq!(read_csv(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn summary_per_epsilon() {
        let rows = vec![
            row("a", 0.5, SolveStatus::Optimal, Some(1.0)),
            row("b", 0.5, SolveStatus::Optimal, Some(3.0)),
            row("a", 1.0, SolveStatus::TimeLimit, None),
        ];
        let s = summarize(&rows);
        assert_eq!(s.len(), 2);
        assert_eq!((s[0].instances, s[0].solved, s[0].avg_gap_percent), (2, 2, Some(2.0)));
        assert_eq!((s[1].solved, s[1].avg_gap_percent), (0, None));
        let mut text = Vec::new();
        write_summary(&s, &mut text).unwrap();
        assert_eq!(String::from_utf8(text).unwrap().lines().count(), 2);
    }

    #[test]
    fn empty_glob_is_an_error() {
        assert!(matches!(bench_glob("/nonexistent-dir-for-geomsched/*.sm"), Err(BenchError::NoMatch(_))));
    }
}
