use std::collections::{BTreeMap, BTreeSet};

use super::IoError;
use crate::model::{Instance, Job, JobId, ResourceProfile, Semantics};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsplibOptions {
    /// Profit of every non-dummy job.
    pub profit_default: f64,
    pub rate: f64,
    pub semantics: Semantics,
}

impl Default for PsplibOptions {
    fn default() -> Self {
        Self { profit_default: 1.0, rate: 0.001, semantics: Semantics::Cumulative }
    }
}

fn err(line: usize, msg: impl Into<String>) -> IoError {
    IoError::Psplib { line, msg: msg.into() }
}

fn value_after_colon(line: &str, no: usize) -> Result<u32, IoError> {
    line.split_once(':')
        .and_then(|(_, v)| v.split_whitespace().next())
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| err(no, format!("expected a number after ':' in '{}'", line.trim())))
}

fn numbers(line: &str, no: usize) -> Result<Vec<f64>, IoError> {
    line.split_whitespace().map(|t| t.parse::<f64>().map_err(|_| err(no, format!("bad number '{t}'")))).collect()
}

#[derive(Clone, Copy, PartialEq)]
enum Block {
    Header,
    Precedence,
    Requests,
    Availability,
    Other,
}

/// Parses a single-mode `.sm` file. Successor lists become predecessor sets;
/// dummy jobs (zero duration and demand) get profit 0.
pub fn parse_psplib(text: &str, opts: &PsplibOptions) -> Result<Instance, IoError> {
    let mut n_jobs = None;
    let mut horizon = None;
    let mut n_renewable = None;
    let mut block = Block::Header;
    let mut successors: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    let mut requests: BTreeMap<u32, (u32, Vec<f64>)> = BTreeMap::new();
    let mut availability: Option<Vec<f64>> = None;
    let mut seen = BTreeSet::new();

    for (i, raw) in text.lines().enumerate() {
        let no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('*') {
            continue;
        }
        let lower = line.to_ascii_lowercase();
        if lower.starts_with("precedence relations") {
            block = Block::Precedence;
            seen.insert("PRECEDENCE RELATIONS");
            continue;
        }
        if lower.starts_with("requests/durations") {
            block = Block::Requests;
            seen.insert("REQUESTS/DURATIONS");
            continue;
        }
        if lower.starts_with("resourceavailabilities") {
            block = Block::Availability;
            seen.insert("RESOURCEAVAILABILITIES");
            continue;
        }
        if lower.starts_with("project information") || lower.starts_with("resources") {
            block = if lower.starts_with("resources") { Block::Header } else { Block::Other };
            continue;
        }
        match block {
            Block::Header => {
                if lower.starts_with("jobs") {
                    n_jobs = Some(value_after_colon(line, no)?);
                } else if lower.starts_with("horizon") {
                    horizon = Some(value_after_colon(line, no)?);
                } else if lower.starts_with("- renewable") {
                    n_renewable = Some(value_after_colon(line, no)?);
                } else if lower.starts_with("- nonrenewable") || lower.starts_with("- doubly") {
                    let count = value_after_colon(line, no)?;
                    if count > 0 {
                        return Err(IoError::Unsupported(format!("line {no}: only renewable resources are read")));
                    }
                }
            }
            Block::Precedence => {
                if lower.starts_with("jobnr") {
                    continue;
                }
                let v = numbers(line, no)?;
                if v.len() < 3 {
                    return Err(err(no, "precedence row needs job, modes and successor count"));
                }
                let (job, modes, count) = (v[0] as u32, v[1] as u32, v[2] as usize);
                if modes != 1 {
                    return Err(IoError::Unsupported(format!("job {job} has {modes} modes")));
                }
                if v.len() != 3 + count {
                    return Err(err(no, format!("job {job} lists {} successors, expected {count}", v.len() - 3)));
                }
                successors.insert(job, v[3..].iter().map(|&s| s as u32).collect());
            }
            Block::Requests => {
                if lower.starts_with("jobnr") || line.starts_with('-') {
                    continue;
                }
                let v = numbers(line, no)?;
                let k = n_renewable.ok_or(IoError::MissingSection("RESOURCES"))? as usize;
                if v.len() != 3 + k {
                    return Err(err(no, format!("expected {} columns, found {}", 3 + k, v.len())));
                }
                requests.insert(v[0] as u32, (v[2] as u32, v[3..].to_vec()));
            }
            Block::Availability => {
                if line.starts_with('R') || line.starts_with('N') || line.starts_with('D') {
                    continue;
                }
                availability = Some(numbers(line, no)?);
                block = Block::Other;
            }
            Block::Other => {}
        }
    }

    let n_jobs = n_jobs.ok_or(IoError::MissingSection("jobs (incl. supersource/sink)"))?;
    let horizon = horizon.ok_or(IoError::MissingSection("horizon"))?;
    for section in ["PRECEDENCE RELATIONS", "REQUESTS/DURATIONS", "RESOURCEAVAILABILITIES"] {
        if !seen.contains(section) {
            return Err(IoError::MissingSection(section));
        }
    }
    let availability = availability.ok_or(IoError::MissingSection("RESOURCEAVAILABILITIES"))?;
    if successors.len() != n_jobs as usize || requests.len() != n_jobs as usize {
        return Err(IoError::Unsupported(format!(
            "header announces {n_jobs} jobs, found {} precedence and {} request rows",
            successors.len(),
            requests.len()
        )));
    }

    let mut preds: BTreeMap<u32, BTreeSet<JobId>> = BTreeMap::new();
    for (&j, succ) in &successors {
        for &s in succ {
            preds.entry(s).or_default().insert(JobId(j));
        }
    }
    let jobs = requests
        .into_iter()
        .map(|(id, (p, demands))| {
            let dummy = p == 0 && demands.iter().all(|&q| q == 0.0);
            Job {
                id: JobId(id),
                p,
                profit: if dummy { 0.0 } else { opts.profit_default },
                demands,
                preds: preds.remove(&id).unwrap_or_default(),
            }
        })
        .collect();
    let resources = availability
        .iter()
        .enumerate()
        .map(|(k, &r)| ResourceProfile::constant(k as u32 + 1, r))
        .collect();
    Ok(Instance { jobs, resources, horizon, rate: opts.rate, semantics: opts.semantics })
}
