use std::collections::BTreeMap;

use serde::Deserialize;

use super::IoError;
use crate::model::{AtSchedule, Instance, JobId, Period};

fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T, IoError> {
    let mut de = serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| IoError::Json {
        path: e.path().to_string(),
        msg: e.into_inner().to_string(),
    })
}

pub fn parse_json(text: &str) -> Result<Instance, IoError> {
    from_json(text)
}

pub fn write_json(inst: &Instance) -> String {
    serde_json::to_string_pretty(inst).expect("instances serialize")
}

/// Reads a schedule given either as a bare map `{"job id": period | null}` or
/// as a full schedule object. Jobs not mentioned are unscheduled. A bare map
/// is checked over the instance horizon, stretched to its latest completion.
pub fn parse_schedule_json(text: &str, inst: &Instance) -> Result<AtSchedule, IoError> {
    let value: serde_json::Value = from_json(text)?;
    let full = value.as_object().is_some_and(|o| o.contains_key("completion"));
    let mut sched = if full {
        from_json::<AtSchedule>(text)?
    } else {
        let completion: BTreeMap<JobId, Option<Period>> = from_json(text)?;
        let latest = completion.values().flatten().copied().max().unwrap_or(0);
        AtSchedule { completion, horizon: inst.horizon.max(latest) }
    };
    for job in &inst.jobs {
        sched.completion.entry(job.id).or_insert(None);
    }
    Ok(sched)
}

pub fn write_schedule_json(sched: &AtSchedule) -> String {
    serde_json::to_string_pretty(sched).expect("schedules serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AggSchedule, Availability, Job, ResourceProfile, Semantics};
    use std::collections::BTreeSet;

    fn e1() -> Instance {
        Instance {
            jobs: vec![
                Job { id: JobId(1), p: 1, profit: 1.0, demands: vec![1.0], preds: BTreeSet::new() },
                Job { id: JobId(2), p: 2, profit: 1.0, demands: vec![1.0], preds: BTreeSet::from([JobId(1)]) },
            ],
            resources: vec![
                ResourceProfile::constant(1, 1.0),
                ResourceProfile { id: 2, availability: Availability::Vector(vec![0.5, 1.5, 2.0, 0.0, 1.0]) },
            ],
            horizon: 5,
            rate: 0.1,
            semantics: Semantics::Renewable,
        }
    }

    #[test]
    fn instance_round_trip() {
        let mut inst = e1();
        for j in &mut inst.jobs {
            j.demands.push(0.25);
        }
        assert_eq!(parse_json(&write_json(&inst)).unwrap(), inst);
    }

    #[test]
    fn missing_preds_default_to_empty() {
        let text = r#"{"T": 3, "rate": 0.0, "resources": [{"id": 1, "availability": {"constant": 2}}],
                       "jobs": [{"id": 7, "p": 1, "profit": 1.0, "demands": [1]}]}"#;
        let inst = parse_json(text).unwrap();
        assert!(inst.jobs[0].preds.is_empty());
        assert_eq!(inst.semantics, Semantics::Cumulative);
    }

    #[test]
    fn negative_duration_names_its_path() {
        let text = r#"{"T": 3, "rate": 0.0, "resources": [],
                       "jobs": [{"id": 7, "p": -1, "profit": 1.0, "demands": []}]}"#;
        match parse_json(text) {
            Err(IoError::Json { path, .. }) => assert_eq!(path, "jobs[0].p"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn schedules_round_trip() {
        let inst = e1();
        let sched = AtSchedule::from_slots(&inst, &[Some(1), None], 7);
        let text = write_schedule_json(&sched);
        assert_eq!(parse_schedule_json(&text, &inst).unwrap(), sched);
        let agg = AggSchedule::from_slots(&inst, &[Some(2), None]);
        let back: AggSchedule = serde_json::from_str(&serde_json::to_string(&agg).unwrap()).unwrap();
        assert_eq!(back, agg);
    }

    #[test]
    fn bare_map_schedule() {
        let inst = e1();
        let sched = parse_schedule_json(r#"{"1": 1, "2": 8}"#, &inst).unwrap();
        assert_eq!(sched.get(JobId(2)), Some(8));
        assert_eq!(sched.horizon, 8);
        let partial = parse_schedule_json(r#"{"1": 1}"#, &inst).unwrap();
        assert_eq!(partial.get(JobId(2)), None);
        assert_eq!(partial.completion.len(), 2);
    }
}
