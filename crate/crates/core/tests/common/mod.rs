//! Random small instances shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use geomsched::model::{Availability, Instance, Job, JobId, ResourceProfile, Semantics};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy)]
pub struct GenParams {
    pub max_jobs: usize,
    pub min_horizon: u32,
    pub max_horizon: u32,
    pub max_p: u32,
    /// `None` draws either semantics.
    pub semantics: Option<Semantics>,
    pub nonnegative_profits: bool,
    pub max_resources: usize,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            max_jobs: 6,
            min_horizon: 2,
            max_horizon: 10,
            max_p: 3,
            semantics: None,
            nonnegative_profits: false,
            max_resources: 2,
        }
    }
}

pub fn random_instance(rng: &mut impl Rng, params: &GenParams) -> Instance {
    let n = rng.gen_range(1..=params.max_jobs);
    let horizon = rng.gen_range(params.min_horizon..=params.max_horizon);
    let k = rng.gen_range(1..=params.max_resources);
    let semantics = params.semantics.unwrap_or(if rng.gen_bool(0.5) {
        Semantics::Cumulative
    } else {
        Semantics::Renewable
    });
    let rate = [0.0, 0.05, 0.1, 0.3][rng.gen_range(0..4)];
    let resources = (0..k)
        .map(|r| {
            let availability = if rng.gen_bool(0.7) {
                Availability::Constant(f64::from(rng.gen_range(1..=4u32)))
            } else {
                Availability::Vector((0..horizon).map(|_| f64::from(rng.gen_range(0..=4u32))).collect())
            };
            ResourceProfile { id: r as u32 + 1, availability }
        })
        .collect();
    let jobs = (0..n)
        .map(|j| {
            let p = if rng.gen_bool(0.1) { 0 } else { rng.gen_range(1..=params.max_p) };
            let profit = if params.nonnegative_profits {
                f64::from(rng.gen_range(0..=20u32)) / 2.0
            } else {
                f64::from(rng.gen_range(-10..=20i32)) / 2.0
            };
            let demands = (0..k).map(|_| f64::from(rng.gen_range(0..=3u32))).collect();
            let preds: BTreeSet<JobId> = (0..j).filter(|_| rng.gen_bool(0.3)).map(|i| JobId(i as u32 + 1)).collect();
            Job { id: JobId(j as u32 + 1), p, profit, demands, preds }
        })
        .collect();
    Instance { jobs, resources, horizon, rate, semantics }
}

pub fn seeded(seed: u64, params: &GenParams) -> Instance {
    random_instance(&mut ChaCha8Rng::seed_from_u64(seed), params)
}

/// Instances drawn from a seed, so failures are reproducible from the seed alone.
pub fn instances(params: GenParams) -> impl Strategy<Value = Instance> {
    any::<u64>().prop_map(move |seed| seeded(seed, &params))
}

/// Completion periods including out-of-range and precedence-breaking ones.
pub fn random_slots(rng: &mut impl Rng, n: usize, max_slot: u32) -> Vec<Option<u32>> {
    (0..n).map(|_| if rng.gen_bool(0.3) { None } else { Some(rng.gen_range(0..=max_slot + 1)) }).collect()
}

/// HiGHS through the bundled script, when python3 with highspy is available.
pub fn highs_config() -> Option<geomsched::solver::SolverConfig> {
    let script = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scripts/highs_solve.py");
    let ok = std::process::Command::new("python3")
        .args(["-c", "import highspy"])
        .output()
        .is_ok_and(|o| o.status.success());
    if !ok {
        eprintln!("python3 with highspy not found; skipping external solver checks");
        return None;
    }
    let template = format!("python3 {} {{model}} {{solution}} --time-limit {{time_limit}}", script.display());
    Some(geomsched::solver::SolverConfig::new(template, 60.0, 0.0).unwrap())
}
