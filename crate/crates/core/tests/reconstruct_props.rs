mod common;

use common::{instances, GenParams};
use geomsched::eval::{check_feasible_at, npv};
use geomsched::grid::{build_grid, gamma_bound};
use geomsched::mip::FormulationKind;
use geomsched::model::{Gap, Instance, Job, JobId, ResourceProfile, Semantics};
use geomsched::pipeline::{run_pipeline, RunConfig, SolverChoice};
use geomsched::reconstruct::{disaggregate, UnplaceablePolicy};
use geomsched::solver::{bruteforce_agg, bruteforce_at};
use proptest::prelude::*;

fn nonnegative() -> GenParams {
    GenParams { semantics: Some(Semantics::Cumulative), nonnegative_profits: true, ..GenParams::default() }
}

fn job(id: u32, p: u32, profit: f64, preds: &[u32]) -> Job {
    Job { id: JobId(id), p, profit, demands: vec![0.0], preds: preds.iter().map(|&i| JobId(i)).collect() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn output_is_always_feasible(
        inst in instances(GenParams::default()),
        eps in prop::sample::select(vec![0.3, 0.7, 1.0, 2.0]),
    ) {
        let grid = build_grid(eps, inst.horizon).unwrap();
        let (_, x) = bruteforce_agg(&inst, &grid).unwrap();
        let d = disaggregate(&x, &inst, &grid, UnplaceablePolicy::DropJob).unwrap();
        prop_assert!(check_feasible_at(&d.schedule, &inst).is_feasible());
        prop_assert!(d.schedule.horizon >= grid.extended_horizon());
        for j in &inst.jobs {
            if x.get(j.id).is_none() {
                prop_assert_eq!(d.schedule.get(j.id), None);
            }
        }
    }

    #[test]
    fn completion_sandwich_at_unit_epsilon(inst in instances(nonnegative())) {
        let eps = 1.0;
        let grid = build_grid(eps, inst.horizon).unwrap();
        let (_, x) = bruteforce_agg(&inst, &grid).unwrap();
        let d = disaggregate(&x, &inst, &grid, UnplaceablePolicy::Fail).unwrap();
        for j in &inst.jobs {
            if let (Some(c), Some(s)) = (d.schedule.get(j.id), x.get(j.id)) {
                let c = f64::from(c);
                prop_assert!(grid.tau(s - 1) < c, "job {} C {} s {}", j.id, c, s);
                prop_assert!(c <= grid.tau(s) * (1.0 + 2.0 * eps) / (1.0 + eps) + 1e-9, "job {} C {} s {}", j.id, c, s);
            }
        }
    }

    #[test]
    fn gamma_guarantee_at_unit_epsilon(inst in instances(nonnegative())) {
        let cfg = RunConfig::new(1.0, FormulationKind::AggAt, SolverChoice::BruteForce);
        let rep = run_pipeline(&cfg, &inst).unwrap();
        let (opt, _) = bruteforce_at(&inst).unwrap();
        let gamma = gamma_bound(inst.rate, f64::from(inst.horizon), 1.0);
        prop_assert!(rep.npv >= gamma * opt - 1e-9, "npv {} gamma·opt {}", rep.npv, gamma * opt);
        prop_assert!(rep.npv <= rep.npv_hat_ub.unwrap() + 1e-9);
        prop_assert!(opt <= rep.npv_hat_ub.unwrap() + 1e-9);
    }
}

/// A unit job the optimum finishes at period 1. The list scheduler starts
/// interval 1 at period 2, which costs a full period of discounting, more
/// than γ allows once `T·2ε/(1+ε) < 1`.
#[test]
fn first_interval_costs_a_period_at_small_epsilon() {
    let inst = Instance {
        jobs: vec![job(1, 1, 1.0, &[])],
        resources: vec![ResourceProfile::constant(1, 1.0)],
        horizon: 2,
        rate: 0.1,
        semantics: Semantics::Cumulative,
    };
    let eps = 0.3;
    let grid = build_grid(eps, 2).unwrap();
    let cfg = RunConfig::new(eps, FormulationKind::AggAt, SolverChoice::BruteForce);
    let rep = run_pipeline(&cfg, &inst).unwrap();
    assert_eq!(rep.aggregated.as_ref().unwrap().get(JobId(1)), Some(1));
    assert_eq!(rep.schedule.get(JobId(1)), Some(2));
    assert!(2.0 > grid.tau(1) * (1.0 + 2.0 * eps) / (1.0 + eps));
    let (opt, _) = bruteforce_at(&inst).unwrap();
    assert!((opt - 1.0 / 1.1).abs() < 1e-12);
    assert!(rep.npv < gamma_bound(0.1, 2.0, eps) * opt);
}

/// Losses before gains: the interval model sees the loss late and the gain
/// early, so it schedules both, and the real schedule loses money.
#[test]
fn negative_profit_predecessor_breaks_the_guarantee() {
    let inst = Instance {
        jobs: vec![job(1, 2, -10.0, &[]), job(2, 1, 10.5, &[1])],
        resources: vec![ResourceProfile::constant(1, 1.0)],
        horizon: 4,
        rate: 0.5,
        semantics: Semantics::Cumulative,
    };
    let (opt, best) = bruteforce_at(&inst).unwrap();
    assert_eq!(opt, 0.0);
    assert_eq!(best.scheduled_count(), 0);
    let cfg = RunConfig::new(3.0, FormulationKind::AggAt, SolverChoice::BruteForce);
    let rep = run_pipeline(&cfg, &inst).unwrap();
    assert_eq!(rep.schedule.scheduled_count(), 2);
    assert!(rep.npv < 0.0);
    assert!((rep.npv - npv(&rep.schedule, &inst)).abs() < 1e-12);
    assert_eq!(rep.gap, Gap::Undefined);
}
