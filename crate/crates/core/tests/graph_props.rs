mod common;

use std::collections::BTreeSet;

use common::{instances, GenParams};
use geomsched::eval::check_feasible_agg;
use geomsched::graph::{
    longest_path_deltas, max_closure_preprocess, prune_by_horizon, topological_order, transitive_closure, PrecGraph,
    Priority,
};
use geomsched::grid::build_grid;
use geomsched::mip::build_agg_at;
use geomsched::model::{AggSchedule, JobId};
use proptest::prelude::*;

/// DAG on `n` nodes with arcs only from lower to higher index.
fn dag(max_nodes: usize) -> impl Strategy<Value = (Vec<u32>, Vec<Vec<usize>>)> {
    (1..=max_nodes).prop_flat_map(|n| {
        let durations = prop::collection::vec(0u32..5, n);
        let arcs = prop::collection::vec(any::<bool>(), n * n);
        (durations, arcs).prop_map(move |(d, bits)| {
            let preds = (0..n).map(|j| (0..j).filter(|&i| bits[j * n + i]).collect()).collect();
            (d, preds)
        })
    })
}

fn graph(durations: &[u32], preds: &[Vec<usize>]) -> PrecGraph {
    let ids = (0..durations.len()).map(|j| JobId(j as u32 + 1)).collect();
    PrecGraph::from_parts(ids, durations.to_vec(), preds.to_vec())
}

/// Longest path weight from `i` to `j`, summing durations of every node after `i`.
fn longest_by_paths(durations: &[u32], preds: &[Vec<usize>], j: usize, i: usize) -> Option<u32> {
    preds[j]
        .iter()
        .filter_map(|&k| if k == i { Some(0) } else { longest_by_paths(durations, preds, k, i) })
        .max()
        .map(|rest| rest + durations[j])
}

fn is_closed(preds: &[Vec<usize>], set: &BTreeSet<usize>) -> bool {
    set.iter().all(|&j| preds[j].iter().all(|k| set.contains(k)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn deltas_match_path_enumeration((durations, preds) in dag(8)) {
        let delta = longest_path_deltas(&graph(&durations, &preds)).unwrap();
        for j in 0..durations.len() {
            for i in 0..durations.len() {
                prop_assert_eq!(delta.get(j, i), longest_by_paths(&durations, &preds, j, i), "Δ({},{})", j, i);
            }
        }
    }

    #[test]
    fn transitive_reduction_keeps_reachability((durations, preds) in dag(8)) {
        let g = graph(&durations, &preds);
        let reduced = g.transitive_reduction().unwrap();
        let h = graph(&durations, &reduced);
        prop_assert_eq!(transitive_closure(&g).unwrap(), transitive_closure(&h).unwrap());
        // No kept arc is implied by a longer path.
        let closure = transitive_closure(&h).unwrap();
        for (j, ks) in reduced.iter().enumerate() {
            for &k in ks {
                let implied = ks.iter().any(|&m| m != k && closure[m].contains(&k));
                prop_assert!(!implied, "arc {}->{} is redundant", k, j);
            }
        }
    }

    #[test]
    fn topological_order_respects_precedence(
        (durations, preds) in dag(8),
        keys in prop::collection::vec((1u32..5, -3i32..3), 8),
    ) {
        let g = graph(&durations, &preds);
        let prio: Vec<Option<Priority>> =
            (0..durations.len()).map(|j| Some(Priority { interval: keys[j].0, profit: f64::from(keys[j].1) })).collect();
        let order = topological_order(&g, &prio).unwrap();
        prop_assert_eq!(order.len(), durations.len());
        let pos: Vec<usize> = {
            let mut p = vec![0; order.len()];
            for (at, &j) in order.iter().enumerate() {
                p[j] = at;
            }
            p
        };
        for j in 0..durations.len() {
            for &k in &preds[j] {
                prop_assert!(pos[k] < pos[j]);
            }
        }
    }

    #[test]
    fn max_closure_matches_enumeration(
        (durations, preds) in dag(12),
        weights in prop::collection::vec(-8i32..8, 12),
        alpha in prop::sample::select(vec![0.0, 0.25, 0.5, 1.0]),
    ) {
        let n = durations.len();
        let w: Vec<f64> = weights[..n].iter().map(|&v| f64::from(v)).collect();
        let g = graph(&durations, &preds);
        let kept = max_closure_preprocess(&g, &w, alpha);
        prop_assert!(is_closed(&preds, &kept));
        let scaled = |j: usize| if w[j] <= 0.0 { w[j] } else { alpha * w[j] };
        let value = |set: &BTreeSet<usize>| set.iter().map(|&j| scaled(j)).sum::<f64>();
        let mut best = 0.0f64;
        for mask in 0u32..(1 << n) {
            let set: BTreeSet<usize> = (0..n).filter(|&j| mask >> j & 1 == 1).collect();
            if is_closed(&preds, &set) {
                best = best.max(value(&set));
            }
        }
        prop_assert!((value(&kept) - best).abs() < 1e-9, "kept {} best {}", value(&kept), best);
    }

    #[test]
    fn smaller_alpha_keeps_fewer_jobs(
        (durations, preds) in dag(10),
        weights in prop::collection::vec(-8i32..8, 10),
    ) {
        let w: Vec<f64> = weights[..durations.len()].iter().map(|&v| f64::from(v)).collect();
        let g = graph(&durations, &preds);
        let mut previous = max_closure_preprocess(&g, &w, 0.0);
        for alpha in [0.2, 0.5, 0.8, 1.0] {
            let kept = max_closure_preprocess(&g, &w, alpha);
            prop_assert!(previous.is_subset(&kept));
            previous = kept;
        }
    }

    /// Enumerates every interval map of small instances: rows built from the
    /// reduced arcs accept exactly the maps that respect the full closure.
    #[test]
    fn interval_reduction_loses_nothing(
        inst in instances(GenParams { max_jobs: 5, max_horizon: 9, ..GenParams::default() }),
        eps in prop::sample::select(vec![0.3, 0.7, 1.0]),
    ) {
        let mut inst = inst;
        for r in &mut inst.resources {
            r.availability = geomsched::model::Availability::Constant(1e6);
        }
        let grid = build_grid(eps, inst.horizon).unwrap();
        let g = PrecGraph::from_instance(&inst);
        let delta = longest_path_deltas(&g).unwrap();
        let model = build_agg_at(&inst, &grid, &delta).unwrap();
        let n = inst.n_jobs();
        let base = grid.count() as usize + 1;
        for code in 0..base.pow(n as u32) {
            let slots: Vec<Option<u32>> = (0..n)
                .map(|j| {
                    let v = code / base.pow(j as u32) % base;
                    (v > 0).then_some(v as u32)
                })
                .collect();
            let x = AggSchedule::from_slots(&inst, &slots);
            let checker_ok = check_feasible_agg(&x, &inst, &grid, &delta).is_feasible();
            // A slot without a variable is one the model rules out.
            let rows_ok = model.point_for_agg(&x).is_ok_and(|point| model.evaluate(&point).is_feasible());
            prop_assert_eq!(rows_ok, checker_ok, "slots {:?}", slots);
        }
    }
}

#[test]
fn chain_of_long_jobs_is_pruned_at_the_top() {
    let g = graph(&[700, 700, 700], &[vec![], vec![0], vec![1]]);
    let delta = longest_path_deltas(&g).unwrap();
    assert_eq!(prune_by_horizon(&delta, &[700, 700, 700], 1800), BTreeSet::from([2]));
    assert!(prune_by_horizon(&delta, &[700, 700, 700], 2100).is_empty());
}

#[test]
fn closure_of_three_nodes() {
    // A (+5) requires B (-3); C (-1) stands alone.
    let g = graph(&[1, 1, 1], &[vec![1], vec![], vec![]]);
    let kept = max_closure_preprocess(&g, &[5.0, -3.0, -1.0], 1.0);
    assert_eq!(kept, BTreeSet::from([0, 1]));
}
