//! Computations over the precedence DAG.
//!
//! Jobs are addressed by their position in [`Instance::jobs`]; arcs point from
//! a job to its predecessors (`(j, k)` with `k ∈ P_j`) and carry the length
//! `p_j` of the job that has to wait.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap, VecDeque};

use petgraph::algo::dinics;
use petgraph::graph::{DiGraph, NodeIndex};
use petgraph::visit::EdgeRef;
use thiserror::Error;

use crate::grid::IntervalGrid;
use crate::model::{Instance, IntervalIdx, JobId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("precedence graph has a cycle through jobs {witness:?}")]
    Cycle { witness: Vec<JobId> },
}

#[derive(Debug, Clone)]
pub struct PrecGraph {
    ids: Vec<JobId>,
    durations: Vec<u32>,
    preds: Vec<Vec<usize>>,
    succs: Vec<Vec<usize>>,
}

impl PrecGraph {
    pub fn from_instance(inst: &Instance) -> Self {
        let ids = inst.jobs.iter().map(|j| j.id).collect();
        let durations = inst.jobs.iter().map(|j| j.p).collect();
        Self::from_parts(ids, durations, inst.pred_indices())
    }

    pub fn from_parts(ids: Vec<JobId>, durations: Vec<u32>, preds: Vec<Vec<usize>>) -> Self {
        let mut succs = vec![Vec::new(); preds.len()];
        for (j, ps) in preds.iter().enumerate() {
            for &k in ps {
                succs[k].push(j);
            }
        }
        Self { ids, durations, preds, succs }
    }

    pub fn len(&self) -> usize {
        self.preds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.preds.is_empty()
    }

    pub fn id(&self, j: usize) -> JobId {
        self.ids[j]
    }

    pub fn duration(&self, j: usize) -> u32 {
        self.durations[j]
    }

    pub fn preds(&self, j: usize) -> &[usize] {
        &self.preds[j]
    }

    pub fn succs(&self, j: usize) -> &[usize] {
        &self.succs[j]
    }

    /// Order in which every job follows all of its predecessors.
    pub fn topo(&self) -> Result<Vec<usize>, GraphError> {
        let mut indeg: Vec<usize> = self.preds.iter().map(Vec::len).collect();
        let mut queue: VecDeque<usize> = (0..self.len()).filter(|&j| indeg[j] == 0).collect();
        let mut order = Vec::with_capacity(self.len());
        while let Some(j) = queue.pop_front() {
            order.push(j);
            for &s in &self.succs[j] {
                indeg[s] -= 1;
                if indeg[s] == 0 {
                    queue.push_back(s);
                }
            }
        }
        if order.len() == self.len() {
            Ok(order)
        } else {
            Err(self.cycle_error())
        }
    }

    fn cycle_error(&self) -> GraphError {
        let witness = find_cycle(&self.preds).unwrap_or_default();
        GraphError::Cycle { witness: witness.into_iter().map(|j| self.ids[j]).collect() }
    }

    /// Direct predecessors after dropping every arc implied by a longer path.
    pub fn transitive_reduction(&self) -> Result<Vec<Vec<usize>>, GraphError> {
        let closure = transitive_closure(self)?;
        Ok((0..self.len())
            .map(|j| {
                let direct: BTreeSet<usize> = self.preds[j].iter().copied().collect();
                direct
                    .iter()
                    .copied()
                    .filter(|&k| !direct.iter().any(|&m| m != k && closure[m].binary_search(&k).is_ok()))
                    .collect()
            })
            .collect())
    }
}

/// Returns the jobs of one directed cycle (following predecessor arcs), if any.
pub fn find_cycle(preds: &[Vec<usize>]) -> Option<Vec<usize>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let n = preds.len();
    let mut mark = vec![Mark::New; n];
    let mut stack_pos = vec![usize::MAX; n];
    for root in 0..n {
        if mark[root] != Mark::New {
            continue;
        }
        let mut path: Vec<usize> = vec![root];
        let mut next_child: Vec<usize> = vec![0];
        mark[root] = Mark::Active;
        stack_pos[root] = 0;
        while let Some(&node) = path.last() {
            let child_idx = next_child.last_mut().unwrap();
            if let Some(&child) = preds[node].get(*child_idx) {
                *child_idx += 1;
                match mark[child] {
                    Mark::Active => return Some(path[stack_pos[child]..].to_vec()),
                    Mark::New => {
                        mark[child] = Mark::Active;
                        stack_pos[child] = path.len();
                        path.push(child);
                        next_child.push(0);
                    }
                    Mark::Done => {}
                }
            } else {
                mark[node] = Mark::Done;
                path.pop();
                next_child.pop();
            }
        }
    }
    None
}

/// `P̂_j` for every job: all jobs reachable over predecessor arcs, sorted.
pub fn transitive_closure(g: &PrecGraph) -> Result<Vec<Vec<usize>>, GraphError> {
    let order = g.topo()?;
    let mut closure: Vec<Vec<usize>> = vec![Vec::new(); g.len()];
    for &j in &order {
        let mut set = BTreeSet::new();
        for &k in g.preds(j) {
            set.insert(k);
            set.extend(closure[k].iter().copied());
        }
        closure[j] = set.into_iter().collect();
    }
    Ok(closure)
}

/// Longest-path spans `Δ_ji` for every `i ∈ P̂_j`, stored per row sorted by `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeltaMatrix {
    rows: Vec<Vec<(usize, u32)>>,
}

impl DeltaMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, j: usize, i: usize) -> Option<u32> {
        let row = &self.rows[j];
        row.binary_search_by_key(&i, |&(k, _)| k).ok().map(|pos| row[pos].1)
    }

    /// `(i, Δ_ji)` for every `i ∈ P̂_j`.
    pub fn row(&self, j: usize) -> &[(usize, u32)] {
        &self.rows[j]
    }

    pub fn pairs(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }
}

pub fn longest_path_deltas(g: &PrecGraph) -> Result<DeltaMatrix, GraphError> {
    let order = g.topo()?;
    let mut rows: Vec<Vec<(usize, u32)>> = vec![Vec::new(); g.len()];
    let mut best: Vec<Option<u32>> = vec![None; g.len()];
    let mut touched = Vec::new();
    for &j in &order {
        let pj = g.duration(j);
        let mut relax = |i: usize, d: u32, touched: &mut Vec<usize>| match best[i] {
            Some(cur) if cur >= d => {}
            Some(_) => best[i] = Some(d),
            None => {
                best[i] = Some(d);
                touched.push(i);
            }
        };
        for &k in g.preds(j) {
            relax(k, pj, &mut touched);
            for &(i, d) in &rows[k] {
                relax(i, pj + d, &mut touched);
            }
        }
        touched.sort_unstable();
        rows[j] = touched.iter().map(|&i| (i, best[i].take().unwrap())).collect();
        touched.clear();
    }
    Ok(DeltaMatrix { rows })
}

/// Precedence rows kept for one interval `t`: `Σ_{u≤t} X_ju ≤ Σ_{u≤s_limit} X_ku`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReducedArc {
    pub job: usize,
    pub pred: usize,
    pub s_limit: IntervalIdx,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IntervalReduction {
    /// Jobs that cannot finish in interval `t` or earlier (`τ_t < Δ_jk` for some `k`).
    pub forced_zero: BTreeSet<usize>,
    pub arcs: Vec<ReducedArc>,
}

/// Closure precedences for interval `t` with redundant arcs removed.
///
/// Arc `(j, i)` gets the weight `w_ji = t - I(τ_t - Δ_ji)`; it is dropped when
/// some `k` with `(j, k), (k, i)` in the closure has `w_ji < w_jk + w_ki`.
pub fn interval_transitive_reduction(
    delta: &DeltaMatrix,
    grid: &IntervalGrid,
    t: IntervalIdx,
) -> IntervalReduction {
    let tau_t = grid.tau(t);
    let mut out = IntervalReduction::default();
    let limits: Vec<Option<Vec<IntervalIdx>>> = (0..delta.len())
        .map(|j| {
            let row = delta.row(j);
            if row.iter().any(|&(_, d)| tau_t < f64::from(d)) {
                None
            } else {
                Some(row.iter().map(|&(_, d)| grid.completion_interval(tau_t - f64::from(d))).collect())
            }
        })
        .collect();

    let weight = |j: usize, pos: usize| -> i64 {
        let lim = limits[j].as_ref().expect("weights are only read for unforced jobs");
        i64::from(t) - i64::from(lim[pos])
    };

    for j in 0..delta.len() {
        let Some(lims) = &limits[j] else {
            out.forced_zero.insert(j);
            continue;
        };
        let row = delta.row(j);
        for (pos_i, &(i, _)) in row.iter().enumerate() {
            let w_ji = weight(j, pos_i);
            let implied = row.iter().enumerate().any(|(pos_k, &(k, _))| {
                if k == i || limits[k].is_none() {
                    return false;
                }
                match delta.row(k).binary_search_by_key(&i, |&(m, _)| m) {
                    Ok(pos_ki) => w_ji < weight(j, pos_k) + weight(k, pos_ki),
                    Err(_) => false,
                }
            });
            if !implied {
                out.arcs.push(ReducedArc { job: j, pred: i, s_limit: lims[pos_i] });
            }
        }
    }
    out
}

/// Heap key for list scheduling: earlier interval first, then higher profit,
/// then smaller job id.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Priority {
    pub interval: IntervalIdx,
    pub profit: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapKey {
    interval: IntervalIdx,
    profit: f64,
    id: JobId,
    job: usize,
}

impl Eq for HeapKey {}

impl Ord for HeapKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.interval
            .cmp(&other.interval)
            .then_with(|| other.profit.total_cmp(&self.profit))
            .then_with(|| self.id.cmp(&other.id))
    }
}

impl PartialOrd for HeapKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Topological order of the jobs that carry a priority, popping the smallest
/// `(interval, -profit, id)` among the available ones. Jobs without a
/// priority are left out and do not block their successors.
pub fn topological_order(g: &PrecGraph, priority: &[Option<Priority>]) -> Result<Vec<usize>, GraphError> {
    let active = |j: usize| priority[j].is_some();
    let mut indeg: Vec<usize> = (0..g.len()).map(|j| g.preds(j).iter().filter(|&&k| active(k)).count()).collect();
    let key = |j: usize| {
        let p = priority[j].unwrap();
        Reverse(HeapKey { interval: p.interval, profit: p.profit, id: g.id(j), job: j })
    };
    let mut heap: BinaryHeap<_> = (0..g.len()).filter(|&j| active(j) && indeg[j] == 0).map(key).collect();
    let mut order = Vec::new();
    while let Some(Reverse(top)) = heap.pop() {
        order.push(top.job);
        for &s in g.succs(top.job) {
            if active(s) {
                indeg[s] -= 1;
                if indeg[s] == 0 {
                    heap.push(key(s));
                }
            }
        }
    }
    if order.len() == (0..g.len()).filter(|&j| active(j)).count() {
        Ok(order)
    } else {
        Err(g.cycle_error())
    }
}

/// Maximum-weight predecessor-closed job set under the nested-pit scaling
/// `w_i = weight_i` if `weight_i ≤ 0`, else `alpha · weight_i`.
///
/// Solved as a min cut; among optimal closures the smallest one is returned.
pub fn max_closure_preprocess(g: &PrecGraph, weights: &[f64], alpha: f64) -> BTreeSet<usize> {
    let scaled: Vec<f64> = weights.iter().map(|&w| if w <= 0.0 { w } else { alpha * w }).collect();
    let max_abs = scaled.iter().fold(0.0f64, |m, w| m.max(w.abs()));
    if max_abs == 0.0 {
        return BTreeSet::new();
    }
    // Integer capacities keep the flow exact; 1e12 units over the largest weight.
    let unit = 1e12 / max_abs;
    let caps: Vec<i64> = scaled.iter().map(|w| (w * unit).round() as i64).collect();
    let infinite: u64 = caps.iter().map(|c| c.unsigned_abs()).sum::<u64>() + 1;

    let mut net: DiGraph<(), u64> = DiGraph::with_capacity(g.len() + 2, g.len() * 3);
    let nodes: Vec<NodeIndex> = (0..g.len()).map(|_| net.add_node(())).collect();
    let source = net.add_node(());
    let sink = net.add_node(());
    for (j, &c) in caps.iter().enumerate() {
        if c > 0 {
            net.add_edge(source, nodes[j], c.unsigned_abs());
        } else if c < 0 {
            net.add_edge(nodes[j], sink, c.unsigned_abs());
        }
        for &k in g.preds(j) {
            net.add_edge(nodes[j], nodes[k], infinite);
        }
    }
    let (_, flows) = dinics(&net, source, sink);

    let mut seen = vec![false; net.node_count()];
    let mut queue = VecDeque::from([source]);
    seen[source.index()] = true;
    while let Some(v) = queue.pop_front() {
        for e in net.edges_directed(v, petgraph::Direction::Outgoing) {
            if flows[e.id().index()] < *e.weight() && !seen[e.target().index()] {
                seen[e.target().index()] = true;
                queue.push_back(e.target());
            }
        }
        for e in net.edges_directed(v, petgraph::Direction::Incoming) {
            if flows[e.id().index()] > 0 && !seen[e.source().index()] {
                seen[e.source().index()] = true;
                queue.push_back(e.source());
            }
        }
    }
    (0..g.len()).filter(|&j| seen[nodes[j].index()]).collect()
}

/// Earliest completion of every job under precedences alone: its own
/// duration plus the longest predecessor chain.
pub fn earliest_completions(delta: &DeltaMatrix, durations: &[u32]) -> Vec<u64> {
    (0..delta.len())
        .map(|j| {
            delta
                .row(j)
                .iter()
                .map(|&(i, d)| u64::from(d) + u64::from(durations[i]))
                .fold(u64::from(durations[j]), u64::max)
        })
        .collect()
}

/// Jobs whose earliest completion exceeds `limit`.
pub fn prune_by_horizon(delta: &DeltaMatrix, durations: &[u32], limit: u32) -> BTreeSet<usize> {
    earliest_completions(delta, durations)
        .into_iter()
        .enumerate()
        .filter(|&(_, ec)| ec > u64::from(limit))
        .map(|(j, _)| j)
        .collect()
}
