use thiserror::Error;

use super::{Constraint, FormulationKind, MipModel, Relation, Var, VarKind};
use crate::graph::{interval_transitive_reduction, longest_path_deltas, DeltaMatrix, GraphError, PrecGraph};
use crate::grid::IntervalGrid;
use crate::model::{validate_instance, Instance, Semantics, ValidationReport};

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("invalid instance:\n{0}")]
    Invalid(ValidationReport),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn check(inst: &Instance) -> Result<(), BuildError> {
    let report = validate_instance(inst);
    if report.is_valid() {
        Ok(())
    } else {
        Err(BuildError::Invalid(report))
    }
}

/// Builds the requested formulation; interval kinds use `grid`.
pub fn build_model(inst: &Instance, kind: FormulationKind, grid: &IntervalGrid) -> Result<MipModel, BuildError> {
    match kind {
        FormulationKind::OrigAt => build_orig_at(inst),
        FormulationKind::AggAt | FormulationKind::AggBy => {
            check(inst)?;
            let delta = longest_path_deltas(&PrecGraph::from_instance(inst))?;
            if kind == FormulationKind::AggAt {
                build_agg_at(inst, grid, &delta)
            } else {
                build_agg_by(inst, grid, &delta)
            }
        }
    }
}

/// Contiguous variable block of every job: slots `first[j]..=last`.
struct Layout {
    first: Vec<u32>,
    last: u32,
    base: Vec<usize>,
}

impl Layout {
    fn new(first: Vec<u32>, last: u32) -> Self {
        let mut base = Vec::with_capacity(first.len());
        let mut next = 0;
        for &f in &first {
            base.push(next);
            next += (last + 1).saturating_sub(f) as usize;
        }
        Self { first, last, base }
    }

    fn var(&self, j: usize, slot: u32) -> Option<usize> {
        (slot >= self.first[j] && slot <= self.last).then(|| self.base[j] + (slot - self.first[j]) as usize)
    }

    fn slots(&self, j: usize) -> std::ops::RangeInclusive<u32> {
        self.first[j]..=self.last
    }

    /// Variables of job `j` with slot `≤ upto`.
    fn prefix(&self, j: usize, upto: u32) -> impl Iterator<Item = usize> + '_ {
        (self.first[j]..=upto.min(self.last)).filter_map(move |s| self.var(j, s))
    }

    fn declare(&self, inst: &Instance, kind: FormulationKind) -> Vec<Var> {
        let prefix = kind.prefix();
        inst.jobs
            .iter()
            .enumerate()
            .flat_map(|(j, job)| {
                self.slots(j).map(move |s| Var {
                    name: format!("{prefix}_{}_{s}", job.id),
                    kind: VarKind::Binary,
                    job: job.id,
                    slot: s,
                })
            })
            .collect()
    }
}

fn once_rows(inst: &Instance, layout: &Layout, model: &mut MipModel) {
    for (j, job) in inst.jobs.iter().enumerate() {
        let terms: Vec<(usize, f64)> = layout.prefix(j, layout.last).map(|v| (v, 1.0)).collect();
        if terms.len() > 1 {
            model.constraints.push(Constraint { name: format!("once_{}", job.id), terms, relation: Relation::Le, rhs: 1.0 });
        }
    }
}

pub fn build_orig_at(inst: &Instance) -> Result<MipModel, BuildError> {
    check(inst)?;
    let reduced = PrecGraph::from_instance(inst).transitive_reduction()?;
    let horizon = inst.horizon;
    let layout = Layout::new(inst.jobs.iter().map(|j| j.p.max(1)).collect(), horizon);
    let mut model = MipModel::empty(FormulationKind::OrigAt);
    model.vars = layout.declare(inst, FormulationKind::OrigAt);

    for (j, job) in inst.jobs.iter().enumerate() {
        if job.profit != 0.0 {
            for t in layout.slots(j) {
                let v = layout.var(j, t).unwrap();
                model.objective.push((v, job.profit * inst.discount(f64::from(t))));
            }
        }
    }
    once_rows(inst, &layout, &mut model);

    for (j, job) in inst.jobs.iter().enumerate() {
        for &k in &reduced[j] {
            for t in layout.slots(j) {
                let mut terms: Vec<(usize, f64)> = layout.prefix(j, t).map(|v| (v, 1.0)).collect();
                if let Some(limit) = t.checked_sub(job.p) {
                    terms.extend(layout.prefix(k, limit).map(|v| (v, -1.0)));
                }
                model.constraints.push(Constraint {
                    name: format!("prec_{}_{}_{t}", job.id, inst.jobs[k].id),
                    terms,
                    relation: Relation::Le,
                    rhs: 0.0,
                });
            }
        }
    }

    for (k, res) in inst.resources.iter().enumerate() {
        for t in 1..=horizon {
            let mut terms = Vec::new();
            for (j, job) in inst.jobs.iter().enumerate() {
                let q = job.demands[k];
                if q == 0.0 || job.p == 0 {
                    continue;
                }
                let last = (t + job.p - 1).min(horizon);
                let from = match inst.semantics {
                    Semantics::Cumulative => 1,
                    Semantics::Renewable => t,
                };
                for u in from..=last {
                    let Some(v) = layout.var(j, u) else { continue };
                    let coef = match inst.semantics {
                        Semantics::Cumulative => q * f64::from(job.p - u.saturating_sub(t)),
                        Semantics::Renewable => q,
                    };
                    terms.push((v, coef));
                }
            }
            if terms.is_empty() {
                continue;
            }
            let rhs = match inst.semantics {
                Semantics::Cumulative => res.sum(1, t),
                Semantics::Renewable => res.at(t),
            };
            model.constraints.push(Constraint { name: format!("res_{}_{t}", k + 1), terms, relation: Relation::Le, rhs });
        }
    }
    Ok(model)
}

/// Interval model in terms of `X_js`, shared by the "at" and "by" builders.
struct AggParts {
    layout: Layout,
    objective: Vec<(usize, u32, f64)>,
    /// `(job, pred, t, s_limit)`: `Σ_{u≤t} X_ju ≤ Σ_{u≤s_limit} X_ku`.
    precedences: Vec<(usize, usize, u32, u32)>,
    /// `(name, [(job, interval, coefficient)], rhs)`.
    resources: Vec<(String, Vec<(usize, u32, f64)>, f64)>,
}

fn agg_parts(inst: &Instance, grid: &IntervalGrid, delta: &DeltaMatrix) -> AggParts {
    let count = grid.count();
    let mut first: Vec<u32> = inst.jobs.iter().map(|j| grid.interval_of(f64::from(j.p)).max(1)).collect();
    let mut precedences = Vec::new();
    for t in grid.intervals() {
        let red = interval_transitive_reduction(delta, grid, t);
        for &j in &red.forced_zero {
            first[j] = first[j].max(t + 1);
        }
        for arc in &red.arcs {
            if arc.s_limit == 0 {
                first[arc.job] = first[arc.job].max(t + 1);
            } else {
                precedences.push((arc.job, arc.pred, t, arc.s_limit));
            }
        }
    }
    let layout = Layout::new(first, count);
    precedences.retain(|&(j, _, t, _)| t >= layout.first[j]);

    let objective = inst
        .jobs
        .iter()
        .enumerate()
        .flat_map(|(j, job)| {
            let f = job.profit;
            let rate = inst.rate;
            layout.slots(j).filter(move |_| f != 0.0).map(move |s| {
                let at = if f > 0.0 { grid.tau(s - 1) } else { grid.tau(s) };
                (j, s, f * (1.0 + rate).powf(-at))
            })
        })
        .collect();

    let mut resources = Vec::new();
    for (k, res) in inst.resources.iter().enumerate() {
        for t in grid.intervals() {
            let tau_t = grid.tau(t);
            let mut terms = Vec::new();
            for (j, job) in inst.jobs.iter().enumerate() {
                let q = job.demands[k];
                if q == 0.0 || job.p == 0 {
                    continue;
                }
                let p = f64::from(job.p);
                let last = (grid.interval_of(tau_t + p) - 1).min(count);
                let from = match inst.semantics {
                    Semantics::Cumulative => layout.first[j],
                    Semantics::Renewable => layout.first[j].max(t),
                };
                for u in from..=last {
                    let left = p - (grid.tau(u) - tau_t).max(0.0);
                    let coef = match inst.semantics {
                        Semantics::Cumulative => left,
                        Semantics::Renewable => left.min(tau_t - grid.tau(t - 1)),
                    };
                    if coef > 0.0 {
                        terms.push((j, u, q * coef));
                    }
                }
            }
            if terms.is_empty() {
                continue;
            }
            let hi = tau_t.ceil() as u32;
            let rhs = match inst.semantics {
                Semantics::Cumulative => res.sum(1, hi),
                Semantics::Renewable => res.sum(grid.tau(t - 1).ceil() as u32 + 1, hi),
            };
            resources.push((format!("res_{}_{t}", k + 1), terms, rhs));
        }
    }
    AggParts { layout, objective, precedences, resources }
}

pub fn build_agg_at(inst: &Instance, grid: &IntervalGrid, delta: &DeltaMatrix) -> Result<MipModel, BuildError> {
    check(inst)?;
    let parts = agg_parts(inst, grid, delta);
    let layout = &parts.layout;
    let mut model = MipModel::empty(FormulationKind::AggAt);
    model.vars = layout.declare(inst, FormulationKind::AggAt);
    model.objective = parts.objective.iter().map(|&(j, s, c)| (layout.var(j, s).unwrap(), c)).collect();
    once_rows(inst, layout, &mut model);
    for &(j, k, t, limit) in &parts.precedences {
        let mut terms: Vec<(usize, f64)> = layout.prefix(j, t).map(|v| (v, 1.0)).collect();
        terms.extend(layout.prefix(k, limit).map(|v| (v, -1.0)));
        model.constraints.push(Constraint {
            name: format!("prec_{}_{}_{t}", inst.jobs[j].id, inst.jobs[k].id),
            terms,
            relation: Relation::Le,
            rhs: 0.0,
        });
    }
    for (name, terms, rhs) in parts.resources {
        model.constraints.push(Constraint {
            name,
            terms: terms.into_iter().map(|(j, u, c)| (layout.var(j, u).unwrap(), c)).collect(),
            relation: Relation::Le,
            rhs,
        });
    }
    Ok(model)
}

/// Rewrites `Σ c_ju X_ju` with `X_ju = Y_ju - Y_j,u-1` as `Σ (c_ju - c_j,u+1) Y_ju`.
fn by_terms(layout: &Layout, terms: &[(usize, u32, f64)]) -> Vec<(usize, f64)> {
    let mut by_job: std::collections::BTreeMap<usize, std::collections::BTreeMap<u32, f64>> = Default::default();
    for &(j, u, c) in terms {
        *by_job.entry(j).or_default().entry(u).or_default() += c;
    }
    let mut out = Vec::new();
    for (j, coefs) in by_job {
        for s in layout.slots(j) {
            let here = coefs.get(&s).copied().unwrap_or(0.0);
            let next = coefs.get(&(s + 1)).copied().unwrap_or(0.0);
            let c = here - next;
            if c != 0.0 {
                out.push((layout.var(j, s).unwrap(), c));
            }
        }
    }
    out
}

pub fn build_agg_by(inst: &Instance, grid: &IntervalGrid, delta: &DeltaMatrix) -> Result<MipModel, BuildError> {
    check(inst)?;
    let parts = agg_parts(inst, grid, delta);
    let layout = &parts.layout;
    let mut model = MipModel::empty(FormulationKind::AggBy);
    model.vars = layout.declare(inst, FormulationKind::AggBy);
    model.objective = by_terms(layout, &parts.objective);

    for (j, job) in inst.jobs.iter().enumerate() {
        for s in layout.slots(j).skip(1) {
            model.constraints.push(Constraint {
                name: format!("mono_{}_{s}", job.id),
                terms: vec![(layout.var(j, s - 1).unwrap(), 1.0), (layout.var(j, s).unwrap(), -1.0)],
                relation: Relation::Le,
                rhs: 0.0,
            });
        }
    }
    for &(j, k, t, limit) in &parts.precedences {
        let mut terms = vec![(layout.var(j, t).unwrap(), 1.0)];
        if let Some(v) = layout.var(k, limit) {
            terms.push((v, -1.0));
        }
        model.constraints.push(Constraint {
            name: format!("prec_{}_{}_{t}", inst.jobs[j].id, inst.jobs[k].id),
            terms,
            relation: Relation::Le,
            rhs: 0.0,
        });
    }
    for (name, terms, rhs) in &parts.resources {
        model.constraints.push(Constraint {
            name: name.clone(),
            terms: by_terms(layout, terms),
            relation: Relation::Le,
            rhs: *rhs,
        });
    }
    Ok(model)
}
