use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use log::{debug, info};

use super::flips::{polish, FlipEvaluator};
use super::lp::{BasisSnapshot, DualSimplex, LpModel, Outcome, SolveLimits};
use super::{relative_gap, BnbConfig, Branching, ScheduleSolution, SolveStatus, SolverError};
use crate::model::{validate_values, Layout, MilpInstance, Schedule, Sense, VarKind};

const INT_TOL: f64 = 1e-6;
const REPAIR_STEPS: usize = 2000;
const WINDOW_SLOTS: usize = 24;
const BLOCK_PASSES: usize = 5;
const BLOCK_NODES: usize = 300;
const NEIGHBOURHOOD_NODES: usize = 500;
const NEIGHBOURHOOD_SPACING: usize = 200;

struct Node {
    bound: f64,
    id: u64,
    fixings: Vec<(usize, bool)>,
    basis: BasisSnapshot,
    branched: Option<Branch>,
}

type Fixings = Vec<(usize, bool)>;

#[derive(Clone, Copy)]
struct Branch {
    var: usize,
    up: bool,
    frac: f64,
    parent_obj: f64,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // BinaryHeap is a max-heap: smallest bound, then oldest node, on top
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then_with(|| other.id.cmp(&self.id))
    }
}

#[derive(Default)]
struct PseudoCosts {
    down: Vec<(f64, u32)>,
    up: Vec<(f64, u32)>,
}

impl PseudoCosts {
    fn new(n: usize) -> Self {
        Self {
            down: vec![(0.0, 0); n],
            up: vec![(0.0, 0); n],
        }
    }

    fn record(&mut self, b: Branch, child_obj: f64) {
        let dist = if b.up { 1.0 - b.frac } else { b.frac };
        if dist <= INT_TOL {
            return;
        }
        let gain = ((child_obj - b.parent_obj) / dist).max(0.0);
        let slot = if b.up {
            &mut self.up[b.var]
        } else {
            &mut self.down[b.var]
        };
        slot.0 += gain;
        slot.1 += 1;
    }

    fn estimate(table: &[(f64, u32)], j: usize) -> Option<f64> {
        let (sum, n) = table[j];
        (n > 0).then(|| sum / f64::from(n))
    }
}

/// Fractional binary to branch on, with its fractional part.
fn select_branch(binaries: &[usize], values: &[f64], rule: Branching, pc: &PseudoCosts) -> Option<(usize, f64)> {
    let fractional: Vec<(usize, f64)> = binaries
        .iter()
        .map(|&j| (j, values[j] - values[j].floor()))
        .filter(|&(_, f)| f > INT_TOL && f < 1.0 - INT_TOL)
        .collect();
    if fractional.is_empty() {
        return None;
    }
    if rule == Branching::PseudoCost {
        let scored: Vec<(usize, f64, f64)> = fractional
            .iter()
            .filter_map(|&(j, f)| {
                let down = PseudoCosts::estimate(&pc.down, j)?;
                let up = PseudoCosts::estimate(&pc.up, j)?;
                Some((j, f, (down * f).max(1e-6) * (up * (1.0 - f)).max(1e-6)))
            })
            .collect();
        if scored.len() == fractional.len() {
            return scored
                .iter()
                .max_by(|a, b| a.2.total_cmp(&b.2).then(b.0.cmp(&a.0)))
                .map(|&(j, f, _)| (j, f));
        }
    }
    // nearest to one half, lowest index on ties
    fractional
        .into_iter()
        .min_by(|a, b| (a.1 - 0.5).abs().total_cmp(&(b.1 - 0.5).abs()).then(a.0.cmp(&b.0)))
}

/// Greedy repair of rows that involve binaries only: each pass flips the
/// binary with the largest effect on the most violated row.
fn repair_binaries(instance: &MilpInstance, values: &mut [f64]) -> bool {
    let pure: Vec<usize> = (0..instance.constraints.len())
        .filter(|&i| {
            instance.constraints[i]
                .coeffs
                .iter()
                .all(|&(j, _)| instance.variables[j].kind == VarKind::Binary)
        })
        .collect();
    let cap = 4 * instance.variables.len() + 16;
    for _ in 0..cap {
        let worst = pure
            .iter()
            .map(|&i| (i, instance.constraints[i].slack(values)))
            .filter(|&(_, s)| s < -INT_TOL)
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        let Some((row, _)) = worst else {
            return true;
        };
        let c = &instance.constraints[row];
        let raise = match c.sense {
            Sense::Ge => true,
            Sense::Le => false,
            Sense::Eq => c.activity(values) < c.rhs,
        };
        // gain in the needed direction from flipping each binary
        let pick = c
            .coeffs
            .iter()
            .map(|&(j, a)| {
                let delta = if values[j] > 0.5 { -a } else { a };
                (j, if raise { delta } else { -delta })
            })
            .filter(|&(_, g)| g > 0.0)
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
        let Some((j, _)) = pick else {
            return false;
        };
        values[j] = 1.0 - values[j];
    }
    false
}

/// Solves with all binaries fixed to `binaries` and returns the full
/// solution if feasible.
fn complete_with_fixed_binaries(
    lp: &LpModel,
    instance: &MilpInstance,
    binaries: &[usize],
    fixed: &[f64],
    deadline: Option<Instant>,
) -> Option<(Vec<f64>, f64)> {
    let mut simplex = DualSimplex::new(lp);
    for &j in binaries {
        simplex.set_bounds(j, fixed[j], fixed[j]);
    }
    let limits = SolveLimits {
        deadline,
        ..Default::default()
    };
    if simplex.solve(&limits) != Outcome::Optimal {
        return None;
    }
    let mut values = simplex.values().to_vec();
    for &j in binaries {
        values[j] = fixed[j];
    }
    if !validate_values(instance, &values, 1e-6).is_empty() {
        return None;
    }
    let obj = instance.objective_value(&values);
    Some((values, obj))
}

/// Improves a feasible assignment by flip search; `None` if the search
/// does not apply to the instance or the start point is infeasible.
fn polished(
    ev: &mut Option<FlipEvaluator<'_>>,
    instance: &MilpInstance,
    values: &[f64],
    deadline: Option<Instant>,
) -> Option<(Vec<f64>, f64)> {
    let ev = ev.as_mut()?;
    ev.load(values);
    let obj = polish(ev, deadline)?;
    let v = ev.values().to_vec();
    validate_values(instance, &v, 1e-6).is_empty().then_some((v, obj))
}

/// Fractional diving: repeatedly fixes the binary closest to integrality
/// at its rounded value, trying the other value once if the relaxation
/// becomes infeasible.
fn dive(
    lp: &LpModel,
    instance: &MilpInstance,
    binaries: &[usize],
    deadline: Option<Instant>,
) -> Option<(Vec<f64>, f64)> {
    let mut simplex = DualSimplex::new(lp);
    let limits = SolveLimits {
        deadline,
        ..Default::default()
    };
    if simplex.solve(&limits) != Outcome::Optimal {
        return None;
    }
    loop {
        let values = simplex.values();
        let pick = binaries
            .iter()
            .map(|&j| (j, values[j]))
            .filter(|&(_, v)| v - v.floor() > INT_TOL && v.ceil() - v > INT_TOL)
            .min_by(|a, b| {
                let da = (a.1 - a.1.round()).abs();
                let db = (b.1 - b.1.round()).abs();
                da.total_cmp(&db).then(a.0.cmp(&b.0))
            });
        let Some((j, v)) = pick else {
            let mut fixed = values.to_vec();
            for &j in binaries {
                fixed[j] = fixed[j].round();
            }
            if !validate_values(instance, &fixed, 1e-6).is_empty() {
                return None;
            }
            let obj = instance.objective_value(&fixed);
            return Some((fixed, obj));
        };
        let first = v.round();
        simplex.set_bounds(j, first, first);
        match simplex.solve(&limits) {
            Outcome::Optimal => continue,
            Outcome::Infeasible => {}
            _ => return None,
        }
        let other = 1.0 - first;
        simplex.set_bounds(j, other, other);
        if simplex.solve(&limits) != Outcome::Optimal {
            debug!("dive failed at var {j} value {v}");
            return None;
        }
    }
}

/// Repairs a rounded assignment by flip descent, then polishes it.
fn repaired(
    ev: &mut Option<FlipEvaluator<'_>>,
    instance: &MilpInstance,
    values: &[f64],
    deadline: Option<Instant>,
) -> Option<(Vec<f64>, f64)> {
    let ev = ev.as_mut()?;
    ev.load(values);
    if !ev.repair(REPAIR_STEPS, deadline) {
        debug!("flip repair did not reach a feasible assignment");
        return None;
    }
    let obj = polish(ev, deadline)?;
    let v = ev.values().to_vec();
    validate_values(instance, &v, 1e-6).is_empty().then_some((v, obj))
}

struct Incumbent {
    values: Vec<f64>,
    objective: f64,
}

/// Best-first branch-and-bound with depth-first plunging.
pub fn solve_milp(instance: &MilpInstance, config: &BnbConfig) -> Result<ScheduleSolution, SolverError> {
    search(instance, config, true, None)
}

/// Sub-problem search around an incumbent: binaries on which the node
/// relaxation agrees with the incumbent are fixed and the rest is searched
/// with a small node budget.
fn neighbourhood_search(
    instance: &MilpInstance,
    binaries: &[usize],
    relaxed: &[f64],
    incumbent: &Incumbent,
    config: &BnbConfig,
    deadline: Option<Instant>,
) -> Option<Incumbent> {
    let mut sub = instance.clone();
    let mut fixed = 0;
    for &j in binaries {
        if (relaxed[j] - incumbent.values[j]).abs() < INT_TOL {
            sub.variables[j].lower = incumbent.values[j];
            sub.variables[j].upper = incumbent.values[j];
            fixed += 1;
        }
    }
    if fixed * 10 < binaries.len() * 3 || fixed == binaries.len() {
        return None;
    }
    let remaining = deadline.map(|d| d.saturating_duration_since(Instant::now()));
    if remaining.is_some_and(|r| r.is_zero()) {
        return None;
    }
    let sub_config = BnbConfig {
        time_limit: remaining,
        node_limit: NEIGHBOURHOOD_NODES,
        log_every: 0,
        ..*config
    };
    let start = Incumbent {
        values: incumbent.values.clone(),
        objective: incumbent.objective,
    };
    let sol = search(&sub, &sub_config, false, Some(start)).ok()?;
    let objective = sol.objective_value?;
    debug!("neighbourhood search fixed {fixed} binaries, found {objective:.6}");
    (objective < incumbent.objective - 1e-9 * incumbent.objective.abs().max(1.0)).then(|| Incumbent {
        values: sol.values.expect("incumbent values"),
        objective,
    })
}

/// Large-neighbourhood passes: each neighbourhood frees either one house
/// over the whole horizon or every house over a window of slots, fixes all
/// other binaries at the incumbent and searches with a small node budget.
fn block_search(
    instance: &MilpInstance,
    layout: Layout,
    mut incumbent: Incumbent,
    config: &BnbConfig,
    deadline: Option<Instant>,
) -> Incumbent {
    let h = layout.horizon;
    let width = WINDOW_SLOTS.min(h);
    let step = (width / 2).max(1);
    let mut blocks: Vec<Vec<usize>> = (0..layout.houses)
        .map(|k| (0..h).map(|t| layout.binary(k, t)).collect())
        .collect();
    let mut start = 0;
    loop {
        let end = (start + width).min(h);
        blocks.push(
            (0..layout.houses)
                .flat_map(|k| (start..end).map(move |t| layout.binary(k, t)))
                .collect(),
        );
        if end == h {
            break;
        }
        start += step;
    }
    for pass in 0..BLOCK_PASSES {
        let mut improved = false;
        for (b, free) in blocks.iter().enumerate() {
            let remaining = deadline.map(|d| d.saturating_duration_since(Instant::now()));
            if remaining.is_some_and(|r| r.is_zero()) {
                return incumbent;
            }
            let mut sub = instance.clone();
            for k in 0..layout.houses {
                for t in 0..h {
                    let j = layout.binary(k, t);
                    sub.variables[j].lower = incumbent.values[j];
                    sub.variables[j].upper = incumbent.values[j];
                }
            }
            for &j in free {
                sub.variables[j].lower = instance.variables[j].lower;
                sub.variables[j].upper = instance.variables[j].upper;
            }
            let sub_config = BnbConfig {
                gap_tol: 0.0,
                time_limit: remaining,
                node_limit: BLOCK_NODES,
                log_every: 0,
                ..*config
            };
            let seed = Incumbent {
                values: incumbent.values.clone(),
                objective: incumbent.objective,
            };
            if let Ok(sol) = search(&sub, &sub_config, false, Some(seed)) {
                if let (Some(obj), Some(values)) = (sol.objective_value, sol.values) {
                    if obj < incumbent.objective - 1e-9 * incumbent.objective.abs().max(1.0) {
                        debug!("block {b} pass {pass}: {obj:.6}");
                        incumbent = Incumbent { values, objective: obj };
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            break;
        }
    }
    incumbent
}

fn search(
    instance: &MilpInstance,
    config: &BnbConfig,
    neighbourhoods: bool,
    start_from: Option<Incumbent>,
) -> Result<ScheduleSolution, SolverError> {
    let start = Instant::now();
    let deadline = config.time_limit.map(|d| start + d);
    let lp = LpModel::from_instance(instance)?;
    let binaries = instance.binary_indices();
    let mut simplex = DualSimplex::new(&lp);
    let root_bounds: Vec<(f64, f64)> = binaries.iter().map(|&j| lp.bounds(j)).collect();

    let mut incumbent: Option<Incumbent> = start_from;
    let mut heap: BinaryHeap<Node> = BinaryHeap::new();
    let mut pruned_min = f64::INFINITY;
    let mut nodes = 0usize;
    let mut next_id = 0u64;
    let mut hit_limit = false;
    let mut pc = PseudoCosts::new(instance.variables.len());
    let mut flips = FlipEvaluator::new(instance).ok();
    let mut fresh_incumbent = false;
    let mut last_neighbourhood = 0usize;

    let threshold = |inc: &Option<Incumbent>| match inc {
        None => f64::INFINITY,
        Some(i) => {
            let slack = (config.gap_tol * i.objective.abs()).max(1e-9 * i.objective.abs().max(1.0));
            i.objective - slack
        }
    };

    // current in-memory node: its fixings and how it was reached
    let mut current: Option<(Fixings, Option<Branch>)> = Some((Vec::new(), None));
    let mut root_done = false;

    loop {
        if nodes >= config.node_limit || deadline.is_some_and(|d| Instant::now() >= d) {
            hit_limit = true;
            // the pending plunge child was never solved
            if let Some((_, branched)) = &current {
                pruned_min = pruned_min.min(branched.map_or(f64::NEG_INFINITY, |b| b.parent_obj));
            }
            break;
        }
        let (fixings, branched) = match current.take() {
            Some(c) => c,
            None => {
                let Some(node) = heap.pop() else {
                    break;
                };
                if node.bound >= threshold(&incumbent) {
                    pruned_min = pruned_min.min(node.bound);
                    continue;
                }
                for (&j, &(lo, hi)) in binaries.iter().zip(&root_bounds) {
                    simplex.set_bounds(j, lo, hi);
                }
                for &(j, up) in &node.fixings {
                    let v = if up { 1.0 } else { 0.0 };
                    simplex.set_bounds(j, v, v);
                }
                simplex.restore(&node.basis);
                (node.fixings, node.branched)
            }
        };
        nodes += 1;
        let cutoff = threshold(&incumbent);
        let limits = SolveLimits {
            cutoff,
            deadline,
            ..Default::default()
        };
        let outcome = simplex.solve(&limits);
        let obj = simplex.objective_value();
        match outcome {
            Outcome::TimeLimit => {
                hit_limit = true;
                pruned_min = pruned_min.min(branched.map_or(f64::NEG_INFINITY, |b| b.parent_obj));
                break;
            }
            Outcome::IterationLimit => {
                // unresolved node: its parent bound stays in the certificate
                pruned_min = pruned_min.min(branched.map_or(f64::NEG_INFINITY, |b| b.parent_obj));
                continue;
            }
            Outcome::Infeasible => {
                if !root_done {
                    break;
                }
                continue;
            }
            Outcome::CutOff => {
                pruned_min = pruned_min.min(obj);
                root_done = true;
                continue;
            }
            Outcome::Optimal => {}
        }
        if let Some(b) = branched {
            pc.record(b, obj);
        }
        let values = simplex.values().to_vec();
        if !root_done {
            root_done = true;
            let mut rounded = values.clone();
            for &j in &binaries {
                rounded[j] = rounded[j].round();
            }
            let rounded = repaired(&mut flips, instance, &rounded, deadline).or_else(|| {
                repair_binaries(instance, &mut rounded);
                complete_with_fixed_binaries(&lp, instance, &binaries, &rounded, deadline)
            });
            let dived = if neighbourhoods {
                dive(&lp, instance, &binaries, deadline).map(|(v, o)| {
                    polished(&mut flips, instance, &v, deadline)
                        .filter(|p| p.1 < o)
                        .unwrap_or((v, o))
                })
            } else {
                None
            };
            let found = match (rounded, dived) {
                (Some(a), Some(b)) => Some(if b.1 < a.1 { b } else { a }),
                (a, b) => a.or(b),
            };
            let found = found.filter(|f| incumbent.as_ref().is_none_or(|i| f.1 < i.objective));
            if let Some((v, o)) = found {
                info!("heuristic incumbent={o:.6}");
                incumbent = Some(Incumbent {
                    values: v,
                    objective: o,
                });
                fresh_incumbent = true;
            }
            if let (true, Some(layout)) = (neighbourhoods, instance.layout) {
                if let Some(inc) = incumbent.take() {
                    let inc = block_search(instance, layout, inc, config, deadline);
                    info!("block search incumbent={:.6}", inc.objective);
                    incumbent = Some(inc);
                }
            }
        }
        if neighbourhoods && fresh_incumbent && (nodes == 1 || nodes >= last_neighbourhood + NEIGHBOURHOOD_SPACING) {
            fresh_incumbent = false;
            last_neighbourhood = nodes;
            let inc = incumbent.as_ref().expect("fresh incumbent");
            if let Some(better) = neighbourhood_search(instance, &binaries, &values, inc, config, deadline) {
                let bound = heap.peek().map_or(obj, |n| n.bound.min(obj)).min(pruned_min);
                info!(
                    "node={nodes} bound={bound:.6} incumbent={:.6} gap={:.6}",
                    better.objective,
                    relative_gap(better.objective, bound)
                );
                incumbent = Some(better);
            }
        }
        if obj >= threshold(&incumbent) {
            pruned_min = pruned_min.min(obj);
            continue;
        }
        match select_branch(&binaries, &values, config.branching, &pc) {
            None => {
                let mut fixed = values;
                for &j in &binaries {
                    fixed[j] = fixed[j].round();
                }
                let accepted = if validate_values(instance, &fixed, 1e-6).is_empty() {
                    Some((instance.objective_value(&fixed), fixed))
                } else {
                    complete_with_fixed_binaries(&lp, instance, &binaries, &fixed, deadline).map(|(v, o)| (o, v))
                };
                let accepted = accepted.map(|(o, v)| match polished(&mut flips, instance, &v, deadline) {
                    Some((pv, po)) if po < o => (po, pv),
                    _ => (o, v),
                });
                if let Some((o, v)) = accepted {
                    if incumbent.as_ref().is_none_or(|i| o < i.objective) {
                        incumbent = Some(Incumbent {
                            values: v,
                            objective: o,
                        });
                        fresh_incumbent = true;
                        let bound = heap.peek().map_or(o, |n| n.bound.min(o)).min(pruned_min);
                        info!(
                            "node={nodes} bound={bound:.6} incumbent={o:.6} gap={:.6}",
                            relative_gap(o, bound)
                        );
                    }
                }
            }
            Some((j, frac)) => {
                let up_first = frac >= 0.5;
                let basis = simplex.snapshot();
                let mut other = fixings.clone();
                other.push((j, !up_first));
                heap.push(Node {
                    bound: obj,
                    id: next_id,
                    fixings: other,
                    basis,
                    branched: Some(Branch {
                        var: j,
                        up: !up_first,
                        frac,
                        parent_obj: obj,
                    }),
                });
                next_id += 1;
                let v = if up_first { 1.0 } else { 0.0 };
                simplex.set_bounds(j, v, v);
                let mut mine = fixings;
                mine.push((j, up_first));
                current = Some((
                    mine,
                    Some(Branch {
                        var: j,
                        up: up_first,
                        frac,
                        parent_obj: obj,
                    }),
                ));
            }
        }
        if config.log_every > 0 && nodes.is_multiple_of(config.log_every) {
            let inc = incumbent.as_ref().map_or(f64::INFINITY, |i| i.objective);
            let bound = heap.peek().map_or(inc, |n| n.bound).min(pruned_min).min(obj);
            info!(
                "node={nodes} bound={bound:.6} incumbent={inc:.6} gap={:.6}",
                relative_gap(inc, bound)
            );
        }
    }

    let open_min = heap.peek().map_or(f64::INFINITY, |n| n.bound);
    let lp_iterations = simplex.iterations;
    let Some(inc) = incumbent else {
        let status = if hit_limit {
            SolveStatus::Timeout
        } else {
            SolveStatus::Infeasible
        };
        debug!("no incumbent after {nodes} nodes");
        return Ok(ScheduleSolution {
            status,
            values: None,
            schedule: None,
            p_max: Vec::new(),
            objective_value: None,
            best_bound: open_min.min(pruned_min),
            gap: f64::INFINITY,
            nodes,
            lp_iterations,
        });
    };
    let best_bound = open_min.min(pruned_min).min(inc.objective);
    let gap = relative_gap(inc.objective, best_bound);
    let status = if gap <= 1e-9 {
        SolveStatus::Optimal
    } else if gap <= config.gap_tol {
        SolveStatus::GapFeasible
    } else {
        SolveStatus::Timeout
    };
    info!(
        "node={nodes} bound={best_bound:.6} incumbent={:.6} gap={gap:.6}",
        inc.objective
    );
    let (schedule, p_max) = match instance.layout {
        Some(layout) => (
            Some(Schedule::from_values(&layout, &inc.values)),
            (0..layout.zones).map(|z| inc.values[layout.peak(z)]).collect(),
        ),
        None => (None, Vec::new()),
    };
    Ok(ScheduleSolution {
        status,
        values: Some(inc.values),
        schedule,
        p_max,
        objective_value: Some(inc.objective),
        best_bound,
        gap,
        nodes,
        lp_iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Constraint, RowKind, RowTag, Variable, Variant};

    fn knapsack(weights: &[f64], values: &[f64], cap: f64) -> MilpInstance {
        MilpInstance {
            variant: Variant::Deterministic,
            variables: (0..weights.len())
                .map(|j| Variable {
                    name: format!("B{j}"),
                    kind: VarKind::Binary,
                    lower: 0.0,
                    upper: 1.0,
                })
                .collect(),
            objective: values.iter().map(|v| -v).collect(),
            constraints: vec![Constraint {
                tag: RowTag {
                    kind: RowKind::Capacity,
                    zone: Some(0),
                    house: None,
                    slot: None,
                },
                coeffs: weights.iter().copied().enumerate().collect(),
                sense: Sense::Le,
                rhs: cap,
            }],
            layout: None,
        }
    }

    #[test]
    fn small_knapsack_is_exact() {
        let inst = knapsack(&[5.0, 4.0, 3.0, 2.0], &[10.0, 7.0, 6.0, 3.0], 9.0);
        let cfg = BnbConfig {
            gap_tol: 0.0,
            ..Default::default()
        };
        let sol = solve_milp(&inst, &cfg).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        // best: items 0 + 1 -> 17, or 0 + 2 -> 16 ... brute force
        let mut best = 0.0f64;
        for mask in 0..16u32 {
            let (mut w, mut v) = (0.0, 0.0);
            for j in 0..4 {
                if mask >> j & 1 == 1 {
                    w += [5.0, 4.0, 3.0, 2.0][j];
                    v += [10.0, 7.0, 6.0, 3.0][j];
                }
            }
            if w <= 9.0 {
                best = best.max(v);
            }
        }
        assert!((sol.objective_value.unwrap() + best).abs() < 1e-9);
    }

    #[test]
    fn integral_relaxation_needs_no_branching() {
        let inst = knapsack(&[1.0, 1.0], &[1.0, 1.0], 2.0);
        let sol = solve_milp(&inst, &BnbConfig::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_eq!(sol.nodes, 1);
        assert_eq!(sol.gap, 0.0);
    }

    #[test]
    fn infeasible_root() {
        let mut inst = knapsack(&[1.0], &[1.0], 2.0);
        inst.constraints[0].sense = Sense::Ge;
        let sol = solve_milp(&inst, &BnbConfig::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
        assert!(sol.values.is_none());
    }

    #[test]
    fn branching_prefers_half_then_lowest_index() {
        let pc = PseudoCosts::new(4);
        let v = [0.3, 0.5, 0.5, 1.0];
        assert_eq!(
            select_branch(&[0, 1, 2, 3], &v, Branching::MostFractional, &pc),
            Some((1, 0.5))
        );
        assert_eq!(select_branch(&[3], &v, Branching::MostFractional, &pc), None);
        // no history yet: pseudo-cost falls back
        assert_eq!(
            select_branch(&[0, 1, 2], &v, Branching::PseudoCost, &pc),
            Some((1, 0.5))
        );
    }
}
