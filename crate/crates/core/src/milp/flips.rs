//! Incremental evaluation of binary assignments, shared by the exhaustive
//! oracle and the incumbent polishing search.

use std::time::Instant;

use super::SolverError;
use crate::model::{MilpInstance, Sense, VarKind};

pub(super) const TOL: f64 = 1e-9;

/// Row activities kept up to date under single-binary flips. Every row
/// holds at most one continuous variable, which is then set to its
/// cheapest admissible value.
pub(super) struct FlipEvaluator<'a> {
    instance: &'a MilpInstance,
    binaries: Vec<usize>,
    cols: Vec<Vec<(usize, f64)>>,
    row_cont: Vec<Option<(usize, f64)>>,
    cont_vars: Vec<usize>,
    cont_rows: Vec<Vec<usize>>,
    act: Vec<f64>,
    values: Vec<f64>,
    violated: usize,
}

impl<'a> FlipEvaluator<'a> {
    pub(super) fn new(instance: &'a MilpInstance) -> Result<Self, SolverError> {
        let n = instance.variables.len();
        let is_cont: Vec<bool> = instance
            .variables
            .iter()
            .map(|v| v.kind == VarKind::Continuous)
            .collect();
        let mut row_cont = Vec::with_capacity(instance.constraints.len());
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut cont_rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, c) in instance.constraints.iter().enumerate() {
            let mut cont = None;
            for &(j, a) in &c.coeffs {
                if is_cont[j] {
                    if cont.is_some() {
                        return Err(SolverError::CoupledContinuous(i));
                    }
                    cont = Some((j, a));
                    cont_rows[j].push(i);
                } else {
                    cols[j].push((i, a));
                }
            }
            row_cont.push(cont);
        }
        let mut ev = Self {
            instance,
            binaries: instance.binary_indices(),
            cols,
            row_cont,
            cont_vars: (0..n).filter(|&j| is_cont[j]).collect(),
            cont_rows,
            act: vec![0.0; instance.constraints.len()],
            values: vec![0.0; n],
            violated: 0,
        };
        ev.violated = (0..ev.act.len()).filter(|&i| !ev.pure_ok(i)).count();
        Ok(ev)
    }

    pub(super) fn binaries(&self) -> &[usize] {
        &self.binaries
    }

    pub(super) fn values(&self) -> &[f64] {
        &self.values
    }

    fn pure_ok(&self, i: usize) -> bool {
        if self.row_cont[i].is_some() {
            return true;
        }
        let c = &self.instance.constraints[i];
        match c.sense {
            Sense::Le => self.act[i] <= c.rhs + TOL,
            Sense::Ge => self.act[i] >= c.rhs - TOL,
            Sense::Eq => (self.act[i] - c.rhs).abs() <= TOL,
        }
    }

    /// Loads a full assignment; only the binary entries of `values` are read.
    pub(super) fn load(&mut self, values: &[f64]) {
        self.act.iter_mut().for_each(|a| *a = 0.0);
        self.values.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..self.binaries.len() {
            let j = self.binaries[k];
            let v = values[j].round();
            self.values[j] = v;
            for &(i, a) in &self.cols[j] {
                self.act[i] += a * v;
            }
        }
        self.violated = (0..self.act.len()).filter(|&i| !self.pure_ok(i)).count();
    }

    pub(super) fn flip(&mut self, j: usize) {
        let delta = if self.values[j] > 0.5 { -1.0 } else { 1.0 };
        self.values[j] += delta;
        for k in 0..self.cols[j].len() {
            let (i, a) = self.cols[j][k];
            let was = self.pure_ok(i);
            self.act[i] += a * delta;
            match (was, self.pure_ok(i)) {
                (true, false) => self.violated += 1,
                (false, true) => self.violated -= 1,
                _ => {}
            }
        }
    }

    fn shortfall(&self, i: usize) -> f64 {
        if self.row_cont[i].is_some() {
            return 0.0;
        }
        let c = &self.instance.constraints[i];
        match c.sense {
            Sense::Le => (self.act[i] - c.rhs - TOL).max(0.0),
            Sense::Ge => (c.rhs - TOL - self.act[i]).max(0.0),
            Sense::Eq => ((self.act[i] - c.rhs).abs() - TOL).max(0.0),
        }
    }

    /// Change in total shortfall of the binary-only rows if `j` flipped.
    fn flip_effect(&mut self, j: usize) -> f64 {
        let delta = if self.values[j] > 0.5 { -1.0 } else { 1.0 };
        let mut change = 0.0;
        for k in 0..self.cols[j].len() {
            let (i, a) = self.cols[j][k];
            let before = self.shortfall(i);
            self.act[i] += a * delta;
            change += self.shortfall(i) - before;
            self.act[i] -= a * delta;
        }
        change
    }

    /// Greedy descent on the total shortfall of the binary-only rows,
    /// using single flips and, when those stall, flip pairs. Returns true
    /// once every such row holds.
    pub(super) fn repair(&mut self, max_steps: usize, deadline: Option<Instant>) -> bool {
        for _ in 0..max_steps {
            if self.violated == 0 {
                return true;
            }
            if deadline.is_some_and(|d| Instant::now() >= d) {
                return false;
            }
            let mut candidates: Vec<usize> = (0..self.act.len())
                .filter(|&i| self.shortfall(i) > 0.0)
                .flat_map(|i| self.instance.constraints[i].coeffs.iter().map(|&(j, _)| j))
                .filter(|&j| self.instance.variables[j].kind == VarKind::Binary)
                .collect();
            candidates.sort_unstable();
            candidates.dedup();
            let mut best: Option<(f64, usize, Option<usize>)> = None;
            for &j in &candidates {
                let e = self.flip_effect(j);
                if e < -TOL && best.is_none_or(|b| e < b.0) {
                    best = Some((e, j, None));
                }
            }
            if best.is_none() {
                let bins = self.binaries.clone();
                for &j in &candidates {
                    let first = self.flip_effect(j);
                    self.flip(j);
                    for &k in &bins {
                        if k == j {
                            continue;
                        }
                        let e = first + self.flip_effect(k);
                        if e < -TOL && best.is_none_or(|b| e < b.0) {
                            best = Some((e, j, Some(k)));
                        }
                    }
                    self.flip(j);
                }
            }
            let Some((_, j, k)) = best else {
                return false;
            };
            self.flip(j);
            if let Some(k) = k {
                self.flip(k);
            }
        }
        self.violated == 0
    }

    /// True when every row without a continuous variable holds.
    pub(super) fn binary_rows_hold(&self) -> bool {
        self.violated == 0
    }

    /// Sets the continuous variables and returns the objective, or `None`
    /// if some row cannot be met.
    pub(super) fn complete(&mut self) -> Option<f64> {
        self.complete_scored().map(|(obj, _)| obj)
    }

    /// As `complete`, also counting the rows that pin a continuous
    /// variable at its chosen value.
    pub(super) fn complete_scored(&mut self) -> Option<(f64, usize)> {
        let mut binding = 0;
        if self.violated > 0 {
            return None;
        }
        for &j in &self.cont_vars {
            let var = &self.instance.variables[j];
            let (mut lo, mut hi) = (var.lower, var.upper);
            for &i in &self.cont_rows[j] {
                let (_, a) = self.row_cont[i].expect("continuous row");
                let c = &self.instance.constraints[i];
                let limit = (c.rhs - self.act[i]) / a;
                let (caps, floors) = match c.sense {
                    Sense::Le => (a > 0.0, a < 0.0),
                    Sense::Ge => (a < 0.0, a > 0.0),
                    Sense::Eq => (true, true),
                };
                if caps {
                    hi = hi.min(limit);
                }
                if floors {
                    lo = lo.max(limit);
                }
            }
            if lo > hi + TOL * (1.0 + lo.abs()) {
                return None;
            }
            let cost = self.instance.objective[j];
            let v = if cost > 0.0 || (cost == 0.0 && lo.is_finite()) {
                lo
            } else {
                hi
            };
            if !v.is_finite() {
                return None;
            }
            self.values[j] = v;
            let tol = 1e-9 * v.abs().max(1.0);
            binding += self.cont_rows[j]
                .iter()
                .filter(|&&i| {
                    let (_, a) = self.row_cont[i].expect("continuous row");
                    let c = &self.instance.constraints[i];
                    ((c.rhs - self.act[i]) / a - v).abs() <= tol
                })
                .count();
        }
        Some((self.instance.objective_value(&self.values), binding))
    }
}

/// First-improvement search over single flips and flip pairs, starting
/// from the loaded assignment, which must be feasible. Moves that keep the
/// objective but leave fewer rows pinning the continuous variables are
/// also taken, so that ties at a maximum can be worked down one row at a
/// time. Returns the best objective found; the evaluator is left holding
/// that assignment.
pub(super) fn polish(ev: &mut FlipEvaluator<'_>, deadline: Option<Instant>) -> Option<f64> {
    let mut best = ev.complete_scored()?;
    let bins = ev.binaries().to_vec();
    let better = |cand: (f64, usize), best: (f64, usize)| {
        let eps = 1e-9 * best.0.abs().max(1.0);
        cand.0 < best.0 - eps || (cand.0 <= best.0 + eps && cand.1 < best.1)
    };
    loop {
        let mut improved = false;
        for (p, &a) in bins.iter().enumerate() {
            if deadline.is_some_and(|d| Instant::now() >= d) {
                ev.complete();
                return Some(best.0);
            }
            ev.flip(a);
            if let Some(cand) = ev.complete_scored() {
                if better(cand, best) {
                    best = cand;
                    improved = true;
                    continue;
                }
            }
            let mut kept = false;
            for &b in &bins[p + 1..] {
                ev.flip(b);
                if let Some(cand) = ev.complete_scored() {
                    if better(cand, best) {
                        best = cand;
                        improved = true;
                        kept = true;
                        break;
                    }
                }
                ev.flip(b);
            }
            if !kept {
                ev.flip(a);
            }
        }
        if !improved {
            break;
        }
    }
    ev.complete();
    Some(best.0)
}
