//! Bounded dual simplex for the LP relaxation.
//!
//! Rows are written `a_i y - s_i = 0` with one logical variable `s_i` per
//! row carrying the row bounds. A basis then consists of `k` structural
//! columns `S` and the logicals of every row outside a set `R` of `k`
//! tight rows, and the whole basis inverse is determined by the inverse of
//! the `k x k` block `A[R, S]`. Only that block inverse is stored and
//! updated, so a pivot costs `O(nnz + k^2)` regardless of the row count.
//!
//! The starting basis is all-logical with structurals at the bound their
//! cost prefers, which is dual feasible, so no phase one is needed. Node
//! LPs in branch-and-bound only change bounds and stay dual feasible.

use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{MilpInstance, Sense};

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("variable {0} has no finite bound")]
    FreeVariable(String),
    #[error("variable {name} has empty bounds [{lower}, {upper}]")]
    EmptyBounds { name: String, lower: f64, upper: f64 },
    #[error("non-finite coefficient or bound in {0}")]
    NonFinite(String),
    #[error("variable index {index} out of range in row {row}")]
    BadIndex { row: usize, index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Structural values; meaningful for `Optimal` only.
    pub values: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

/// Stand-in for an infinite bound on the side a cost pushes towards.
const ARTIFICIAL_BOUND: f64 = 1e9;
const PRIMAL_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 50;
const STALL_LIMIT: usize = 100;

/// Column- and row-wise copy of an LP in the logical-variable form.
#[derive(Debug, Clone)]
pub struct LpModel {
    n: usize,
    m: usize,
    cols: Vec<Vec<(usize, f64)>>,
    rows: Vec<Vec<(usize, f64)>>,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    artificial: Vec<bool>,
}

impl LpModel {
    /// Relaxation of `instance`: integrality dropped, bounds kept.
    pub fn from_instance(instance: &MilpInstance) -> Result<Self, LpError> {
        let n = instance.variables.len();
        let m = instance.constraints.len();
        let mut rows = Vec::with_capacity(m);
        for (r, c) in instance.constraints.iter().enumerate() {
            let mut row: Vec<(usize, f64)> = Vec::with_capacity(c.coeffs.len());
            for &(j, a) in &c.coeffs {
                if j >= n {
                    return Err(LpError::BadIndex { row: r, index: j });
                }
                if !a.is_finite() {
                    return Err(LpError::NonFinite(format!("row {}", c.tag)));
                }
                match row.iter_mut().find(|(k, _)| *k == j) {
                    Some(entry) => entry.1 += a,
                    None => row.push((j, a)),
                }
            }
            row.retain(|&(_, a)| a != 0.0);
            if !c.rhs.is_finite() {
                return Err(LpError::NonFinite(format!("right-hand side of {}", c.tag)));
            }
            rows.push(row);
        }
        let mut cols = vec![Vec::new(); n];
        for (i, row) in rows.iter().enumerate() {
            for &(j, a) in row {
                cols[j].push((i, a));
            }
        }
        let mut lower = Vec::with_capacity(n + m);
        let mut upper = Vec::with_capacity(n + m);
        let mut artificial = vec![false; n];
        let mut cost = Vec::with_capacity(n);
        for (j, v) in instance.variables.iter().enumerate() {
            let c = instance.objective.get(j).copied().unwrap_or(0.0);
            if !c.is_finite() || v.lower.is_nan() || v.upper.is_nan() {
                return Err(LpError::NonFinite(format!("variable {}", v.name)));
            }
            if v.lower > v.upper {
                return Err(LpError::EmptyBounds {
                    name: v.name.clone(),
                    lower: v.lower,
                    upper: v.upper,
                });
            }
            let (mut lo, mut hi) = (v.lower, v.upper);
            if !lo.is_finite() && !hi.is_finite() {
                return Err(LpError::FreeVariable(v.name.clone()));
            }
            if !lo.is_finite() {
                lo = -ARTIFICIAL_BOUND;
                artificial[j] = true;
            }
            if !hi.is_finite() {
                hi = ARTIFICIAL_BOUND;
                artificial[j] = true;
            }
            lower.push(lo);
            upper.push(hi);
            cost.push(c);
        }
        for c in &instance.constraints {
            let (lo, hi) = match c.sense {
                Sense::Le => (f64::NEG_INFINITY, c.rhs),
                Sense::Ge => (c.rhs, f64::INFINITY),
                Sense::Eq => (c.rhs, c.rhs),
            };
            lower.push(lo);
            upper.push(hi);
        }
        Ok(Self {
            n,
            m,
            cols,
            rows,
            cost,
            lower,
            upper,
            artificial,
        })
    }

    pub fn structurals(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lower[j], self.upper[j])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarStatus {
    Basic,
    Lower,
    Upper,
}

/// Basis statuses, enough to restart a node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisSnapshot(Vec<VarStatus>);

/// Why a solve stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Optimal,
    Infeasible,
    /// The dual bound exceeded the cutoff.
    CutOff,
    IterationLimit,
    TimeLimit,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveLimits {
    pub cutoff: f64,
    pub max_iterations: usize,
    pub deadline: Option<Instant>,
}

impl Default for SolveLimits {
    fn default() -> Self {
        Self {
            cutoff: f64::INFINITY,
            max_iterations: 200_000,
            deadline: None,
        }
    }
}

const NONE: usize = usize::MAX;

pub struct DualSimplex<'a> {
    lp: &'a LpModel,
    lower: Vec<f64>,
    upper: Vec<f64>,
    status: Vec<VarStatus>,
    basic_cols: Vec<usize>,
    tight_rows: Vec<usize>,
    col_pos: Vec<usize>,
    row_pos: Vec<usize>,
    /// `(A[R, S])^{-1}`, row-major, indexed `[S position][R position]`.
    kinv: Vec<f64>,
    updates: usize,
    x: Vec<f64>,
    d: Vec<f64>,
    rho: Vec<f64>,
    alpha: Vec<f64>,
    pub iterations: usize,
}

impl<'a> DualSimplex<'a> {
    pub fn new(lp: &'a LpModel) -> Self {
        let total = lp.n + lp.m;
        let mut s = Self {
            lp,
            lower: lp.lower.clone(),
            upper: lp.upper.clone(),
            status: vec![VarStatus::Basic; total],
            basic_cols: Vec::new(),
            tight_rows: Vec::new(),
            col_pos: vec![NONE; lp.n],
            row_pos: vec![NONE; lp.m],
            kinv: Vec::new(),
            updates: 0,
            x: vec![0.0; total],
            d: vec![0.0; total],
            rho: Vec::new(),
            alpha: vec![0.0; total],
            iterations: 0,
        };
        s.reset_basis();
        s
    }

    fn reset_basis(&mut self) {
        for j in 0..self.lp.n {
            let c = self.lp.cost[j];
            let prefer_upper = c < 0.0 || (c == 0.0 && self.lp.artificial[j] && self.lp.lower[j] < -1e8);
            self.status[j] = if prefer_upper {
                VarStatus::Upper
            } else {
                VarStatus::Lower
            };
        }
        for i in 0..self.lp.m {
            self.status[self.lp.n + i] = VarStatus::Basic;
        }
        self.basic_cols.clear();
        self.tight_rows.clear();
        self.col_pos.fill(NONE);
        self.row_pos.fill(NONE);
        self.kinv.clear();
        self.updates = 0;
    }

    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        self.lower[j] = lower;
        self.upper[j] = upper;
    }

    pub fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lower[j], self.upper[j])
    }

    pub fn snapshot(&self) -> BasisSnapshot {
        BasisSnapshot(self.status.clone())
    }

    pub fn restore(&mut self, snap: &BasisSnapshot) {
        self.status.clone_from(&snap.0);
        let n = self.lp.n;
        let cols: Vec<usize> = (0..n).filter(|&j| self.status[j] == VarStatus::Basic).collect();
        let rows: Vec<usize> = (0..self.lp.m)
            .filter(|&i| self.status[n + i] != VarStatus::Basic)
            .collect();
        if cols.len() != rows.len() {
            self.reset_basis();
            return;
        }
        self.basic_cols = cols;
        self.tight_rows = rows;
        self.reindex();
        if !self.refactor() {
            self.reset_basis();
        }
    }

    fn reindex(&mut self) {
        self.col_pos.fill(NONE);
        self.row_pos.fill(NONE);
        for (p, &j) in self.basic_cols.iter().enumerate() {
            self.col_pos[j] = p;
        }
        for (a, &i) in self.tight_rows.iter().enumerate() {
            self.row_pos[i] = a;
        }
    }

    fn k(&self) -> usize {
        self.basic_cols.len()
    }

    /// Fresh inverse of the tight block. False if it is singular.
    fn refactor(&mut self) -> bool {
        let k = self.k();
        self.updates = 0;
        if k == 0 {
            self.kinv.clear();
            return true;
        }
        let mut block = DMatrix::<f64>::zeros(k, k);
        for (p, &j) in self.basic_cols.iter().enumerate() {
            for &(i, a) in &self.lp.cols[j] {
                let r = self.row_pos[i];
                if r != NONE {
                    block[(r, p)] = a;
                }
            }
        }
        let Some(inv) = block.try_inverse() else {
            return false;
        };
        self.kinv.resize(k * k, 0.0);
        for p in 0..k {
            for a in 0..k {
                self.kinv[p * k + a] = inv[(p, a)];
            }
        }
        true
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.status[j] {
            VarStatus::Upper => self.upper[j],
            _ => self.lower[j],
        }
    }

    fn compute_primal(&mut self) {
        let n = self.lp.n;
        for j in 0..n + self.lp.m {
            if self.status[j] != VarStatus::Basic {
                self.x[j] = self.nonbasic_value(j);
            }
        }
        let k = self.k();
        let mut rhs = vec![0.0; k];
        for (a, &i) in self.tight_rows.iter().enumerate() {
            let mut v = self.x[n + i];
            for &(j, coef) in &self.lp.rows[i] {
                if self.col_pos[j] == NONE {
                    v -= coef * self.x[j];
                }
            }
            rhs[a] = v;
        }
        for (p, &j) in self.basic_cols.iter().enumerate() {
            let row = &self.kinv[p * k..(p + 1) * k];
            self.x[j] = row.iter().zip(&rhs).map(|(a, b)| a * b).sum();
        }
        for i in 0..self.lp.m {
            if self.row_pos[i] == NONE {
                self.x[n + i] = self.lp.rows[i].iter().map(|&(j, a)| a * self.x[j]).sum();
            }
        }
    }

    fn compute_duals(&mut self) {
        let n = self.lp.n;
        let k = self.k();
        let mut pi = vec![0.0; k];
        for (p, &j) in self.basic_cols.iter().enumerate() {
            let c = self.lp.cost[j];
            if c != 0.0 {
                let row = &self.kinv[p * k..(p + 1) * k];
                for (acc, v) in pi.iter_mut().zip(row) {
                    *acc += c * v;
                }
            }
        }
        for j in 0..n {
            self.d[j] = if self.status[j] == VarStatus::Basic {
                0.0
            } else {
                let mut v = self.lp.cost[j];
                for &(i, a) in &self.lp.cols[j] {
                    let r = self.row_pos[i];
                    if r != NONE {
                        v -= pi[r] * a;
                    }
                }
                v
            };
        }
        for i in 0..self.lp.m {
            let r = self.row_pos[i];
            self.d[n + i] = if r == NONE { 0.0 } else { pi[r] };
        }
    }

    /// Moves nonbasic variables with wrong-signed reduced costs to their
    /// other bound when it is finite.
    fn restore_dual_feasibility(&mut self) {
        for j in 0..self.lp.n + self.lp.m {
            match self.status[j] {
                VarStatus::Lower if self.d[j] < -DUAL_TOL && self.upper[j].is_finite() => {
                    self.status[j] = VarStatus::Upper;
                }
                VarStatus::Upper if self.d[j] > DUAL_TOL && self.lower[j].is_finite() => {
                    self.status[j] = VarStatus::Lower;
                }
                _ => {}
            }
        }
    }

    fn objective(&self) -> f64 {
        self.lp.cost.iter().zip(&self.x).map(|(c, x)| c * x).sum()
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let x = self.x[j];
        if x < self.lower[j] - PRIMAL_TOL {
            self.lower[j] - x
        } else if x > self.upper[j] + PRIMAL_TOL {
            x - self.upper[j]
        } else {
            0.0
        }
    }

    fn choose_leaving(&self, bland: bool) -> Option<usize> {
        let n = self.lp.n;
        let basics = self
            .basic_cols
            .iter()
            .copied()
            .chain((0..self.lp.m).filter(|&i| self.row_pos[i] == NONE).map(|i| n + i));
        let mut best: Option<(usize, f64)> = None;
        for j in basics {
            let inf = self.infeasibility(j);
            if inf <= 0.0 {
                continue;
            }
            let better = match best {
                None => true,
                Some((bj, _)) if bland => j < bj,
                Some((bj, bv)) => inf > bv || (inf == bv && j < bj),
            };
            if better {
                best = Some((j, inf));
            }
        }
        best.map(|b| b.0)
    }

    /// Fills `alpha` for nonbasic variables with the pivot row of `leaving`.
    fn pivot_row(&mut self, leaving: usize) {
        let n = self.lp.n;
        let k = self.k();
        self.rho.clear();
        self.rho.resize(k, 0.0);
        let leaving_row = if leaving < n {
            let p = self.col_pos[leaving];
            self.rho.copy_from_slice(&self.kinv[p * k..(p + 1) * k]);
            NONE
        } else {
            let i = leaving - n;
            for &(j, a) in &self.lp.rows[i] {
                let p = self.col_pos[j];
                if p != NONE {
                    let row = &self.kinv[p * k..(p + 1) * k];
                    for (acc, v) in self.rho.iter_mut().zip(row) {
                        *acc += a * v;
                    }
                }
            }
            i
        };
        for j in 0..n {
            if self.status[j] == VarStatus::Basic {
                continue;
            }
            let mut v = 0.0;
            for &(i, a) in &self.lp.cols[j] {
                let r = self.row_pos[i];
                if r != NONE {
                    v += self.rho[r] * a;
                } else if i == leaving_row {
                    v -= a;
                }
            }
            self.alpha[j] = v;
        }
        for (a, &i) in self.tight_rows.iter().enumerate() {
            self.alpha[n + i] = -self.rho[a];
        }
    }

    /// Harris two-pass ratio test; `to_lower` says the leaving variable
    /// moves up to its lower bound.
    fn ratio_test(&self, to_lower: bool, bland: bool) -> Option<usize> {
        let n = self.lp.n;
        let candidates = (0..n)
            .filter(|&j| self.status[j] != VarStatus::Basic)
            .chain(self.tight_rows.iter().map(|&i| n + i));
        let mut eligible = Vec::new();
        for j in candidates {
            if self.lower[j] == self.upper[j] {
                continue;
            }
            let a = self.alpha[j];
            if a.abs() < PIVOT_TOL {
                continue;
            }
            let at_lower = self.status[j] == VarStatus::Lower;
            let ok = if to_lower {
                (at_lower && a < 0.0) || (!at_lower && a > 0.0)
            } else {
                (at_lower && a > 0.0) || (!at_lower && a < 0.0)
            };
            if !ok {
                continue;
            }
            let dj = if at_lower {
                self.d[j].max(0.0)
            } else {
                (-self.d[j]).max(0.0)
            };
            eligible.push((j, dj, a.abs()));
        }
        if eligible.is_empty() {
            return None;
        }
        if bland {
            let min = eligible.iter().map(|e| e.1 / e.2).fold(f64::INFINITY, f64::min);
            return eligible.iter().filter(|e| e.1 / e.2 <= min + 1e-12).map(|e| e.0).min();
        }
        let bound = eligible
            .iter()
            .map(|e| (e.1 + DUAL_TOL) / e.2)
            .fold(f64::INFINITY, f64::min);
        eligible
            .iter()
            .filter(|e| e.1 / e.2 <= bound)
            .max_by(|a, b| a.2.total_cmp(&b.2).then(b.0.cmp(&a.0)))
            .map(|e| e.0)
    }

    /// Swaps `leaving` out of and `entering` into the basis.
    fn update_basis(&mut self, leaving: usize, entering: usize) {
        let n = self.lp.n;
        let k = self.k();
        match (leaving < n, entering < n) {
            (true, true) => {
                let p = self.col_pos[leaving];
                let mut col = vec![0.0; k];
                for &(i, a) in &self.lp.cols[entering] {
                    let r = self.row_pos[i];
                    if r != NONE {
                        col[r] = a;
                    }
                }
                let u: Vec<f64> = (0..k)
                    .map(|q| self.kinv[q * k..(q + 1) * k].iter().zip(&col).map(|(a, b)| a * b).sum())
                    .collect();
                let piv = u[p];
                for a in 0..k {
                    self.kinv[p * k + a] /= piv;
                }
                for (q, &uq) in u.iter().enumerate() {
                    if q != p && uq != 0.0 {
                        for a in 0..k {
                            self.kinv[q * k + a] -= uq * self.kinv[p * k + a];
                        }
                    }
                }
                self.basic_cols[p] = entering;
                self.col_pos[leaving] = NONE;
                self.col_pos[entering] = p;
            }
            (true, false) => {
                let p = self.col_pos[leaving];
                let row = entering - n;
                let a_pos = self.row_pos[row];
                let piv = self.kinv[p * k + a_pos];
                let mut next = Vec::with_capacity((k - 1) * (k - 1));
                for q in (0..k).filter(|&q| q != p) {
                    let f = self.kinv[q * k + a_pos] / piv;
                    for a in (0..k).filter(|&a| a != a_pos) {
                        next.push(self.kinv[q * k + a] - f * self.kinv[p * k + a]);
                    }
                }
                self.kinv = next;
                self.basic_cols.remove(p);
                self.tight_rows.remove(a_pos);
                self.reindex();
            }
            (false, true) => {
                let row = leaving - n;
                let mut col = vec![0.0; k];
                let mut corner = 0.0;
                for &(i, a) in &self.lp.cols[entering] {
                    let r = self.row_pos[i];
                    if r != NONE {
                        col[r] = a;
                    } else if i == row {
                        corner = a;
                    }
                }
                let u: Vec<f64> = (0..k)
                    .map(|q| self.kinv[q * k..(q + 1) * k].iter().zip(&col).map(|(a, b)| a * b).sum())
                    .collect();
                let mut v = vec![0.0; k];
                let mut w_dot_u = 0.0;
                for &(j, a) in &self.lp.rows[row] {
                    let p = self.col_pos[j];
                    if p != NONE {
                        w_dot_u += a * u[p];
                        for (acc, val) in v.iter_mut().zip(&self.kinv[p * k..(p + 1) * k]) {
                            *acc += a * val;
                        }
                    }
                }
                let s = corner - w_dot_u;
                let k1 = k + 1;
                let mut next = vec![0.0; k1 * k1];
                for q in 0..k {
                    for a in 0..k {
                        next[q * k1 + a] = self.kinv[q * k + a] + u[q] * v[a] / s;
                    }
                    next[q * k1 + k] = -u[q] / s;
                }
                for a in 0..k {
                    next[k * k1 + a] = -v[a] / s;
                }
                next[k * k1 + k] = 1.0 / s;
                self.kinv = next;
                self.basic_cols.push(entering);
                self.tight_rows.push(row);
                self.col_pos[entering] = k;
                self.row_pos[row] = k;
            }
            (false, false) => {
                let row = leaving - n;
                let a_pos = self.row_pos[entering - n];
                let mut v = vec![0.0; k];
                for &(j, a) in &self.lp.rows[row] {
                    let p = self.col_pos[j];
                    if p != NONE {
                        for (acc, val) in v.iter_mut().zip(&self.kinv[p * k..(p + 1) * k]) {
                            *acc += a * val;
                        }
                    }
                }
                let piv = v[a_pos];
                for q in 0..k {
                    self.kinv[q * k + a_pos] /= piv;
                }
                for a in (0..k).filter(|&a| a != a_pos && v[a] != 0.0) {
                    for q in 0..k {
                        self.kinv[q * k + a] -= v[a] * self.kinv[q * k + a_pos];
                    }
                }
                self.tight_rows[a_pos] = row;
                self.row_pos[entering - n] = NONE;
                self.row_pos[row] = a_pos;
            }
        }
        self.updates += 1;
    }

    /// Runs dual simplex iterations from the current basis.
    pub fn solve(&mut self, limits: &SolveLimits) -> Outcome {
        let mut bland = false;
        let mut stall = 0usize;
        let mut last_obj = f64::NEG_INFINITY;
        let mut budget = limits.max_iterations;
        loop {
            if self.updates >= REFACTOR_EVERY && !self.refactor() {
                self.reset_basis();
            }
            self.compute_duals();
            self.restore_dual_feasibility();
            self.compute_primal();
            let obj = self.objective();
            if obj > limits.cutoff {
                return Outcome::CutOff;
            }
            if obj > last_obj + 1e-12 * (1.0 + obj.abs()) {
                last_obj = obj;
                stall = 0;
                bland = false;
            } else {
                stall += 1;
                if stall > STALL_LIMIT {
                    bland = true;
                }
            }
            let Some(leaving) = self.choose_leaving(bland) else {
                if self.updates > 0 {
                    // confirm on a fresh factorisation
                    if !self.refactor() {
                        self.reset_basis();
                    }
                    self.compute_duals();
                    self.restore_dual_feasibility();
                    self.compute_primal();
                    if self.choose_leaving(false).is_some() {
                        continue;
                    }
                }
                return Outcome::Optimal;
            };
            self.pivot_row(leaving);
            let to_lower = self.x[leaving] < self.lower[leaving];
            let Some(entering) = self.ratio_test(to_lower, bland) else {
                if self.updates > 0 {
                    if !self.refactor() {
                        self.reset_basis();
                    }
                    continue;
                }
                return Outcome::Infeasible;
            };
            self.status[leaving] = if to_lower { VarStatus::Lower } else { VarStatus::Upper };
            self.status[entering] = VarStatus::Basic;
            self.update_basis(leaving, entering);
            self.iterations += 1;
            budget = budget.saturating_sub(1);
            if budget == 0 {
                return Outcome::IterationLimit;
            }
            if self.iterations.is_multiple_of(32) {
                if let Some(deadline) = limits.deadline {
                    if Instant::now() >= deadline {
                        return Outcome::TimeLimit;
                    }
                }
            }
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.x[..self.lp.n]
    }

    pub fn objective_value(&self) -> f64 {
        self.objective()
    }

    /// True if an optimal point rests on a stand-in for an infinite bound
    /// that its cost pushes against.
    fn rests_on_artificial_bound(&self) -> bool {
        (0..self.lp.n).any(|j| {
            self.lp.artificial[j]
                && self.status[j] != VarStatus::Basic
                && self.d[j].abs() > DUAL_TOL
                && self.x[j].abs() >= ARTIFICIAL_BOUND * 0.5
        })
    }
}

/// Solves the LP relaxation of `instance` from scratch.
pub fn solve_lp(instance: &MilpInstance) -> Result<LpSolution, LpError> {
    let lp = LpModel::from_instance(instance)?;
    let mut simplex = DualSimplex::new(&lp);
    let outcome = simplex.solve(&SolveLimits::default());
    let status = match outcome {
        Outcome::Optimal if simplex.rests_on_artificial_bound() => LpStatus::Unbounded,
        Outcome::Optimal => LpStatus::Optimal,
        Outcome::Infeasible => LpStatus::Infeasible,
        // no cutoff or deadline here; the iteration budget is generous
        Outcome::CutOff | Outcome::IterationLimit | Outcome::TimeLimit => LpStatus::Infeasible,
    };
    Ok(LpSolution {
        status,
        values: simplex.values().to_vec(),
        objective: simplex.objective_value(),
        iterations: simplex.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Constraint, RowKind, RowTag, VarKind, Variable};

    pub(crate) fn lp_instance(bounds: &[(f64, f64)], cost: &[f64], rows: &[(&[f64], Sense, f64)]) -> MilpInstance {
        MilpInstance {
            variant: crate::model::Variant::Deterministic,
            variables: bounds
                .iter()
                .enumerate()
                .map(|(j, &(lower, upper))| Variable {
                    name: format!("Y{j}"),
                    kind: VarKind::Continuous,
                    lower,
                    upper,
                })
                .collect(),
            objective: cost.to_vec(),
            constraints: rows
                .iter()
                .enumerate()
                .map(|(i, (a, sense, rhs))| Constraint {
                    tag: RowTag {
                        kind: RowKind::Capacity,
                        zone: Some(i),
                        house: None,
                        slot: None,
                    },
                    coeffs: a.iter().copied().enumerate().filter(|(_, v)| *v != 0.0).collect(),
                    sense: *sense,
                    rhs: *rhs,
                })
                .collect(),
            layout: None,
        }
    }

    #[test]
    fn single_bounded_variable() {
        let inst = lp_instance(&[(0.0, 1.0)], &[-1.0], &[]);
        let sol = solve_lp(&inst).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_eq!(sol.values, vec![1.0]);
        assert_eq!(sol.objective, -1.0);
    }

    #[test]
    fn textbook_two_variable_lp() {
        // min -3a - 5b, a <= 4, 2b <= 12, 3a + 2b <= 18
        let inst = lp_instance(
            &[(0.0, 100.0), (0.0, 100.0)],
            &[-3.0, -5.0],
            &[
                (&[1.0, 0.0], Sense::Le, 4.0),
                (&[0.0, 2.0], Sense::Le, 12.0),
                (&[3.0, 2.0], Sense::Le, 18.0),
            ],
        );
        let sol = solve_lp(&inst).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective + 36.0).abs() < 1e-9);
        assert!((sol.values[0] - 2.0).abs() < 1e-9 && (sol.values[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn ge_and_eq_rows() {
        // min a + b, a + b >= 2, a - b = 1 -> (1.5, 0.5)
        let inst = lp_instance(
            &[(0.0, 10.0), (0.0, 10.0)],
            &[1.0, 1.0],
            &[(&[1.0, 1.0], Sense::Ge, 2.0), (&[1.0, -1.0], Sense::Eq, 1.0)],
        );
        let sol = solve_lp(&inst).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.values[0] - 1.5).abs() < 1e-9 && (sol.values[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn infeasible_rows() {
        let inst = lp_instance(&[(0.0, 1.0)], &[1.0], &[(&[1.0], Sense::Ge, 2.0)]);
        assert_eq!(solve_lp(&inst).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_direction() {
        let inst = lp_instance(&[(0.0, f64::INFINITY)], &[-1.0], &[]);
        assert_eq!(solve_lp(&inst).unwrap().status, LpStatus::Unbounded);
        let free = lp_instance(&[(f64::NEG_INFINITY, f64::INFINITY)], &[1.0], &[]);
        assert!(matches!(solve_lp(&free), Err(LpError::FreeVariable(_))));
    }

    #[test]
    fn restore_after_bound_change() {
        let inst = lp_instance(
            &[(0.0, 1.0), (0.0, 1.0)],
            &[-1.0, -1.0],
            &[(&[1.0, 1.0], Sense::Le, 1.5)],
        );
        let lp = LpModel::from_instance(&inst).unwrap();
        let mut s = DualSimplex::new(&lp);
        assert_eq!(s.solve(&SolveLimits::default()), Outcome::Optimal);
        assert!((s.objective_value() + 1.5).abs() < 1e-12);
        let snap = s.snapshot();
        s.set_bounds(0, 0.0, 0.0);
        assert_eq!(s.solve(&SolveLimits::default()), Outcome::Optimal);
        assert!((s.objective_value() + 1.0).abs() < 1e-12);
        s.set_bounds(0, 1.0, 1.0);
        s.restore(&snap);
        assert_eq!(s.solve(&SolveLimits::default()), Outcome::Optimal);
        assert!((s.objective_value() + 1.5).abs() < 1e-12);
        let cut = SolveLimits {
            cutoff: -2.0,
            ..Default::default()
        };
        s.set_bounds(0, 0.0, 1.0);
        assert_eq!(s.solve(&cut), Outcome::CutOff);
    }
}
