//! Bounded-variable revised simplex with warm starts under column addition
//! and bound changes. The basis is kept as a dense LU factorization with
//! product-form eta updates, refactorized every [`REFACTOR_INTERVAL`]
//! pivots. Phase 1 works with artificial variables: each bound-violating
//! basic variable is displaced by an artificial that shares its column, so
//! the basis matrix (and its factorization) is unchanged and an infeasible
//! warm basis is repaired in place. Big-M is never used.

mod lu;
pub mod oracle;

use std::fmt::Write as _;

use thiserror::Error;

pub use lu::ZERO_PIVOT_TOL;

/// Primal feasibility tolerance on variable bounds.
pub const FEASIBILITY_TOL: f64 = 1e-7;
/// Reduced-cost (dual feasibility) tolerance.
pub const OPTIMALITY_TOL: f64 = 1e-7;
/// Smallest pivot element accepted by the ratio test.
const RATIO_PIVOT_TOL: f64 = 1e-9;
/// Pivots between refactorizations of the basis.
const REFACTOR_INTERVAL: usize = 50;
/// Consecutive degenerate pivots before switching to Bland's rule.
const DEGENERATE_PIVOT_LIMIT: usize = 1000;

#[derive(Debug, Error)]
pub enum SimplexError {
    #[error("column has {got} coefficients, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid bounds: lower {lo} exceeds upper {hi}")]
    InvalidBounds { lo: f64, hi: f64 },
    #[error("numerically stalled after {0} simplex iterations")]
    Stalled(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Ge,
    Le,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Basic/nonbasic state of one variable. `Free` marks a nonbasic free
/// variable pinned at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    Free,
}

/// Basis snapshot: statuses of the structural variables and of each row's
/// slack. Reusable as a warm start after adding columns (new columns default
/// to nonbasic) or changing bounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    pub vars: Vec<VarStatus>,
    pub rows: Vec<VarStatus>,
}

/// LP in natural form: structural columns with bounds, one sense and
/// right-hand side per row. Minimization.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    costs: Vec<f64>,
    columns: Vec<Vec<(u32, f64)>>,
    bounds: Vec<(f64, f64)>,
    senses: Vec<RowSense>,
    rhs: Vec<f64>,
}

impl LinearProgram {
    pub fn new(senses: Vec<RowSense>, rhs: Vec<f64>) -> Self {
        assert_eq!(senses.len(), rhs.len());
        assert!(!senses.is_empty(), "LP must have at least one row");
        LinearProgram { costs: Vec::new(), columns: Vec::new(), bounds: Vec::new(), senses, rhs }
    }

    pub fn num_rows(&self) -> usize {
        self.senses.len()
    }

    pub fn num_vars(&self) -> usize {
        self.costs.len()
    }

    /// Appends a variable from a dense coefficient vector. The previous
    /// basis stays valid as a warm start: the new variable enters nonbasic
    /// at a bound.
    pub fn add_column(
        &mut self,
        cost: f64,
        coeffs: &[f64],
        bounds: (f64, f64),
    ) -> Result<usize, SimplexError> {
        if coeffs.len() != self.num_rows() {
            return Err(SimplexError::DimensionMismatch { expected: self.num_rows(), got: coeffs.len() });
        }
        let entries: Vec<(u32, f64)> =
            coeffs.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, &v)| (i as u32, v)).collect();
        self.add_sparse_column(cost, entries, bounds)
    }

    pub fn add_sparse_column(
        &mut self,
        cost: f64,
        entries: Vec<(u32, f64)>,
        bounds: (f64, f64),
    ) -> Result<usize, SimplexError> {
        if bounds.0 > bounds.1 {
            return Err(SimplexError::InvalidBounds { lo: bounds.0, hi: bounds.1 });
        }
        debug_assert!(entries.iter().all(|&(i, _)| (i as usize) < self.num_rows()));
        self.costs.push(cost);
        self.columns.push(entries);
        self.bounds.push(bounds);
        Ok(self.costs.len() - 1)
    }

    pub fn set_var_bounds(&mut self, var: usize, lo: f64, hi: f64) -> Result<(), SimplexError> {
        if lo > hi {
            return Err(SimplexError::InvalidBounds { lo, hi });
        }
        self.bounds[var] = (lo, hi);
        Ok(())
    }

    pub fn var_bounds(&self, var: usize) -> (f64, f64) {
        self.bounds[var]
    }

    pub fn cost(&self, var: usize) -> f64 {
        self.costs[var]
    }

    /// Plain-text dump for debugging: one `min` line, one line per row
    /// (`coeff*x<j> ... <sense> <rhs>`), one line per variable bound.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "min {}",
            self.costs.iter().enumerate().map(|(j, c)| format!("{c}*x{j}")).collect::<Vec<_>>().join(" + ")
        );
        for i in 0..self.num_rows() {
            let mut terms = Vec::new();
            for (j, col) in self.columns.iter().enumerate() {
                if let Some(&(_, v)) = col.iter().find(|&&(r, _)| r as usize == i) {
                    terms.push(format!("{v}*x{j}"));
                }
            }
            let sense = match self.senses[i] {
                RowSense::Ge => ">=",
                RowSense::Le => "<=",
                RowSense::Eq => "=",
            };
            let _ = writeln!(out, "r{i}: {} {sense} {}", terms.join(" + "), self.rhs[i]);
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            let _ = writeln!(out, "x{j} in [{lo}, {hi}]");
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: SolveStatus,
    pub primal: Vec<f64>,
    /// One multiplier per row; `>=` rows carry nonnegative duals at an
    /// optimum of this minimization form, `<=` rows nonpositive.
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub objective_value: f64,
    pub basis: Basis,
    /// Dual ray certifying infeasibility (one entry per row).
    pub farkas: Option<Vec<f64>>,
    /// Primal ray certifying unboundedness (one entry per variable).
    pub ray: Option<Vec<f64>>,
    pub iterations: usize,
}

/// Solves an LP, optionally starting from a warm basis. Equivalent to
/// `Solver::new(lp.clone())` plus [`Solver::set_warm_basis`].
pub fn solve(lp: &LinearProgram, warm: Option<&Basis>) -> Result<LpSolution, SimplexError> {
    let mut solver = Solver::new(lp.clone());
    if let Some(basis) = warm {
        solver.set_warm_basis(basis);
    }
    solver.solve()
}

// Internal variable layout: slacks occupy 0..m so structural columns can
// grow at the tail without renumbering; artificials exist only inside one
// `solve` call and always sit past the current tail.
#[derive(Debug, Clone, Copy)]
enum Phase {
    One,
    Two,
}

enum LoopExit {
    Converged,
    Unbounded { entering: usize, direction: f64, ftran: Vec<f64> },
    RefactorFailed,
}

/// Incremental solver: owns the LP and keeps basis + factorization state
/// alive across `solve` calls, so column generation and branch-and-bound
/// re-solves start from the previous optimum.
pub struct Solver {
    lp: LinearProgram,
    m: usize,
    status: Vec<VarStatus>,
    slot_of: Vec<usize>,
    basis: Vec<usize>,
    x_basic: Vec<f64>,
    factors: Option<lu::BasisFactors>,
    etas: Vec<lu::Eta>,
    factors_dirty: bool,
    arts: Vec<Artificial>,
    iterations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Artificial {
    twin: usize,
    cost: f64,
    lo: f64,
    hi: f64,
}

const NO_SLOT: usize = usize::MAX;

impl Solver {
    pub fn new(lp: LinearProgram) -> Self {
        let m = lp.num_rows();
        let mut solver = Solver {
            lp,
            m,
            status: Vec::new(),
            slot_of: Vec::new(),
            basis: Vec::new(),
            x_basic: vec![0.0; m],
            factors: None,
            etas: Vec::new(),
            factors_dirty: true,
            arts: Vec::new(),
            iterations: 0,
        };
        solver.sync_new_vars();
        solver.reset_to_slack_basis();
        solver
    }

    pub fn lp(&self) -> &LinearProgram {
        &self.lp
    }

    pub fn add_column(
        &mut self,
        cost: f64,
        coeffs: &[f64],
        bounds: (f64, f64),
    ) -> Result<usize, SimplexError> {
        let var = self.lp.add_column(cost, coeffs, bounds)?;
        self.sync_new_vars();
        Ok(var)
    }

    pub fn add_sparse_column(
        &mut self,
        cost: f64,
        entries: Vec<(u32, f64)>,
        bounds: (f64, f64),
    ) -> Result<usize, SimplexError> {
        let var = self.lp.add_sparse_column(cost, entries, bounds)?;
        self.sync_new_vars();
        Ok(var)
    }

    /// Replaces bounds; the basis stays reusable, a violated basic variable
    /// is repaired by phase 1 on the next solve.
    pub fn set_var_bounds(&mut self, var: usize, lo: f64, hi: f64) -> Result<(), SimplexError> {
        self.lp.set_var_bounds(var, lo, hi)
    }

    /// Installs a caller-provided basis if it is structurally valid
    /// (exactly one basic variable per row); otherwise the current state is
    /// kept. Returns whether the basis was accepted.
    pub fn set_warm_basis(&mut self, basis: &Basis) -> bool {
        if basis.vars.len() != self.lp.num_vars() || basis.rows.len() != self.m {
            return false;
        }
        let n_total = self.m + self.lp.num_vars();
        let mut status = vec![VarStatus::AtLower; n_total];
        let mut basic_vars = Vec::with_capacity(self.m);
        for (i, &st) in basis.rows.iter().enumerate() {
            status[i] = st;
            if st == VarStatus::Basic {
                basic_vars.push(i);
            }
        }
        for (j, &st) in basis.vars.iter().enumerate() {
            status[self.m + j] = st;
            if st == VarStatus::Basic {
                basic_vars.push(self.m + j);
            }
        }
        if basic_vars.len() != self.m {
            return false;
        }
        if self.basis == basic_vars && !self.factors_dirty {
            self.status = status;
            // same basis matrix: keep the factorization
        } else {
            self.basis = basic_vars;
            self.status = status;
            self.factors = None;
            self.etas.clear();
            self.factors_dirty = true;
        }
        self.slot_of = vec![NO_SLOT; n_total];
        for (slot, &v) in self.basis.iter().enumerate() {
            self.slot_of[v] = slot;
        }
        true
    }

    /// Current basis snapshot in structural/row form.
    pub fn basis_snapshot(&self) -> Basis {
        let n = self.lp.num_vars();
        let vars = (0..n).map(|j| self.status[self.m + j]).collect();
        let rows = (0..self.m).map(|i| self.status[i]).collect();
        Basis { vars, rows }
    }

    fn sync_new_vars(&mut self) {
        let n_total = self.m + self.lp.num_vars();
        while self.status.len() < n_total {
            let j = self.status.len();
            let (lo, hi) = self.bounds_of(j);
            self.status.push(initial_status(lo, hi));
            self.slot_of.push(NO_SLOT);
        }
    }

    fn reset_to_slack_basis(&mut self) {
        self.basis = (0..self.m).collect();
        for (j, st) in self.status.iter_mut().enumerate() {
            if j < self.m {
                *st = VarStatus::Basic;
            } else if *st == VarStatus::Basic {
                let (lo, hi) = bounds_pair(&self.lp, self.m, j);
                *st = initial_status(lo, hi);
            }
        }
        for s in self.slot_of.iter_mut() {
            *s = NO_SLOT;
        }
        for (slot, &v) in self.basis.iter().enumerate() {
            self.slot_of[v] = slot;
        }
        self.factors = None;
        self.etas.clear();
        self.factors_dirty = true;
    }

    fn n_total(&self) -> usize {
        self.m + self.lp.num_vars() + self.arts.len()
    }

    fn bounds_of(&self, j: usize) -> (f64, f64) {
        let tail = self.m + self.lp.num_vars();
        if j >= tail {
            let a = &self.arts[j - tail];
            (a.lo, a.hi)
        } else {
            bounds_pair(&self.lp, self.m, j)
        }
    }

    fn cost_of(&self, j: usize, phase: Phase) -> f64 {
        let tail = self.m + self.lp.num_vars();
        match phase {
            Phase::One => {
                if j >= tail {
                    self.arts[j - tail].cost
                } else {
                    0.0
                }
            }
            Phase::Two => {
                if j >= self.m && j < tail {
                    self.lp.cost(j - self.m)
                } else {
                    0.0
                }
            }
        }
    }

    fn column_target(&self, j: usize) -> usize {
        let tail = self.m + self.lp.num_vars();
        if j >= tail {
            self.arts[j - tail].twin
        } else {
            j
        }
    }

    fn for_each_entry(&self, j: usize, mut f: impl FnMut(usize, f64)) {
        let j = self.column_target(j);
        if j < self.m {
            f(j, 1.0);
        } else {
            for &(row, v) in &self.lp.columns[j - self.m] {
                f(row as usize, v);
            }
        }
    }

    fn scatter_column(&self, j: usize, out: &mut [f64]) {
        out.fill(0.0);
        self.for_each_entry(j, |row, v| out[row] = v);
    }

    fn dot_column(&self, j: usize, y: &[f64]) -> f64 {
        let mut s = 0.0;
        self.for_each_entry(j, |row, v| s += y[row] * v);
        s
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.status[j] {
            VarStatus::AtLower => self.bounds_of(j).0,
            VarStatus::AtUpper => self.bounds_of(j).1,
            VarStatus::Free => 0.0,
            VarStatus::Basic => unreachable!("basic variable has no nonbasic value"),
        }
    }

    fn value_of(&self, j: usize) -> f64 {
        if self.status[j] == VarStatus::Basic {
            self.x_basic[self.slot_of[j]]
        } else {
            self.nonbasic_value(j)
        }
    }

    /// Nonbasic statuses must point at a finite bound; bound edits can
    /// invalidate them.
    fn sanitize_statuses(&mut self) {
        for j in 0..self.n_total() {
            if self.status[j] == VarStatus::Basic {
                continue;
            }
            let (lo, hi) = self.bounds_of(j);
            self.status[j] = match self.status[j] {
                VarStatus::AtLower if lo.is_finite() => VarStatus::AtLower,
                VarStatus::AtUpper if hi.is_finite() => VarStatus::AtUpper,
                _ => initial_status(lo, hi),
            };
        }
    }

    fn refactorize(&mut self) -> bool {
        let m = self.m;
        let mut cols: Vec<Vec<(u32, f64)>> = Vec::with_capacity(m);
        for &v in &self.basis {
            let mut col = Vec::new();
            self.for_each_entry(v, |row, val| col.push((row as u32, val)));
            cols.push(col);
        }
        match lu::BasisFactors::factorize(cols, m) {
            Some(f) => {
                self.factors = Some(f);
                self.etas.clear();
                self.factors_dirty = false;
                true
            }
            None => false,
        }
    }

    fn ftran(&self, rhs: &mut [f64]) {
        self.factors.as_ref().expect("factors present").solve(rhs);
        lu::ftran_etas(&self.etas, rhs);
    }

    fn btran(&self, c: &mut [f64]) {
        lu::btran_etas(&self.etas, c);
        self.factors.as_ref().expect("factors present").solve_transpose(c);
    }

    fn compute_x_basic(&mut self) {
        let mut rhs = self.lp.rhs.clone();
        for j in 0..self.n_total() {
            if self.status[j] != VarStatus::Basic {
                let v = self.nonbasic_value(j);
                if v != 0.0 {
                    self.for_each_entry(j, |row, a| rhs[row] -= a * v);
                }
            }
        }
        self.ftran(&mut rhs);
        self.x_basic = rhs;
    }

    fn duals_for(&self, phase: Phase) -> Vec<f64> {
        let mut c = vec![0.0; self.m];
        for (slot, &v) in self.basis.iter().enumerate() {
            c[slot] = self.cost_of(v, phase);
        }
        self.btran(&mut c);
        c
    }

    /// Replaces every bound-violating basic variable with an artificial
    /// sharing its column, leaving the basis matrix (and factorization)
    /// untouched. Returns the number installed.
    fn install_artificials(&mut self) -> usize {
        let mut installed = 0;
        for slot in 0..self.m {
            let v = self.basis[slot];
            let x = self.x_basic[slot];
            let (lo, hi) = self.bounds_of(v);
            let (art, twin_status, value) = if x < lo - FEASIBILITY_TOL {
                (Artificial { twin: v, cost: -1.0, lo: f64::NEG_INFINITY, hi: 0.0 }, VarStatus::AtLower, x - lo)
            } else if x > hi + FEASIBILITY_TOL {
                (Artificial { twin: v, cost: 1.0, lo: 0.0, hi: f64::INFINITY }, VarStatus::AtUpper, x - hi)
            } else {
                continue;
            };
            self.arts.push(art);
            let art_idx = self.n_total() - 1;
            self.status.push(VarStatus::Basic);
            self.slot_of.push(slot);
            self.basis[slot] = art_idx;
            self.status[v] = twin_status;
            self.slot_of[v] = NO_SLOT;
            self.x_basic[slot] = value;
            installed += 1;
        }
        installed
    }

    /// Removes all artificials. A basic artificial swaps places with its
    /// twin (identical column, so factors stay valid); the twin absorbs the
    /// artificial's residual value.
    fn cleanup_artificials(&mut self) {
        let tail = self.m + self.lp.num_vars();
        for a in 0..self.arts.len() {
            let art_idx = tail + a;
            if self.status[art_idx] == VarStatus::Basic {
                let slot = self.slot_of[art_idx];
                let twin = self.arts[a].twin;
                debug_assert_ne!(self.status[twin], VarStatus::Basic);
                let twin_value = self.nonbasic_value(twin) + self.x_basic[slot];
                self.basis[slot] = twin;
                self.status[twin] = VarStatus::Basic;
                self.slot_of[twin] = slot;
                self.x_basic[slot] = twin_value;
            }
        }
        self.arts.clear();
        self.status.truncate(tail);
        self.slot_of.truncate(tail);
    }

    fn phase1_objective(&self) -> f64 {
        let tail = self.m + self.lp.num_vars();
        (0..self.arts.len())
            .map(|a| self.arts[a].cost * self.value_of(tail + a))
            .sum()
    }

    /// Dantzig pricing (Bland's rule when `bland`). Returns the entering
    /// variable and its reduced cost.
    fn price(&self, y: &[f64], phase: Phase, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.n_total() {
            if self.status[j] == VarStatus::Basic {
                continue;
            }
            let (lo, hi) = self.bounds_of(j);
            if lo == hi {
                continue; // fixed: can never move
            }
            let d = self.cost_of(j, phase) - self.dot_column(j, y);
            let eligible = match self.status[j] {
                VarStatus::AtLower => d < -OPTIMALITY_TOL,
                VarStatus::AtUpper => d > OPTIMALITY_TOL,
                VarStatus::Free => d.abs() > OPTIMALITY_TOL,
                VarStatus::Basic => unreachable!(),
            };
            if !eligible {
                continue;
            }
            if bland {
                return Some((j, d));
            }
            if best.map_or(true, |(_, bd)| d.abs() > bd.abs()) {
                best = Some((j, d));
            }
        }
        best
    }

    /// One primal simplex phase. Assumes a feasible basis for `phase`.
    fn primal_loop(&mut self, phase: Phase, cap: usize) -> Result<LoopExit, SimplexError> {
        let mut degenerate_run = 0usize;
        let mut ftran_buf = vec![0.0; self.m];
        loop {
            if self.iterations >= cap {
                return Err(SimplexError::Stalled(self.iterations));
            }
            self.iterations += 1;

            let y = self.duals_for(phase);
            let bland = degenerate_run >= DEGENERATE_PIVOT_LIMIT;
            let Some((entering, d)) = self.price(&y, phase, bland) else {
                return Ok(LoopExit::Converged);
            };
            let direction = match self.status[entering] {
                VarStatus::AtLower => 1.0,
                VarStatus::AtUpper => -1.0,
                VarStatus::Free => {
                    if d < 0.0 {
                        1.0
                    } else {
                        -1.0
                    }
                }
                VarStatus::Basic => unreachable!(),
            };

            self.scatter_column(entering, &mut ftran_buf);
            self.ftran(&mut ftran_buf);

            // ratio test: blocking basic variable, or the entering
            // variable's own opposite bound (bound flip)
            let (e_lo, e_hi) = self.bounds_of(entering);
            let own_span = e_hi - e_lo;
            let mut t_best = if own_span.is_finite() { own_span } else { f64::INFINITY };
            let mut blocking: Option<(usize, VarStatus)> = None;
            let mut blocking_pivot = 0.0f64;
            for slot in 0..self.m {
                let w = ftran_buf[slot];
                if w.abs() <= RATIO_PIVOT_TOL {
                    continue;
                }
                let rate = direction * w; // basic value decreases at this rate
                let v = self.basis[slot];
                let (lo, hi) = self.bounds_of(v);
                let x = self.x_basic[slot];
                let (t, to) = if rate > 0.0 {
                    if lo.is_finite() {
                        (((x - lo) / rate).max(0.0), VarStatus::AtLower)
                    } else {
                        continue;
                    }
                } else if hi.is_finite() {
                    (((x - hi) / rate).max(0.0), VarStatus::AtUpper)
                } else {
                    continue;
                };
                let better = t < t_best - 1e-12
                    || (t < t_best + 1e-12 && blocking.is_some() && w.abs() > blocking_pivot.abs());
                if better {
                    t_best = t;
                    blocking = Some((slot, to));
                    blocking_pivot = w;
                }
            }

            if t_best.is_infinite() {
                return Ok(LoopExit::Unbounded { entering, direction, ftran: ftran_buf });
            }

            if t_best <= 1e-10 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }

            // move the basics
            if t_best != 0.0 {
                for slot in 0..self.m {
                    self.x_basic[slot] -= direction * t_best * ftran_buf[slot];
                }
            }

            match blocking {
                None => {
                    // bound flip: entering jumps to its other bound
                    self.status[entering] = match self.status[entering] {
                        VarStatus::AtLower => VarStatus::AtUpper,
                        VarStatus::AtUpper => VarStatus::AtLower,
                        other => other,
                    };
                }
                Some((slot, leave_to)) => {
                    let leaving = self.basis[slot];
                    let entering_value = match self.status[entering] {
                        VarStatus::AtLower => e_lo + direction * t_best,
                        VarStatus::AtUpper => e_hi + direction * t_best,
                        VarStatus::Free => direction * t_best,
                        VarStatus::Basic => unreachable!(),
                    };
                    self.basis[slot] = entering;
                    self.status[entering] = VarStatus::Basic;
                    self.slot_of[entering] = slot;
                    self.status[leaving] = leave_to;
                    self.slot_of[leaving] = NO_SLOT;
                    self.x_basic[slot] = entering_value;

                    self.etas.push(lu::Eta { slot, col: ftran_buf.clone() });
                    if self.etas.len() >= REFACTOR_INTERVAL {
                        if !self.refactorize() {
                            return Ok(LoopExit::RefactorFailed);
                        }
                        self.compute_x_basic();
                    }
                }
            }

            // once an artificial leaves the basis it must never return
            let tail = self.m + self.lp.num_vars();
            for a in 0..self.arts.len() {
                let idx = tail + a;
                if self.status[idx] != VarStatus::Basic && self.arts[a].lo != self.arts[a].hi {
                    self.arts[a].lo = 0.0;
                    self.arts[a].hi = 0.0;
                    self.status[idx] = VarStatus::AtLower;
                }
            }
        }
    }

    pub fn solve(&mut self) -> Result<LpSolution, SimplexError> {
        self.iterations = 0;
        let cap = 100 * (self.m + self.lp.num_vars());
        self.sync_new_vars();
        self.sanitize_statuses();
        debug_assert!(self.arts.is_empty());

        let mut attempts = 0;
        loop {
            attempts += 1;
            if attempts > 2 {
                return Err(SimplexError::Stalled(self.iterations));
            }
            if self.factors_dirty || self.factors.is_none() {
                if !self.refactorize() {
                    self.reset_to_slack_basis();
                    if !self.refactorize() {
                        return Err(SimplexError::Stalled(self.iterations));
                    }
                }
            }
            self.compute_x_basic();

            if self.install_artificials() > 0 {
                match self.primal_loop(Phase::One, cap) {
                    Ok(LoopExit::Converged) => {}
                    Ok(LoopExit::Unbounded { .. }) => {
                        // phase-1 objective is bounded below by zero
                        unreachable!("phase 1 cannot be unbounded");
                    }
                    Ok(LoopExit::RefactorFailed) => {
                        self.cleanup_artificials();
                        self.reset_to_slack_basis();
                        continue;
                    }
                    Err(e) => {
                        self.cleanup_artificials();
                        return Err(e);
                    }
                }
                let infeas = self.phase1_objective();
                if infeas > FEASIBILITY_TOL * (1.0 + self.m as f64) {
                    let duals = self.duals_for(Phase::One);
                    self.cleanup_artificials();
                    return Ok(self.extract_infeasible(duals));
                }
                self.cleanup_artificials();
            }

            match self.primal_loop(Phase::Two, cap)? {
                LoopExit::Converged => return Ok(self.extract_optimal()),
                LoopExit::Unbounded { entering, direction, ftran } => {
                    return Ok(self.extract_unbounded(entering, direction, &ftran));
                }
                LoopExit::RefactorFailed => {
                    self.reset_to_slack_basis();
                    continue;
                }
            }
        }
    }

    fn extract_optimal(&self) -> LpSolution {
        let n = self.lp.num_vars();
        let y = self.duals_for(Phase::Two);
        let mut primal = vec![0.0; n];
        let mut reduced = vec![0.0; n];
        for j in 0..n {
            primal[j] = self.value_of(self.m + j);
            reduced[j] = if self.status[self.m + j] == VarStatus::Basic {
                0.0
            } else {
                self.lp.cost(j) - self.dot_column(self.m + j, &y)
            };
        }
        let objective_value = (0..n).map(|j| self.lp.cost(j) * primal[j]).sum();
        LpSolution {
            status: SolveStatus::Optimal,
            primal,
            duals: y,
            reduced_costs: reduced,
            objective_value,
            basis: self.basis_snapshot(),
            farkas: None,
            ray: None,
            iterations: self.iterations,
        }
    }

    fn extract_infeasible(&self, phase1_duals: Vec<f64>) -> LpSolution {
        let n = self.lp.num_vars();
        let primal = (0..n).map(|j| self.value_of(self.m + j)).collect();
        LpSolution {
            status: SolveStatus::Infeasible,
            primal,
            duals: phase1_duals.clone(),
            reduced_costs: vec![0.0; n],
            objective_value: f64::INFINITY,
            basis: self.basis_snapshot(),
            farkas: Some(phase1_duals),
            ray: None,
            iterations: self.iterations,
        }
    }

    fn extract_unbounded(&self, entering: usize, direction: f64, ftran: &[f64]) -> LpSolution {
        let n = self.lp.num_vars();
        let mut ray = vec![0.0; n];
        if entering >= self.m && entering < self.m + n {
            ray[entering - self.m] = direction;
        }
        for (slot, &w) in ftran.iter().enumerate() {
            let v = self.basis[slot];
            if v >= self.m && v < self.m + n {
                ray[v - self.m] = -direction * w;
            }
        }
        let primal = (0..n).map(|j| self.value_of(self.m + j)).collect();
        LpSolution {
            status: SolveStatus::Unbounded,
            primal,
            duals: vec![0.0; self.m],
            reduced_costs: vec![0.0; n],
            objective_value: f64::NEG_INFINITY,
            basis: self.basis_snapshot(),
            farkas: None,
            ray: Some(ray),
            iterations: self.iterations,
        }
    }
}

fn bounds_pair(lp: &LinearProgram, m: usize, j: usize) -> (f64, f64) {
    if j < m {
        match lp.senses[j] {
            RowSense::Le => (0.0, f64::INFINITY),
            RowSense::Ge => (f64::NEG_INFINITY, 0.0),
            RowSense::Eq => (0.0, 0.0),
        }
    } else {
        lp.bounds[j - m]
    }
}

fn initial_status(lo: f64, hi: f64) -> VarStatus {
    if lo.is_finite() {
        VarStatus::AtLower
    } else if hi.is_finite() {
        VarStatus::AtUpper
    } else {
        VarStatus::Free
    }
}
