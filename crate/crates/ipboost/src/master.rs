//! Restricted master problem over the generated learner columns, dual value
//! extraction, and the column-generation loop. The master minimizes the
//! number of disregarded examples: one margin row per example
//! `Σ_j η_ij λ_j + (1+ρ) z_i ≥ ρ`, a convexity row `Σ_j λ_j = 1`, and
//! objective `min Σ_i z_i` with the z variables relaxed into their node
//! bounds.

use log::debug;

use crate::data::Dataset;
use crate::learners::{self, DecisionStump, EtaKind};
use crate::simplex::{
    Basis, LinearProgram, LpSolution, RowSense, SimplexError, SolveStatus, Solver, VarStatus,
};

/// Default cap on generated columns per node path.
pub const DEFAULT_MAX_COLUMNS: usize = 500;
/// Default tolerance on the pricing condition (the model demands a strict
/// `> 0`).
pub const DEFAULT_PRICING_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct MasterConfig {
    pub rho: f64,
    pub max_columns: usize,
    pub pricing_tolerance: f64,
}

impl MasterConfig {
    pub fn new(rho: f64) -> Self {
        assert!(rho > 0.0 && rho <= 1.0, "margin must lie in (0, 1]");
        MasterConfig { rho, max_columns: DEFAULT_MAX_COLUMNS, pricing_tolerance: DEFAULT_PRICING_TOLERANCE }
    }
}

/// Branch-and-bound bounds on one z variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZBound {
    Free,
    Zero,
    One,
}

impl ZBound {
    pub fn lo(self) -> f64 {
        match self {
            ZBound::One => 1.0,
            _ => 0.0,
        }
    }

    pub fn hi(self) -> f64 {
        match self {
            ZBound::Zero => 0.0,
            _ => 1.0,
        }
    }
}

/// The η values for the current columns; grows column-wise during pricing.
#[derive(Debug, Clone)]
pub struct ErrorMatrix {
    n: usize,
    kind: EtaKind,
    columns: Vec<Vec<f64>>,
    learners: Vec<DecisionStump>,
}

impl ErrorMatrix {
    pub fn new(n: usize, kind: EtaKind) -> Self {
        assert!(n >= 1);
        ErrorMatrix { n, kind, columns: Vec::new(), learners: Vec::new() }
    }

    pub fn example_count(&self) -> usize {
        self.n
    }

    pub fn column_count(&self) -> usize {
        self.columns.len()
    }

    pub fn kind(&self) -> EtaKind {
        self.kind
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn learner(&self, j: usize) -> &DecisionStump {
        &self.learners[j]
    }

    pub fn learners(&self) -> &[DecisionStump] {
        &self.learners
    }

    /// Computes the η column of `stump` and appends it. Returns the column
    /// index.
    pub fn push(&mut self, ds: &Dataset, stump: DecisionStump) -> usize {
        debug_assert_eq!(ds.example_count(), self.n);
        self.columns.push(eta_column(ds, &stump, self.kind));
        self.learners.push(stump);
        self.columns.len() - 1
    }

    /// Appends a hand-built η column (tests and enumeration oracles).
    pub fn push_raw(&mut self, column: Vec<f64>, stump: DecisionStump) -> usize {
        assert_eq!(column.len(), self.n);
        self.columns.push(column);
        self.learners.push(stump);
        self.columns.len() - 1
    }

    /// Duplicate guard: exact (feature, threshold, polarity) match against
    /// an existing column.
    pub fn contains(&self, stump: &DecisionStump) -> bool {
        self.learners.iter().any(|s| {
            s.feature_index == stump.feature_index
                && s.threshold.to_bits() == stump.threshold.to_bits()
                && s.polarity == stump.polarity
        })
    }

    /// Restriction to a subset of columns (for post-processing and
    /// sparsification over the phase-1 support).
    pub fn restrict(&self, columns: &[usize]) -> ErrorMatrix {
        ErrorMatrix {
            n: self.n,
            kind: self.kind,
            columns: columns.iter().map(|&j| self.columns[j].clone()).collect(),
            learners: columns.iter().map(|&j| self.learners[j].clone()).collect(),
        }
    }
}

/// Per-example η values of one stump.
pub fn eta_column(ds: &Dataset, stump: &DecisionStump, kind: EtaKind) -> Vec<f64> {
    (0..ds.example_count())
        .map(|i| learners::eta_value(stump, ds.row(i), ds.label(i), kind))
        .collect()
}

/// Dual solution of the restricted master: `w` for the margin rows, `v` for
/// the convexity row, `u` for the z upper bounds.
#[derive(Debug, Clone)]
pub struct DualValues {
    pub w: Vec<f64>,
    pub v: f64,
    pub u: Vec<f64>,
}

/// Builds the restricted master LP. Variable layout: z variables first
/// (indices `0..n`), λ columns after them.
pub fn build_master(em: &ErrorMatrix, rho: f64, z_bounds: &[ZBound]) -> LinearProgram {
    let n = em.example_count();
    assert_eq!(z_bounds.len(), n);
    let mut senses = vec![RowSense::Ge; n];
    senses.push(RowSense::Eq);
    let mut rhs = vec![rho; n];
    rhs.push(1.0);
    let mut lp = LinearProgram::new(senses, rhs);
    for (i, zb) in z_bounds.iter().enumerate() {
        lp.add_sparse_column(1.0, vec![(i as u32, 1.0 + rho)], (zb.lo(), zb.hi()))
            .expect("z column is well-formed");
    }
    for j in 0..em.column_count() {
        lp.add_sparse_column(0.0, lambda_entries(em.column(j)), (0.0, f64::INFINITY))
            .expect("lambda column is well-formed");
    }
    lp
}

fn lambda_entries(eta: &[f64]) -> Vec<(u32, f64)> {
    let mut entries: Vec<(u32, f64)> =
        eta.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, &v)| (i as u32, v)).collect();
    entries.push((eta.len() as u32, 1.0));
    entries
}

/// Reads (w, v, u) off an optimal master solution. `w` is sign-normalized,
/// `u` is derived from the z reduced costs, which under the master layout
/// equals `max(0, (1+ρ)·w_i − 1)`.
pub fn extract_duals(sol: &LpSolution, n: usize, rho: f64) -> DualValues {
    assert_eq!(sol.status, SolveStatus::Optimal, "duals require an optimal solve");
    let w: Vec<f64> = sol.duals[..n].iter().map(|&y| y.max(0.0)).collect();
    let v = sol.duals[n];
    let u: Vec<f64> = w.iter().map(|&wi| ((1.0 + rho) * wi - 1.0).max(0.0)).collect();
    DualValues { w, v, u }
}

/// Pricing step: trains a stump against the dual weights and returns it iff
/// its column satisfies `Σ_i η_ij w_i + v > tol`. Exact over the stump class
/// for the ±1 error function, heuristic for the probability-based ones.
pub fn price(ds: &Dataset, duals: &DualValues, kind: EtaKind, tol: f64) -> Option<DecisionStump> {
    let total: f64 = duals.w.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let stump = learners::fit_stump_weighted(ds, &duals.w).ok()?;
    let value = pricing_value(ds, &stump, duals, kind);
    if value > tol {
        Some(stump)
    } else {
        None
    }
}

/// Reduced cost `Σ_i η_ij w_i + v` of a stump's column.
pub fn pricing_value(ds: &Dataset, stump: &DecisionStump, duals: &DualValues, kind: EtaKind) -> f64 {
    let col = eta_column(ds, stump, kind);
    col.iter().zip(&duals.w).map(|(e, w)| e * w).sum::<f64>() + duals.v
}

/// Result of solving one node relaxation by column generation.
#[derive(Debug)]
pub struct NodeSolve {
    pub solution: LpSolution,
    pub columns_added: usize,
    /// Objective after each master re-solve (non-increasing).
    pub objective_trace: Vec<f64>,
}

/// Persistent column-generation context: owns the error matrix and an
/// incremental LP solver so re-solves across nodes keep their warm basis.
pub struct Master<'a> {
    ds: &'a Dataset,
    cfg: MasterConfig,
    em: ErrorMatrix,
    solver: Solver,
    n: usize,
    primed: bool,
}

impl<'a> Master<'a> {
    pub fn new(ds: &'a Dataset, cfg: MasterConfig, kind: EtaKind) -> Self {
        Self::with_columns(ds, cfg, ErrorMatrix::new(ds.example_count(), kind))
    }

    pub fn with_columns(ds: &'a Dataset, cfg: MasterConfig, em: ErrorMatrix) -> Self {
        assert_eq!(ds.example_count(), em.example_count());
        let n = ds.example_count();
        let lp = build_master(&em, cfg.rho, &vec![ZBound::Free; n]);
        let solver = Solver::new(lp);
        Master { ds, cfg, em, solver, n, primed: false }
    }

    pub fn em(&self) -> &ErrorMatrix {
        &self.em
    }

    pub fn into_matrix(self) -> ErrorMatrix {
        self.em
    }

    pub fn config(&self) -> &MasterConfig {
        &self.cfg
    }

    pub fn example_count(&self) -> usize {
        self.n
    }

    /// λ part of a primal solution (z occupies `0..n`).
    pub fn lambda_values<'s>(&self, sol: &'s LpSolution) -> &'s [f64] {
        &sol.primal[self.n..]
    }

    /// z part of a primal solution.
    pub fn z_values<'s>(&self, sol: &'s LpSolution) -> &'s [f64] {
        &sol.primal[..self.n]
    }

    pub fn set_z_bounds(&mut self, bounds: &[ZBound]) {
        assert_eq!(bounds.len(), self.n);
        for (i, zb) in bounds.iter().enumerate() {
            self.solver.set_var_bounds(i, zb.lo(), zb.hi()).expect("z bounds are ordered");
        }
    }

    /// Installs a warm basis, padding variable statuses for columns added
    /// after the snapshot was taken.
    pub fn set_warm_basis(&mut self, basis: &Basis) -> bool {
        let want = self.solver.lp().num_vars();
        if basis.vars.len() > want {
            return false;
        }
        let mut padded = basis.clone();
        padded.vars.resize(want, VarStatus::AtLower);
        self.solver.set_warm_basis(&padded)
    }

    pub fn basis_snapshot(&self) -> Basis {
        self.solver.basis_snapshot()
    }

    fn sync_columns(&mut self) {
        // seed an initial column so the convexity row is satisfiable
        if self.em.column_count() == 0 {
            let uniform = vec![1.0; self.n];
            let stump =
                learners::fit_stump_weighted(self.ds, &uniform).expect("uniform weights are valid");
            self.em.push(self.ds, stump);
        }
        // columns present in the matrix but not yet in the LP
        for j in 0..self.em.column_count() {
            if self.n + j >= self.solver.lp().num_vars() {
                self.solver
                    .add_sparse_column(0.0, lambda_entries(self.em.column(j)), (0.0, f64::INFINITY))
                    .expect("lambda column is well-formed");
            }
        }
    }

    fn push_column(&mut self, stump: DecisionStump) {
        let j = self.em.push(self.ds, stump);
        self.solver
            .add_sparse_column(0.0, lambda_entries(self.em.column(j)), (0.0, f64::INFINITY))
            .expect("lambda column is well-formed");
    }

    /// Feasible near-optimal starting basis for the first solve: the seed
    /// column carries the convexity row, surplus slacks absorb satisfied
    /// margin rows, z variables absorb the violated ones.
    fn root_crash_basis(&self) -> Basis {
        let col0 = self.em.column(0);
        let rho = self.cfg.rho;
        let mut vars = vec![VarStatus::AtLower; self.solver.lp().num_vars()];
        let mut rows = Vec::with_capacity(self.n + 1);
        for i in 0..self.n {
            if col0[i] >= rho {
                rows.push(VarStatus::Basic);
            } else {
                rows.push(VarStatus::AtUpper);
                vars[i] = VarStatus::Basic;
            }
        }
        rows.push(VarStatus::AtLower); // convexity slack is fixed
        vars[self.n] = VarStatus::Basic; // seed lambda
        Basis { vars, rows }
    }

    /// Column generation under the current z bounds: solve, extract duals,
    /// price, add, repeat until no column prices in or the cap is reached.
    /// An infeasible node LP is priced against its Farkas ray before it is
    /// reported infeasible, so a pruned node is truly infeasible over the
    /// whole learner class.
    pub fn solve_node(&mut self, warm: Option<&Basis>) -> Result<NodeSolve, SimplexError> {
        self.sync_columns();
        if let Some(basis) = warm {
            self.set_warm_basis(basis);
        } else if !self.primed {
            let crash = self.root_crash_basis();
            self.solver.set_warm_basis(&crash);
        }
        self.primed = true;
        let mut columns_added = 0;
        let mut objective_trace = Vec::new();
        loop {
            let sol = self.solver.solve()?;
            let duals = match sol.status {
                SolveStatus::Optimal => {
                    objective_trace.push(sol.objective_value);
                    extract_duals(&sol, self.n, self.cfg.rho)
                }
                SolveStatus::Infeasible => {
                    let farkas = sol.farkas.as_ref().expect("infeasible solve carries a ray");
                    DualValues {
                        w: farkas[..self.n].iter().map(|&y| y.max(0.0)).collect(),
                        v: farkas[self.n],
                        u: vec![0.0; self.n],
                    }
                }
                SolveStatus::Unbounded => {
                    unreachable!("master objective is bounded below by zero")
                }
            };
            let candidate = price(self.ds, &duals, self.em.kind(), self.cfg.pricing_tolerance);
            match candidate {
                Some(stump)
                    if !self.em.contains(&stump) && self.em.column_count() < self.cfg.max_columns =>
                {
                    if sol.status == SolveStatus::Infeasible {
                        debug!("farkas pricing added a column");
                    }
                    self.push_column(stump);
                    columns_added += 1;
                }
                _ => return Ok(NodeSolve { solution: sol, columns_added, objective_trace }),
            }
        }
    }
}

/// One-shot column generation on `em` (extended in place with every
/// generated column). Builds a fresh context; for repeated node solves use
/// [`Master`] directly to keep the warm basis.
pub fn colgen_solve(
    ds: &Dataset,
    cfg: &MasterConfig,
    z_bounds: &[ZBound],
    em: &mut ErrorMatrix,
) -> Result<LpSolution, SimplexError> {
    let mut master = Master::with_columns(ds, cfg.clone(), em.clone());
    master.set_z_bounds(z_bounds);
    let node = master.solve_node(None)?;
    *em = master.into_matrix();
    Ok(node.solution)
}
