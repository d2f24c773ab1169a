//! Brute-force reference routines for validating the solver: basis
//! enumeration, certificate checkers, and random instance generators.
//! Nothing in the solve path calls into this module; it exists for test
//! suites and stays deliberately naive.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{LinearProgram, LpSolution, RowSense};

/// Naive Gaussian elimination, independent of the solver's LU code.
fn gauss_solve(mut a: Vec<f64>, n: usize, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    for k in 0..n {
        let mut p = k;
        for i in k + 1..n {
            if a[i * n + k].abs() > a[p * n + k].abs() {
                p = i;
            }
        }
        if a[p * n + k].abs() < 1e-10 {
            return None;
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            rhs.swap(k, p);
        }
        for i in k + 1..n {
            let f = a[i * n + k] / a[k * n + k];
            for j in k..n {
                a[i * n + j] -= f * a[k * n + j];
            }
            rhs[i] -= f * rhs[k];
        }
    }
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for j in i + 1..n {
            s -= a[i * n + j] * rhs[j];
        }
        rhs[i] = s / a[i * n + i];
    }
    Some(rhs)
}

struct OracleProblem {
    m: usize,
    cols: Vec<Vec<f64>>, // dense columns, structural then slack
    costs: Vec<f64>,
    lows: Vec<f64>,
    highs: Vec<f64>,
    rhs: Vec<f64>,
}

impl OracleProblem {
    fn from_lp(lp: &LinearProgram) -> Self {
        let m = lp.num_rows();
        let n = lp.num_vars();
        let mut cols = Vec::new();
        let mut costs = Vec::new();
        let mut lows = Vec::new();
        let mut highs = Vec::new();
        for j in 0..n {
            let mut dense = vec![0.0; m];
            for &(r, v) in &lp.columns[j] {
                dense[r as usize] = v;
            }
            cols.push(dense);
            costs.push(lp.costs[j]);
            lows.push(lp.bounds[j].0);
            highs.push(lp.bounds[j].1);
        }
        for i in 0..m {
            let mut dense = vec![0.0; m];
            dense[i] = 1.0;
            cols.push(dense);
            costs.push(0.0);
            let (lo, hi) = match lp.senses[i] {
                RowSense::Le => (0.0, f64::INFINITY),
                RowSense::Ge => (f64::NEG_INFINITY, 0.0),
                RowSense::Eq => (0.0, 0.0),
            };
            lows.push(lo);
            highs.push(hi);
        }
        OracleProblem { m, cols, costs, lows, highs, rhs: lp.rhs.clone() }
    }
}

/// Brute-force optimum by basis enumeration with reduced-cost-sign bound
/// assignment (branching on ties). `None` when no basis yields a feasible
/// point, i.e. the instance is infeasible.
pub fn enumerate_optimum(lp: &LinearProgram) -> Option<f64> {
    let p = OracleProblem::from_lp(lp);
    let total = p.cols.len();
    let m = p.m;
    let mut best: Option<f64> = None;
    let mut subset: Vec<usize> = (0..m).collect();

    loop {
        evaluate_basis(&p, &subset, &mut best);
        // next lexicographic m-subset of 0..total
        let mut i = m;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if subset[i] != i + total - m {
                subset[i] += 1;
                for k in i + 1..m {
                    subset[k] = subset[k - 1] + 1;
                }
                break;
            }
        }
    }
}

fn evaluate_basis(p: &OracleProblem, basis: &[usize], best: &mut Option<f64>) {
    let m = p.m;
    let mut bmat = vec![0.0; m * m];
    for (slot, &j) in basis.iter().enumerate() {
        for row in 0..m {
            bmat[row * m + slot] = p.cols[j][row];
        }
    }
    let mut bt = vec![0.0; m * m];
    for r in 0..m {
        for c in 0..m {
            bt[r * m + c] = bmat[c * m + r];
        }
    }
    let cb: Vec<f64> = basis.iter().map(|&j| p.costs[j]).collect();
    let Some(y) = gauss_solve(bt, m, cb) else { return };

    let mut in_basis = vec![false; p.cols.len()];
    for &j in basis {
        in_basis[j] = true;
    }
    let mut tie_vars: Vec<usize> = Vec::new();
    let mut assignment: Vec<f64> = vec![0.0; p.cols.len()];
    for j in 0..p.cols.len() {
        if in_basis[j] {
            continue;
        }
        let d = p.costs[j] - p.cols[j].iter().zip(&y).map(|(a, yy)| a * yy).sum::<f64>();
        if d > 1e-9 {
            if !p.lows[j].is_finite() {
                return; // dual infeasible basis
            }
            assignment[j] = p.lows[j];
        } else if d < -1e-9 {
            if !p.highs[j].is_finite() {
                return;
            }
            assignment[j] = p.highs[j];
        } else if p.lows[j] == p.highs[j] {
            assignment[j] = p.lows[j];
        } else if p.lows[j].is_finite() && p.highs[j].is_finite() {
            tie_vars.push(j);
        } else if p.lows[j].is_finite() {
            assignment[j] = p.lows[j];
        } else if p.highs[j].is_finite() {
            assignment[j] = p.highs[j];
        } else {
            assignment[j] = 0.0;
        }
    }
    if tie_vars.len() > 12 {
        tie_vars.truncate(12);
    }
    for mask in 0..(1u32 << tie_vars.len()) {
        let mut asg = assignment.clone();
        for (bit, &j) in tie_vars.iter().enumerate() {
            asg[j] = if mask & (1 << bit) != 0 { p.highs[j] } else { p.lows[j] };
        }
        let mut rhs = p.rhs.clone();
        for j in 0..p.cols.len() {
            if !in_basis[j] && asg[j] != 0.0 {
                for row in 0..m {
                    rhs[row] -= p.cols[j][row] * asg[j];
                }
            }
        }
        let Some(xb) = gauss_solve(bmat.clone(), m, rhs) else { return };
        let mut feasible = true;
        for (slot, &j) in basis.iter().enumerate() {
            if xb[slot] < p.lows[j] - 1e-7 || xb[slot] > p.highs[j] + 1e-7 {
                feasible = false;
                break;
            }
        }
        if !feasible {
            continue;
        }
        let mut obj = 0.0;
        for j in 0..p.cols.len() {
            if !in_basis[j] {
                obj += p.costs[j] * asg[j];
            }
        }
        for (slot, &j) in basis.iter().enumerate() {
            obj += p.costs[j] * xb[slot];
        }
        if best.map_or(true, |b| obj < b) {
            *best = Some(obj);
        }
    }
}

/// `|cᵀx − (yᵀb + Σ_j d_j x_j)|` — zero at an optimum (strong duality with
/// bound contributions).
pub fn duality_gap(lp: &LinearProgram, sol: &LpSolution) -> f64 {
    let mut dual_obj: f64 = sol.duals.iter().zip(&lp.rhs).map(|(y, b)| y * b).sum();
    for j in 0..lp.num_vars() {
        dual_obj += sol.reduced_costs[j] * sol.primal[j];
    }
    (sol.objective_value - dual_obj).abs()
}

/// Max violation of complementary slackness over rows and variables.
pub fn complementary_slackness_violation(lp: &LinearProgram, sol: &LpSolution) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..lp.num_rows() {
        let mut activity = 0.0;
        for (j, col) in lp.columns.iter().enumerate() {
            for &(r, v) in col {
                if r as usize == i {
                    activity += v * sol.primal[j];
                }
            }
        }
        let slack = activity - lp.rhs[i];
        worst = worst.max((sol.duals[i] * slack).abs());
    }
    for j in 0..lp.num_vars() {
        let (lo, hi) = lp.bounds[j];
        let d = sol.reduced_costs[j];
        if d.abs() <= 1e-9 {
            continue;
        }
        let dist = if d > 0.0 { sol.primal[j] - lo } else { hi - sol.primal[j] };
        worst = worst.max((d * dist).abs());
    }
    worst
}

/// Validates a Farkas ray: row signs consistent with senses and
/// `yᵀb > sup_{l≤x≤u} (yᵀA)x`.
pub fn farkas_certifies(lp: &LinearProgram, y: &[f64]) -> bool {
    for i in 0..lp.num_rows() {
        match lp.senses[i] {
            RowSense::Ge if y[i] < -1e-7 => return false,
            RowSense::Le if y[i] > 1e-7 => return false,
            _ => {}
        }
    }
    let yb: f64 = y.iter().zip(&lp.rhs).map(|(a, b)| a * b).sum();
    let mut sup = 0.0;
    for j in 0..lp.num_vars() {
        let g: f64 = lp.columns[j].iter().map(|&(r, v)| y[r as usize] * v).sum();
        let (lo, hi) = lp.bounds[j];
        if g > 1e-9 {
            if !hi.is_finite() {
                return false;
            }
            sup += g * hi;
        } else if g < -1e-9 {
            if !lo.is_finite() {
                return false;
            }
            sup += g * lo;
        }
    }
    yb - sup > 1e-7
}

/// Feasibility of a primal point against rows and bounds.
pub fn primal_feasible(lp: &LinearProgram, x: &[f64], tol: f64) -> bool {
    for j in 0..lp.num_vars() {
        let (lo, hi) = lp.bounds[j];
        if x[j] < lo - tol || x[j] > hi + tol {
            return false;
        }
    }
    for i in 0..lp.num_rows() {
        let mut activity = 0.0;
        for (j, col) in lp.columns.iter().enumerate() {
            for &(r, v) in col {
                if r as usize == i {
                    activity += v * x[j];
                }
            }
        }
        let ok = match lp.senses[i] {
            RowSense::Ge => activity >= lp.rhs[i] - tol,
            RowSense::Le => activity <= lp.rhs[i] + tol,
            RowSense::Eq => (activity - lp.rhs[i]).abs() <= tol,
        };
        if !ok {
            return false;
        }
    }
    true
}

/// Random LP with finite variable bounds, feasible by construction (the
/// right-hand sides are anchored at a random interior point).
pub fn random_bounded_lp(rng: &mut ChaCha8Rng, m: usize, n: usize) -> LinearProgram {
    let senses: Vec<RowSense> = (0..m)
        .map(|_| match rng.gen_range(0..3) {
            0 => RowSense::Ge,
            1 => RowSense::Le,
            _ => RowSense::Eq,
        })
        .collect();
    let mut lp = LinearProgram::new(senses.clone(), vec![0.0; m]);
    let mut x0 = Vec::with_capacity(n);
    let mut coeffs = Vec::new();
    for _ in 0..n {
        let lo = rng.gen_range(-3.0..0.0);
        let hi = rng.gen_range(0.0..3.0);
        let cost = rng.gen_range(-2.0..2.0);
        let col: Vec<f64> = (0..m)
            .map(|_| if rng.gen_bool(0.8) { rng.gen_range(-2.0..2.0) } else { 0.0 })
            .collect();
        x0.push(rng.gen_range(lo..hi));
        coeffs.push(col.clone());
        lp.add_column(cost, &col, (lo, hi)).unwrap();
    }
    for i in 0..m {
        let activity: f64 = (0..n).map(|j| coeffs[j][i] * x0[j]).sum();
        lp.rhs[i] = match senses[i] {
            RowSense::Ge => activity - rng.gen_range(0.0..2.0),
            RowSense::Le => activity + rng.gen_range(0.0..2.0),
            RowSense::Eq => activity,
        };
    }
    lp
}

/// Appends a row that contradicts the variable box, making the LP
/// infeasible by construction.
pub fn append_contradictory_row(lp: &mut LinearProgram, rng: &mut ChaCha8Rng) {
    let n = lp.num_vars();
    let row = lp.num_rows() as u32;
    let coeffs: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let sup: f64 = (0..n)
        .map(|j| {
            let (lo, hi) = lp.var_bounds(j);
            if coeffs[j] > 0.0 {
                coeffs[j] * hi
            } else {
                coeffs[j] * lo
            }
        })
        .sum();
    lp.senses.push(RowSense::Ge);
    lp.rhs.push(sup + 1.0);
    for (j, col) in lp.columns.iter_mut().enumerate() {
        if coeffs[j] != 0.0 {
            col.push((row, coeffs[j]));
        }
    }
}
