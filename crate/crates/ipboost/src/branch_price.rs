//! Branch-and-price over the per-example misclassification indicators:
//! each node's relaxation is solved by column generation, integral
//! relaxations and rounded solutions update the incumbent, fractional ones
//! branch. Node selection is best-bound with depth-first plunging into the
//! z=1 child. Terminates when the tree is exhausted, a stall limit passes
//! without incumbent improvement, or the time limit hits.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use log::{debug, info};
use thiserror::Error;

use crate::data::Dataset;
use crate::learners::{BoostedEnsemble, EtaKind};
use crate::master::{ErrorMatrix, Master, MasterConfig, ZBound};
use crate::simplex::{Basis, LinearProgram, RowSense, SimplexError, SolveStatus};

/// z values within this of an integer count as integral.
pub const INTEGRALITY_TOL: f64 = 1e-6;
/// λ entries above this belong to the support.
pub const SUPPORT_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Simplex(#[from] SimplexError),
    #[error("no feasible solution found within the node/time limits")]
    NoSolution,
}

/// Open subproblem: local z bounds plus the parent's relaxation value and
/// final basis. Columns are shared globally, so the inherited learner set
/// is implicit.
#[derive(Debug, Clone)]
pub struct BranchNode {
    pub z_bounds: Vec<ZBound>,
    pub lp_bound: f64,
    pub basis: Option<Basis>,
    pub depth: usize,
    id: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    TreeExhausted,
    StallLimit,
    TimeLimit,
}

/// Run statistics, also emitted as log lines.
#[derive(Debug, Clone)]
pub struct SolverStats {
    pub nodes_processed: usize,
    pub columns_generated: usize,
    pub incumbent_value: usize,
    pub best_solution_time: Duration,
    pub total_time: Duration,
    pub stall_counter: usize,
    pub termination: Termination,
    /// Lower bound proven when the tree was exhausted; equals the incumbent
    /// on instances solved to completion.
    pub lower_bound: f64,
}

struct Incumbent {
    value: usize,
    lambda: Vec<f64>,
    z: Vec<bool>,
}

// min-heap entry ordered by (bound, id) for deterministic best-bound pops
struct HeapEntry(BranchNode);

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.0.lp_bound == other.0.lp_bound && self.0.id == other.0.id
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.lp_bound.total_cmp(&other.0.lp_bound).then(self.0.id.cmp(&other.0.id))
    }
}

/// Rounding heuristic: with λ fixed from the relaxation, set `z_i = 0`
/// exactly when the example's margin is met. Always feasible.
pub fn rounding_heuristic(lambda: &[f64], em: &ErrorMatrix, rho: f64) -> (Vec<bool>, usize) {
    let n = em.example_count();
    debug_assert_eq!(lambda.len(), em.column_count());
    let mut kept = vec![false; n];
    let mut objective = 0;
    for i in 0..n {
        let margin: f64 = (0..em.column_count()).map(|j| em.column(j)[i] * lambda[j]).sum();
        if margin >= rho - 1e-9 {
            kept[i] = true;
        } else {
            objective += 1;
        }
    }
    let z: Vec<bool> = kept.iter().map(|&k| !k).collect();
    (z, objective)
}

/// Most-fractional branching rule; ties break to the lowest index.
pub fn branch_select(z: &[f64]) -> usize {
    let mut best = None;
    let mut best_gap = f64::INFINITY;
    for (i, &v) in z.iter().enumerate() {
        let frac = v.fract().min(1.0 - v.fract());
        if frac > INTEGRALITY_TOL {
            let gap = (v - 0.5).abs();
            if gap < best_gap - 1e-15 {
                best_gap = gap;
                best = Some(i);
            }
        }
    }
    best.expect("branch_select requires a fractional coordinate")
}

/// Structure of high-margin solutions: under the ±1 error function, when an
/// optimum has margin 1, a weight above `(1−ρ)/2`, or support smaller than
/// `2/(1−ρ)`, one support learner alone is optimal. Returns that learner's
/// column index after verifying it classifies every kept example.
pub fn lemma1_reduce(
    lambda: &[f64],
    z: &[bool],
    em: &ErrorMatrix,
    rho: f64,
) -> Option<usize> {
    if em.kind() != EtaKind::PlusMinus {
        return None;
    }
    let kept: Vec<usize> = (0..z.len()).filter(|&i| !z[i]).collect();
    if kept.is_empty() {
        return None; // trivial solution
    }
    let support: Vec<usize> = (0..lambda.len()).filter(|&j| lambda[j] > SUPPORT_TOL).collect();
    if support.is_empty() {
        return None;
    }
    let heaviest = *support
        .iter()
        .max_by(|&&a, &&b| lambda[a].total_cmp(&lambda[b]).then(b.cmp(&a)))
        .expect("support is nonempty");
    let applies = rho >= 1.0
        || lambda[heaviest] > (1.0 - rho) / 2.0
        || (support.len() as f64) < 2.0 / (1.0 - rho);
    if !applies {
        return None;
    }
    let col = em.column(heaviest);
    if kept.iter().all(|&i| (col[i] - 1.0).abs() < 1e-9) {
        Some(heaviest)
    } else {
        None
    }
}

/// Margin post-processing: with the kept set fixed, maximize the margin
/// over the support columns. The incumbent weights stay feasible, so the
/// result never drops below the configured margin.
pub fn postprocess_margin(em_support: &ErrorMatrix, kept: &[usize]) -> (Vec<f64>, f64) {
    let l = em_support.column_count();
    assert!(l >= 1);
    assert!(!kept.is_empty(), "post-processing needs at least one kept example");
    let mut senses = vec![RowSense::Ge; kept.len()];
    senses.push(RowSense::Eq);
    let mut rhs = vec![0.0; kept.len()];
    rhs.push(1.0);
    let mut lp = LinearProgram::new(senses, rhs);
    for j in 0..l {
        let col = em_support.column(j);
        let mut coeffs: Vec<f64> = kept.iter().map(|&i| col[i]).collect();
        coeffs.push(1.0);
        lp.add_column(0.0, &coeffs, (0.0, f64::INFINITY)).expect("well-formed column");
    }
    // the margin variable: -1 in every kept row, maximized
    let mut margin_col = vec![-1.0; kept.len()];
    margin_col.push(0.0);
    lp.add_column(-1.0, &margin_col, (f64::NEG_INFINITY, f64::INFINITY))
        .expect("well-formed column");
    let sol = crate::simplex::solve(&lp, None).expect("margin LP is feasible and bounded");
    assert_eq!(sol.status, SolveStatus::Optimal);
    let mut weights: Vec<f64> = sol.primal[..l].to_vec();
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= total;
    }
    (weights, sol.primal[l])
}

/// Full training run. `seed` is carried for interface parity with the
/// experiment protocol; the tree search itself is deterministic.
pub fn ipboost_train(
    ds: &Dataset,
    cfg: &MasterConfig,
    kind: EtaKind,
    stall_limit: usize,
    time_limit: Duration,
    seed: u64,
) -> Result<(BoostedEnsemble, SolverStats), TrainError> {
    assert!(stall_limit >= 1);
    let _ = seed;
    let em = ErrorMatrix::new(ds.example_count(), kind);
    train_with_columns(ds, cfg, em, stall_limit, time_limit)
}

/// Same as [`ipboost_train`] but starting from a caller-supplied column
/// pool (exactness tests enumerate the whole class up front).
pub fn train_with_columns(
    ds: &Dataset,
    cfg: &MasterConfig,
    em: ErrorMatrix,
    stall_limit: usize,
    time_limit: Duration,
) -> Result<(BoostedEnsemble, SolverStats), TrainError> {
    let n = ds.example_count();
    let kind = em.kind();
    let rho = cfg.rho;
    let mut master = Master::with_columns(ds, cfg.clone(), em);

    let start = Instant::now();
    let mut heap: BinaryHeap<Reverse<HeapEntry>> = BinaryHeap::new();
    let mut plunge: Vec<BranchNode> = Vec::new();
    let mut next_id = 0u64;
    let mut incumbent: Option<Incumbent> = None;
    let mut best_value = usize::MAX;
    let mut stats = SolverStats {
        nodes_processed: 0,
        columns_generated: 0,
        incumbent_value: usize::MAX,
        best_solution_time: Duration::ZERO,
        total_time: Duration::ZERO,
        stall_counter: 0,
        termination: Termination::TreeExhausted,
        lower_bound: f64::NEG_INFINITY,
    };

    plunge.push(BranchNode {
        z_bounds: vec![ZBound::Free; n],
        lp_bound: f64::NEG_INFINITY,
        basis: None,
        depth: 0,
        id: next_id,
    });
    next_id += 1;

    let cannot_improve =
        |bound: f64, best: usize| best != usize::MAX && bound >= best as f64 - 1.0 + INTEGRALITY_TOL;

    loop {
        let Some(node) = plunge.pop().or_else(|| heap.pop().map(|Reverse(e)| e.0)) else {
            stats.termination = Termination::TreeExhausted;
            stats.lower_bound = best_value as f64;
            break;
        };
        if start.elapsed() >= time_limit {
            stats.termination = Termination::TimeLimit;
            stats.lower_bound = node.lp_bound.max(stats.lower_bound);
            break;
        }
        if cannot_improve(node.lp_bound, best_value) {
            continue;
        }

        master.set_z_bounds(&node.z_bounds);
        let solved = master.solve_node(node.basis.as_ref())?;
        stats.nodes_processed += 1;
        stats.columns_generated += solved.columns_added;

        let mut improved = false;
        if solved.solution.status == SolveStatus::Optimal {
            let obj = solved.solution.objective_value;
            if !cannot_improve(obj, best_value) {
                let lambda = master.lambda_values(&solved.solution).to_vec();
                let (z_rounded, rounded_obj) = rounding_heuristic(&lambda, master.em(), rho);
                if rounded_obj < best_value {
                    best_value = rounded_obj;
                    incumbent = Some(Incumbent { value: rounded_obj, lambda, z: z_rounded });
                    stats.incumbent_value = rounded_obj;
                    stats.best_solution_time = start.elapsed();
                    improved = true;
                    info!(
                        "incumbent node={} bound={obj:.4} value={rounded_obj} time={:.2}s",
                        stats.nodes_processed,
                        start.elapsed().as_secs_f64()
                    );
                }

                let z_relax = master.z_values(&solved.solution);
                let fractional = z_relax
                    .iter()
                    .any(|&v| v.fract().min(1.0 - v.fract()) > INTEGRALITY_TOL);
                if fractional && !cannot_improve(obj, best_value) {
                    let i = branch_select(z_relax);
                    let basis = master.basis_snapshot();
                    let mut zero_bounds = node.z_bounds.clone();
                    zero_bounds[i] = ZBound::Zero;
                    let mut one_bounds = node.z_bounds;
                    one_bounds[i] = ZBound::One;
                    heap.push(Reverse(HeapEntry(BranchNode {
                        z_bounds: zero_bounds,
                        lp_bound: obj,
                        basis: Some(basis.clone()),
                        depth: node.depth + 1,
                        id: next_id,
                    })));
                    next_id += 1;
                    plunge.push(BranchNode {
                        z_bounds: one_bounds,
                        lp_bound: obj,
                        basis: Some(basis),
                        depth: node.depth + 1,
                        id: next_id,
                    });
                    next_id += 1;
                }
            }
        } else {
            debug!("node {} infeasible after farkas pricing", stats.nodes_processed);
        }

        if improved {
            stats.stall_counter = 0;
        } else {
            stats.stall_counter += 1;
            if stats.stall_counter >= stall_limit {
                stats.termination = Termination::StallLimit;
                let open_bound = open_lower_bound(&plunge, &heap);
                stats.lower_bound = open_bound.unwrap_or(best_value as f64);
                break;
            }
        }
    }

    stats.total_time = start.elapsed();
    let incumbent = incumbent.ok_or(TrainError::NoSolution)?;
    info!(
        "done nodes={} columns={} value={} bound={:.4} time={:.2}s",
        stats.nodes_processed,
        stats.columns_generated,
        incumbent.value,
        stats.lower_bound,
        stats.total_time.as_secs_f64()
    );

    let ensemble = finalize(&incumbent, master.em(), kind, rho);
    Ok((ensemble, stats))
}

fn open_lower_bound(plunge: &[BranchNode], heap: &BinaryHeap<Reverse<HeapEntry>>) -> Option<f64> {
    let stack_min = plunge.iter().map(|n| n.lp_bound).fold(f64::INFINITY, f64::min);
    let heap_min = heap.peek().map_or(f64::INFINITY, |Reverse(e)| e.0.lp_bound);
    let bound = stack_min.min(heap_min);
    bound.is_finite().then_some(bound)
}

/// Builds the final ensemble: support restriction, optional single-learner
/// reduction, margin post-processing, weight renormalization.
fn finalize(incumbent: &Incumbent, em: &ErrorMatrix, kind: EtaKind, rho: f64) -> BoostedEnsemble {
    let mut support: Vec<usize> =
        (0..incumbent.lambda.len()).filter(|&j| incumbent.lambda[j] > SUPPORT_TOL).collect();
    let mut weights: Vec<f64> = support.iter().map(|&j| incumbent.lambda[j]).collect();

    if let Some(single) = lemma1_reduce(&incumbent.lambda, &incumbent.z, em, rho) {
        support = vec![single];
        weights = vec![1.0];
    }

    let kept: Vec<usize> = (0..incumbent.z.len()).filter(|&i| !incumbent.z[i]).collect();
    let restricted = em.restrict(&support);
    let margin = if kept.is_empty() {
        rho
    } else {
        let (new_weights, achieved) = postprocess_margin(&restricted, &kept);
        weights = new_weights;
        achieved
    };

    let total: f64 = weights.iter().sum();
    let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let stumps = support.iter().map(|&j| em.learner(j).clone()).collect();
    BoostedEnsemble { stumps, weights, eta_kind: kind, margin }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{enumerate_stumps, DecisionStump};
    use crate::simplex::solve;

    fn full_pool_matrix(ds: &Dataset, kind: EtaKind) -> ErrorMatrix {
        let mut em = ErrorMatrix::new(ds.example_count(), kind);
        let mut seen: Vec<Vec<u64>> = Vec::new();
        for stump in enumerate_stumps(ds) {
            let col = crate::master::eta_column(ds, &stump, kind);
            let key: Vec<u64> = col.iter().map(|v| v.to_bits()).collect();
            if !seen.contains(&key) {
                seen.push(key);
                em.push(ds, stump);
            }
        }
        em
    }

    /// Brute force: minimum misclassification count over all z patterns,
    /// checking per-z feasibility with a margin LP over the full pool.
    fn brute_force_optimum(ds: &Dataset, em: &ErrorMatrix, rho: f64) -> usize {
        let n = ds.example_count();
        assert!(n <= 16);
        for count in 0..=n {
            for mask in 0..(1u32 << n) {
                if mask.count_ones() as usize != n - count {
                    continue;
                }
                let kept: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
                if kept.is_empty() || margin_feasible(em, &kept, rho) {
                    return count;
                }
            }
        }
        n
    }

    fn margin_feasible(em: &ErrorMatrix, kept: &[usize], rho: f64) -> bool {
        let mut senses = vec![RowSense::Ge; kept.len()];
        senses.push(RowSense::Eq);
        let mut rhs = vec![rho; kept.len()];
        rhs.push(1.0);
        let mut lp = LinearProgram::new(senses, rhs);
        for j in 0..em.column_count() {
            let col = em.column(j);
            let mut coeffs: Vec<f64> = kept.iter().map(|&i| col[i]).collect();
            coeffs.push(1.0);
            lp.add_column(0.0, &coeffs, (0.0, f64::INFINITY)).unwrap();
        }
        solve(&lp, None).unwrap().status == SolveStatus::Optimal
    }

    fn quick_cfg(rho: f64) -> MasterConfig {
        MasterConfig::new(rho)
    }

    #[test]
    fn separable_data_solves_at_the_root() {
        let ds = Dataset::new(
            vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]],
            vec![-1.0, -1.0, 1.0, 1.0],
        );
        let (ens, stats) = ipboost_train(
            &ds,
            &quick_cfg(0.05),
            EtaKind::PlusMinus,
            100,
            Duration::from_secs(10),
            0,
        )
        .unwrap();
        assert_eq!(stats.incumbent_value, 0);
        assert_eq!(stats.nodes_processed, 1, "root relaxation is already integral");
        assert_eq!(ens.accuracy(&ds), 1.0);
        // post-processing pushes the margin to 1 on separable data
        assert!(ens.margin >= 1.0 - 1e-9);
    }

    #[test]
    fn xor_layout_matches_brute_force() {
        let ds = Dataset::new(
            vec![vec![-1.0, -1.0], vec![-1.0, 1.0], vec![1.0, -1.0], vec![1.0, 1.0]],
            vec![1.0, -1.0, -1.0, 1.0],
        );
        let em = full_pool_matrix(&ds, EtaKind::PlusMinus);
        let want = brute_force_optimum(&ds, &em, 0.05);
        assert_eq!(want, 1, "axis stumps must give up exactly one corner");
        let (_, stats) = train_with_columns(
            &ds,
            &quick_cfg(0.05),
            em,
            1000,
            Duration::from_secs(30),
        )
        .unwrap();
        assert_eq!(stats.incumbent_value, want);
        assert_eq!(stats.termination, Termination::TreeExhausted);
        assert!((stats.lower_bound - want as f64).abs() < 1e-9);
    }

    #[test]
    fn contradictory_pair_gives_up_one_example() {
        let ds = Dataset::new(vec![vec![1.0], vec![1.0]], vec![1.0, -1.0]);
        let (_, stats) = ipboost_train(
            &ds,
            &quick_cfg(0.05),
            EtaKind::PlusMinus,
            1000,
            Duration::from_secs(10),
            0,
        )
        .unwrap();
        assert_eq!(stats.incumbent_value, 1);
        assert_eq!(stats.termination, Termination::TreeExhausted);
    }

    #[test]
    fn random_small_instances_match_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for trial in 0..12 {
            let n = rng.gen_range(4..=9);
            let d = rng.gen_range(1..=3);
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..d).map(|_| if rng.gen_bool(0.5) { 1.0 } else { 0.0 }).collect())
                .collect();
            let labels: Vec<f64> =
                (0..n).map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
            let ds = Dataset::new(rows, labels);
            let em = full_pool_matrix(&ds, EtaKind::PlusMinus);
            assert!(em.column_count() <= 8);
            let want = brute_force_optimum(&ds, &em, 0.05);
            let (_, stats) = train_with_columns(
                &ds,
                &quick_cfg(0.05),
                em,
                10_000,
                Duration::from_secs(30),
            )
            .unwrap();
            assert_eq!(stats.incumbent_value, want, "trial {trial}");
            assert_eq!(stats.termination, Termination::TreeExhausted, "trial {trial}");
        }
    }

    #[test]
    fn node_count_is_deterministic() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = 12;
        let rows: Vec<Vec<f64>> =
            (0..n).map(|_| (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let labels: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
        let ds = Dataset::new(rows, labels);
        let run = || {
            ipboost_train(
                &ds,
                &quick_cfg(0.05),
                EtaKind::PlusMinus,
                10_000,
                Duration::from_secs(30),
                0,
            )
            .unwrap()
            .1
        };
        let a = run();
        let b = run();
        assert_eq!(a.nodes_processed, b.nodes_processed);
        assert_eq!(a.incumbent_value, b.incumbent_value);
        assert_eq!(a.columns_generated, b.columns_generated);
    }

    #[test]
    fn rounding_is_idempotent_on_integral_optimum() {
        let ds = Dataset::new(
            vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]],
            vec![-1.0, -1.0, 1.0, 1.0],
        );
        let cfg = quick_cfg(0.05);
        let mut em = ErrorMatrix::new(4, EtaKind::PlusMinus);
        let sol =
            crate::master::colgen_solve(&ds, &cfg, &vec![ZBound::Free; 4], &mut em).unwrap();
        let lambda = &sol.primal[4..];
        let (z, obj) = rounding_heuristic(lambda, &em, 0.05);
        assert_eq!(obj, 0);
        for (i, &zi) in z.iter().enumerate() {
            assert_eq!(zi as usize as f64, sol.primal[i].round());
        }
    }

    #[test]
    fn rounding_objective_bounds_the_relaxation() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        for _ in 0..10 {
            let n = rng.gen_range(5..15);
            let cols = rng.gen_range(1..4);
            let mut em = ErrorMatrix::new(n, EtaKind::PlusMinus);
            for c in 0..cols {
                let col: Vec<f64> =
                    (0..n).map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
                em.push_raw(
                    col,
                    DecisionStump {
                        feature_index: c,
                        threshold: 0.0,
                        polarity: 1,
                        class_prob_pos: 0.5,
                        class_prob_neg: 0.5,
                    },
                );
            }
            let lp = crate::master::build_master(&em, 0.05, &vec![ZBound::Free; n]);
            let sol = solve(&lp, None).unwrap();
            assert_eq!(sol.status, SolveStatus::Optimal);
            let (_, obj) = rounding_heuristic(&sol.primal[n..], &em, 0.05);
            assert!(obj as f64 >= sol.objective_value - 1e-9);
        }
    }

    #[test]
    fn branch_select_prefers_most_fractional() {
        assert_eq!(branch_select(&[0.0, 0.5, 1.0]), 1);
        assert_eq!(branch_select(&[0.4, 0.45]), 1);
        assert_eq!(branch_select(&[0.5, 0.5]), 0);
    }

    #[test]
    #[should_panic(expected = "fractional")]
    fn branch_select_requires_a_fraction() {
        branch_select(&[0.0, 1.0]);
    }

    fn matrix_from_columns(cols: Vec<Vec<f64>>) -> ErrorMatrix {
        let mut em = ErrorMatrix::new(cols[0].len(), EtaKind::PlusMinus);
        for (j, col) in cols.into_iter().enumerate() {
            em.push_raw(
                col,
                DecisionStump {
                    feature_index: j,
                    threshold: 0.0,
                    polarity: 1,
                    class_prob_pos: 0.5,
                    class_prob_neg: 0.5,
                },
            );
        }
        em
    }

    #[test]
    fn lemma1_case_two_heavy_weight() {
        // λ = (0.6, 0.4) with ρ = 0.05: 0.6 > (1-0.05)/2 = 0.475
        let em = matrix_from_columns(vec![vec![1.0, 1.0, 1.0], vec![1.0, 1.0, -1.0]]);
        let z = vec![false, false, true];
        let j = lemma1_reduce(&[0.6, 0.4], &z, &em, 0.05).expect("case 2 applies");
        assert_eq!(j, 0);
    }

    #[test]
    fn lemma1_case_three_small_support() {
        // single support learner: |J| = 1 < 2/(1-0.05)
        let em = matrix_from_columns(vec![vec![1.0, 1.0], vec![1.0, -1.0]]);
        let j = lemma1_reduce(&[1.0, 0.0], &[false, false], &em, 0.05).unwrap();
        assert_eq!(j, 0);
    }

    #[test]
    fn lemma1_case_one_full_margin() {
        let em = matrix_from_columns(vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
        let j = lemma1_reduce(&[0.5, 0.5], &[false, false], &em, 1.0).unwrap();
        assert_eq!(j, 0, "ties break to the heaviest, then lowest index");
    }

    #[test]
    fn lemma1_rejects_when_no_case_applies() {
        // three equal weights, ρ = 0.05: max λ = 1/3 < 0.475, |J| = 3 > 2.1
        let em = matrix_from_columns(vec![
            vec![1.0, 1.0, -1.0],
            vec![1.0, -1.0, 1.0],
            vec![-1.0, 1.0, 1.0],
        ]);
        let third = 1.0 / 3.0;
        assert!(lemma1_reduce(&[third, third, third], &[false, false, false], &em, 0.05).is_none());
    }

    #[test]
    fn lemma1_verifies_unit_entries() {
        // case 2 precondition holds but the heavy learner errs on a kept
        // example (non-optimal input): must refuse
        let em = matrix_from_columns(vec![vec![1.0, -1.0], vec![1.0, 1.0]]);
        assert!(lemma1_reduce(&[0.6, 0.4], &[false, false], &em, 0.05).is_none());
    }

    #[test]
    fn postprocess_single_learner_margin() {
        let em = matrix_from_columns(vec![vec![1.0, 1.0, -1.0]]);
        let (w, rho_star) = postprocess_margin(&em, &[0, 1]);
        assert!((w[0] - 1.0).abs() < 1e-9);
        assert!((rho_star - 1.0).abs() < 1e-9, "min kept eta is 1");
    }

    #[test]
    fn postprocess_is_idempotent_at_the_optimum() {
        let em = matrix_from_columns(vec![vec![1.0, -1.0], vec![-1.0, 1.0]]);
        let (w1, r1) = postprocess_margin(&em, &[0, 1]);
        let (w2, r2) = postprocess_margin(&em, &[0, 1]);
        assert_eq!(w1, w2);
        assert!((r1 - r2).abs() < 1e-12);
        assert!((r1 - 0.0).abs() < 1e-9, "balanced opposition caps the margin at 0");
    }

    #[test]
    fn postprocess_matches_simplex_grid_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(29);
        for _ in 0..8 {
            let n = rng.gen_range(3..7);
            let cols: Vec<Vec<f64>> = (0..3)
                .map(|_| (0..n).map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect())
                .collect();
            let em = matrix_from_columns(cols.clone());
            let kept: Vec<usize> = (0..n).collect();
            let (_, got) = postprocess_margin(&em, &kept);
            // grid over the 3-simplex
            let steps = 60;
            let mut best = f64::NEG_INFINITY;
            for a in 0..=steps {
                for b in 0..=(steps - a) {
                    let c = steps - a - b;
                    let w = [a as f64 / steps as f64, b as f64 / steps as f64, c as f64 / steps as f64];
                    let min_margin = (0..n)
                        .map(|i| (0..3).map(|j| cols[j][i] * w[j]).sum::<f64>())
                        .fold(f64::INFINITY, f64::min);
                    best = best.max(min_margin);
                }
            }
            assert!(
                got >= best - 1e-9 && got <= best + 2.0 / steps as f64 + 1e-9,
                "lp margin {got} vs grid {best}"
            );
        }
    }

    #[test]
    fn postprocess_never_loses_kept_examples() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for _ in 0..10 {
            let n = rng.gen_range(4..10);
            let rows: Vec<Vec<f64>> =
                (0..n).map(|_| (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
            let labels: Vec<f64> =
                (0..n).map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
            let ds = Dataset::new(rows, labels);
            let rho = 0.05;
            let (ens, stats) = ipboost_train(
                &ds,
                &quick_cfg(rho),
                EtaKind::PlusMinus,
                2000,
                Duration::from_secs(20),
                0,
            )
            .unwrap();
            // margin never below the configured one, weights a distribution
            ens.validate().unwrap();
            assert!(ens.margin >= rho - 1e-9);
            // the ensemble classifies at least n - U examples correctly at
            // margin rho (the kept set survived post-processing)
            let correct_at_margin = (0..n)
                .filter(|&i| {
                    let m: f64 = ens
                        .stumps
                        .iter()
                        .zip(&ens.weights)
                        .map(|(s, &w)| {
                            w * crate::learners::eta_value(s, ds.row(i), ds.label(i), ens.eta_kind)
                        })
                        .sum();
                    m >= rho - 1e-7
                })
                .count();
            assert!(correct_at_margin >= n - stats.incumbent_value);
        }
    }
}
