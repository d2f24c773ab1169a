//! LPBoost and AdaBoost comparators under the shared experimental protocol.

use crate::data::Dataset;
use crate::learners::{self, BoostedEnsemble, EtaKind};
use crate::master::{Master, MasterConfig, ZBound};
use crate::simplex::{SimplexError, SolveStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdaBoostVariant {
    Discrete,
    SammeR,
}

#[derive(Debug, Clone)]
pub struct AdaBoostConfig {
    pub iterations: usize,
    pub variant: AdaBoostVariant,
    /// Error function used by the final ensemble's voting rule.
    pub voting: EtaKind,
}

impl AdaBoostConfig {
    pub fn new(variant: AdaBoostVariant) -> Self {
        let voting = match variant {
            AdaBoostVariant::Discrete => EtaKind::PlusMinus,
            AdaBoostVariant::SammeR => EtaKind::SammeR,
        };
        AdaBoostConfig { iterations: 100, variant, voting }
    }
}

/// LP-based boosting: column generation at the root only, no branching.
/// The z variables stay continuous; the ensemble is read off the final
/// relaxation's support.
pub fn lpboost_train(
    ds: &Dataset,
    cfg: &MasterConfig,
    kind: EtaKind,
) -> Result<BoostedEnsemble, SimplexError> {
    let n = ds.example_count();
    let mut master = Master::new(ds, cfg.clone(), kind);
    master.set_z_bounds(&vec![ZBound::Free; n]);
    let node = master.solve_node(None)?;
    assert_eq!(node.solution.status, SolveStatus::Optimal, "root master is always feasible");
    let lambda = master.lambda_values(&node.solution);
    let support: Vec<usize> = (0..lambda.len()).filter(|&j| lambda[j] > 1e-9).collect();
    let total: f64 = support.iter().map(|&j| lambda[j]).sum();
    let weights: Vec<f64> = support.iter().map(|&j| lambda[j] / total).collect();
    let stumps = support.iter().map(|&j| master.em().learner(j).clone()).collect();
    Ok(BoostedEnsemble { stumps, weights, eta_kind: kind, margin: cfg.rho })
}

/// AdaBoost with decision stumps. The discrete variant reweights by
/// `exp(−α_t y h_t(x))` with `α_t = ½ log((1−err)/err)`; the real-valued
/// variant uses the stump's half log-odds score directly. Weights are
/// normalized to sum one for reporting.
pub fn adaboost_train(ds: &Dataset, cfg: &AdaBoostConfig) -> BoostedEnsemble {
    assert!(cfg.iterations >= 1);
    adaboost_impl(ds, cfg, &mut |_| {})
}

// `observe` sees the distribution after every round; tests verify it stays
// a probability distribution.
fn adaboost_impl(
    ds: &Dataset,
    cfg: &AdaBoostConfig,
    observe: &mut dyn FnMut(&[f64]),
) -> BoostedEnsemble {
    const ERR_CLIP: f64 = 1e-10;
    let n = ds.example_count();
    let mut dist = vec![1.0 / n as f64; n];
    let mut stumps = Vec::new();
    let mut weights: Vec<f64> = Vec::new();

    for _ in 0..cfg.iterations {
        let stump = learners::fit_stump_weighted(ds, &dist).expect("distribution is positive");
        let err: f64 = (0..n)
            .filter(|&i| stump.predict_label(ds.row(i)) != ds.label(i))
            .map(|i| dist[i])
            .sum();

        match cfg.variant {
            AdaBoostVariant::Discrete => {
                if err >= 0.5 - 1e-12 {
                    if stumps.is_empty() {
                        stumps.push(stump);
                        weights.push(1.0);
                    }
                    break;
                }
                let clipped = err.clamp(ERR_CLIP, 1.0 - ERR_CLIP);
                let alpha = 0.5 * ((1.0 - clipped) / clipped).ln();
                for i in 0..n {
                    let agree = ds.label(i) * stump.predict_label(ds.row(i));
                    dist[i] *= (-alpha * agree).exp();
                }
                stumps.push(stump);
                weights.push(alpha);
                if err <= ERR_CLIP {
                    break;
                }
            }
            AdaBoostVariant::SammeR => {
                for i in 0..n {
                    let score = stump.score(ds.row(i), EtaKind::SammeR);
                    dist[i] *= (-ds.label(i) * score).exp();
                }
                stumps.push(stump);
                weights.push(1.0);
                if err <= ERR_CLIP {
                    break;
                }
            }
        }

        let total: f64 = dist.iter().sum();
        for d in dist.iter_mut() {
            *d /= total;
        }
        observe(&dist);
    }

    let total: f64 = weights.iter().sum();
    let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
    BoostedEnsemble { stumps, weights, eta_kind: cfg.voting, margin: 0.0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::enumerate_stumps;
    use crate::master::{extract_duals, pricing_value, ErrorMatrix};

    fn dataset_1d(xs: &[f64], ys: &[f64]) -> Dataset {
        Dataset::new(xs.iter().map(|&x| vec![x]).collect(), ys.to_vec())
    }

    #[test]
    fn lpboost_separable_reaches_full_accuracy() {
        let ds = dataset_1d(&[1.0, 2.0, 3.0, 4.0], &[-1.0, -1.0, 1.0, 1.0]);
        let ens = lpboost_train(&ds, &MasterConfig::new(0.05), EtaKind::PlusMinus).unwrap();
        ens.validate().unwrap();
        assert_eq!(ens.accuracy(&ds), 1.0);
        assert!(!ens.stumps.is_empty());
    }

    #[test]
    fn lpboost_objective_bounds_ipboost_from_below() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(61);
        let n = 10;
        let rows: Vec<Vec<f64>> =
            (0..n).map(|_| (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let labels: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
        let ds = Dataset::new(rows, labels);
        let cfg = MasterConfig::new(0.05);
        let mut em = ErrorMatrix::new(n, EtaKind::PlusMinus);
        let lp_obj = crate::master::colgen_solve(
            &ds,
            &cfg,
            &vec![ZBound::Free; n],
            &mut em,
        )
        .unwrap()
        .objective_value;
        let (_, stats) = crate::branch_price::ipboost_train(
            &ds,
            &cfg,
            EtaKind::PlusMinus,
            1000,
            std::time::Duration::from_secs(20),
            0,
        )
        .unwrap();
        assert!(lp_obj <= stats.incumbent_value as f64 + 1e-9);
    }

    #[test]
    fn lpboost_terminates_with_certified_pricing() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let n = 25;
        let rows: Vec<Vec<f64>> =
            (0..n).map(|_| (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let labels: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
        let ds = Dataset::new(rows, labels);
        let cfg = MasterConfig::new(0.05);
        let mut master = Master::new(&ds, cfg, EtaKind::PlusMinus);
        master.set_z_bounds(&vec![ZBound::Free; n]);
        let node = master.solve_node(None).unwrap();
        let duals = extract_duals(&node.solution, n, 0.05);
        for stump in enumerate_stumps(&ds) {
            assert!(pricing_value(&ds, &stump, &duals, EtaKind::PlusMinus) <= 1e-6);
        }
    }

    #[test]
    fn adaboost_nails_separable_data_quickly() {
        let ds = dataset_1d(&[1.0, 2.0, 3.0, 4.0], &[-1.0, -1.0, 1.0, 1.0]);
        let mut cfg = AdaBoostConfig::new(AdaBoostVariant::Discrete);
        cfg.iterations = 3;
        let ens = adaboost_train(&ds, &cfg);
        ens.validate().unwrap();
        assert_eq!(ens.accuracy(&ds), 1.0);
        assert!(ens.stumps.len() <= 3);
    }

    #[test]
    fn adaboost_uniform_labels_stop_after_one_learner() {
        let ds = dataset_1d(&[0.0, 1.0, 2.0], &[1.0, 1.0, 1.0]);
        let ens = adaboost_train(&ds, &AdaBoostConfig::new(AdaBoostVariant::Discrete));
        assert_eq!(ens.stumps.len(), 1);
        assert_eq!(ens.accuracy(&ds), 1.0);
    }

    #[test]
    fn adaboost_distribution_stays_normalized() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let n = 30;
        let rows: Vec<Vec<f64>> =
            (0..n).map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let labels: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
        let ds = Dataset::new(rows, labels);
        for variant in [AdaBoostVariant::Discrete, AdaBoostVariant::SammeR] {
            let mut cfg = AdaBoostConfig::new(variant);
            cfg.iterations = 25;
            let mut rounds = 0;
            adaboost_impl(&ds, &cfg, &mut |dist| {
                rounds += 1;
                let sum: f64 = dist.iter().sum();
                assert!((sum - 1.0).abs() < 1e-9, "distribution sums to {sum}");
                assert!(dist.iter().all(|&d| d >= 0.0));
            });
            assert!(rounds >= 1);
        }
    }

    #[test]
    fn adaboost_sammer_votes_with_log_odds() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let n = 40;
        let rows: Vec<Vec<f64>> =
            (0..n).map(|_| (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let labels: Vec<f64> =
            (0..n).map(|i| if i % 3 == 0 { 1.0 } else { -1.0 }).collect();
        let ds = Dataset::new(rows, labels);
        let ens = adaboost_train(&ds, &AdaBoostConfig::new(AdaBoostVariant::SammeR));
        ens.validate().unwrap();
        assert_eq!(ens.eta_kind, EtaKind::SammeR);
        // distinct learner count never exceeds rounds
        assert!(ens.distinct_learner_count() <= ens.stumps.len());
    }
}
