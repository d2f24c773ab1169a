//! Decision-stump base learners: weighted training (the pricing oracle),
//! the three per-example error functions, and ensemble voting.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Dataset;
use crate::par;

/// Class probabilities are clipped to `[P_MIN, 1 - P_MIN]` before the
/// half-log-odds error function; otherwise a pure leaf would produce an
/// unbounded entry and break the margin model.
pub const P_MIN: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("weights must not be all zero")]
    AllZeroWeights,
    #[error("expected {expected} weights, got {got}")]
    WeightLength { expected: usize, got: usize },
}

/// Which error function fills the master matrix and scores votes:
/// `PlusMinus` is hard ±1 correctness, `ClassProb` is `2·P(h(x)=y) − 1`,
/// `SammeR` is the half log-odds of the leaf class probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EtaKind {
    PlusMinus,
    ClassProb,
    SammeR,
}

impl EtaKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "i" | "plusminus" => Some(EtaKind::PlusMinus),
            "ii" | "classprob" => Some(EtaKind::ClassProb),
            "iii" | "sammer" => Some(EtaKind::SammeR),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            EtaKind::PlusMinus => "i",
            EtaKind::ClassProb => "ii",
            EtaKind::SammeR => "iii",
        }
    }
}

/// Depth-1 axis-aligned classifier: predicts `+polarity` when
/// `x[feature_index] <= threshold`, `-polarity` otherwise. The threshold may
/// be ±∞ (constant learner). `class_prob_pos` is the probability of class +1
/// on the side where the stump predicts +1, `class_prob_neg` on the other.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionStump {
    pub feature_index: usize,
    pub threshold: f64,
    pub polarity: i8,
    pub class_prob_pos: f64,
    pub class_prob_neg: f64,
}

impl DecisionStump {
    /// Hard ±1 prediction.
    pub fn predict_label(&self, x: &[f64]) -> f64 {
        let le = x[self.feature_index] <= self.threshold;
        let sign = if le { 1.0 } else { -1.0 };
        sign * f64::from(self.polarity)
    }

    /// Estimated `P(y = +1)` on the side `x` falls in.
    pub fn prob_positive(&self, x: &[f64]) -> f64 {
        if self.predict_label(x) > 0.0 {
            self.class_prob_pos
        } else {
            self.class_prob_neg
        }
    }

    /// Voting score ξ under the given error function. For every kind,
    /// `eta_value(x, y) == y · score(x)`.
    pub fn score(&self, x: &[f64], kind: EtaKind) -> f64 {
        match kind {
            EtaKind::PlusMinus => self.predict_label(x),
            EtaKind::ClassProb => 2.0 * self.prob_positive(x) - 1.0,
            EtaKind::SammeR => {
                let p = self.prob_positive(x).clamp(P_MIN, 1.0 - P_MIN);
                0.5 * (p / (1.0 - p)).ln()
            }
        }
    }
}

/// Per-example, per-learner error value η.
pub fn eta_value(stump: &DecisionStump, x: &[f64], y: f64, kind: EtaKind) -> f64 {
    y * stump.score(x, kind)
}

/// Fits the stump maximizing `Σ_i w_i · y_i · h(x_i)` exactly over all
/// (feature, midpoint-threshold, polarity) candidates, including ±∞ sentinel
/// thresholds (constant learners). Ties break to the lowest feature index,
/// then the smallest threshold, then polarity +1. Leaf class probabilities
/// come from Laplace-smoothed weighted frequencies, with weights normalized
/// to sum N so the result is invariant to weight scaling.
pub fn fit_stump_weighted(ds: &Dataset, weights: &[f64]) -> Result<DecisionStump, LearnerError> {
    let n = ds.example_count();
    if weights.len() != n {
        return Err(LearnerError::WeightLength { expected: n, got: weights.len() });
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || weights.iter().any(|&w| w < 0.0) {
        return Err(LearnerError::AllZeroWeights);
    }

    let signed: Vec<f64> = (0..n).map(|i| weights[i] * ds.label(i)).collect();
    let sum_signed: f64 = signed.iter().sum();

    let per_feature = par::map_indexed(ds.feature_count(), |f| {
        best_split_for_feature(ds, f, &signed, sum_signed)
    });

    let mut best = per_feature[0];
    let mut best_feature = 0usize;
    for (f, cand) in per_feature.iter().enumerate().skip(1) {
        if cand.objective > best.objective {
            best = *cand;
            best_feature = f;
        }
    }

    Ok(finish_stump(ds, weights, total, best_feature, best))
}

/// Sequential reference implementation of [`fit_stump_weighted`]; produces
/// bit-identical results and backs the fallback when `parallel` is off.
pub fn fit_stump_weighted_seq(ds: &Dataset, weights: &[f64]) -> Result<DecisionStump, LearnerError> {
    let n = ds.example_count();
    if weights.len() != n {
        return Err(LearnerError::WeightLength { expected: n, got: weights.len() });
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || weights.iter().any(|&w| w < 0.0) {
        return Err(LearnerError::AllZeroWeights);
    }
    let signed: Vec<f64> = (0..n).map(|i| weights[i] * ds.label(i)).collect();
    let sum_signed: f64 = signed.iter().sum();
    let per_feature = par::map_indexed_seq(ds.feature_count(), |f| {
        best_split_for_feature(ds, f, &signed, sum_signed)
    });
    let mut best = per_feature[0];
    let mut best_feature = 0usize;
    for (f, cand) in per_feature.iter().enumerate().skip(1) {
        if cand.objective > best.objective {
            best = *cand;
            best_feature = f;
        }
    }
    Ok(finish_stump(ds, weights, total, best_feature, best))
}

#[derive(Debug, Clone, Copy)]
struct SplitCandidate {
    objective: f64,
    threshold: f64,
    polarity: i8,
}

fn best_split_for_feature(ds: &Dataset, f: usize, signed: &[f64], sum_signed: f64) -> SplitCandidate {
    let n = ds.example_count();
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_unstable_by(|&a, &b| {
        ds.value(a as usize, f).total_cmp(&ds.value(b as usize, f))
    });

    let mut best = SplitCandidate { objective: f64::NEG_INFINITY, threshold: f64::NAN, polarity: 1 };
    let consider = |threshold: f64, prefix: f64, best: &mut SplitCandidate| {
        // objective for polarity +1 is 2·prefix − sum; −1 negates it
        let pos = 2.0 * prefix - sum_signed;
        for (obj, polarity) in [(pos, 1i8), (-pos, -1i8)] {
            if obj > best.objective {
                *best = SplitCandidate { objective: obj, threshold, polarity };
            }
        }
    };

    consider(f64::NEG_INFINITY, 0.0, &mut best);
    let mut prefix = 0.0;
    for k in 0..n {
        let i = order[k] as usize;
        prefix += signed[i];
        let v = ds.value(i, f);
        if k + 1 == n {
            // full prefix equals the total; use it exactly so the two
            // constant-learner sentinels stay symmetric
            consider(f64::INFINITY, sum_signed, &mut best);
        } else {
            let next = ds.value(order[k + 1] as usize, f);
            if next > v {
                consider(0.5 * (v + next), prefix, &mut best);
            }
        }
    }
    best
}

fn finish_stump(
    ds: &Dataset,
    weights: &[f64],
    total: f64,
    feature: usize,
    cand: SplitCandidate,
) -> DecisionStump {
    let n = ds.example_count();
    let scale = n as f64 / total;
    // Laplace-smoothed (+1/+2) weighted class frequencies per side.
    let (mut w_le, mut w_le_pos, mut w_gt, mut w_gt_pos) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        let w = weights[i] * scale;
        let pos = ds.label(i) > 0.0;
        if ds.value(i, feature) <= cand.threshold {
            w_le += w;
            if pos {
                w_le_pos += w;
            }
        } else {
            w_gt += w;
            if pos {
                w_gt_pos += w;
            }
        }
    }
    let p_le = (w_le_pos + 1.0) / (w_le + 2.0);
    let p_gt = (w_gt_pos + 1.0) / (w_gt + 2.0);
    let (class_prob_pos, class_prob_neg) = if cand.polarity > 0 { (p_le, p_gt) } else { (p_gt, p_le) };
    DecisionStump {
        feature_index: feature,
        threshold: cand.threshold,
        polarity: cand.polarity,
        class_prob_pos,
        class_prob_neg,
    }
}

/// Every stump on the dataset's threshold grid: all features, midpoints
/// between consecutive distinct values plus ±∞ sentinels, both polarities.
/// Class probabilities use uniform weights. Intended for small-instance
/// oracles and exactness checks.
pub fn enumerate_stumps(ds: &Dataset) -> Vec<DecisionStump> {
    let n = ds.example_count();
    let uniform = vec![1.0; n];
    let mut out = Vec::new();
    for f in 0..ds.feature_count() {
        let mut values: Vec<f64> = (0..n).map(|i| ds.value(i, f)).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        let mut thresholds = vec![f64::NEG_INFINITY];
        for w in values.windows(2) {
            thresholds.push(0.5 * (w[0] + w[1]));
        }
        thresholds.push(f64::INFINITY);
        for t in thresholds {
            for polarity in [1i8, -1] {
                out.push(finish_stump(
                    ds,
                    &uniform,
                    n as f64,
                    f,
                    SplitCandidate { objective: 0.0, threshold: t, polarity },
                ));
            }
        }
    }
    out
}

/// Convex combination of stumps with a voting rule and the margin it
/// achieves on the kept training examples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoostedEnsemble {
    pub stumps: Vec<DecisionStump>,
    pub weights: Vec<f64>,
    pub eta_kind: EtaKind,
    pub margin: f64,
}

impl BoostedEnsemble {
    /// Checks the structural invariants: nonempty, equal lengths,
    /// nonnegative weights summing to 1 within 1e-9.
    pub fn validate(&self) -> Result<(), String> {
        if self.stumps.is_empty() {
            return Err("ensemble has no learners".into());
        }
        if self.stumps.len() != self.weights.len() {
            return Err(format!(
                "{} learners but {} weights",
                self.stumps.len(),
                self.weights.len()
            ));
        }
        if self.weights.iter().any(|&w| w < 0.0) {
            return Err("negative learner weight".into());
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(format!("weights sum to {sum}, expected 1"));
        }
        Ok(())
    }

    /// Weighted voting score `Σ_j ξ_j(x) λ_j`.
    pub fn score(&self, x: &[f64]) -> f64 {
        self.stumps
            .iter()
            .zip(&self.weights)
            .map(|(s, &w)| w * s.score(x, self.eta_kind))
            .sum()
    }

    /// Predicted label; a zero score breaks to +1.
    pub fn predict(&self, x: &[f64]) -> f64 {
        if self.score(x) >= 0.0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Fraction of examples whose label matches the prediction.
    pub fn accuracy(&self, ds: &Dataset) -> f64 {
        let correct = (0..ds.example_count())
            .filter(|&i| self.predict(ds.row(i)) == ds.label(i))
            .count();
        correct as f64 / ds.example_count() as f64
    }

    /// Number of pairwise distinct (feature, threshold, polarity) learners.
    pub fn distinct_learner_count(&self) -> usize {
        let mut keys: Vec<(usize, u64, i8)> = self
            .stumps
            .iter()
            .map(|s| (s.feature_index, s.threshold.to_bits(), s.polarity))
            .collect();
        keys.sort_unstable();
        keys.dedup();
        keys.len()
    }
}
