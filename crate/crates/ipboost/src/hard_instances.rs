//! Generator for the noisy binary-feature instance family that defeats
//! convex potential boosters. Every clean example is labeled by the
//! majority vote of its coordinates; random label flips then plant the
//! noise that convex losses chase.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::Dataset;

#[derive(Debug, Clone)]
pub struct HardInstanceConfig {
    pub n_points: usize,
    /// Label flip probability γ ∈ [0, 0.5).
    pub noise_rate: f64,
    /// Odd number of ±1 features.
    pub dimension: usize,
    pub seed: u64,
    /// Mixture weights for (large-margin, puller, penalizer) examples.
    pub mixture: [f64; 3],
}

impl HardInstanceConfig {
    pub fn new(n_points: usize, noise_rate: f64, seed: u64) -> Self {
        HardInstanceConfig {
            n_points,
            noise_rate,
            dimension: 21,
            seed,
            mixture: [0.25, 0.25, 0.5],
        }
    }

    fn validate(&self) {
        assert!(self.n_points >= 1);
        assert!((0.0..0.5).contains(&self.noise_rate), "noise rate must be in [0, 0.5)");
        assert!(self.dimension % 2 == 1 && self.dimension >= 3, "dimension must be odd and >= 3");
        assert!(self.mixture.iter().all(|&p| p >= 0.0));
        assert!(self.mixture.iter().sum::<f64>() > 0.0);
    }
}

/// Generated dataset plus the flip mask, kept so tests can verify the
/// empirical noise rate.
#[derive(Debug, Clone)]
pub struct HardInstance {
    pub dataset: Dataset,
    pub flipped: Vec<bool>,
}

/// Draws the instance. Before noise, the clean label of every example
/// equals the sign of the coordinate sum: the head block (the first
/// `(d+1)/2` coordinates) outvotes the tail by exactly one on pullers and
/// penalizers, and unanimously on large-margin examples.
pub fn generate_hard(cfg: &HardInstanceConfig) -> HardInstance {
    cfg.validate();
    let d = cfg.dimension;
    let head = (d + 1) / 2; // majority block size
    let tail = d - head;
    let head_agree = head / 2; // penalizer: this many of the head vote with y
    let tail_agree = head - head_agree; // and this many of the tail
    assert!(tail_agree <= tail, "penalizer split needs a wide enough tail");

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let total: f64 = cfg.mixture.iter().sum();
    let thresholds = [cfg.mixture[0] / total, (cfg.mixture[0] + cfg.mixture[1]) / total];

    let mut rows = Vec::with_capacity(cfg.n_points);
    let mut labels = Vec::with_capacity(cfg.n_points);
    let mut flipped = Vec::with_capacity(cfg.n_points);
    for _ in 0..cfg.n_points {
        let y: f64 = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let kind = rng.gen::<f64>();
        let mut row = vec![-y; d];
        if kind < thresholds[0] {
            // large margin: unanimous
            row.fill(y);
        } else if kind < thresholds[1] {
            // puller: head with y, tail against
            row[..head].fill(y);
        } else {
            // penalizer: scattered minority-of-head plus majority-of-tail
            for k in sample(&mut rng, head, head_agree) {
                row[k] = y;
            }
            for k in sample(&mut rng, tail, tail_agree) {
                row[head + k] = y;
            }
        }
        let flip = rng.gen_bool(cfg.noise_rate);
        labels.push(if flip { -y } else { y });
        flipped.push(flip);
        rows.push(row);
    }
    HardInstance { dataset: Dataset::new(rows, labels), flipped }
}
