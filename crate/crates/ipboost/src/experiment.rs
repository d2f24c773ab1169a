//! Experiment protocol: per-seed split/subsample/train/evaluate, aggregated
//! into report rows, plus model persistence.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{adaboost_train, lpboost_train, AdaBoostConfig, AdaBoostVariant};
use crate::branch_price::ipboost_train;
use crate::data::{self, Dataset, SplitSpec};
use crate::hard_instances::{generate_hard, HardInstanceConfig};
use crate::learners::{BoostedEnsemble, EtaKind};
use crate::master::MasterConfig;
use crate::par;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("failed to read dataset: {0}")]
    Data(#[from] data::DataError),
    #[error("model file error: {0}")]
    Io(#[from] std::io::Error),
    #[error("model serialization: {0}")]
    Encode(String),
    #[error("model has version {got}, this build reads version {want}")]
    Version { got: u32, want: u32 },
    #[error("model fails validation: {0}")]
    InvalidModel(String),
    #[error("every seed failed; first error: {0}")]
    AllSeedsFailed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    IpBoost,
    LpBoost,
    AdaBoost,
}

impl Algorithm {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ipboost" => Some(Algorithm::IpBoost),
            "lpboost" => Some(Algorithm::LpBoost),
            "adaboost" => Some(Algorithm::AdaBoost),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::IpBoost => "ipboost",
            Algorithm::LpBoost => "lpboost",
            Algorithm::AdaBoost => "adaboost",
        }
    }
}

#[derive(Debug, Clone)]
pub enum DataSource {
    /// LIBSVM file; a companion `<path>.t` test file is used when present.
    File(PathBuf),
    /// Synthetic noisy hard instance, regenerated per seed.
    Hard { n_points: usize, gamma: f64 },
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub name: String,
    pub source: DataSource,
    pub algorithm: Algorithm,
    pub rho: f64,
    pub eta_kind: EtaKind,
    pub seeds: Vec<u64>,
    pub stall_limit: usize,
    pub time_limit: Duration,
    pub subsample_cap: usize,
    pub adaboost_iterations: usize,
    pub test_fraction: f64,
}

impl ExperimentConfig {
    pub fn new(name: impl Into<String>, source: DataSource, algorithm: Algorithm) -> Self {
        ExperimentConfig {
            name: name.into(),
            source,
            algorithm,
            rho: 0.05,
            eta_kind: EtaKind::ClassProb,
            seeds: (0..10).collect(),
            stall_limit: 5000,
            time_limit: Duration::from_secs(300),
            subsample_cap: 30_000,
            adaboost_iterations: 100,
            test_fraction: 0.2,
        }
    }
}

/// Per-seed result; failures are recorded and the run continues.
#[derive(Debug)]
pub enum SeedResult {
    Done(SeedOutcome),
    Failed { seed: u64, message: String },
}

#[derive(Debug)]
pub struct SeedOutcome {
    pub seed: u64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub learner_count: usize,
    pub time_total: Duration,
    pub time_to_best: Duration,
    pub nodes: usize,
    pub ensemble: BoostedEnsemble,
}

/// One aggregated CSV row (the report table schema).
#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub name: String,
    pub algo: &'static str,
    pub rho: f64,
    pub eta_kind: &'static str,
    pub acc_mean: f64,
    pub acc_std: f64,
    pub l_mean: f64,
    pub time_total: f64,
    pub time_to_best: f64,
    pub nodes: f64,
}

fn sample_std(values: &[f64], mean: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Loads the configured dataset for one seed: either the file (with its
/// companion test set when present, re-aligned by zero-padding) or a fresh
/// hard instance, then the 20% split where no test set exists.
fn materialize(
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<(Dataset, Option<Dataset>), ExperimentError> {
    match &cfg.source {
        DataSource::File(path) => {
            let train = data::load_libsvm(path)?;
            let companion = companion_test_path(path);
            if let Some(test_path) = companion {
                let mut test = data::load_libsvm(&test_path)?;
                let mut train = train;
                let dim = train.feature_count().max(test.feature_count());
                train.pad_to_dim(dim);
                test.pad_to_dim(dim);
                Ok((train, Some(test)))
            } else if cfg.test_fraction > 0.0 {
                let (train, test) = data::split(&train, SplitSpec::new(cfg.test_fraction, seed));
                Ok((train, test))
            } else {
                Ok((train, None))
            }
        }
        DataSource::Hard { n_points, gamma } => {
            let inst = generate_hard(&HardInstanceConfig::new(*n_points, *gamma, seed));
            if cfg.test_fraction > 0.0 {
                let (train, test) =
                    data::split(&inst.dataset, SplitSpec::new(cfg.test_fraction, seed));
                Ok((train, test))
            } else {
                Ok((inst.dataset, None))
            }
        }
    }
}

fn companion_test_path(path: &Path) -> Option<PathBuf> {
    let mut name = path.file_name()?.to_os_string();
    name.push(".t");
    let candidate = path.with_file_name(name);
    candidate.exists().then_some(candidate)
}

fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<SeedOutcome, String> {
    let (train_full, test) = materialize(cfg, seed).map_err(|e| e.to_string())?;
    let train = data::subsample(&train_full, cfg.subsample_cap, seed);
    let started = Instant::now();
    let (ensemble, time_to_best, nodes) = match cfg.algorithm {
        Algorithm::IpBoost => {
            let mcfg = MasterConfig::new(cfg.rho);
            let (ens, stats) =
                ipboost_train(&train, &mcfg, cfg.eta_kind, cfg.stall_limit, cfg.time_limit, seed)
                    .map_err(|e| e.to_string())?;
            (ens, stats.best_solution_time, stats.nodes_processed)
        }
        Algorithm::LpBoost => {
            let mcfg = MasterConfig::new(cfg.rho);
            let ens = lpboost_train(&train, &mcfg, cfg.eta_kind).map_err(|e| e.to_string())?;
            (ens, started.elapsed(), 1)
        }
        Algorithm::AdaBoost => {
            let variant = match cfg.eta_kind {
                EtaKind::SammeR => AdaBoostVariant::SammeR,
                _ => AdaBoostVariant::Discrete,
            };
            let mut acfg = AdaBoostConfig::new(variant);
            acfg.iterations = cfg.adaboost_iterations;
            acfg.voting = cfg.eta_kind;
            let ens = adaboost_train(&train, &acfg);
            (ens, started.elapsed(), 1)
        }
    };
    let time_total = started.elapsed();
    let train_accuracy = ensemble.accuracy(&train);
    let test_accuracy = match &test {
        Some(t) => ensemble.accuracy(t),
        None => train_accuracy,
    };
    Ok(SeedOutcome {
        seed,
        train_accuracy,
        test_accuracy,
        learner_count: ensemble.distinct_learner_count(),
        time_total,
        time_to_best,
        nodes,
        ensemble,
    })
}

/// Runs all seeds (in parallel when enabled) and aggregates the accuracy
/// statistics into a report row. Accuracies are percentages on the
/// designated evaluation split.
pub fn run_experiment(
    cfg: &ExperimentConfig,
) -> Result<(ReportRow, Vec<SeedResult>), ExperimentError> {
    assert!(!cfg.seeds.is_empty(), "at least one seed");
    let mut seeds = cfg.seeds.clone();
    seeds.sort_unstable();

    let results: Vec<SeedResult> = par::map_indexed(seeds.len(), |k| {
        let seed = seeds[k];
        match run_seed(cfg, seed) {
            Ok(outcome) => SeedResult::Done(outcome),
            Err(message) => SeedResult::Failed { seed, message },
        }
    });

    let done: Vec<&SeedOutcome> = results
        .iter()
        .filter_map(|r| match r {
            SeedResult::Done(o) => Some(o),
            SeedResult::Failed { seed, message } => {
                warn!("seed {seed} failed: {message}");
                None
            }
        })
        .collect();
    if done.is_empty() {
        let first = results
            .iter()
            .find_map(|r| match r {
                SeedResult::Failed { message, .. } => Some(message.clone()),
                _ => None,
            })
            .unwrap_or_default();
        return Err(ExperimentError::AllSeedsFailed(first));
    }
    if done.len() == 1 {
        warn!("single seed: reported standard deviation is 0 by convention");
    }

    let accs: Vec<f64> = done.iter().map(|o| 100.0 * o.test_accuracy).collect();
    let acc_mean = mean(&accs);
    let row = ReportRow {
        name: cfg.name.clone(),
        algo: cfg.algorithm.as_str(),
        rho: cfg.rho,
        eta_kind: cfg.eta_kind.as_str(),
        acc_mean,
        acc_std: sample_std(&accs, acc_mean),
        l_mean: mean(&done.iter().map(|o| o.learner_count as f64).collect::<Vec<_>>()),
        time_total: mean(&done.iter().map(|o| o.time_total.as_secs_f64()).collect::<Vec<_>>()),
        time_to_best: mean(&done.iter().map(|o| o.time_to_best.as_secs_f64()).collect::<Vec<_>>()),
        nodes: mean(&done.iter().map(|o| o.nodes as f64).collect::<Vec<_>>()),
    };
    Ok((row, results))
}

/// Writes report rows as CSV with a header.
pub fn write_csv(path: &Path, rows: &[ReportRow]) -> Result<(), ExperimentError> {
    let mut writer =
        csv::Writer::from_path(path).map_err(|e| ExperimentError::Encode(e.to_string()))?;
    for row in rows {
        writer.serialize(row).map_err(|e| ExperimentError::Encode(e.to_string()))?;
    }
    writer.flush()?;
    Ok(())
}

const MODEL_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    model: BoostedEnsemble,
}

/// Persists an ensemble. Invalid ensembles (empty support, bad weights) are
/// rejected before anything is written.
pub fn save_model(ens: &BoostedEnsemble, path: &Path) -> Result<(), ExperimentError> {
    ens.validate().map_err(ExperimentError::InvalidModel)?;
    let file = ModelFile { version: MODEL_VERSION, model: ens.clone() };
    let text = ron::ser::to_string_pretty(&file, ron::ser::PrettyConfig::default())
        .map_err(|e| ExperimentError::Encode(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}

/// Loads a persisted ensemble, checking the format version and the
/// structural invariants.
pub fn load_model(path: &Path) -> Result<BoostedEnsemble, ExperimentError> {
    let text = std::fs::read_to_string(path)?;
    let file: ModelFile =
        ron::from_str(&text).map_err(|e| ExperimentError::Encode(e.to_string()))?;
    if file.version != MODEL_VERSION {
        return Err(ExperimentError::Version { got: file.version, want: MODEL_VERSION });
    }
    file.model.validate().map_err(ExperimentError::InvalidModel)?;
    Ok(file.model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn model_round_trip_preserves_predictions() {
        let ds = Dataset::new(
            vec![vec![1.0, 0.0], vec![2.0, 1.0], vec![3.0, -1.0], vec![4.0, 0.5]],
            vec![-1.0, -1.0, 1.0, 1.0],
        );
        let ens = lpboost_train(&ds, &MasterConfig::new(0.05), EtaKind::ClassProb).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ron");
        save_model(&ens, &path).unwrap();
        let back = load_model(&path).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let x = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
            assert_eq!(ens.predict(&x), back.predict(&x));
            assert_eq!(ens.score(&x).to_bits(), back.score(&x).to_bits());
        }
    }

    #[test]
    fn empty_model_is_rejected_at_save() {
        let ens = BoostedEnsemble {
            stumps: vec![],
            weights: vec![],
            eta_kind: EtaKind::PlusMinus,
            margin: 0.0,
        };
        let dir = tempfile::tempdir().unwrap();
        let err = save_model(&ens, &dir.path().join("m.ron")).unwrap_err();
        assert!(matches!(err, ExperimentError::InvalidModel(_)));
    }

    #[test]
    fn unknown_eta_tag_and_version_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ron");
        std::fs::write(
            &path,
            "(version: 1, model: (stumps: [(feature_index: 0, threshold: 0.0, polarity: 1, class_prob_pos: 0.5, class_prob_neg: 0.5)], weights: [1.0], eta_kind: Quux, margin: 0.0))",
        )
        .unwrap();
        assert!(matches!(load_model(&path).unwrap_err(), ExperimentError::Encode(_)));

        std::fs::write(
            &path,
            "(version: 9, model: (stumps: [(feature_index: 0, threshold: 0.0, polarity: 1, class_prob_pos: 0.5, class_prob_neg: 0.5)], weights: [1.0], eta_kind: PlusMinus, margin: 0.0))",
        )
        .unwrap();
        assert!(matches!(load_model(&path).unwrap_err(), ExperimentError::Version { got: 9, .. }));
    }

    #[test]
    fn adaboost_accuracy_ignores_rho() {
        let base = ExperimentConfig {
            seeds: (0..3).collect(),
            adaboost_iterations: 20,
            ..ExperimentConfig::new(
                "hard",
                DataSource::Hard { n_points: 200, gamma: 0.1 },
                Algorithm::AdaBoost,
            )
        };
        let low = ExperimentConfig { rho: 0.01, ..base.clone() };
        let high = ExperimentConfig { rho: 0.3, ..base };
        let (row_low, _) = run_experiment(&low).unwrap();
        let (row_high, _) = run_experiment(&high).unwrap();
        assert_eq!(row_low.acc_mean, row_high.acc_mean);
        assert_eq!(row_low.acc_std, row_high.acc_std);
    }

    #[test]
    fn experiment_runs_are_reproducible() {
        let cfg = ExperimentConfig {
            seeds: (0..3).collect(),
            stall_limit: 50,
            time_limit: Duration::from_secs(20),
            eta_kind: EtaKind::PlusMinus,
            ..ExperimentConfig::new(
                "hard",
                DataSource::Hard { n_points: 120, gamma: 0.1 },
                Algorithm::IpBoost,
            )
        };
        let (a, _) = run_experiment(&cfg).unwrap();
        let (b, _) = run_experiment(&cfg).unwrap();
        assert_eq!(a.acc_mean, b.acc_mean);
        assert_eq!(a.acc_std, b.acc_std);
        assert_eq!(a.l_mean, b.l_mean);
        assert_eq!(a.nodes, b.nodes);
    }

    #[test]
    fn std_uses_the_sample_formula() {
        assert_eq!(sample_std(&[1.0], 1.0), 0.0);
        let vals = [2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0];
        let m = mean(&vals);
        // known dataset: population std 2, sample std 2.138...
        assert!((sample_std(&vals, m) - 2.1380899352993947).abs() < 1e-12);
    }

    #[test]
    fn companion_test_file_is_used_and_padded() {
        let dir = tempfile::tempdir().unwrap();
        let train_path = dir.path().join("toy");
        std::fs::write(&train_path, "+1 1:1\n-1 1:-1\n+1 1:2\n-1 1:-2\n").unwrap();
        std::fs::write(dir.path().join("toy.t"), "+1 1:1 3:0.5\n-1 1:-1\n").unwrap();
        let cfg = ExperimentConfig {
            seeds: vec![0],
            ..ExperimentConfig::new(
                "toy",
                DataSource::File(train_path),
                Algorithm::LpBoost,
            )
        };
        let (train, test) = materialize(&cfg, 0).unwrap();
        let test = test.unwrap();
        assert_eq!(train.example_count(), 4, "companion set means no split");
        assert_eq!(train.feature_count(), 3, "padded to the wider side");
        assert_eq!(test.feature_count(), 3);
        assert_eq!(test.example_count(), 2);
    }

    #[test]
    fn csv_schema_matches_the_report_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let row = ReportRow {
            name: "toy".into(),
            algo: "lpboost",
            rho: 0.05,
            eta_kind: "ii",
            acc_mean: 90.0,
            acc_std: 1.5,
            l_mean: 3.0,
            time_total: 0.5,
            time_to_best: 0.2,
            nodes: 1.0,
        };
        write_csv(&path, &[row]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "name,algo,rho,eta_kind,acc_mean,acc_std,l_mean,time_total,time_to_best,nodes"
        );
        assert!(lines.next().unwrap().starts_with("toy,lpboost,0.05,ii,90"));
    }
}
