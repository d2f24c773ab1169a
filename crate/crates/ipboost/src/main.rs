use std::path::PathBuf;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::Parser;

use ipboost::experiment::{
    run_experiment, save_model, write_csv, Algorithm, DataSource, ExperimentConfig, SeedResult,
};
use ipboost::learners::EtaKind;

/// Boosting that minimizes the true misclassification loss by
/// branch-and-price, with LPBoost and AdaBoost comparators.
#[derive(Parser, Debug)]
#[command(name = "ipboost", version)]
struct Cli {
    /// LIBSVM dataset path; a companion `<PATH>.t` file is used as the test
    /// set when present, otherwise 20% of the points are split off per seed
    #[arg(long, conflicts_with = "hard")]
    data: Option<PathBuf>,

    /// Synthetic noisy hard instance: point count and noise level
    #[arg(long, num_args = 2, value_names = ["N", "GAMMA"])]
    hard: Option<Vec<String>>,

    /// Training algorithm
    #[arg(long, default_value = "ipboost", value_parser = ["ipboost", "lpboost", "adaboost"])]
    algo: String,

    /// Margin parameter in (0, 1]
    #[arg(long, default_value_t = 0.05)]
    rho: f64,

    /// Error function: i (hard ±1), ii (class probabilities), iii (half
    /// log-odds)
    #[arg(long, default_value = "ii", value_parser = ["i", "ii", "iii"])]
    eta: String,

    /// Number of seeds; runs use seeds 0..K
    #[arg(long, default_value_t = 10)]
    seeds: u64,

    /// Stop after this many nodes without incumbent improvement
    #[arg(long, default_value_t = 5000)]
    stall: usize,

    /// Per-seed time limit in seconds
    #[arg(long = "time-limit", default_value_t = 300.0)]
    time_limit: f64,

    /// Training points are subsampled down to this cap
    #[arg(long, default_value_t = 30_000)]
    subsample: usize,

    /// Write the aggregated result row to this CSV file
    #[arg(long)]
    out: Option<PathBuf>,

    /// Persist the best seed's trained model here
    #[arg(long = "model-out")]
    model_out: Option<PathBuf>,
}

fn main() -> Result<()> {
    env_logger::init(); // RUST_LOG controls verbosity
    let cli = Cli::parse();

    let (name, source) = match (&cli.data, &cli.hard) {
        (Some(path), None) => {
            let name = path
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dataset".into());
            (name, DataSource::File(path.clone()))
        }
        (None, Some(args)) => {
            let n_points: usize =
                args[0].parse().with_context(|| format!("bad point count {:?}", args[0]))?;
            let gamma: f64 =
                args[1].parse().with_context(|| format!("bad noise level {:?}", args[1]))?;
            if !(0.0..0.5).contains(&gamma) {
                bail!("noise level must lie in [0, 0.5), got {gamma}");
            }
            (format!("hard-{n_points}-{gamma}"), DataSource::Hard { n_points, gamma })
        }
        _ => bail!("exactly one of --data or --hard is required"),
    };

    if cli.seeds == 0 {
        bail!("need at least one seed");
    }
    if !(cli.rho > 0.0 && cli.rho <= 1.0) {
        bail!("rho must lie in (0, 1], got {}", cli.rho);
    }
    let algorithm = Algorithm::parse(&cli.algo).expect("clap validated the choice");
    let eta_kind = EtaKind::parse(&cli.eta).expect("clap validated the choice");

    let cfg = ExperimentConfig {
        rho: cli.rho,
        eta_kind,
        seeds: (0..cli.seeds).collect(),
        stall_limit: cli.stall.max(1),
        time_limit: Duration::from_secs_f64(cli.time_limit),
        subsample_cap: cli.subsample.max(1),
        ..ExperimentConfig::new(name, source, algorithm)
    };

    let (row, seed_results) = run_experiment(&cfg)?;

    println!(
        "{} {} rho={} eta={} acc={:.2}±{:.2} L={:.1} time={:.2}s best@{:.2}s nodes={:.1}",
        row.name,
        row.algo,
        row.rho,
        row.eta_kind,
        row.acc_mean,
        row.acc_std,
        row.l_mean,
        row.time_total,
        row.time_to_best,
        row.nodes
    );
    for result in &seed_results {
        match result {
            SeedResult::Done(o) => println!(
                "  seed {} train={:.2} test={:.2} L={} time={:.2}s",
                o.seed,
                100.0 * o.train_accuracy,
                100.0 * o.test_accuracy,
                o.learner_count,
                o.time_total.as_secs_f64()
            ),
            SeedResult::Failed { seed, message } => println!("  seed {seed} FAILED: {message}"),
        }
    }

    if let Some(path) = &cli.out {
        write_csv(path, &[row])?;
        println!("wrote {}", path.display());
    }

    if let Some(path) = &cli.model_out {
        let best = seed_results
            .iter()
            .filter_map(|r| match r {
                SeedResult::Done(o) => Some(o),
                _ => None,
            })
            .max_by(|a, b| {
                a.test_accuracy.total_cmp(&b.test_accuracy).then(b.seed.cmp(&a.seed))
            })
            .expect("run_experiment fails when every seed fails");
        save_model(&best.ensemble, path)?;
        println!("saved model from seed {} to {}", best.seed, path.display());
    }

    Ok(())
}
