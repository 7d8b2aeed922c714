use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use evtail::experiment::{priced_set, run_experiment_with_progress, ExperimentConfig};
use evtail::mlp::{error_sample, train, LabeledSet, MlpModel};
use evtail::pricing::{crr_american_put, OptionContract, C_TEST, C_TRAIN, DEFAULT_TREE_STEPS, SPOT_REF};
use evtail::tail::{exceedance_probability, markov_bound, mean_excess, tail_fit, ErrorSample, TailFit};
use evtail::gpd::{gpd_sample, GpdParams};

/// Extreme-value tail analysis of surrogate-model errors.
#[derive(Parser)]
#[command(name = "evtail", version)]
struct Cli {
    /// Experiment/training configuration (TOML)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for stochastic commands (master seed for `experiment` and `train`)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of upper order statistics above the threshold
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Use the full-size network and experiment dimensions
    #[arg(long, global = true)]
    paper_scale: bool,
    /// Output file, or output directory for `experiment`
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Domain {
    Train,
    Test,
}

#[derive(Subcommand)]
enum Command {
    /// Price one American put on the binomial tree
    Price {
        /// Strike as a fraction of the spot
        #[arg(long)]
        strike: f64,
        /// Maturity in months
        #[arg(long)]
        maturity: f64,
        #[arg(long)]
        rate: f64,
        #[arg(long, default_value_t = 0.0)]
        dividend: f64,
        #[arg(long)]
        vol: f64,
        #[arg(long, default_value_t = SPOT_REF)]
        spot: f64,
        #[arg(long, default_value_t = DEFAULT_TREE_STEPS)]
        steps: usize,
    },
    /// Sample contracts uniformly from a domain and price them (CSV K,T,r,q,sigma,price)
    Dataset {
        #[arg(long, value_enum)]
        domain: Domain,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = DEFAULT_TREE_STEPS)]
        steps: usize,
    },
    /// Train the surrogate on a priced dataset and write the model file
    Train {
        #[arg(long)]
        data: PathBuf,
    },
    /// Absolute errors of a model on a priced dataset (CSV `error`)
    Errors {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Fit the tail of an error sample above its k-th largest value
    FitTail {
        #[arg(long)]
        errors: PathBuf,
    },
    /// Exceedance probability at --x, or the mean excess when --x is absent
    TailQuery {
        #[arg(long)]
        fit: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        x: Option<f64>,
    },
    /// Empirical Markov bound on P(E > x) from the m-th moment
    Markov {
        #[arg(long)]
        errors: PathBuf,
        #[arg(long)]
        m: f64,
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
    },
    /// Draw from a generalized Pareto distribution (CSV `error`)
    GpdSample {
        #[arg(long, allow_hyphen_values = true)]
        gamma: f64,
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        n: usize,
    },
    /// Run the full pipeline: pricing, training, test sets, tail fits, report
    Experiment,
}

/// Writes to `--out` when given, stdout otherwise.
fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

fn resolved_config(cli: &Cli) -> Result<ExperimentConfig> {
    let base = ExperimentConfig::preset(cli.paper_scale);
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path, &base)?,
        None => base,
    };
    if let Some(seed) = cli.seed {
        config.master_seed = seed;
    }
    if let Some(k) = cli.k {
        config.k = k;
    }
    if let Some(out) = &cli.out {
        config.output_dir = out.clone();
    }
    config.validate()?;
    Ok(config)
}

fn require_k(cli: &Cli) -> Result<usize> {
    cli.k.context("--k is required for this command")
}

fn run(cli: Cli) -> Result<()> {
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Price { strike, maturity, rate, dividend, vol, spot, steps } => {
            let c = OptionContract::new(*strike, *maturity, *rate, *dividend, *vol)?;
            println!("{}", crr_american_put(&c, *spot, *steps)?);
        }
        Command::Dataset { domain, count, steps } => {
            let domain = match domain {
                Domain::Train => C_TRAIN,
                Domain::Test => C_TEST,
            };
            let set = priced_set(&domain, *count, cli.seed.unwrap_or(0), *steps)?;
            set.write_csv(sink(out)?)?;
        }
        Command::Train { data } => {
            let Some(path) = out else { bail!("--out <model file> is required") };
            let config = resolved_config(&cli)?;
            let data = LabeledSet::read_csv(data)?;
            let (model, report) = train(&data, &config.widths, &config.train_config())?;
            model.save(path)?;
            for e in &report.epochs {
                eprintln!(
                    "epoch {:>3}: train mse {:.6e}  validation mse {:.6e}",
                    e.epoch, e.train_mse, e.validation_mse
                );
            }
        }
        Command::Errors { model, data } => {
            let model = MlpModel::load(model)?;
            let data = LabeledSet::read_csv(data)?;
            error_sample(&model, &data)?.write_csv(sink(out)?)?;
        }
        Command::FitTail { errors } => {
            let k = require_k(&cli)?;
            let sample = ErrorSample::read_csv(errors)?;
            let fit = tail_fit(&sample, k)?;
            let text = fit.to_toml();
            print!("{text}");
            println!("# mean_excess = {}", mean_excess(&fit));
            if let Some(p) = out {
                std::fs::write(p, &text).with_context(|| format!("cannot write {}", p.display()))?;
            }
        }
        Command::TailQuery { fit, x } => {
            let text = std::fs::read_to_string(fit).with_context(|| format!("cannot read {}", fit.display()))?;
            let fit = TailFit::from_toml(&text).with_context(|| format!("in {}", fit.display()))?;
            match x {
                Some(x) => println!("{}", exceedance_probability(&fit, *x)?),
                None => println!("{}", mean_excess(&fit)),
            }
        }
        Command::Markov { errors, m, x } => {
            let sample = ErrorSample::read_csv(errors)?;
            println!("{}", markov_bound(&sample, *m, *x)?);
        }
        Command::GpdSample { gamma, sigma, n } => {
            let params = GpdParams::new(*gamma, *sigma)?;
            let values = gpd_sample(&params, *n, cli.seed.unwrap_or(0))?;
            let mut w = sink(out)?;
            writeln!(w, "error")?;
            for v in values {
                writeln!(w, "{v}")?;
            }
            w.flush()?;
        }
        Command::Experiment => {
            let config = resolved_config(&cli)?;
            let report = run_experiment_with_progress(&config, |msg| eprintln!("{msg}"))?;
            let a = &report.aggregates;
            println!("output: {}", config.output_dir.display());
            println!("fits: {} ok, {} failed", a.successful_fits, a.failed_fits);
            println!(
                "P(E > u) at own threshold: {} (k/N)",
                a.exceedance_at_u.mean
            );
            println!(
                "P(E > {}) EVT: {} ± {}  pooled empirical: {}",
                report.pooled.common_u,
                a.exceedance_at_common_u.mean,
                a.exceedance_at_common_u.std,
                report.pooled.exceedance_at_common_u
            );
            println!(
                "mean excess EVT: {} ± {}  pooled empirical: {}",
                a.mean_excess.mean, a.mean_excess.std, report.pooled.mean_excess_at_common_u
            );
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
