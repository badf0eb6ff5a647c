mod bench;
mod check;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use moseg::ork::{DEFAULT_EPSILON_QUANTILE, DEFAULT_H_FRACTION};
use moseg::pipeline::{Method, PipelineConfig};
use moseg::spectral::DEFAULT_RESTARTS;
use moseg::synth::{make_benchmark_suite, write_suite, Archetype};

/// Motion segmentation of point trajectories by multi-view spectral
/// clustering.
#[derive(Parser, Debug)]
#[command(name = "moseg", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Segment trajectory files (or every entry of a suite manifest).
    Run(run::RunArgs),
    /// Compare methods on a suite manifest.
    Bench(bench::BenchArgs),
    /// Generate synthetic benchmark suites.
    Synth(SynthArgs),
    /// Validate trajectory files.
    ConvertCheck(check::CheckArgs),
}

/// Pipeline parameters shared by `run` and `bench`.
#[derive(Args, Debug, Clone)]
pub struct PipelineArgs {
    /// Hypotheses per model family [default: 500 per frame]
    #[arg(long)]
    budget: Option<usize>,
    /// Fraction of each point's hypotheses counted as inliers
    #[arg(long, default_value_t = DEFAULT_H_FRACTION)]
    h_fraction: f64,
    /// Per-row quantile below which affinities are dropped
    #[arg(long, default_value_t = DEFAULT_EPSILON_QUANTILE)]
    epsilon_quantile: f64,
    /// Co-regularization weight [default: 0.01]
    #[arg(long)]
    lambda: Option<f64>,
    /// Subset-constraint weight [default: 0.01]
    #[arg(long)]
    gamma: Option<f64>,
    /// Master seed for hypothesis sampling and k-means
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// k-means restarts
    #[arg(long, default_value_t = DEFAULT_RESTARTS)]
    restarts: usize,
    /// Maximum alternating sweeps for coreg and subset
    #[arg(long)]
    max_iters: Option<usize>,
    /// Sum raw kernels in keradd instead of unit-max rescaled ones
    #[arg(long)]
    no_kernel_rescale: bool,
    /// Sequences processed in parallel [default: all cores]
    #[arg(long)]
    jobs: Option<usize>,
}

impl PipelineArgs {
    /// Build the pipeline configuration, warning about parameters that the
    /// chosen methods ignore.
    pub fn config(&self, methods: &[Method]) -> PipelineConfig {
        let uses = |m: Method| methods.contains(&m);
        if self.lambda.is_some() && !uses(Method::CoRegularization) {
            log::warn!("--lambda only affects coreg; ignored");
        }
        if self.gamma.is_some() && !uses(Method::Subset) {
            log::warn!("--gamma only affects subset; ignored");
        }
        if self.no_kernel_rescale && !uses(Method::KernelAddition) {
            log::warn!("--no-kernel-rescale only affects keradd; ignored");
        }
        let mut cfg = PipelineConfig {
            budget: self.budget,
            h_fraction: self.h_fraction,
            epsilon_quantile: self.epsilon_quantile,
            seed: self.seed,
            restarts: self.restarts,
            kernel_rescale: !self.no_kernel_rescale,
            ..PipelineConfig::default()
        };
        if let Some(l) = self.lambda {
            cfg.lambda = l;
        }
        if let Some(g) = self.gamma {
            cfg.gamma = g;
        }
        if let Some(n) = self.max_iters {
            cfg.max_iters = n;
        }
        cfg
    }

    pub fn pool(&self) -> Result<rayon::ThreadPool, moseg::Error> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(j) = self.jobs {
            if j == 0 {
                return Err(moseg::Error::Config("--jobs must be positive".into()));
            }
            b = b.num_threads(j);
        }
        b.build().map_err(|e| moseg::Error::Config(format!("thread pool: {e}")))
    }
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Archetypes to generate, or `all`
    #[arg(required = true)]
    archetypes: Vec<String>,
    /// Suite seed
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output directory; each suite goes to a subdirectory named after it
    #[arg(short, long)]
    output: PathBuf,
}

fn synth(args: &SynthArgs) -> Result<(), moseg::Error> {
    let archetypes: Vec<Archetype> = if args.archetypes.iter().any(|a| a == "all") {
        Archetype::ALL.to_vec()
    } else {
        args.archetypes.iter().map(|a| a.parse()).collect::<Result<_, _>>()?
    };
    for a in archetypes {
        let suite = make_benchmark_suite(a, args.seed)?;
        let manifest = write_suite(args.output.join(a.name()), &suite)?;
        println!("{}", manifest.display());
    }
    Ok(())
}

/// A categorized failure, cheap to copy into per-sequence results.
#[derive(Debug, Clone)]
pub struct Failure {
    pub category: &'static str,
    pub message: String,
}

impl From<moseg::Error> for Failure {
    fn from(e: moseg::Error) -> Self {
        Failure {
            category: e.category(),
            message: e.to_string(),
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}] {}", self.category, self.message)
    }
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self.category {
            "config" => 2,
            "io" => 3,
            "input" => 4,
            _ => 5,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MOSEG_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => run::run(a),
        Command::Bench(a) => bench::bench(a),
        Command::Synth(a) => synth(a).map_err(Failure::from),
        Command::ConvertCheck(a) => check::check(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("moseg: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
