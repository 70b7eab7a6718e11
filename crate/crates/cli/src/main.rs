use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tropgeom_cli::config::{default_seeds, FileConfig, OutputFormat, RunSettings};
use tropgeom_cli::{field, lower_bound, minkowski, region, stability_cmd, CliError};

/// Tropical-geometric experiments on attention routing.
#[derive(Parser)]
#[command(name = "tropgeom", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON config file with an "experiment" discriminator and "params".
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config file).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for data files; omit to skip writing.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Data format: csv or json.
    #[arg(long)]
    format: Option<OutputFormat>,
    /// Worker threads (env THREADS when the flag is absent).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Soft-attention RGB fields over a query grid at several temperatures.
    Field(Common),
    /// Exact Minkowski-sum vertex counts for Gaussian key clouds.
    MinkowskiScaling(Common),
    /// Monte Carlo region censuses of random block networks.
    RegionScaling(Common),
    /// Stability certificate for a score vector.
    Stability(Common),
    /// Verify the explicit region-count construction against its oracle.
    LowerBoundVerify(Common),
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Field(c)
            | Command::MinkowskiScaling(c)
            | Command::RegionScaling(c)
            | Command::Stability(c)
            | Command::LowerBoundVerify(c) => c,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Field(_) => "field",
            Command::MinkowskiScaling(_) => "minkowski_scaling",
            Command::RegionScaling(_) => "region_scaling",
            Command::Stability(_) => "stability",
            Command::LowerBoundVerify(_) => "lower_bound_verify",
        }
    }

    fn default_seed(&self) -> u64 {
        match self {
            Command::Field(_) => default_seeds::FIELD,
            Command::MinkowskiScaling(_) => default_seeds::MINKOWSKI,
            Command::RegionScaling(_) => default_seeds::REGION,
            Command::Stability(_) => default_seeds::STABILITY,
            Command::LowerBoundVerify(_) => default_seeds::LOWER_BOUND,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let common = cli.command.common().clone();
    let file = match &common.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    file.check_experiment(cli.command.name())?;
    let settings = RunSettings::resolve(
        &file,
        common.seed,
        common.out.clone(),
        common.format,
        cli.command.default_seed(),
    );

    let threads = common.threads.or(file.threads).or_else(|| {
        std::env::var("THREADS").ok().and_then(|t| t.parse().ok())
    });
    let body = move || -> Result<(), CliError> {
        match &cli.command {
            Command::Field(_) => {
                let params: field::FieldParams = file.params()?;
                let summary = field::run_field(&params, &settings)?;
                for f in &summary.fields {
                    println!(
                        "tau={}: {} dominant winners, winner-match {:.4}",
                        f.tau, f.distinct_dominant, f.winner_match_fraction
                    );
                }
                println!("tau=0: {} winners", summary.distinct_winners_tau0);
            }
            Command::MinkowskiScaling(_) => {
                let params: minkowski::MinkowskiParams = file.params()?;
                let rows = minkowski::run_minkowski_scaling(&params, &settings)?;
                for r in &rows {
                    println!(
                        "H={} N={}: mean f0 {:.2}, max {}, bound {}",
                        r.heads, r.n_tokens, r.mean_f0, r.max_f0, r.bound
                    );
                }
            }
            Command::RegionScaling(_) => {
                let params: region::RegionParams = file.params()?;
                let summary = region::run_region_scaling(&params, &settings)?;
                for (l, n, mean) in &summary.mean_counts {
                    println!("L={l} N={n}: mean distinct {mean:.1}");
                }
                for (l, slope) in &summary.slopes {
                    println!("L={l}: log-log slope {slope:.3}");
                }
            }
            Command::Stability(_) => {
                let params: stability_cmd::StabilityParams = file.params()?;
                let report = stability_cmd::run_stability(&params, &settings)?;
                println!(
                    "N={} tau={} delta={}: value_gap={:e} grad_gap={:e} hess_norm={:e} stable={}",
                    report.n,
                    report.tau,
                    report.delta,
                    report.value_gap,
                    report.grad_l1_gap,
                    report.hess_norm,
                    report.in_stable_region
                );
            }
            Command::LowerBoundVerify(_) => {
                let params: lower_bound::LowerBoundParams = file.params()?;
                let rows = lower_bound::run_lower_bound_verify(&params, &settings)?;
                for r in &rows {
                    println!(
                        "N={} d={} d_ff={} L={}: measured {} exact {} (lower {}, upper {}) {}",
                        r.n_tokens,
                        r.dim,
                        r.d_ff,
                        r.depth,
                        r.measured,
                        r.exact,
                        r.lower,
                        r.upper,
                        if r.pass { "ok" } else { "FAIL" }
                    );
                }
            }
        }
        Ok(())
    };

    match threads {
        Some(t) if t > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::Usage(format!("threads: {e}")))?
            .install(body),
        _ => body(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders help/version through the same error path
            let is_help = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if is_help {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
