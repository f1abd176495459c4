use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rcmaes_core::rcmaes::RestartPolicy;
use rcmaes_core::stats::DEFAULT_ALPHA;
use rcmaes_core::suite::{generate_suite, save_suite};
use rcmaes_core::Objective;
use rcmaes_harness::convergence::{convergence_file, export_convergence, DEFAULT_POINTS};
use rcmaes_harness::score::{score_campaign, REPORT_JSON};
use rcmaes_harness::timing::{measure_timing, TIMING_EVALS};
use rcmaes_harness::{Campaign, Config, HarnessError, Result};

#[derive(Parser, Debug)]
#[command(name = "rcmaes", version, about = "Run, score and time RCMAES benchmark campaigns")]
struct Cli {
    /// TOML config; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory, overriding `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for `run`.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,

    /// Added to the run index to form each run's seed, overriding `campaign.seed_offset`.
    #[arg(long, global = true)]
    seed_offset: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every (policy, problem, run) cell and write the archive.
    Run,
    /// Score an archive: accuracy, Friedman ranks and W/T/L.
    Score {
        /// Policy whose W/T/L is reported; defaults to the first policy.
        #[arg(long)]
        subject: Option<String>,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
    },
    /// Export mean error curves for one problem.
    Convergence {
        #[arg(long)]
        problem: String,
        #[arg(long, default_value_t = DEFAULT_POINTS)]
        points: usize,
    },
    /// Measure T1 (evaluation cost) and T2 (algorithm cost).
    Timing {
        /// Policy to time; defaults to the first configured policy.
        #[arg(long)]
        policy: Option<String>,
        #[arg(long, default_value_t = TIMING_EVALS)]
        evals: u64,
    },
    /// Write the configured suite to a `.suite` file.
    GenSuite {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        count: Option<usize>,
        /// Destination; defaults to `<out>/problems.suite`.
        #[arg(long)]
        path: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(out) = cli.out {
        cfg.output.dir = out;
    }
    if let Some(offset) = cli.seed_offset {
        cfg.campaign.seed_offset = offset;
    }
    let out = cfg.output.dir.clone();

    match cli.command {
        Command::Run => {
            let campaign = Campaign::from_config(&cfg)?;
            let total = campaign.cells().len();
            let summary = campaign.run(&out, cli.workers)?;
            println!(
                "{} runs written to {} ({} failed)",
                summary.rows,
                out.display(),
                summary.failures
            );
            if summary.failures > 0 {
                return Err(HarnessError::PartialFailure {
                    failed: summary.failures,
                    total,
                });
            }
        }
        Command::Score { subject, alpha } => {
            let report = score_campaign(&out, subject.as_deref(), alpha)?;
            print!("subject: {}\n{}", report.subject, report.report.to_text());
            println!("machine-readable report: {}", out.join(REPORT_JSON).display());
        }
        Command::Convergence { problem, points } => {
            export_convergence(&out, &problem, points)?;
            println!("{}", convergence_file(&out, &problem).display());
        }
        Command::Timing { policy, evals } => {
            cfg.validate()?;
            let policy: RestartPolicy = match policy {
                Some(p) => p.parse()?,
                None => cfg.campaign.parsed_policies()?[0],
            };
            let problems = cfg.suite.problems()?;
            let refs: Vec<&(dyn Objective + Sync)> = problems.iter().map(|p| p as &(dyn Objective + Sync)).collect();
            let report = measure_timing(&refs, policy, evals, 1 + cfg.campaign.seed_offset)?;
            std::fs::create_dir_all(&out).map_err(|e| HarnessError::io(&out, e))?;
            let path = out.join("timing.json");
            std::fs::write(&path, serde_json::to_string_pretty(&report)?).map_err(|e| HarnessError::io(&path, e))?;
            print!("{}", report.to_text());
        }
        Command::GenSuite { seed, dim, count, path } => {
            let seed = seed.unwrap_or(cfg.suite.seed);
            let dim = dim.unwrap_or(cfg.suite.dim);
            let count = count.unwrap_or(cfg.suite.count);
            cfg.suite.dim = dim;
            cfg.suite.count = count;
            cfg.suite.path = None;
            cfg.validate()?;
            let suite = generate_suite(seed, dim, count)?;
            let path = path.unwrap_or_else(|| out.join("problems.suite"));
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
            }
            save_suite(&path, &suite)?;
            println!("{}", path.display());
        }
    }
    Ok(())
}
