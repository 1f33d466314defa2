//! Command-line front end: `rankbench <subcommand>`.

use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::pipeline::{find_record_files, parse_sizes, read_records, run, sweep_sample_size, RunConfig};
use crate::queue::{
    default_worker_id, run_job, DirQueue, QueueBackend, QueueOptions, Worker, DEFAULT_MAX_RETRIES,
    QUEUE_ENV,
};
use crate::rankers::{RankerSpec, RANKER_NAMES};
use crate::report::{write_report, ReportData};
use crate::validators::VALIDATOR_NAMES;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "rankbench", version, about = "Benchmark feature-ranking algorithms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Run configuration (YAML).
    pub config: PathBuf,
    /// Override a config value, e.g. `--set ranker.k_neighbors=5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Args)]
pub struct QueueArgs {
    /// Queue directory.
    #[arg(long, env = QUEUE_ENV)]
    pub queue: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every bootstrap of a configuration locally.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory; overrides `output_dir` in the config.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Bootstrap worker threads.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Add a configuration to a job queue.
    Enqueue {
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        queue: QueueArgs,
        #[arg(long, default_value_t = DEFAULT_MAX_RETRIES)]
        max_retries: u32,
    },
    /// Execute queued jobs.
    Worker {
        #[command(flatten)]
        queue: QueueArgs,
        /// Exit once nothing is queued or running.
        #[arg(long)]
        drain: bool,
        /// Jobs processed concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Seconds before a silent worker's job is reclaimed.
        #[arg(long, default_value_t = 3600)]
        lease_secs: u64,
        /// Retry delay per previous attempt, in seconds.
        #[arg(long, default_value_t = 30)]
        backoff_secs: u64,
        /// Poll interval while waiting for work, in milliseconds.
        #[arg(long, default_value_t = 1000)]
        poll_ms: u64,
    },
    /// Show job counts per state.
    Status {
        #[command(flatten)]
        queue: QueueArgs,
        /// Print JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Repeat a run over training-set sizes.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// `start:stop:step`, inclusive.
        #[arg(long)]
        sizes: String,
        /// Bootstraps per size; defaults to the config's `n_bootstraps`.
        #[arg(long)]
        bootstraps: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Aggregate records into CSV tables and an HTML report.
    Report {
        /// Directory searched recursively for records.jsonl, or one file.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// List rankers, validators and dataset generators.
    List,
}

/// Exit code for an error: 1 for configuration problems, 2 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::Unknown { .. } => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn load(args: &ConfigArgs) -> Result<RunConfig> {
    RunConfig::load(&args.config, &args.overrides).map_err(|e| match e {
        e @ Error::Config { .. } => e,
        other => Error::Config {
            path: Some(args.config.clone()),
            line: None,
            message: other.to_string(),
        },
    })
}

fn default_output(config: &RunConfig) -> PathBuf {
    Path::new("rankbench-out").join(format!(
        "{}-{}-{}",
        config.dataset.display_name(),
        config.ranker.name(),
        &config.group_id()[..12]
    ))
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run {
            config,
            output,
            jobs,
        } => {
            let mut cfg = load(&config)?;
            if let Some(o) = output {
                cfg.output_dir = Some(o);
            }
            if cfg.output_dir.is_none() {
                cfg.output_dir = Some(default_output(&cfg));
            }
            if jobs.is_some() {
                cfg.jobs = jobs;
            }
            cfg.validate()?;
            let out = run(&cfg)?;
            println!(
                "{} records ({} rankings fitted, {} restored) written to {}",
                out.records.len(),
                out.ranker_fits,
                out.ranker_restored,
                cfg.output_dir.unwrap().display()
            );
            Ok(())
        }
        Command::Enqueue {
            config,
            queue,
            max_retries,
        } => {
            let mut cfg = load(&config)?;
            // Workers may run elsewhere, so results need an absolute home.
            let out = cfg.output_dir.clone().unwrap_or_else(|| default_output(&cfg));
            cfg.output_dir = Some(if out.is_absolute() {
                out
            } else {
                std::env::current_dir()?.join(out)
            });
            let q = DirQueue::open(&queue.queue, QueueOptions::default())?;
            println!("{}", q.enqueue(&cfg, max_retries)?);
            Ok(())
        }
        Command::Worker {
            queue,
            drain,
            jobs,
            lease_secs,
            backoff_secs,
            poll_ms,
        } => {
            if jobs == 0 {
                return Err(Error::config("--jobs must be >= 1"));
            }
            let options = QueueOptions {
                lease: Duration::from_secs(lease_secs),
                backoff: Duration::from_secs(backoff_secs),
                poll: Duration::from_millis(poll_ms),
            };
            let q = DirQueue::open(&queue.queue, options)?;
            let reports = std::thread::scope(|s| {
                let handles: Vec<_> = (0..jobs)
                    .map(|i| {
                        let q = &q;
                        s.spawn(move || {
                            Worker::new(q, default_worker_id(i), options.poll).work(drain, run_job)
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("worker thread panicked"))
                    .collect::<Result<Vec<_>>>()
            })?;
            let (done, failed, retried) = reports.iter().fold((0, 0, 0), |acc, r| {
                (acc.0 + r.succeeded, acc.1 + r.failed, acc.2 + r.retried)
            });
            println!("done {done}, failed {failed}, retried {retried}");
            Ok(())
        }
        Command::Status { queue, json } => {
            if !queue.queue.is_dir() {
                return Err(Error::FileNotFound(queue.queue));
            }
            let status = DirQueue::open(&queue.queue, QueueOptions::default())?.status()?;
            if json {
                println!("{}", serde_json::to_string(&status)?);
            } else {
                println!(
                    "queued {}\nrunning {}\ndone {}\nfailed {}",
                    status.queued, status.running, status.done, status.failed
                );
            }
            Ok(())
        }
        Command::Sweep {
            config,
            sizes,
            bootstraps,
            output,
            jobs,
        } => {
            let mut cfg = load(&config)?;
            let sizes = parse_sizes(&sizes)?;
            let base = output
                .or_else(|| cfg.output_dir.clone())
                .unwrap_or_else(|| default_output(&cfg));
            cfg.output_dir = Some(base.join("sweep"));
            if jobs.is_some() {
                cfg.jobs = jobs;
            }
            let b = bootstraps.unwrap_or(cfg.n_bootstraps);
            let out = sweep_sample_size(&cfg, &sizes, b)?;
            println!(
                "{} records over {} sizes written to {}",
                out.records.len(),
                sizes.len(),
                cfg.output_dir.unwrap().display()
            );
            Ok(())
        }
        Command::Report { input, out } => {
            let mut records = Vec::new();
            for file in find_record_files(&input)? {
                records.extend(read_records(&file)?);
            }
            let data = ReportData::from_records(&records)?;
            for f in write_report(&data, &out)? {
                println!("{}", f.display());
            }
            Ok(())
        }
        Command::List => {
            println!("rankers:");
            for name in RANKER_NAMES {
                let caps = RankerSpec::from_name(name)?.capabilities();
                let mut tasks = Vec::new();
                if caps.supports_classification {
                    tasks.push("classification");
                }
                if caps.supports_regression {
                    tasks.push("regression");
                }
                println!("  {name:<24}{}", tasks.join(", "));
            }
            println!("validators:");
            for name in VALIDATOR_NAMES {
                println!("  {name}");
            }
            println!("datasets:");
            for name in crate::pipeline::DATASET_GENERATORS {
                println!("  {name}");
            }
            Ok(())
        }
    }
}
