//! `dsel`: replay a dialogue stream through the selection buffer, compare
//! replacement policies, or split a dataset into stream and eval parts.
//!
//! Exit status is 0 on success, 1 for configuration or input errors and 2
//! for failures while running.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dsel::harness::{compare_policies, run_stream_with, split_dataset, Registries, RunConfig};

#[derive(Parser)]
#[command(name = "dsel", version, about = "Streaming dialogue-set selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a dataset through one policy and write batches and a report.
    Run {
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Run several policies over several seeds and write `compare.csv`.
    Compare {
        #[command(flatten)]
        opts: RunOpts,
        /// Comma-separated policy names.
        #[arg(long, value_delimiter = ',', required = true)]
        policies: Vec<String>,
        /// Inclusive range `a..b` or a comma-separated list.
        #[arg(long, default_value = "0")]
        seeds: String,
    },
    /// Split a dialogue JSONL file into `<stem>.stream.jsonl` and `<stem>.eval.jsonl`.
    Split {
        #[arg(long)]
        dataset: PathBuf,
        /// Share of records sent to the stream file.
        #[arg(long, default_value_t = 0.1)]
        fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Defaults to the dataset's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunOpts {
    /// JSON or TOML (by `.toml` extension) run configuration.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    policy: Option<String>,
    #[arg(long)]
    bins: Option<usize>,
    /// Fine-tuning interval in dialogue sets.
    #[arg(long)]
    interval: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunOpts {
    fn load(&self) -> dsel::Result<RunConfig> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(p) = &self.policy {
            cfg.policy = p.clone();
        }
        if let Some(k) = self.bins {
            cfg.bins = k;
        }
        if let Some(f) = self.interval {
            cfg.finetune_interval = f;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out_dir = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_seeds(text: &str) -> Result<Vec<u64>, String> {
    let text = text.trim();
    if let Some((a, b)) = text.split_once("..") {
        let parse = |s: &str| {
            s.trim()
                .parse::<u64>()
                .map_err(|e| format!("bad seed `{s}`: {e}"))
        };
        let (a, b) = (parse(a)?, parse(b.trim_start_matches('='))?);
        if a > b {
            return Err(format!("empty seed range {text}"));
        }
        return Ok((a..=b).collect());
    }
    text.split(',')
        .map(|s| s.trim().parse::<u64>().map_err(|e| format!("bad seed `{s}`: {e}")))
        .collect()
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<dsel::Error> for Failure {
    fn from(e: dsel::Error) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    let registries = Registries::default();
    match cli.command {
        Command::Run { opts } => {
            let cfg = opts.load()?;
            let report = run_stream_with(&cfg, &registries)?;
            let b = &report.final_buffer;
            println!(
                "{}: {} sets, {} events, buffer {}/{}; eoe {:.4} dss {:.4} idd {:.4} composite {:.4}",
                report.policy,
                report.final_counts.seen,
                report.events.len(),
                b.occupied,
                report.bins,
                b.mean_eoe,
                b.mean_dss,
                b.mean_idd,
                b.composite
            );
            println!("output in {}", cfg.out_dir.display());
        }
        Command::Compare {
            opts,
            policies,
            seeds,
        } => {
            let cfg = opts.load()?;
            let seeds = parse_seeds(&seeds).map_err(Failure::Config)?;
            let cmp = compare_policies(&cfg, &policies, &seeds, &registries)?;
            let csv = cmp.to_csv()?;
            std::fs::create_dir_all(&cfg.out_dir).map_err(dsel::Error::from)?;
            let path = cfg.out_dir.join("compare.csv");
            std::fs::write(&path, &csv).map_err(dsel::Error::from)?;
            print!("{csv}");
            let failed: usize = cmp.rows.iter().map(|r| r.failed).sum();
            if failed > 0 {
                return Err(Failure::Runtime(format!(
                    "{failed} run(s) failed; see {}",
                    path.display()
                )));
            }
        }
        Command::Split {
            dataset,
            fraction,
            seed,
            out,
        } => {
            let out = out.unwrap_or_else(|| {
                dataset
                    .parent()
                    .map(PathBuf::from)
                    .unwrap_or_else(|| PathBuf::from("."))
            });
            let s = split_dataset(&dataset, fraction, seed, &out)?;
            println!("{} -> {} records", s.stream_path.display(), s.stream_count);
            println!("{} -> {} records", s.eval_path.display(), s.eval_count);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
