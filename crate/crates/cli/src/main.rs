use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use grm_sim::config::{parse_config, Overrides, RunConfig, RESOLVED_CONFIG_FILE};
use grm_sim::curves::{summarize_curves, write_report, Metric, SeriesLabeler};
use grm_sim::output::{read_summaries, write_replications, write_summaries, SUMMARY_FILE};
use grm_sim::{chart, engine, Error};

#[derive(Parser)]
#[command(
    name = "grm-sim",
    version,
    about = "Graded response model simulation of response-category count and measurement error"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the condition grid and write cell summaries
    Run {
        #[command(flatten)]
        common: CommonArgs,
        /// Worker threads (0 = all cores); does not change results
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Also write one row per replication
        #[arg(long)]
        keep_replications: bool,
    },
    /// Turn cell summaries into curve, delta and optimum tables
    Curves {
        #[command(flatten)]
        common: CommonArgs,
        /// Restrict to one metric (spearman, slope_se, bias)
        #[arg(long)]
        metric: Option<Metric>,
    },
    /// Render curve tables as SVG charts
    Chart {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Check a configuration without running it
    Validate {
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration (TOML)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Replications per cell
    #[arg(long)]
    replications: Option<u32>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Quick mode: 50 replications per cell
    #[arg(long)]
    quick: bool,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            master_seed: self.seed,
            replications: self.replications,
            output_dir: self.out.clone(),
            quick: self.quick,
        }
    }

    fn load(&self) -> Result<RunConfig, Error> {
        parse_config(self.config.as_deref(), &self.overrides())
    }

    /// Config for post-processing: the run's own resolved config when present.
    fn load_for_results(&self) -> Result<RunConfig, Error> {
        let dir = match &self.out {
            Some(d) => d.clone(),
            None => self.load()?.output_dir,
        };
        let resolved = dir.join(RESOLVED_CONFIG_FILE);
        let mut overrides = self.overrides();
        overrides.output_dir = Some(dir);
        if resolved.exists() {
            parse_config(Some(&resolved), &overrides)
        } else {
            parse_config(self.config.as_deref(), &overrides)
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io { .. } | Error::Format { .. } => 3,
        Error::Degenerate(_) => 4,
        _ if err.is_validation() => 2,
        _ => 1,
    }
}

fn run(common: &CommonArgs, workers: usize, keep_replications: bool) -> Result<(), Error> {
    let config = common.load()?;
    let cells = config.expand_grid()?;
    let out = &config.output_dir;
    eprintln!(
        "running {} cells x {} replications ({} mode, seed {})",
        cells.len(),
        config.replications,
        config.mode.as_str(),
        config.master_seed
    );
    let start = Instant::now();
    let records =
        engine::run_grid_detailed(&cells, &config.predictor, config.master_seed, workers)?;
    let summaries: Vec<_> = records.iter().map(|(s, _)| s.clone()).collect();

    config.write_resolved(out)?;
    let path = write_summaries(&summaries, out)?;
    println!("wrote {}", path.display());
    if keep_replications {
        let path = write_replications(&records, out)?;
        println!("wrote {}", path.display());
    }
    let discards: u64 = summaries.iter().map(|s| s.discards).sum();
    if discards > 0 {
        eprintln!("{discards} degenerate samples regenerated");
    }
    eprintln!("done in {:.1}s", start.elapsed().as_secs_f64());
    Ok(())
}

fn curves(common: &CommonArgs, metric: Option<Metric>) -> Result<(), Error> {
    let config = common.load_for_results()?;
    let dir: &Path = &config.output_dir;
    let summaries = read_summaries(&dir.join(SUMMARY_FILE), config.master_seed)?;
    let labeler = SeriesLabeler::from_config(&config);
    let metrics = metric
        .map(|m| vec![m])
        .unwrap_or_else(|| Metric::ALL.to_vec());
    for m in metrics {
        let report = summarize_curves(&summaries, &labeler, config.mode, m)?;
        for w in &report.warnings {
            eprintln!("warning: {w}");
        }
        for path in write_report(&report, dir)? {
            println!("wrote {}", path.display());
        }
        for c in &report.curves {
            println!(
                "{m}: {} items={} n={} best K={} ({})",
                c.series, c.items, c.n, c.best_k, c.best_value
            );
        }
    }
    Ok(())
}

fn charts(common: &CommonArgs) -> Result<(), Error> {
    let dir = match &common.out {
        Some(d) => d.clone(),
        None => common.load()?.output_dir,
    };
    let outcome = chart::render_charts(&dir)?;
    for n in &outcome.notices {
        eprintln!("notice: {n}");
    }
    for p in &outcome.written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn validate(common: &CommonArgs) -> Result<(), Error> {
    let config = common.load()?;
    let cells = config.expand_grid()?;
    println!(
        "ok: {} mode, {} cells, {} replications each, seed {}",
        config.mode.as_str(),
        cells.len(),
        config.replications,
        config.master_seed
    );
    print!("{}", config.to_toml());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run {
            common,
            workers,
            keep_replications,
        } => run(common, *workers, *keep_replications),
        Command::Curves { common, metric } => curves(common, *metric),
        Command::Chart { common } => charts(common),
        Command::Validate { common } => validate(common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
