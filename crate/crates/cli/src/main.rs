use std::error::Error;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use canopy::bench::{
    plot_report, run_benchmark, run_long_benchmark, run_subsampling_study, BenchmarkRun,
    BenchmarkSpec, SubsampleSpec,
};
use canopy::goal_selection::StrategyKind;
use canopy::sim::{run_trial, write_transcript, TrialConfig, TrialStatus};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

type Result<T> = std::result::Result<T, Box<dyn Error>>;

/// Exit code of a run in which the safety audit flagged a trial.
const AUDIT_EXIT: u8 = 2;

#[derive(Parser)]
#[command(
    name = "canopy",
    version,
    about = "Forest benchmarks for conservative local trajectory optimization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Small-map benchmark over densities and strategies.
    Bench(BenchArgs),
    /// 50×50 m benchmark with the success and timing report.
    LongBench(BenchArgs),
    /// Gain estimation error of frustum subsampling.
    SubsampleStudy(StudyArgs),
    /// SVG plots from a benchmark directory.
    Plot(PlotArgs),
    /// One trial with its cycle transcript.
    Trial(TrialArgs),
}

#[derive(Args)]
struct BenchArgs {
    /// TOML file; its keys override the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    densities: Option<Vec<f64>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    strategies: Option<Vec<StrategyKind>>,
    #[arg(long)]
    max_replans: Option<usize>,
    /// Worker threads (default: cores - 1).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, env = "CANOPY_OUT")]
    output: Option<PathBuf>,
    #[arg(long)]
    base_seed: Option<u64>,
    /// Skip the per-trial overlay geometry.
    #[arg(long)]
    no_overlays: bool,
    /// Render the plots into `<output>/plots` afterwards.
    #[arg(long)]
    plot: bool,
}

#[derive(Args)]
struct StudyArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    maps: Option<usize>,
    #[arg(long)]
    poses_per_map: Option<usize>,
    #[arg(long)]
    density: Option<f64>,
    #[arg(long)]
    base_seed: Option<u64>,
    #[arg(long, env = "CANOPY_OUT")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    /// Directory holding the benchmark CSV files.
    report: PathBuf,
    /// Destination (default: `<report>/plots`).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct TrialArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    density: Option<f64>,
    #[arg(long)]
    strategy: Option<StrategyKind>,
    #[arg(long)]
    max_replans: Option<usize>,
    /// Use the 50×50 m world.
    #[arg(long)]
    long: bool,
    #[arg(long, env = "CANOPY_OUT", default_value = "trial_out")]
    output: PathBuf,
}

/// Replaces the fields of `base` that appear in the TOML file at `path`.
fn apply_config<T: Serialize + DeserializeOwned>(base: T, path: Option<&Path>) -> Result<T> {
    let Some(path) = path else {
        return Ok(base);
    };
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let overrides: toml::Table =
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut merged = toml::Table::try_from(&base)?;
    merge(&mut merged, overrides);
    Ok(merged
        .try_into()
        .map_err(|e| format!("{}: {e}", path.display()))?)
}

fn merge(base: &mut toml::Table, overrides: toml::Table) {
    for (key, value) in overrides {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

fn bench_spec(args: &BenchArgs, mut spec: BenchmarkSpec) -> Result<BenchmarkSpec> {
    if let Some(d) = &args.densities {
        spec.densities = d.clone();
    }
    if let Some(t) = args.trials {
        spec.trials = t;
    }
    if let Some(s) = &args.strategies {
        spec.strategies = s.clone();
    }
    if let Some(m) = args.max_replans {
        spec.max_replans = m;
    }
    if args.workers.is_some() {
        spec.workers = args.workers;
    }
    if let Some(o) = &args.output {
        spec.output_dir = o.clone();
    }
    if let Some(b) = args.base_seed {
        spec.base_seed = b;
    }
    if args.no_overlays {
        spec.overlays = false;
    }
    apply_config(spec, args.config.as_deref())
}

fn summarize(run: &BenchmarkRun, spec: &BenchmarkSpec) {
    eprintln!(
        "{} trials on {} workers -> {}",
        run.results.len(),
        spec.worker_count(),
        spec.output_dir.display()
    );
    for row in &run.aggregate {
        let length = row
            .mean_path_length
            .map_or("-".into(), |l| format!("{l:.2} m"));
        eprintln!(
            "  density {:<4} {:<9} success {:>3}/{:<3} joint path {length}",
            row.density, row.strategy, row.successes, row.trials
        );
    }
}

fn finish_bench(run: &BenchmarkRun, spec: &BenchmarkSpec, plot: bool) -> Result<ExitCode> {
    summarize(run, spec);
    if plot {
        let plots = plot_report(&spec.output_dir, &spec.output_dir.join("plots"))?;
        eprintln!("{} plot files", plots.files.len());
    }
    let audits = run.audit_failures();
    if audits > 0 {
        eprintln!("error: {audits} trials failed the safety audit");
        return Ok(ExitCode::from(AUDIT_EXIT));
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Bench(args) => {
            let spec = bench_spec(&args, BenchmarkSpec::default())?;
            let run = run_benchmark(&spec)?;
            finish_bench(&run, &spec, args.plot)
        }
        Command::LongBench(args) => {
            let spec = bench_spec(&args, BenchmarkSpec::long())?;
            let (run, report) = run_long_benchmark(&spec)?;
            println!("{report}");
            finish_bench(&run, &spec, args.plot)
        }
        Command::SubsampleStudy(args) => {
            let mut spec = SubsampleSpec::default();
            if let Some(m) = args.maps {
                spec.maps = m;
            }
            if let Some(p) = args.poses_per_map {
                spec.poses_per_map = p;
            }
            if let Some(d) = args.density {
                spec.density = d;
            }
            if let Some(b) = args.base_seed {
                spec.base_seed = b;
            }
            if let Some(o) = args.output {
                spec.output_dir = o;
            }
            let spec = apply_config(spec, args.config.as_deref())?;
            let study = run_subsampling_study(&spec)?;
            println!("fraction,samples,median_error,p95_error,max_error");
            for s in &study.summary {
                println!(
                    "{},{},{:.5},{:.5},{:.5}",
                    s.fraction, s.samples, s.median_error, s.p95_error, s.max_error
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Plot(args) => {
            let out = args.output.unwrap_or_else(|| args.report.join("plots"));
            let plots = plot_report(&args.report, &out)?;
            for f in &plots.files {
                println!("{}", f.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Trial(args) => {
            let mut config = TrialConfig::default();
            if args.long {
                config.world = canopy::sim::ForestSpec::long();
            }
            if let Some(s) = args.seed {
                config.seed = s;
            }
            if let Some(d) = args.density {
                config.density = d;
            }
            if let Some(s) = args.strategy {
                config.strategy = s;
            }
            if let Some(m) = args.max_replans {
                config.max_replans = m;
            }
            let config = apply_config(config, args.config.as_deref())?;
            let outcome = run_trial(&config)?;
            fs::create_dir_all(&args.output)
                .map_err(|e| format!("{}: {e}", args.output.display()))?;
            let transcript = args.output.join("transcript.jsonl");
            write_transcript(
                BufWriter::new(File::create(&transcript)?),
                &outcome.transcript,
            )?;
            fs::write(args.output.join("config.toml"), toml::to_string(&config)?)?;
            let result = serde_json::to_string_pretty(&outcome.result)?;
            fs::write(args.output.join("result.json"), &result)?;
            println!("{result}");
            if outcome.result.status == TrialStatus::AuditFailure {
                return Ok(ExitCode::from(AUDIT_EXIT));
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
