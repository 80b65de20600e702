use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use mht_bench::{run_scenario, scaling_sweep, write_run, write_sweep, BenchError, RunOptions};
use mht_radar::{ConfigError, ScenarioConfig};

/// Runs a radar scenario through the tracker, or sweeps target counts.
#[derive(Debug, Parser)]
#[command(name = "mht-bench", version)]
struct Args {
    /// TOML scenario file; flags below override its values.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    targets: Option<usize>,
    #[arg(long)]
    scans: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// Detection probability.
    #[arg(long)]
    pd: Option<f64>,
    /// Expected false alarms per scan.
    #[arg(long)]
    clutter: Option<f64>,
    /// Chi-square gate threshold.
    #[arg(long)]
    gate: Option<f64>,
    #[arg(long)]
    prune_k: Option<usize>,
    #[arg(long)]
    prune_ratio: Option<f64>,
    /// Facts only, no events.
    #[arg(long)]
    no_events: bool,
    /// Write zero wall times so repeated runs give identical files.
    #[arg(long)]
    no_timing: bool,
    /// Scans excluded from timing statistics.
    #[arg(long, default_value_t = 5)]
    warmup: usize,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Comma-separated target counts; switches to a scaling sweep.
    #[arg(long, value_delimiter = ',')]
    sweep: Option<Vec<usize>>,
    /// Repetitions per sweep count.
    #[arg(long, default_value_t = 3)]
    reps: usize,
}

fn config(args: &Args) -> Result<ScenarioConfig, ConfigError> {
    let mut c = match &args.scenario {
        Some(path) => ScenarioConfig::from_file(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(v) = args.targets {
        c.target_count = v;
    }
    if let Some(v) = args.scans {
        c.duration = v;
    }
    if let Some(v) = args.seed {
        c.rng_seed = v;
    }
    if let Some(v) = args.pd {
        c.detection_probability = v;
    }
    if let Some(v) = args.clutter {
        c.false_alarm_rate = v;
    }
    if let Some(v) = args.gate {
        c.gate_threshold = v;
    }
    if let Some(v) = args.prune_k {
        c.prune_k = Some(v);
    }
    if let Some(v) = args.prune_ratio {
        c.prune_ratio = Some(v);
    }
    if args.no_events {
        c.emit_events = false;
    }
    c.validate()?;
    Ok(c)
}

fn run(args: &Args, config: &ScenarioConfig) -> Result<(), BenchError> {
    if let Some(counts) = &args.sweep {
        let rows = scaling_sweep(config, counts, args.reps, args.warmup)?;
        let path = args.out_dir.join("sweep.csv");
        write_sweep(&rows, &path)?;
        for r in &rows {
            println!(
                "targets {:>4}  mean {:>10.1} us  std {:>10.1} us  max cluster leaves {}",
                r.target_count, r.mean_time_micros, r.stddev_micros, r.max_cluster_leaves
            );
        }
        println!("wrote {}", path.display());
        return Ok(());
    }
    let options = RunOptions {
        warmup: args.warmup,
        timing: !args.no_timing,
    };
    let report = run_scenario(config, options)?;
    write_run(&report, &args.out_dir)?;
    let s = report.summary;
    println!(
        "{} scans  mean {:.1} us  std {:.1} us  peak leaves {}  confirmed tracks {}",
        report.rows.len(),
        s.mean_time_micros,
        s.stddev_micros,
        s.peak_leaves,
        s.confirmed_tracks
    );
    println!("wrote {}", args.out_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    let config = match config(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&args, &config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
