//! Command-line front end: scenario solving, parameter sweeps, the
//! closed-form gain evaluator, and error-model curve fitting.
//!
//! Exit codes: 0 success, 2 infeasible scenario, 1 I/O, schema or numerical
//! error. Set `ISAC_EDGE_LOG=debug` for solver iteration traces.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use isac_edge::error::Error;
use isac_edge::model::fit_error_model;
use isac_edge::pipeline::{
    compare, isac_gain_analytic, sweep_with_jobs, write_sweep_csv, CompareMode, SweepParam,
    SweepSpec,
};
use isac_edge::scenario::Scenario;

#[derive(Parser)]
#[command(
    name = "isac-edge",
    version,
    about = "Joint beamforming and time-allocation designer for sensing-assisted edge learning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a scenario and write the full comparison report as JSON.
    Solve {
        /// Scenario JSON file.
        scenario: PathBuf,
        /// Report destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comparison mode: equal_samples, equal_time or equal_error.
        #[arg(long, default_value = "equal_samples")]
        mode: String,
    },
    /// Sweep one parameter over a grid, one comparison row per point (CSV).
    Sweep {
        /// Scenario JSON file.
        scenario: PathBuf,
        /// Parameter to sweep: t_s, b, p, t or target_error.
        #[arg(long)]
        param: String,
        /// Grid: comma-separated values, or start:stop:count[:log|lin].
        #[arg(long)]
        grid: String,
        /// Comparison mode: equal_samples, equal_time or equal_error.
        #[arg(long, default_value = "equal_samples")]
        mode: String,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for independent grid points.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Evaluate the closed-form sensing-dominant time gain for a scenario.
    Gain {
        /// Scenario JSON file.
        scenario: PathBuf,
        /// Override the scenario's sensing time per sample, seconds.
        #[arg(long)]
        t_s: Option<f64>,
    },
    /// Fit error-model hyper-parameters (a, b) to (v, E) rows from a CSV.
    Fit {
        /// CSV file with two columns: sample count, observed error.
        csv: PathBuf,
    },
}

fn parse_grid(text: &str) -> Result<Vec<f64>, Error> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Ok(Vec::new());
    }
    if trimmed.contains(':') {
        let parts: Vec<&str> = trimmed.split(':').collect();
        if parts.len() < 3 || parts.len() > 4 {
            return Err(Error::Scenario(format!(
                "grid `{trimmed}` must be start:stop:count[:log|lin]"
            )));
        }
        let parse = |s: &str| -> Result<f64, Error> {
            s.parse::<f64>()
                .map_err(|_| Error::Scenario(format!("bad grid number `{s}`")))
        };
        let start = parse(parts[0])?;
        let stop = parse(parts[1])?;
        let count: usize = parts[2]
            .parse()
            .map_err(|_| Error::Scenario(format!("bad grid count `{}`", parts[2])))?;
        let log = match parts.get(3).copied().unwrap_or("lin") {
            "lin" => false,
            "log" => true,
            other => return Err(Error::Scenario(format!("bad grid spacing `{other}`"))),
        };
        if count == 0 {
            return Ok(Vec::new());
        }
        if count == 1 {
            return Ok(vec![start]);
        }
        if log && (start <= 0.0 || stop <= 0.0) {
            return Err(Error::Scenario(
                "log grid endpoints must be positive".into(),
            ));
        }
        let points = (0..count)
            .map(|i| {
                let t = i as f64 / (count - 1) as f64;
                if log {
                    (start.ln() + t * (stop.ln() - start.ln())).exp()
                } else {
                    start + t * (stop - start)
                }
            })
            .collect();
        return Ok(points);
    }
    trimmed
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Scenario(format!("bad grid number `{s}`")))
        })
        .collect()
}

fn write_output(path: &Option<PathBuf>, bytes: &[u8]) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, bytes)?,
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn read_fit_points(path: &PathBuf) -> Result<Vec<(f64, f64)>, Error> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)?;
    let mut points = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() < 2 {
            return Err(Error::Scenario(format!("row {idx}: expected two columns")));
        }
        let v = record[0].trim().parse::<f64>();
        let e = record[1].trim().parse::<f64>();
        match (v, e) {
            (Ok(v), Ok(e)) => points.push((v, e)),
            // Tolerate a single header row.
            _ if idx == 0 => continue,
            _ => {
                return Err(Error::Scenario(format!(
                    "row {idx}: non-numeric entry `{}`",
                    record.iter().collect::<Vec<_>>().join(",")
                )))
            }
        }
    }
    Ok(points)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Solve {
            scenario,
            out,
            mode,
        } => {
            let mode: CompareMode = mode.parse()?;
            let scenario = Scenario::from_path(&scenario)?;
            let (cfg, channels) = scenario.build()?;
            let report = compare(&cfg, &channels, mode)?;
            let mut text = serde_json::to_string_pretty(&report)?;
            text.push('\n');
            write_output(&out, text.as_bytes())?;
        }
        Command::Sweep {
            scenario,
            param,
            grid,
            mode,
            out,
            jobs,
        } => {
            let spec = SweepSpec {
                param: param.parse::<SweepParam>()?,
                grid: parse_grid(&grid)?,
                mode: mode.parse()?,
            };
            let scenario = Scenario::from_path(&scenario)?;
            let (cfg, channels) = scenario.build()?;
            let rows = sweep_with_jobs(&cfg, &channels, &spec, jobs.max(1))?;
            let mut bytes = Vec::new();
            write_sweep_csv(&rows, &mut bytes)?;
            write_output(&out, &bytes)?;
        }
        Command::Gain { scenario, t_s } => {
            let scenario = Scenario::from_path(&scenario)?;
            let (mut cfg, channels) = scenario.build()?;
            if let Some(t) = t_s {
                cfg.sensing_time_per_sample_s = t;
            }
            let gain = isac_gain_analytic(&cfg, &channels.h);
            let mrc = cfg.max_power_w * channels.h.norm_sq() / cfg.noise_power_w;
            let x = cfg.sensing_time_per_sample_s * cfg.bandwidth_hz * (1.0 + mrc).log2()
                / cfg.sample_volume_bits;
            println!(
                "{}",
                serde_json::json!({
                    "t_s": cfg.sensing_time_per_sample_s,
                    "x": x,
                    "gain": gain,
                })
            );
        }
        Command::Fit { csv } => {
            let points = read_fit_points(&csv)?;
            let (a, b) = fit_error_model(&points)?;
            println!("{a} {b}");
        }
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter("ISAC_EDGE_LOG")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::TaskInfeasible { .. } => 2,
                _ => 1,
            };
            std::process::exit(code);
        }
    }
}
