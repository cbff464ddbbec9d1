use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rayon::prelude::*;
use soccer_core::perception::grid::{render_line_grid, GridSpec};
use soccer_core::Pose2D;
use soccer_core::sim::ScenarioName;
use soccer_sim::challenge::run_challenge;
use soccer_sim::config::{parse_seeds, RunConfig};
use soccer_sim::trace::read_trace;
use soccer_sim::verify::verify_rows;
use soccer_sim::{run, svg, HarnessError, RunOutput, RunReport};

#[derive(Parser)]
#[command(name = "soccer", about = "One-vs-one humanoid soccer simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured scenario once per seed, writing traces and reports.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// `N`, `A..B` (inclusive) or a comma list; overrides `seeds`.
        #[arg(long)]
        seeds: Option<String>,
        /// `section.key=value`, repeatable.
        #[arg(long = "set")]
        overrides: Vec<String>,
        /// Overrides `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a trace as SVG.
    Render {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a trace against the hard invariants.
    Verify {
        #[arg(long)]
        trace: PathBuf,
    },
    /// Challenge trials.
    Challenge {
        #[command(subcommand)]
        kind: ChallengeKind,
    },
    /// Print the default configuration as JSON.
    Defaults,
    /// Dump the line occupancy grid seen from a pose as PGM.
    Grid {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[arg(long, allow_hyphen_values = true)]
        y: f64,
        #[arg(long, allow_hyphen_values = true)]
        theta: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum ChallengeKind {
    /// Ball rolled across the kick spot; the robot times its kick.
    MovingBall {
        /// Defaults to the built-in configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides `scenario.d_ramp`.
        #[arg(long)]
        d_ramp: Option<f64>,
        /// Overrides `scenario.release_speed`.
        #[arg(long)]
        speed: Option<f64>,
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long = "set")]
        overrides: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(config: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
    match config {
        Some(p) => RunConfig::load(p, overrides).with_context(|| format!("loading {}", p.display())),
        None => {
            let text = serde_json::to_string(&RunConfig::default())?;
            Ok(RunConfig::from_json(&text, overrides)?)
        }
    }
}

fn prepare(mut cfg: RunConfig, seeds: Option<&str>, out: Option<PathBuf>) -> Result<RunConfig> {
    if let Some(s) = seeds {
        cfg.seeds = parse_seeds(s)?;
    }
    if let Some(o) = out {
        cfg.output_dir = o;
    }
    std::fs::create_dir_all(&cfg.output_dir).with_context(|| format!("creating {}", cfg.output_dir.display()))?;
    Ok(cfg)
}

/// Writes the trace and report of one seed and returns its summary line.
fn write_outputs(cfg: &RunConfig, seed: u64, mut output: RunOutput) -> Result<(RunReport, String)> {
    let stem = format!("{}_seed{seed}", cfg.scenario.name);
    let trace_path = cfg.output_dir.join(format!("{stem}.csv"));
    std::fs::write(&trace_path, &output.trace)?;
    output.report.trace_file = Some(trace_path.display().to_string());
    let report_path = cfg.output_dir.join(format!("{stem}.json"));
    std::fs::write(&report_path, serde_json::to_string_pretty(&output.report)?)?;
    let r = &output.report;
    let mut line = format!(
        "seed {seed}: score {}-{}, kicks {}, collisions {}, violations {}",
        r.score_home,
        r.score_away,
        r.kicks,
        r.collisions,
        r.violation_count()
    );
    if let Some(c) = &r.challenge {
        line.push_str(&format!(
            ", trigger error {}, contact distance {}",
            c.trigger_error().map_or("none".into(), |e| format!("{e:.3} s")),
            c.contact_distance.map_or("none".into(), |d| format!("{d:.3} m")),
        ));
    }
    Ok((output.report, line))
}

/// Runs every seed (in parallel), prints the summary lines in seed order and
/// returns the reports.
fn run_seeds(
    cfg: &RunConfig,
    one: impl Fn(u64) -> Result<RunOutput, HarnessError> + Sync,
) -> Result<Vec<RunReport>> {
    let results: Vec<Result<(RunReport, String)>> =
        cfg.seeds.par_iter().map(|&seed| write_outputs(cfg, seed, one(seed)?)).collect();
    let mut reports = Vec::new();
    for r in results {
        let (report, line) = r?;
        println!("{line}");
        reports.push(report);
    }
    Ok(reports)
}

fn cmd_run(config: &Path, seeds: Option<&str>, overrides: &[String], out: Option<PathBuf>) -> Result<bool> {
    let cfg = prepare(load(Some(config), overrides)?, seeds, out)?;
    let reports = run_seeds(&cfg, |seed| run(&cfg, seed))?;
    Ok(reports.iter().all(|r| r.violation_count() == 0))
}

fn cmd_moving_ball(
    config: Option<&Path>,
    d_ramp: Option<f64>,
    speed: Option<f64>,
    seeds: Option<&str>,
    overrides: &[String],
    out: Option<PathBuf>,
) -> Result<bool> {
    let mut cfg = load(config, overrides)?;
    cfg.scenario.name = ScenarioName::MovingBallChallenge.name().into();
    if config.is_none() && out.is_none() {
        cfg.output_dir = PathBuf::from("out/moving_ball");
    }
    let cfg = prepare(cfg, seeds, out)?;
    let d_ramp = d_ramp.unwrap_or(cfg.scenario.layout.d_ramp);
    let speed = speed.unwrap_or(cfg.scenario.layout.release_speed);
    let reports = run_seeds(&cfg, |seed| run_challenge(&cfg, seed, d_ramp, speed))?;
    let outcomes: Vec<_> = reports.iter().filter_map(|r| r.challenge.as_ref()).collect();
    let errors: Vec<f64> = outcomes.iter().filter_map(|c| c.trigger_error()).map(f64::abs).collect();
    let in_region = outcomes.iter().filter(|c| c.in_region()).count();
    let goals = outcomes.iter().filter(|c| c.goal).count();
    println!(
        "{} trials: triggered {}, mean |trigger error| {}, contact in kick region {in_region}, goals {goals}",
        outcomes.len(),
        errors.len(),
        if errors.is_empty() {
            "none".into()
        } else {
            format!("{:.4} s", errors.iter().sum::<f64>() / errors.len() as f64)
        }
    );
    Ok(reports.iter().all(|r| r.violation_count() == 0))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            seeds,
            overrides,
            out,
        } => cmd_run(&config, seeds.as_deref(), &overrides, out),
        Command::Challenge {
            kind:
                ChallengeKind::MovingBall {
                    config,
                    d_ramp,
                    speed,
                    seeds,
                    overrides,
                    out,
                },
        } => cmd_moving_ball(config.as_deref(), d_ramp, speed, seeds.as_deref(), &overrides, out),
        Command::Defaults => serde_json::to_string_pretty(&RunConfig::default())
            .map(|s| {
                println!("{s}");
                true
            })
            .map_err(Into::into),
        Command::Render { trace, out } => (|| {
            let rows = read_trace(&trace)?;
            let svg = svg::render_svg(&rows).map_err(anyhow::Error::msg)?;
            std::fs::write(&out, svg)?;
            Ok(true)
        })(),
        Command::Verify { trace } => (|| {
            let rows = read_trace(&trace)?;
            let report = verify_rows(&rows);
            for v in &report.violations {
                println!("line {}: {}: {}", v.line, v.kind, v.detail);
            }
            println!("{} rows, {} violations", report.rows, report.violations.len());
            Ok(report.is_clean())
        })(),
        Command::Grid {
            config,
            x,
            y,
            theta,
            out,
        } => (|| {
            let cfg = load(config.as_deref(), &[])?;
            let spec = GridSpec::default();
            if spec.validate().is_err() {
                bail!("invalid grid spec");
            }
            let grid = render_line_grid(&Pose2D::new(x, y, theta), &cfg.field, &cfg.noise, &spec);
            std::fs::write(&out, grid.to_pgm())?;
            Ok(true)
        })(),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
