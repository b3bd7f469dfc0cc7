//! `carl`: command-line driver for the viscous CARL solvers.
//!
//! Every subcommand reads the same config file, applies its own flags on
//! top, writes CSV tables and a `<command>.json` metadata record into the
//! output directory, and exits 0 on success, 1 on solver failure and 2 on
//! usage or configuration errors.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use config::{ConfigError, RegimeName, RunConfig, SweepName};
use output::{Run, OUT_DIR_ENV};

#[derive(Parser)]
#[command(
    name = "carl",
    version,
    about = "Collective atomic recoil lasing with friction and diffusion"
)]
struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides CARL_OUT_DIR and `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct Point {
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long = "D")]
    d: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Growth rate and frequency shift of the uniform state at one (κ, D).
    Stability(Point),
    /// Threshold diffusion for a list of κ, and the laboratory threshold ρ.
    Threshold {
        /// Replaces `threshold.kappas`; repeatable.
        #[arg(long)]
        kappa: Vec<f64>,
    },
    /// Integrate the Fokker-Planck mode hierarchy.
    SimulateFp {
        #[command(flatten)]
        point: Point,
        #[arg(long)]
        n_max: Option<usize>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        seed_field: Option<f64>,
    },
    /// Simulate the particle ensemble (overdamped unless --gamma-bar > 0).
    SimulateSde {
        #[command(flatten)]
        point: Point,
        #[arg(long)]
        particles: Option<usize>,
        #[arg(long)]
        dtau: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        gamma_bar: Option<f64>,
        #[arg(long)]
        seed_field: Option<f64>,
    },
    /// Exact rotating steady state.
    Steady(Point),
    /// Exact and Gaussian-ansatz steady states along a D grid.
    SweepD {
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long)]
        d_min: Option<f64>,
        #[arg(long)]
        d_max: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Steady response as the pump is scanned through threshold.
    Ramp {
        #[arg(long)]
        ratio_min: Option<f64>,
        #[arg(long)]
        ratio_max: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        temperature_uk: Option<f64>,
    },
    /// Instability region in the (κ, D) plane.
    Fig1,
    /// Growth and saturation at κ = 0.075, D = 1.49.
    Fig2,
    /// Steady state against D at κ = 0.1.
    Fig3,
    /// Pump ramp for the Rb-87 ring cavity.
    Fig4,
    /// Fit threshold scaling exponents in the good- and bad-cavity limits.
    VerifyScaling {
        #[arg(long, value_enum)]
        sweep: Option<SweepName>,
        #[arg(long, value_enum)]
        regime: Option<RegimeName>,
    },
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn apply_point(cfg: &mut RunConfig, p: Point) {
    set(&mut cfg.model.kappa, p.kappa);
    set(&mut cfg.model.d, p.d);
}

/// Applies subcommand flags, or the frozen parameters of a figure.
fn resolve(cfg: &mut RunConfig, command: Command) -> &'static str {
    let name = match &command {
        Command::Stability(_) => "stability",
        Command::Threshold { .. } => "threshold",
        Command::SimulateFp { .. } => "simulate-fp",
        Command::SimulateSde { .. } => "simulate-sde",
        Command::Steady(_) => "steady",
        Command::SweepD { .. } => "sweep-d",
        Command::Ramp { .. } => "ramp",
        Command::Fig1 => "fig1",
        Command::Fig2 => "fig2",
        Command::Fig3 => "fig3",
        Command::Fig4 => "fig4",
        Command::VerifyScaling { .. } => "verify-scaling",
    };
    let defaults = RunConfig::default();
    match command {
        Command::Stability(p) => {
            apply_point(cfg, p);
        }
        Command::Steady(p) => {
            apply_point(cfg, p);
        }
        Command::Threshold { kappa } => {
            if !kappa.is_empty() {
                cfg.threshold.kappas = kappa;
            }
        }
        Command::SimulateFp {
            point,
            n_max,
            dt,
            t_end,
            seed_field,
        } => {
            apply_point(cfg, point);
            set(&mut cfg.fp.n_max, n_max);
            set(&mut cfg.fp.dt, dt);
            set(&mut cfg.fp.t_end, t_end);
            set(&mut cfg.fp.seed_field, seed_field);
        }
        Command::SimulateSde {
            point,
            particles,
            dtau,
            t_end,
            gamma_bar,
            seed_field,
        } => {
            apply_point(cfg, point);
            set(&mut cfg.sde.particles, particles);
            set(&mut cfg.sde.dtau, dtau);
            set(&mut cfg.sde.t_end, t_end);
            set(&mut cfg.sde.gamma_bar, gamma_bar);
            set(&mut cfg.sde.seed_field, seed_field);
        }
        Command::SweepD {
            kappa,
            d_min,
            d_max,
            points,
        } => {
            set(&mut cfg.sweep.kappa, kappa);
            set(&mut cfg.sweep.d_min, d_min);
            set(&mut cfg.sweep.d_max, d_max);
            set(&mut cfg.sweep.points, points);
        }
        Command::Ramp {
            ratio_min,
            ratio_max,
            points,
            temperature_uk,
        } => {
            set(&mut cfg.ramp.ratio_min, ratio_min);
            set(&mut cfg.ramp.ratio_max, ratio_max);
            set(&mut cfg.ramp.points, points);
            set(&mut cfg.physical.temperature_uk, temperature_uk);
        }
        Command::VerifyScaling { sweep, regime } => {
            set(&mut cfg.scaling.sweep, sweep);
            set(&mut cfg.scaling.regime, regime);
        }
        // Figures pin the physics to the published parameters; numerical
        // settings still come from the config.
        Command::Fig1 => {
            cfg.map.kappa_min = defaults.map.kappa_min;
            cfg.map.kappa_max = defaults.map.kappa_max;
            cfg.map.d_min = defaults.map.d_min;
            cfg.map.d_max = defaults.map.d_max;
        }
        Command::Fig2 => {
            cfg.model = defaults.model.clone();
            cfg.fp.seed_field = defaults.fp.seed_field;
        }
        Command::Fig3 => {
            cfg.sweep.kappa = defaults.sweep.kappa;
            cfg.sweep.d_min = defaults.sweep.d_min;
            cfg.sweep.d_max = defaults.sweep.d_max;
        }
        Command::Fig4 => {
            cfg.physical = defaults.physical.clone();
        }
    }
    name
}

fn execute(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => config::parse_config(path)?,
        None => RunConfig::default(),
    };
    set(&mut cfg.seed, cli.seed);
    let name = resolve(&mut cfg, cli.command);
    cfg.validate()?;

    let dir = cli
        .out
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(&cfg.output_dir));
    let mut run = Run::start(name, &dir)?;
    match name {
        "stability" => commands::stability(&cfg, &mut run)?,
        "threshold" => commands::threshold(&cfg, &mut run)?,
        "simulate-fp" => commands::simulate_fp(&cfg, &mut run)?,
        "simulate-sde" => commands::simulate_sde(&cfg, &mut run)?,
        "steady" => commands::steady_state(&cfg, &mut run)?,
        "sweep-d" => commands::sweep(&cfg, &mut run)?,
        "ramp" => commands::ramp(&cfg, &mut run)?,
        "fig1" => commands::fig1(&cfg, &mut run)?,
        "fig2" => commands::fig2(&cfg, &mut run)?,
        "fig3" => commands::fig3(&cfg, &mut run)?,
        "fig4" => commands::fig4(&cfg, &mut run)?,
        "verify-scaling" => commands::verify_scaling(&cfg, &mut run)?,
        other => unreachable!("unmapped subcommand {other}"),
    }
    let meta = run.finish(&cfg)?;
    eprintln!("wrote {}", meta.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<ConfigError>().is_some() => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
