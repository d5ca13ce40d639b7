//! Command-line harness: train policies, run survivability campaigns,
//! verify trajectory logs, and export gait curves.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use quadgait::ars::{train, write_train_log, TrainMode};
use quadgait::eval::{run_eval_campaign, EvalCampaignSpec};
use quadgait::gait::{
    compose_foot_targets, GaitParams, Leg, MotionCommand, PhaseClock, YawMemory,
};
use quadgait::kinematics::default_stand_pose;
use quadgait::policy::{load_policy_file, save_policy_file, PolicyMatrix};
use quadgait::rollout::{episode_rollout, PolicySource, TrajectoryLog};
use quadgait::{Config, Error};

#[derive(Parser)]
#[command(name = "quadgait", version, about = "Quadruped trot-gait toolkit")]
struct Cli {
    /// Configuration file (TOML); defaults apply for missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed for all derived random streams.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    /// Randomized dynamics and terrain each epoch / trial.
    D2,
    /// One fixed nominal environment.
    Fixed,
    /// Unaugmented open-loop gait (evaluation only).
    Openloop,
    /// Zero policy matrix through the full pipeline (evaluation only).
    Zero,
}

#[derive(Subcommand)]
enum Command {
    /// Train a gait-modulation policy.
    Train {
        #[arg(long, value_enum, default_value_t = Mode::D2)]
        mode: Mode,
        #[arg(long, default_value_t = 200)]
        epochs: usize,
        /// Warm-start checkpoint; zero policy when absent.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Run a survivability evaluation campaign.
    Eval {
        #[arg(long, value_enum, default_value_t = Mode::Openloop)]
        mode: Mode,
        /// Policy checkpoint; required unless mode is openloop or zero.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        max_steps: Option<usize>,
        /// Force flat terrain (mesh magnitude zero).
        #[arg(long, default_value_t = false)]
        flat: bool,
        /// Save one trajectory log for the first trial.
        #[arg(long, default_value_t = false)]
        log_first_trial: bool,
    },
    /// Recompose gait targets from a trajectory log and report deviation.
    Replay {
        log: PathBuf,
        /// Maximum acceptable deviation, meters.
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
    },
    /// Sample the planar gait curves and composed foot targets as CSV.
    ExportGait {
        #[arg(long, default_value_t = 0.035)]
        l_span: f64,
        #[arg(long, default_value_t = 0.04)]
        psi: f64,
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
        #[arg(long, default_value_t = 0.0)]
        rho: f64,
        #[arg(long, default_value_t = 0.0)]
        omega_bar: f64,
        #[arg(long, default_value_t = 400)]
        samples: usize,
    },
    /// Print the effective configuration as TOML.
    PrintConfig,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Parse { .. } | Error::Domain(_) => 2,
        Error::Io(_) => 3,
        Error::Diverged { .. } | Error::TerrainQuery { .. } => 4,
        Error::OutOfReach { .. } => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err.downcast_ref::<Error>() {
                Some(e) => ExitCode::from(exit_code_for(e)),
                None => ExitCode::FAILURE,
            }
        }
    }
}

fn load_config(path: &Option<PathBuf>) -> anyhow::Result<Config> {
    Ok(match path {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    })
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let config = load_config(&cli.config)?;
    match cli.command {
        Command::Train {
            mode,
            epochs,
            checkpoint,
        } => cmd_train(&config, mode, epochs, checkpoint, cli.seed, &cli.out),
        Command::Eval {
            mode,
            checkpoint,
            trials,
            max_steps,
            flat,
            log_first_trial,
        } => cmd_eval(
            &config,
            mode,
            checkpoint,
            trials,
            max_steps,
            flat,
            log_first_trial,
            cli.seed,
            &cli.out,
        ),
        Command::Replay { log, tolerance } => cmd_replay(&log, tolerance),
        Command::ExportGait {
            l_span,
            psi,
            delta,
            rho,
            omega_bar,
            samples,
        } => cmd_export_gait(&config, l_span, psi, delta, rho, omega_bar, samples, &cli.out),
        Command::PrintConfig => {
            print!("{}", config.to_toml());
            Ok(())
        }
    }
}

fn cmd_train(
    config: &Config,
    mode: Mode,
    epochs: usize,
    checkpoint: Option<PathBuf>,
    seed: u64,
    out: &Path,
) -> anyhow::Result<()> {
    let train_mode = match mode {
        Mode::D2 => TrainMode::Randomized,
        Mode::Fixed => TrainMode::Fixed,
        Mode::Openloop | Mode::Zero => {
            anyhow::bail!("training requires --mode d2 or --mode fixed")
        }
    };
    let theta0 = match checkpoint {
        Some(path) => load_policy_file(&path)?,
        None => PolicyMatrix::zeros(),
    };
    let params = config.to_episode_params();
    let ars = config.to_ars_config();
    let dist = config.to_d2_distribution();

    println!(
        "training: mode={mode:?} epochs={epochs} seed={seed} ({} rollouts/epoch, {} steps each)",
        2 * ars.directions + 1,
        ars.episode_steps
    );
    let outcome = train(theta0, train_mode, epochs, seed, &params, &ars, &dist)?;

    std::fs::create_dir_all(out)?;
    let ckpt_path = out.join("checkpoint.txt");
    save_policy_file(&outcome.theta, &ckpt_path)?;
    let log_path = out.join("train_log.csv");
    let f = std::fs::File::create(&log_path)?;
    write_train_log(&outcome.log, seed, std::io::BufWriter::new(f))?;

    if let (Some(first), Some(last)) = (outcome.log.first(), outcome.log.last()) {
        println!(
            "evaluated return: epoch 0 {:.4} -> epoch {} {:.4}",
            first.evaluated_return, last.epoch, last.evaluated_return
        );
    }
    println!("checkpoint: {}", ckpt_path.display());
    println!("training log: {}", log_path.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_eval(
    config: &Config,
    mode: Mode,
    checkpoint: Option<PathBuf>,
    trials: Option<usize>,
    max_steps: Option<usize>,
    flat: bool,
    log_first_trial: bool,
    seed: u64,
    out: &Path,
) -> anyhow::Result<()> {
    let source = match (mode, &checkpoint) {
        (Mode::Openloop, _) => PolicySource::OpenLoop,
        (Mode::Zero, _) => PolicySource::ZeroPolicy,
        (_, Some(path)) => PolicySource::Matrix(Box::new(load_policy_file(path)?)),
        (_, None) => anyhow::bail!("--mode {mode:?} needs --checkpoint"),
    };
    let spec = EvalCampaignSpec {
        trials: trials.unwrap_or(config.eval.trials),
        max_steps: max_steps.unwrap_or(config.eval.max_steps),
        buckets: (config.eval.buckets[0], config.eval.buckets[1]),
        master_seed: seed,
        force_flat: flat,
    };
    let dist = config.to_d2_distribution();
    let params = config.to_episode_params();

    println!(
        "campaign: {} trials x {} steps, seed {}",
        spec.trials, spec.max_steps, seed
    );
    let report = run_eval_campaign(&source, &spec, &dist, &params)?;
    print!("{}", report.format_table());
    println!(
        "survival rate: {:.1}% ({}/{})",
        100.0 * report.survival_rate(),
        report.survived(),
        report.trials()
    );

    std::fs::create_dir_all(out)?;
    let trials_path = out.join("campaign_trials.csv");
    report.write_trials_csv(std::io::BufWriter::new(std::fs::File::create(&trials_path)?))?;
    let buckets_path = out.join("campaign_buckets.csv");
    report.write_bucket_csv(std::io::BufWriter::new(std::fs::File::create(
        &buckets_path,
    )?))?;
    println!("per-trial records: {}", trials_path.display());

    if log_first_trial {
        let mut log = TrajectoryLog::default();
        let first = &report.records[0];
        episode_rollout(
            &source,
            &first.sample,
            &params,
            first.seed,
            spec.max_steps,
            Some(&mut log),
        )?;
        let log_path = out.join("trial0_trajectory.csv");
        log.save(&log_path)?;
        println!("trajectory log: {}", log_path.display());
    }
    Ok(())
}

fn cmd_replay(log_path: &Path, tolerance: f64) -> anyhow::Result<()> {
    let log = TrajectoryLog::load(log_path)?;
    let deviation = log.replay_max_deviation()?;
    println!(
        "replayed {} steps, max foot-target deviation {deviation:.3e} m",
        log.rows.len()
    );
    if deviation > tolerance {
        anyhow::bail!("deviation {deviation:.3e} exceeds tolerance {tolerance:.3e}");
    }
    println!("log is consistent with the gait generator");
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_export_gait(
    config: &Config,
    l_span: f64,
    psi: f64,
    delta: f64,
    rho: f64,
    omega_bar: f64,
    samples: usize,
    out: &Path,
) -> anyhow::Result<()> {
    use std::io::Write;

    let params = GaitParams::new(psi, delta)?;
    let cmd = MotionCommand::new(rho, omega_bar, l_span)?;
    let gait = &config.gait;
    let clock = PhaseClock::new(gait.t_swing, gait.t_stance())?;
    let stance = default_stand_pose(&config.to_robot_geometry())?;
    let mut memory = YawMemory::new();

    std::fs::create_dir_all(out)?;
    let path = out.join("gait_curves.csv");
    let mut w = std::io::BufWriter::new(std::fs::File::create(&path)?);

    write!(w, "t,s_fl,planar_q,planar_z")?;
    for leg in Leg::ALL {
        let l = leg.label().to_lowercase();
        write!(w, ",{l}_x,{l}_y,{l}_z")?;
    }
    writeln!(w)?;

    let t_stride = clock.t_stride();
    for i in 0..samples {
        let t = t_stride * i as f64 / samples as f64;
        let (s, _) = quadgait::gait::leg_phase(&clock, Leg::FrontLeft, t);
        let planar = quadgait::gait::trajectory_point(s, l_span, &params)?;
        let targets = compose_foot_targets(&cmd, &params, &clock, &stance, &mut memory, t)?;
        write!(w, "{t},{s},{},{}", planar.q, planar.z)?;
        for leg in Leg::ALL {
            let p = targets.get(leg);
            write!(w, ",{},{},{}", p.x, p.y, p.z)?;
        }
        writeln!(w)?;
    }
    println!("gait curves: {}", path.display());
    Ok(())
}
