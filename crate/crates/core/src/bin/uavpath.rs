use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use uavpath::eval::{evaluate, export_trajectories, read_trajectories, Policy, PolicySet};
use uavpath::mdp::{EncoderKind, FeatureLayout};
use uavpath::plot::write_episode_svg;
use uavpath::selfcheck::{self, SelfcheckOptions};
use uavpath::trainer::{
    retrain_t1, save_policies, train_jammer, train_single, train_swarm, write_trace, ScenarioKind, TrainRun,
};
use uavpath::{Error, NetworkParams, Preset, ScenarioConfig};

const EXIT_USAGE: u8 = 2;
const EXIT_CONFIG: u8 = 3;
const EXIT_IO: u8 = 4;
const EXIT_INTERNAL: u8 = 1;

#[derive(Parser, Debug)]
#[command(name = "uavpath", version, about = "UAV data-collection path planning: simulate, train, evaluate, plot")]
struct Cli {
    /// Directory for outputs whose path is not given explicitly.
    #[arg(long, global = true, env = "UAVPATH_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a complete scenario config from a preset.
    GenScenario {
        #[arg(long, value_enum)]
        preset: PresetArg,
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
        devices: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a policy and write checkpoint(s) plus a CSV trace.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        scenario_kind: KindArg,
        #[arg(long, default_value_t = 2000)]
        episodes: usize,
        #[arg(long)]
        out_checkpoint: Option<PathBuf>,
        /// T1 policy to play against (jammer); warm start (retrain).
        #[arg(long)]
        frozen_t1: Option<PathBuf>,
        /// Jammer policy to play against (retrain).
        #[arg(long)]
        frozen_jammer: Option<PathBuf>,
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Overrides the config and training seeds.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0)]
        checkpoint_every: usize,
    },
    /// Evaluate frozen policies and report SR, DR, CR and APL.
    Eval {
        #[arg(long)]
        config: PathBuf,
        /// T1 checkpoint(s) and optionally a jammer checkpoint; roles follow input width.
        #[arg(long, num_args = 1..)]
        checkpoints: Vec<PathBuf>,
        /// Controller for UAVs without a checkpoint.
        #[arg(long, value_enum, default_value_t = BaselineArg::Straight)]
        baseline: BaselineArg,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        metrics_out: Option<PathBuf>,
        #[arg(long)]
        records_out: Option<PathBuf>,
        #[arg(long)]
        traj_out: Option<PathBuf>,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
        workers: u32,
    },
    /// Draw one episode of a trajectory file as SVG.
    Plot {
        #[arg(long)]
        traj: PathBuf,
        #[arg(long, default_value_t = 0)]
        episode: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the fast invariant suite.
    Selfcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, hide = true)]
        corrupt_gradient: bool,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PresetArg {
    Single,
    Swarm2,
    Swarm4,
    Jammed,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    Single,
    Swarm,
    Jammer,
    Retrain,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BaselineArg {
    Straight,
    Hover,
    Random,
}

enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type CliResult = std::result::Result<u8, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn or_default(path: Option<PathBuf>, out_dir: &Path, name: &str) -> PathBuf {
    path.unwrap_or_else(|| out_dir.join(name))
}

fn gen_scenario(preset: PresetArg, devices: u32, seed: u64, out: PathBuf) -> CliResult {
    let preset = match preset {
        PresetArg::Single => Preset::Single,
        PresetArg::Swarm2 => Preset::Swarm2,
        PresetArg::Swarm4 => Preset::Swarm4,
        PresetArg::Jammed => Preset::Jammed,
    };
    let mut c = ScenarioConfig::preset(preset, devices as usize)?;
    c.seed = seed;
    c.save(&out)?;
    println!("wrote {}", out.display());
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn train(
    config: &Path,
    kind: KindArg,
    episodes: usize,
    out: PathBuf,
    frozen_t1: Option<PathBuf>,
    frozen_jammer: Option<PathBuf>,
    trace: PathBuf,
    seed: Option<u64>,
    checkpoint_every: usize,
) -> CliResult {
    if episodes == 0 {
        return Err(usage("--episodes must be >= 1"));
    }
    let mut c = ScenarioConfig::load(config)?;
    if let Some(s) = seed {
        c.seed = s;
        c.train.seed = s;
    }
    let kind = match kind {
        KindArg::Single => ScenarioKind::Single,
        KindArg::Swarm => ScenarioKind::Swarm,
        KindArg::Jammer => ScenarioKind::JammerTrain,
        KindArg::Retrain => ScenarioKind::T1Retrain,
    };
    let mut run = TrainRun::new(kind, c, episodes);
    run.checkpoint_every = checkpoint_every;
    run.checkpoint_path = Some(out.clone());
    let outcome = match kind {
        ScenarioKind::Single => train_single(&run)?,
        ScenarioKind::Swarm => train_swarm(&run)?,
        ScenarioKind::JammerTrain => {
            let p = frozen_t1.ok_or_else(|| usage("jammer training requires --frozen-t1"))?;
            train_jammer(&run, &NetworkParams::load(&p)?)?
        }
        ScenarioKind::T1Retrain => {
            let p = frozen_jammer.ok_or_else(|| usage("T1 retraining requires --frozen-jammer"))?;
            let warm = frozen_t1.map(|p| NetworkParams::load(&p)).transpose()?;
            retrain_t1(&run, &NetworkParams::load(&p)?, warm.as_ref())?
        }
    };
    let paths = save_policies(&out, &outcome.policies)?;
    write_trace(&trace, &outcome.trace)?;
    if let Some(last) = outcome.trace.last() {
        println!(
            "trained {} episodes ({} env steps): running SR {:.3} DR {:.3} CR {:.3}",
            outcome.trace.len(),
            outcome.env_steps,
            last.running_sr,
            last.running_dr,
            last.running_cr
        );
    }
    for p in paths {
        println!("wrote {}", p.display());
    }
    println!("wrote {}", trace.display());
    Ok(0)
}

fn baseline(b: BaselineArg) -> Policy {
    match b {
        BaselineArg::Straight => Policy::StraightToGoal,
        BaselineArg::Hover => Policy::Hover,
        BaselineArg::Random => Policy::Random,
    }
}

fn policies_from(config: &ScenarioConfig, checkpoints: &[PathBuf], fallback: BaselineArg) -> std::result::Result<PolicySet, Failure> {
    let jammer_width = config.jammer.then(|| FeatureLayout::new(EncoderKind::Jammer, config).len);
    let mut t1 = Vec::new();
    let mut jammer = None;
    for p in checkpoints {
        let net = NetworkParams::load(p)?;
        if Some(net.input_width()) == jammer_width {
            if jammer.is_some() {
                return Err(usage("more than one jammer checkpoint given"));
            }
            jammer = Some(Policy::Network(net));
        } else {
            t1.push(Policy::Network(net));
        }
    }
    if t1.is_empty() {
        t1.push(baseline(fallback));
    }
    if t1.len() != 1 && t1.len() != config.n_t1 {
        return Err(usage(format!("give 1 or {} T1 checkpoints, got {}", config.n_t1, t1.len())));
    }
    let jammer = if config.jammer {
        Some(jammer.unwrap_or(baseline(fallback)))
    } else {
        None
    };
    Ok(PolicySet { t1, jammer })
}

#[allow(clippy::too_many_arguments)]
fn eval(
    config: &Path,
    checkpoints: &[PathBuf],
    fallback: BaselineArg,
    episodes: usize,
    seed: u64,
    metrics_out: PathBuf,
    records_out: Option<PathBuf>,
    traj_out: Option<PathBuf>,
    workers: usize,
) -> CliResult {
    if episodes == 0 {
        return Err(usage("--episodes must be >= 1"));
    }
    let c = ScenarioConfig::load(config)?;
    let policies = policies_from(&c, checkpoints, fallback)?;
    let ev = evaluate(&c, &policies, episodes, seed, traj_out.is_some(), workers)?;
    print!("{}", ev.report.table());
    ev.report.write_csv(&metrics_out)?;
    println!("wrote {}", metrics_out.display());
    if let Some(p) = records_out {
        ev.report.write_records_csv(&p)?;
        println!("wrote {}", p.display());
    }
    if let (Some(p), Some(traj)) = (traj_out, ev.trajectory) {
        export_trajectories(&traj, &p)?;
        println!("wrote {}", p.display());
    }
    Ok(0)
}

fn plot(traj: &Path, episode: usize, out: PathBuf) -> CliResult {
    let t = read_trajectories(traj)?;
    if !t.header.episodes.iter().any(|e| e.episode == episode) {
        return Err(usage(format!(
            "--episode {episode} out of range: trajectory has {} episode(s)",
            t.header.episodes.len()
        )));
    }
    write_episode_svg(&t, episode, &out)?;
    println!("wrote {}", out.display());
    Ok(0)
}

fn run_selfcheck(seed: u64, corrupt_gradient: bool) -> CliResult {
    let items = selfcheck::run(SelfcheckOptions { seed, corrupt_gradient });
    for i in &items {
        println!("{}", i.line());
    }
    Ok(if items.iter().all(|i| i.passed) { 0 } else { EXIT_INTERNAL })
}

fn dispatch(cli: Cli) -> CliResult {
    let dir = cli.out_dir;
    match cli.command {
        Command::GenScenario { preset, devices, seed, out } => gen_scenario(preset, devices, seed, or_default(out, &dir, "scenario.json")),
        Command::Train {
            config,
            scenario_kind,
            episodes,
            out_checkpoint,
            frozen_t1,
            frozen_jammer,
            trace,
            seed,
            checkpoint_every,
        } => train(
            &config,
            scenario_kind,
            episodes,
            or_default(out_checkpoint, &dir, "policy.d3qn"),
            frozen_t1,
            frozen_jammer,
            or_default(trace, &dir, "trace.csv"),
            seed,
            checkpoint_every,
        ),
        Command::Eval {
            config,
            checkpoints,
            baseline,
            episodes,
            seed,
            metrics_out,
            records_out,
            traj_out,
            workers,
        } => eval(
            &config,
            &checkpoints,
            baseline,
            episodes,
            seed,
            or_default(metrics_out, &dir, "metrics.csv"),
            records_out,
            traj_out,
            workers as usize,
        ),
        Command::Plot { traj, episode, out } => plot(&traj, episode, or_default(out, &dir, "figure.svg")),
        Command::Selfcheck { seed, corrupt_gradient } => run_selfcheck(seed, corrupt_gradient),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("{e}");
            ExitCode::from(match e {
                Error::Config(_) | Error::Format(_) => EXIT_CONFIG,
                Error::Io(_) => EXIT_IO,
                Error::Contract(_) => EXIT_INTERNAL,
            })
        }
    }
}
