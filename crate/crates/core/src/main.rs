use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use c2fq::agent::BcMode;
use c2fq::critic::Side;
use c2fq::env::EnvId;
use c2fq::run::{self, EvalRequest, GenDemos, RunConfig, RunOverrides};
use c2fq::{Error, Result};

#[derive(Parser)]
#[command(name = "c2fq", version, about = "Coarse-to-fine Q-learning on toy control tasks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Roll out the scripted expert and write a demonstration file.
    GenDemos {
        #[arg(long, value_parser = parse_env)]
        env: EnvId,
        #[arg(long, default_value_t = 50)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.005)]
        noise_std: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train an agent; writes metrics.jsonl, checkpoints and the resolved config.
    Train(Box<TrainArgs>),
    /// Evaluate a checkpoint without exploration noise.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, value_parser = parse_env)]
        env: Option<EnvId>,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

impl From<Switch> for bool {
    fn from(s: Switch) -> bool {
        matches!(s, Switch::On)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Bc {
    Margin,
    Dominance,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum Net {
    Online,
    Target,
}

#[derive(Args)]
struct TrainArgs {
    /// JSON run config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_env)]
    env: Option<EnvId>,
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long, value_enum)]
    bc: Option<Bc>,
    #[arg(long, value_enum)]
    rl: Option<Switch>,
    #[arg(long, value_enum)]
    c51: Option<Switch>,
    #[arg(long, value_enum)]
    select_net: Option<Net>,
    /// Exploration noise std in the normalized action frame.
    #[arg(long)]
    noise_std: Option<f64>,
    /// Hidden widths, comma separated.
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    demo_batch_size: Option<usize>,
    #[arg(long)]
    v_min: Option<f64>,
    #[arg(long)]
    v_max: Option<f64>,
    /// Demonstration file, or `none`.
    #[arg(long)]
    demos: Option<String>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    eval_interval: Option<usize>,
    #[arg(long)]
    eval_episodes: Option<usize>,
    #[arg(long)]
    checkpoint_interval: Option<usize>,
    #[arg(long)]
    run_dir: Option<PathBuf>,
    /// Stop at the first evaluation reaching this success rate.
    #[arg(long)]
    stop_at_success: Option<f64>,
    /// Stop at the first evaluation reaching this mean return.
    #[arg(long)]
    stop_at_return: Option<f64>,
}

fn parse_env(s: &str) -> std::result::Result<EnvId, String> {
    s.parse::<EnvId>().map_err(|e| e.to_string())
}

impl TrainArgs {
    fn overrides(&self) -> RunOverrides {
        RunOverrides {
            env: self.env,
            levels: self.levels,
            bins: self.bins,
            bc: self.bc.map(|b| match b {
                Bc::Margin => BcMode::Margin,
                Bc::Dominance => BcMode::Dominance,
                Bc::Off => BcMode::Off,
            }),
            rl: self.rl.map(Into::into),
            c51: self.c51.map(Into::into),
            select_net: self.select_net.map(|n| match n {
                Net::Online => Side::Online,
                Net::Target => Side::Target,
            }),
            noise_std: self.noise_std,
            hidden: self.hidden.clone(),
            lr: self.lr,
            batch_size: self.batch_size,
            demo_batch_size: self.demo_batch_size,
            v_min: self.v_min,
            v_max: self.v_max,
            demos: self
                .demos
                .as_ref()
                .map(|d| (d != "none").then(|| PathBuf::from(d))),
            steps: self.steps,
            seed: self.seed,
            eval_interval: self.eval_interval,
            eval_episodes: self.eval_episodes,
            checkpoint_interval: self.checkpoint_interval,
            run_dir: self.run_dir.clone(),
            stop_at_success: self.stop_at_success,
            stop_at_return: self.stop_at_return,
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::GenDemos {
            env,
            count,
            seed,
            noise_std,
            out,
        } => {
            let report = run::cmd_gen_demos(&GenDemos {
                env,
                count,
                seed,
                noise_std,
                out: out.clone(),
            })?;
            println!(
                "wrote {} episodes ({} successful, {} transitions) to {}",
                report.episodes,
                report.successes,
                report.transitions,
                out.display()
            );
        }
        Command::Train(args) => {
            let cfg = RunConfig::resolve(args.config.as_deref(), &args.overrides())?;
            let dir = cfg.run_dir.clone().unwrap_or_default();
            let summary = run::cmd_train(&cfg)?;
            println!(
                "trained {} steps ({} episodes): eval success {:.3}, mean return {:.3}; run dir {}",
                summary.steps,
                summary.episodes,
                summary.final_eval.success_rate,
                summary.final_eval.mean_return,
                dir.display()
            );
        }
        Command::Eval {
            checkpoint,
            env,
            episodes,
            seed,
        } => {
            let report = run::cmd_eval(&EvalRequest {
                checkpoint,
                env,
                episodes,
                seed,
            })?;
            println!("{}", serde_json::to_string(&report).map_err(Error::from)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::from(run::EXIT_OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(run::exit_code(&e) as u8)
        }
    }
}
