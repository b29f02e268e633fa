use std::collections::VecDeque;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{Agent, AgentConfig, LossReport, Mode};
use crate::checkpoint::save_checkpoint;
use crate::env::{evaluate, make_env, EnvId, EvalReport};
use crate::error::{Error, Result};
use crate::replay::{relabel_success, stack_episode, ActionScaler, Episode, HistoryStack, ReplayBuffer, Transition};

const SUCCESS_WINDOW: usize = 100;
const EVAL_SEED_SALT: u64 = 0xe7a1_5eed;

/// One line of `metrics.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub step: usize,
    pub episode: usize,
    /// Success rate over the last 100 training episodes.
    pub train_success: f64,
    pub eval_success: f64,
    pub eval_return: f64,
    pub loss_rl: f64,
    pub loss_bc: f64,
    pub mean_q: f64,
    pub wall_seconds: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub env: EnvId,
    pub total_steps: usize,
    pub eval_interval: usize,
    pub eval_episodes: usize,
    /// 0 disables periodic checkpoints; a final one is still written when a
    /// run directory is set.
    pub checkpoint_interval: usize,
    pub run_dir: Option<PathBuf>,
    /// End the run at the first evaluation whose success rate reaches this.
    pub stop_at_success: Option<f64>,
    /// End the run at the first evaluation whose mean return reaches this.
    pub stop_at_return: Option<f64>,
}

impl TrainOptions {
    pub fn new(env: EnvId, total_steps: usize) -> Self {
        TrainOptions {
            env,
            total_steps,
            eval_interval: 1000,
            eval_episodes: 20,
            checkpoint_interval: 0,
            run_dir: None,
            stop_at_success: None,
            stop_at_return: None,
        }
    }
}

pub struct TrainSummary {
    pub agent: Agent,
    pub records: Vec<MetricsRecord>,
    pub steps: usize,
    pub episodes: usize,
    pub final_eval: EvalReport,
}

impl std::fmt::Debug for TrainSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TrainSummary")
            .field("steps", &self.steps)
            .field("episodes", &self.episodes)
            .field("final_eval", &self.final_eval)
            .finish_non_exhaustive()
    }
}

pub fn checkpoint_path(run_dir: &Path, step: usize) -> PathBuf {
    run_dir.join(format!("ckpt_{step}"))
}

/// Evaluate with a freshly seeded environment so every evaluation sees the
/// same episodes.
pub fn evaluate_agent(agent: &Agent, env: EnvId, episodes: usize) -> Result<EvalReport> {
    let mut eval_env = make_env(env, agent.config().seed ^ EVAL_SEED_SALT);
    evaluate(eval_env.as_mut(), &mut agent.policy(), episodes)
}

/// Demo-driven training: fit the scaler, pre-fill the demo buffer, then act,
/// store, relabel and update once per environment step.
pub fn run_training(options: &TrainOptions, config: AgentConfig, demos: &[Episode]) -> Result<TrainSummary> {
    config.validate()?;
    if options.eval_interval == 0 || options.eval_episodes == 0 {
        return Err(Error::Config("eval interval and episode count must be positive".into()));
    }
    let seed = config.seed;
    let mut env = make_env(options.env, seed);
    let spec = env.spec().clone();
    let scaler = if config.action_scaling && !demos.is_empty() {
        Some(ActionScaler::fit(demos)?)
    } else {
        None
    };
    let depth = config.frame_stack;
    let mut online = ReplayBuffer::new(Some(config.replay_capacity), config.n_step, config.gamma, seed.wrapping_add(1));
    let mut demo_buf = ReplayBuffer::new(None, config.n_step, config.gamma, seed.wrapping_add(2));
    for ep in demos {
        demo_buf.push_episode(&stack_episode(ep, depth).as_demo());
    }
    let mut agent = Agent::new(config, spec.obs_dim, spec.action_dim, scaler)?;

    if let Some(dir) = &options.run_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut metrics = MetricsSink::open(options.run_dir.as_deref())?;
    let start = Instant::now();

    let mut history = HistoryStack::new(depth);
    let mut obs = history.reset(&env.reset());
    let mut episode = Vec::new();
    let mut episodes = 0usize;
    let mut recent: VecDeque<bool> = VecDeque::with_capacity(SUCCESS_WINDOW);
    let mut last_loss = LossReport::default();
    let mut records = Vec::new();
    let mut final_eval = None;
    let mut steps = 0usize;

    for step in 1..=options.total_steps {
        steps = step;
        let choice = agent.select_action(&obs, Mode::Train)?;
        let outcome = match env.step(&choice.action) {
            Ok(s) => s,
            Err(e) => {
                if let Some(dir) = &options.run_dir {
                    save_checkpoint(&checkpoint_path(dir, step - 1), &agent, step - 1)?;
                }
                return Err(e);
            }
        };
        let next = history.push(&outcome.obs);
        let transition = Transition {
            obs: std::mem::replace(&mut obs, next.clone()),
            action: choice.action,
            reward: outcome.reward,
            next_obs: next,
            done: outcome.done,
            is_demo: false,
        };
        online.push(transition.clone());
        episode.push(transition);
        if outcome.done {
            episodes += 1;
            if recent.len() == SUCCESS_WINDOW {
                recent.pop_front();
            }
            recent.push_back(outcome.success);
            let finished = Episode::new(std::mem::take(&mut episode));
            if agent.config().relabel {
                relabel_success(&finished, &mut demo_buf);
            }
            obs = history.reset(&env.reset());
        }

        if online.sampleable() > 0 {
            for _ in 0..agent.config().updates_per_step {
                last_loss = agent.train_step(&mut online, &mut demo_buf)?;
            }
        }

        if step % options.eval_interval == 0 || step == options.total_steps {
            let report = evaluate_agent(&agent, options.env, options.eval_episodes)?;
            let record = MetricsRecord {
                step,
                episode: episodes,
                train_success: if recent.is_empty() {
                    0.0
                } else {
                    recent.iter().filter(|&&s| s).count() as f64 / recent.len() as f64
                },
                eval_success: report.success_rate,
                eval_return: report.mean_return,
                loss_rl: last_loss.rl,
                loss_bc: last_loss.bc,
                mean_q: last_loss.mean_q,
                wall_seconds: start.elapsed().as_secs_f64(),
                seed,
            };
            metrics.append(&record)?;
            records.push(record);
            final_eval = Some(report);
            if options.stop_at_success.is_some_and(|t| report.success_rate >= t)
                || options.stop_at_return.is_some_and(|t| report.mean_return >= t)
            {
                break;
            }
        }
        if let Some(dir) = &options.run_dir {
            if options.checkpoint_interval > 0 && step % options.checkpoint_interval == 0 {
                save_checkpoint(&checkpoint_path(dir, step), &agent, step)?;
            }
        }
    }

    let final_eval = match final_eval {
        Some(r) => r,
        None => evaluate_agent(&agent, options.env, options.eval_episodes)?,
    };
    if let Some(dir) = &options.run_dir {
        let path = checkpoint_path(dir, steps);
        if !path.exists() {
            save_checkpoint(&path, &agent, steps)?;
        }
    }
    Ok(TrainSummary {
        agent,
        records,
        steps,
        episodes,
        final_eval,
    })
}

struct MetricsSink {
    file: Option<(PathBuf, fs::File)>,
}

impl MetricsSink {
    fn open(run_dir: Option<&Path>) -> Result<Self> {
        let file = match run_dir {
            Some(dir) => {
                let path = dir.join("metrics.jsonl");
                let f = OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(&path)
                    .map_err(|e| Error::io(&path, e))?;
                Some((path, f))
            }
            None => None,
        };
        Ok(MetricsSink { file })
    }

    fn append(&mut self, record: &MetricsRecord) -> Result<()> {
        if let Some((path, f)) = &mut self.file {
            let mut line = serde_json::to_string(record)?;
            line.push('\n');
            f.write_all(line.as_bytes()).map_err(|e| Error::io(&*path, e))?;
            f.flush().map_err(|e| Error::io(&*path, e))?;
        }
        Ok(())
    }
}
