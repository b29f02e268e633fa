//! Run management behind the `c2fq` command line: config resolution, the
//! `gen-demos`, `train` and `eval` commands, and exit codes.
//!
//! Config precedence, lowest to highest: built-in defaults, the JSON file
//! passed with `--config`, command-line flags. The run directory falls back
//! to `$C2FQ_RUN_DIR`, then to `runs/<env>-seed<seed>`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agent::{evaluate_agent, run_training, AgentConfig, BcMode, TrainOptions, TrainSummary};
use crate::checkpoint::load_checkpoint;
use crate::critic::Side;
use crate::env::{evaluate, gen_demo_dataset, make_env, EnvId, EvalReport};
use crate::error::{Error, Result};
use crate::replay::{load_demos, save_demos};

pub const RUN_DIR_ENV: &str = "C2FQ_RUN_DIR";
pub const RESOLVED_CONFIG: &str = "config.resolved.json";
pub const METRICS_FILE: &str = "metrics.jsonl";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub env: EnvId,
    pub agent: AgentConfig,
    /// Demonstration file; `None` trains without demonstrations.
    pub demos: Option<PathBuf>,
    pub steps: usize,
    pub eval_interval: usize,
    pub eval_episodes: usize,
    pub checkpoint_interval: usize,
    pub run_dir: Option<PathBuf>,
    pub stop_at_success: Option<f64>,
    pub stop_at_return: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            env: EnvId::NeedleBandit,
            agent: AgentConfig::default(),
            demos: None,
            steps: 20_000,
            eval_interval: 1_000,
            eval_episodes: 20,
            checkpoint_interval: 0,
            run_dir: None,
            stop_at_success: None,
            stop_at_return: None,
        }
    }
}

/// Command-line values; `None` leaves the file or default value in place.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOverrides {
    pub env: Option<EnvId>,
    pub levels: Option<usize>,
    pub bins: Option<usize>,
    pub bc: Option<BcMode>,
    pub rl: Option<bool>,
    pub c51: Option<bool>,
    pub select_net: Option<Side>,
    pub noise_std: Option<f64>,
    pub hidden: Option<Vec<usize>>,
    pub lr: Option<f64>,
    pub batch_size: Option<usize>,
    pub demo_batch_size: Option<usize>,
    pub v_min: Option<f64>,
    pub v_max: Option<f64>,
    /// `Some(None)` is an explicit "no demonstrations".
    pub demos: Option<Option<PathBuf>>,
    pub steps: Option<usize>,
    pub seed: Option<u64>,
    pub eval_interval: Option<usize>,
    pub eval_episodes: Option<usize>,
    pub checkpoint_interval: Option<usize>,
    pub run_dir: Option<PathBuf>,
    pub stop_at_success: Option<f64>,
    pub stop_at_return: Option<f64>,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn apply(&mut self, o: &RunOverrides) {
        fn set<T: Clone>(slot: &mut T, value: &Option<T>) {
            if let Some(v) = value {
                *slot = v.clone();
            }
        }
        let a = &mut self.agent;
        set(&mut self.env, &o.env);
        set(&mut a.levels, &o.levels);
        set(&mut a.bins, &o.bins);
        set(&mut a.bc, &o.bc);
        set(&mut a.rl, &o.rl);
        set(&mut a.c51, &o.c51);
        set(&mut a.action_select_net, &o.select_net);
        set(&mut a.exploration_std, &o.noise_std);
        set(&mut a.hidden, &o.hidden);
        set(&mut a.lr, &o.lr);
        set(&mut a.batch_size, &o.batch_size);
        set(&mut a.demo_batch_size, &o.demo_batch_size);
        set(&mut a.v_min, &o.v_min);
        set(&mut a.v_max, &o.v_max);
        set(&mut a.seed, &o.seed);
        set(&mut self.demos, &o.demos);
        set(&mut self.steps, &o.steps);
        set(&mut self.eval_interval, &o.eval_interval);
        set(&mut self.eval_episodes, &o.eval_episodes);
        set(&mut self.checkpoint_interval, &o.checkpoint_interval);
        if o.run_dir.is_some() {
            self.run_dir = o.run_dir.clone();
        }
        if o.stop_at_success.is_some() {
            self.stop_at_success = o.stop_at_success;
        }
        if o.stop_at_return.is_some() {
            self.stop_at_return = o.stop_at_return;
        }
    }

    /// Defaults, then `file`, then `overrides`, then the run-directory fallbacks.
    pub fn resolve(file: Option<&Path>, overrides: &RunOverrides) -> Result<Self> {
        let mut cfg = match file {
            Some(p) => Self::from_file(p)?,
            None => RunConfig::default(),
        };
        cfg.apply(overrides);
        if cfg.run_dir.is_none() {
            cfg.run_dir = Some(match std::env::var_os(RUN_DIR_ENV) {
                Some(dir) => PathBuf::from(dir),
                None => PathBuf::from(format!("runs/{}-seed{}", cfg.env, cfg.agent.seed)),
            });
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.agent.validate()?;
        if self.steps == 0 || self.eval_interval == 0 || self.eval_episodes == 0 {
            return Err(Error::Config("steps, eval_interval and eval_episodes must be positive".into()));
        }
        match &self.demos {
            None if self.agent.bc != BcMode::Off => {
                Err(Error::Config("BC is enabled but no demonstration file was given (use --demos or --bc off)".into()))
            }
            Some(p) if !p.is_file() => Err(Error::Config(format!("demonstration file {} not found", p.display()))),
            _ => Ok(()),
        }
    }

    pub fn train_options(&self) -> TrainOptions {
        TrainOptions {
            env: self.env,
            total_steps: self.steps,
            eval_interval: self.eval_interval,
            eval_episodes: self.eval_episodes,
            checkpoint_interval: self.checkpoint_interval,
            run_dir: self.run_dir.clone(),
            stop_at_success: self.stop_at_success,
            stop_at_return: self.stop_at_return,
        }
    }
}

/// 2 for configuration problems, 3 for everything else.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::UnknownEnv(_) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenDemos {
    pub env: EnvId,
    pub count: usize,
    pub seed: u64,
    pub noise_std: f64,
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenDemosReport {
    pub episodes: usize,
    pub successes: usize,
    pub transitions: usize,
}

pub fn cmd_gen_demos(req: &GenDemos) -> Result<GenDemosReport> {
    let episodes = gen_demo_dataset(req.env, req.count, req.seed, req.noise_std)?;
    save_demos(&req.out, &episodes)?;
    Ok(GenDemosReport {
        episodes: episodes.len(),
        successes: episodes.iter().filter(|e| e.success()).count(),
        transitions: episodes.iter().map(|e| e.len()).sum(),
    })
}

/// Write the resolved config, load demonstrations and train.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainSummary> {
    cfg.validate()?;
    let dir = cfg
        .run_dir
        .as_ref()
        .ok_or_else(|| Error::Config("no run directory".into()))?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let resolved = dir.join(RESOLVED_CONFIG);
    let mut json = serde_json::to_string_pretty(cfg)?;
    json.push('\n');
    fs::write(&resolved, json).map_err(|e| Error::io(&resolved, e))?;
    let demos = match &cfg.demos {
        Some(p) => load_demos(p)?,
        None => Vec::new(),
    };
    run_training(&cfg.train_options(), cfg.agent.clone(), &demos)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRequest {
    pub checkpoint: PathBuf,
    /// Falls back to the env of `config.resolved.json` beside the checkpoint.
    pub env: Option<EnvId>,
    pub episodes: usize,
    /// Seed for the evaluation environment; defaults to the training run's
    /// evaluation seed.
    pub seed: Option<u64>,
}

pub fn cmd_eval(req: &EvalRequest) -> Result<EvalReport> {
    let env_id = match req.env {
        Some(id) => id,
        None => {
            let resolved = req
                .checkpoint
                .parent()
                .map(|d| d.join(RESOLVED_CONFIG))
                .filter(|p| p.is_file())
                .ok_or_else(|| Error::Config("no --env given and no resolved config beside the checkpoint".into()))?;
            RunConfig::from_file(&resolved)?.env
        }
    };
    let (agent, _) = load_checkpoint(&req.checkpoint)?;
    let probe = make_env(env_id, 0);
    let spec = probe.spec();
    if spec.obs_dim != agent.obs_dim() || spec.action_dim != agent.space().dims {
        return Err(Error::Config(format!(
            "checkpoint expects obs {} / action {}, but {env_id} has obs {} / action {}",
            agent.obs_dim(),
            agent.space().dims,
            spec.obs_dim,
            spec.action_dim
        )));
    }
    match req.seed {
        Some(seed) => {
            let mut env = make_env(env_id, seed);
            evaluate(env.as_mut(), &mut agent.policy(), req.episodes)
        }
        None => evaluate_agent(&agent, env_id, req.episodes),
    }
}
