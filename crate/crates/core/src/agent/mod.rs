//! The coarse-to-fine Q-learning agent: greedy zoom-in action selection,
//! the RL and BC objectives, and the training loop.

mod config;
mod losses;
mod select;
mod train;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub use config::{AgentConfig, BcMode};
pub use losses::{margin_bc, LossReport, PreparedBatch};
pub use select::{argmax, greedy_path, CriticScorer, LevelScorer, ValueHead};
pub use train::{checkpoint_path, evaluate_agent, run_training, MetricsRecord, TrainOptions, TrainSummary};

use crate::action_space::{decode_path, encode_action, ActionSpaceSpec, BinPath, LevelActions};
use crate::critic::{AdamW, CriticInput, CriticParams, CriticSpec, Side};
use crate::distribution::{softmax, SupportGrid};
use crate::env::Policy;
use crate::error::{Error, Result};
use crate::replay::{ActionScaler, BatchItem, ReplayBuffer};

const RNG_SALT: u64 = 0x5eed_c2f0_a11c_e5e1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Exploration noise on.
    Train,
    Eval,
}

/// Result of [`Agent::select_action`].
#[derive(Debug, Clone, PartialEq)]
pub struct ActionChoice {
    /// Action in environment units.
    pub action: Vec<f64>,
    /// The same action in the critic's `[-1, 1]` frame.
    pub normalized: Vec<f64>,
    pub path: BinPath,
    pub levels: LevelActions,
}

/// Critic evaluation along the bin path of a given action.
#[derive(Debug, Clone, PartialEq)]
pub struct PathValues {
    pub path: BinPath,
    /// `q[l][n]`.
    pub q: Vec<Vec<f64>>,
    /// `dists[l][n]`: atom probabilities of the selected bin (empty for a scalar head).
    pub dists: Vec<Vec<Vec<f64>>>,
}

pub struct Agent {
    config: AgentConfig,
    space: ActionSpaceSpec,
    head: ValueHead,
    critic: CriticParams,
    optimizer: AdamW,
    decay_mask: Vec<bool>,
    scaler: Option<ActionScaler>,
    rng: ChaCha8Rng,
    obs_dim: usize,
    updates: u64,
}

impl Agent {
    /// `obs_dim` is the width of a single raw observation; the critic sees
    /// `frame_stack` of them.
    pub fn new(config: AgentConfig, obs_dim: usize, action_dim: usize, scaler: Option<ActionScaler>) -> Result<Self> {
        config.validate()?;
        if let Some(s) = &scaler {
            if s.dims() != action_dim {
                return Err(Error::shape(action_dim, s.dims()));
            }
        }
        let space = ActionSpaceSpec::new(action_dim, config.levels, config.bins)?;
        let head = if config.c51 {
            ValueHead::Categorical(SupportGrid::new(config.v_min, config.v_max, config.atoms)?)
        } else {
            ValueHead::Scalar
        };
        let spec = CriticSpec {
            obs_dim: obs_dim * config.frame_stack,
            levels: config.levels,
            dims: action_dim,
            bins: config.bins,
            atoms: config.head_atoms(),
            hidden: config.hidden.clone(),
        };
        let critic = CriticParams::init(spec, config.seed)?;
        let decay_mask = critic.layout().decay_mask();
        let optimizer = AdamW::new(critic.num_params(), config.lr, config.weight_decay);
        let rng = ChaCha8Rng::seed_from_u64(config.seed ^ RNG_SALT);
        Ok(Agent {
            config,
            space,
            head,
            critic,
            optimizer,
            decay_mask,
            scaler,
            rng,
            obs_dim,
            updates: 0,
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    /// The normalized `[-1, 1]^N` action lattice.
    pub fn space(&self) -> &ActionSpaceSpec {
        &self.space
    }

    pub fn head(&self) -> &ValueHead {
        &self.head
    }

    pub fn critic(&self) -> &CriticParams {
        &self.critic
    }

    pub fn critic_mut(&mut self) -> &mut CriticParams {
        &mut self.critic
    }

    pub fn optimizer(&self) -> &AdamW {
        &self.optimizer
    }

    pub fn scaler(&self) -> Option<&ActionScaler> {
        self.scaler.as_ref()
    }

    pub fn rng(&self) -> &ChaCha8Rng {
        &self.rng
    }

    /// Raw (unstacked) observation width.
    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub(crate) fn restore(&mut self, critic: CriticParams, optimizer: AdamW, rng: ChaCha8Rng, updates: u64) -> Result<()> {
        if critic.num_params() != self.critic.num_params() {
            return Err(Error::shape(self.critic.num_params(), critic.num_params()));
        }
        self.critic = critic;
        self.optimizer = optimizer;
        self.rng = rng;
        self.updates = updates;
        Ok(())
    }

    pub fn to_normalized(&self, action: &[f64]) -> Vec<f64> {
        match &self.scaler {
            Some(s) => s.apply(action),
            None => action.to_vec(),
        }
    }

    pub fn to_env(&self, normalized: &[f64]) -> Vec<f64> {
        match &self.scaler {
            Some(s) => s.invert(normalized),
            None => normalized.to_vec(),
        }
    }

    /// Greedy zoom-in with the given critic copy, without noise.
    pub fn greedy(&self, obs: &[f64], side: Side) -> Result<(BinPath, LevelActions)> {
        let scorer = CriticScorer {
            critic: &self.critic,
            side,
            head: &self.head,
        };
        greedy_path(&scorer, &self.space, obs)
    }

    /// Noise-free action from the configured selection network.
    pub fn eval_action(&self, obs: &[f64]) -> Result<ActionChoice> {
        let (path, levels) = self.greedy(obs, self.config.action_select_net)?;
        let normalized = levels.last().to_vec();
        Ok(ActionChoice {
            action: self.to_env(&normalized),
            normalized,
            path,
            levels,
        })
    }

    pub fn select_action(&mut self, obs: &[f64], mode: Mode) -> Result<ActionChoice> {
        let mut choice = self.eval_action(obs)?;
        if mode == Mode::Train && self.config.exploration_std > 0.0 {
            let noise = Normal::new(0.0, self.config.exploration_std).map_err(|e| Error::Config(e.to_string()))?;
            for a in choice.normalized.iter_mut() {
                *a = (*a + noise.sample(&mut self.rng)).clamp(-1.0, 1.0);
            }
            choice.action = self.to_env(&choice.normalized);
        }
        Ok(choice)
    }

    /// Encode `action` (environment units) and read the critic along its path.
    pub fn q_of_action(&self, obs: &[f64], action: &[f64], side: Side) -> Result<PathValues> {
        let path = encode_action(&self.to_normalized(action), &self.space)?;
        let acts = decode_path(&path, &self.space)?;
        let mut q = Vec::with_capacity(self.space.levels);
        let mut dists = Vec::with_capacity(self.space.levels);
        for l in 0..self.space.levels {
            let prev = acts.previous(l);
            let logits = self.critic.critic_forward(
                side,
                &CriticInput {
                    features: obs,
                    level: l,
                    prev_action: &prev,
                },
            )?;
            let mut ql = Vec::with_capacity(self.space.dims);
            let mut dl = Vec::with_capacity(self.space.dims);
            for n in 0..self.space.dims {
                let bin = logits.bin(n, path.get(l, n));
                ql.push(self.head.q(bin));
                dl.push(match self.head {
                    ValueHead::Categorical(_) => softmax(bin),
                    ValueHead::Scalar => Vec::new(),
                });
            }
            q.push(ql);
            dists.push(dl);
        }
        Ok(PathValues { path, q, dists })
    }

    /// One gradient step on a given batch, then the Polyak update.
    pub fn update_on_batch(&mut self, batch: &[BatchItem]) -> Result<LossReport> {
        let prepared = self.prepare_batch(batch)?;
        let (report, grads) = self.loss_and_grad(self.critic.online(), &prepared, true);
        let grads = grads.expect("gradient requested");
        self.optimizer.apply(self.critic.online_mut(), &grads, &self.decay_mask);
        self.critic.polyak_update(self.config.tau)?;
        self.updates += 1;
        Ok(report)
    }

    /// Sample `batch_size` online and `demo_batch_size` demonstration items
    /// and take one update. Without demonstrations both shares come from the
    /// online buffer.
    pub fn train_step(&mut self, online: &mut ReplayBuffer, demos: &mut ReplayBuffer) -> Result<LossReport> {
        let (b, d) = (self.config.batch_size, self.config.demo_batch_size);
        let mut batch;
        if demos.sampleable() > 0 && d > 0 {
            batch = online.sample(b)?;
            batch.extend(demos.sample(d)?.into_iter().map(|mut item| {
                item.is_demo = true;
                item
            }));
        } else {
            batch = online.sample(b + d)?;
        }
        self.update_on_batch(&batch)
    }

    /// Evaluation-mode policy view (noise-free, configured selection network).
    pub fn policy(&self) -> AgentPolicy<'_> {
        AgentPolicy { agent: self }
    }
}

pub struct AgentPolicy<'a> {
    agent: &'a Agent,
}

impl Policy for AgentPolicy<'_> {
    fn act(&mut self, obs: &[f64]) -> Result<Vec<f64>> {
        Ok(self.agent.eval_action(obs)?.action)
    }

    fn history_depth(&self) -> usize {
        self.agent.config.frame_stack
    }
}
