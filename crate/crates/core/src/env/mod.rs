//! Deterministic toy continuous-control tasks with scripted experts.
//!
//! | id                  | obs                      | actions | reward |
//! |---------------------|--------------------------|---------|--------|
//! | `needle_bandit`     | one-hot target + target  | 2       | sparse, one step |
//! | `pointmass_reach`   | position, goal           | 2       | sparse, ≤ 60 steps |
//! | `double_integrator` | offset to goal, velocity | 1       | dense, 200 steps |

mod double_integrator;
mod needle;
mod pointmass;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub use double_integrator::DoubleIntegrator;
pub use needle::{NeedleBandit, NEEDLE_TARGETS};
pub use pointmass::PointmassReach;

use crate::error::{Error, Result};
use crate::replay::{Episode, HistoryStack, Transition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardMode {
    Sparse,
    Dense,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec {
    pub id: EnvId,
    pub obs_dim: usize,
    pub action_dim: usize,
    pub max_episode_steps: usize,
    pub reward_mode: RewardMode,
    /// Success tolerance (needle: ∞-norm on the action, pointmass: distance).
    pub tolerance: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub obs: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    pub success: bool,
}

pub trait Environment: Send {
    fn spec(&self) -> &EnvSpec;

    /// Start a new episode, drawing the initial state from the env's RNG.
    fn reset(&mut self) -> Vec<f64>;

    fn step(&mut self, action: &[f64]) -> Result<Step>;

    /// Scripted controller for the current task, acting on a raw observation.
    fn expert_action(&self, obs: &[f64]) -> Vec<f64>;

    fn action_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.spec().action_dim;
        (vec![-1.0; n], vec![1.0; n])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvId {
    NeedleBandit,
    PointmassReach,
    DoubleIntegrator,
}

impl EnvId {
    pub const ALL: [EnvId; 3] = [EnvId::NeedleBandit, EnvId::PointmassReach, EnvId::DoubleIntegrator];

    pub fn as_str(&self) -> &'static str {
        match self {
            EnvId::NeedleBandit => "needle_bandit",
            EnvId::PointmassReach => "pointmass_reach",
            EnvId::DoubleIntegrator => "double_integrator",
        }
    }
}

impl fmt::Display for EnvId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EnvId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EnvId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::UnknownEnv(s.to_string()))
    }
}

pub fn make_env(id: EnvId, seed: u64) -> Box<dyn Environment> {
    match id {
        EnvId::NeedleBandit => Box::new(NeedleBandit::new(seed)),
        EnvId::PointmassReach => Box::new(PointmassReach::new(seed)),
        EnvId::DoubleIntegrator => Box::new(DoubleIntegrator::new(seed)),
    }
}

pub(crate) fn check_action(spec: &EnvSpec, action: &[f64]) -> Result<()> {
    if action.len() != spec.action_dim {
        return Err(Error::shape(format!("{}-dim action", spec.action_dim), action.len()));
    }
    if action.iter().any(|a| a.is_nan()) {
        return Err(Error::NotANumber("action"));
    }
    Ok(())
}

pub(crate) fn assert_finite(obs: &[f64]) {
    assert!(obs.iter().all(|v| v.is_finite()), "non-finite observation {obs:?}");
}

/// Anything that maps (history-stacked) observations to environment actions.
pub trait Policy {
    fn act(&mut self, obs: &[f64]) -> Result<Vec<f64>>;

    fn history_depth(&self) -> usize {
        1
    }
}

/// The environment's scripted controller as a [`Policy`].
pub struct ExpertPolicy<'a> {
    env: &'a dyn Environment,
}

impl<'a> ExpertPolicy<'a> {
    pub fn new(env: &'a dyn Environment) -> Self {
        ExpertPolicy { env }
    }
}

impl Policy for ExpertPolicy<'_> {
    fn act(&mut self, obs: &[f64]) -> Result<Vec<f64>> {
        Ok(self.env.expert_action(obs))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub episodes: usize,
    pub success_rate: f64,
    pub mean_return: f64,
}

/// Roll out `policy` for `episodes` episodes and report success and return.
pub fn evaluate(env: &mut dyn Environment, policy: &mut dyn Policy, episodes: usize) -> Result<EvalReport> {
    if episodes == 0 {
        return Err(Error::NoEpisodes);
    }
    let mut history = HistoryStack::new(policy.history_depth());
    let mut successes = 0usize;
    let mut total_return = 0.0;
    for _ in 0..episodes {
        let mut obs = history.reset(&env.reset());
        loop {
            let action = policy.act(&obs)?;
            let step = env.step(&action)?;
            total_return += step.reward;
            obs = history.push(&step.obs);
            if step.done {
                if step.success {
                    successes += 1;
                }
                break;
            }
        }
    }
    Ok(EvalReport {
        episodes,
        success_rate: successes as f64 / episodes as f64,
        mean_return: total_return / episodes as f64,
    })
}

/// Roll out one episode, recording raw transitions.
pub fn rollout(env: &mut dyn Environment, mut act: impl FnMut(&[f64]) -> Result<Vec<f64>>) -> Result<(Episode, bool)> {
    let mut obs = env.reset();
    let mut transitions = Vec::new();
    loop {
        let action = act(&obs)?;
        let step = env.step(&action)?;
        transitions.push(Transition {
            obs: std::mem::replace(&mut obs, step.obs.clone()),
            action,
            reward: step.reward,
            next_obs: step.obs,
            done: step.done,
            is_demo: false,
        });
        if step.done {
            return Ok((Episode::new(transitions), step.success));
        }
    }
}

/// Expert demonstrations with small Gaussian action noise; sparse tasks keep
/// only successful episodes (dense tasks keep every episode).
pub fn gen_demo_dataset(id: EnvId, count: usize, seed: u64, noise_std: f64) -> Result<Vec<Episode>> {
    if count == 0 {
        return Err(Error::Config("demo count must be at least 1".into()));
    }
    let mut env = make_env(id, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let noise = Normal::new(0.0, noise_std.max(0.0)).map_err(|e| Error::Config(e.to_string()))?;
    let (low, high) = env.action_bounds();
    let dense = env.spec().reward_mode == RewardMode::Dense;
    let attempts = 10 * count;
    let mut out = Vec::with_capacity(count);
    for _ in 0..attempts {
        let expert = |obs: &[f64], env: &dyn Environment, rng: &mut ChaCha8Rng| -> Vec<f64> {
            env.expert_action(obs)
                .into_iter()
                .enumerate()
                .map(|(i, a)| {
                    let jitter = if noise_std > 0.0 { noise.sample(rng) } else { 0.0 };
                    (a + jitter).clamp(low[i], high[i])
                })
                .collect()
        };
        let mut obs = env.reset();
        let mut transitions = Vec::new();
        let success = loop {
            let action = expert(&obs, env.as_ref(), &mut rng);
            let step = env.step(&action)?;
            transitions.push(Transition {
                obs: std::mem::replace(&mut obs, step.obs.clone()),
                action,
                reward: step.reward,
                next_obs: step.obs,
                done: step.done,
                is_demo: true,
            });
            if step.done {
                break step.success;
            }
        };
        if success || dense {
            out.push(Episode::new(transitions));
            if out.len() == count {
                return Ok(out);
            }
        }
    }
    Err(Error::ExpertFailed {
        wanted: count,
        attempts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_parse() {
        for id in EnvId::ALL {
            assert_eq!(id.as_str().parse::<EnvId>().unwrap(), id);
        }
        let err = "cartpole".parse::<EnvId>().unwrap_err();
        assert!(err.to_string().contains("needle_bandit"));
    }

    #[test]
    fn evaluate_needs_episodes() {
        let mut env = make_env(EnvId::NeedleBandit, 0);
        let probe = make_env(EnvId::NeedleBandit, 0);
        let mut expert = ExpertPolicy::new(probe.as_ref());
        assert!(matches!(evaluate(env.as_mut(), &mut expert, 0), Err(Error::NoEpisodes)));
    }

    #[test]
    fn demo_generation_is_seeded() {
        let a = gen_demo_dataset(EnvId::PointmassReach, 5, 3, 0.005).unwrap();
        let b = gen_demo_dataset(EnvId::PointmassReach, 5, 3, 0.005).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|e| e.success()));
        let c = gen_demo_dataset(EnvId::PointmassReach, 5, 4, 0.005).unwrap();
        assert_ne!(a, c);
    }
}
