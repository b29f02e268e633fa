use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{assert_finite, check_action, EnvId, EnvSpec, Environment, RewardMode, Step};
use crate::error::Result;

/// Hidden targets. Every coordinate sits at least 0.18 away from the
/// centroids a single 5-bin level can emit, both on the raw `[-1, 1]` range
/// and after rescaling to the demonstrated `[-0.9, 0.9]` range, while three
/// 5-bin levels always get within 0.0072.
pub const NEEDLE_TARGETS: [[f64; 2]; 8] = [
    [-0.9, 0.54],
    [-0.54, -0.9],
    [-0.18, 0.18],
    [0.18, -0.54],
    [0.54, 0.9],
    [0.9, -0.18],
    [-0.54, 0.54],
    [0.18, 0.9],
];

pub const NEEDLE_TOLERANCE: f64 = 0.02;

/// One-step precision task: hit the revealed target within `tolerance` in
/// every coordinate.
#[derive(Debug, Clone)]
pub struct NeedleBandit {
    spec: EnvSpec,
    rng: ChaCha8Rng,
    target: usize,
}

impl NeedleBandit {
    pub fn new(seed: u64) -> Self {
        NeedleBandit {
            spec: EnvSpec {
                id: EnvId::NeedleBandit,
                obs_dim: NEEDLE_TARGETS.len() + 2,
                action_dim: 2,
                max_episode_steps: 1,
                reward_mode: RewardMode::Sparse,
                tolerance: NEEDLE_TOLERANCE,
                seed,
            },
            rng: ChaCha8Rng::seed_from_u64(seed),
            target: 0,
        }
    }

    pub fn target(&self) -> [f64; 2] {
        NEEDLE_TARGETS[self.target]
    }

    /// Reset onto a specific target index.
    pub fn reset_to(&mut self, target: usize) -> Vec<f64> {
        self.target = target % NEEDLE_TARGETS.len();
        self.observe()
    }

    fn observe(&self) -> Vec<f64> {
        let mut obs = vec![0.0; self.spec.obs_dim];
        obs[self.target] = 1.0;
        obs[NEEDLE_TARGETS.len()..].copy_from_slice(&NEEDLE_TARGETS[self.target]);
        obs
    }
}

impl Environment for NeedleBandit {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self) -> Vec<f64> {
        let t = self.rng.random_range(0..NEEDLE_TARGETS.len());
        self.reset_to(t)
    }

    fn step(&mut self, action: &[f64]) -> Result<Step> {
        check_action(&self.spec, action)?;
        let target = self.target();
        let err = action
            .iter()
            .zip(target)
            .map(|(a, t)| (a - t).abs())
            .fold(0.0, f64::max);
        let hit = err <= self.spec.tolerance;
        let obs = self.observe();
        assert_finite(&obs);
        Ok(Step {
            obs,
            reward: if hit { 1.0 } else { 0.0 },
            done: true,
            success: hit,
        })
    }

    fn expert_action(&self, obs: &[f64]) -> Vec<f64> {
        obs[NEEDLE_TARGETS.len()..].to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_hit_and_near_miss() {
        let mut env = NeedleBandit::new(0);
        env.reset_to(4);
        let t = env.target();
        assert_eq!(env.step(&t).unwrap().reward, 1.0);
        env.reset_to(4);
        let miss = env.step(&[t[0] + 0.03, t[1]]).unwrap();
        assert_eq!(miss.reward, 0.0);
        assert!(miss.done);
        assert!(env.step(&[0.0]).is_err());
    }

    #[test]
    fn obs_reveals_target() {
        let mut env = NeedleBandit::new(9);
        for _ in 0..20 {
            let obs = env.reset();
            assert_eq!(env.expert_action(&obs), env.target().to_vec());
            assert_eq!(obs.iter().take(8).sum::<f64>(), 1.0);
        }
    }
}
