use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{assert_finite, check_action, EnvId, EnvSpec, Environment, RewardMode, Step};
use crate::error::Result;

pub const DI_DT: f64 = 0.05;
pub const DI_HORIZON: usize = 200;
pub const DI_VELOCITY_WEIGHT: f64 = 0.1;
const START_RANGE: (f64, f64) = (1.5, 2.0);
const PD_GAINS: (f64, f64) = (4.0, 4.0);

/// Unit point mass on a line, dense shaped reward towards `goal`.
#[derive(Debug, Clone)]
pub struct DoubleIntegrator {
    spec: EnvSpec,
    rng: ChaCha8Rng,
    goal: f64,
    x: f64,
    v: f64,
    t: usize,
}

impl DoubleIntegrator {
    pub fn new(seed: u64) -> Self {
        DoubleIntegrator {
            spec: EnvSpec {
                id: EnvId::DoubleIntegrator,
                obs_dim: 2,
                action_dim: 1,
                max_episode_steps: DI_HORIZON,
                reward_mode: RewardMode::Dense,
                tolerance: f64::INFINITY,
                seed,
            },
            rng: ChaCha8Rng::seed_from_u64(seed),
            goal: 0.0,
            x: 0.0,
            v: 0.0,
            t: 0,
        }
    }

    pub fn reset_to(&mut self, x: f64, v: f64) -> Vec<f64> {
        self.x = x;
        self.v = v;
        self.t = 0;
        self.observe()
    }

    pub fn state(&self) -> (f64, f64) {
        (self.x, self.v)
    }

    pub fn goal(&self) -> f64 {
        self.goal
    }

    fn observe(&self) -> Vec<f64> {
        vec![self.x - self.goal, self.v]
    }

    pub fn reward_at(&self, x: f64, v: f64) -> f64 {
        (-(x - self.goal).powi(2) - DI_VELOCITY_WEIGHT * v * v).exp()
    }
}

impl Environment for DoubleIntegrator {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self) -> Vec<f64> {
        let mag = self.rng.random_range(START_RANGE.0..START_RANGE.1);
        let x = if self.rng.random_bool(0.5) { mag } else { -mag };
        self.reset_to(self.goal + x, 0.0)
    }

    fn step(&mut self, action: &[f64]) -> Result<Step> {
        check_action(&self.spec, action)?;
        let a = action[0].clamp(-1.0, 1.0);
        let (x, v) = (self.x, self.v);
        self.x = x + v * DI_DT;
        self.v = v + a * DI_DT;
        self.t += 1;
        let obs = self.observe();
        assert_finite(&obs);
        Ok(Step {
            obs,
            reward: self.reward_at(self.x, self.v),
            done: self.t >= DI_HORIZON,
            success: false,
        })
    }

    /// Saturated PD controller.
    fn expert_action(&self, obs: &[f64]) -> Vec<f64> {
        let (kp, kd) = PD_GAINS;
        vec![(-kp * obs[0] - kd * obs[1]).clamp(-1.0, 1.0)]
    }
}
