use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{assert_finite, check_action, EnvId, EnvSpec, Environment, RewardMode, Step};
use crate::error::Result;

pub const POINTMASS_SPEED: f64 = 0.05;
pub const POINTMASS_RADIUS: f64 = 0.05;
pub const POINTMASS_HORIZON: usize = 60;

/// Sparse 2-D reaching in `[-1, 1]^2` with velocity commands.
#[derive(Debug, Clone)]
pub struct PointmassReach {
    spec: EnvSpec,
    rng: ChaCha8Rng,
    pos: [f64; 2],
    goal: [f64; 2],
    t: usize,
}

impl PointmassReach {
    pub fn new(seed: u64) -> Self {
        PointmassReach {
            spec: EnvSpec {
                id: EnvId::PointmassReach,
                obs_dim: 4,
                action_dim: 2,
                max_episode_steps: POINTMASS_HORIZON,
                reward_mode: RewardMode::Sparse,
                tolerance: POINTMASS_RADIUS,
                seed,
            },
            rng: ChaCha8Rng::seed_from_u64(seed),
            pos: [0.0; 2],
            goal: [0.0; 2],
            t: 0,
        }
    }

    pub fn reset_to(&mut self, pos: [f64; 2], goal: [f64; 2]) -> Vec<f64> {
        self.pos = pos;
        self.goal = goal;
        self.t = 0;
        self.observe()
    }

    pub fn position(&self) -> [f64; 2] {
        self.pos
    }

    fn observe(&self) -> Vec<f64> {
        vec![self.pos[0], self.pos[1], self.goal[0], self.goal[1]]
    }

    fn distance(&self) -> f64 {
        ((self.pos[0] - self.goal[0]).powi(2) + (self.pos[1] - self.goal[1]).powi(2)).sqrt()
    }
}

impl Environment for PointmassReach {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self) -> Vec<f64> {
        let mut draw = || [self.rng.random_range(-1.0..1.0), self.rng.random_range(-1.0..1.0)];
        let pos = draw();
        let goal = draw();
        self.reset_to(pos, goal)
    }

    fn step(&mut self, action: &[f64]) -> Result<Step> {
        check_action(&self.spec, action)?;
        for (p, a) in self.pos.iter_mut().zip(action) {
            *p = (*p + POINTMASS_SPEED * a.clamp(-1.0, 1.0)).clamp(-1.0, 1.0);
        }
        self.t += 1;
        let reached = self.distance() <= POINTMASS_RADIUS;
        let obs = self.observe();
        assert_finite(&obs);
        Ok(Step {
            obs,
            reward: if reached { 1.0 } else { 0.0 },
            done: reached || self.t >= POINTMASS_HORIZON,
            success: reached,
        })
    }

    /// Straight-line controller: the offset to the goal, rescaled so no
    /// coordinate exceeds one full-speed step.
    fn expert_action(&self, obs: &[f64]) -> Vec<f64> {
        let d = [obs[2] - obs[0], obs[3] - obs[1]];
        let scale = d[0].abs().max(d[1].abs()).max(POINTMASS_SPEED);
        vec![d[0] / scale, d[1] / scale]
    }
}
