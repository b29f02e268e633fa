use serde::{Deserialize, Serialize};

use crate::critic::Side;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BcMode {
    /// Hinge on scalar Q: the expert bin must lead every other bin by the margin.
    Margin,
    /// The expert bin's distribution must first-order dominate the rival's.
    Dominance,
    Off,
}

impl std::str::FromStr for BcMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "margin" => Ok(BcMode::Margin),
            "dominance" => Ok(BcMode::Dominance),
            "off" => Ok(BcMode::Off),
            other => Err(Error::Config(format!("unknown BC mode `{other}` (margin, dominance, off)"))),
        }
    }
}

/// Agent hyperparameters. Defaults follow the published RLBench setup except
/// where noted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    pub levels: usize,
    pub bins: usize,
    pub gamma: f64,
    pub tau: f64,
    pub n_step: usize,
    pub lambda_rl: f64,
    pub lambda_bc: f64,
    pub margin: f64,
    pub exploration_std: f64,
    pub bc: BcMode,
    /// Train with the Q-learning objective.
    pub rl: bool,
    /// Categorical (C51) critic; `false` falls back to a scalar Q head
    /// trained on the squared TD error.
    pub c51: bool,
    pub action_select_net: Side,
    pub atoms: usize,
    pub v_min: f64,
    pub v_max: f64,
    pub hidden: Vec<usize>,
    pub batch_size: usize,
    pub demo_batch_size: usize,
    pub lr: f64,
    pub weight_decay: f64,
    /// Observations stacked into the critic input (1 = current only).
    pub frame_stack: usize,
    pub relabel: bool,
    pub action_scaling: bool,
    pub replay_capacity: usize,
    /// Gradient updates per environment step.
    pub updates_per_step: usize,
    pub seed: u64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            levels: 3,
            bins: 5,
            gamma: 0.99,
            tau: 0.02,
            n_step: 3,
            lambda_rl: 0.1,
            lambda_bc: 1.0,
            margin: 0.1,
            exploration_std: 0.01,
            bc: BcMode::Dominance,
            rl: true,
            c51: true,
            action_select_net: Side::Target,
            atoms: 51,
            v_min: -1.0,
            v_max: 1.0,
            hidden: vec![64, 512, 512],
            batch_size: 256,
            demo_batch_size: 256,
            lr: 5e-5,
            weight_decay: 0.1,
            frame_stack: 1,
            relabel: true,
            action_scaling: true,
            replay_capacity: 1_000_000,
            updates_per_step: 1,
            seed: 0,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.levels == 0 {
            return fail("levels must be at least 1".into());
        }
        if self.bins < 2 {
            return fail(format!("bins must be at least 2, got {}", self.bins));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return fail(format!("gamma must lie in [0, 1], got {}", self.gamma));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return fail(format!("tau must lie in (0, 1], got {}", self.tau));
        }
        if self.n_step == 0 {
            return fail("n_step must be at least 1".into());
        }
        for (name, v) in [
            ("lambda_rl", self.lambda_rl),
            ("lambda_bc", self.lambda_bc),
            ("margin", self.margin),
            ("exploration_std", self.exploration_std),
            ("lr", self.lr),
            ("weight_decay", self.weight_decay),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return fail(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        if !(self.lr > 0.0) {
            return fail("lr must be positive".into());
        }
        if self.c51 && self.atoms < 2 {
            return fail("a categorical critic needs at least 2 atoms".into());
        }
        if !(self.v_min < self.v_max) {
            return fail(format!("v_min {} must be below v_max {}", self.v_min, self.v_max));
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return fail("hidden widths must be non-empty and positive".into());
        }
        if self.frame_stack == 0 {
            return fail("frame_stack must be at least 1".into());
        }
        if !self.rl && self.bc == BcMode::Off {
            return fail("both objectives are disabled".into());
        }
        Ok(())
    }

    /// Atoms per critic output (1 for the scalar head).
    pub fn head_atoms(&self) -> usize {
        if self.c51 {
            self.atoms
        } else {
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_published() {
        let c = AgentConfig::default();
        c.validate().unwrap();
        assert_eq!((c.levels, c.bins, c.atoms), (3, 5, 51));
        assert_eq!((c.tau, c.n_step, c.lambda_rl, c.lambda_bc), (0.02, 3, 0.1, 1.0));
        assert_eq!((c.lr, c.weight_decay, c.exploration_std), (5e-5, 0.1, 0.01));
        assert_eq!((c.batch_size, c.demo_batch_size), (256, 256));
        assert_eq!(c.hidden, vec![64, 512, 512]);
        assert_eq!(c.action_select_net, Side::Target);
    }

    #[test]
    fn rejects_bad_values() {
        let bad = [
            AgentConfig { bins: 1, ..Default::default() },
            AgentConfig { tau: 0.0, ..Default::default() },
            AgentConfig { gamma: 1.5, ..Default::default() },
            AgentConfig { margin: -0.1, ..Default::default() },
            AgentConfig { rl: false, bc: BcMode::Off, ..Default::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }

    #[test]
    fn json_defaults_fill_missing_keys() {
        let c: AgentConfig = serde_json::from_str(r#"{"levels": 1, "bc": "margin"}"#).unwrap();
        assert_eq!(c.levels, 1);
        assert_eq!(c.bc, BcMode::Margin);
        assert_eq!(c.bins, 5);
        assert!(serde_json::from_str::<AgentConfig>(r#"{"levles": 1}"#).is_err());
    }
}
