//! Experience storage: transitions, episodes, the replay buffers, n-step
//! windows, success relabeling, action scaling, history stacking and the
//! demonstration file format.

mod buffer;
mod demos;
mod history;
mod scaler;

use serde::{Deserialize, Serialize};

pub use buffer::{nstep_return, relabel_success, sample_batch, BatchItem, NStep, ReplayBuffer};
pub use demos::{load_demos, read_demos, save_demos, write_demos, DEMO_HEADER};
pub use history::{stack_episode, stack_history, HistoryStack};
pub use scaler::ActionScaler;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub obs: Vec<f64>,
    /// Executed action in environment units.
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_obs: Vec<f64>,
    pub done: bool,
    pub is_demo: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub transitions: Vec<Transition>,
}

impl Episode {
    pub fn new(transitions: Vec<Transition>) -> Self {
        Episode { transitions }
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    /// Successful episodes end on a terminal step with reward 1.
    pub fn success(&self) -> bool {
        self.transitions
            .last()
            .is_some_and(|t| t.done && t.reward >= 1.0)
    }

    pub fn total_reward(&self) -> f64 {
        self.transitions.iter().map(|t| t.reward).sum()
    }

    /// Copy with every transition flagged as demonstration data.
    pub fn as_demo(&self) -> Episode {
        Episode {
            transitions: self
                .transitions
                .iter()
                .map(|t| Transition {
                    is_demo: true,
                    ..t.clone()
                })
                .collect(),
        }
    }
}
