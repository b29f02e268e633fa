use std::collections::VecDeque;

use super::{Episode, Transition};

/// Concatenate the last `depth` observations, oldest first, padding with the
/// first observation when fewer are available.
pub fn stack_history(raw: &[Vec<f64>], depth: usize) -> Vec<f64> {
    assert!(depth >= 1, "history depth must be at least 1");
    assert!(!raw.is_empty(), "history needs at least one observation");
    let width = raw[0].len();
    let mut out = Vec::with_capacity(depth * width);
    for k in 0..depth {
        // Index of the k-th slot counted from the oldest.
        let back = depth - 1 - k;
        let idx = raw.len().saturating_sub(1 + back);
        out.extend_from_slice(&raw[idx]);
    }
    out
}

/// Incremental form of [`stack_history`] for rollouts.
#[derive(Debug, Clone)]
pub struct HistoryStack {
    depth: usize,
    frames: VecDeque<Vec<f64>>,
}

impl HistoryStack {
    pub fn new(depth: usize) -> Self {
        assert!(depth >= 1, "history depth must be at least 1");
        HistoryStack {
            depth,
            frames: VecDeque::with_capacity(depth),
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Start a new episode: every slot holds the first observation.
    pub fn reset(&mut self, first: &[f64]) -> Vec<f64> {
        self.frames.clear();
        for _ in 0..self.depth {
            self.frames.push_back(first.to_vec());
        }
        self.stacked()
    }

    pub fn push(&mut self, obs: &[f64]) -> Vec<f64> {
        if self.frames.len() == self.depth {
            self.frames.pop_front();
        }
        self.frames.push_back(obs.to_vec());
        self.stacked()
    }

    pub fn stacked(&self) -> Vec<f64> {
        self.frames.iter().flatten().copied().collect()
    }
}

/// Rewrite an episode of raw observations into stacked observations.
pub fn stack_episode(raw: &Episode, depth: usize) -> Episode {
    if depth == 1 || raw.is_empty() {
        return raw.clone();
    }
    let mut history = HistoryStack::new(depth);
    let mut obs = history.reset(&raw.transitions[0].obs);
    let transitions = raw
        .transitions
        .iter()
        .map(|t| {
            let next = history.push(&t.next_obs);
            Transition {
                obs: std::mem::replace(&mut obs, next.clone()),
                next_obs: next,
                ..t.clone()
            }
        })
        .collect();
    Episode { transitions }
}
