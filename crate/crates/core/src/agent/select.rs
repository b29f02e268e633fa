use crate::action_space::{ActionSpaceSpec, BinPath, LevelActions, ZoomState};
use crate::critic::{CriticParams, Side};
use crate::distribution::{mean_of, softmax, SupportGrid};
use crate::error::Result;

/// How raw critic outputs become a scalar Q per bin.
#[derive(Debug, Clone, PartialEq)]
pub enum ValueHead {
    Categorical(SupportGrid),
    Scalar,
}

impl ValueHead {
    pub fn atoms(&self) -> usize {
        match self {
            ValueHead::Categorical(g) => g.len(),
            ValueHead::Scalar => 1,
        }
    }

    pub fn q(&self, logits: &[f64]) -> f64 {
        match self {
            ValueHead::Categorical(g) => mean_of(&softmax(logits), g),
            ValueHead::Scalar => logits[0],
        }
    }

    /// Q and its gradient with respect to the logits.
    pub(crate) fn q_with_grad(&self, logits: &[f64]) -> (f64, Vec<f64>) {
        match self {
            ValueHead::Categorical(g) => {
                let p = softmax(logits);
                let q = mean_of(&p, g);
                let grad = p.iter().zip(g.atoms()).map(|(p, z)| p * (z - q)).collect();
                (q, grad)
            }
            ValueHead::Scalar => (logits[0], vec![1.0]),
        }
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Scores the bins of one level, given the previous level's action.
pub trait LevelScorer {
    /// Q values indexed `[dim][bin]`.
    fn level_q(&self, features: &[f64], level: usize, prev_action: &[f64]) -> Result<Vec<Vec<f64>>>;
}

pub struct CriticScorer<'a> {
    pub critic: &'a CriticParams,
    pub side: Side,
    pub head: &'a ValueHead,
}

impl LevelScorer for CriticScorer<'_> {
    fn level_q(&self, features: &[f64], level: usize, prev_action: &[f64]) -> Result<Vec<Vec<f64>>> {
        let logits = self.critic.critic_forward(
            self.side,
            &crate::critic::CriticInput {
                features,
                level,
                prev_action,
            },
        )?;
        Ok((0..logits.dims)
            .map(|n| (0..logits.bins).map(|b| self.head.q(logits.bin(n, b))).collect())
            .collect())
    }
}

/// Greedy coarse-to-fine selection: at each level pick the best bin per
/// dimension, zoom into it, and condition the next level on the centroids.
pub fn greedy_path(
    scorer: &impl LevelScorer,
    spec: &ActionSpaceSpec,
    features: &[f64],
) -> Result<(BinPath, LevelActions)> {
    let mut zoom = ZoomState::new(spec);
    let mut path = BinPath::zeros(spec.levels, spec.dims);
    let mut actions = LevelActions::zeros(spec.levels, spec.dims);
    for l in 0..spec.levels {
        let prev = actions.previous(l);
        let q = scorer.level_q(features, l, &prev)?;
        let chosen: Vec<usize> = q.iter().map(|qs| argmax(qs)).collect();
        for (n, &b) in chosen.iter().enumerate() {
            path.set(l, n, b);
        }
        let centroids = zoom.zoom(&chosen)?;
        actions.level_mut(l).copy_from_slice(&centroids);
    }
    Ok((path, actions))
}
