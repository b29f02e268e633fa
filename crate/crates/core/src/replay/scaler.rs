use serde::{Deserialize, Serialize};

use super::Episode;
use crate::error::{Error, Result};

const DEGENERATE_SPAN: f64 = 1e-6;

/// Affine map sending the per-dimension demonstration action range to `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl ActionScaler {
    pub fn fit(demos: &[Episode]) -> Result<Self> {
        Self::fit_actions(demos.iter().flat_map(|e| e.transitions.iter().map(|t| t.action.as_slice())))
    }

    pub fn fit_actions<'a>(actions: impl IntoIterator<Item = &'a [f64]>) -> Result<Self> {
        let mut iter = actions.into_iter();
        let first = iter.next().ok_or(Error::NoDemos)?;
        let mut min = first.to_vec();
        let mut max = first.to_vec();
        for a in iter {
            if a.len() != min.len() {
                return Err(Error::shape(min.len(), a.len()));
            }
            for (i, &x) in a.iter().enumerate() {
                min[i] = min[i].min(x);
                max[i] = max[i].max(x);
            }
        }
        Ok(ActionScaler { min, max })
    }

    pub fn dims(&self) -> usize {
        self.min.len()
    }

    fn degenerate(&self, i: usize) -> bool {
        self.max[i] - self.min[i] < DEGENERATE_SPAN
    }

    /// Environment units to `[-1, 1]`.
    pub fn apply(&self, action: &[f64]) -> Vec<f64> {
        action
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                if self.degenerate(i) {
                    0.0
                } else {
                    2.0 * (a - self.min[i]) / (self.max[i] - self.min[i]) - 1.0
                }
            })
            .collect()
    }

    /// `[-1, 1]` back to environment units.
    pub fn invert(&self, scaled: &[f64]) -> Vec<f64> {
        scaled
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                if self.degenerate(i) {
                    0.5 * (self.min[i] + self.max[i])
                } else {
                    (s + 1.0) * 0.5 * (self.max[i] - self.min[i]) + self.min[i]
                }
            })
            .collect()
    }
}
