//! The coarse-to-fine critic: a shared trunk fed with (features, one-hot
//! level, previous-level action) and one dueling head per action dimension.
//!
//! Parameters live in flat vectors (see [`Layout`]) so the online/target
//! pair, Polyak averaging, the optimizer and checkpoints all work on plain
//! slices.

mod network;
mod optim;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

pub use network::{bin_logits, stack_rows, CriticSpec, Forward, Layout};
pub use optim::AdamW;

use crate::distribution::{mean_of, softmax, SupportGrid};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Online,
    Target,
}

#[derive(Debug, Clone, Copy)]
pub struct CriticInput<'a> {
    pub features: &'a [f64],
    pub level: usize,
    pub prev_action: &'a [f64],
}

/// Logits for one input row, indexed `[dim][bin][atom]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Logits {
    pub dims: usize,
    pub bins: usize,
    pub atoms: usize,
    pub data: Vec<f64>,
}

impl Logits {
    pub fn bin(&self, dim: usize, bin: usize) -> &[f64] {
        let start = (dim * self.bins + bin) * self.atoms;
        &self.data[start..start + self.atoms]
    }

    pub fn dim(&self, dim: usize) -> Vec<&[f64]> {
        (0..self.bins).map(|b| self.bin(dim, b)).collect()
    }
}

/// Online parameters θ and their Polyak-averaged target copy θ̄.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticParams {
    layout: Layout,
    online: Vec<f64>,
    target: Vec<f64>,
}

impl CriticParams {
    /// Seeded initialization; the target starts as an exact copy.
    pub fn init(spec: CriticSpec, seed: u64) -> Result<Self> {
        let layout = Layout::new(spec)?;
        let online = layout.init(seed);
        Ok(CriticParams {
            target: online.clone(),
            online,
            layout,
        })
    }

    pub fn from_parts(spec: CriticSpec, online: Vec<f64>, target: Vec<f64>) -> Result<Self> {
        let layout = Layout::new(spec)?;
        for v in [&online, &target] {
            if v.len() != layout.num_params() {
                return Err(Error::shape(layout.num_params(), v.len()));
            }
        }
        Ok(CriticParams {
            layout,
            online,
            target,
        })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn spec(&self) -> &CriticSpec {
        self.layout.spec()
    }

    pub fn online(&self) -> &[f64] {
        &self.online
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn online_mut(&mut self) -> &mut [f64] {
        &mut self.online
    }

    pub fn side(&self, side: Side) -> &[f64] {
        match side {
            Side::Online => &self.online,
            Side::Target => &self.target,
        }
    }

    /// Zero both heads (uniform logits everywhere).
    pub fn zero_heads(&mut self) {
        self.layout.zero_head(&mut self.online);
        self.layout.zero_head(&mut self.target);
    }

    pub fn forward(&self, side: Side, inputs: Array2<f64>) -> Forward {
        self.layout.forward(self.side(side), inputs)
    }

    pub fn critic_forward(&self, side: Side, input: &CriticInput<'_>) -> Result<Logits> {
        let row = self.layout.input_row(input.features, input.level, input.prev_action)?;
        let width = self.spec().input_dim();
        let fwd = self.forward(side, stack_rows(&[row], width));
        let spec = self.spec();
        Ok(Logits {
            dims: spec.dims,
            bins: spec.bins,
            atoms: spec.atoms,
            data: fwd.into_logits().into_raw_vec_and_offset().0,
        })
    }

    /// Gradient of the online parameters; the target never receives one.
    pub fn backward(&self, fwd: &Forward, grad_logits: &Array2<f64>) -> Vec<f64> {
        self.layout.backward(&self.online, fwd, grad_logits)
    }

    pub fn polyak_update(&mut self, tau: f64) -> Result<()> {
        polyak_update(&mut self.target, &self.online, tau)
    }

    pub fn num_params(&self) -> usize {
        self.layout.num_params()
    }
}

/// `target ← (1 - tau) · target + tau · online`.
pub fn polyak_update(target: &mut [f64], online: &[f64], tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::Config(format!("tau must lie in (0, 1], got {tau}")));
    }
    if target.len() != online.len() {
        return Err(Error::shape(target.len(), online.len()));
    }
    if tau == 1.0 {
        target.copy_from_slice(online);
        return Ok(());
    }
    for (t, o) in target.iter_mut().zip(online) {
        *t = (1.0 - tau) * *t + tau * o;
    }
    Ok(())
}

/// Scalar Q per bin: the mean of the softmax distribution over atoms.
pub fn q_values(logits_for_dim: &[&[f64]], grid: &SupportGrid) -> Vec<f64> {
    logits_for_dim
        .iter()
        .map(|l| mean_of(&softmax(l), grid))
        .collect()
}
