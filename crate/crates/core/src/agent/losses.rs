//! Q-learning and behavior-cloning objectives over a sampled batch.
//!
//! Every loss term lives at a (level, dimension) pair. The online critic is
//! evaluated along the bin path of the stored action (conditioning each
//! level on the previous level's centroids), while bootstrap targets come
//! from a greedy coarse-to-fine pass of the target critic.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::select::{argmax, ValueHead};
use super::{Agent, BcMode};
use crate::action_space::{decode_path, encode_action, ZoomState};
use crate::critic::{bin_logits, stack_rows, Side};
use crate::distribution::{cross_entropy_with_grad, dominance_with_grad, project_probs, softmax};
use crate::error::Result;
use crate::replay::BatchItem;

/// Loss components of one update. `rl` and `bc` are unweighted means over
/// (item, level, dimension); `total` is the weighted objective.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub total: f64,
    pub rl: f64,
    pub bc: f64,
    pub mean_q: f64,
}

/// Margin BC term for one (level, dimension): `max_b (Q_b + m·[b ≠ e]) − Q_e`.
///
/// Returns the loss and the maximizing (rival) bin.
pub fn margin_bc(q: &[f64], expert: usize, margin: f64) -> (f64, usize) {
    let shifted: Vec<f64> = q
        .iter()
        .enumerate()
        .map(|(b, &v)| if b == expert { v } else { v + margin })
        .collect();
    let rival = argmax(&shifted);
    (shifted[rival] - q[expert], rival)
}

/// Batch quantities that do not depend on the online parameters.
#[derive(Debug, Clone)]
pub struct PreparedBatch {
    rows: Array2<f64>,
    /// Taken bin per (item, level, dim).
    taken: Vec<usize>,
    /// Target distribution (or scalar target) per (item, level, dim), flattened.
    targets: Vec<f64>,
    is_demo: Vec<bool>,
    items: usize,
}

impl PreparedBatch {
    pub fn len(&self) -> usize {
        self.items
    }

    pub fn is_empty(&self) -> bool {
        self.items == 0
    }

    pub fn demo_count(&self) -> usize {
        self.is_demo.iter().filter(|&&d| d).count()
    }
}

impl Agent {
    /// Encode stored actions and compute bootstrap targets with the target critic.
    pub fn prepare_batch(&self, batch: &[BatchItem]) -> Result<PreparedBatch> {
        let spec = self.critic.spec().clone();
        let (levels, dims, atoms) = (spec.levels, spec.dims, spec.atoms);
        let mut rows = Vec::with_capacity(batch.len() * levels);
        let mut taken = Vec::with_capacity(batch.len() * levels * dims);
        for item in batch {
            let normalized = self.to_normalized(&item.action);
            let path = encode_action(&normalized, &self.space)?;
            let acts = decode_path(&path, &self.space)?;
            for l in 0..levels {
                rows.push(self.critic.layout().input_row(&item.obs, l, &acts.previous(l))?);
                taken.extend_from_slice(path.level(l));
            }
        }
        let rows = stack_rows(&rows, spec.input_dim());
        let targets = if self.config.rl {
            self.bootstrap_targets(batch)?
        } else {
            vec![0.0; batch.len() * levels * dims * atoms]
        };
        Ok(PreparedBatch {
            rows,
            taken,
            targets,
            is_demo: batch.iter().map(|i| i.is_demo).collect(),
            items: batch.len(),
        })
    }

    fn bootstrap_targets(&self, batch: &[BatchItem]) -> Result<Vec<f64>> {
        let spec = self.critic.spec();
        let (levels, dims, atoms) = (spec.levels, spec.dims, spec.atoms);
        let stride = levels * dims * atoms;
        let mut targets = vec![0.0; batch.len() * stride];
        let set = |targets: &mut Vec<f64>, i: usize, l: usize, n: usize, value: &[f64]| {
            let at = i * stride + (l * dims + n) * atoms;
            targets[at..at + atoms].copy_from_slice(value);
        };

        let (boot, terminal): (Vec<usize>, Vec<usize>) = (0..batch.len()).partition(|&i| batch[i].discount > 0.0);
        for &i in &terminal {
            let value = match &self.head {
                ValueHead::Categorical(g) => {
                    let mut one_hot = vec![0.0; atoms];
                    one_hot[0] = 1.0;
                    project_probs(&one_hot, g, batch[i].ret, 0.0)
                }
                ValueHead::Scalar => vec![batch[i].ret],
            };
            for l in 0..levels {
                for n in 0..dims {
                    set(&mut targets, i, l, n, &value);
                }
            }
        }
        if boot.is_empty() {
            return Ok(targets);
        }

        let mut zooms = vec![ZoomState::new(&self.space); boot.len()];
        let mut prev = vec![vec![0.0; dims]; boot.len()];
        for l in 0..levels {
            let rows = boot
                .iter()
                .zip(&prev)
                .map(|(&i, p)| self.critic.layout().input_row(&batch[i].bootstrap_obs, l, p))
                .collect::<Result<Vec<_>>>()?;
            let logits = self
                .critic
                .forward(Side::Target, stack_rows(&rows, spec.input_dim()))
                .into_logits();
            for (j, &i) in boot.iter().enumerate() {
                let item = &batch[i];
                let mut chosen = Vec::with_capacity(dims);
                for n in 0..dims {
                    let qs: Vec<f64> = (0..spec.bins)
                        .map(|b| self.head.q(bin_logits(&logits, j, spec, n, b)))
                        .collect();
                    let best = argmax(&qs);
                    chosen.push(best);
                    let best_logits = bin_logits(&logits, j, spec, n, best);
                    let value = match &self.head {
                        ValueHead::Categorical(g) => {
                            project_probs(&softmax(best_logits), g, item.ret, item.discount)
                        }
                        ValueHead::Scalar => vec![item.ret + item.discount * best_logits[0]],
                    };
                    set(&mut targets, i, l, n, &value);
                }
                prev[j] = zooms[j].zoom(&chosen)?;
            }
        }
        Ok(targets)
    }

    /// Objective at `online` parameters, with its gradient when requested.
    pub fn loss_and_grad(
        &self,
        online: &[f64],
        prepared: &PreparedBatch,
        want_grad: bool,
    ) -> (LossReport, Option<Vec<f64>>) {
        let spec = self.critic.spec();
        let (levels, dims, bins, atoms) = (spec.levels, spec.dims, spec.bins, spec.atoms);
        if prepared.items == 0 {
            return (LossReport::default(), want_grad.then(|| vec![0.0; online.len()]));
        }
        let layout = self.critic.layout();
        let fwd = layout.forward(online, prepared.rows.clone());
        let logits = fwd.logits();
        let mut dlogits = Array2::<f64>::zeros(logits.dim());
        let width = spec.logits_width();

        let cfg = &self.config;
        let pairs = (levels * dims) as f64;
        let demos = prepared.demo_count();
        let rl_scale = cfg.lambda_rl / (pairs * prepared.items as f64);
        let bc_scale = if demos > 0 {
            cfg.lambda_bc / (pairs * demos as f64)
        } else {
            0.0
        };
        let bc_mode = match (cfg.bc, &self.head) {
            (BcMode::Dominance, ValueHead::Scalar) => BcMode::Margin,
            (mode, _) => mode,
        };

        let mut rl_sum = 0.0;
        let mut bc_sum = 0.0;
        let mut q_sum = 0.0;
        {
            let grad = dlogits.as_slice_mut().expect("standard layout");
            for i in 0..prepared.items {
                for l in 0..levels {
                    let row = i * levels + l;
                    for n in 0..dims {
                        let pair = (i * levels + l) * dims + n;
                        let expert = prepared.taken[pair];
                        let at = |b: usize| row * width + (n * bins + b) * atoms;
                        let taken_logits = bin_logits(logits, row, spec, n, expert);
                        q_sum += self.head.q(taken_logits);

                        if cfg.rl {
                            let target = &prepared.targets[pair * atoms..(pair + 1) * atoms];
                            match &self.head {
                                ValueHead::Categorical(_) => {
                                    let (ce, g) = cross_entropy_with_grad(target, taken_logits);
                                    rl_sum += ce;
                                    for (d, g) in grad[at(expert)..at(expert) + atoms].iter_mut().zip(g) {
                                        *d += rl_scale * g;
                                    }
                                }
                                ValueHead::Scalar => {
                                    let diff = taken_logits[0] - target[0];
                                    rl_sum += diff * diff;
                                    grad[at(expert)] += rl_scale * 2.0 * diff;
                                }
                            }
                        }

                        if bc_mode == BcMode::Off || !prepared.is_demo[i] {
                            continue;
                        }
                        let q_and_grad: Vec<(f64, Vec<f64>)> = (0..bins)
                            .map(|b| self.head.q_with_grad(bin_logits(logits, row, spec, n, b)))
                            .collect();
                        let qs: Vec<f64> = q_and_grad.iter().map(|(q, _)| *q).collect();
                        let (margin_loss, rival) = margin_bc(&qs, expert, cfg.margin);
                        match bc_mode {
                            BcMode::Margin => {
                                bc_sum += margin_loss;
                                if rival != expert {
                                    for (d, g) in grad[at(rival)..at(rival) + atoms].iter_mut().zip(&q_and_grad[rival].1) {
                                        *d += bc_scale * g;
                                    }
                                    for (d, g) in grad[at(expert)..at(expert) + atoms].iter_mut().zip(&q_and_grad[expert].1) {
                                        *d -= bc_scale * g;
                                    }
                                }
                            }
                            BcMode::Dominance if rival != expert => {
                                let pe = softmax(bin_logits(logits, row, spec, n, expert));
                                let pr = softmax(bin_logits(logits, row, spec, n, rival));
                                let (loss, ge, gr) = dominance_with_grad(&pe, &pr);
                                bc_sum += loss;
                                for (b, p, g) in [(expert, &pe, &ge), (rival, &pr, &gr)] {
                                    let mean: f64 = p.iter().zip(g.iter()).map(|(p, g)| p * g).sum();
                                    for (k, d) in grad[at(b)..at(b) + atoms].iter_mut().enumerate() {
                                        *d += bc_scale * p[k] * (g[k] - mean);
                                    }
                                }
                            }
                            _ => {}
                        }
                    }
                }
            }
        }

        let n_terms = prepared.items as f64 * pairs;
        let rl = rl_sum / n_terms;
        let bc = if demos > 0 {
            bc_sum / (demos as f64 * pairs)
        } else {
            0.0
        };
        let total = if cfg.rl { cfg.lambda_rl * rl } else { 0.0 }
            + if bc_mode != BcMode::Off { cfg.lambda_bc * bc } else { 0.0 };
        let report = LossReport {
            total,
            rl,
            bc,
            mean_q: q_sum / n_terms,
        };
        let grads = want_grad.then(|| layout.backward(online, &fwd, &dlogits));
        (report, grads)
    }

    /// Objective components at the current online parameters.
    pub fn evaluate_losses(&self, batch: &[BatchItem]) -> Result<LossReport> {
        let prepared = self.prepare_batch(batch)?;
        Ok(self.loss_and_grad(self.critic.online(), &prepared, false).0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn margin_examples() {
        let q = [0.2, 0.9, 0.1];
        assert_eq!(margin_bc(&q, 1, 0.1).0, 0.0);
        let (loss, rival) = margin_bc(&q, 2, 0.1);
        assert!((loss - 0.9).abs() < 1e-12);
        assert_eq!(rival, 1);
        for e in 0..3 {
            let (loss, _) = margin_bc(&[0.4; 3], e, 0.1);
            assert!((loss - 0.1).abs() < 1e-12);
        }
    }
}
