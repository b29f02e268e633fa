use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const LN_EPS: f64 = 1e-5;

/// Shape of the critic: state encoder widths plus the coarse-to-fine head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticSpec {
    /// Width of the (history-stacked) observation features.
    pub obs_dim: usize,
    pub levels: usize,
    pub dims: usize,
    pub bins: usize,
    /// Atoms per distribution; 1 turns the head into a scalar Q head.
    pub atoms: usize,
    /// Trunk widths; every layer is bias-free linear, LayerNorm, SiLU.
    pub hidden: Vec<usize>,
}

impl CriticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::InvalidSpec("critic needs non-empty hidden layers".into()));
        }
        if self.obs_dim == 0 || self.levels == 0 || self.dims == 0 || self.bins < 2 || self.atoms == 0 {
            return Err(Error::InvalidSpec(format!("degenerate critic spec {self:?}")));
        }
        Ok(())
    }

    /// Trunk input: features, one-hot level, previous-level action.
    pub fn input_dim(&self) -> usize {
        self.obs_dim + self.levels + self.dims
    }

    /// Raw head outputs per action dimension: value stream plus one advantage
    /// stream per bin.
    pub fn head_width(&self) -> usize {
        self.atoms * (self.bins + 1)
    }

    /// Logits per input row, laid out `[dim][bin][atom]`.
    pub fn logits_width(&self) -> usize {
        self.dims * self.bins * self.atoms
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Block {
    offset: usize,
    rows: usize,
    cols: usize,
}

impl Block {
    fn len(&self) -> usize {
        self.rows * self.cols
    }

    fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
struct TrunkLayer {
    weight: Block,
    gain: Block,
    bias: Block,
}

/// Where every tensor lives inside the flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    spec: CriticSpec,
    trunk: Vec<TrunkLayer>,
    head_weight: Block,
    head_bias: Block,
    len: usize,
}

impl Layout {
    pub fn new(spec: CriticSpec) -> Result<Self> {
        spec.validate()?;
        let mut offset = 0;
        let mut alloc = |rows: usize, cols: usize| {
            let b = Block { offset, rows, cols };
            offset += rows * cols;
            b
        };
        let mut trunk = Vec::with_capacity(spec.hidden.len());
        let mut fan_in = spec.input_dim();
        for &width in &spec.hidden {
            trunk.push(TrunkLayer {
                weight: alloc(width, fan_in),
                gain: alloc(1, width),
                bias: alloc(1, width),
            });
            fan_in = width;
        }
        let head_rows = spec.dims * spec.head_width();
        let head_weight = alloc(head_rows, fan_in);
        let head_bias = alloc(1, head_rows);
        Ok(Layout {
            spec,
            trunk,
            head_weight,
            head_bias,
            len: offset,
        })
    }

    pub fn spec(&self) -> &CriticSpec {
        &self.spec
    }

    pub fn num_params(&self) -> usize {
        self.len
    }

    /// Mask of parameters subject to weight decay: linear weights only.
    pub fn decay_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.len];
        for b in self.trunk.iter().map(|t| t.weight).chain([self.head_weight]) {
            mask[b.range()].iter_mut().for_each(|m| *m = true);
        }
        mask
    }

    /// Deterministic initialization: uniform `±1/sqrt(fan_in)` linear weights,
    /// unit LayerNorm gains, zero biases.
    pub fn init(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = vec![0.0; self.len];
        for b in self.trunk.iter().map(|t| t.weight).chain([self.head_weight]) {
            let bound = 1.0 / (b.cols as f64).sqrt();
            for p in &mut params[b.range()] {
                *p = rng.random_range(-bound..bound);
            }
        }
        for t in &self.trunk {
            params[t.gain.range()].iter_mut().for_each(|g| *g = 1.0);
        }
        params
    }

    /// Zero the final head so every bin starts from uniform logits.
    pub fn zero_head(&self, params: &mut [f64]) {
        params[self.head_weight.range()].iter_mut().for_each(|p| *p = 0.0);
        params[self.head_bias.range()].iter_mut().for_each(|p| *p = 0.0);
    }

    fn matrix<'a>(&self, params: &'a [f64], b: Block) -> ArrayView2<'a, f64> {
        ArrayView2::from_shape((b.rows, b.cols), &params[b.range()]).expect("layout block")
    }

    /// One trunk input row.
    pub fn input_row(&self, features: &[f64], level: usize, prev_action: &[f64]) -> Result<Vec<f64>> {
        let spec = &self.spec;
        if features.len() != spec.obs_dim {
            return Err(Error::shape(format!("{} features", spec.obs_dim), features.len()));
        }
        if prev_action.len() != spec.dims {
            return Err(Error::shape(format!("{}-dim previous action", spec.dims), prev_action.len()));
        }
        if level >= spec.levels {
            return Err(Error::shape(format!("level < {}", spec.levels), level));
        }
        let mut row = Vec::with_capacity(spec.input_dim());
        row.extend_from_slice(features);
        row.extend((0..spec.levels).map(|l| if l == level { 1.0 } else { 0.0 }));
        row.extend_from_slice(prev_action);
        Ok(row)
    }

    /// Batched forward pass; `inputs` has one trunk input row per sample.
    pub fn forward(&self, params: &[f64], inputs: Array2<f64>) -> Forward {
        assert_eq!(params.len(), self.len, "parameter vector length");
        assert_eq!(inputs.ncols(), self.spec.input_dim(), "input width");
        let mut layers = Vec::with_capacity(self.trunk.len());
        let mut x = inputs;
        for t in &self.trunk {
            let w = self.matrix(params, t.weight);
            let z = x.dot(&w.t());
            let gain = &params[t.gain.range()];
            let bias = &params[t.bias.range()];
            let (normed, inv_std) = layer_norm(&z);
            let mut y = normed.clone();
            for mut row in y.rows_mut() {
                for ((v, g), b) in row.iter_mut().zip(gain).zip(bias) {
                    *v = *v * g + b;
                }
            }
            let h = y.mapv(silu);
            layers.push(LayerCache {
                input: x,
                normed,
                inv_std,
                pre_act: y,
            });
            x = h;
        }
        let wh = self.matrix(params, self.head_weight);
        let mut raw = x.dot(&wh.t());
        let bh = &params[self.head_bias.range()];
        for mut row in raw.rows_mut() {
            for (v, b) in row.iter_mut().zip(bh) {
                *v += b;
            }
        }
        let logits = self.dueling(&raw);
        Forward {
            layers,
            features: x,
            logits,
        }
    }

    // logit(n, b, k) = value(n, k) + adv(n, b, k) - mean_b adv(n, b, k)
    fn dueling(&self, raw: &Array2<f64>) -> Array2<f64> {
        let spec = &self.spec;
        let (nb, k) = (spec.bins, spec.atoms);
        let mut out = Array2::zeros((raw.nrows(), spec.logits_width()));
        let mut mean = vec![0.0; k];
        for (src, mut dst) in raw.rows().into_iter().zip(out.rows_mut()) {
            let src = src.as_slice().expect("contiguous");
            let dst = dst.as_slice_mut().expect("contiguous");
            for n in 0..spec.dims {
                let head = &src[n * spec.head_width()..(n + 1) * spec.head_width()];
                let (value, adv) = head.split_at(k);
                mean.iter_mut().for_each(|m| *m = 0.0);
                for b in 0..nb {
                    for (m, a) in mean.iter_mut().zip(&adv[b * k..(b + 1) * k]) {
                        *m += a;
                    }
                }
                mean.iter_mut().for_each(|m| *m /= nb as f64);
                for b in 0..nb {
                    let o = &mut dst[(n * nb + b) * k..(n * nb + b + 1) * k];
                    for i in 0..k {
                        o[i] = value[i] + adv[b * k + i] - mean[i];
                    }
                }
            }
        }
        out
    }

    /// Reverse-mode gradient of a scalar loss given `d loss / d logits`.
    pub fn backward(&self, params: &[f64], fwd: &Forward, grad_logits: &Array2<f64>) -> Vec<f64> {
        let spec = &self.spec;
        assert_eq!(grad_logits.dim(), fwd.logits.dim(), "logit gradient shape");
        let mut grads = vec![0.0; self.len];
        let (nb, k) = (spec.bins, spec.atoms);

        // Dueling aggregation: value gets the bin sum, advantages the centered gradient.
        let mut graw = Array2::zeros((grad_logits.nrows(), spec.dims * spec.head_width()));
        let mut total = vec![0.0; k];
        for (src, mut dst) in grad_logits.rows().into_iter().zip(graw.rows_mut()) {
            let src = src.as_slice().expect("contiguous");
            let dst = dst.as_slice_mut().expect("contiguous");
            for n in 0..spec.dims {
                total.iter_mut().for_each(|t| *t = 0.0);
                for b in 0..nb {
                    for (t, g) in total.iter_mut().zip(&src[(n * nb + b) * k..(n * nb + b + 1) * k]) {
                        *t += g;
                    }
                }
                let head = &mut dst[n * spec.head_width()..(n + 1) * spec.head_width()];
                head[..k].copy_from_slice(&total);
                for b in 0..nb {
                    for i in 0..k {
                        head[k + b * k + i] = src[(n * nb + b) * k + i] - total[i] / nb as f64;
                    }
                }
            }
        }

        let gw = graw.t().dot(&fwd.features);
        grads[self.head_weight.range()].copy_from_slice(gw.as_slice().expect("standard layout"));
        let gb = graw.sum_axis(Axis(0));
        grads[self.head_bias.range()].copy_from_slice(gb.as_slice().expect("contiguous"));
        let mut dh = graw.dot(&self.matrix(params, self.head_weight));

        for (i, (t, cache)) in self.trunk.iter().zip(&fwd.layers).enumerate().rev() {
            let gain = &params[t.gain.range()];
            let mut dy = dh;
            dy.zip_mut_with(&cache.pre_act, |d, &y| *d *= silu_grad(y));
            let ggain = (&dy * &cache.normed).sum_axis(Axis(0));
            let gbias = dy.sum_axis(Axis(0));
            grads[t.gain.range()].copy_from_slice(ggain.as_slice().expect("contiguous"));
            grads[t.bias.range()].copy_from_slice(gbias.as_slice().expect("contiguous"));

            let mut dz = dy;
            for ((mut row, normed), &inv_std) in dz
                .rows_mut()
                .into_iter()
                .zip(cache.normed.rows())
                .zip(cache.inv_std.iter())
            {
                row.iter_mut().zip(gain).for_each(|(d, g)| *d *= g);
                let width = row.len() as f64;
                let mean_d = row.sum() / width;
                let mean_dn = row.iter().zip(normed.iter()).map(|(d, n)| d * n).sum::<f64>() / width;
                row.iter_mut()
                    .zip(normed.iter())
                    .for_each(|(d, n)| *d = inv_std * (*d - mean_d - n * mean_dn));
            }
            let gw = dz.t().dot(&cache.input);
            grads[t.weight.range()].copy_from_slice(gw.as_slice().expect("standard layout"));
            dh = if i > 0 {
                dz.dot(&self.matrix(params, t.weight))
            } else {
                Array2::zeros((0, 0))
            };
        }
        grads
    }
}

struct LayerCache {
    input: Array2<f64>,
    normed: Array2<f64>,
    inv_std: Array1<f64>,
    pre_act: Array2<f64>,
}

/// Activations kept from a forward pass for the backward pass.
pub struct Forward {
    layers: Vec<LayerCache>,
    features: Array2<f64>,
    logits: Array2<f64>,
}

impl Forward {
    /// Logits, one row per input row, laid out `[dim][bin][atom]`.
    pub fn logits(&self) -> &Array2<f64> {
        &self.logits
    }

    pub fn into_logits(self) -> Array2<f64> {
        self.logits
    }
}

fn layer_norm(z: &Array2<f64>) -> (Array2<f64>, Array1<f64>) {
    let width = z.ncols() as f64;
    let mut normed = z.clone();
    let mut inv_std = Array1::zeros(z.nrows());
    for (mut row, s) in normed.rows_mut().into_iter().zip(inv_std.iter_mut()) {
        let mean = row.sum() / width;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / width;
        *s = 1.0 / (var + LN_EPS).sqrt();
        let inv = *s;
        row.iter_mut().for_each(|v| *v = (*v - mean) * inv);
    }
    (normed, inv_std)
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn silu(x: f64) -> f64 {
    x * sigmoid(x)
}

fn silu_grad(x: f64) -> f64 {
    let s = sigmoid(x);
    s * (1.0 + x * (1.0 - s))
}

/// Stack rows into a batch matrix.
pub fn stack_rows(rows: &[Vec<f64>], width: usize) -> Array2<f64> {
    let mut out = Array2::zeros((rows.len(), width));
    for (mut dst, src) in out.rows_mut().into_iter().zip(rows) {
        dst.assign(&ndarray::ArrayView1::from(src.as_slice()));
    }
    out
}

/// Logits of one input row for a given dimension and bin.
pub fn bin_logits<'a>(logits: &'a Array2<f64>, row: usize, spec: &CriticSpec, dim: usize, bin: usize) -> &'a [f64] {
    let start = (dim * spec.bins + bin) * spec.atoms;
    &logits.as_slice().expect("standard layout")[row * spec.logits_width() + start..][..spec.atoms]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Layout {
        Layout::new(CriticSpec {
            obs_dim: 3,
            levels: 2,
            dims: 2,
            bins: 3,
            atoms: 4,
            hidden: vec![5, 4],
        })
        .unwrap()
    }

    fn inputs(layout: &Layout) -> Array2<f64> {
        let rows = vec![
            layout.input_row(&[0.3, -0.2, 0.9], 0, &[0.0, 0.0]).unwrap(),
            layout.input_row(&[-0.5, 0.1, 0.4], 1, &[0.4, -0.6]).unwrap(),
        ];
        stack_rows(&rows, layout.spec().input_dim())
    }

    #[test]
    fn dueling_identity_holds() {
        let layout = tiny();
        let params = layout.init(3);
        let fwd = layout.forward(&params, inputs(&layout));
        let spec = layout.spec().clone();
        // Reconstruct the value stream and check the centered advantages.
        let raw_head = {
            let mut x = inputs(&layout);
            for t in &layout.trunk {
                let z = x.dot(&layout.matrix(&params, t.weight).t());
                let (n, _) = layer_norm(&z);
                let g = &params[t.gain.range()];
                let b = &params[t.bias.range()];
                let mut y = n;
                for mut row in y.rows_mut() {
                    row.iter_mut().zip(g).zip(b).for_each(|((v, g), b)| *v = *v * g + b);
                }
                x = y.mapv(silu);
            }
            x.dot(&layout.matrix(&params, layout.head_weight).t())
                + ndarray::ArrayView1::from(&params[layout.head_bias.range()])
        };
        for row in 0..2 {
            for n in 0..spec.dims {
                for k in 0..spec.atoms {
                    let value = raw_head[[row, n * spec.head_width() + k]];
                    let mean: f64 = (0..spec.bins)
                        .map(|b| bin_logits(fwd.logits(), row, &spec, n, b)[k] - value)
                        .sum::<f64>()
                        / spec.bins as f64;
                    assert!(mean.abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn zero_head_gives_uniform_logits() {
        let layout = tiny();
        let mut params = layout.init(1);
        layout.zero_head(&mut params);
        let fwd = layout.forward(&params, inputs(&layout));
        assert!(fwd.logits().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let layout = tiny();
        let params = layout.init(11);
        let x = inputs(&layout);
        let weights = Array2::from_shape_fn((2, layout.spec().logits_width()), |(i, j)| {
            ((i * 31 + j * 7) as f64 * 0.37).sin()
        });
        let loss = |p: &[f64]| {
            let f = layout.forward(p, x.clone());
            (f.logits() * &weights).sum() + f.logits().mapv(|v| v * v).sum() * 0.1
        };
        let fwd = layout.forward(&params, x.clone());
        let g_logits = &weights + &fwd.logits().mapv(|v| 0.2 * v);
        let grads = layout.backward(&params, &fwd, &g_logits);
        let h = 1e-6;
        for i in 0..params.len() {
            let mut p = params.clone();
            p[i] += h;
            let up = loss(&p);
            p[i] -= 2.0 * h;
            let down = loss(&p);
            let fd = (up - down) / (2.0 * h);
            let err = (fd - grads[i]).abs() / fd.abs().max(grads[i].abs()).max(1e-6);
            assert!(err < 1e-5, "param {i}: fd {fd} vs analytic {}", grads[i]);
        }
    }

    #[test]
    fn decay_mask_excludes_norm_and_bias() {
        let layout = tiny();
        let mask = layout.decay_mask();
        let expected: usize = layout.trunk.iter().map(|t| t.weight.len()).sum::<usize>()
            + layout.head_weight.len();
        assert_eq!(mask.iter().filter(|&&m| m).count(), expected);
    }
}
