//! Independent reference implementations shared by the integration tests and
//! the acceptance suite.
#![allow(dead_code)]

use c2fq::critic::{CriticInput, CriticParams, Side};
use c2fq::replay::Transition;
use rand::Rng;

/// Random probability vector with occasional exact zeros.
pub fn random_probs(rng: &mut impl Rng, k: usize) -> Vec<f64> {
    let mut p: Vec<f64> = (0..k)
        .map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random::<f64>().powi(3) })
        .collect();
    if p.iter().all(|&x| x == 0.0) {
        p[rng.random_range(0..k)] = 1.0;
    }
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
    p
}

/// Monte-Carlo projection: stratified inverse-CDF draws from `probs`, each
/// draw's shifted value spread over the atoms by the triangular hat kernel
/// `max(0, 1 - |y - z_i| / spacing)`.
pub fn projection_oracle(probs: &[f64], atoms: &[f64], reward: f64, discount: f64, draws: usize) -> Vec<f64> {
    let k = atoms.len();
    let (lo, hi) = (atoms[0], atoms[k - 1]);
    let spacing = (hi - lo) / (k - 1) as f64;
    let kernel: Vec<Vec<f64>> = atoms
        .iter()
        .map(|&z| {
            let y = (reward + discount * z).clamp(lo, hi);
            atoms
                .iter()
                .map(|&zi| (1.0 - (y - zi).abs() / spacing).max(0.0))
                .collect()
        })
        .collect();
    let mut counts = vec![0usize; k];
    let mut j = 0;
    let mut cdf = probs[0];
    for s in 0..draws {
        let u = (s as f64 + 0.5) / draws as f64;
        while u > cdf && j + 1 < k {
            j += 1;
            cdf += probs[j];
        }
        counts[j] += 1;
    }
    let mut out = vec![0.0; k];
    for (j, &c) in counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let w = c as f64 / draws as f64;
        let norm: f64 = kernel[j].iter().sum();
        for (o, h) in out.iter_mut().zip(&kernel[j]) {
            *o += w * h / norm;
        }
    }
    out
}

pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Brute-force n-step return of `transitions[t..]`: `(ret, discount)` with
/// discount 0 when a terminal falls inside the window.
pub fn nstep_oracle(transitions: &[Transition], t: usize, n: usize, gamma: f64) -> (f64, f64) {
    let mut ret = 0.0;
    let end = (t + n).min(transitions.len());
    for (k, tr) in transitions[t..end].iter().enumerate() {
        ret += gamma.powi(k as i32) * tr.reward;
        if tr.done {
            return (ret, 0.0);
        }
    }
    (ret, gamma.powi((end - t) as i32))
}

/// Level-by-level enumeration of all bins with explicit interval arithmetic.
/// Returns the chosen bin per `[level][dim]`.
pub fn greedy_oracle(
    critic: &CriticParams,
    side: Side,
    atoms: &[f64],
    obs: &[f64],
    levels: usize,
    dims: usize,
    bins: usize,
) -> Vec<Vec<usize>> {
    let mut lo = vec![-1.0f64; dims];
    let mut hi = vec![1.0f64; dims];
    let mut prev = vec![0.0; dims];
    let mut path = Vec::with_capacity(levels);
    for level in 0..levels {
        let logits = critic
            .critic_forward(
                side,
                &CriticInput {
                    features: obs,
                    level,
                    prev_action: &prev,
                },
            )
            .unwrap();
        let mut chosen = Vec::with_capacity(dims);
        for n in 0..dims {
            let mut best = (f64::NEG_INFINITY, 0);
            for b in 0..bins {
                let l = logits.bin(n, b);
                let m = l.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let w: Vec<f64> = l.iter().map(|x| (x - m).exp()).collect();
                let q = w.iter().zip(atoms).map(|(w, z)| w * z).sum::<f64>() / w.iter().sum::<f64>();
                if q > best.0 {
                    best = (q, b);
                }
            }
            let b = best.1;
            let width = (hi[n] - lo[n]) / bins as f64;
            let new_lo = lo[n] + width * b as f64;
            hi[n] = if b + 1 == bins { hi[n] } else { lo[n] + width * (b + 1) as f64 };
            lo[n] = new_lo;
            prev[n] = 0.5 * (lo[n] + hi[n]);
            chosen.push(b);
        }
        path.push(chosen);
    }
    path
}
