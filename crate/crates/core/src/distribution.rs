//! Categorical value distributions over a fixed, evenly spaced support.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MASS_TOLERANCE: f64 = 1e-9;
/// CDF gaps at or below this count as ties (rounding in the running sums).
const CDF_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportGrid {
    v_min: f64,
    v_max: f64,
    atoms: Vec<f64>,
}

impl SupportGrid {
    pub fn new(v_min: f64, v_max: f64, num_atoms: usize) -> Result<Self> {
        if !(v_min < v_max) {
            return Err(Error::InvalidSpec(format!(
                "support needs v_min < v_max, got [{v_min}, {v_max}]"
            )));
        }
        if num_atoms < 2 {
            return Err(Error::InvalidSpec(format!(
                "support needs at least 2 atoms, got {num_atoms}"
            )));
        }
        let delta = (v_max - v_min) / (num_atoms - 1) as f64;
        let atoms = (0..num_atoms)
            .map(|i| {
                if i + 1 == num_atoms {
                    v_max
                } else {
                    v_min + i as f64 * delta
                }
            })
            .collect();
        Ok(SupportGrid {
            v_min,
            v_max,
            atoms,
        })
    }

    pub fn v_min(&self) -> f64 {
        self.v_min
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        (self.v_max - self.v_min) / (self.atoms.len() - 1) as f64
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.v_min + self.v_max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalDistribution {
    probs: Vec<f64>,
}

impl CategoricalDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidSpec("distribution needs at least one atom".into()));
        }
        if probs.iter().any(|p| p.is_nan()) {
            return Err(Error::NotANumber("probabilities"));
        }
        if probs.iter().any(|&p| p < 0.0) {
            return Err(Error::InvalidSpec("negative probability".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidSpec(format!("probabilities sum to {total}")));
        }
        Ok(CategoricalDistribution { probs })
    }

    pub fn one_hot(num_atoms: usize, index: usize) -> Self {
        let mut probs = vec![0.0; num_atoms];
        probs[index] = 1.0;
        CategoricalDistribution { probs }
    }

    pub fn uniform(num_atoms: usize) -> Self {
        CategoricalDistribution {
            probs: vec![1.0 / num_atoms as f64; num_atoms],
        }
    }

    pub fn from_logits(logits: &[f64]) -> Self {
        CategoricalDistribution {
            probs: softmax(logits),
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn entropy(&self) -> f64 {
        -self
            .probs
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|p| p * p.ln())
            .sum::<f64>()
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&x| (x - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|&x| (x - max).exp()).sum::<f64>().ln();
    logits.iter().map(|&x| x - lse).collect()
}

pub fn dist_mean(d: &CategoricalDistribution, grid: &SupportGrid) -> f64 {
    mean_of(d.probs(), grid)
}

pub(crate) fn mean_of(probs: &[f64], grid: &SupportGrid) -> f64 {
    probs.iter().zip(grid.atoms()).map(|(p, z)| p * z).sum()
}

pub fn dist_cdf(d: &CategoricalDistribution) -> Vec<f64> {
    cdf_of(d.probs())
}

fn cdf_of(probs: &[f64]) -> Vec<f64> {
    probs
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect()
}

/// Categorical projection of `reward + discount * Z` onto the grid.
///
/// Shifted atoms are clamped into `[v_min, v_max]`; mass landing between two
/// atoms splits linearly, mass landing on an atom stays there.
pub fn project_bellman(
    d: &CategoricalDistribution,
    grid: &SupportGrid,
    reward: f64,
    discount: f64,
) -> CategoricalDistribution {
    CategoricalDistribution {
        probs: project_probs(d.probs(), grid, reward, discount),
    }
}

pub(crate) fn project_probs(probs: &[f64], grid: &SupportGrid, reward: f64, discount: f64) -> Vec<f64> {
    let k = grid.len();
    let delta = grid.spacing();
    let mut out = vec![0.0; k];
    for (&p, &z) in probs.iter().zip(grid.atoms()) {
        if p == 0.0 {
            continue;
        }
        let tz = (reward + discount * z).clamp(grid.v_min(), grid.v_max());
        let mut b = (tz - grid.v_min()) / delta;
        let nearest = b.round();
        if (b - nearest).abs() < 1e-12 {
            b = nearest;
        }
        let lower = (b.floor() as usize).min(k - 1);
        let upper = (b.ceil() as usize).min(k - 1);
        if lower == upper {
            out[lower] += p;
        } else {
            out[lower] += p * (upper as f64 - b);
            out[upper] += p * (b - lower as f64);
        }
    }
    out
}

/// `-sum_i target[i] * log_softmax(logits)[i]`.
pub fn cross_entropy_loss(target: &CategoricalDistribution, logits: &[f64]) -> f64 {
    cross_entropy_with_grad(target.probs(), logits).0
}

/// Cross-entropy and its gradient with respect to the logits.
pub(crate) fn cross_entropy_with_grad(target: &[f64], logits: &[f64]) -> (f64, Vec<f64>) {
    let logp = log_softmax(logits);
    let loss = -target.iter().zip(&logp).map(|(t, l)| t * l).sum::<f64>();
    let total: f64 = target.iter().sum();
    let grad = logp
        .iter()
        .zip(target)
        .map(|(l, t)| l.exp() * total - t)
        .collect();
    (loss, grad)
}

/// Sum of CDF violations `max(0, F_expert(z) - F_rival(z))` over every atom
/// but the last (where both CDFs equal 1).
///
/// Zero exactly when the expert distribution first-order stochastically
/// dominates the rival.
pub fn dominance_loss(expert: &CategoricalDistribution, rival: &CategoricalDistribution) -> Result<f64> {
    if expert.len() != rival.len() {
        return Err(Error::SupportMismatch(expert.len(), rival.len()));
    }
    Ok(dominance_with_grad(expert.probs(), rival.probs()).0)
}

/// Dominance loss with gradients with respect to both probability vectors.
pub(crate) fn dominance_with_grad(expert: &[f64], rival: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
    let fe = cdf_of(expert);
    let fr = cdf_of(rival);
    let k = expert.len();
    let mut loss = 0.0;
    let mut active = vec![0.0; k];
    // The last CDF entry is 1 for both distributions and carries no signal.
    for i in 0..k.saturating_sub(1) {
        let gap = fe[i] - fr[i];
        if gap > CDF_TOLERANCE {
            loss += gap;
            active[i] = 1.0;
        }
    }
    // d/dp_j of F(i) is 1 for j <= i, so the gradient is a suffix count.
    let mut grad_e = vec![0.0; k];
    let mut running = 0.0;
    for j in (0..k).rev() {
        running += active[j];
        grad_e[j] = running;
    }
    let grad_r = grad_e.iter().map(|g| -g).collect();
    (loss, grad_e, grad_r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid3() -> SupportGrid {
        SupportGrid::new(-1.0, 1.0, 3).unwrap()
    }

    #[test]
    fn grid_is_evenly_spaced() {
        let g = SupportGrid::new(-1.0, 1.0, 51).unwrap();
        assert_eq!(g.len(), 51);
        assert!((g.spacing() - 0.04).abs() < 1e-15);
        assert_eq!(g.atoms()[0], -1.0);
        assert_eq!(g.atoms()[50], 1.0);
        assert!(g.atoms().windows(2).all(|w| w[0] < w[1]));
        assert!(SupportGrid::new(1.0, 1.0, 5).is_err());
        assert!(SupportGrid::new(-1.0, 1.0, 1).is_err());
    }

    #[test]
    fn mean_examples() {
        let g = grid3();
        assert_eq!(dist_mean(&CategoricalDistribution::one_hot(3, 1), &g), 0.0);
        assert!(dist_mean(&CategoricalDistribution::uniform(3), &g).abs() < 1e-15);
        let d = CategoricalDistribution::new(vec![0.5, 0.0, 0.5]).unwrap();
        assert_eq!(dist_mean(&d, &g), 0.0);
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(dist_cdf(&CategoricalDistribution::one_hot(4, 3)), vec![0.0, 0.0, 0.0, 1.0]);
        assert_eq!(dist_cdf(&CategoricalDistribution::one_hot(4, 0)), vec![1.0; 4]);
        let d = CategoricalDistribution::new(vec![0.25, 0.25, 0.5]).unwrap();
        assert_eq!(dist_cdf(&d), vec![0.25, 0.5, 1.0]);
    }

    #[test]
    fn invalid_distributions() {
        assert!(CategoricalDistribution::new(vec![0.5, 0.6]).is_err());
        assert!(CategoricalDistribution::new(vec![1.5, -0.5]).is_err());
        assert!(CategoricalDistribution::new(vec![f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn projection_splits_between_atoms() {
        let out = project_bellman(&CategoricalDistribution::one_hot(3, 1), &grid3(), 0.5, 1.0);
        assert_eq!(out.probs(), &[0.0, 0.5, 0.5]);
    }

    #[test]
    fn projection_identity_and_clamp() {
        let g = SupportGrid::new(-1.0, 1.0, 51).unwrap();
        let d = CategoricalDistribution::from_logits(&(0..51).map(|i| (i as f64 * 0.37).sin()).collect::<Vec<_>>());
        let same = project_bellman(&d, &g, 0.0, 1.0);
        for (a, b) in same.probs().iter().zip(d.probs()) {
            assert!((a - b).abs() < 1e-12);
        }
        let top = project_bellman(&d, &g, 5.0, 1.0);
        assert!((top.probs()[50] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn terminal_projection_is_one_hot_at_reward() {
        let g = SupportGrid::new(-1.0, 1.0, 51).unwrap();
        let out = project_bellman(&CategoricalDistribution::one_hot(51, 25), &g, 1.0, 0.0);
        assert_eq!(out.probs()[50], 1.0);
    }

    #[test]
    fn cross_entropy_examples() {
        let logits = [0.3, -1.2, 2.0];
        let target = CategoricalDistribution::from_logits(&logits);
        assert!((cross_entropy_loss(&target, &logits) - target.entropy()).abs() < 1e-12);

        let uniform = CategoricalDistribution::uniform(3);
        assert!((cross_entropy_loss(&uniform, &[0.0, 0.0, 0.0]) - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn dominance_examples() {
        let top = CategoricalDistribution::one_hot(3, 2);
        let bottom = CategoricalDistribution::one_hot(3, 0);
        assert_eq!(dominance_loss(&top, &bottom).unwrap(), 0.0);
        assert_eq!(dominance_loss(&bottom, &top).unwrap(), 2.0);
        assert_eq!(dominance_loss(&top, &top).unwrap(), 0.0);
        assert!(matches!(
            dominance_loss(&top, &CategoricalDistribution::uniform(4)),
            Err(Error::SupportMismatch(3, 4))
        ));
    }

    #[test]
    fn dominance_gradient_matches_differences() {
        let e = [0.5, 0.3, 0.2];
        let r = [0.1, 0.2, 0.7];
        let (_, ge, gr) = dominance_with_grad(&e, &r);
        let h = 1e-7;
        for j in 0..3 {
            let mut ep = e;
            ep[j] += h;
            let mut em = e;
            em[j] -= h;
            let fd = (dominance_with_grad(&ep, &r).0 - dominance_with_grad(&em, &r).0) / (2.0 * h);
            assert!((fd - ge[j]).abs() < 1e-6);
            let mut rp = r;
            rp[j] += h;
            let mut rm = r;
            rm[j] -= h;
            let fd = (dominance_with_grad(&e, &rp).0 - dominance_with_grad(&e, &rm).0) / (2.0 * h);
            assert!((fd - gr[j]).abs() < 1e-6);
        }
    }
}
