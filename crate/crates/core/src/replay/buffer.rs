use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Episode, Transition};
use crate::error::{Error, Result};

/// An n-step window starting at some transition.
#[derive(Debug, Clone, PartialEq)]
pub struct NStep {
    /// Discounted reward sum over the window.
    pub ret: f64,
    pub bootstrap_obs: Vec<f64>,
    /// `gamma^m` when the episode continues past the window, 0 at a terminal.
    pub discount: f64,
    pub terminal: bool,
}

/// n-step return from position `t` of an ordered run of transitions.
///
/// The window is cut at the first terminal transition; a terminal never
/// bootstraps. A window that runs off the end of a non-terminal run
/// bootstraps from the last available next observation.
pub fn nstep_return(transitions: &[Transition], t: usize, n: usize, gamma: f64) -> Result<NStep> {
    if t >= transitions.len() {
        return Err(Error::IndexOutOfRange {
            index: t,
            len: transitions.len(),
        });
    }
    assert!(n >= 1, "n-step horizon must be at least 1");
    window(|i| transitions.get(i), t, n, gamma).ok_or(Error::IndexOutOfRange {
        index: t,
        len: transitions.len(),
    })
}

fn window<'a>(get: impl Fn(usize) -> Option<&'a Transition>, t: usize, n: usize, gamma: f64) -> Option<NStep> {
    let mut ret = 0.0;
    let mut scale = 1.0;
    let mut last = get(t)?;
    for k in 0..n {
        let Some(tr) = get(t + k) else { break };
        last = tr;
        ret += scale * tr.reward;
        scale *= gamma;
        if tr.done {
            return Some(NStep {
                ret,
                bootstrap_obs: tr.next_obs.clone(),
                discount: 0.0,
                terminal: true,
            });
        }
    }
    Some(NStep {
        ret,
        bootstrap_obs: last.next_obs.clone(),
        discount: scale,
        terminal: false,
    })
}

/// One sampled training item.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchItem {
    pub obs: Vec<f64>,
    pub action: Vec<f64>,
    pub ret: f64,
    pub discount: f64,
    pub bootstrap_obs: Vec<f64>,
    pub is_demo: bool,
}

/// FIFO transition store with uniform sampling over complete n-step windows.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    storage: VecDeque<Transition>,
    capacity: Option<usize>,
    n_step: usize,
    gamma: f64,
    /// Transitions ever inserted.
    pushed: u64,
    /// Absolute insertion index of the newest terminal transition.
    last_done: Option<u64>,
    rng: ChaCha8Rng,
}

impl ReplayBuffer {
    /// `capacity: None` is unbounded (append-only).
    pub fn new(capacity: Option<usize>, n_step: usize, gamma: f64, seed: u64) -> Self {
        assert!(n_step >= 1, "n-step horizon must be at least 1");
        ReplayBuffer {
            storage: VecDeque::new(),
            capacity,
            n_step,
            gamma,
            pushed: 0,
            last_done: None,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    pub fn capacity(&self) -> Option<usize> {
        self.capacity
    }

    pub fn get(&self, i: usize) -> Option<&Transition> {
        self.storage.get(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.storage.iter()
    }

    pub fn push(&mut self, transition: Transition) {
        if let Some(cap) = self.capacity {
            if cap == 0 {
                return;
            }
            if self.storage.len() == cap {
                self.storage.pop_front();
            }
        }
        if transition.done {
            self.last_done = Some(self.pushed);
        }
        self.pushed += 1;
        self.storage.push_back(transition);
    }

    pub fn push_episode(&mut self, episode: &Episode) {
        for t in &episode.transitions {
            self.push(t.clone());
        }
    }

    /// Number of leading transitions whose n-step window is complete.
    ///
    /// A window is complete when `n` transitions follow-or-include it or when
    /// a terminal closes it, so the sampleable set is always a prefix.
    pub fn sampleable(&self) -> usize {
        let len = self.storage.len();
        let front = self.pushed - len as u64;
        let by_length = (len + 1).saturating_sub(self.n_step);
        let by_terminal = match self.last_done {
            Some(d) if d >= front => (d - front + 1) as usize,
            _ => 0,
        };
        by_length.max(by_terminal)
    }

    pub fn nstep(&self, i: usize) -> Option<NStep> {
        window(|j| self.storage.get(j), i, self.n_step, self.gamma)
    }

    fn item(&self, i: usize) -> BatchItem {
        let t = &self.storage[i];
        let w = self.nstep(i).expect("index in range");
        BatchItem {
            obs: t.obs.clone(),
            action: t.action.clone(),
            ret: w.ret,
            discount: w.discount,
            bootstrap_obs: w.bootstrap_obs,
            is_demo: t.is_demo,
        }
    }

    /// Uniform sampling with replacement; returns storage indices.
    pub fn sample_indices(&mut self, count: usize) -> Result<Vec<usize>> {
        if count == 0 {
            return Ok(Vec::new());
        }
        let upper = self.sampleable();
        if upper == 0 {
            return Err(Error::BufferUnderflow("no complete n-step window"));
        }
        Ok((0..count).map(|_| self.rng.random_range(0..upper)).collect())
    }

    pub fn sample(&mut self, count: usize) -> Result<Vec<BatchItem>> {
        let idx = self.sample_indices(count)?;
        Ok(idx.into_iter().map(|i| self.item(i)).collect())
    }

    pub fn rng(&self) -> &ChaCha8Rng {
        &self.rng
    }

    pub fn set_rng(&mut self, rng: ChaCha8Rng) {
        self.rng = rng;
    }
}

/// `batch_size_each` items from each buffer, online items first; demo-buffer
/// items are flagged as demonstrations.
pub fn sample_batch(
    online: &mut ReplayBuffer,
    demos: &mut ReplayBuffer,
    batch_size_each: usize,
) -> Result<Vec<BatchItem>> {
    if batch_size_each == 0 {
        return Ok(Vec::new());
    }
    let mut batch = online.sample(batch_size_each)?;
    let demo_items = demos.sample(batch_size_each)?;
    batch.extend(demo_items.into_iter().map(|mut item| {
        item.is_demo = true;
        item
    }));
    Ok(batch)
}

/// Copy a successful episode into the demonstration buffer.
pub fn relabel_success(episode: &Episode, demos: &mut ReplayBuffer) -> bool {
    if !episode.success() {
        return false;
    }
    demos.push_episode(&episode.as_demo());
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tr(reward: f64, done: bool, tag: f64) -> Transition {
        Transition {
            obs: vec![tag],
            action: vec![0.0],
            reward,
            next_obs: vec![tag + 1.0],
            done,
            is_demo: false,
        }
    }

    fn episode(rewards: &[f64]) -> Episode {
        let n = rewards.len();
        Episode::new(
            rewards
                .iter()
                .enumerate()
                .map(|(i, &r)| tr(r, i + 1 == n, i as f64))
                .collect(),
        )
    }

    #[test]
    fn nstep_terminal_cut() {
        let ep = episode(&[0.0, 0.0, 1.0]);
        let w = nstep_return(&ep.transitions, 0, 3, 0.99).unwrap();
        assert!((w.ret - 0.9801).abs() < 1e-12);
        assert_eq!(w.discount, 0.0);
        assert!(w.terminal);
    }

    #[test]
    fn one_step_bootstraps_with_gamma() {
        let ep = episode(&[0.3, 0.0, 1.0]);
        let w = nstep_return(&ep.transitions, 0, 1, 0.9).unwrap();
        assert_eq!(w.ret, 0.3);
        assert_eq!(w.discount, 0.9);
        assert_eq!(w.bootstrap_obs, vec![1.0]);
        assert!(nstep_return(&ep.transitions, 3, 1, 0.9).is_err());
    }

    #[test]
    fn zero_rewards_give_zero_return() {
        let ep = episode(&[0.0; 6]);
        for n in 1..=5 {
            for t in 0..6 {
                assert_eq!(nstep_return(&ep.transitions, t, n, 0.99).unwrap().ret, 0.0);
            }
        }
    }

    #[test]
    fn fifo_eviction() {
        let mut b = ReplayBuffer::new(Some(3), 1, 0.99, 0);
        for i in 0..4 {
            b.push(tr(0.0, false, i as f64));
        }
        assert_eq!(b.len(), 3);
        assert_eq!(b.get(0).unwrap().obs, vec![1.0]);
    }

    #[test]
    fn empty_episode_is_noop_and_sample_returns_stored() {
        let mut b = ReplayBuffer::new(None, 1, 0.99, 0);
        b.push_episode(&Episode::default());
        assert!(b.is_empty());
        b.push(tr(0.5, true, 7.0));
        let s = b.sample(1).unwrap();
        assert_eq!(s[0].obs, vec![7.0]);
        assert_eq!(s[0].ret, 0.5);
    }

    #[test]
    fn incomplete_windows_are_not_sampleable() {
        let mut b = ReplayBuffer::new(None, 3, 0.99, 0);
        b.push(tr(0.0, false, 0.0));
        b.push(tr(0.0, false, 1.0));
        assert_eq!(b.sampleable(), 0);
        assert!(matches!(b.sample(1), Err(Error::BufferUnderflow(_))));
        b.push(tr(0.0, false, 2.0));
        assert_eq!(b.sampleable(), 1);
        b.push(tr(1.0, true, 3.0));
        assert_eq!(b.sampleable(), 4);
        b.push(tr(0.0, false, 4.0));
        assert_eq!(b.sampleable(), 4);
    }

    #[test]
    fn batch_layout_and_determinism() {
        let mut online = ReplayBuffer::new(None, 3, 0.99, 1);
        let mut demos = ReplayBuffer::new(None, 3, 0.99, 2);
        online.push_episode(&episode(&[0.0, 0.0, 1.0]));
        demos.push_episode(&episode(&[0.0, 1.0]).as_demo());
        let mut online2 = online.clone();
        let mut demos2 = demos.clone();
        let a = sample_batch(&mut online, &mut demos, 256).unwrap();
        assert_eq!(a.len(), 512);
        assert_eq!(a.iter().filter(|i| i.is_demo).count(), 256);
        let b = sample_batch(&mut online2, &mut demos2, 256).unwrap();
        assert_eq!(a, b);
        assert!(sample_batch(&mut online, &mut demos, 0).unwrap().is_empty());
    }

    #[test]
    fn relabeling_only_copies_successes() {
        let mut demos = ReplayBuffer::new(None, 3, 0.99, 0);
        assert!(!relabel_success(&episode(&[0.0, 0.0]), &mut demos));
        assert!(demos.is_empty());
        assert!(relabel_success(&episode(&[0.0, 1.0]), &mut demos));
        assert_eq!(demos.len(), 2);
        assert!(demos.iter().all(|t| t.is_demo));
        let s = demos.sample(8).unwrap();
        assert!(s.iter().all(|i| i.is_demo));
    }
}
