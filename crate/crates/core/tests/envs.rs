use c2fq::env::{
    evaluate, gen_demo_dataset, make_env, rollout, DoubleIntegrator, EnvId, Environment, ExpertPolicy, NeedleBandit,
    PointmassReach, Policy,
};
use c2fq::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Mean PD-expert return on the double integrator over 100 seeded episodes,
/// measured once and frozen.
const PD_EXPERT_RETURN: f64 = 171.148312;
/// Mean return of uniform random forces over the same episodes.
const RANDOM_RETURN: f64 = 28.466654;

struct RandomPolicy(ChaCha8Rng, usize);

impl Policy for RandomPolicy {
    fn act(&mut self, _obs: &[f64]) -> Result<Vec<f64>> {
        Ok((0..self.1).map(|_| self.0.random_range(-1.0..=1.0)).collect())
    }
}

#[test]
fn needle_expert_always_hits() {
    let mut env = make_env(EnvId::NeedleBandit, 3);
    let probe = NeedleBandit::new(0);
    let report = evaluate(env.as_mut(), &mut ExpertPolicy::new(&probe), 1000).unwrap();
    assert_eq!(report.success_rate, 1.0);
}

#[test]
fn needle_rejects_wrong_width() {
    let mut env = NeedleBandit::new(0);
    env.reset();
    assert!(env.step(&[0.1, 0.2, 0.3]).is_err());
}

#[test]
fn pointmass_expert_meets_geometry_bound() {
    // The straight-line controller covers 0.05 of the Chebyshev distance per
    // step and lands exactly on the goal once within one step of it.
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..2000 {
        let p: [f64; 2] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let g: [f64; 2] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let cheb = (p[0] - g[0]).abs().max((p[1] - g[1]).abs());
        let eucl = ((p[0] - g[0]).powi(2) + (p[1] - g[1]).powi(2)).sqrt();
        let upper = ((cheb / 0.05) - 1e-9).ceil().max(1.0) as usize;
        let lower = (((eucl - 0.05) / (0.05 * 2f64.sqrt())) - 1e-9).ceil().max(1.0) as usize;
        let mut env = PointmassReach::new(0);
        let mut obs = env.reset_to(p, g);
        let mut steps = 0;
        let success = loop {
            let a = env.expert_action(&obs);
            let s = env.step(&a).unwrap();
            steps += 1;
            obs = s.obs;
            if s.done {
                break s.success;
            }
        };
        assert!(success, "{p:?} -> {g:?}");
        assert!(steps <= upper && steps >= lower, "{steps} not in [{lower}, {upper}]");
    }
    // Corner to corner is the longest trip and still fits the step budget.
    let mut env = PointmassReach::new(0);
    let mut obs = env.reset_to([-1.0, -1.0], [1.0, 1.0]);
    let mut steps = 0;
    loop {
        let s = env.step(&env.expert_action(&obs)).unwrap();
        steps += 1;
        obs = s.obs;
        if s.done {
            assert!(s.success);
            break;
        }
    }
    assert_eq!(steps, 40);
}

#[test]
fn sparse_rewards_arrive_only_at_the_end() {
    let mut env = make_env(EnvId::PointmassReach, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..20 {
        let (ep, _) = rollout(env.as_mut(), |_| Ok(vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])).unwrap();
        let n = ep.len();
        assert!(ep.transitions[..n - 1].iter().all(|t| t.reward == 0.0 && !t.done));
        assert!(ep.transitions[n - 1].done);
    }
}

#[test]
fn pd_expert_and_random_returns_on_double_integrator() {
    let probe = DoubleIntegrator::new(0);
    let mut env = make_env(EnvId::DoubleIntegrator, 0);
    let expert = evaluate(env.as_mut(), &mut ExpertPolicy::new(&probe), 100).unwrap();
    assert!(expert.mean_return >= 150.0);
    assert!((expert.mean_return - PD_EXPERT_RETURN).abs() < 1e-6, "{}", expert.mean_return);
    let mut env = make_env(EnvId::DoubleIntegrator, 0);
    let random = evaluate(env.as_mut(), &mut RandomPolicy(ChaCha8Rng::seed_from_u64(0), 1), 100).unwrap();
    assert!(random.mean_return < 40.0);
    assert!((random.mean_return - RANDOM_RETURN).abs() < 1e-6, "{}", random.mean_return);
}

#[test]
fn dense_rewards_are_positive_every_step() {
    let mut env = make_env(EnvId::DoubleIntegrator, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (ep, success) = rollout(env.as_mut(), |_| Ok(vec![rng.random_range(-1.0..1.0)])).unwrap();
    assert!(!success);
    assert_eq!(ep.len(), 200);
    assert!(ep.transitions.iter().all(|t| t.reward > 0.0 && t.reward <= 1.0));
}

#[test]
fn environments_replay_exactly_from_a_seed() {
    for id in EnvId::ALL {
        let run = || {
            let mut env = make_env(id, 77);
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let n = env.spec().action_dim;
            (0..5)
                .map(|_| rollout(env.as_mut(), |_| Ok((0..n).map(|_| rng.random_range(-1.0..1.0)).collect())).unwrap().0)
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run(), "{id}");
    }
}

#[test]
fn demo_datasets() {
    let needle = gen_demo_dataset(EnvId::NeedleBandit, 50, 0, 0.0).unwrap();
    assert_eq!(needle.len(), 50);
    assert!(needle.iter().all(|e| e.len() == 1 && e.success()));
    let noisy = gen_demo_dataset(EnvId::PointmassReach, 50, 1, 0.005).unwrap();
    assert!(noisy.iter().all(|e| e.transitions.last().unwrap().reward == 1.0));
    assert!(noisy.iter().flat_map(|e| &e.transitions).all(|t| t.is_demo));
    assert_eq!(noisy, gen_demo_dataset(EnvId::PointmassReach, 50, 1, 0.005).unwrap());
    assert!(gen_demo_dataset(EnvId::NeedleBandit, 0, 0, 0.0).is_err());
    // Noise this large makes the needle expert miss almost always.
    assert!(gen_demo_dataset(EnvId::NeedleBandit, 50, 0, 1.0).is_err());
}
