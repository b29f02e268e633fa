mod common;

use c2fq::replay::{
    load_demos, nstep_return, read_demos, relabel_success, save_demos, stack_history, write_demos, ActionScaler,
    Episode, ReplayBuffer, Transition,
};
use common::nstep_oracle;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::Path;

fn random_run(rng: &mut impl Rng, len: usize, p_done: f64) -> Vec<Transition> {
    (0..len)
        .map(|i| Transition {
            obs: vec![i as f64],
            action: vec![rng.random_range(-1.0..1.0)],
            reward: rng.random_range(-1.0..1.0),
            next_obs: vec![i as f64 + 0.5],
            done: rng.random_bool(p_done),
            is_demo: false,
        })
        .collect()
}

#[test]
fn nstep_matches_brute_force_for_every_horizon() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let run = random_run(&mut rng, 40, 0.15);
        let gamma = rng.random_range(0.5..1.0);
        for n in 1..=5 {
            let mut buf = ReplayBuffer::new(None, n, gamma, 0);
            for t in &run {
                buf.push(t.clone());
            }
            for t in 0..run.len() {
                let (ret, disc) = nstep_oracle(&run, t, n, gamma);
                let got = nstep_return(&run, t, n, gamma).unwrap();
                assert!((got.ret - ret).abs() < 1e-12, "n={n} t={t}");
                assert!((got.discount - disc).abs() < 1e-12);
                assert_eq!(got.terminal, disc == 0.0);
                assert_eq!(buf.nstep(t).unwrap(), got);
            }
        }
    }
}

#[test]
fn terminal_windows_do_not_bootstrap() {
    let mut run = random_run(&mut ChaCha8Rng::seed_from_u64(1), 6, 0.0);
    run[2].done = true;
    let w = nstep_return(&run, 1, 5, 0.9).unwrap();
    assert!(w.terminal);
    assert_eq!(w.discount, 0.0);
    assert_eq!(w.bootstrap_obs, run[2].next_obs);
    assert!((w.ret - (run[1].reward + 0.9 * run[2].reward)).abs() < 1e-15);
}

#[test]
fn sampling_is_uniform_over_complete_windows() {
    let run = random_run(&mut ChaCha8Rng::seed_from_u64(2), 23, 0.0);
    let mut buf = ReplayBuffer::new(None, 3, 0.99, 17);
    for t in &run {
        buf.push(t.clone());
    }
    let cells = buf.sampleable();
    assert_eq!(cells, 21);
    let draws = 210_000;
    let mut counts = vec![0usize; cells];
    for i in buf.sample_indices(draws).unwrap() {
        counts[i] += 1;
    }
    let expected = draws as f64 / cells as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    // 20 degrees of freedom; the 99.9% quantile is 45.3.
    assert!(chi2 < 45.3, "chi2 = {chi2}");
}

#[test]
fn fifo_eviction_keeps_the_newest() {
    let run = random_run(&mut ChaCha8Rng::seed_from_u64(3), 10, 0.0);
    let mut buf = ReplayBuffer::new(Some(4), 1, 0.9, 0);
    for t in &run {
        buf.push(t.clone());
    }
    assert_eq!(buf.len(), 4);
    let kept: Vec<_> = buf.iter().cloned().collect();
    assert_eq!(kept, run[6..].to_vec());
}

#[test]
fn empty_buffer_refuses_to_sample() {
    let mut buf = ReplayBuffer::new(None, 3, 0.99, 0);
    assert!(buf.sample(4).is_err());
    assert!(buf.sample(0).unwrap().is_empty());
}

#[test]
fn relabel_grows_demo_buffer_on_success_only() {
    let mut demos = ReplayBuffer::new(None, 3, 0.99, 0);
    let mut run = random_run(&mut ChaCha8Rng::seed_from_u64(4), 5, 0.0);
    run[4].done = true;
    run[4].reward = 0.0;
    let failed = Episode::new(run.clone());
    assert!(!relabel_success(&failed, &mut demos));
    assert_eq!(demos.len(), 0);
    run[4].reward = 1.0;
    let ok = Episode::new(run);
    assert!(relabel_success(&ok, &mut demos));
    assert_eq!(demos.len(), 5);
    assert!(demos.iter().all(|t| t.is_demo));
}

#[test]
fn demo_file_round_trip_is_byte_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let episodes: Vec<Episode> = (0..4)
        .map(|k| {
            let mut run = random_run(&mut rng, 3 + k, 0.0);
            run.last_mut().unwrap().done = true;
            for t in &mut run {
                t.is_demo = true;
                t.obs.push(rng.random::<f64>() * 1e-300);
                t.next_obs.push(-rng.random::<f64>() / 3.0);
            }
            Episode::new(run)
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("demos.jsonl");
    save_demos(&path, &episodes).unwrap();
    let loaded = load_demos(&path).unwrap();
    assert_eq!(loaded, episodes);
    let mut again = Vec::new();
    write_demos(&mut again, &loaded).unwrap();
    assert_eq!(again, std::fs::read(&path).unwrap());
}

#[test]
fn malformed_demo_files_name_the_line() {
    let bad = "c2fq-demos v1\n{\"obs\":[0.0],\"action\":[0.0],\"reward\":0.0,\"done\":true,\"next_obs\":[1.0]}\nnot json\n";
    let err = read_demos(bad.as_bytes(), Path::new("x.jsonl")).unwrap_err();
    assert!(err.to_string().contains('3'), "{err}");
    assert!(read_demos("c2fq-demos v9\n".as_bytes(), Path::new("x.jsonl")).is_err());
}

#[test]
fn history_stack_pads_with_the_first_frame() {
    let raw = vec![vec![1.0, 2.0], vec![3.0, 4.0]];
    assert_eq!(stack_history(&raw, 3), vec![1.0, 2.0, 1.0, 2.0, 3.0, 4.0]);
    assert_eq!(stack_history(&raw, 1), vec![3.0, 4.0]);
}

proptest! {
    #[test]
    fn scaler_round_trip(lo in prop::collection::vec(-10.0f64..10.0, 3), span in prop::collection::vec(0.01f64..5.0, 3), u in prop::collection::vec(0.0f64..=1.0, 3)) {
        let hi: Vec<f64> = lo.iter().zip(&span).map(|(l, s)| l + s).collect();
        let scaler = ActionScaler::fit_actions([lo.as_slice(), hi.as_slice()]).unwrap();
        let a: Vec<f64> = lo.iter().zip(&span).zip(&u).map(|((l, s), u)| l + s * u).collect();
        let scaled = scaler.apply(&a);
        prop_assert!(scaled.iter().all(|x| (-1.0 - 1e-12..=1.0 + 1e-12).contains(x)));
        let back = scaler.invert(&scaled);
        for (x, y) in a.iter().zip(&back) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn sampleable_is_a_prefix_of_complete_windows(len in 1usize..30, n in 1usize..6, seed in any::<u64>()) {
        let run = random_run(&mut ChaCha8Rng::seed_from_u64(seed), len, 0.2);
        let mut buf = ReplayBuffer::new(None, n, 0.9, seed);
        for t in &run {
            buf.push(t.clone());
        }
        let s = buf.sampleable();
        for t in 0..len {
            let complete = t + n <= len || run[t..].iter().take(n).any(|x| x.done);
            if t < s {
                prop_assert!(complete);
            }
        }
    }
}
