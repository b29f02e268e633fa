//! Train on the needle bandit at two lattice resolutions.
//!
//! `cargo run --release --example needle_bandit -- [levels] [steps] [seed]`

use c2fq::agent::{run_training, AgentConfig, TrainOptions};
use c2fq::env::{gen_demo_dataset, EnvId};

fn main() -> c2fq::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: u64| args.get(i).and_then(|s| s.parse().ok()).unwrap_or(default);
    let levels = arg(0, 3) as usize;
    let steps = arg(1, 3000) as usize;
    let seed = arg(2, 0);

    let demos = gen_demo_dataset(EnvId::NeedleBandit, 50, seed, 0.0)?;
    let config = AgentConfig {
        levels,
        bins: 5,
        hidden: vec![64, 64],
        batch_size: 32,
        demo_batch_size: 32,
        lr: 1e-3,
        seed,
        ..Default::default()
    };
    let options = TrainOptions {
        eval_interval: 500,
        eval_episodes: 100,
        stop_at_success: Some(0.95),
        ..TrainOptions::new(EnvId::NeedleBandit, steps)
    };
    let summary = run_training(&options, config, &demos)?;
    for r in &summary.records {
        println!(
            "step {:>6}  eval success {:.2}  loss_rl {:.4}  loss_bc {:.4}  mean Q {:+.3}  {:.1}s",
            r.step, r.eval_success, r.loss_rl, r.loss_bc, r.mean_q, r.wall_seconds
        );
    }
    println!("L={levels}: final eval success {:.2}", summary.final_eval.success_rate);
    Ok(())
}
