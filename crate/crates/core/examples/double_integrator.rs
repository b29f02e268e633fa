//! Dense-reward training from scratch, no demonstrations and no BC term.
//!
//! `cargo run --release --example double_integrator -- [steps] [seed]`

use c2fq::agent::{run_training, AgentConfig, BcMode, TrainOptions};
use c2fq::env::EnvId;

fn main() -> c2fq::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let steps = args.first().and_then(|s| s.parse().ok()).unwrap_or(50_000);
    let seed = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0);

    // Per-step rewards lie in (0, 1], so discounted returns stay below 100.
    let config = AgentConfig {
        bc: BcMode::Off,
        v_min: 0.0,
        v_max: 100.0,
        hidden: vec![64, 64],
        batch_size: 32,
        demo_batch_size: 32,
        lr: 1e-3,
        seed,
        ..Default::default()
    };
    let options = TrainOptions {
        eval_interval: 5_000,
        eval_episodes: 10,
        ..TrainOptions::new(EnvId::DoubleIntegrator, steps)
    };
    let summary = run_training(&options, config, &[])?;
    for r in &summary.records {
        println!("step {:>6}  eval return {:6.1}  mean Q {:6.2}  {:.0}s", r.step, r.eval_return, r.mean_q, r.wall_seconds);
    }
    Ok(())
}
