//! Objective ablation on the point-mass reaching task.
//!
//! `cargo run --release --example pointmass_ablation -- [full|full-margin|bc-only|bc-margin|rl-only] [steps] [seed]`

use c2fq::agent::{run_training, AgentConfig, BcMode, TrainOptions};
use c2fq::env::{gen_demo_dataset, EnvId};

fn main() -> c2fq::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arm = args.first().map(String::as_str).unwrap_or("full");
    let steps = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(10_000);
    let seed = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0);

    let mut config = AgentConfig {
        hidden: vec![128, 128],
        batch_size: 64,
        demo_batch_size: 64,
        lr: 1e-3,
        seed,
        ..Default::default()
    };
    let demos = match arm {
        "bc-only" => {
            config.rl = false;
            gen_demo_dataset(EnvId::PointmassReach, 50, seed, 0.005)?
        }
        "bc-margin" => {
            config.rl = false;
            config.bc = BcMode::Margin;
            gen_demo_dataset(EnvId::PointmassReach, 50, seed, 0.005)?
        }
        "full-margin" => {
            config.bc = BcMode::Margin;
            gen_demo_dataset(EnvId::PointmassReach, 50, seed, 0.005)?
        }
        "rl-only" => {
            config.bc = BcMode::Off;
            gen_demo_dataset(EnvId::PointmassReach, 50, seed, 0.005)?
        }
        _ => gen_demo_dataset(EnvId::PointmassReach, 50, seed, 0.005)?,
    };
    let options = TrainOptions {
        eval_interval: 2_500,
        eval_episodes: 50,
        ..TrainOptions::new(EnvId::PointmassReach, steps)
    };
    let summary = run_training(&options, config, &demos)?;
    for r in &summary.records {
        println!(
            "step {:>6}  train {:.2}  eval {:.2}  loss_rl {:.4}  loss_bc {:.4}  mean Q {:+.3}  {:.0}s",
            r.step, r.train_success, r.eval_success, r.loss_rl, r.loss_bc, r.mean_q, r.wall_seconds
        );
    }
    println!("{arm}: final eval success {:.2}", summary.final_eval.success_rate);
    Ok(())
}
